fn main() {
    std::process::exit(forestseg::cli::main_with_args(std::env::args_os()));
}
