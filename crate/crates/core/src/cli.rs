//! Command-line front end.
//!
//! Exit codes: 0 success, 2 validation error, 3 protocol or transport error,
//! 4 I/O or file-format error.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command as Process};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::foreststats::{
    adjust_count, bias_experiment, crown_class_estimate, fit_mixture, height_histogram, write_csv, ClassSample,
    HISTOGRAM_MIN_HEIGHT,
};
use crate::orchestrator::{
    connect_slave, run_distributed, serve_master, slave_run, ManifestSource, RunMetrics, RunOptions, SimClock,
    SlaveWorker, TilePolicy, TransportKind,
};
use crate::perfmodel::{max_slaves, slave_efficiency, speedup, speedup_curves, write_curves_csv, ModelInputs};
use crate::pointdata::{
    generate_forest, partition_with_grid, write_tile_points, AreaBounds, ForestSpec, Manifest, PointCloud, TileId,
};
use crate::segmentation::{
    read_crowns_csv, read_records_jsonl, segment, sort_records, write_crowns_csv, write_records_jsonl, CrownRecord,
    SegmentationParams,
};

#[derive(Debug, Parser)]
#[command(name = "forestseg", version, about = "Distributed tree crown segmentation of tiled point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic forest as tile files, a manifest and ground truth.
    Generate(GenerateArgs),
    /// Stitch all tiles and segment them in one pass (the reference output).
    SegmentSequential(SequentialArgs),
    /// Segment tiles with a master and worker slaves.
    Distribute(DistributeArgs),
    /// Run one slave against a master listening on a socket.
    Slave(SlaveArgs),
    /// Tabulate the performance model's speedup curves.
    Model(ModelArgs),
    /// Count trees over k x k partitions of one block and fit the edge trend.
    Bias(BiasArgs),
    /// Height histogram, mixture fit and crown-class table.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    InProcess,
    Socket,
    Simulated,
}

#[derive(Debug, Clone, Args)]
pub struct ForestArgs {
    /// Side of the square area, metres.
    #[arg(long, default_value_t = 200.0)]
    pub side: f64,
    /// Returns per square metre.
    #[arg(long, default_value_t = 4.0)]
    pub density: f64,
    /// Trees per hectare.
    #[arg(long, default_value_t = 250.0)]
    pub stem_density: f64,
    #[arg(long, default_value_t = 0.35)]
    pub midstory_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl ForestArgs {
    fn spec(&self, side: f64) -> ForestSpec {
        ForestSpec {
            bounds: AreaBounds::square(0.0, 0.0, side),
            stem_density: self.stem_density,
            midstory_fraction: self.midstory_fraction,
            point_density: self.density,
            seed: self.seed,
            ..ForestSpec::default()
        }
    }
}

/// Segmentation overrides; unset values follow from the nominal pulse spacing.
#[derive(Debug, Clone, Default, Args)]
pub struct SegArgs {
    /// Nominal pulse spacing, metres. Defaults to the manifest's.
    #[arg(long)]
    pub nps: Option<f64>,
    #[arg(long)]
    pub cell_size: Option<f64>,
    #[arg(long)]
    pub max_crown_radius: Option<f64>,
    #[arg(long)]
    pub profiles: Option<usize>,
    #[arg(long)]
    pub smoothing_radius: Option<f64>,
    #[arg(long)]
    pub surface_threshold: Option<f64>,
    #[arg(long)]
    pub min_tree_height: Option<f64>,
    #[arg(long)]
    pub drop_fraction: Option<f64>,
    #[arg(long)]
    pub rise_tolerance: Option<f64>,
    #[arg(long)]
    pub ground_cutoff: Option<f64>,
    #[arg(long)]
    pub min_crown_area: Option<f64>,
}

impl SegArgs {
    pub fn params(&self, default_nps: f64) -> Result<SegmentationParams> {
        let mut p = SegmentationParams::for_nps(self.nps.unwrap_or(default_nps));
        macro_rules! take {
            ($($field:ident <- $arg:ident),*) => { $(if let Some(v) = self.$arg { p.$field = v; })* };
        }
        take!(cell_size <- cell_size, max_crown_radius <- max_crown_radius, profile_count <- profiles,
              smoothing_radius <- smoothing_radius, surface_threshold <- surface_threshold,
              min_tree_height <- min_tree_height, drop_fraction <- drop_fraction,
              rise_tolerance <- rise_tolerance, ground_cutoff <- ground_cutoff, min_crown_area <- min_crown_area);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Tiles along each side.
    #[arg(long, default_value_t = 2)]
    pub tiles: u32,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Args)]
pub struct SequentialArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Crown CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub seg: SegArgs,
}

#[derive(Debug, Args)]
pub struct DistributeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Crown CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of slaves.
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = TransportArg::InProcess)]
    pub transport: TransportArg,
    /// Shuffle the tile order with this seed instead of going row by row.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run metrics JSON; defaults to the crown CSV path with `.metrics.json`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// With the socket transport, start each slave as a separate process.
    #[arg(long)]
    pub spawn: bool,
    #[command(flatten)]
    pub seg: SegArgs,
}

#[derive(Debug, Args)]
pub struct SlaveArgs {
    /// Master address, host:port.
    #[arg(long)]
    pub connect: String,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Crowns written as JSON lines.
    #[arg(long)]
    pub out: PathBuf,
    /// Full segmentation parameters as JSON; overrides the flags below.
    #[arg(long)]
    pub params_json: Option<String>,
    #[command(flatten)]
    pub seg: SegArgs,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Curve CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 5e6)]
    pub tile_points: f64,
    #[arg(long, default_value_t = 1350.0)]
    pub tree_points: f64,
    /// Segmentation cost over communication cost, per point.
    #[arg(long, default_value_t = 150.0)]
    pub ratio: f64,
    /// Loads in tiles.
    #[arg(long, value_delimiter = ',', default_values_t = [200, 400, 600, 801])]
    pub loads: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 16, 32, 48, 64, 80, 96, 112, 128, 144, 160, 176, 192])]
    pub processors: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    /// Bias table CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Side of the square block, metres.
    #[arg(long, default_value_t = 600.0)]
    pub block_side: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4, 5, 6])]
    pub grids: Vec<u32>,
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = TransportArg::InProcess)]
    pub transport: TransportArg,
    /// Detected total to correct with the fitted slope.
    #[arg(long, requires = "edge_km")]
    pub grand_total: Option<u64>,
    /// Shared edge length of the whole survey, km.
    #[arg(long, requires = "grand_total")]
    pub edge_km: Option<f64>,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[command(flatten)]
    pub seg: SegArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Crown CSV from segment-sequential or distribute.
    #[arg(long)]
    pub crowns: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub bin_width: f64,
    /// Per-plot fractions: one column per crown class plus `all`, one row per plot.
    #[arg(long, requires = "grand_total")]
    pub fractions: Option<PathBuf>,
    #[arg(long)]
    pub grand_total: Option<f64>,
}

fn transport(arg: TransportArg) -> TransportKind {
    match arg {
        TransportArg::InProcess => TransportKind::InProcess,
        TransportArg::Socket => TransportKind::Socket,
        TransportArg::Simulated => TransportKind::Simulated(SimClock::Measured),
    }
}

fn distinct(a: &Path, b: &Path) -> Result<()> {
    if a == b {
        return Err(Error::validation(format!("input and output are the same path: {}", a.display())));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::SegmentSequential(a) => cmd_segment_sequential(&a),
        Command::Distribute(a) => cmd_distribute(&a),
        Command::Slave(a) => cmd_slave(&a),
        Command::Model(a) => cmd_model(&a),
        Command::Bias(a) => cmd_bias(&a),
        Command::Stats(a) => cmd_stats(&a),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    if a.tiles == 0 {
        return Err(Error::validation("at least one tile per side is required"));
    }
    let spec = a.forest.spec(a.forest.side);
    let (cloud, truth) = generate_forest(&spec)?;
    let side = a.forest.side / a.tiles as f64;
    let (map, tiles) = partition_with_grid(&cloud, (0.0, 0.0), a.tiles, a.tiles, side, spec.nps())?;
    fs::create_dir_all(&a.out)?;
    let name = |id: TileId| PathBuf::from(format!("tile-{:04}.fst", id.0));
    for t in &tiles {
        write_tile_points(&a.out.join(name(t.id)), &t.points)?;
    }
    Manifest::from_map(&map, name).save(&a.out.join("manifest.json"))?;
    write_csv(truth.trees.iter(), create(&a.out.join("truth.csv"))?)?;
    println!("{} points, {} trees, {} tiles -> {}", cloud.len(), truth.trees.len(), tiles.len(), a.out.display());
    Ok(())
}

fn load_cloud(manifest: &Manifest, base: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for e in &manifest.tiles {
        points.extend(e.load_tile(base)?.points.into_inner());
    }
    Ok(PointCloud::new(points))
}

pub fn cmd_segment_sequential(a: &SequentialArgs) -> Result<()> {
    distinct(&a.manifest, &a.out)?;
    let manifest = Manifest::load(&a.manifest)?;
    let params = a.seg.params(manifest.nps)?;
    let cloud = load_cloud(&manifest, &base_dir(&a.manifest))?;
    let seg = segment(&cloud, &params)?;
    let mut crowns = seg.records();
    sort_records(&mut crowns);
    write_crowns_csv(&crowns, create(&a.out)?)?;
    println!("{} points, {} crowns in {:.3} s", cloud.len(), crowns.len(), seg.stats.total_secs());
    Ok(())
}

/// Model prediction for a finished run, or why there is none.
pub fn predicted_speedup(m: &RunMetrics) -> Result<f64> {
    speedup(&ModelInputs {
        total_points: m.tile_points as f64,
        tile_points: m.mean_tile_points,
        tree_points: m.mean_crown_points,
        processors: m.workers as u32 + 1,
        coeff_ratio: m.coeff_ratio,
    })
}

pub fn cmd_distribute(a: &DistributeArgs) -> Result<()> {
    distinct(&a.manifest, &a.out)?;
    if a.workers == 0 {
        return Err(Error::validation("at least one worker is required"));
    }
    let manifest = Manifest::load(&a.manifest)?;
    let map = manifest.tile_map()?;
    let params = a.seg.params(manifest.nps)?;
    let policy = a.seed.map_or(TilePolicy::RowMajor, TilePolicy::Shuffled);
    let base = base_dir(&a.manifest);

    let (crowns, metrics) = if a.spawn {
        if a.transport != TransportArg::Socket {
            return Err(Error::validation("--spawn needs --transport socket"));
        }
        run_spawned(a, &map, &params, policy)?
    } else {
        let source = Arc::new(ManifestSource { manifest: manifest.clone(), base_dir: base });
        let opts = RunOptions { workers: a.workers, transport: transport(a.transport), policy };
        let run = run_distributed(&map, source, &params, &opts)?;
        (run.crowns, run.metrics)
    };
    write_crowns_csv(&crowns, create(&a.out)?)?;
    let metrics_path = a.metrics.clone().unwrap_or_else(|| a.out.with_extension("metrics.json"));
    serde_json::to_writer_pretty(create(&metrics_path)?, &metrics)?;

    println!("{} crowns from {} tiles and {} boundaries", crowns.len(), metrics.tiles, metrics.boundaries);
    if metrics.tile_points == 0 {
        // Spawned slaves keep their timings to themselves.
        println!("wall {:.3} s; per-tile timings not collected, no speedup figures", metrics.wall_secs);
        return Ok(());
    }
    println!("wall {:.3} s, measured speedup {:.3}", metrics.wall_secs, metrics.measured_speedup);
    match predicted_speedup(&metrics) {
        Ok(s) => println!("model speedup {s:.3} (coefficient ratio {:.1})", metrics.coeff_ratio),
        Err(e) => println!("model speedup n/a: {e}"),
    }
    Ok(())
}

fn run_spawned(
    a: &DistributeArgs,
    map: &crate::pointdata::TileMap,
    params: &SegmentationParams,
    policy: TilePolicy,
) -> Result<(Vec<CrownRecord>, RunMetrics)> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let exe = std::env::current_exe()?;
    let dir = a.out.parent().filter(|d| !d.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let params_json = serde_json::to_string(params)?;
    let outputs: Vec<PathBuf> = (0..a.workers).map(|k| dir.join(format!("crowns-slave-{k}.jsonl"))).collect();
    let mut children: Vec<Child> = Vec::with_capacity(a.workers);
    for out in &outputs {
        let child = Process::new(&exe)
            .arg("slave")
            .arg("--connect")
            .arg(addr.to_string())
            .arg("--manifest")
            .arg(&a.manifest)
            .arg("--out")
            .arg(out)
            .arg("--params-json")
            .arg(&params_json)
            .spawn()?;
        children.push(child);
    }
    let served = serve_master(&listener, map, a.workers, policy);
    let mut failed = None;
    for (k, mut c) in children.into_iter().enumerate() {
        if served.is_err() {
            let _ = c.kill();
        }
        let status = c.wait()?;
        if !status.success() && failed.is_none() {
            failed = Some(format!("slave process {k} exited with {status}"));
        }
    }
    let metrics = served?;
    if let Some(msg) = failed {
        return Err(Error::Transport(msg));
    }
    let mut crowns = Vec::new();
    for out in &outputs {
        crowns.extend(read_records_jsonl(BufReader::new(File::open(out)?))?);
    }
    sort_records(&mut crowns);
    Ok((crowns, metrics))
}

pub fn cmd_slave(a: &SlaveArgs) -> Result<()> {
    let manifest = Manifest::load(&a.manifest)?;
    let map = manifest.tile_map()?;
    let params: SegmentationParams = match &a.params_json {
        Some(json) => {
            let p: SegmentationParams = serde_json::from_str(json)?;
            p.validate()?;
            p
        }
        None => a.seg.params(manifest.nps)?,
    };
    let addr: std::net::SocketAddr =
        a.connect.parse().map_err(|_| Error::validation(format!("bad master address {}", a.connect)))?;
    let source = Arc::new(ManifestSource { manifest, base_dir: base_dir(&a.manifest) });
    let mut link = connect_slave(addr, &map)?;
    let report = slave_run(&mut link, SlaveWorker::new(source, map, params))?;
    write_records_jsonl(&report.crowns, create(&a.out)?)?;
    Ok(())
}

pub fn cmd_model(a: &ModelArgs) -> Result<()> {
    let rows = speedup_curves(&a.loads, &a.processors, a.tile_points, a.tree_points, a.ratio)?;
    match &a.out {
        Some(path) => write_curves_csv(&rows, create(path)?)?,
        None => write_curves_csv(&rows, std::io::stdout().lock())?,
    }
    let load = a.loads.iter().copied().max().unwrap_or(1);
    let p = a.processors.iter().copied().filter(|&p| p < load).max().unwrap_or(2);
    let inputs = ModelInputs {
        total_points: load as f64 * a.tile_points,
        tile_points: a.tile_points,
        tree_points: a.tree_points,
        processors: p,
        coeff_ratio: a.ratio,
    };
    eprintln!(
        "e_s = {:.4}; S_p(p = {p}, {load} tiles) = {:.2}; max slaves = {}",
        slave_efficiency(&inputs)?,
        speedup(&inputs)?,
        max_slaves(a.tile_points, a.tree_points, a.ratio)?
    );
    Ok(())
}

pub fn cmd_bias(a: &BiasArgs) -> Result<()> {
    let spec = a.forest.spec(a.block_side);
    let (cloud, truth) = generate_forest(&spec)?;
    let params = a.seg.params(spec.nps())?;
    let opts = RunOptions { workers: a.workers, transport: transport(a.transport), policy: TilePolicy::RowMajor };
    let result = bias_experiment(&cloud, (0.0, 0.0), a.block_side, &a.grids, &params, &opts)?;
    write_csv(result.points.iter(), create(&a.out)?)?;
    let f = result.fit;
    println!(
        "{} trees generated; slope {:.2} trees/km, intercept {:.1}, R^2 {:.4}",
        truth.trees.len(),
        f.slope,
        f.intercept,
        f.r_squared
    );
    if let (Some(total), Some(km)) = (a.grand_total, a.edge_km) {
        println!("adjusted count {}", adjust_count(total, km, f.slope.max(0.0))?);
    }
    Ok(())
}

#[derive(Serialize)]
struct MixtureJson<'a> {
    samples: usize,
    #[serde(flatten)]
    fit: &'a crate::foreststats::MixtureFit,
}

pub fn cmd_stats(a: &StatsArgs) -> Result<()> {
    fs::create_dir_all(&a.out_dir)?;
    let mut did = false;
    if let Some(path) = &a.crowns {
        let rows = read_crowns_csv(File::open(path)?)?;
        let heights: Vec<f64> = rows.iter().map(|r| r.height).collect();
        let hist = height_histogram(heights.iter().copied(), a.bin_width)?;
        write_csv(hist.iter(), create(&a.out_dir.join("height_histogram.csv"))?)?;
        let tall: Vec<f64> = heights.into_iter().filter(|h| *h >= HISTOGRAM_MIN_HEIGHT).collect();
        let fit = fit_mixture(&tall)?;
        let mut w = create(&a.out_dir.join("mixture.json"))?;
        serde_json::to_writer_pretty(&mut w, &MixtureJson { samples: tall.len(), fit: &fit })?;
        w.flush()?;
        let [hi, lo] = fit.components;
        println!(
            "{} heights >= {HISTOGRAM_MIN_HEIGHT} m: {:.1}/{:.1} m (w {:.2}) and {:.1}/{:.1} m (w {:.2})",
            tall.len(),
            hi.mean,
            hi.sd,
            hi.weight,
            lo.mean,
            lo.sd,
            lo.weight
        );
        did = true;
    }
    if let (Some(path), Some(total)) = (&a.fractions, a.grand_total) {
        let (classes, all) = read_fractions(path)?;
        let table = crown_class_estimate(&classes, &all, total)?;
        write_csv(table.iter(), create(&a.out_dir.join("crown_classes.csv"))?)?;
        println!(
            "{} plots (df {}): all classes {:.0} +/- {:.2}%",
            table.plots, table.degrees_of_freedom, table.all.estimate, table.all.half_width_pct
        );
        did = true;
    }
    if !did {
        return Err(Error::validation("nothing to do: give --crowns and/or --fractions with --grand-total"));
    }
    Ok(())
}

fn read_fractions(path: &Path) -> Result<(Vec<ClassSample>, ClassSample)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            let v = field.trim().parse::<f64>().map_err(|_| {
                Error::Parse { offset: line as u64 + 2, message: format!("not a number: {field:?} (row {})", line + 2) }
            })?;
            col.push(v);
        }
    }
    let all_idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("all"))
        .ok_or_else(|| Error::validation("fractions file needs an `all` column"))?;
    let mut classes = Vec::new();
    let mut all = None;
    for (i, (name, fractions)) in headers.into_iter().zip(columns).enumerate() {
        let s = ClassSample { class: name, fractions };
        if i == all_idx {
            all = Some(s);
        } else {
            classes.push(s);
        }
    }
    Ok((classes, all.expect("index found above")))
}

/// Entry point shared by the binary: parses arguments, runs, and maps errors
/// to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("forestseg: {e}");
            e.exit_code()
        }
    }
}
