//! Tile-based distributed segmentation of individual tree crowns in
//! LiDAR-like point clouds.
//!
//! The crate is organised bottom-up:
//!
//! - [`pointdata`]: points, tiles, tile maps, tile files and a seeded
//!   synthetic forest generator.
//! - [`segmentation`]: the single-processor crown segmenter that every
//!   worker runs on its tile or boundary cloud.
//! - [`boundary`]: classification of boundary crowns into edge/corner sets,
//!   canonical boundary keys and the readiness ledger.
//! - [`orchestrator`]: the master/slave protocol, transports and run drivers.
//! - [`perfmodel`]: closed-form efficiency and speedup model.
//! - [`foreststats`]: bias regression, count adjustment, crown-class
//!   estimation and two-component height mixtures.
//! - [`cli`]: the command implementations behind the `forestseg` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod cli;
pub mod error;
pub mod foreststats;
pub mod hull;
pub mod orchestrator;
pub mod perfmodel;
pub mod pointdata;
pub mod segmentation;
pub mod timing;

pub use error::{Error, Result};
