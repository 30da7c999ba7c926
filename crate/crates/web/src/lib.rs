//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns JSON text so the page needs no generated type glue.

use forestseg::foreststats::{fit_mixture, height_histogram, HISTOGRAM_MIN_HEIGHT};
use forestseg::perfmodel::speedup_curves;
use forestseg::pointdata::{generate_forest, AreaBounds, ForestSpec};
use forestseg::segmentation::{segment, SegmentationParams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js_err)
}

/// Model speedup against processor count, one series per load in tiles.
#[wasm_bindgen]
pub fn speedup_curve_json(
    tile_points: f64,
    tree_points: f64,
    ratio: f64,
    loads: &[u32],
    max_processors: u32,
) -> Result<String, JsValue> {
    let ps: Vec<u32> = (2..=max_processors.max(2)).collect();
    let rows = speedup_curves(loads, &ps, tile_points, tree_points, ratio).map_err(js_err)?;
    to_json(&rows)
}

#[derive(Serialize)]
struct CanvasCrown {
    x: f64,
    y: f64,
    height: f64,
    radius: f64,
    /// Flattened x, y pairs of the member points.
    points: Vec<f32>,
}

#[derive(Serialize)]
struct CanvasForest {
    side: f64,
    trees: usize,
    points: usize,
    crowns: Vec<CanvasCrown>,
}

/// Generates a square forest and segments it whole.
#[wasm_bindgen]
pub fn segment_forest_json(side: f64, stem_density: f64, point_density: f64, seed: u64) -> Result<String, JsValue> {
    let spec = ForestSpec {
        bounds: AreaBounds::square(0.0, 0.0, side),
        stem_density,
        point_density,
        seed,
        ..ForestSpec::default()
    };
    let (cloud, truth) = generate_forest(&spec).map_err(js_err)?;
    let seg = segment(&cloud, &SegmentationParams::for_nps(spec.nps())).map_err(js_err)?;
    let crowns = seg
        .records()
        .into_iter()
        .map(|c| CanvasCrown {
            x: c.apex.x,
            y: c.apex.y,
            height: c.height,
            radius: c.crown_radius,
            points: c.points.iter().flat_map(|p| [p.x as f32, p.y as f32]).collect(),
        })
        .collect();
    to_json(&CanvasForest { side, trees: truth.trees.len(), points: cloud.len(), crowns })
}

#[derive(Serialize)]
struct MixtureView {
    histogram: Vec<forestseg::foreststats::HistogramBin>,
    fit: forestseg::foreststats::MixtureFit,
}

/// Height histogram and two-component normal mixture of `heights`.
#[wasm_bindgen]
pub fn mixture_json(heights: &[f64], bin_width: f64) -> Result<String, JsValue> {
    let kept: Vec<f64> = heights.iter().copied().filter(|h| *h >= HISTOGRAM_MIN_HEIGHT).collect();
    let histogram = height_histogram(kept.iter().copied(), bin_width).map_err(js_err)?;
    let fit = fit_mixture(&kept).map_err(js_err)?;
    to_json(&MixtureView { histogram, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_rows_cover_every_processor_count() {
        let text = speedup_curve_json(5e6, 1350.0, 150.0, &[200, 801], 40).unwrap();
        let rows: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
        assert_eq!(rows.len(), 2 * 39);
    }

    #[test]
    fn forest_round_trips_through_json() {
        let text = segment_forest_json(40.0, 250.0, 4.0, 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let crowns = v["crowns"].as_array().unwrap();
        assert!(!crowns.is_empty());
        assert!(crowns.iter().all(|c| c["points"].as_array().unwrap().len() % 2 == 0));
    }

    #[test]
    fn mixture_of_two_groups() {
        let heights: Vec<f64> = (0..400).map(|i| if i % 2 == 0 { 10.0 + (i % 7) as f64 * 0.3 } else { 25.0 + (i % 11) as f64 * 0.5 }).collect();
        let v: serde_json::Value = serde_json::from_str(&mixture_json(&heights, 1.0).unwrap()).unwrap();
        let mean = v["fit"]["components"][0]["mean"].as_f64().unwrap();
        assert!((mean - 27.5).abs() < 1.0, "{mean}");
    }
}
