use std::collections::BTreeSet;
use std::sync::Arc;

use forestseg::boundary::{partition_boundary, shared_sides, ReadinessLedger, ALL_SHARED};
use forestseg::orchestrator::modelcheck::{expected_keys, explore_exhaustive, explore_random};
use forestseg::orchestrator::{
    run_distributed, Master, MemorySource, Message, RunOptions, SimClock, TilePolicy, TransportKind,
};
use forestseg::pointdata::{generate_forest, partition_with_grid, AreaBounds, ForestSpec, TileId, TileMap};
use forestseg::segmentation::{segment, CrownRecord, SegmentationParams};
use proptest::prelude::*;

fn setup(rows: u32, side: f64, seed: u64) -> (TileMap, Arc<MemorySource>, SegmentationParams) {
    let spec =
        ForestSpec { bounds: AreaBounds::square(0.0, 0.0, rows as f64 * side), seed, ..ForestSpec::default() };
    let (cloud, _) = generate_forest(&spec).unwrap();
    let (map, tiles) = partition_with_grid(&cloud, (0.0, 0.0), rows, rows, side, spec.nps()).unwrap();
    (map, Arc::new(MemorySource::new(tiles)), SegmentationParams::for_nps(spec.nps()))
}

fn run(map: &TileMap, src: &Arc<MemorySource>, params: &SegmentationParams, w: usize, t: TransportKind) -> Vec<CrownRecord> {
    let opts = RunOptions { workers: w, transport: t, policy: TilePolicy::RowMajor };
    run_distributed(map, src.clone(), params, &opts).unwrap().crowns
}

#[test]
fn every_transport_and_worker_count_agrees() {
    let (map, src, params) = setup(2, 40.0, 8);
    let base = run(&map, &src, &params, 1, TransportKind::InProcess);
    assert!(!base.is_empty());
    for w in [2, 3, 5] {
        assert_eq!(run(&map, &src, &params, w, TransportKind::InProcess), base, "in-process w={w}");
    }
    assert_eq!(run(&map, &src, &params, 3, TransportKind::Socket), base);
    assert_eq!(run(&map, &src, &params, 4, TransportKind::Simulated(SimClock::Measured)), base);
    let shuffled = RunOptions { workers: 3, transport: TransportKind::InProcess, policy: TilePolicy::Shuffled(5) };
    assert_eq!(run_distributed(&map, src.clone(), &params, &shuffled).unwrap().crowns, base);
}

#[test]
fn message_counts_follow_the_map() {
    let (map, src, params) = setup(3, 30.0, 2);
    let keys = ReadinessLedger::new(&map).key_count() as u64;
    for w in [1, 4] {
        let opts = RunOptions { workers: w, transport: TransportKind::InProcess, policy: TilePolicy::RowMajor };
        let m = run_distributed(&map, src.clone(), &params, &opts).unwrap().metrics;
        assert_eq!((m.messages.pt, m.messages.tc), (9, 9));
        assert_eq!((m.messages.pb, m.messages.bc), (keys, keys));
        assert_eq!(m.messages.fin, w as u64);
        assert_eq!(m.tiles, 9);
    }
}

#[test]
fn single_tile_run_matches_whole_cloud() {
    // With no neighbours every edge is the edge of the data, so nothing is re-segmented.
    let (map, src, params) = setup(1, 40.0, 6);
    let tile = forestseg::orchestrator::TileSource::load(src.as_ref(), TileId(0)).unwrap();
    let mut whole = segment(&tile.points, &params).unwrap().records();
    forestseg::segmentation::sort_records(&mut whole);
    assert_eq!(run(&map, &src, &params, 2, TransportKind::InProcess), whole);
}

#[test]
fn exterior_only_crowns_stay_interior() {
    let map = TileMap::full(1, 2, (0.0, 0.0), 50.0, 0.2).unwrap();
    let west = shared_sides(&map, TileId(0)).unwrap();
    // Only the east edge and its two corners are shared with the second tile.
    assert_eq!(west, [false, false, true, false, true, false, true, false]);
    let pts = |v: &[(f64, f64)]| v.iter().map(|&(x, y)| forestseg::pointdata::Point3D::new(x, y, 9.0)).collect::<Vec<_>>();
    let crown = |v: &[(f64, f64)]| {
        let points = pts(v);
        CrownRecord { apex: points[0], height: 9.0, crown_radius: 1.0, points }
    };
    let bounds = map.bounds(TileId(0)).unwrap();
    let crowns = vec![crown(&[(0.1, 25.0)]), crown(&[(49.9, 25.0)]), crown(&[(49.9, 49.9)]), crown(&[(0.1, 49.9)])];
    let p = partition_boundary(TileId(0), crowns.clone(), &bounds, 0.2, &west).unwrap();
    assert_eq!(p.interior.len(), 2);
    let all = partition_boundary(TileId(0), crowns, &bounds, 0.2, &ALL_SHARED).unwrap();
    assert_eq!(all.interior.len(), 0);
}

#[test]
fn one_by_two_master_sequence() {
    let map = TileMap::full(1, 2, (0.0, 0.0), 50.0, 0.2).unwrap();
    let mut m = Master::new(&map, 1, TilePolicy::RowMajor).unwrap();
    let out = m.start().unwrap();
    assert_eq!(out.len(), 1);
    assert!(matches!(out[0].1, Message::Pt(TileId(0))));
    let mut log = vec!["PT"];
    let mut next = out[0].1.clone();
    loop {
        let reply = match next {
            Message::Pt(tile) => Message::Tc(forestseg::boundary::BoundaryReport { tile, ..Default::default() }),
            Message::Pb(key, _) => Message::Bc(key, 0),
            Message::Fin => break,
            _ => unreachable!(),
        };
        let out = m.handle(0, reply).unwrap();
        assert_eq!(out.len(), 1);
        next = out[0].1.clone();
        log.push(match next {
            Message::Pt(_) => "PT",
            Message::Pb(..) => "PB",
            Message::Fin => "FIN",
            _ => "?",
        });
    }
    // Tile 0's five unshared keys are ready at once and go before tile 1.
    let pbs_before_second_tile = log.iter().skip(1).take_while(|t| **t == "PB").count();
    assert_eq!(pbs_before_second_tile, 5);
    assert_eq!(log.iter().filter(|t| **t == "PT").count(), 2);
    assert_eq!(log.iter().filter(|t| **t == "PB").count(), expected_keys(&map).0.len());
    assert_eq!(log.last(), Some(&"FIN"));
    assert!(m.is_finished());
}

#[test]
fn exhaustive_small_maps() {
    for (rows, cols) in [(1, 1), (1, 2), (2, 2), (1, 3)] {
        let map = TileMap::full(rows, cols, (0.0, 0.0), 50.0, 0.2).unwrap();
        for w in 1..=3 {
            explore_exhaustive(&map, w).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn random_schedules_on_random_maps(
        rows in 1u32..5, cols in 1u32..5, mask_bits in any::<u32>(), workers in 1usize..6, seed in any::<u64>()
    ) {
        let n = (rows * cols) as usize;
        let mut mask: Vec<bool> = (0..n).map(|i| mask_bits >> i & 1 == 1).collect();
        mask[0] = true;
        let map = TileMap::with_occupancy(rows, cols, (0.0, 0.0), 50.0, 0.2, &mask).unwrap();
        let (all, shared) = expected_keys(&map);
        prop_assert!(shared.is_subset(&all));
        let ledger: BTreeSet<_> = ReadinessLedger::new(&map).keys().collect();
        prop_assert_eq!(ledger, all);
        explore_random(&map, workers, 10, seed, TilePolicy::Shuffled(seed)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
}
