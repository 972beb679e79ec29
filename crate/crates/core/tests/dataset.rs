use std::io::BufReader;

use arrayopt_core::array_factor::{layout_cost, CostParams, UVGrid};
use arrayopt_core::dataset::*;
use arrayopt_core::geometry::{min_pairwise_distance, Aperture, GenerationConfig, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_gen(seed: u64) -> GenerationConfig {
    GenerationConfig::partitioned(6.0, 6.0, 2, 2, seed)
}

fn grid() -> UVGrid {
    UVGrid::for_aperture(Aperture::new(6.0, 6.0).unwrap(), 65).unwrap()
}

fn bytes(ds: &Dataset) -> Vec<u8> {
    let mut buf = Vec::new();
    ds.write_jsonl(&mut buf).unwrap();
    buf
}

#[test]
fn single_sample_is_reproducible() {
    let a = generate_dataset(1, &small_gen(3), &grid(), CostParams::default(), Some(1)).unwrap();
    let b = generate_dataset(1, &small_gen(3), &grid(), CostParams::default(), Some(1)).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    let c = generate_dataset(1, &small_gen(4), &grid(), CostParams::default(), Some(1)).unwrap();
    assert_ne!(a.configs[0], c.configs[0]);
}

#[test]
fn worker_count_does_not_change_output() {
    let one = generate_dataset(100, &small_gen(5), &grid(), CostParams::default(), Some(1)).unwrap();
    let eight = generate_dataset(100, &small_gen(5), &grid(), CostParams::default(), Some(8)).unwrap();
    assert_eq!(bytes(&one), bytes(&eight));
}

#[test]
fn labels_and_spacing_are_consistent() {
    let gen = small_gen(6);
    let ds = generate_dataset(40, &gen, &grid(), CostParams::default(), None).unwrap();
    let floor = gen.period_y_range.0.min(gen.period_z_range.0).min(gen.seam_min_distance);
    for c in &ds.configs {
        let layout = c.layout().unwrap();
        let fresh = layout_cost(&layout, &grid(), CostParams::default()).unwrap();
        assert!(c.true_cost < 0.0);
        assert!((fresh - c.true_cost).abs() <= 1e-12 * c.true_cost.abs());
        assert!(min_pairwise_distance(&layout).unwrap() >= floor);
    }
}

#[test]
fn persisted_snapshot_regenerates_bit_for_bit() {
    let ds = generate_dataset(25, &small_gen(7), &grid(), CostParams::default(), None).unwrap();
    let text = bytes(&ds);
    let back = Dataset::read_jsonl(BufReader::new(text.as_slice())).unwrap();
    assert_eq!(back, ds);
    let again = generate_dataset(
        back.len(),
        &back.header.gen_config,
        &back.grid().unwrap(),
        back.cost_params(),
        None,
    )
    .unwrap();
    assert_eq!(bytes(&again), text);

    let header: serde_json::Value = serde_json::from_slice(text.split(|b| *b == b'\n').next().unwrap()).unwrap();
    assert_eq!(header["version"], 1);
    assert_eq!(header["p"], 4);
    assert!(header["gen_config"].is_object() && header["grid"].is_object());
}

#[test]
fn top_k_matches_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ds = generate_dataset(1, &small_gen(8), &grid(), CostParams::default(), None).unwrap();
    let template = ds.configs[0].clone();
    ds.configs = (0..500)
        .map(|i| {
            let mut c = template.clone();
            c.config_id = i;
            c.true_cost = -(rng.random_range(0..50) as f64);
            c
        })
        .collect();
    let mut oracle: Vec<(f64, u64)> = ds.configs.iter().map(|c| (c.true_cost, c.config_id)).collect();
    oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for k in [1, 10, 500] {
        let got: Vec<(f64, u64)> = select_top_k(&ds, k).unwrap().iter().map(|c| (c.true_cost, c.config_id)).collect();
        assert_eq!(got, oracle[..k]);
    }
}

#[test]
fn persistent_empty_draws_error_out() {
    let mut gen = GenerationConfig::partitioned(0.1, 0.1, 1, 1, 0);
    gen.period_y_range = (5.0, 6.0);
    gen.period_z_range = (5.0, 6.0);
    gen.rotation_range = (0.0, 0.1);
    gen.offset_fraction_range = (0.2, 0.8);
    let grid = UVGrid::new(4.0, 9, 1.0).unwrap();
    assert!(generate_dataset(1, &gen, &grid, CostParams::default(), None).is_err());
    assert!(generate_dataset(0, &small_gen(0), &grid, CostParams::default(), None).is_err());
}

#[test]
fn invalid_generation_configs_are_rejected() {
    let mut gen = small_gen(0);
    gen.subdomains.pop();
    assert!(generate_dataset(1, &gen, &grid(), CostParams::default(), None).is_err());
    let mut gen = small_gen(0);
    gen.subdomains[0] = Rect::new(-3.0, 0.5, -3.0, 0.0);
    assert!(generate_dataset(1, &gen, &grid(), CostParams::default(), None).is_err());
}

#[test]
fn malformed_files_are_rejected() {
    let ds = generate_dataset(3, &small_gen(9), &grid(), CostParams::default(), None).unwrap();
    let text = String::from_utf8(bytes(&ds)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let dup = format!("{}\n{}\n{}\n", lines[0], lines[1], lines[1]);
    assert!(Dataset::read_jsonl(BufReader::new(dup.as_bytes())).is_err());
    let bad_version = text.replacen("\"version\":1", "\"version\":2", 1);
    assert!(Dataset::read_jsonl(BufReader::new(bad_version.as_bytes())).is_err());
    assert!(Dataset::read_jsonl(BufReader::new(&b""[..])).is_err());
    let truncated = &text[..text.len() - 10];
    assert!(Dataset::read_jsonl(BufReader::new(truncated.as_bytes())).is_err());
}
