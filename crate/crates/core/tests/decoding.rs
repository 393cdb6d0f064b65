//! Decoder stages against sweep-based and nearest-seed references.

mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use textcohesion::decoder::{
    confidence_filter, decode, diffuse, find_candidates, resolve_conflicts, Candidate, DecodeConfig, PixelSet,
    PredictionMaps,
};
use textcohesion::pipeline::labels_for;
use textcohesion::synth::{synth_corpus, SynthConfig};

fn random_maps(seed: u64, w: usize, h: usize, density: f64) -> PredictionMaps {
    let mut r = rng(seed);
    let mut m = PredictionMaps::zeros(w, h);
    for ch in m.channels_mut() {
        for v in ch.as_mut_slice() {
            *v = if r.random_bool(density) {
                r.random_range(0.0..1.0)
            } else {
                0.0
            };
        }
    }
    m
}

fn oracle_maps(seed: u64, count: usize) -> Vec<PredictionMaps> {
    let c = synth_corpus(&SynthConfig {
        seed,
        count,
        ..Default::default()
    })
    .unwrap();
    c.images
        .iter()
        .map(|i| PredictionMaps::from_labels(&labels_for(&i.annotation, &Default::default()).unwrap()))
        .collect()
}

#[test]
fn diffusion_matches_sweep_fixpoint() {
    let cfg = DecodeConfig::default();
    for seed in 0..30 {
        let maps = random_maps(seed, 24, 20, 0.8);
        for cand in find_candidates(
            &maps,
            &DecodeConfig {
                min_component_px: 1,
                ..cfg
            },
        ) {
            let got = diffuse(&cand, &maps, &cfg);
            assert_eq!(
                got.indices(),
                oracle_diffuse(&cand.seed, &maps, cfg.t_dpr, cfg.t_tr).as_slice()
            );
        }
    }
}

#[test]
fn diffusion_on_labels_matches_sweep() {
    let cfg = DecodeConfig::default();
    for maps in oracle_maps(3, 4) {
        for cand in find_candidates(&maps, &cfg) {
            let got = diffuse(&cand, &maps, &cfg);
            assert_eq!(
                got.indices(),
                oracle_diffuse(&cand.seed, &maps, cfg.t_dpr, cfg.t_tr).as_slice()
            );
        }
    }
}

#[test]
fn conflicts_go_to_nearest_seed() {
    let mut r = rng(8);
    let (w, h) = (30, 30);
    for _ in 0..40 {
        let n = r.random_range(2..5);
        let mut seeds = Vec::new();
        let mut masks = Vec::new();
        for _ in 0..n {
            let (cx, cy) = (r.random_range(0..w), r.random_range(0..h));
            let seed: Vec<(usize, usize)> = (0..r.random_range(1..4)).map(|k| ((cx + k).min(w - 1), cy)).collect();
            let rad = r.random_range(3..12) as isize;
            let mut mask = seed.clone();
            for y in 0..h {
                for x in 0..w {
                    if (x as isize - cx as isize).abs() + (y as isize - cy as isize).abs() <= rad {
                        mask.push((x, y));
                    }
                }
            }
            seeds.push(PixelSet::from_coords(w, h, &seed));
            masks.push(PixelSet::from_coords(w, h, &mask));
        }
        let got = resolve_conflicts(&seeds, masks.clone());
        let want = oracle_resolve(&seeds, &masks);
        for (g, o) in got.iter().zip(&want) {
            assert_eq!(g.indices(), o.as_slice());
        }
        for i in 0..got.len() {
            for j in i + 1..got.len() {
                assert_eq!(got[i].intersection_len(&got[j]), 0);
            }
        }
    }
}

#[test]
fn candidate_means_use_raw_scores() {
    let mut maps = PredictionMaps::zeros(10, 3);
    for x in 0..10 {
        maps.tr[10 + x] = 1.0;
        maps.ts[10 + x] = if x < 5 { 0.3 } else { 0.9 };
    }
    let cands = find_candidates(&maps, &DecodeConfig::default());
    assert_eq!(cands.len(), 1);
    assert!((cands[0].mean_ts_score - 0.6).abs() < 1e-12);
}

#[test]
fn filter_is_strict() {
    let c = |s: f64| Candidate {
        seed: PixelSet::from_coords(4, 4, &[(0, 0)]),
        mean_ts_score: s,
    };
    let (kept, dropped) = confidence_filter(vec![c(0.54), c(0.5400001), c(0.2)], 0.54);
    assert_eq!(kept.len(), 1);
    assert_eq!(dropped.len(), 2);
}

#[test]
fn zero_maps_decode_to_nothing() {
    let maps = PredictionMaps::zeros(64, 64);
    assert!(decode(&maps, &DecodeConfig::default()).unwrap().is_empty());
}

#[test]
fn out_of_range_maps_rejected() {
    let mut maps = PredictionMaps::zeros(8, 8);
    maps.left[5] = 1.5;
    assert!(decode(&maps, &DecodeConfig::default()).is_err());
}

#[test]
fn detections_sorted_and_disjoint() {
    for maps in oracle_maps(6, 5) {
        let dets = decode(&maps, &DecodeConfig::default()).unwrap();
        for w in dets.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        for i in 0..dets.len() {
            assert!(dets[i].seed.is_subset_of(&dets[i].mask));
            for j in i + 1..dets.len() {
                assert_eq!(dets[i].mask.intersection_len(&dets[j].mask), 0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn raising_gamma_never_adds_detections(seed in 0u64..10_000, g1 in 0.0f64..1.0, g2 in 0.0f64..1.0) {
        let maps = random_maps(seed, 20, 20, 0.7);
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let n = |gamma| decode(&maps, &DecodeConfig { gamma, ..Default::default() }).unwrap().len();
        prop_assert!(n(hi) <= n(lo));
    }

    #[test]
    fn decode_is_deterministic(seed in 0u64..10_000) {
        let maps = random_maps(seed, 20, 20, 0.7);
        let a = decode(&maps, &DecodeConfig::default()).unwrap();
        let b = decode(&maps, &DecodeConfig::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}
