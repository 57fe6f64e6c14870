//! Statistics helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn rho(x: f64, s: f64, c: f64) -> f64 {
    (-std::f64::consts::PI * (x - c) * (x - c) / (s * s)).exp()
}

/// Pearson p-value of observed counts against unnormalized weights. Bins with
/// an expected count below 5 are merged into their neighbours.
pub fn chi_square_p(counts: &BTreeMap<i64, u64>, weights: &BTreeMap<i64, f64>) -> f64 {
    let total: u64 = counts.values().sum();
    let mass: f64 = weights.values().sum();
    assert!(counts.keys().all(|k| weights.contains_key(k)), "sample outside support");
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0f64, 0f64);
    for (k, w) in weights {
        obs += *counts.get(k).unwrap_or(&0) as f64;
        exp += w / mass * total as f64;
        if exp >= 5.0 {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += obs;
        last.1 += exp;
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (bins.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

pub fn histogram(xs: impl Iterator<Item = i64>) -> BTreeMap<i64, u64> {
    let mut h = BTreeMap::new();
    for x in xs {
        *h.entry(x).or_insert(0) += 1;
    }
    h
}
