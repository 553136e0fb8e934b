#![allow(dead_code)]

use finsler_core::catalog::list_builtins;
use finsler_core::fields::{Coefficient, TrigPoly, TrigTerm};
use finsler_core::{builtin_metric, Form64, HorizontalForm, Structure64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every built-in structure, by id.
pub fn all_families() -> Vec<(&'static str, Structure64)> {
    list_builtins()
        .metrics
        .into_iter()
        .map(|m| (m.id, builtin_metric(m.id).unwrap()))
        .collect()
}

pub fn family(id: &str) -> Structure64 {
    builtin_metric(id).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&u, &v)| rel(u, v)).fold(0.0, f64::max)
}

/// Random trig polynomial drawing frequencies from a small shared pool, so
/// that independently drawn forms have overlapping spectra.
pub fn pooled_poly<R: Rng>(rng: &mut R, n: usize, nterms: usize) -> TrigPoly<f64> {
    let pool: Vec<Vec<i32>> = if n == 2 {
        vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1], vec![2, 0], vec![0, 2]]
    } else {
        (0..n)
            .map(|k| {
                let mut f = vec![0; n];
                f[k] = 1;
                f
            })
            .collect()
    };
    TrigPoly {
        constant: rng.gen_range(-0.5..0.5),
        terms: (0..nterms)
            .map(|_| TrigTerm {
                amp: rng.gen_range(-1.0..1.0),
                freq: pool[rng.gen_range(0..pool.len())].clone(),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            })
            .collect(),
    }
}

/// Random direction-dependent p-form with pooled frequencies.
pub fn pooled_form<R: Rng>(rng: &mut R, n: usize, p: usize) -> Form64 {
    let comps = finsler_core::tensor::all_indices(n, p)
        .filter(|ix| ix.windows(2).all(|w| w[0] < w[1]))
        .map(|ix| {
            let poly = pooled_poly(rng, n, 3);
            let w = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
            (
                ix,
                Coefficient {
                    poly,
                    direction_weights: Some(w),
                },
            )
        })
        .collect();
    HorizontalForm::from_components(n, p, comps, format!("pooled-{p}")).unwrap()
}
