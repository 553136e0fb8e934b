mod common;

use common::{family, pooled_form, rel, rng};
use finsler_core::quadrature::{integrate_many, inner_products, total_volume, volume_density_oriented, Axis};
use finsler_core::{
    adjointness_defect, bochner_integral, builtin_form, divergence_integral_check, global_inner_product,
    integrate_scalar, is_h_harmonic, volume_density, FinslerError, Grid64, Structure64, VectorField,
};
use std::f64::consts::{PI, TAU};

fn grid(s: &Structure64) -> Grid64 {
    Grid64::default_for(s).unwrap()
}

/// Area of the dual unit ball `{ξ : F*(ξ) ≤ 1}` at `x` from the support
/// function `h(φ) = F(x, (cos φ, sin φ))`: `A = ½∫(h² − h'²)dφ`.
fn dual_ball_area(s: &Structure64, x: &[f64]) -> f64 {
    let m = 4096;
    let dphi = TAU / m as f64;
    let h = |p: f64| s.eval_f(x, &[p.cos(), p.sin()]).unwrap();
    (0..m)
        .map(|k| {
            let p = k as f64 * dphi;
            let d = (h(p + 1e-5) - h(p - 1e-5)) / 2e-5;
            0.5 * (h(p).powi(2) - d * d) * dphi
        })
        .sum()
}

#[test]
fn volume_is_n_times_dual_ball_volume() {
    // ∫_SM η = n·vol(B*M); for |y| + b·y the dual ball is a unit disk about b
    let torus = TAU * TAU;
    for id in ["euclidean", "randers-torus", "wavy-randers-torus"] {
        let s = family(id);
        let v = total_volume(&s, &grid(&s)).unwrap();
        assert!(rel(v, TAU.powi(3)) < 1e-12, "{id}: {v}");
    }
    let s = family("quartic-torus");
    let want = 2.0 * torus * dual_ball_area(&s, &[0.0, 0.0]);
    assert!(rel(total_volume(&s, &grid(&s)).unwrap(), want) < 1e-8);
    // conformal: B*_x is a disk of radius e^φ, and ∫e^{0.2 cos t}dt = 2π I₀(0.2)
    let i0: f64 = (0..10).map(|k| 0.01f64.powi(k) / (1..=k).map(|j| (j * j) as f64).product::<f64>()).sum();
    let s = family("conformal-torus");
    assert!(rel(total_volume(&s, &grid(&s)).unwrap(), 2.0 * PI * torus * i0) < 1e-12);
}

#[test]
fn sphere_band_and_euclidean_three_volumes() {
    // Near the margins the fiber density in the standard angle peaks with
    // width ~ sin θ, so the fiber rule needs many more nodes than on a torus.
    let s = family("riemannian-sphere");
    let band = TAU * 2.0 * 0.05f64.cos();
    let fine = Grid64::new(&s.chart, &[16, 8], &[256]).unwrap();
    assert!(rel(total_volume(&s, &fine).unwrap(), TAU * band) < 1e-9);
    let coarse = rel(total_volume(&s, &grid(&s)).unwrap(), TAU * band);
    assert!(coarse > 1e-6 && coarse < 1e-4, "{coarse}");
    let s = family("euclidean-3");
    let cap = 2.0 * 1e-3f64.cos() * TAU;
    assert!(rel(total_volume(&s, &grid(&s)).unwrap(), TAU.powi(3) * cap) < 1e-12);
}

#[test]
fn euclidean_three_density_is_sin_theta() {
    let s = family("euclidean-3");
    for th in [0.3, 1.0, 2.5] {
        let d = volume_density(&s, &[0.0; 3], &[1.1, th]).unwrap();
        assert!((d.value - th.sin()).abs() < 1e-14);
    }
}

#[test]
fn reversing_a_fiber_angle_flips_orientation() {
    for id in ["euclidean", "wavy-randers-torus", "euclidean-3"] {
        let s = family(id);
        let angles: Vec<f64> = (0..s.dim - 1).map(|k| 0.7 + k as f64).collect();
        let x = vec![0.5; s.dim];
        let a = volume_density_oriented(&s, &x, &angles, None).unwrap();
        let b = volume_density_oriented(&s, &x, &angles, Some(0)).unwrap();
        assert!(a.value > 0.0);
        assert!((a.raw + b.raw).abs() < 1e-14, "{id}");
    }
}

#[test]
fn density_positive_on_every_node() {
    for id in ["randers-torus", "wavy-randers-torus", "quartic-torus", "riemannian-sphere"] {
        let s = family(id);
        let g = Grid64::new(&s.chart, &[8, 8], &[16]).unwrap();
        for b in 0..g.base_len() {
            for f in 0..g.fiber_len() {
                let d = volume_density(&s, &g.base_node(b).0, &g.fiber_node(f).0).unwrap();
                assert!(d.value > 0.0);
            }
        }
    }
}

#[test]
fn trig_integrals_on_the_flat_torus() {
    let s = family("euclidean");
    let g = grid(&s);
    let v = integrate_scalar(&s, &g, |x, _| Ok(x[0].sin().powi(2))).unwrap();
    assert!(rel(v, TAU.powi(3) / 2.0) < 1e-13);
    let w = integrate_scalar(&s, &g, |_, y| Ok(y[0] * y[0])).unwrap();
    assert!(rel(w, TAU.powi(3) / 2.0) < 1e-13);
    let dx1 = builtin_form("dx1", 2).unwrap();
    let sdx1 = builtin_form("sin-x1-dx1", 2).unwrap();
    assert!(rel(global_inner_product(&s, &dx1, &dx1, &g).unwrap(), TAU.powi(3)) < 1e-13);
    assert!(global_inner_product(&s, &dx1, &sdx1, &g).unwrap().abs() < 1e-12);
    let top = builtin_form("dx1^dx2", 2).unwrap();
    assert!(rel(global_inner_product(&s, &top, &top, &g).unwrap(), TAU.powi(3)) < 1e-13);
}

#[test]
fn sphere_inner_products() {
    // (dθ, dθ) is the volume; (dφ, dφ) = 4π² ∫ csc θ dθ = 8π² ln cot(m/2)
    let s = family("riemannian-sphere");
    let g = Grid64::new(&s.chart, &[64, 8], &[256]).unwrap();
    let dth = builtin_form("dx1", 2).unwrap();
    let dph = builtin_form("dx2", 2).unwrap();
    let v = inner_products(&s, &[(&dth, &dth), (&dph, &dph), (&dth, &dph)], &g).unwrap();
    assert!(rel(v[0], TAU * TAU * 2.0 * 0.05f64.cos()) < 1e-8);
    let want = 8.0 * PI * PI * (1.0 / 0.025f64.tan()).ln();
    assert!(rel(v[1], want) < 1e-6, "{} vs {want}", v[1]);
    assert!(v[2].abs() < 1e-12);
}

#[test]
fn gauss_legendre_is_exact_for_polynomials() {
    for count in [8, 13, 32, 48] {
        let a = Axis::<f64>::gauss_legendre(-1.0, 2.0, count).unwrap();
        let deg = 15.min(2 * count - 1) as i32;
        let got: f64 = a.nodes.iter().zip(&a.weights).map(|(x, w)| w * x.powi(deg)).sum();
        let want = (2f64.powi(deg + 1) - (-1f64).powi(deg + 1)) / (deg + 1) as f64;
        assert!(rel(got, want) < 1e-13, "{count}");
    }
}

#[test]
fn grid_validation() {
    let s = family("euclidean");
    assert!(matches!(Grid64::new(&s.chart, &[4, 8], &[8]), Err(FinslerError::Grid(_))));
    assert!(Grid64::new(&s.chart, &[8, 8, 8], &[8]).is_err());
    let g3 = grid(&family("euclidean-3"));
    assert!(total_volume(&s, &g3).is_err());
    let fine = grid(&s).refined(&s.chart, 2).unwrap();
    assert_eq!(fine.base_counts, vec![64, 64]);
    assert_eq!(fine.fiber_counts, vec![128]);
}

#[test]
fn integration_converges_under_refinement() {
    let s = family("wavy-randers-torus");
    let coarse = Grid64::new(&s.chart, &[8, 8], &[16]).unwrap();
    let mid = coarse.refined(&s.chart, 2).unwrap();
    let fine = coarse.refined(&s.chart, 4).unwrap();
    let f = |x: &[f64], y: &[f64]| Ok((x[0] + 2.0 * x[1]).cos().powi(4) * (1.0 + y[0]));
    let a = integrate_scalar(&s, &coarse, f).unwrap();
    let b = integrate_scalar(&s, &mid, f).unwrap();
    let c = integrate_scalar(&s, &fine, f).unwrap();
    assert!((b - c).abs() <= (a - c).abs() + 1e-12);
    assert!(rel(b, c) < 1e-10);
}

#[test]
fn divergence_theorem() {
    for id in ["randers-torus", "wavy-randers-torus", "quartic-torus", "conformal-torus"] {
        let s = family(id);
        let pi = pooled_form(&mut rng(21), 2, 1);
        let r = divergence_integral_check(&s, &pi, &small(&s)).unwrap();
        assert!(r.defect < 1e-8, "{id}: {r:?}");
        assert!(r.warning.is_none());
    }
    // cos θ dθ has flux 2 sin m cos m per unit fiber and φ length through the margins
    let s = family("riemannian-sphere");
    let pi = finsler_core::Form64::monomial(2, &[0], finsler_core::TrigPoly::cos_axis(2, 0, 1.0)).unwrap();
    let g = Grid64::new(&s.chart, &[16, 8], &[256]).unwrap();
    let r = divergence_integral_check(&s, &pi, &g).unwrap();
    assert!(r.warning.is_some());
    let m = 0.05f64;
    let flux = 2.0 * m.sin() * m.cos() * TAU * TAU;
    assert!(rel(r.integral.abs(), flux) < 1e-6, "{} vs {flux}", r.integral);
}

/// Coarse grid for structures that vary along the base.
fn small(s: &Structure64) -> Grid64 {
    Grid64::new(&s.chart, &[16, 16], &[32]).unwrap()
}

#[test]
fn adjointness_of_trig_pairs() {
    let s = family("euclidean");
    let g = grid(&s);
    let f = builtin_form("sin-x1", 2).unwrap();
    let c = builtin_form("cos-x1-dx1", 2).unwrap();
    let r = adjointness_defect(&s, &f, &c, &g).unwrap();
    assert!(rel(r.lhs, TAU.powi(3) / 2.0) < 1e-13 && r.defect < 1e-13);
    let s = family("wavy-randers-torus");
    let mut r_ = rng(22);
    for p in 0..2 {
        let phi = pooled_form(&mut r_, 2, p);
        let psi = pooled_form(&mut r_, 2, p + 1);
        let r = adjointness_defect(&s, &phi, &psi, &small(&s)).unwrap();
        assert!(r.lhs.abs() > 1e-2, "p={p}: trivial pair {r:?}");
        assert!(r.defect < 1e-8, "p={p}: {r:?}");
    }
    assert!(adjointness_defect(&s, &f, &f, &small(&s)).is_err());
}

#[test]
fn bochner_on_flat_and_round() {
    let s = family("euclidean");
    let b = bochner_integral(&s, &VectorField::constant(&[0.3, -1.2]), &grid(&s)).unwrap();
    assert!(b.sum.abs() < 1e-12 && b.k_integral.abs() < 1e-12);
    let s = family("riemannian-sphere");
    let x = VectorField::coordinate(2, 1);
    let b = bochner_integral(&s, &x, &Grid64::new(&s.chart, &[16, 8], &[16]).unwrap()).unwrap();
    assert!(b.k_integral > 0.0);
    assert!(b.sum >= -1e-6);
}

#[test]
fn harmonic_verdicts() {
    let s = family("randers-torus");
    let g = Grid64::new(&s.chart, &[16, 16], &[32]).unwrap();
    let r = is_h_harmonic(&s, &builtin_form("dx1", 2).unwrap(), &g, 1e-10).unwrap();
    assert!(r.harmonic && r.equivalence_holds, "{r:?}");
    let r = is_h_harmonic(&s, &builtin_form("sin-x1-dx1", 2).unwrap(), &g, 1e-10).unwrap();
    assert!(!r.harmonic && r.equivalence_holds && r.laplacian_norm > 0.1);
    assert!(r.energy_defect < 1e-8 * (1.0 + r.laplacian_norm.powi(2)));
}

#[test]
fn reduction_is_deterministic_across_thread_counts() {
    let s = family("wavy-randers-torus");
    let g = Grid64::new(&s.chart, &[16, 16], &[16]).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| integrate_many(&s, &g, None, 1, |x, y, _| Ok(vec![(x[0] * y[1]).sin()])).unwrap()[0])
    };
    let a = run(1);
    assert_eq!(a.to_bits(), run(3).to_bits());
    assert_eq!(a.to_bits(), run(1).to_bits());
}
