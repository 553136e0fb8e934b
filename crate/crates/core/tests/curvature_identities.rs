mod common;

use common::{family, rng};
use finsler_core::curvature::{hh_curvature, hv_curvature, ricci_trace, vv_curvature};
use finsler_core::{
    builtin_vector_field, curvature_at, flag_curvature_tensor, ricci_identity_residual, Structure64, TensorValue64,
};
use proptest::prelude::*;

fn delta(a: usize, b: usize) -> f64 {
    (a == b) as u8 as f64
}

/// `R^h_kij = K(δ^h_i g_kj − δ^h_j g_ki)` in two dimensions.
fn check_surface(hh: &TensorValue64, g: &TensorValue64, k: f64, tol: f64) {
    for h in 0..2 {
        for kk in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let want = k * (delta(h, i) * g.get(&[kk, j]) - delta(h, j) * g.get(&[kk, i]));
                    let got = hh.get(&[h, kk, i, j]);
                    assert!((got - want).abs() < tol, "R^{h}_{kk}{i}{j}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn round_sphere_has_unit_curvature() {
    let s = family("riemannian-sphere");
    let mut r = rng(11);
    for _ in 0..20 {
        let x = s.chart.sample(&mut r);
        let y = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let c = curvature_at(&s, &x, &y).unwrap();
        let g = s.fundamental_tensor(&x, &y).unwrap();
        check_surface(&c.hh, &g, 1.0, 1e-9);
        assert!(c.ricci.max_diff(&g) < 1e-9);
        // R^i_jk = δ^i_j y_k − δ^i_k y_j
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let yk: f64 = (0..2).map(|m| g.get(&[k, m]) * y[m]).sum();
                    let yj: f64 = (0..2).map(|m| g.get(&[j, m]) * y[m]).sum();
                    let want = delta(i, j) * yk - delta(i, k) * yj;
                    assert!((c.flag.get(&[i, j, k]) - want).abs() < 1e-9);
                }
            }
        }
    }
}

use rand::Rng;

#[test]
fn conformal_torus_gauss_curvature() {
    // g = e^{2φ}δ with φ = 0.1 cos x¹, so K = −e^{−2φ}Δφ = 0.1 cos x¹ e^{−2φ}
    let s = family("conformal-torus");
    let mut r = rng(12);
    for _ in 0..20 {
        let x = s.chart.sample(&mut r);
        let y = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let phi = 0.1 * x[0].cos();
        let k = 0.1 * x[0].cos() * (-2.0 * phi).exp();
        let hh = hh_curvature(&s, &x, &y).unwrap();
        let g = s.fundamental_tensor(&x, &y).unwrap();
        check_surface(&hh, &g, k, 1e-10);
        let ric = ricci_trace(&s, &x, &y).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((ric.get(&[i, j]) - k * g.get(&[i, j])).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn minkowski_structures_are_flat() {
    for id in ["euclidean", "euclidean-3", "randers-torus", "quartic-torus"] {
        let s = family(id);
        let mut r = rng(13);
        let x = s.chart.sample(&mut r);
        let y: Vec<f64> = (0..s.dim).map(|i| 0.3 + 0.4 * i as f64).collect();
        let c = curvature_at(&s, &x, &y).unwrap();
        assert_eq!(c.hh.max_abs(), 0.0, "{id}");
        assert_eq!(c.hv.max_abs(), 0.0, "{id}");
        assert_eq!(c.flag.max_abs(), 0.0, "{id}");
    }
}

#[test]
fn surfaces_have_no_vv_curvature() {
    // In two dimensions C_ijk = (I/F) m_i m_j m_k, so the vv-curvature cancels.
    for id in ["randers-torus", "wavy-randers-torus", "quartic-torus"] {
        let s = family(id);
        let q = vv_curvature(&s, &[0.4, 1.1], &[0.7, -0.2]).unwrap();
        assert!(q.max_abs() < 1e-12, "{id}: {}", q.max_abs());
    }
}

#[test]
fn vv_curvature_in_three_dimensions() {
    let s = Structure64::randers_torus(&[0.3, 0.2, -0.1]);
    let (x, y) = ([0.1, 0.2, 0.3], [0.5, -0.4, 0.9]);
    let q = vv_curvature(&s, &x, &y).unwrap();
    let cv = finsler_core::connection::cartan_coefficients(&s, &x, &y).unwrap().cv;
    assert!(q.max_abs() > 1e-3);
    for h in 0..3 {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let want: f64 = (0..3)
                        .map(|r| cv.get(&[h, r, j]) * cv.get(&[r, k, i]) - cv.get(&[h, r, i]) * cv.get(&[r, k, j]))
                        .sum();
                    assert!((q.get(&[h, k, i, j]) - want).abs() < 1e-14);
                    assert!((q.get(&[h, k, i, j]) + q.get(&[h, k, j, i])).abs() < 1e-14);
                }
            }
        }
    }
}

fn lowered_antisymmetry(s: &Structure64, x: &[f64], y: &[f64]) -> f64 {
    let n = s.dim;
    let hh = hh_curvature(s, x, y).unwrap();
    let g = s.fundamental_tensor(x, y).unwrap();
    let low = |h: usize, k: usize, i: usize, j: usize| (0..n).map(|l| g.get(&[h, l]) * hh.get(&[l, k, i, j])).sum::<f64>();
    let mut worst = 0.0f64;
    for h in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((low(h, k, i, j) + low(k, h, i, j)).abs());
                    worst = worst.max((hh.get(&[h, k, i, j]) + hh.get(&[h, k, j, i])).abs());
                }
            }
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hh_curvature_symmetries(x0 in 0.0f64..6.28, x1 in 0.0f64..6.28, a in 0.0f64..6.28) {
        let s = family("wavy-randers-torus");
        let y = [a.cos(), a.sin()];
        prop_assert!(lowered_antisymmetry(&s, &[x0, x1], &y) < 1e-10);
    }

    #[test]
    fn flag_tensor_consistency(x0 in 0.0f64..6.28, x1 in 0.0f64..6.28, a in 0.0f64..6.28) {
        for id in ["wavy-randers-torus", "conformal-torus", "riemannian-sphere"] {
            let s = family(id);
            let x = [x0.clamp(0.1, 3.0), x1];
            let y = [a.cos(), a.sin()];
            let fc = flag_curvature_tensor(&s, &x, &y).unwrap();
            prop_assert!(fc.contraction_defect < 1e-10, "{id}: {}", fc.contraction_defect);
            prop_assert!(fc.antisymmetry_defect < 1e-12);
            // ℓ_i R^i_jk = 0
            let ell = s.hilbert_form(&x, &y).unwrap();
            for j in 0..2 {
                for k in 0..2 {
                    let c: f64 = (0..2).map(|i| ell.data[i] * fc.value.get(&[i, j, k])).sum();
                    prop_assert!(c.abs() < 1e-10, "{id}");
                }
            }
        }
    }
}

#[test]
fn ricci_identity_for_catalog_fields() {
    let mut r = rng(14);
    for id in ["riemannian-sphere", "conformal-torus", "wavy-randers-torus", "quartic-torus", "euclidean-3"] {
        let s = family(id);
        for seed in 0..5 {
            let field = builtin_vector_field(&format!("random:{seed}"), s.dim).unwrap();
            let x = s.chart.sample(&mut r);
            let y: Vec<f64> = (0..s.dim).map(|_| r.gen_range(-1.0..1.0)).collect();
            let (res, _) = ricci_identity_residual(&s, &field, &x, &y).unwrap();
            assert!(res.max_abs() < 1e-8, "{id} seed {seed}: {}", res.max_abs());
        }
    }
}

#[test]
fn hv_curvature_of_a_varying_randers_metric() {
    let s = family("wavy-randers-torus");
    let (x, y) = ([0.5, 1.5], [0.6, 0.8]);
    let p = hv_curvature(&s, &x, &y, true).unwrap();
    assert!(p.max_abs() > 1e-4 && p.max_abs().is_finite());
    // metric compatibility makes P_hkij skew in (h, k)
    let g = s.fundamental_tensor(&x, &y).unwrap();
    let low = |h: usize, k: usize, i: usize, j: usize| (0..2).map(|l| g.get(&[h, l]) * p.get(&[l, k, i, j])).sum::<f64>();
    for h in 0..2 {
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((low(h, k, i, j) + low(k, h, i, j)).abs() < 1e-10);
                }
            }
        }
    }
}
