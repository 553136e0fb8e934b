mod common;

use common::{all_families, family, rel};
use finsler_core::connection::{
    cartan_coefficients, delta_derivative, h_covariant_derivative, nabla_0, nonlinear_connection, spray,
    v_covariant_derivative, DiffPath, FinslerFunction, FinslerSquared, FnField, GeometricField, StructureField,
};
use finsler_core::{fd_partial, JetRequest, Slot, Structure64, TensorField, Tower};

fn sample_points(s: &Structure64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = common::rng(7);
    (0..4)
        .map(|k| {
            let x = s.chart.sample(&mut rng);
            let y = (0..s.dim).map(|i| ((k + 1) as f64 * 0.7 + i as f64 * 1.9).cos()).collect();
            (x, y)
        })
        .collect()
}

/// `G^i = ¼ g^il (y^k ∂²F²/∂x^k∂y^l − ∂F²/∂x^l)` from difference quotients.
fn spray_oracle(s: &Structure64, x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = s.dim;
    let f2 = FinslerSquared(s);
    let d = |xo: Vec<u8>, yo: Vec<u8>| fd_partial(&f2, &JetRequest::new(x.to_vec(), y.to_vec(), xo, yo), None).unwrap();
    let unit = |k: usize| -> Vec<u8> { (0..n).map(|i| (i == k) as u8).collect() };
    let w: Vec<f64> = (0..n)
        .map(|l| {
            let mixed: f64 = (0..n).map(|k| y[k] * d(unit(k), unit(l))).sum();
            mixed - d(unit(l), vec![0; n])
        })
        .collect();
    let ginv = s.inverse_metric(x, y).unwrap();
    (0..n).map(|i| 0.25 * (0..n).map(|l| ginv.get(&[i, l]) * w[l]).sum::<f64>()).collect()
}

#[test]
fn spray_matches_difference_oracle() {
    for (id, s) in all_families() {
        for (x, y) in sample_points(&s) {
            let g = spray(&s, &x, &y).unwrap();
            let want = spray_oracle(&s, &x, &y);
            for i in 0..s.dim {
                assert!(rel(g.data[i], want[i]) < 1e-6, "{id} G^{i}: {} vs {}", g.data[i], want[i]);
            }
        }
    }
}

#[test]
fn nonlinear_connection_is_the_spray_gradient() {
    let h = 1e-5;
    for id in ["riemannian-sphere", "wavy-randers-torus", "quartic-torus"] {
        let s = family(id);
        for (x, y) in sample_points(&s) {
            let nl = nonlinear_connection(&s, &x, &y).unwrap();
            for j in 0..s.dim {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[j] += h;
                ym[j] -= h;
                let gp = spray(&s, &x, &yp).unwrap();
                let gm = spray(&s, &x, &ym).unwrap();
                for i in 0..s.dim {
                    let fd = (gp.data[i] - gm.data[i]) / (2.0 * h);
                    assert!(rel(nl.get(&[i, j]), fd) < 1e-7, "{id} N^{i}_{j}");
                }
            }
        }
    }
}

#[test]
fn sphere_christoffel_symbols() {
    let s = family("riemannian-sphere");
    let th: f64 = 1.2;
    let c = cartan_coefficients(&s, &[th, 0.4], &[0.3, -0.8]).unwrap();
    let (sin, cos) = th.sin_cos();
    let want = |i: usize, j: usize, k: usize| match (i, j, k) {
        (0, 1, 1) => -sin * cos,
        (1, 0, 1) | (1, 1, 0) => cos / sin,
        _ => 0.0,
    };
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                assert!((c.gamma.get(&[i, j, k]) - want(i, j, k)).abs() < 1e-12, "Γ^{i}_{j}{k}");
            }
        }
    }
    assert!(c.cv.max_abs() < 1e-14);
}

#[test]
fn homogeneity_of_connection_data() {
    let lam = 3.0;
    for (id, s) in all_families() {
        for (x, y) in sample_points(&s) {
            let ly: Vec<f64> = y.iter().map(|v| v * lam).collect();
            let a = cartan_coefficients(&s, &x, &y).unwrap();
            let b = cartan_coefficients(&s, &x, &ly).unwrap();
            // G is 2-homogeneous, N is 1-homogeneous, Γ is 0-homogeneous in y
            for (p, q) in a.spray.data.iter().zip(&b.spray.data) {
                assert!(rel(*q, lam * lam * p) < 1e-10, "{id}");
            }
            for (p, q) in a.nl.data.iter().zip(&b.nl.data) {
                assert!(rel(*q, lam * p) < 1e-10, "{id}");
            }
            assert!(a.gamma.max_diff(&b.gamma) < 1e-10 * (1.0 + a.gamma.max_abs()), "{id}");
            // Euler: 2G^i = N^i_j y^j
            for i in 0..s.dim {
                let ny: f64 = (0..s.dim).map(|j| a.nl.get(&[i, j]) * y[j]).sum();
                assert!(rel(ny, 2.0 * a.spray.data[i]) < 1e-10, "{id}");
            }
        }
    }
}

#[test]
fn horizontal_derivative_of_f_vanishes() {
    for (id, s) in all_families() {
        for (x, y) in sample_points(&s) {
            for i in 0..s.dim {
                let d = delta_derivative(&s, &FinslerFunction(&s), &x, &y, i).unwrap();
                assert!(d.abs() < 1e-11, "{id} δ_{i}F = {d}");
            }
        }
    }
}

#[test]
fn nonlinear_connection_is_contracted_christoffel() {
    for (id, s) in all_families() {
        for (x, y) in sample_points(&s) {
            let c = cartan_coefficients(&s, &x, &y).unwrap();
            assert!(c.nonlinear_defect() < 1e-10, "{id}: {}", c.nonlinear_defect());
        }
    }
}

#[test]
fn metric_compatibility() {
    for (id, s) in all_families() {
        for kind in [GeometricField::Metric, GeometricField::InverseMetric, GeometricField::Kronecker] {
            let field = StructureField { structure: &s, kind: kind.clone() };
            for (x, y) in sample_points(&s) {
                let h = h_covariant_derivative(&s, &field, &x, &y).unwrap();
                assert_eq!(h.path, DiffPath::Jets);
                assert!(h.value.max_abs() < 1e-10, "{id} {kind:?} h: {}", h.value.max_abs());
                let v = v_covariant_derivative(&s, &field, &x, &y).unwrap();
                assert!(v.value.max_abs() < 1e-10, "{id} {kind:?} v: {}", v.value.max_abs());
            }
        }
    }
}

#[test]
fn hilbert_form_is_horizontally_parallel() {
    for (id, s) in all_families() {
        let field = StructureField { structure: &s, kind: GeometricField::Hilbert };
        for (x, y) in sample_points(&s) {
            let h = h_covariant_derivative(&s, &field, &x, &y).unwrap();
            assert!(h.value.max_abs() < 1e-10, "{id}: {}", h.value.max_abs());
        }
    }
}

#[test]
fn opaque_fields_fall_back_to_differences() {
    let s = family("wavy-randers-torus");
    let s2 = s.clone();
    let opaque = FnField::new(2, vec![Slot::Lower, Slot::Lower], move |x, u| Ok(s2.fundamental_tensor(x, u)?.data));
    let native = StructureField { structure: &s, kind: GeometricField::Metric };
    let perturbed = FnField::new(2, vec![Slot::Lower], |x: &[f64], u: &[f64]| Ok(vec![x[0].sin() * u[1], x[1].cos()]));
    for (x, y) in sample_points(&s) {
        let a = h_covariant_derivative(&s, &opaque, &x, &y).unwrap();
        assert_eq!(a.path, DiffPath::FiniteDifference);
        let b = h_covariant_derivative(&s, &native, &x, &y).unwrap();
        assert!(a.value.max_diff(&b.value) < 1e-6, "{}", a.value.max_diff(&b.value));
        let z = nabla_0(&s, &perturbed, &x, &y).unwrap();
        assert!(z.value.max_abs() > 1e-3);
    }
}

#[test]
fn leibniz_rule_for_products() {
    // ∇(ℓ ⊗ ℓ) = ∇ℓ ⊗ ℓ + ℓ ⊗ ∇ℓ with a non-parallel factor swapped in
    let s = family("quartic-torus");
    let w = FnField::new(2, vec![Slot::Lower], |x: &[f64], u: &[f64]| {
        Ok(vec![x[0].sin() + u[0] * u[1], x[1].cos() * u[0]])
    });
    let s2 = s.clone();
    let ww = FnField::new(2, vec![Slot::Lower, Slot::Lower], move |x: &[f64], u: &[f64]| {
        let a = [x[0].sin() + u[0] * u[1], x[1].cos() * u[0]];
        let ell = s2.hilbert_form(x, u)?.data;
        Ok((0..4).map(|k| a[k / 2] * ell[k % 2]).collect())
    });
    let ell = StructureField { structure: &s, kind: GeometricField::Hilbert };
    for (x, y) in sample_points(&s) {
        let dw = h_covariant_derivative(&s, &w, &x, &y).unwrap().value;
        let dl = h_covariant_derivative(&s, &ell, &x, &y).unwrap().value;
        let dww = h_covariant_derivative(&s, &ww, &x, &y).unwrap().value;
        let f = s.eval_f(&x, &y).unwrap();
        let u: Vec<f64> = y.iter().map(|v| v / f).collect();
        let wv = w.eval(&s, &x, &u).unwrap();
        let lv = s.hilbert_form(&x, &u).unwrap().data;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let want = dw.get(&[k, i]) * lv[j] + wv[i] * dl.get(&[k, j]);
                    assert!((dww.get(&[k, i, j]) - want).abs() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn rebased_tower_matches_fresh_tower() {
    let s = family("randers-torus");
    let y = [0.3, 0.9];
    let a = Tower::new(&s, &[0.1, 0.2], &y, 4).unwrap();
    let b = a.rebased(&[2.0, 5.0]);
    let c = Tower::new(&s, &[2.0, 5.0], &y, 4).unwrap();
    let gb = b.geometry().g.to_value(b.x(), b.y()).unwrap();
    let gc = c.geometry().g.to_value(c.x(), c.y()).unwrap();
    assert_eq!(gb.data, gc.data);
    assert_eq!(b.x(), c.x());
}
