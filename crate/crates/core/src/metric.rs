//! Finsler structures and the zeroth layer of the tensor tower: `F`, the
//! fundamental tensor, its inverse, the Cartan tensor and its trace, and the
//! Hilbert form.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::fields::TrigPoly;
use crate::jets::Jet;
use crate::linalg;
use crate::scalar::{Real, Scalar};
use crate::tensor::{Slot, TensorValue};

/// Points within this distance of the indicatrix are accepted as is.
pub const INDICATRIX_TOL: f64 = 1e-10;
/// Points within this distance are silently re-normalized; farther ones are rejected.
pub const RENORMALIZE_TOL: f64 = 1e-6;

/// Coordinate box of a single-chart manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct ChartSpec<T> {
    pub bounds: Vec<[T; 2]>,
    pub periodic: Vec<bool>,
    #[serde(default)]
    pub excluded_margin: Vec<T>,
}

impl<T: Real> ChartSpec<T> {
    /// Fully periodic box `[0, 2π)^n`.
    pub fn torus(n: usize) -> Self {
        ChartSpec {
            bounds: vec![[T::zero(), T::TAU()]; n],
            periodic: vec![true; n],
            excluded_margin: vec![T::zero(); n],
        }
    }

    /// `(θ, φ) ∈ [0, π] × [0, 2π)` with the poles cut away by `margin`.
    pub fn sphere(margin: T) -> Self {
        ChartSpec {
            bounds: vec![[T::zero(), T::PI()], [T::zero(), T::TAU()]],
            periodic: vec![false, true],
            excluded_margin: vec![margin, T::zero()],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn margin(&self, axis: usize) -> T {
        self.excluded_margin.get(axis).copied().unwrap_or(T::zero())
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.bounds.len() != dim || self.periodic.len() != dim {
            return Err(FinslerError::InvalidStructure(format!(
                "chart has {} axes but the structure has dimension {dim}",
                self.bounds.len()
            )));
        }
        if !self.excluded_margin.is_empty() && self.excluded_margin.len() != dim {
            return Err(FinslerError::InvalidStructure("excluded_margin length mismatch".into()));
        }
        for axis in 0..dim {
            let [lo, hi] = self.bounds[axis];
            if !(lo < hi) {
                return Err(FinslerError::InvalidStructure(format!("chart axis {axis} has an empty interval")));
            }
            let m = self.margin(axis);
            if m < T::zero() || !(lo + m + m < hi) {
                return Err(FinslerError::InvalidStructure(format!(
                    "excluded margin on axis {axis} does not leave an interior"
                )));
            }
        }
        Ok(())
    }

    /// Periodic axes accept any coordinate; the others must lie in the closed interval.
    pub fn check(&self, x: &[T]) -> Result<()> {
        for (axis, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(FinslerError::OutOfChart {
                    axis,
                    value: v.to_f64_lossy(),
                });
            }
            if self.periodic[axis] {
                continue;
            }
            let [lo, hi] = self.bounds[axis];
            if v < lo || v > hi {
                return Err(FinslerError::OutOfChart {
                    axis,
                    value: v.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    /// Uniform sample from the chart interior (margins respected).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<T> {
        (0..self.dim())
            .map(|axis| {
                let [lo, hi] = self.bounds[axis];
                let m = self.margin(axis);
                let (lo, hi) = (lo + m, hi - m);
                let u: f64 = rng.gen_range(0.0..1.0);
                lo + (hi - lo) * T::lit(u)
            })
            .collect()
    }
}

/// Smooth field of symmetric matrices `a_ij(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MatrixField<T> {
    Constant { value: Vec<Vec<T>> },
    /// `diag(r², r² sin²θ)` in the `(θ, φ)` chart.
    RoundSphere { radius: T },
    /// `exp(2σ(x)) · base`.
    Conformal { base: Vec<Vec<T>>, log_scale: TrigPoly<T> },
}

impl<T: Real> MatrixField<T> {
    pub fn identity(n: usize) -> Self {
        MatrixField::Constant {
            value: (0..n)
                .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
                .collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            MatrixField::Constant { .. } => true,
            MatrixField::RoundSphere { .. } => false,
            MatrixField::Conformal { log_scale, .. } => log_scale.is_constant(),
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        let ok = match self {
            MatrixField::Constant { value } | MatrixField::Conformal { base: value, .. } => {
                value.len() == n && value.iter().all(|r| r.len() == n)
            }
            MatrixField::RoundSphere { .. } => n == 2,
        };
        if ok {
            Ok(())
        } else {
            Err(FinslerError::InvalidStructure(format!("matrix field does not have shape {n}x{n}")))
        }
    }

    /// Row-major entries at `x`.
    pub fn eval<S: Scalar<T>>(&self, x: &[S], n: usize) -> Vec<S> {
        match self {
            MatrixField::Constant { value } => value.iter().flatten().map(|&v| S::from_real(v)).collect(),
            MatrixField::RoundSphere { radius } => {
                let r2 = *radius * *radius;
                let s = x[0].sin();
                vec![
                    S::from_real(r2),
                    S::from_real(T::zero()),
                    S::from_real(T::zero()),
                    s.clone() * s * r2,
                ]
            }
            MatrixField::Conformal { base, log_scale } => {
                let scale = (log_scale.eval(x) * T::lit(2.0)).exp();
                let mut out = Vec::with_capacity(n * n);
                for row in base {
                    for &v in row {
                        out.push(scale.clone() * v);
                    }
                }
                out
            }
        }
    }
}

/// Smooth covector field `b_i(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CovectorField<T> {
    Constant { value: Vec<T> },
    Trig { components: Vec<TrigPoly<T>> },
}

impl<T: Real> CovectorField<T> {
    pub fn is_constant(&self) -> bool {
        match self {
            CovectorField::Constant { .. } => true,
            CovectorField::Trig { components } => components.iter().all(|c| c.is_constant()),
        }
    }

    fn len(&self) -> usize {
        match self {
            CovectorField::Constant { value } => value.len(),
            CovectorField::Trig { components } => components.len(),
        }
    }

    pub fn eval<S: Scalar<T>>(&self, x: &[S]) -> Vec<S> {
        match self {
            CovectorField::Constant { value } => value.iter().map(|&v| S::from_real(v)).collect(),
            CovectorField::Trig { components } => components.iter().map(|c| c.eval(x)).collect(),
        }
    }
}

/// Custom Finsler functions available by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
#[serde(tag = "expr", rename_all = "kebab-case")]
pub enum CustomMetric<T> {
    /// `F = sqrt(|y|² + ε Σ (y^i)⁴ / |y|²)`, an x-independent Minkowski norm.
    Quartic { eps: T },
}

impl<T: Real> CustomMetric<T> {
    pub fn id(&self) -> &'static str {
        match self {
            CustomMetric::Quartic { .. } => "quartic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family<T> {
    Euclidean,
    Riemannian { a: MatrixField<T> },
    Randers { a: MatrixField<T>, b: CovectorField<T> },
    Custom(CustomMetric<T>),
}

/// A Finsler structure on a single chart.
#[derive(Debug, Clone, PartialEq)]
pub struct FinslerStructure<T> {
    pub family: Family<T>,
    pub dim: usize,
    pub chart: ChartSpec<T>,
}

fn quad_form<T: Real, S: Scalar<T>>(a: &[S], y: &[S]) -> S {
    let n = y.len();
    let mut acc = S::from_real(T::zero());
    for i in 0..n {
        for j in 0..n {
            acc = acc + a[i * n + j].clone() * y[i].clone() * y[j].clone();
        }
    }
    acc
}

impl<T: Real> FinslerStructure<T> {
    pub fn new(family: Family<T>, dim: usize, chart: ChartSpec<T>) -> Result<Self> {
        let s = FinslerStructure { family, dim, chart };
        s.validate()?;
        Ok(s)
    }

    pub fn euclidean_torus(n: usize) -> Self {
        FinslerStructure {
            family: Family::Euclidean,
            dim: n,
            chart: ChartSpec::torus(n),
        }
    }

    /// Unit round 2-sphere in the `(θ, φ)` chart.
    pub fn round_sphere(margin: T) -> Self {
        FinslerStructure {
            family: Family::Riemannian {
                a: MatrixField::RoundSphere { radius: T::one() },
            },
            dim: 2,
            chart: ChartSpec::sphere(margin),
        }
    }

    /// Randers structure `|y| + b·y` with constant `b` on the flat torus.
    pub fn randers_torus(b: &[T]) -> Self {
        let n = b.len();
        FinslerStructure {
            family: Family::Randers {
                a: MatrixField::identity(n),
                b: CovectorField::Constant { value: b.to_vec() },
            },
            dim: n,
            chart: ChartSpec::torus(n),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            Family::Euclidean => "euclidean",
            Family::Riemannian { .. } => "riemannian",
            Family::Randers { .. } => "randers",
            Family::Custom(_) => "custom",
        }
    }

    /// True when `F` does not depend on the base point; every spray and
    /// connection coefficient then vanishes identically.
    pub fn is_x_independent(&self) -> bool {
        match &self.family {
            Family::Euclidean | Family::Custom(CustomMetric::Quartic { .. }) => true,
            Family::Riemannian { a } => a.is_constant(),
            Family::Randers { a, b } => a.is_constant() && b.is_constant(),
        }
    }

    pub fn is_riemannian(&self) -> bool {
        matches!(self.family, Family::Euclidean | Family::Riemannian { .. })
    }

    /// The Finsler function, generic over the evaluation scalar. No checks.
    pub fn f<S: Scalar<T>>(&self, x: &[S], y: &[S]) -> S {
        let n = self.dim;
        match &self.family {
            Family::Euclidean => {
                let mut r2 = S::from_real(T::zero());
                for yi in y {
                    r2 = r2 + yi.clone() * yi.clone();
                }
                r2.sqrt()
            }
            Family::Riemannian { a } => quad_form(&a.eval(x, n), y).sqrt(),
            Family::Randers { a, b } => {
                let alpha = quad_form(&a.eval(x, n), y).sqrt();
                let bv = b.eval(x);
                let mut beta = S::from_real(T::zero());
                for (bi, yi) in bv.into_iter().zip(y) {
                    beta = beta + bi * yi.clone();
                }
                alpha + beta
            }
            Family::Custom(CustomMetric::Quartic { eps }) => {
                let mut r2 = S::from_real(T::zero());
                let mut q4 = S::from_real(T::zero());
                for yi in y {
                    let sq = yi.clone() * yi.clone();
                    q4 = q4 + sq.clone() * sq.clone();
                    r2 = r2 + sq;
                }
                (r2.clone() + q4 * *eps / r2).sqrt()
            }
        }
    }

    /// `F²`, generic.
    pub fn f2<S: Scalar<T>>(&self, x: &[S], y: &[S]) -> S {
        match &self.family {
            Family::Euclidean => {
                let mut r2 = S::from_real(T::zero());
                for yi in y {
                    r2 = r2 + yi.clone() * yi.clone();
                }
                r2
            }
            Family::Riemannian { a } => quad_form(&a.eval(x, self.dim), y),
            _ => {
                let f = self.f(x, y);
                f.clone() * f
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(FinslerError::InvalidStructure("dimension must be positive".into()));
        }
        self.chart.validate(n)?;
        match &self.family {
            Family::Euclidean | Family::Custom(_) => {}
            Family::Riemannian { a } => {
                a.check_dim(n)?;
                self.check_matrix_field(a)?;
            }
            Family::Randers { a, b } => {
                a.check_dim(n)?;
                if b.len() != n {
                    return Err(FinslerError::InvalidStructure(format!("b must have {n} components")));
                }
                self.check_matrix_field(a)?;
                for x in self.validation_samples(a.is_constant() && b.is_constant()) {
                    let am = a.eval::<T>(&x, n);
                    let ainv = linalg::spd_inverse(&am, n)?;
                    let bv = b.eval::<T>(&x);
                    let mut norm2 = T::zero();
                    for i in 0..n {
                        for j in 0..n {
                            norm2 += ainv[i * n + j] * bv[i] * bv[j];
                        }
                    }
                    if !(norm2.sqrt() < T::one()) {
                        return Err(FinslerError::InvalidStructure(format!(
                            "Randers invariant violated: a-norm of b is {} (must be < 1)",
                            norm2.sqrt()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_matrix_field(&self, a: &MatrixField<T>) -> Result<()> {
        let n = self.dim;
        for x in self.validation_samples(a.is_constant()) {
            let am = a.eval::<T>(&x, n);
            for i in 0..n {
                for j in 0..i {
                    if (am[i * n + j] - am[j * n + i]).abs() > T::lit(1e-12) {
                        return Err(FinslerError::InvalidStructure("matrix field is not symmetric".into()));
                    }
                }
            }
            linalg::cholesky(&am, n)?;
        }
        Ok(())
    }

    /// Deterministic lattice over the chart interior used by `validate`.
    fn validation_samples(&self, constant: bool) -> Vec<Vec<T>> {
        let n = self.dim;
        if constant {
            return vec![self
                .chart
                .bounds
                .iter()
                .map(|[lo, hi]| (*lo + *hi) * T::lit(0.5))
                .collect()];
        }
        let per_axis: usize = if n <= 2 { 24 } else { 10 };
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut k| {
                (0..n)
                    .map(|axis| {
                        let idx = k % per_axis;
                        k /= per_axis;
                        let [lo, hi] = self.chart.bounds[axis];
                        let m = self.chart.margin(axis);
                        let t = T::lit((idx as f64 + 0.5) / per_axis as f64);
                        lo + m + (hi - lo - m - m) * t
                    })
                    .collect()
            })
            .collect()
    }

    pub fn check_point(&self, x: &[T], y: &[T]) -> Result<()> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(FinslerError::Domain(format!(
                "point has dimensions ({}, {}) but the structure has dimension {}",
                x.len(),
                y.len(),
                self.dim
            )));
        }
        if y.iter().all(|v| *v == T::zero()) {
            return Err(FinslerError::ZeroVector);
        }
        self.chart.check(x)
    }

    pub fn eval_f(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check_point(x, y)?;
        let v = self.f(x, y);
        if !(v > T::zero()) || !v.is_finite() {
            return Err(FinslerError::InvalidStructure(format!("F = {v} is not positive")));
        }
        Ok(v)
    }

    /// Jet of `F²` in the fiber variables only (x held fixed).
    fn f2_fiber_jet(&self, x: &[T], y: &[T], order: usize) -> Jet<T> {
        let n = self.dim;
        let xs: Vec<Jet<T>> = x.iter().map(|&v| Jet::constant(v)).collect();
        let ys: Vec<Jet<T>> = y.iter().enumerate().map(|(i, &v)| Jet::variable(n, order, v, i)).collect();
        self.f2(&xs, &ys)
    }

    fn fiber_partial(&self, jet: &Jet<T>, dirs: &[usize]) -> T {
        let mut alpha = vec![0u8; self.dim];
        for &d in dirs {
            alpha[d] += 1;
        }
        jet.partial(&alpha).expect("jet order covers the request")
    }

    fn g_matrix(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        self.eval_f(x, y)?;
        let n = self.dim;
        let f2 = self.f2_fiber_jet(x, y, 2);
        let mut g = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = self.fiber_partial(&f2, &[i, j]) * T::lit(0.5);
            }
        }
        linalg::cholesky(&g, n)?;
        Ok(g)
    }

    /// `g_ij = ½ ∂²F²/∂y^i∂y^j`.
    pub fn fundamental_tensor(&self, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
        let g = self.g_matrix(x, y)?;
        TensorValue::new(self.dim, vec![Slot::Lower, Slot::Lower], g, x, y)
    }

    /// `g^ij`.
    pub fn inverse_metric(&self, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
        let g = self.g_matrix(x, y)?;
        let inv = linalg::spd_inverse(&g, self.dim)?;
        TensorValue::new(self.dim, vec![Slot::Upper, Slot::Upper], inv, x, y)
    }

    /// `C_kij = ½ ∂g_ij/∂y^k`.
    pub fn cartan_tensor(&self, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
        self.eval_f(x, y)?;
        let n = self.dim;
        let f2 = self.f2_fiber_jet(x, y, 3);
        let mut c = vec![T::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    c[(k * n + i) * n + j] = self.fiber_partial(&f2, &[k, i, j]) * T::lit(0.25);
                }
            }
        }
        TensorValue::new(n, vec![Slot::Lower; 3], c, x, y)
    }

    /// `T_j = g^{ik} C_ikj`.
    pub fn cartan_trace(&self, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
        let n = self.dim;
        let ginv = self.inverse_metric(x, y)?;
        let c = self.cartan_tensor(x, y)?;
        let t = (0..n)
            .map(|j| {
                let mut s = T::zero();
                for i in 0..n {
                    for k in 0..n {
                        s += ginv.get(&[i, k]) * c.get(&[i, k, j]);
                    }
                }
                s
            })
            .collect();
        TensorValue::new(n, vec![Slot::Lower], t, x, y)
    }

    /// `ℓ_i = ∂F/∂y^i`.
    pub fn hilbert_form(&self, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
        self.eval_f(x, y)?;
        let n = self.dim;
        let xs: Vec<Jet<T>> = x.iter().map(|&v| Jet::constant(v)).collect();
        let ys: Vec<Jet<T>> = y.iter().enumerate().map(|(i, &v)| Jet::variable(n, 1, v, i)).collect();
        let f = self.f(&xs, &ys);
        let ell = (0..n).map(|i| self.fiber_partial(&f, &[i])).collect();
        TensorValue::new(n, vec![Slot::Lower], ell, x, y)
    }

    /// Radially project a nonzero tangent vector onto the indicatrix `F(x, ·) = 1`.
    pub fn normalize_to_indicatrix(&self, x: &[T], u: &[T]) -> Result<SpherePoint<T>> {
        let f = self.eval_f(x, u)?;
        let y: Vec<T> = u.iter().map(|&v| v / f).collect();
        Ok(SpherePoint { x: x.to_vec(), y })
    }

    /// Random point of `SM` over the chart interior.
    pub fn random_sphere_point<R: Rng>(&self, rng: &mut R) -> SpherePoint<T> {
        loop {
            let x = self.chart.sample(rng);
            let u: Vec<T> = (0..self.dim).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
            let norm: T = u.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm < T::lit(0.1) {
                continue;
            }
            if let Ok(p) = self.normalize_to_indicatrix(&x, &u) {
                return p;
            }
        }
    }
}

/// A point `z = (x, y)` of the sphere bundle, `F(x, y) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpherePoint<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> SpherePoint<T> {
    /// Accepts points within [`RENORMALIZE_TOL`] of the indicatrix, rescaling `y`
    /// when the deviation exceeds [`INDICATRIX_TOL`].
    pub fn new(s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<Self> {
        let f = s.eval_f(x, y)?;
        let dev = (f - T::one()).abs();
        if dev <= T::lit(INDICATRIX_TOL) {
            return Ok(SpherePoint {
                x: x.to_vec(),
                y: y.to_vec(),
            });
        }
        if dev <= T::lit(RENORMALIZE_TOL) {
            return s.normalize_to_indicatrix(x, y);
        }
        Err(FinslerError::Domain(format!("point is off the indicatrix: F = {f}")))
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}
