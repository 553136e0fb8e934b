//! Quadrature over the sphere bundle `SM`.
//!
//! `SM` is parameterized by `z(x, θ) = (x, u(θ)/F(x, u(θ)))` with `u` the
//! standard angular direction map. The volume element
//! `η = (−1)^{n(n−1)/2}/(n−1)! ω∧(dω)^{n−1}`, `ω = ℓ_i dx^i`, is pulled back
//! through `z`. Because `ℓ` is 0-homogeneous in `y`, the pulled-back
//! coefficients are `ℓ_i(x, u(θ))`, so a second-order jet of `F` at `(x, u)`
//! gives `dω` exactly.
//!
//! Reductions are deterministic: per-base-node sums are computed in parallel
//! but combined in a fixed order, so results do not depend on thread count.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::connection::Tower;
use crate::error::{FinslerError, Result};
use crate::fields::VectorField;
use crate::forms::{
    horizontal_codifferential, horizontal_differential, horizontal_laplacian, inner_values, vector_field_terms,
    HorizontalForm, IDENTITY_ORDER,
};
use crate::jets::seed_point;
use crate::metric::{ChartSpec, FinslerStructure};
use crate::scalar::Real;
use crate::tensor::{all_indices, permutation_sign};

/// Margin cut from each end of the polar fiber angle when `n = 3`.
pub const POLAR_MARGIN: f64 = 1e-3;
pub const MIN_NODES: usize = 8;
const GL_PANEL: usize = 16;

/// One axis of a tensor-product rule.
#[derive(Debug, Clone, Serialize)]
pub struct Axis<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub periodic: bool,
}

impl<T: Real> Axis<T> {
    /// Trapezoid (rectangle) rule on a periodic interval.
    pub fn periodic(lo: T, hi: T, count: usize) -> Result<Self> {
        check_count(count)?;
        let h = (hi - lo) / T::lit(count as f64);
        Ok(Axis {
            nodes: (0..count).map(|k| lo + h * T::lit(k as f64)).collect(),
            weights: vec![h; count],
            periodic: true,
        })
    }

    /// Composite Gauss–Legendre rule, panels of 16 points when `count` allows.
    pub fn gauss_legendre(lo: T, hi: T, count: usize) -> Result<Self> {
        check_count(count)?;
        if !(hi > lo) {
            return Err(FinslerError::Grid(format!("empty interval [{lo}, {hi}]")));
        }
        let (panels, per) = if count > GL_PANEL && count % GL_PANEL == 0 {
            (count / GL_PANEL, GL_PANEL)
        } else {
            (1, count)
        };
        let (xs, ws) = legendre_rule(per);
        let width = (hi - lo) / T::lit(panels as f64);
        let half = width * T::lit(0.5);
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for p in 0..panels {
            let mid = lo + width * T::lit(p as f64) + half;
            for (x, w) in xs.iter().zip(&ws) {
                nodes.push(mid + half * T::lit(*x));
                weights.push(half * T::lit(*w));
            }
        }
        Ok(Axis {
            nodes,
            weights,
            periodic: false,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn check_count(count: usize) -> Result<()> {
    if count < MIN_NODES {
        return Err(FinslerError::Grid(format!("{count} nodes on an axis, at least {MIN_NODES} required")));
    }
    Ok(())
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration.
fn legendre_rule(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; m];
    let mut ws = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[m - 1 - i] = x;
        ws[i] = w;
        ws[m - 1 - i] = w;
    }
    (xs, ws)
}

/// Tensor-product grid over the chart and the fiber angles.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureGrid<T> {
    pub dim: usize,
    pub base_counts: Vec<usize>,
    pub fiber_counts: Vec<usize>,
    pub base: Vec<Axis<T>>,
    /// `n = 2`: `[angle]`; `n = 3`: `[azimuth, polar]`.
    pub fiber: Vec<Axis<T>>,
}

pub fn default_counts(n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    match n {
        2 => Ok((vec![32, 32], vec![64])),
        3 => Ok((vec![16, 16, 16], vec![32, 16])),
        _ => Err(FinslerError::DimensionUnsupported(n)),
    }
}

impl<T: Real> QuadratureGrid<T> {
    pub fn new(chart: &ChartSpec<T>, base_counts: &[usize], fiber_counts: &[usize]) -> Result<Self> {
        let n = chart.dim();
        if !(2..=3).contains(&n) {
            return Err(FinslerError::DimensionUnsupported(n));
        }
        if base_counts.len() != n || fiber_counts.len() != n - 1 {
            return Err(FinslerError::Grid(format!(
                "expected {n} base and {} fiber counts, got {} and {}",
                n - 1,
                base_counts.len(),
                fiber_counts.len()
            )));
        }
        let base = (0..n)
            .map(|a| {
                let [lo, hi] = chart.bounds[a];
                let m = chart.margin(a);
                if chart.periodic[a] {
                    Axis::periodic(lo, hi, base_counts[a])
                } else {
                    Axis::gauss_legendre(lo + m, hi - m, base_counts[a])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut fiber = vec![Axis::periodic(T::zero(), T::TAU(), fiber_counts[0])?];
        if n == 3 {
            let m = T::lit(POLAR_MARGIN);
            fiber.push(Axis::gauss_legendre(m, T::PI() - m, fiber_counts[1])?);
        }
        Ok(QuadratureGrid {
            dim: n,
            base_counts: base_counts.to_vec(),
            fiber_counts: fiber_counts.to_vec(),
            base,
            fiber,
        })
    }

    /// The default resolution for the structure's dimension.
    pub fn default_for(s: &FinslerStructure<T>) -> Result<Self> {
        let (b, f) = default_counts(s.dim)?;
        Self::new(&s.chart, &b, &f)
    }

    /// Same chart with every axis's node count multiplied by `factor`.
    pub fn refined(&self, chart: &ChartSpec<T>, factor: usize) -> Result<Self> {
        let b: Vec<usize> = self.base_counts.iter().map(|c| c * factor).collect();
        let f: Vec<usize> = self.fiber_counts.iter().map(|c| c * factor).collect();
        Self::new(chart, &b, &f)
    }

    pub fn base_len(&self) -> usize {
        self.base.iter().map(Axis::len).product()
    }

    pub fn fiber_len(&self) -> usize {
        self.fiber.iter().map(Axis::len).product()
    }

    pub fn node_count(&self) -> usize {
        self.base_len() * self.fiber_len()
    }

    fn product_node(axes: &[Axis<T>], mut k: usize) -> (Vec<T>, T) {
        let mut pt = vec![T::zero(); axes.len()];
        let mut w = T::one();
        for a in (0..axes.len()).rev() {
            let i = k % axes[a].len();
            k /= axes[a].len();
            pt[a] = axes[a].nodes[i];
            w *= axes[a].weights[i];
        }
        (pt, w)
    }

    /// Base point and weight of flat base index `k` (last axis fastest).
    pub fn base_node(&self, k: usize) -> (Vec<T>, T) {
        Self::product_node(&self.base, k)
    }

    /// Fiber angles and weight of flat fiber index `k`.
    pub fn fiber_node(&self, k: usize) -> (Vec<T>, T) {
        Self::product_node(&self.fiber, k)
    }
}

/// Direction `u(θ)` and its angle derivatives `∂u/∂θ_m`.
pub fn direction<T: Real>(angles: &[T]) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    match angles.len() {
        1 => {
            let (s, c) = angles[0].sin_cos();
            Ok((vec![c, s], vec![vec![-s, c]]))
        }
        2 => {
            let (sp, cp) = angles[0].sin_cos();
            let (st, ct) = angles[1].sin_cos();
            if st.abs() < T::lit(1e-12) {
                return Err(FinslerError::PoleSingularity(angles[1].to_f64_lossy()));
            }
            Ok((
                vec![st * cp, st * sp, ct],
                vec![vec![-st * sp, st * cp, T::zero()], vec![ct * cp, ct * sp, -st]],
            ))
        }
        k => Err(FinslerError::DimensionUnsupported(k + 1)),
    }
}

/// Pulled-back volume density at a node.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VolumeDensity<T> {
    /// Orientation-normalized, positive for valid structures.
    pub value: T,
    /// The top component of `η` in the `(x, θ)` coordinates, before normalization.
    pub raw: T,
}

fn signed_permutations(d: usize) -> &'static [(Vec<usize>, f64)] {
    static P3: OnceLock<Vec<(Vec<usize>, f64)>> = OnceLock::new();
    static P5: OnceLock<Vec<(Vec<usize>, f64)>> = OnceLock::new();
    let build = || {
        all_indices(d, d)
            .filter_map(|p| {
                let s = permutation_sign(&p);
                (s != 0).then(|| (p, s as f64))
            })
            .collect()
    };
    match d {
        3 => P3.get_or_init(build),
        5 => P5.get_or_init(build),
        _ => unreachable!("only n = 2, 3 reach here"),
    }
}

/// Sign making the Euclidean density positive in the `(x, θ)` orientation.
fn orientation(n: usize) -> f64 {
    match n {
        2 => 1.0,
        _ => -1.0,
    }
}

/// `η` at `(x, θ)`; `reverse` flips the direction of one fiber angle.
pub fn volume_density_oriented<T: Real>(
    s: &FinslerStructure<T>,
    x: &[T],
    angles: &[T],
    reverse: Option<usize>,
) -> Result<VolumeDensity<T>> {
    let n = s.dim;
    if !(2..=3).contains(&n) {
        return Err(FinslerError::DimensionUnsupported(n));
    }
    if angles.len() != n - 1 {
        return Err(FinslerError::Grid(format!("{} fiber angles for dimension {n}", angles.len())));
    }
    s.chart.check(x)?;
    let (u, mut du) = direction(angles)?;
    if let Some(r) = reverse {
        for v in &mut du[r] {
            *v = -*v;
        }
    }
    let (xs, ys) = seed_point(x, &u, 2);
    let f = s.f(&xs, &ys);
    let dim = 2 * n - 1;
    let mut alpha = vec![0u8; 2 * n];
    let mut second = |a: usize, b: usize| -> Result<T> {
        alpha.iter_mut().for_each(|e| *e = 0);
        alpha[a] += 1;
        alpha[b] += 1;
        f.partial(&alpha)
    };
    // ell[i] = F_{y_i}; dw[a][i] = ∂_{z_a} ω_i for the base slots i < n
    let ell: Vec<T> = (0..n).map(|i| f.d(n + i).value()).collect();
    let mut dw = vec![vec![T::zero(); n]; dim];
    for i in 0..n {
        for j in 0..n {
            dw[j][i] = second(j, n + i)?;
        }
        for m in 0..n - 1 {
            let mut acc = T::zero();
            for k in 0..n {
                acc += second(n + k, n + i)? * du[m][k];
            }
            dw[n + m][i] = acc;
        }
    }
    let omega = |a: usize| if a < n { ell[a] } else { T::zero() };
    let dwo = |a: usize, b: usize| if b < n { dw[a][b] } else { T::zero() };
    let beta = |a: usize, b: usize| dwo(a, b) - dwo(b, a);
    let mut top = T::zero();
    for (p, sign) in signed_permutations(dim) {
        let mut term = T::lit(*sign) * omega(p[0]);
        for k in 0..n - 1 {
            term *= beta(p[1 + 2 * k], p[2 + 2 * k]);
        }
        top += term;
    }
    let pairs = (n - 1) as i32;
    let fact: f64 = (1..n).map(|k| k as f64).product();
    let pref = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 } / fact;
    let raw = top * T::lit(pref / 2f64.powi(pairs));
    let value = raw * T::lit(orientation(n));
    if !(value > T::zero()) && reverse.is_none() {
        return Err(FinslerError::InvalidStructure(format!(
            "volume density {value} is not positive at x = {x:?}"
        )));
    }
    Ok(VolumeDensity { value, raw })
}

pub fn volume_density<T: Real>(s: &FinslerStructure<T>, x: &[T], angles: &[T]) -> Result<VolumeDensity<T>> {
    volume_density_oriented(s, x, angles, None)
}

/// Point on the indicatrix over `x` in the direction `u(θ)`.
fn fiber_point<T: Real>(s: &FinslerStructure<T>, x: &[T], angles: &[T]) -> Result<Vec<T>> {
    let (u, _) = direction(angles)?;
    Ok(s.normalize_to_indicatrix(x, &u)?.y)
}

struct FiberCache<T: Real> {
    y: Vec<T>,
    weight: T,
    tower: Option<Tower<T>>,
}

/// Integrate a vector of `width` scalars over `SM`.
///
/// `f` receives the node `(x, y)` and, when `tower_order` is set, a tower of
/// that order at the node. For x-independent structures the fiber geometry is
/// built once per fiber node and rebased along the base.
pub fn integrate_many<T, F>(
    s: &FinslerStructure<T>,
    grid: &QuadratureGrid<T>,
    tower_order: Option<usize>,
    width: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&[T], &[T], Option<&Tower<T>>) -> Result<Vec<T>> + Sync,
{
    if grid.dim != s.dim {
        return Err(FinslerError::Grid(format!(
            "grid of dimension {} used with a structure of dimension {}",
            grid.dim, s.dim
        )));
    }
    let nf = grid.fiber_len();
    let build_fiber = |x: &[T]| -> Result<Vec<FiberCache<T>>> {
        (0..nf)
            .map(|k| {
                let (angles, w) = grid.fiber_node(k);
                let y = fiber_point(s, x, &angles)?;
                let rho = volume_density(s, x, &angles)?.value;
                let tower = tower_order.map(|o| Tower::new(s, x, &y, o)).transpose()?;
                Ok(FiberCache {
                    y,
                    weight: w * rho,
                    tower,
                })
            })
            .collect()
    };
    let shared = if s.is_x_independent() {
        Some(build_fiber(&grid.base_node(0).0)?)
    } else {
        None
    };
    let per_base: Vec<Vec<T>> = (0..grid.base_len())
        .into_par_iter()
        .map(|b| -> Result<Vec<T>> {
            let (x, wb) = grid.base_node(b);
            let local;
            let fiber = match &shared {
                Some(c) => c,
                None => {
                    local = build_fiber(&x)?;
                    &local
                }
            };
            let mut acc = vec![T::zero(); width];
            for node in fiber {
                let rebased;
                let tw = match (&node.tower, &shared) {
                    (Some(t), Some(_)) => {
                        rebased = t.rebased(&x);
                        Some(&rebased)
                    }
                    (t, _) => t.as_ref(),
                };
                let vals = f(&x, &node.y, tw)?;
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a += node.weight * v;
                }
            }
            Ok(acc.into_iter().map(|a| a * wb).collect())
        })
        .collect::<Result<_>>()?;
    let mut total = vec![T::zero(); width];
    for row in per_base {
        for (t, v) in total.iter_mut().zip(row) {
            *t += v;
        }
    }
    Ok(total)
}

/// `∫_SM f η` for a scalar function of `(x, y)`.
pub fn integrate_scalar<T, F>(s: &FinslerStructure<T>, grid: &QuadratureGrid<T>, f: F) -> Result<T>
where
    T: Real,
    F: Fn(&[T], &[T]) -> Result<T> + Sync,
{
    Ok(integrate_many(s, grid, None, 1, |x, y, _| Ok(vec![f(x, y)?]))?[0])
}

/// `∫_SM η`.
pub fn total_volume<T: Real>(s: &FinslerStructure<T>, grid: &QuadratureGrid<T>) -> Result<T> {
    integrate_scalar(s, grid, |_, _| Ok(T::one()))
}

fn degree_check<T: Real>(a: &HorizontalForm<T>, b: &HorizontalForm<T>) -> Result<()> {
    if a.degree() != b.degree() {
        return Err(FinslerError::DegreeMismatch {
            left: a.degree(),
            right: b.degree(),
        });
    }
    Ok(())
}

/// Integrate several pointwise inner products `(φ_k, ψ_k)` in one pass.
pub fn inner_products<T: Real>(
    s: &FinslerStructure<T>,
    pairs: &[(&HorizontalForm<T>, &HorizontalForm<T>)],
    grid: &QuadratureGrid<T>,
) -> Result<Vec<T>> {
    for (a, b) in pairs {
        degree_check(a, b)?;
    }
    let order = pairs
        .iter()
        .map(|(a, b)| a.tower_order(0).max(b.tower_order(0)))
        .max()
        .unwrap_or(2);
    let n = s.dim;
    integrate_many(s, grid, Some(order), pairs.len(), |_, _, tw| {
        let tw = tw.expect("tower requested");
        let ginv = tw.geometry().ginv.values()?;
        pairs
            .iter()
            .map(|(a, b)| {
                let av = a.components(tw, 0)?.values()?;
                let bv = b.components(tw, 0)?.values()?;
                Ok(inner_values(&ginv, n, a.degree(), &av, &bv))
            })
            .collect()
    })
}

/// `(φ, ψ) = ∫_SM ⟨φ, ψ⟩ η`.
pub fn global_inner_product<T: Real>(
    s: &FinslerStructure<T>,
    phi: &HorizontalForm<T>,
    psi: &HorizontalForm<T>,
    grid: &QuadratureGrid<T>,
) -> Result<T> {
    Ok(inner_products(s, &[(phi, psi)], grid)?[0])
}

/// Result of the vanishing-divergence check.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport<T> {
    pub integral: T,
    pub norm: T,
    pub defect: T,
    pub warning: Option<String>,
}

/// `|∫ δ_Hπ η| / (1 + ‖π‖)` for a horizontal 1-form `π`.
pub fn divergence_integral_check<T: Real>(
    s: &FinslerStructure<T>,
    pi: &HorizontalForm<T>,
    grid: &QuadratureGrid<T>,
) -> Result<DivergenceReport<T>> {
    if pi.degree() != 1 {
        return Err(FinslerError::DegreeMismatch {
            left: pi.degree(),
            right: 1,
        });
    }
    let del = horizontal_codifferential(s, pi)?;
    let order = del.tower_order(0).max(pi.tower_order(0));
    let n = s.dim;
    let v = integrate_many(s, grid, Some(order), 2, |_, _, tw| {
        let tw = tw.expect("tower requested");
        let d = del.components(tw, 0)?.values()?[0];
        let p = pi.components(tw, 0)?.values()?;
        let ginv = tw.geometry().ginv.values()?;
        Ok(vec![d, inner_values(&ginv, n, 1, &p, &p)])
    })?;
    let norm = v[1].sqrt();
    let warning = (!s.chart.is_fully_periodic()).then(|| {
        "chart is not fully periodic: the integral picks up boundary flux through the excluded margins".to_string()
    });
    Ok(DivergenceReport {
        integral: v[0],
        norm,
        defect: v[0].abs() / (T::one() + norm),
        warning,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdjointnessReport<T> {
    /// `(d_Hφ, ψ)`
    pub lhs: T,
    /// `(φ, δ_Hψ)`
    pub rhs: T,
    pub defect: T,
}

/// `|(d_Hφ, ψ) − (φ, δ_Hψ)| / (1 + |(d_Hφ, ψ)|)`.
pub fn adjointness_defect<T: Real>(
    s: &FinslerStructure<T>,
    phi: &HorizontalForm<T>,
    psi: &HorizontalForm<T>,
    grid: &QuadratureGrid<T>,
) -> Result<AdjointnessReport<T>> {
    if psi.degree() != phi.degree() + 1 {
        return Err(FinslerError::DegreeMismatch {
            left: phi.degree() + 1,
            right: psi.degree(),
        });
    }
    let d = horizontal_differential(s, phi)?;
    let del = horizontal_codifferential(s, psi)?;
    let v = inner_products(s, &[(&d, psi), (phi, &del)], grid)?;
    Ok(AdjointnessReport {
        lhs: v[0],
        rhs: v[1],
        defect: (v[0] - v[1]).abs() / (T::one() + v[0].abs()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BochnerReport<T> {
    pub k_integral: T,
    pub grad_norm_integral: T,
    pub sum: T,
    /// `∫(δZ − δY)η`, which vanishes for every smooth `X` on closed charts.
    pub divergence_integral: T,
}

pub fn bochner_integral<T: Real>(
    s: &FinslerStructure<T>,
    x: &VectorField<T>,
    grid: &QuadratureGrid<T>,
) -> Result<BochnerReport<T>> {
    let v = integrate_many(s, grid, Some(IDENTITY_ORDER), 3, |_, _, tw| {
        let t = vector_field_terms(tw.expect("tower requested"), x)?;
        Ok(vec![t.k, t.grad_norm2, t.delta_z_minus_delta_y])
    })?;
    Ok(BochnerReport {
        k_integral: v[0],
        grad_norm_integral: v[1],
        sum: v[0] + v[1],
        divergence_integral: v[2],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicReport<T> {
    pub laplacian_norm: T,
    pub dh_norm: T,
    pub delta_h_norm: T,
    /// Threshold applied to `‖d_Hφ‖` and `‖δ_Hφ‖`.
    pub derived_tol: T,
    pub harmonic: bool,
    /// Whether `‖Δ_Hφ‖ ≤ tol ⇔ (‖d_Hφ‖ ≤ tol' and ‖δ_Hφ‖ ≤ tol')` held.
    pub equivalence_holds: bool,
    /// `|(Δ_Hφ, φ) − ‖d_Hφ‖² − ‖δ_Hφ‖²|`
    pub energy_defect: T,
}

/// Grid-dependent floor added to the derived threshold.
pub const HARMONIC_GRID_FLOOR: f64 = 1e-8;

/// L² norms of `Δ_Hφ`, `d_Hφ`, `δ_Hφ` and the harmonic verdict.
///
/// Since `(Δ_Hφ, φ) = ‖d_Hφ‖² + ‖δ_Hφ‖²`, a Laplacian norm at most `tol`
/// bounds both first-order norms by `√(tol ‖φ‖)`; `tol'` is that bound plus
/// a small quadrature floor.
pub fn is_h_harmonic<T: Real>(
    s: &FinslerStructure<T>,
    phi: &HorizontalForm<T>,
    grid: &QuadratureGrid<T>,
    tol: T,
) -> Result<HarmonicReport<T>> {
    let p = phi.degree();
    let lap = horizontal_laplacian(s, phi)?;
    let d = (p < s.dim).then(|| horizontal_differential(s, phi)).transpose()?;
    let del = (p > 0).then(|| horizontal_codifferential(s, phi)).transpose()?;
    let mut pairs: Vec<(&HorizontalForm<T>, &HorizontalForm<T>)> = vec![(&lap, &lap), (phi, phi), (&lap, phi)];
    if let Some(d) = &d {
        pairs.push((d, d));
    }
    if let Some(del) = &del {
        pairs.push((del, del));
    }
    let v = inner_products(s, &pairs, grid)?;
    let clamp = |t: T| t.max(T::zero()).sqrt();
    let laplacian_norm = clamp(v[0]);
    let phi_norm = clamp(v[1]);
    let mut k = 3;
    let mut take = |present: bool| {
        if present {
            k += 1;
            v[k - 1].max(T::zero())
        } else {
            T::zero()
        }
    };
    let dh2 = take(d.is_some());
    let dl2 = take(del.is_some());
    let derived_tol = (tol * (T::one() + phi_norm)).sqrt() + T::lit(HARMONIC_GRID_FLOOR);
    let harmonic = laplacian_norm <= tol;
    let (dh_norm, delta_h_norm) = (dh2.sqrt(), dl2.sqrt());
    let first_order_small = dh_norm <= derived_tol && delta_h_norm <= derived_tol;
    Ok(HarmonicReport {
        laplacian_norm,
        dh_norm,
        delta_h_norm,
        derived_tol,
        harmonic,
        equivalence_holds: harmonic == first_order_small,
        energy_defect: (v[2] - dh2 - dl2).abs(),
    })
}
