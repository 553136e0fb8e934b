//! Spray, nonlinear connection, Cartan connection coefficients, and the
//! horizontal and vertical covariant derivatives of tensor fields.
//!
//! Everything is carried as jets in the `2n` variables `(x, y)` around a point
//! of the slit tangent bundle. A [`Tower`] built at order `K` holds `F²` to
//! order `K`, so `g` is valid to order `K - 2`, `C`, `N`, `Γ` to `K - 3` and
//! `∇₀T` to `K - 4`; each further horizontal or vertical derivative costs one
//! more order.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::fields::{TrigPoly, VectorField};
use crate::jets::{self, Jet, ScalarField, MAX_ORDER};
use crate::linalg;
use crate::metric::FinslerStructure;
use crate::scalar::{Real, Scalar};
use crate::tensor::{JetTensor, Slot, TensorValue};

/// Geometric data at a fiber point, independent of where the tower is rebased.
#[derive(Debug)]
pub struct Geometry<T: Real> {
    pub n: usize,
    pub order: usize,
    pub x_independent: bool,
    pub f: Jet<T>,
    pub f2: Jet<T>,
    /// `g_ij`
    pub g: JetTensor<T>,
    /// `g^ij`
    pub ginv: JetTensor<T>,
    /// `C_kij`
    pub c_low: JetTensor<T>,
    /// `C^i_jk`
    pub cv: JetTensor<T>,
    /// `T_j = g^{ik} C_ikj`
    pub t: JetTensor<T>,
    /// `ℓ_i = ∂F/∂y^i`
    pub ell: JetTensor<T>,
    /// `G^i`
    pub spray: JetTensor<T>,
    /// `N^i_j`
    pub nl: JetTensor<T>,
    /// `Γ^i_jk`
    pub gamma: JetTensor<T>,
    /// `∇₀T_j`
    pub nabla0_t: JetTensor<T>,
    /// `y^i / F`, the point on the indicatrix
    pub unit: JetTensor<T>,
}

/// Jet tower of the Cartan connection around a point `(x, y)`.
#[derive(Debug, Clone)]
pub struct Tower<T: Real> {
    x: Vec<T>,
    y: Vec<T>,
    geo: Arc<Geometry<T>>,
}

fn zeros<T: Real>(n: usize, variance: Vec<Slot>) -> JetTensor<T> {
    JetTensor::zeros(n, variance)
}

use Slot::{Lower as L, Upper as U};

impl<T: Real> Tower<T> {
    /// Build the tower at `(x, y)` keeping `order` orders of `F²`.
    pub fn new(s: &FinslerStructure<T>, x: &[T], y: &[T], order: usize) -> Result<Self> {
        s.check_point(x, y)?;
        if order > MAX_ORDER {
            return Err(FinslerError::OrderTooHigh {
                requested: order,
                limit: MAX_ORDER,
            });
        }
        let order = order.max(2);
        let n = s.dim;
        let (xs, ys) = jets::seed_point(x, y, order);
        let f = s.f(&xs, &ys);
        if !(f.value() > T::zero()) {
            return Err(FinslerError::InvalidStructure(format!("F = {} is not positive", f.value())));
        }
        let f2 = s.f2(&xs, &ys);
        let half = T::lit(0.5);
        let g = JetTensor::from_fn(n, vec![L, L], |ix| f2.d(n + ix[0]).d(n + ix[1]).scale(half));
        let gvals: Vec<T> = g.comps.iter().map(|c| c.value()).collect();
        linalg::cholesky(&gvals, n)?;
        let ginv = JetTensor::new(n, vec![U, U], linalg::jet_inverse(&g.comps, n)?);
        let c_low = JetTensor::from_fn(n, vec![L, L, L], |ix| g.at(&[ix[1], ix[2]]).d(n + ix[0]).scale(half));
        let cv = JetTensor::from_fn(n, vec![U, L, L], |ix| {
            (0..n).map(|l| ginv.at(&[ix[0], l]) * c_low.at(&[l, ix[1], ix[2]])).sum()
        });
        let t = JetTensor::from_fn(n, vec![L], |ix| {
            let mut acc = Jet::zero();
            for i in 0..n {
                for k in 0..n {
                    acc += ginv.at(&[i, k]) * c_low.at(&[i, k, ix[0]]);
                }
            }
            acc
        });
        let ell = JetTensor::from_fn(n, vec![L], |ix| f.d(n + ix[0]));
        let rf = f.recip_jet();
        let unit = JetTensor::from_fn(n, vec![U], |ix| &ys[ix[0]] * &rf);

        let x_independent = s.is_x_independent();
        let (spray, nl, gamma, nabla0_t) = if x_independent {
            (
                zeros(n, vec![U]),
                zeros(n, vec![U, L]),
                zeros(n, vec![U, L, L]),
                zeros(n, vec![L]),
            )
        } else {
            let w: Vec<Jet<T>> = (0..n)
                .map(|h| {
                    let fy = f2.d(n + h);
                    let mut acc = -f2.d(h);
                    for (j, yj) in ys.iter().enumerate() {
                        acc += fy.d(j) * yj;
                    }
                    acc
                })
                .collect();
            let quarter = T::lit(0.25);
            let spray = JetTensor::from_fn(n, vec![U], |ix| {
                (0..n).map(|h| ginv.at(&[ix[0], h]) * &w[h]).sum::<Jet<T>>().scale(quarter)
            });
            let nl = JetTensor::from_fn(n, vec![U, L], |ix| spray.at(&[ix[0]]).d(n + ix[1]));
            let delta = |q: &Jet<T>, k: usize| -> Jet<T> {
                let mut acc = q.d(k);
                for j in 0..n {
                    acc -= nl.at(&[j, k]) * q.d(n + j);
                }
                acc
            };
            // dg[k][l][m] = δ_k g_lm
            let dg = JetTensor::from_fn(n, vec![L, L, L], |ix| delta(g.at(&[ix[1], ix[2]]), ix[0]));
            let gamma = JetTensor::from_fn(n, vec![U, L, L], |ix| {
                let (i, j, k) = (ix[0], ix[1], ix[2]);
                (0..n)
                    .map(|l| ginv.at(&[i, l]) * (dg.at(&[j, l, k]) + dg.at(&[k, j, l]) - dg.at(&[l, j, k])))
                    .sum::<Jet<T>>()
                    .scale(half)
            });
            let nabla0_t = JetTensor::from_fn(n, vec![L], |ix| {
                let j = ix[0];
                let mut acc = Jet::zero();
                for (h, yh) in ys.iter().enumerate() {
                    let mut d = delta(t.at(&[j]), h);
                    for p in 0..n {
                        d -= t.at(&[p]) * gamma.at(&[p, j, h]);
                    }
                    acc += d * yh;
                }
                acc
            });
            (spray, nl, gamma, nabla0_t)
        };

        Ok(Tower {
            x: x.to_vec(),
            y: y.to_vec(),
            geo: Arc::new(Geometry {
                n,
                order,
                x_independent,
                f,
                f2,
                g,
                ginv,
                c_low,
                cv,
                t,
                ell,
                spray,
                nl,
                gamma,
                nabla0_t,
                unit,
            }),
        })
    }

    /// Same fiber geometry over a different base point. Only meaningful for
    /// structures that do not depend on `x`.
    pub fn rebased(&self, x: &[T]) -> Self {
        debug_assert!(self.geo.x_independent);
        Tower {
            x: x.to_vec(),
            y: self.y.clone(),
            geo: Arc::clone(&self.geo),
        }
    }

    pub fn geometry(&self) -> &Geometry<T> {
        &self.geo
    }

    pub fn n(&self) -> usize {
        self.geo.n
    }

    pub fn order(&self) -> usize {
        self.geo.order
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    /// Seed variables at this point, truncated to `order`.
    pub fn seeds(&self, order: usize) -> (Vec<Jet<T>>, Vec<Jet<T>>) {
        jets::seed_point(&self.x, &self.y, order.min(MAX_ORDER))
    }

    /// `δ_k q = ∂q/∂x^k − N^j_k ∂q/∂y^j`.
    pub fn delta(&self, q: &Jet<T>, k: usize) -> Jet<T> {
        let n = self.n();
        let mut acc = q.d(k);
        if !self.geo.x_independent {
            for j in 0..n {
                acc -= self.geo.nl.at(&[j, k]) * q.d(n + j);
            }
        }
        acc
    }

    /// `∂̇_k q = ∂q/∂y^k`.
    pub fn vdot(&self, q: &Jet<T>, k: usize) -> Jet<T> {
        q.d(self.n() + k)
    }

    /// `∇_h T`, with the derivative slot first.
    pub fn nabla_h(&self, t: &JetTensor<T>) -> JetTensor<T> {
        if self.geo.x_independent {
            return covariant(t, &|q, h| q.d(h), None);
        }
        covariant(t, &|q, h| self.delta(q, h), Some(&self.geo.gamma))
    }

    /// `∇̇_h T`, with the derivative slot first.
    pub fn nabla_v(&self, t: &JetTensor<T>) -> JetTensor<T> {
        covariant(t, &|q, h| self.vdot(q, h), Some(&self.geo.cv))
    }

    /// `∇₀T = y^h ∇_h T`.
    pub fn nabla_0(&self, t: &JetTensor<T>) -> JetTensor<T> {
        let d = self.nabla_h(t);
        let (_, ys) = self.seeds(self.order());
        contract_first(&d, &ys)
    }

    /// Raise slot `slot` of `t` with `g^ij`.
    pub fn raise(&self, t: &JetTensor<T>, slot: usize) -> JetTensor<T> {
        transform_slot(t, slot, &self.geo.ginv, U)
    }

    /// Lower slot `slot` of `t` with `g_ij`.
    pub fn lower(&self, t: &JetTensor<T>, slot: usize) -> JetTensor<T> {
        transform_slot(t, slot, &self.geo.g, L)
    }
}

/// `y^h A_{h…}`: contract the first slot of `a` against the given components.
pub fn contract_first<T: Real>(a: &JetTensor<T>, v: &[Jet<T>]) -> JetTensor<T> {
    let n = a.n;
    let rest = a.variance[1..].to_vec();
    let stride = n.pow(rest.len() as u32);
    let comps = (0..stride)
        .map(|r| {
            let mut acc = Jet::zero();
            for (h, vh) in v.iter().enumerate() {
                acc += &a.comps[h * stride + r] * vh;
            }
            acc
        })
        .collect();
    JetTensor::new(n, rest, comps)
}

fn transform_slot<T: Real>(t: &JetTensor<T>, slot: usize, m: &JetTensor<T>, to: Slot) -> JetTensor<T> {
    let n = t.n;
    let mut variance = t.variance.clone();
    variance[slot] = to;
    let mut src = vec![0; t.rank()];
    JetTensor::from_fn(n, variance, |ix| {
        src.copy_from_slice(ix);
        let mut acc = Jet::zero();
        for p in 0..n {
            src[slot] = p;
            acc += m.at(&[ix[slot], p]) * t.at(&src);
        }
        acc
    })
}

/// One-term-per-slot covariant derivative: `D_h T − Σ_lower T_{…p…} W^p_{a h} + Σ_upper T^{…p…} W^a_{p h}`.
fn covariant<T: Real>(
    t: &JetTensor<T>,
    deriv: &dyn Fn(&Jet<T>, usize) -> Jet<T>,
    w: Option<&JetTensor<T>>,
) -> JetTensor<T> {
    let n = t.n;
    let rank = t.rank();
    let mut variance = Vec::with_capacity(rank + 1);
    variance.push(L);
    variance.extend_from_slice(&t.variance);
    let mut src = vec![0; rank];
    JetTensor::from_fn(n, variance, |ix| {
        let h = ix[0];
        let idx = &ix[1..];
        let mut acc = deriv(t.at(idx), h);
        if let Some(w) = w {
            for slot in 0..rank {
                src.copy_from_slice(idx);
                let a = idx[slot];
                for p in 0..n {
                    src[slot] = p;
                    match t.variance[slot] {
                        Slot::Lower => acc -= t.at(&src) * w.at(&[p, a, h]),
                        Slot::Upper => acc += t.at(&src) * w.at(&[a, p, h]),
                    }
                }
            }
        }
        acc
    })
}

/// Connection data at a point.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectionAtPoint<T> {
    /// `G^i`
    pub spray: TensorValue<T>,
    /// `N^i_j`
    pub nl: TensorValue<T>,
    /// `Γ^i_jk`
    pub gamma: TensorValue<T>,
    /// `C^i_jk`
    pub cv: TensorValue<T>,
}

impl<T: Real> ConnectionAtPoint<T> {
    /// `max |N^i_j − Γ^i_jk y^k|`. Reported rather than enforced for custom metrics.
    pub fn nonlinear_defect(&self) -> T {
        let n = self.nl.n;
        let y = &self.nl.y;
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let contracted: T = (0..n).map(|k| self.gamma.get(&[i, j, k]) * y[k]).sum();
                worst = worst.max((self.nl.get(&[i, j]) - contracted).abs());
            }
        }
        worst
    }
}

pub fn spray<T: Real>(s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
    Tower::new(s, x, y, 2)?.geometry().spray.to_value(x, y)
}

pub fn nonlinear_connection<T: Real>(s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
    Tower::new(s, x, y, 3)?.geometry().nl.to_value(x, y)
}

pub fn cartan_coefficients<T: Real>(s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<ConnectionAtPoint<T>> {
    let tw = Tower::new(s, x, y, 3)?;
    let geo = tw.geometry();
    Ok(ConnectionAtPoint {
        spray: geo.spray.to_value(x, y)?,
        nl: geo.nl.to_value(x, y)?,
        gamma: geo.gamma.to_value(x, y)?,
        cv: geo.cv.to_value(x, y)?,
    })
}

/// `δ_i f` of a scalar field on the slit tangent bundle.
pub fn delta_derivative<T: Real>(
    s: &FinslerStructure<T>,
    f: &dyn ScalarField<T>,
    x: &[T],
    y: &[T],
    i: usize,
) -> Result<T> {
    if i >= s.dim {
        return Err(FinslerError::Domain(format!("axis {i} out of range")));
    }
    let tw = Tower::new(s, x, y, 3)?;
    let (xs, ys) = tw.seeds(1);
    let q = f.jet(&xs, &ys)?;
    tw.delta(&q, i).checked_value()
}

/// The Finsler function itself as a scalar field.
pub struct FinslerFunction<'a, T: Real>(pub &'a FinslerStructure<T>);

impl<T: Real> jets::SmoothField<T> for FinslerFunction<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn at<S: Scalar<T>>(&self, x: &[S], y: &[S]) -> Result<S> {
        Ok(self.0.f(x, y))
    }
}

/// `F²` as a scalar field.
pub struct FinslerSquared<'a, T: Real>(pub &'a FinslerStructure<T>);

impl<T: Real> jets::SmoothField<T> for FinslerSquared<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn at<S: Scalar<T>>(&self, x: &[S], y: &[S]) -> Result<S> {
        Ok(self.0.f2(x, y))
    }
}

/// Which differentiation path produced a derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffPath {
    Jets,
    FiniteDifference,
}

/// A tensor field on the slit tangent bundle.
///
/// `eval` is called with `y` on the indicatrix; off the indicatrix the field is
/// extended as `F^d · T(x, y/F)` with `d = homogeneity_degree()`. Fields that can
/// produce jets directly override `jets`, which returns components of the
/// extended field around the tower's point.
pub trait TensorField<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn variance(&self) -> Vec<Slot>;
    fn homogeneity_degree(&self) -> i32 {
        0
    }
    fn eval(&self, s: &FinslerStructure<T>, x: &[T], u: &[T]) -> Result<Vec<T>>;
    fn jets(&self, _tower: &Tower<T>, _order: usize) -> Option<Result<Vec<Jet<T>>>> {
        None
    }
}

fn extended<T: Real>(field: &dyn TensorField<T>, s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<Vec<T>> {
    let f = s.eval_f(x, y)?;
    let u: Vec<T> = y.iter().map(|&v| v / f).collect();
    let scale = f.powi(field.homogeneity_degree());
    Ok(field.eval(s, x, &u)?.into_iter().map(|v| v * scale).collect())
}

/// Finite-difference step for covariant derivatives of opaque fields.
pub const FD_STEP: f64 = 1e-4;

/// Component jets of `field` around the tower point to the given order: exact
/// when the field supports jets, otherwise assembled from central differences
/// (orders up to 2).
pub fn component_jets<T: Real>(
    s: &FinslerStructure<T>,
    field: &dyn TensorField<T>,
    tw: &Tower<T>,
    order: usize,
) -> Result<(Vec<Jet<T>>, DiffPath)> {
    if let Some(js) = field.jets(tw, order) {
        return Ok((js?, DiffPath::Jets));
    }
    if order > 2 {
        return Err(FinslerError::OrderTooHigh {
            requested: order,
            limit: 2,
        });
    }
    let n = s.dim;
    let m = 2 * n;
    let (x, y) = (tw.x(), tw.y());
    let base = extended(field, s, x, y)?;
    let ncomp = base.len();
    let mut z: Vec<T> = x.iter().chain(y).copied().collect();
    let steps: Vec<T> = z.iter().map(|&c| T::lit(FD_STEP) * (T::one() + c.abs())).collect();
    let mut eval_shift = |shift: &[(usize, f64)]| -> Result<Vec<T>> {
        let saved = z.clone();
        for &(a, k) in shift {
            z[a] += steps[a] * T::lit(k);
        }
        let r = extended(field, s, &z[..n], &z[n..]);
        z = saved;
        r
    };
    let table = jets::table(m);
    let mut coeffs = vec![vec![T::zero(); table.len(order)]; ncomp];
    for (comp, c) in coeffs.iter_mut().enumerate() {
        c[0] = base[comp];
    }
    if order >= 1 {
        for a in 0..m {
            let h = steps[a];
            let (m2, m1, p1, p2) = (
                eval_shift(&[(a, -2.0)])?,
                eval_shift(&[(a, -1.0)])?,
                eval_shift(&[(a, 1.0)])?,
                eval_shift(&[(a, 2.0)])?,
            );
            let mut alpha = vec![0u8; m];
            alpha[a] = 1;
            let idx = table.index_of(&alpha).expect("degree-one monomial");
            for comp in 0..ncomp {
                coeffs[comp][idx] = (m2[comp] - p2[comp] + (p1[comp] - m1[comp]) * T::lit(8.0)) / (T::lit(12.0) * h);
                if order >= 2 {
                    let mut alpha2 = vec![0u8; m];
                    alpha2[a] = 2;
                    let idx2 = table.index_of(&alpha2).expect("degree-two monomial");
                    // Taylor coefficient is half the second derivative.
                    coeffs[comp][idx2] = (p1[comp] - base[comp] - base[comp] + m1[comp]) / (h * h) * T::lit(0.5);
                }
            }
        }
    }
    if order >= 2 {
        for a in 0..m {
            for b in a + 1..m {
                let (pp, pm, mp, mm) = (
                    eval_shift(&[(a, 1.0), (b, 1.0)])?,
                    eval_shift(&[(a, 1.0), (b, -1.0)])?,
                    eval_shift(&[(a, -1.0), (b, 1.0)])?,
                    eval_shift(&[(a, -1.0), (b, -1.0)])?,
                );
                let mut alpha = vec![0u8; m];
                alpha[a] = 1;
                alpha[b] = 1;
                let idx = table.index_of(&alpha).expect("mixed monomial");
                let denom = T::lit(4.0) * steps[a] * steps[b];
                for comp in 0..ncomp {
                    coeffs[comp][idx] = (pp[comp] - pm[comp] - mp[comp] + mm[comp]) / denom;
                }
            }
        }
    }
    let comps = coeffs.into_iter().map(|c| Jet::from_coeffs(m, order, c)).collect();
    Ok((comps, DiffPath::FiniteDifference))
}

/// A covariant derivative together with the path that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Derivative<T> {
    pub value: TensorValue<T>,
    pub path: DiffPath,
}

fn field_tensor<T: Real>(field: &dyn TensorField<T>, comps: Vec<Jet<T>>) -> Result<JetTensor<T>> {
    let variance = field.variance();
    if comps.len() != field.dim().pow(variance.len() as u32) {
        return Err(FinslerError::Domain("field output does not match its declared variance".into()));
    }
    Ok(JetTensor::new(field.dim(), variance, comps))
}

pub fn h_covariant_derivative<T: Real>(
    s: &FinslerStructure<T>,
    field: &dyn TensorField<T>,
    x: &[T],
    y: &[T],
) -> Result<Derivative<T>> {
    let tw = Tower::new(s, x, y, 3)?;
    let (comps, path) = component_jets(s, field, &tw, 1)?;
    let t = field_tensor(field, comps)?;
    Ok(Derivative {
        value: tw.nabla_h(&t).to_value(x, y)?,
        path,
    })
}

pub fn v_covariant_derivative<T: Real>(
    s: &FinslerStructure<T>,
    field: &dyn TensorField<T>,
    x: &[T],
    y: &[T],
) -> Result<Derivative<T>> {
    let tw = Tower::new(s, x, y, 3)?;
    let (comps, path) = component_jets(s, field, &tw, 1)?;
    let t = field_tensor(field, comps)?;
    Ok(Derivative {
        value: tw.nabla_v(&t).to_value(x, y)?,
        path,
    })
}

pub fn nabla_0<T: Real>(
    s: &FinslerStructure<T>,
    field: &dyn TensorField<T>,
    x: &[T],
    y: &[T],
) -> Result<Derivative<T>> {
    let tw = Tower::new(s, x, y, 3)?;
    let (comps, path) = component_jets(s, field, &tw, 1)?;
    let t = field_tensor(field, comps)?;
    Ok(Derivative {
        value: tw.nabla_0(&t).to_value(x, y)?,
        path,
    })
}

/// Built-in tensor fields backed by the tower.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometricField {
    /// `g_ij`
    Metric,
    /// `g^ij`
    InverseMetric,
    /// `δ^i_j`
    Kronecker,
    /// `ℓ_i`
    Hilbert,
    /// `T_j`
    CartanTrace,
}

impl GeometricField {
    fn source<'a, T: Real>(&self, geo: &'a Geometry<T>) -> Option<&'a JetTensor<T>> {
        match self {
            GeometricField::Metric => Some(&geo.g),
            GeometricField::InverseMetric => Some(&geo.ginv),
            GeometricField::Hilbert => Some(&geo.ell),
            GeometricField::CartanTrace => Some(&geo.t),
            GeometricField::Kronecker => None,
        }
    }
}

/// A built-in field tied to the structure it is evaluated on.
pub struct StructureField<'a, T: Real> {
    pub structure: &'a FinslerStructure<T>,
    pub kind: GeometricField,
}

impl<T: Real> TensorField<T> for StructureField<'_, T> {
    fn dim(&self) -> usize {
        self.structure.dim
    }

    fn variance(&self) -> Vec<Slot> {
        match self.kind {
            GeometricField::Metric => vec![L, L],
            GeometricField::InverseMetric => vec![U, U],
            GeometricField::Kronecker => vec![U, L],
            GeometricField::Hilbert | GeometricField::CartanTrace => vec![L],
        }
    }

    fn eval(&self, s: &FinslerStructure<T>, x: &[T], u: &[T]) -> Result<Vec<T>> {
        let n = s.dim;
        Ok(match self.kind {
            GeometricField::Metric => s.fundamental_tensor(x, u)?.data,
            GeometricField::InverseMetric => s.inverse_metric(x, u)?.data,
            GeometricField::Hilbert => s.hilbert_form(x, u)?.data,
            GeometricField::CartanTrace => s.cartan_trace(x, u)?.data,
            GeometricField::Kronecker => (0..n * n)
                .map(|k| if k / n == k % n { T::one() } else { T::zero() })
                .collect(),
        })
    }

    fn jets(&self, tower: &Tower<T>, order: usize) -> Option<Result<Vec<Jet<T>>>> {
        let geo = tower.geometry();
        if self.structure.dim != geo.n {
            return Some(Err(FinslerError::Domain("tower dimension mismatch".into())));
        }
        let n = geo.n;
        match self.kind.source(geo) {
            Some(t) => Some(Ok(t.comps.iter().map(|c| c.truncate(order)).collect())),
            None => Some(Ok((0..n * n)
                .map(|k| Jet::constant(if k / n == k % n { T::one() } else { T::zero() }))
                .collect())),
        }
    }
}

/// A vector field `X^i(x)` on the base, viewed as a y-independent field.
impl<T: Real> TensorField<T> for VectorField<T> {
    fn dim(&self) -> usize {
        VectorField::dim(self)
    }
    fn variance(&self) -> Vec<Slot> {
        vec![U]
    }
    fn eval(&self, _s: &FinslerStructure<T>, x: &[T], _u: &[T]) -> Result<Vec<T>> {
        Ok(VectorField::eval(self, x))
    }
    fn jets(&self, tower: &Tower<T>, order: usize) -> Option<Result<Vec<Jet<T>>>> {
        let (xs, _) = tower.seeds(order);
        Some(Ok(VectorField::eval(self, &xs)))
    }
}

/// A scalar function `f(x)` on the base.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseScalar<T> {
    pub dim: usize,
    pub poly: TrigPoly<T>,
}

impl<T: Real> TensorField<T> for BaseScalar<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn variance(&self) -> Vec<Slot> {
        vec![]
    }
    fn eval(&self, _s: &FinslerStructure<T>, x: &[T], _u: &[T]) -> Result<Vec<T>> {
        Ok(vec![self.poly.eval(x)])
    }
    fn jets(&self, tower: &Tower<T>, order: usize) -> Option<Result<Vec<Jet<T>>>> {
        let (xs, _) = tower.seeds(order);
        Some(Ok(vec![self.poly.eval(&xs)]))
    }
}

type FieldFn<T> = dyn Fn(&[T], &[T]) -> Result<Vec<T>> + Send + Sync;

/// An opaque field given by a closure on the sphere bundle; differentiated by
/// finite differences.
pub struct FnField<T: Real> {
    pub dim: usize,
    pub variance: Vec<Slot>,
    pub degree: i32,
    f: Box<FieldFn<T>>,
}

impl<T: Real> FnField<T> {
    pub fn new(
        dim: usize,
        variance: Vec<Slot>,
        f: impl Fn(&[T], &[T]) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Self {
        FnField {
            dim,
            variance,
            degree: 0,
            f: Box::new(f),
        }
    }
}

impl<T: Real> TensorField<T> for FnField<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn variance(&self) -> Vec<Slot> {
        self.variance.clone()
    }
    fn homogeneity_degree(&self) -> i32 {
        self.degree
    }
    fn eval(&self, _s: &FinslerStructure<T>, x: &[T], u: &[T]) -> Result<Vec<T>> {
        (self.f)(x, u)
    }
}

/// Outer product of two jet tensors.
pub fn outer<T: Real>(a: &JetTensor<T>, b: &JetTensor<T>) -> JetTensor<T> {
    let n = a.n;
    let mut variance = a.variance.clone();
    variance.extend_from_slice(&b.variance);
    let ra = a.rank();
    JetTensor::from_fn(n, variance, |ix| a.at(&ix[..ra]) * b.at(&ix[ra..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_families_have_no_connection() {
        for s in [
            FinslerStructure::<f64>::euclidean_torus(2),
            FinslerStructure::randers_torus(&[0.5, 0.0]),
        ] {
            let c = cartan_coefficients(&s, &[0.3, 1.2], &[0.4, 0.5]).unwrap();
            assert_eq!(c.spray.max_abs(), 0.0);
            assert_eq!(c.gamma.max_abs(), 0.0);
        }
    }

    #[test]
    fn sphere_christoffel_symbols() {
        let s = FinslerStructure::round_sphere(1e-3);
        let th = PI / 3.0;
        let c = cartan_coefficients(&s, &[th, 0.2], &[0.3, 0.7]).unwrap();
        assert!((c.gamma.get(&[0, 1, 1]) + th.sin() * th.cos()).abs() < 1e-12);
        assert!((c.gamma.get(&[1, 0, 1]) - th.cos() / th.sin()).abs() < 1e-12);
        assert!(c.gamma.get(&[0, 0, 0]).abs() < 1e-12);
        assert!(c.cv.max_abs() < 1e-14);
        assert!(c.nonlinear_defect() < 1e-12);
    }

    #[test]
    fn kronecker_is_parallel() {
        let s = FinslerStructure::round_sphere(1e-3);
        let k = StructureField {
            structure: &s,
            kind: GeometricField::Kronecker,
        };
        let d = h_covariant_derivative(&s, &k, &[1.0, 0.5], &[0.2, 0.9]).unwrap();
        assert!(d.value.max_abs() < 1e-12);
        assert_eq!(d.path, DiffPath::Jets);
    }

    #[test]
    fn opaque_fields_fall_back_to_differences() {
        let s = FinslerStructure::<f64>::euclidean_torus(2);
        let f = FnField::new(2, vec![], |x: &[f64], _u: &[f64]| Ok(vec![x[0].sin()]));
        let d = h_covariant_derivative(&s, &f, &[0.4, 0.1], &[1.0, 0.0]).unwrap();
        assert_eq!(d.path, DiffPath::FiniteDifference);
        assert!((d.value.data[0] - 0.4f64.cos()).abs() < 1e-10);
        assert!(d.value.data[1].abs() < 1e-12);
    }
}
