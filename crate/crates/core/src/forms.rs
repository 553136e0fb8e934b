//! Horizontal p-forms on the sphere bundle and the operators `d_H`, `δ_H`,
//! `Δ_H`, together with the vector-field identities built from them.
//!
//! Components are the standard ones: `φ = (1/p!) φ_{i1…ip} dx^{i1}∧…∧dx^{ip}`
//! with `φ_{i1…ip}` fully antisymmetric. With that convention `d_H` is the
//! plain `(p+1)`-term alternation of `∇φ` and the pointwise inner product
//! carries `1/p!`, which makes `d_H` and `δ_H` formally adjoint.
//!
//! Forms are extensional: a [`HorizontalForm`] is an expression evaluated at a
//! point by jets, so composed operators are exact up to roundoff.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::connection::{contract_first, TensorField, Tower};
use crate::curvature::{flag_jets, hh_jets, ricci_jets};
use crate::error::{FinslerError, Result};
use crate::fields::{Coefficient, TrigPoly, VectorField};
use crate::jets::{Jet, MAX_ORDER};
use crate::metric::FinslerStructure;
use crate::scalar::Real;
use crate::tensor::{all_indices, flat_index, permutation_sign, JetTensor, Slot, TensorValue};

use Slot::{Lower as L, Upper as U};

/// Independent components plus, for each, the `(flat offset, sign)` of every
/// ordering of its indices.
#[derive(Debug)]
struct Components<T: Real> {
    comps: Vec<(Vec<usize>, Coefficient<T>)>,
    slots: Vec<Vec<(usize, bool)>>,
}

#[derive(Debug)]
enum Node<T: Real> {
    Coefficients(Components<T>),
    Associated(VectorField<T>),
    Dh(HorizontalForm<T>),
    DeltaH(HorizontalForm<T>),
    Laplacian(HorizontalForm<T>),
    Expansion(HorizontalForm<T>),
}

/// A horizontal p-form on `SM`, evaluable at any point.
#[derive(Debug, Clone)]
pub struct HorizontalForm<T: Real> {
    degree: usize,
    dim: usize,
    pub label: String,
    node: Arc<Node<T>>,
}

fn factorial(p: usize) -> f64 {
    (1..=p).map(|k| k as f64).product()
}

impl<T: Real> HorizontalForm<T> {
    /// Form from independent components: `(strictly increasing indices, coefficient)`.
    pub fn from_components(
        dim: usize,
        degree: usize,
        comps: Vec<(Vec<usize>, Coefficient<T>)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if degree > dim {
            return Err(FinslerError::DegreeOverflow(degree));
        }
        for (idx, _) in &comps {
            let increasing = idx.windows(2).all(|w| w[0] < w[1]);
            if idx.len() != degree || !increasing || idx.iter().any(|&i| i >= dim) {
                return Err(FinslerError::Domain(format!(
                    "component indices {idx:?} are not an increasing {degree}-tuple below {dim}"
                )));
            }
        }
        Ok(HorizontalForm {
            degree,
            dim,
            label: label.into(),
            node: Arc::new(Node::Coefficients(Components {
                slots: comps
                    .iter()
                    .map(|(idx, _)| {
                        permutations(idx)
                            .into_iter()
                            .map(|p| (flat_index(dim, &p), permutation_sign(&p) > 0))
                            .collect()
                    })
                    .collect(),
                comps,
            })),
        })
    }

    /// `f(x) dx^{i1}∧…` shorthand for a single component.
    pub fn monomial(dim: usize, indices: &[usize], poly: TrigPoly<T>) -> Result<Self> {
        let mut sorted = indices.to_vec();
        let sign = permutation_sign(indices);
        if sign == 0 {
            return Err(FinslerError::Domain("repeated index in a form monomial".into()));
        }
        sorted.sort_unstable();
        let mut poly = poly;
        if sign < 0 {
            poly.constant = -poly.constant;
            for t in &mut poly.terms {
                t.amp = -t.amp;
            }
        }
        let label = format!("monomial{indices:?}");
        Self::from_components(dim, indices.len(), vec![(sorted, Coefficient::base(poly))], label)
    }

    /// The constant form `dx^axis`.
    pub fn coordinate(dim: usize, axis: usize) -> Self {
        Self::monomial(dim, &[axis], TrigPoly::constant(T::one())).expect("valid axis")
    }

    /// Random form with trigonometric coefficients. When `direction_dependent`
    /// is set the coefficients also depend on the fiber point.
    pub fn random<R: Rng>(
        rng: &mut R,
        dim: usize,
        degree: usize,
        max_degree: i32,
        nterms: usize,
        direction_dependent: bool,
    ) -> Self {
        let comps = all_indices(dim, degree)
            .filter(|ix| ix.windows(2).all(|w| w[0] < w[1]))
            .map(|ix| {
                let poly = TrigPoly::random(rng, dim, max_degree, nterms, 1.0);
                let weights = direction_dependent.then(|| (0..dim).map(|_| T::lit(rng.gen_range(-0.3..0.3))).collect());
                (
                    ix,
                    Coefficient {
                        poly,
                        direction_weights: weights,
                    },
                )
            })
            .collect();
        Self::from_components(dim, degree, comps, format!("random-{degree}-form")).expect("valid random form")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn wrap(&self, degree: usize, label: String, node: Node<T>) -> Self {
        HorizontalForm {
            degree,
            dim: self.dim,
            label,
            node: Arc::new(node),
        }
    }

    /// Tower order needed to evaluate this form's components to jet order `m`.
    pub fn tower_order(&self, m: usize) -> usize {
        match &*self.node {
            Node::Coefficients(_) => m.max(2),
            Node::Associated(_) => m + 2,
            Node::Dh(f) => f.tower_order(m + 1).max(m + 3),
            Node::DeltaH(f) => f.tower_order(m + 1).max(m + 4),
            Node::Laplacian(f) | Node::Expansion(f) => f.tower_order(m + 2).max(m + 5),
        }
    }

    /// Fully antisymmetric component array as jets valid to order `m`.
    pub fn components(&self, tw: &Tower<T>, m: usize) -> Result<JetTensor<T>> {
        let n = self.dim;
        if tw.n() != n {
            return Err(FinslerError::Domain("form and structure dimensions differ".into()));
        }
        match &*self.node {
            Node::Coefficients(c) => {
                let vals = coefficient_jets(tw, &c.comps, m);
                let mut out = JetTensor::zeros(n, vec![L; self.degree]);
                for (v, slots) in vals.into_iter().zip(&c.slots) {
                    for &(f, positive) in slots {
                        out.comps[f] = if positive { v.clone() } else { -&v };
                    }
                }
                Ok(out)
            }
            Node::Associated(x) => {
                let xu = x.taylor(tw.x(), 2 * n, m);
                let g = &tw.geometry().g;
                Ok(JetTensor::from_fn(n, vec![L], |ix| (0..n).map(|j| g.at(&[ix[0], j]) * &xu[j]).sum()))
            }
            Node::Dh(phi) => Ok(alternate(&tw.nabla_h(&phi.components(tw, m + 1)?))),
            Node::DeltaH(psi) => Ok(codifferential(tw, &psi.components(tw, m + 1)?)),
            Node::Laplacian(phi) => {
                let p = phi.degree;
                let c = phi.components(tw, m + 2)?;
                let mut out = JetTensor::zeros(n, vec![L; p]);
                if p < n {
                    let d = alternate(&tw.nabla_h(&c));
                    out = out.add(&codifferential(tw, &d));
                }
                if p > 0 {
                    let del = codifferential(tw, &c);
                    out = out.add(&alternate(&tw.nabla_h(&del)));
                }
                Ok(out)
            }
            Node::Expansion(phi) => Ok(expansion(tw, &phi.components(tw, m + 2)?)),
        }
    }

    /// Components at a point of the slit tangent bundle.
    pub fn eval(&self, s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
        let tw = Tower::new(s, x, y, self.tower_order(0))?;
        self.components(&tw, 0)?.to_value(x, y)
    }
}

/// Coefficient jets at the tower point; the fiber factor `y/F` is shared.
fn coefficient_jets<T: Real>(tw: &Tower<T>, comps: &[(Vec<usize>, Coefficient<T>)], m: usize) -> Vec<Jet<T>> {
    let n = tw.n();
    let mut unit: Option<Vec<Jet<T>>> = None;
    comps
        .iter()
        .map(|(_, c)| {
            let p = c.poly.taylor(tw.x(), 2 * n, m);
            if !c.depends_on_direction() {
                return p;
            }
            let u = unit.get_or_insert_with(|| tw.geometry().unit.comps.iter().map(|j| j.truncate(m)).collect());
            let w = c.direction_weights.as_ref().expect("weights present");
            let mut factor = Jet::constant(T::one());
            for (wk, uk) in w.iter().zip(u.iter()) {
                factor += uk.scale(*wk);
            }
            p * factor
        })
        .collect()
}

/// All orderings of a strictly increasing index tuple.
fn permutations(idx: &[usize]) -> Vec<Vec<usize>> {
    if idx.len() <= 1 {
        return vec![idx.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..idx.len() {
        let mut rest = idx.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// `(dφ)_{i i1…ip} = D_{i}φ_{i1…ip} − Σ_k D_{ik}φ_{i1…i…ip}` from `D = ∇φ` stored `[i][i1…ip]`.
fn alternate<T: Real>(d: &JetTensor<T>) -> JetTensor<T> {
    let n = d.n;
    let rank = d.rank();
    let mut src = vec![0; rank];
    JetTensor::from_fn(n, vec![L; rank], |ix| {
        let i = ix[0];
        let mut acc = d.at(ix).clone();
        for k in 1..rank {
            src.copy_from_slice(ix);
            src[0] = ix[k];
            src[k] = i;
            acc -= d.at(&src);
        }
        acc
    })
}

/// `(δψ)_J = −g^{ij}(∇_iψ_{jJ} − ψ_{jJ}∇₀T_i)`.
fn codifferential<T: Real>(tw: &Tower<T>, psi: &JetTensor<T>) -> JetTensor<T> {
    let n = psi.n;
    let geo = tw.geometry();
    let d = tw.nabla_h(psi);
    let p = psi.rank() - 1;
    let stride = n.pow(p as u32);
    let comps = (0..stride)
        .map(|r| {
            let mut acc = Jet::zero();
            for i in 0..n {
                for j in 0..n {
                    let dij = &d.comps[(i * n + j) * stride + r];
                    // ∇₀T vanishes identically without x-dependence
                    if geo.x_independent {
                        acc -= geo.ginv.at(&[i, j]) * dij;
                    } else {
                        acc -= geo.ginv.at(&[i, j]) * (dij - psi.comps[j * stride + r].clone() * geo.nabla0_t.at(&[i]));
                    }
                }
            }
            acc
        })
        .collect();
    JetTensor::new(n, vec![L; p], comps)
}

/// Expanded `Δ_H φ` in terms of second covariant derivatives:
/// `−[g^{rs}(∇_r∇_sφ_I − ∇_sφ_I∇₀T_r) − Σ_k g^{rs}(∇_r∇_{ik}φ_{I(s@k)} − ∇_{ik}∇_rφ_{I(s@k)})
///   − Σ_k g^{rs}φ_{I(s@k)}∇_{ik}∇₀T_r]`.
fn expansion<T: Real>(tw: &Tower<T>, c: &JetTensor<T>) -> JetTensor<T> {
    let n = c.n;
    let p = c.rank();
    let geo = tw.geometry();
    let d1 = tw.nabla_h(c);
    let d2 = tw.nabla_h(&d1);
    let dt = tw.nabla_h(&geo.nabla0_t);
    let ginv = &geo.ginv;
    let mut a = vec![0; p + 2];
    let mut b = vec![0; p + 1];
    let mut sub = vec![0; p];
    JetTensor::from_fn(n, vec![L; p], |ix| {
        let mut acc = Jet::zero();
        for r in 0..n {
            for s in 0..n {
                let gi = ginv.at(&[r, s]);
                a[0] = r;
                a[1] = s;
                a[2..].copy_from_slice(ix);
                b[0] = s;
                b[1..].copy_from_slice(ix);
                let mut term = d2.at(&a) - d1.at(&b) * geo.nabla0_t.at(&[r]);
                for k in 0..p {
                    sub.copy_from_slice(ix);
                    sub[k] = s;
                    a[0] = r;
                    a[1] = ix[k];
                    a[2..].copy_from_slice(&sub);
                    let first = d2.at(&a).clone();
                    a[0] = ix[k];
                    a[1] = r;
                    term -= first - d2.at(&a);
                    term -= c.at(&sub) * dt.at(&[ix[k], r]);
                }
                acc -= gi * term;
            }
        }
        acc
    })
}

fn check_dim<T: Real>(s: &FinslerStructure<T>, f: &HorizontalForm<T>) -> Result<()> {
    if s.dim != f.dim {
        return Err(FinslerError::Domain(format!(
            "form of dimension {} used with a structure of dimension {}",
            f.dim, s.dim
        )));
    }
    Ok(())
}

pub fn horizontal_differential<T: Real>(s: &FinslerStructure<T>, phi: &HorizontalForm<T>) -> Result<HorizontalForm<T>> {
    check_dim(s, phi)?;
    if phi.degree >= phi.dim {
        return Err(FinslerError::DegreeOverflow(phi.degree));
    }
    Ok(phi.wrap(phi.degree + 1, format!("dH({})", phi.label), Node::Dh(phi.clone())))
}

pub fn horizontal_codifferential<T: Real>(s: &FinslerStructure<T>, psi: &HorizontalForm<T>) -> Result<HorizontalForm<T>> {
    check_dim(s, psi)?;
    if psi.degree == 0 {
        return Err(FinslerError::DegreeUnderflow);
    }
    Ok(psi.wrap(psi.degree - 1, format!("deltaH({})", psi.label), Node::DeltaH(psi.clone())))
}

/// `Δ_H = d_Hδ_H + δ_Hd_H` by composition.
pub fn horizontal_laplacian<T: Real>(s: &FinslerStructure<T>, omega: &HorizontalForm<T>) -> Result<HorizontalForm<T>> {
    check_dim(s, omega)?;
    Ok(omega.wrap(omega.degree, format!("LapH({})", omega.label), Node::Laplacian(omega.clone())))
}

/// `Δ_H` through the expanded second-derivative formula.
pub fn laplacian_expansion_p<T: Real>(s: &FinslerStructure<T>, phi: &HorizontalForm<T>) -> Result<HorizontalForm<T>> {
    check_dim(s, phi)?;
    if phi.degree == 0 {
        return Err(FinslerError::DegreeUnderflow);
    }
    Ok(phi.wrap(phi.degree, format!("LapH-expanded({})", phi.label), Node::Expansion(phi.clone())))
}

/// `(1/p!) a^{I} b_I` with indices raised by `ginv` (row-major `n × n`).
pub fn inner_values<T: Real>(ginv: &[T], n: usize, p: usize, a: &[T], b: &[T]) -> T {
    let mut raised = a.to_vec();
    for slot in 0..p {
        let stride = n.pow((p - 1 - slot) as u32);
        let mut next = vec![T::zero(); raised.len()];
        for (f, out) in next.iter_mut().enumerate() {
            let i = (f / stride) % n;
            let base = f - i * stride;
            let mut acc = T::zero();
            for j in 0..n {
                acc += ginv[i * n + j] * raised[base + j * stride];
            }
            *out = acc;
        }
        raised = next;
    }
    let s: T = raised.iter().zip(b).map(|(&u, &v)| u * v).sum();
    s / T::lit(factorial(p))
}

/// Pointwise inner product `(1/p!) φ^{I} ψ_I` at `(x, y)`.
pub fn pointwise_inner<T: Real>(
    s: &FinslerStructure<T>,
    phi: &HorizontalForm<T>,
    psi: &HorizontalForm<T>,
    x: &[T],
    y: &[T],
) -> Result<T> {
    check_dim(s, phi)?;
    check_dim(s, psi)?;
    if phi.degree != psi.degree {
        return Err(FinslerError::DegreeMismatch {
            left: phi.degree,
            right: psi.degree,
        });
    }
    let tw = Tower::new(s, x, y, phi.tower_order(0).max(psi.tower_order(0)))?;
    inner_at(&tw, phi, psi)
}

/// Pointwise inner product on an existing tower.
pub fn inner_at<T: Real>(tw: &Tower<T>, phi: &HorizontalForm<T>, psi: &HorizontalForm<T>) -> Result<T> {
    let a = phi.components(tw, 0)?.values()?;
    let b = if Arc::ptr_eq(&phi.node, &psi.node) {
        a.clone()
    } else {
        psi.components(tw, 0)?.values()?
    };
    let ginv = tw.geometry().ginv.values()?;
    Ok(inner_values(&ginv, tw.n(), phi.degree, &a, &b))
}

/// Horizontal forms are tensor fields with all-lower slots.
impl<T: Real> TensorField<T> for HorizontalForm<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn variance(&self) -> Vec<Slot> {
        vec![L; self.degree]
    }
    fn eval(&self, s: &FinslerStructure<T>, x: &[T], u: &[T]) -> Result<Vec<T>> {
        Ok(HorizontalForm::eval(self, s, x, u)?.data)
    }
    fn jets(&self, tower: &Tower<T>, order: usize) -> Option<Result<Vec<Jet<T>>>> {
        if tower.order() < self.tower_order(order) {
            return Some(Err(FinslerError::OrderTooHigh {
                requested: self.tower_order(order),
                limit: tower.order(),
            }));
        }
        Some(self.components(tower, order).map(|t| t.comps))
    }
}

/// The 1-form associated with a vector field `X^i(x)` on the base.
#[derive(Debug, Clone)]
pub struct AssociatedForm<T: Real> {
    pub source: VectorField<T>,
    /// `X_i = g_ij(x, y) X^j(x)`
    pub horizontal: HorizontalForm<T>,
}

pub fn associate_one_form<T: Real>(s: &FinslerStructure<T>, x: &VectorField<T>) -> Result<AssociatedForm<T>> {
    if x.dim() != s.dim {
        return Err(FinslerError::Domain("vector field dimension differs from the structure".into()));
    }
    Ok(AssociatedForm {
        source: x.clone(),
        horizontal: HorizontalForm {
            degree: 1,
            dim: s.dim,
            label: "associated".into(),
            node: Arc::new(Node::Associated(x.clone())),
        },
    })
}

impl<T: Real> AssociatedForm<T> {
    /// Vertical part `Ẋ_i = (∇₀X_i − y_i ∇₀(y^jX_j) F⁻²) / F`.
    pub fn vertical(&self, s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
        let tw = Tower::new(s, x, y, 3)?;
        let n = tw.n();
        let geo = tw.geometry();
        let xl = self.horizontal.components(&tw, 1)?;
        let n0x = tw.nabla_0(&xl);
        let (_, ys) = tw.seeds(1);
        let ydotx: Jet<T> = (0..n).map(|j| &ys[j] * xl.at(&[j])).sum();
        // ∇₀ of a scalar is y^h δ_h.
        let n0s: T = (0..n).map(|h| tw.delta(&ydotx, h).value() * y[h]).sum();
        let f = geo.f.value();
        let g = geo.g.values()?;
        let data = (0..n)
            .map(|i| {
                let yi: T = (0..n).map(|j| g[i * n + j] * y[j]).sum();
                (n0x.at(&[i]).value() - yi * n0s / (f * f)) / f
            })
            .collect();
        TensorValue::new(n, vec![L], data, x, y)
    }
}

/// Tower order used by the vector-field identities below.
pub const IDENTITY_ORDER: usize = 4;

/// Pointwise quantities of a base vector field used by the energy identities
/// and the Bochner integral.
#[derive(Debug, Clone, Serialize)]
pub struct VectorFieldTerms<T> {
    /// `K = X^kX^tR_tk − X^k∇̇_rX^jR^r_jk − X^k∇_kX^j∇₀T_j`
    pub k: T,
    /// `‖∇X‖² = ∇_iX_j ∇^iX^j`
    pub grad_norm2: T,
    /// `‖d_H X‖²` with the `¼` normalization
    pub dh_norm2: T,
    /// `δX` of the associated horizontal form
    pub delta_x: T,
    /// `δZ − δY`
    pub delta_z_minus_delta_y: T,
    /// Residual of the `δZ − δY` expansion.
    pub energy_residual: T,
    /// `∇_jX^k∇_kX^j − ‖∇X‖² + 2‖d_H X‖²`
    pub norm_residual: T,
}

/// Evaluate [`VectorFieldTerms`] on a tower of order at least [`IDENTITY_ORDER`].
pub fn vector_field_terms<T: Real>(tw: &Tower<T>, x: &VectorField<T>) -> Result<VectorFieldTerms<T>> {
    if tw.order() < IDENTITY_ORDER {
        return Err(FinslerError::OrderTooHigh {
            requested: IDENTITY_ORDER,
            limit: tw.order(),
        });
    }
    let n = tw.n();
    let geo = tw.geometry();
    let xu = JetTensor::new(n, vec![U], x.taylor(tw.x(), 2 * n, 2));
    let xl = tw.lower(&xu, 0);
    let d1u = tw.nabla_h(&xu); // [k][j] = ∇_k X^j
    let d1l = tw.nabla_h(&xl); // [k][i] = ∇_k X_i
    let d2u = tw.nabla_h(&d1u); // [j][k][i] = ∇_j∇_k X^i
    let dv = tw.nabla_v(&xu); // [r][j] = ∇̇_r X^j
    let n0t = &geo.nabla0_t;
    let ginv = &geo.ginv;

    let delta1 = |pi: &JetTensor<T>| -> Jet<T> {
        let d = tw.nabla_h(pi);
        let mut acc = Jet::zero();
        for i in 0..n {
            for j in 0..n {
                acc -= ginv.at(&[i, j]) * (d.at(&[i, j]) - pi.at(&[j]) * n0t.at(&[i]));
            }
        }
        acc
    };
    let div: Jet<T> = (0..n).map(|j| d1u.at(&[j, j]).clone()).sum();
    let y_form = JetTensor::from_fn(n, vec![L], |ix| (0..n).map(|k| xu.at(&[k]) * d1l.at(&[k, ix[0]])).sum());
    let z_form = JetTensor::from_fn(n, vec![L], |ix| xl.at(&[ix[0]]) * &div);
    let dzy = (delta1(&z_form) - delta1(&y_form)).checked_value()?;
    let delta_x = delta1(&xl).checked_value()?;

    let v = |j: &Jet<T>| j.value();
    let xv: Vec<T> = xu.comps.iter().map(v).collect();
    let divv = div.value();
    let mut cross = T::zero();
    let mut second = T::zero();
    let mut t_term = T::zero();
    for k in 0..n {
        for j in 0..n {
            cross += v(d1u.at(&[j, k])) * v(d1u.at(&[k, j]));
            second += xv[k] * (v(d2u.at(&[j, k, j])) - v(d2u.at(&[k, j, j])));
            t_term += xv[k] * v(d1u.at(&[k, j])) * v(n0t.at(&[j]));
        }
    }
    let bracket = divv * delta_x + second + cross - t_term;

    let mut grad = T::zero();
    for i in 0..n {
        for a in 0..n {
            for j in 0..n {
                grad += v(ginv.at(&[i, a])) * v(d1l.at(&[i, j])) * v(d1u.at(&[a, j]));
            }
        }
    }
    let anti: Vec<T> = (0..n * n).map(|f| v(&d1l.comps[f]) - v(&d1l.comps[(f % n) * n + f / n])).collect();
    let ginv_v = ginv.values()?;
    let dh_norm2 = inner_values(&ginv_v, n, 2, &anti, &anti) * T::lit(0.5);

    let flag = flag_jets(tw);
    let hh = hh_jets(tw, &flag);
    let ric = ricci_jets(&hh);
    let mut k_val = T::zero();
    for k in 0..n {
        for t in 0..n {
            k_val += xv[k] * xv[t] * ric.at(&[t, k]).checked_value()?;
        }
        for r in 0..n {
            for j in 0..n {
                k_val -= xv[k] * v(dv.at(&[r, j])) * flag.at(&[r, j, k]).checked_value()?;
            }
        }
    }
    k_val -= t_term;

    Ok(VectorFieldTerms {
        k: k_val,
        grad_norm2: grad,
        dh_norm2,
        delta_x,
        delta_z_minus_delta_y: dzy,
        energy_residual: dzy - bracket,
        norm_residual: cross - grad + dh_norm2 * T::lit(2.0),
    })
}

pub fn k_scalar<T: Real>(s: &FinslerStructure<T>, x: &VectorField<T>, at_x: &[T], at_y: &[T]) -> Result<T> {
    Ok(vector_field_terms(&Tower::new(s, at_x, at_y, IDENTITY_ORDER)?, x)?.k)
}

/// Residuals of the `δZ − δY` expansion and of the gradient-norm identity at a point.
pub fn energy_identity_residual<T: Real>(
    s: &FinslerStructure<T>,
    x: &VectorField<T>,
    at_x: &[T],
    at_y: &[T],
) -> Result<(T, T)> {
    let t = vector_field_terms(&Tower::new(s, at_x, at_y, IDENTITY_ORDER)?, x)?;
    Ok((t.energy_residual, t.norm_residual))
}

/// `g^{rs}(∇_r∇_sφ_i − ∇_sφ_i∇₀T_r) − φ^tR_ti + ∇̇_tφ^rR^t_ri − φ^r∇_i∇₀T_r`
/// for the associated horizontal form `φ` of `X`.
pub fn weitzenbock_residual<T: Real>(
    s: &FinslerStructure<T>,
    x: &VectorField<T>,
    at_x: &[T],
    at_y: &[T],
) -> Result<TensorValue<T>> {
    let assoc = associate_one_form(s, x)?;
    let tw = Tower::new(s, at_x, at_y, 5)?;
    let n = tw.n();
    let geo = tw.geometry();
    let phi = assoc.horizontal.components(&tw, 2)?;
    let d1 = tw.nabla_h(&phi);
    let d2 = tw.nabla_h(&d1);
    let xu = JetTensor::new(n, vec![U], x.taylor(tw.x(), 2 * n, 1));
    let dv = tw.nabla_v(&xu);
    let dt = tw.nabla_h(&geo.nabla0_t);
    let flag = flag_jets(&tw);
    let ric = ricci_jets(&hh_jets(&tw, &flag));
    let v = |j: &Jet<T>| j.checked_value();
    let mut data = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = T::zero();
        for r in 0..n {
            for s_ in 0..n {
                acc += v(geo.ginv.at(&[r, s_]))?
                    * (v(d2.at(&[r, s_, i]))? - v(d1.at(&[s_, i]))? * v(geo.nabla0_t.at(&[r]))?);
            }
        }
        for t in 0..n {
            acc -= v(xu.at(&[t]))? * v(ric.at(&[t, i]))?;
            for r in 0..n {
                acc += v(dv.at(&[t, r]))? * v(flag.at(&[t, r, i]))?;
            }
        }
        for r in 0..n {
            acc -= v(xu.at(&[r]))? * v(dt.at(&[i, r]))?;
        }
        data.push(acc);
    }
    TensorValue::new(n, vec![L], data, at_x, at_y)
}

/// Contract the first slot with `y` (re-exported for callers building ∇₀ by hand).
pub fn contract_with_y<T: Real>(tw: &Tower<T>, t: &JetTensor<T>) -> JetTensor<T> {
    let (_, ys) = tw.seeds(tw.order().min(MAX_ORDER));
    contract_first(t, &ys)
}
