//! hh-, hv- and vv-curvature of the Cartan connection, the tensor `R^i_jk`,
//! the Ricci trace, and the Ricci identity residual.
//!
//! Index layout: `R^h_kij` is stored as `[h][k][i][j]`, `R^i_jk` as `[i][j][k]`.
//! `R^i_jk` is taken as `δ_j N^i_k − δ_k N^i_j`, the sign for which
//! `R^i_jk = y^m R^i_mjk` holds with the hh-curvature below.

use serde::Serialize;

use crate::connection::{component_jets, DiffPath, TensorField, Tower};
use crate::error::{FinslerError, Result};
use crate::jets::Jet;
use crate::metric::FinslerStructure;
use crate::scalar::Real;
use crate::tensor::{JetTensor, Slot, TensorValue};

use Slot::{Lower as L, Upper as U};

/// Tower order needed for curvature values.
pub const CURVATURE_ORDER: usize = 4;

/// `R^i_jk = δ_j N^i_k − δ_k N^i_j`.
pub fn flag_jets<T: Real>(tw: &Tower<T>) -> JetTensor<T> {
    let geo = tw.geometry();
    JetTensor::from_fn(tw.n(), vec![U, L, L], |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        tw.delta(geo.nl.at(&[i, k]), j) - tw.delta(geo.nl.at(&[i, j]), k)
    })
}

/// `R^h_kij = δ_iΓ^h_jk − δ_jΓ^h_ik + Γ^l_jkΓ^h_il − Γ^l_ikΓ^h_jl + R^l_ij C^h_lk`.
pub fn hh_jets<T: Real>(tw: &Tower<T>, flag: &JetTensor<T>) -> JetTensor<T> {
    let geo = tw.geometry();
    let n = tw.n();
    let (gm, cv) = (&geo.gamma, &geo.cv);
    JetTensor::from_fn(n, vec![U, L, L, L], |ix| {
        let (h, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
        let mut acc = tw.delta(gm.at(&[h, j, k]), i) - tw.delta(gm.at(&[h, i, k]), j);
        for l in 0..n {
            acc += gm.at(&[l, j, k]) * gm.at(&[h, i, l]);
            acc -= gm.at(&[l, i, k]) * gm.at(&[h, j, l]);
            acc += flag.at(&[l, i, j]) * cv.at(&[h, l, k]);
        }
        acc
    })
}

/// `Q^h_kij = C^h_rj C^r_ki − C^h_ri C^r_kj`.
pub fn vv_jets<T: Real>(tw: &Tower<T>) -> JetTensor<T> {
    let cv = &tw.geometry().cv;
    let n = tw.n();
    JetTensor::from_fn(n, vec![U, L, L, L], |ix| {
        let (h, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
        let mut acc = Jet::zero();
        for r in 0..n {
            acc += cv.at(&[h, r, j]) * cv.at(&[r, k, i]);
            acc -= cv.at(&[h, r, i]) * cv.at(&[r, k, j]);
        }
        acc
    })
}

/// hv-curvature: `corrected = true` gives
/// `∂̇_jΓ^h_ki − δ_iC^h_kj + Γ^r_kiC^h_rj − C^r_kjΓ^h_ri + ∂̇_jN^r_i C^h_kr`;
/// `false` evaluates the printed variant literally, which reads `∂̇_kΓ^h_ki`
/// in the first term and `Γ^h_rj` in the fourth.
pub fn hv_jets<T: Real>(tw: &Tower<T>, corrected: bool) -> JetTensor<T> {
    let geo = tw.geometry();
    let n = tw.n();
    let (gm, cv, nl) = (&geo.gamma, &geo.cv, &geo.nl);
    JetTensor::from_fn(n, vec![U, L, L, L], |ix| {
        let (h, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
        let first = if corrected {
            tw.vdot(gm.at(&[h, k, i]), j)
        } else {
            tw.vdot(gm.at(&[h, k, i]), k)
        };
        let mut acc = first - tw.delta(cv.at(&[h, k, j]), i);
        for r in 0..n {
            acc += gm.at(&[r, k, i]) * cv.at(&[h, r, j]);
            let g4 = if corrected { gm.at(&[h, r, i]) } else { gm.at(&[h, r, j]) };
            acc -= cv.at(&[r, k, j]) * g4;
            acc += tw.vdot(nl.at(&[r, i]), j) * cv.at(&[h, k, r]);
        }
        acc
    })
}

/// `R_ij = R^l_ilj`.
pub fn ricci_jets<T: Real>(hh: &JetTensor<T>) -> JetTensor<T> {
    let n = hh.n;
    JetTensor::from_fn(n, vec![L, L], |ix| (0..n).map(|l| hh.at(&[l, ix[0], l, ix[1]]).clone()).sum())
}

/// All curvature tensors at a point.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureAtPoint<T> {
    /// `R^h_kij`
    pub hh: TensorValue<T>,
    /// `P^h_kij`, index-corrected
    pub hv: TensorValue<T>,
    /// `P^h_kij`, as printed
    pub hv_printed: TensorValue<T>,
    /// `Q^h_kij`
    pub vv: TensorValue<T>,
    /// `R^i_jk`
    pub flag: TensorValue<T>,
    /// `R_ij`
    pub ricci: TensorValue<T>,
}

pub fn curvature_at<T: Real>(s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<CurvatureAtPoint<T>> {
    let tw = Tower::new(s, x, y, CURVATURE_ORDER)?;
    let flag = flag_jets(&tw);
    let hh = hh_jets(&tw, &flag);
    Ok(CurvatureAtPoint {
        ricci: ricci_jets(&hh).to_value(x, y)?,
        hh: hh.to_value(x, y)?,
        hv: hv_jets(&tw, true).to_value(x, y)?,
        hv_printed: hv_jets(&tw, false).to_value(x, y)?,
        vv: vv_jets(&tw).to_value(x, y)?,
        flag: flag.to_value(x, y)?,
    })
}

pub fn hh_curvature<T: Real>(s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
    let tw = Tower::new(s, x, y, CURVATURE_ORDER)?;
    hh_jets(&tw, &flag_jets(&tw)).to_value(x, y)
}

pub fn hv_curvature<T: Real>(s: &FinslerStructure<T>, x: &[T], y: &[T], corrected: bool) -> Result<TensorValue<T>> {
    let tw = Tower::new(s, x, y, CURVATURE_ORDER)?;
    hv_jets(&tw, corrected).to_value(x, y)
}

pub fn vv_curvature<T: Real>(s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
    let tw = Tower::new(s, x, y, 3)?;
    vv_jets(&tw).to_value(x, y)
}

pub fn ricci_trace<T: Real>(s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
    let tw = Tower::new(s, x, y, CURVATURE_ORDER)?;
    ricci_jets(&hh_jets(&tw, &flag_jets(&tw))).to_value(x, y)
}

/// `R^i_jk` together with its two consistency checks.
#[derive(Debug, Clone, Serialize)]
pub struct FlagCurvature<T> {
    /// `δ_j N^i_k − δ_k N^i_j`
    pub value: TensorValue<T>,
    /// `y^m R^i_mjk` from the hh-curvature.
    pub contracted: TensorValue<T>,
    /// Largest `|R^i_jk − y^m R^i_mjk| / (1 + |R^i_jk|)`.
    pub contraction_defect: T,
    /// Largest `|R^i_jk + R^i_kj|`.
    pub antisymmetry_defect: T,
}

pub fn flag_curvature_tensor<T: Real>(s: &FinslerStructure<T>, x: &[T], y: &[T]) -> Result<FlagCurvature<T>> {
    let tw = Tower::new(s, x, y, CURVATURE_ORDER)?;
    let n = tw.n();
    let flag = flag_jets(&tw);
    let hh = hh_jets(&tw, &flag);
    let value = flag.to_value(x, y)?;
    let hhv = hh.to_value(x, y)?;
    let mut contracted = vec![T::zero(); n * n * n];
    let mut contraction_defect = T::zero();
    let mut antisymmetry_defect = T::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c: T = (0..n).map(|m| y[m] * hhv.get(&[i, m, j, k])).sum();
                contracted[(i * n + j) * n + k] = c;
                let r = value.get(&[i, j, k]);
                contraction_defect = contraction_defect.max((r - c).abs() / (T::one() + r.abs()));
                antisymmetry_defect = antisymmetry_defect.max((r + value.get(&[i, k, j])).abs());
            }
        }
    }
    Ok(FlagCurvature {
        contracted: TensorValue::new(n, vec![U, L, L], contracted, x, y)?,
        value,
        contraction_defect,
        antisymmetry_defect,
    })
}

/// `∇_k∇_hX^i − ∇_h∇_kX^i − X^r R^i_rkh + ∇̇_rX^i R^r_kh`, stored `[k][h][i]`.
pub fn ricci_identity_residual<T: Real>(
    s: &FinslerStructure<T>,
    field: &dyn TensorField<T>,
    x: &[T],
    y: &[T],
) -> Result<(TensorValue<T>, DiffPath)> {
    if field.variance() != vec![U] || field.dim() != s.dim {
        return Err(FinslerError::Domain("the Ricci identity takes a vector field".into()));
    }
    let tw = Tower::new(s, x, y, CURVATURE_ORDER)?;
    let n = tw.n();
    let (comps, path) = component_jets(s, field, &tw, 2)?;
    let xv = JetTensor::new(n, vec![U], comps);
    let d1 = tw.nabla_h(&xv);
    let d2 = tw.nabla_h(&d1);
    let dv = tw.nabla_v(&xv);
    let flag = flag_jets(&tw);
    let hh = hh_jets(&tw, &flag);
    let res = JetTensor::from_fn(n, vec![L, L, U], |ix| {
        let (k, h, i) = (ix[0], ix[1], ix[2]);
        let mut acc = d2.at(&[k, h, i]) - d2.at(&[h, k, i]);
        for r in 0..n {
            acc -= xv.at(&[r]) * hh.at(&[i, r, k, h]);
            acc += dv.at(&[r, i]) * flag.at(&[r, k, h]);
        }
        acc
    });
    Ok((res.to_value(x, y)?, path))
}
