//! Multi-index arrays with an explicit variance signature.

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::jets::Jet;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Upper,
    Lower,
}

/// Row-major flat offset of a multi-index; every slot has extent `n`.
#[inline]
pub fn flat_index(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Inverse of [`flat_index`].
pub fn multi_index(n: usize, rank: usize, mut flat: usize) -> Vec<usize> {
    let mut out = vec![0; rank];
    for slot in (0..rank).rev() {
        out[slot] = flat % n;
        flat /= n;
    }
    out
}

/// Every multi-index of the given rank, in row-major order.
pub fn all_indices(n: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n.pow(rank as u32)).map(move |f| multi_index(n, rank, f))
}

/// Sign of the permutation sorting `idx`, or 0 if an index repeats.
pub fn permutation_sign(idx: &[usize]) -> i32 {
    let mut sign = 1;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            if idx[a] == idx[b] {
                return 0;
            }
            if idx[a] > idx[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// A tensor evaluated at a point of the slit tangent bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorValue<T> {
    pub n: usize,
    pub variance: Vec<Slot>,
    pub data: Vec<T>,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> TensorValue<T> {
    pub fn new(n: usize, variance: Vec<Slot>, data: Vec<T>, x: &[T], y: &[T]) -> Result<Self> {
        if data.len() != n.pow(variance.len() as u32) {
            return Err(FinslerError::Domain(format!(
                "tensor data of length {} does not fit rank {} in dimension {n}",
                data.len(),
                variance.len()
            )));
        }
        Ok(TensorValue {
            n,
            variance,
            data,
            x: x.to_vec(),
            y: y.to_vec(),
        })
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[flat_index(self.n, idx)]
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest `|a - b|` over all components.
    pub fn max_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Convenience view of a rank-2 tensor as rows.
    pub fn matrix(&self) -> Vec<Vec<T>> {
        assert_eq!(self.rank(), 2);
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }
}

/// Tensor whose components are jets around a common base point.
#[derive(Clone)]
pub struct JetTensor<T> {
    pub n: usize,
    pub variance: Vec<Slot>,
    pub comps: Vec<Jet<T>>,
}

impl<T: Real> std::fmt::Debug for JetTensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JetTensor")
            .field("n", &self.n)
            .field("variance", &self.variance)
            .field("comps", &self.comps)
            .finish()
    }
}

impl<T: Real> JetTensor<T> {
    pub fn new(n: usize, variance: Vec<Slot>, comps: Vec<Jet<T>>) -> Self {
        assert_eq!(comps.len(), n.pow(variance.len() as u32), "component count");
        JetTensor { n, variance, comps }
    }

    pub fn zeros(n: usize, variance: Vec<Slot>) -> Self {
        let len = n.pow(variance.len() as u32);
        JetTensor {
            n,
            variance,
            comps: vec![Jet::zero(); len],
        }
    }

    pub fn scalar(v: Jet<T>) -> Self {
        JetTensor {
            n: 1,
            variance: vec![],
            comps: vec![v],
        }
    }

    pub fn from_fn(n: usize, variance: Vec<Slot>, mut f: impl FnMut(&[usize]) -> Jet<T>) -> Self {
        let rank = variance.len();
        let len = n.pow(rank as u32);
        let mut idx = vec![0; rank];
        let mut comps = Vec::with_capacity(len);
        for _ in 0..len {
            comps.push(f(&idx));
            // odometer step, last slot fastest
            for slot in (0..rank).rev() {
                idx[slot] += 1;
                if idx[slot] < n {
                    break;
                }
                idx[slot] = 0;
            }
        }
        JetTensor { n, variance, comps }
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    #[inline]
    pub fn at(&self, idx: &[usize]) -> &Jet<T> {
        &self.comps[flat_index(self.n, idx)]
    }

    pub fn map(&self, f: impl Fn(&Jet<T>) -> Jet<T>) -> Self {
        JetTensor {
            n: self.n,
            variance: self.variance.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&Jet<T>, &Jet<T>) -> Jet<T>) -> Self {
        assert_eq!(self.comps.len(), other.comps.len());
        JetTensor {
            n: self.n,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|a| a.scale(s))
    }

    /// Value part of every component; fails if some component ran out of order.
    pub fn values(&self) -> Result<Vec<T>> {
        self.comps.iter().map(|c| c.checked_value()).collect()
    }

    pub fn to_value(&self, x: &[T], y: &[T]) -> Result<TensorValue<T>> {
        TensorValue::new(self.n, self.variance.clone(), self.values()?, x, y)
    }

    /// Reorder slots: output slot `k` is input slot `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let rank = self.rank();
        assert_eq!(perm.len(), rank);
        let variance = perm.iter().map(|&p| self.variance[p]).collect();
        let mut src = vec![0; rank];
        JetTensor::from_fn(self.n, variance, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.at(&src).clone()
        })
    }
}
