//! Smooth coefficient fields: trigonometric polynomials on the chart, vector
//! fields on the base, and the coefficient functions of horizontal forms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::jets::{table, Jet, MAX_VARS};
use crate::scalar::{Real, Scalar};

/// `amp · cos(freq · x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct TrigTerm<T> {
    pub amp: T,
    pub freq: Vec<i32>,
    #[serde(default)]
    pub phase: T,
}

/// Finite trigonometric polynomial in the chart coordinates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct TrigPoly<T> {
    #[serde(default)]
    pub constant: T,
    #[serde(default)]
    pub terms: Vec<TrigTerm<T>>,
}

impl<T: Real> TrigPoly<T> {
    pub fn constant(c: T) -> Self {
        TrigPoly {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// `amp · sin(x^axis)` in dimension `n`.
    pub fn sin_axis(n: usize, axis: usize, amp: T) -> Self {
        let mut freq = vec![0; n];
        freq[axis] = 1;
        TrigPoly {
            constant: T::zero(),
            terms: vec![TrigTerm {
                amp,
                freq,
                phase: -T::FRAC_PI_2(),
            }],
        }
    }

    /// `amp · cos(x^axis)` in dimension `n`.
    pub fn cos_axis(n: usize, axis: usize, amp: T) -> Self {
        let mut freq = vec![0; n];
        freq[axis] = 1;
        TrigPoly {
            constant: T::zero(),
            terms: vec![TrigTerm {
                amp,
                freq,
                phase: T::zero(),
            }],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.amp == T::zero() || t.freq.iter().all(|&f| f == 0))
    }

    /// Largest `|freq|_∞` among the terms.
    pub fn degree(&self) -> i32 {
        self.terms
            .iter()
            .flat_map(|t| t.freq.iter().map(|f| f.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Taylor jet at `x` in a `nvars`-variable space whose first `x.len()`
    /// variables are the chart coordinates. Filled directly from
    /// `∂^α cos(k·x + c) = cos(k·x + c + |α|π/2) k^α`.
    pub fn taylor(&self, x: &[T], nvars: usize, order: usize) -> Jet<T> {
        let t = table(nvars);
        let mut jet = Jet::constant_in(nvars, order, self.constant);
        let c = jet.coeffs_mut();
        let n = x.len();
        for term in &self.terms {
            if term.amp == T::zero() {
                continue;
            }
            let arg = term.phase + x.iter().zip(&term.freq).map(|(&xi, &f)| xi * T::lit(f as f64)).sum::<T>();
            let (s, co) = arg.sin_cos();
            // cos(arg + kπ/2) cycles through cos, −sin, −cos, sin
            let cycle = [co * term.amp, -s * term.amp, -co * term.amp, s * term.amp];
            // scaled[i][a] = k_i^a / a!
            let mut scaled = [[T::one(); 8]; MAX_VARS];
            for (i, row) in scaled.iter_mut().enumerate().take(n) {
                let k = T::lit(term.freq[i] as f64);
                for a in 1..=order {
                    row[a] = row[a - 1] * k / T::lit(a as f64);
                }
            }
            for (idx, slot) in c.iter_mut().enumerate() {
                let e = t.exponents(idx);
                if e[n..].iter().any(|&v| v != 0) {
                    continue;
                }
                let mut w = T::one();
                let mut deg = 0;
                for (i, &a) in e[..n].iter().enumerate() {
                    w *= scaled[i][a as usize];
                    deg += a as usize;
                }
                if w != T::zero() {
                    *slot += cycle[deg % 4] * w;
                }
            }
        }
        jet
    }

    pub fn eval<S: Scalar<T>>(&self, x: &[S]) -> S {
        let mut acc = S::from_real(self.constant);
        for term in &self.terms {
            if term.amp == T::zero() {
                continue;
            }
            let mut arg = S::from_real(term.phase);
            let mut any = false;
            for (xi, &f) in x.iter().zip(&term.freq) {
                if f != 0 {
                    arg = arg + xi.clone() * T::lit(f as f64);
                    any = true;
                }
            }
            if any {
                acc = acc + arg.cos() * term.amp;
            } else {
                acc = acc + S::from_real(term.amp * term.phase.cos());
            }
        }
        acc
    }

    /// Random polynomial with `nterms` terms of degree at most `max_degree`
    /// and amplitudes in `[-amp, amp]`.
    pub fn random<R: Rng>(rng: &mut R, n: usize, max_degree: i32, nterms: usize, amp: f64) -> Self {
        let mut terms = Vec::with_capacity(nterms);
        for _ in 0..nterms {
            let mut freq: Vec<i32> = (0..n).map(|_| rng.gen_range(-max_degree..=max_degree)).collect();
            if freq.iter().all(|&f| f == 0) {
                freq[rng.gen_range(0..n)] = 1;
            }
            terms.push(TrigTerm {
                amp: T::lit(rng.gen_range(-amp..=amp)),
                freq,
                phase: T::lit(rng.gen_range(0.0..std::f64::consts::TAU)),
            });
        }
        TrigPoly {
            constant: T::lit(rng.gen_range(-amp..=amp)),
            terms,
        }
    }
}

/// Vector field `X = X^i(x) ∂_i` on the base manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct VectorField<T> {
    pub components: Vec<TrigPoly<T>>,
}

impl<T: Real> VectorField<T> {
    pub fn new(components: Vec<TrigPoly<T>>) -> Self {
        VectorField { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn constant(values: &[T]) -> Self {
        VectorField {
            components: values.iter().map(|&v| TrigPoly::constant(v)).collect(),
        }
    }

    /// The coordinate field `∂_axis`.
    pub fn coordinate(n: usize, axis: usize) -> Self {
        let mut v = vec![T::zero(); n];
        v[axis] = T::one();
        Self::constant(&v)
    }

    pub fn eval<S: Scalar<T>>(&self, x: &[S]) -> Vec<S> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// Component jets at `x`; see [`TrigPoly::taylor`].
    pub fn taylor(&self, x: &[T], nvars: usize, order: usize) -> Vec<Jet<T>> {
        self.components.iter().map(|c| c.taylor(x, nvars, order)).collect()
    }

    pub fn random<R: Rng>(rng: &mut R, n: usize, max_degree: i32, nterms: usize) -> Self {
        VectorField {
            components: (0..n).map(|_| TrigPoly::random(rng, n, max_degree, nterms, 1.0)).collect(),
        }
    }
}

/// Coefficient of a horizontal form: `poly(x) · (1 + Σ_k w_k y^k / F(x, y))`.
///
/// The optional direction weights make the coefficient depend on the fiber
/// point while staying 0-homogeneous in `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct Coefficient<T> {
    pub poly: TrigPoly<T>,
    #[serde(default)]
    pub direction_weights: Option<Vec<T>>,
}

impl<T: Real> Coefficient<T> {
    pub fn base(poly: TrigPoly<T>) -> Self {
        Coefficient {
            poly,
            direction_weights: None,
        }
    }

    pub fn constant(c: T) -> Self {
        Self::base(TrigPoly::constant(c))
    }

    pub fn depends_on_direction(&self) -> bool {
        self.direction_weights
            .as_ref()
            .is_some_and(|w| w.iter().any(|&v| v != T::zero()))
    }

    /// Evaluate given the Finsler norm `f = F(x, y)`.
    pub fn eval<S: Scalar<T>>(&self, x: &[S], y: &[S], f: &S) -> S {
        let p = self.poly.eval(x);
        match &self.direction_weights {
            Some(w) if self.depends_on_direction() => {
                let mut dot = S::from_real(T::zero());
                for (wk, yk) in w.iter().zip(y) {
                    dot = dot + yk.clone() * *wk;
                }
                p.clone() + p * (dot / f.clone())
            }
            _ => p,
        }
    }
}
