//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `c_α` of a smooth function around a
//! base point, for every multi-index `α` with `|α| <= order`. Arithmetic and the
//! elementary functions propagate the truncation exactly, so a single forward
//! evaluation yields every mixed partial up to `order`:
//! `∂^α f = α! c_α`.
//!
//! Differentiating a jet drops its order by one. Everything downstream of the
//! metric (spray, connection, curvature, form operators) is computed on jets and
//! the remaining order is tracked automatically; running out of order shows up
//! as an [`FinslerError::OrderTooHigh`] at the point where a value is read.
//!
//! Monomials are stored in graded order, so the coefficients of a lower-order
//! truncation are always a prefix of the higher-order ones.

use smallvec::{smallvec, SmallVec};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use crate::error::{FinslerError, Result};
use crate::scalar::{Real, Scalar};

/// Maximum number of jet variables (2n for n = 3 plus headroom).
pub const MAX_VARS: usize = 8;
/// Highest truncation order the monomial tables are built for.
pub const MAX_ORDER: usize = 6;
/// Documented limit for user-facing [`partial`] requests.
pub const PARTIAL_ORDER_LIMIT: usize = 4;

const EXACT: u8 = u8::MAX;

/// Multiplication and differentiation tables for one variable count.
#[derive(Debug)]
pub struct MonomialTable {
    nvars: usize,
    exps: Vec<[u8; MAX_VARS]>,
    /// `count[k]` = number of monomials of degree `<= k`.
    count: Vec<usize>,
    /// `(a, b, c)` with `x^a x^b = x^c`, sorted by the degree of `c`.
    mul: Vec<(u32, u32, u32)>,
    /// `mul_end[k]` = number of products whose degree is `<= k`.
    mul_end: Vec<usize>,
    /// `up[v][m]` = index of `m + e_v` (valid while `deg m < MAX_ORDER`).
    up: Vec<Vec<u32>>,
}

impl MonomialTable {
    fn build(nvars: usize) -> Self {
        let mut exps: Vec<[u8; MAX_VARS]> = Vec::new();
        let mut count = Vec::with_capacity(MAX_ORDER + 1);
        for deg in 0..=MAX_ORDER {
            let mut cur = [0u8; MAX_VARS];
            push_degree(nvars, deg, 0, &mut cur, &mut exps);
            count.push(exps.len());
        }
        let lookup: std::collections::HashMap<[u8; MAX_VARS], u32> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (*e, i as u32))
            .collect();
        let degree = |e: &[u8; MAX_VARS]| e.iter().map(|&v| v as usize).sum::<usize>();

        let mut mul = Vec::new();
        for (ia, ea) in exps.iter().enumerate() {
            for (ib, eb) in exps.iter().enumerate() {
                if degree(ea) + degree(eb) > MAX_ORDER {
                    continue;
                }
                let mut ec = [0u8; MAX_VARS];
                for v in 0..nvars {
                    ec[v] = ea[v] + eb[v];
                }
                mul.push((ia as u32, ib as u32, lookup[&ec]));
            }
        }
        mul.sort_by_key(|&(_, _, c)| (degree(&exps[c as usize]), c));
        let mut mul_end = vec![0; MAX_ORDER + 1];
        for (k, end) in mul_end.iter_mut().enumerate() {
            *end = mul
                .iter()
                .take_while(|&&(_, _, c)| degree(&exps[c as usize]) <= k)
                .count();
        }

        let up = (0..nvars)
            .map(|v| {
                exps.iter()
                    .map(|e| {
                        if degree(e) >= MAX_ORDER {
                            return u32::MAX;
                        }
                        let mut f = *e;
                        f[v] += 1;
                        lookup[&f]
                    })
                    .collect()
            })
            .collect();

        MonomialTable {
            nvars,
            exps,
            count,
            mul,
            mul_end,
            up,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of coefficients of a jet truncated at `order`.
    pub fn len(&self, order: usize) -> usize {
        self.count[order]
    }

    pub fn exponents(&self, idx: usize) -> &[u8] {
        &self.exps[idx][..self.nvars]
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        if deg > MAX_ORDER || alpha.len() != self.nvars {
            return None;
        }
        let start = if deg == 0 { 0 } else { self.count[deg - 1] };
        (start..self.count[deg]).find(|&i| &self.exps[i][..self.nvars] == alpha)
    }
}

fn push_degree(nvars: usize, remaining: usize, var: usize, cur: &mut [u8; MAX_VARS], out: &mut Vec<[u8; MAX_VARS]>) {
    if var + 1 == nvars || nvars == 0 {
        if nvars == 0 {
            if remaining == 0 {
                out.push(*cur);
            }
            return;
        }
        cur[var] = remaining as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for take in (0..=remaining).rev() {
        cur[var] = take as u8;
        push_degree(nvars, remaining - take, var + 1, cur, out);
    }
    cur[var] = 0;
}

/// Shared table for `nvars` variables.
pub fn table(nvars: usize) -> &'static MonomialTable {
    static TABLES: [OnceLock<MonomialTable>; MAX_VARS + 1] = [const { OnceLock::new() }; MAX_VARS + 1];
    assert!(nvars <= MAX_VARS, "at most {MAX_VARS} jet variables");
    TABLES[nvars].get_or_init(|| MonomialTable::build(nvars))
}

/// Inline storage covers order ≤ 2 in four variables without allocating.
type Coeffs<T> = SmallVec<[T; 16]>;

/// Truncated Taylor expansion in `nvars` variables.
///
/// Constants (`nvars == 0`) are exact at every order and broadcast against
/// jets of any variable count.
#[derive(Clone, PartialEq)]
pub struct Jet<T> {
    nvars: u8,
    order: u8,
    c: Coeffs<T>,
}

impl<T: Real> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_const() {
            write!(f, "Jet({:?})", self.c[0])
        } else {
            write!(f, "Jet[v{} o{}]{:?}", self.nvars, self.order, self.c)
        }
    }
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        Jet {
            nvars: 0,
            order: EXACT,
            c: smallvec![v],
        }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// The coordinate function `value + t_var` in a space of `nvars` variables.
    pub fn variable(nvars: usize, order: usize, value: T, var: usize) -> Self {
        assert!(order <= MAX_ORDER && var < nvars);
        let t = table(nvars);
        let mut c: Coeffs<T> = smallvec![T::zero(); t.len(order)];
        c[0] = value;
        if order >= 1 {
            // Degree-one monomials follow the constant, ordered by descending
            // exponent of the earliest variable, i.e. e_0, e_1, ...
            c[1 + var] = T::one();
        }
        Jet {
            nvars: nvars as u8,
            order: order as u8,
            c,
        }
    }

    /// Constant embedded in a concrete variable space (useful when a jet must
    /// report a finite order).
    pub fn constant_in(nvars: usize, order: usize, v: T) -> Self {
        let t = table(nvars);
        let mut c: Coeffs<T> = smallvec![T::zero(); t.len(order)];
        c[0] = v;
        Jet {
            nvars: nvars as u8,
            order: order as u8,
            c,
        }
    }

    /// Mutable coefficients in monomial-table order.
    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.c
    }

    pub fn from_coeffs(nvars: usize, order: usize, c: Vec<T>) -> Self {
        assert_eq!(c.len(), table(nvars).len(order));
        Jet {
            nvars: nvars as u8,
            order: order as u8,
            c: SmallVec::from_vec(c),
        }
    }

    #[inline]
    pub fn is_const(&self) -> bool {
        self.nvars == 0
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    /// Truncation order; `None` for exact constants.
    pub fn order(&self) -> Option<usize> {
        match self.order {
            EXACT => None,
            o if o == EXACT - 1 => Some(0),
            o => Some(o as usize),
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    #[inline]
    pub fn value(&self) -> T {
        self.c[0]
    }

    /// Value, failing if the truncation order has been exhausted.
    pub fn checked_value(&self) -> Result<T> {
        if self.is_exhausted() {
            return Err(FinslerError::OrderTooHigh {
                requested: 1,
                limit: 0,
            });
        }
        Ok(self.c[0])
    }

    /// Taylor coefficient for multi-index `alpha` (zero for constants beyond degree 0).
    pub fn coeff(&self, alpha: &[u8]) -> Result<T> {
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        if self.is_const() {
            return Ok(if deg == 0 { self.c[0] } else { T::zero() });
        }
        if deg > self.order as usize {
            return Err(FinslerError::OrderTooHigh {
                requested: deg,
                limit: self.order as usize,
            });
        }
        let idx = table(self.nvars()).index_of(alpha).ok_or(FinslerError::OrderTooHigh {
            requested: deg,
            limit: MAX_ORDER,
        })?;
        Ok(self.c[idx])
    }

    /// Mixed partial derivative `∂^alpha f` at the base point.
    pub fn partial(&self, alpha: &[u8]) -> Result<T> {
        let mut fact = T::one();
        for &a in alpha {
            for k in 2..=a {
                fact *= T::lit(k as f64);
            }
        }
        Ok(self.coeff(alpha)? * fact)
    }

    /// Partial derivative with respect to variable `var`; order drops by one.
    pub fn d(&self, var: usize) -> Self {
        if self.is_const() {
            return Self::zero();
        }
        assert!(var < self.nvars());
        if self.is_exhausted() {
            return self.clone();
        }
        if self.order == 0 {
            // No information left about derivatives; callers read values only
            // from jets with order >= 0, so mark as exhausted via an empty jet.
            return Jet {
                nvars: self.nvars,
                order: EXACT - 1,
                c: smallvec![T::nan()],
            };
        }
        let t = table(self.nvars());
        let new_order = self.order as usize - 1;
        let len = t.len(new_order);
        let up = &t.up[var];
        let c = (0..len)
            .map(|m| {
                let e = t.exps[m][var] as f64 + 1.0;
                self.c[up[m] as usize] * T::lit(e)
            })
            .collect();
        Jet {
            nvars: self.nvars,
            order: new_order as u8,
            c,
        }
    }

    /// Drop coefficients beyond `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if self.is_const() || self.is_exhausted() || order >= self.order as usize {
            return self.clone();
        }
        let t = table(self.nvars());
        Jet {
            nvars: self.nvars,
            order: order as u8,
            c: SmallVec::from_slice(&self.c[..t.len(order)]),
        }
    }

    /// True when derivative information was exhausted by differentiation.
    pub fn is_exhausted(&self) -> bool {
        self.order == EXACT - 1
    }

    pub fn scale(&self, s: T) -> Self {
        Jet {
            nvars: self.nvars,
            order: self.order,
            c: self.c.iter().map(|&v| v * s).collect(),
        }
    }

    fn shift(&self, s: T) -> Self {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    fn zip_add(&self, other: &Self, sign: T) -> Self {
        if other.is_const() {
            return self.shift(other.c[0] * sign);
        }
        if self.is_const() {
            return other.scale(sign).shift(self.c[0]);
        }
        debug_assert_eq!(self.nvars, other.nvars, "mixed jet spaces");
        let order = self.order.min(other.order);
        if self.is_exhausted() || other.is_exhausted() {
            return exhausted(self.nvars);
        }
        let len = table(self.nvars()).len(order as usize);
        let c = self.c[..len]
            .iter()
            .zip(&other.c[..len])
            .map(|(&a, &b)| a + b * sign)
            .collect();
        Jet {
            nvars: self.nvars,
            order,
            c,
        }
    }

    fn product(&self, other: &Self) -> Self {
        if self.is_const() {
            return other.scale(self.c[0]);
        }
        if other.is_const() {
            return self.scale(other.c[0]);
        }
        debug_assert_eq!(self.nvars, other.nvars, "mixed jet spaces");
        if self.is_exhausted() || other.is_exhausted() {
            return exhausted(self.nvars);
        }
        let order = self.order.min(other.order) as usize;
        let t = table(self.nvars());
        let mut c: Coeffs<T> = smallvec![T::zero(); t.len(order)];
        for &(a, b, m) in &t.mul[..t.mul_end[order]] {
            c[m as usize] += self.c[a as usize] * other.c[b as usize];
        }
        Jet {
            nvars: self.nvars,
            order: order as u8,
            c,
        }
    }

    /// `Σ_m coef[m] (self - self0)^m`, the Taylor composition used by every
    /// elementary function.
    fn compose(&self, coef: &[T]) -> Self {
        if self.is_const() || self.order == 0 {
            let mut out = self.clone();
            out.c[0] = coef[0];
            return out;
        }
        if self.is_exhausted() {
            return self.clone();
        }
        let mut h = self.clone();
        h.c[0] = T::zero();
        let k = self.order as usize;
        let mut acc = Jet::constant(coef[k]);
        for m in (0..k).rev() {
            acc = acc.product(&h).shift(coef[m]);
        }
        if acc.is_const() {
            // k == 0 handled above; keep the jet space of the argument.
            return Jet::constant_in(self.nvars(), k, acc.c[0]);
        }
        acc
    }

    fn order_or_zero(&self) -> usize {
        if self.is_const() || self.is_exhausted() {
            0
        } else {
            self.order as usize
        }
    }

    pub fn recip_jet(&self) -> Self {
        let a = self.c[0];
        let k = self.order_or_zero();
        let inv = a.recip();
        let mut coef = Vec::with_capacity(k + 1);
        let mut p = inv;
        for _ in 0..=k {
            coef.push(p);
            p = -p * inv;
        }
        self.compose(&coef)
    }

    pub fn powf_jet(&self, e: T) -> Self {
        let a = self.c[0];
        let k = self.order_or_zero();
        let mut coef = Vec::with_capacity(k + 1);
        let mut binom = T::one();
        for m in 0..=k {
            let mf = T::lit(m as f64);
            coef.push(binom * a.powf(e - mf));
            binom = binom * (e - mf) / (mf + T::one());
        }
        self.compose(&coef)
    }

    pub fn sqrt_jet(&self) -> Self {
        self.powf_jet(T::lit(0.5))
    }

    pub fn exp_jet(&self) -> Self {
        let k = self.order_or_zero();
        let e = self.c[0].exp();
        let mut coef = Vec::with_capacity(k + 1);
        let mut fact = T::one();
        for m in 0..=k {
            if m > 0 {
                fact *= T::lit(m as f64);
            }
            coef.push(e / fact);
        }
        self.compose(&coef)
    }

    pub fn ln_jet(&self) -> Self {
        let a = self.c[0];
        let k = self.order_or_zero();
        let mut coef = vec![a.ln()];
        for m in 1..=k {
            let sign = if m % 2 == 1 { T::one() } else { -T::one() };
            coef.push(sign / (T::lit(m as f64) * a.powi(m as i32)));
        }
        self.compose(&coef)
    }

    fn trig(&self, phase: usize) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let cycle = [s, c, -s, -c];
        let k = self.order_or_zero();
        let mut coef = Vec::with_capacity(k + 1);
        let mut fact = T::one();
        for m in 0..=k {
            if m > 0 {
                fact *= T::lit(m as f64);
            }
            coef.push(cycle[(m + phase) % 4] / fact);
        }
        self.compose(&coef)
    }

    pub fn sin_jet(&self) -> Self {
        self.trig(0)
    }

    pub fn cos_jet(&self) -> Self {
        self.trig(1)
    }

    pub fn powi_jet(&self, k: i32) -> Self {
        if k < 0 {
            return self.recip_jet().powi_jet(-k);
        }
        let mut acc = Jet::constant(T::one());
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.product(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base);
            }
        }
        acc
    }
}

fn exhausted<T: Real>(nvars: u8) -> Jet<T> {
    Jet {
        nvars,
        order: EXACT - 1,
        c: smallvec![T::nan()],
    }
}

macro_rules! jet_binop {
    ($tr:ident, $f:ident, $body:expr) => {
        impl<T: Real> $tr<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $f(self, rhs: Jet<T>) -> Jet<T> {
                $body(&self, &rhs)
            }
        }
        impl<'a, T: Real> $tr<&'a Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $f(self, rhs: &'a Jet<T>) -> Jet<T> {
                $body(&self, rhs)
            }
        }
        impl<'a, T: Real> $tr<Jet<T>> for &'a Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $f(self, rhs: Jet<T>) -> Jet<T> {
                $body(self, &rhs)
            }
        }
        impl<'a, 'b, T: Real> $tr<&'b Jet<T>> for &'a Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $f(self, rhs: &'b Jet<T>) -> Jet<T> {
                $body(self, rhs)
            }
        }
        impl<T: Real> $tr<T> for Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $f(self, rhs: T) -> Jet<T> {
                $body(&self, &Jet::constant(rhs))
            }
        }
        impl<'a, T: Real> $tr<T> for &'a Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $f(self, rhs: T) -> Jet<T> {
                $body(self, &Jet::constant(rhs))
            }
        }
    };
}

jet_binop!(Add, add, |a: &Jet<T>, b: &Jet<T>| a.zip_add(b, T::one()));
jet_binop!(Sub, sub, |a: &Jet<T>, b: &Jet<T>| a.zip_add(b, -T::one()));
jet_binop!(Mul, mul, |a: &Jet<T>, b: &Jet<T>| a.product(b));
jet_binop!(Div, div, |a: &Jet<T>, b: &Jet<T>| {
    if b.is_const() {
        a.scale(b.c[0].recip())
    } else {
        a.product(&b.recip_jet())
    }
});

impl<T: Real> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> AddAssign<&Jet<T>> for Jet<T> {
    fn add_assign(&mut self, rhs: &Jet<T>) {
        if !self.is_const() && !rhs.is_const() && self.order == rhs.order && !self.is_exhausted() {
            for (a, &b) in self.c.iter_mut().zip(&rhs.c) {
                *a += b;
            }
        } else {
            *self = self.zip_add(rhs, T::one());
        }
    }
}

impl<T: Real> AddAssign<Jet<T>> for Jet<T> {
    fn add_assign(&mut self, rhs: Jet<T>) {
        *self += &rhs;
    }
}

impl<T: Real> SubAssign<&Jet<T>> for Jet<T> {
    fn sub_assign(&mut self, rhs: &Jet<T>) {
        *self = self.zip_add(rhs, -T::one());
    }
}

impl<T: Real> SubAssign<Jet<T>> for Jet<T> {
    fn sub_assign(&mut self, rhs: Jet<T>) {
        *self -= &rhs;
    }
}

impl<T: Real> std::iter::Sum for Jet<T> {
    fn sum<I: Iterator<Item = Jet<T>>>(iter: I) -> Self {
        let mut acc = Jet::zero();
        for j in iter {
            acc += j;
        }
        acc
    }
}

impl<T: Real> Scalar<T> for Jet<T> {
    fn from_real(v: T) -> Self {
        Jet::constant(v)
    }
    fn re(&self) -> T {
        self.value()
    }
    fn sqrt(&self) -> Self {
        self.sqrt_jet()
    }
    fn sin(&self) -> Self {
        self.sin_jet()
    }
    fn cos(&self) -> Self {
        self.cos_jet()
    }
    fn exp(&self) -> Self {
        self.exp_jet()
    }
    fn ln(&self) -> Self {
        self.ln_jet()
    }
    fn recip(&self) -> Self {
        self.recip_jet()
    }
    fn powi(&self, k: i32) -> Self {
        self.powi_jet(k)
    }
    fn powf(&self, e: T) -> Self {
        self.powf_jet(e)
    }
}

/// Seed jets for a point `(x, y)` of the tangent bundle: variables `0..n` are
/// the `x` displacements, `n..2n` the `y` displacements.
pub fn seed_point<T: Real>(x: &[T], y: &[T], order: usize) -> (Vec<Jet<T>>, Vec<Jet<T>>) {
    let n = x.len();
    let xs = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(2 * n, order, v, i))
        .collect();
    let ys = y
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(2 * n, order, v, n + i))
        .collect();
    (xs, ys)
}

/// A smooth scalar field on the slit tangent bundle, usable both with plain
/// values and with jets.
pub trait ScalarField<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T], y: &[T]) -> Result<T>;
    fn jet(&self, x: &[Jet<T>], y: &[Jet<T>]) -> Result<Jet<T>>;
}

/// Scalar fields written once, generically over the evaluation scalar.
pub trait SmoothField<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn at<S: Scalar<T>>(&self, x: &[S], y: &[S]) -> Result<S>;
}

impl<T: Real, G: SmoothField<T>> ScalarField<T> for G {
    fn dim(&self) -> usize {
        SmoothField::dim(self)
    }
    fn value(&self, x: &[T], y: &[T]) -> Result<T> {
        self.at(x, y)
    }
    fn jet(&self, x: &[Jet<T>], y: &[Jet<T>]) -> Result<Jet<T>> {
        self.at(x, y)
    }
}

/// A request for one mixed partial of a scalar field at `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetRequest<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    /// Derivative orders in each `x` coordinate.
    pub x_orders: Vec<u8>,
    /// Derivative orders in each `y` coordinate.
    pub y_orders: Vec<u8>,
}

impl<T: Real> JetRequest<T> {
    pub fn new(x: Vec<T>, y: Vec<T>, x_orders: Vec<u8>, y_orders: Vec<u8>) -> Self {
        JetRequest {
            x,
            y,
            x_orders,
            y_orders,
        }
    }

    pub fn total_order(&self) -> usize {
        self.x_orders.iter().chain(&self.y_orders).map(|&a| a as usize).sum()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.x.len() != dim || self.y.len() != dim || self.x_orders.len() != dim || self.y_orders.len() != dim {
            return Err(FinslerError::Domain(format!(
                "jet request dimensions do not match field dimension {dim}"
            )));
        }
        Ok(())
    }
}

/// Exact-to-roundoff mixed partial by forward Taylor propagation.
pub fn partial<T: Real>(field: &dyn ScalarField<T>, req: &JetRequest<T>) -> Result<T> {
    req.validate(field.dim())?;
    let order = req.total_order();
    if order > PARTIAL_ORDER_LIMIT {
        return Err(FinslerError::OrderTooHigh {
            requested: order,
            limit: PARTIAL_ORDER_LIMIT,
        });
    }
    let (xs, ys) = seed_point(&req.x, &req.y, order);
    let f = field.jet(&xs, &ys)?;
    let alpha: Vec<u8> = req.x_orders.iter().chain(&req.y_orders).copied().collect();
    let v = f.partial(&alpha)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FinslerError::Domain("non-finite derivative".into()))
    }
}

/// Default finite-difference step for a coordinate value.
pub fn default_step<T: Real>(coord: T) -> T {
    T::lit(1e-4) * (T::one() + coord.abs())
}

/// Central finite-difference approximation of the same partial, used as an
/// independent oracle. First derivatives use the 4th-order five-point stencil,
/// higher ones nest 2nd-order central differences one axis at a time.
/// `step = None` uses [`default_step`] per coordinate.
pub fn fd_partial<T: Real>(field: &dyn ScalarField<T>, req: &JetRequest<T>, step: Option<T>) -> Result<T> {
    req.validate(field.dim())?;
    let n = field.dim();
    let mut axes: Vec<usize> = Vec::new();
    for (i, &o) in req.x_orders.iter().enumerate() {
        axes.extend(std::iter::repeat(i).take(o as usize));
    }
    for (i, &o) in req.y_orders.iter().enumerate() {
        axes.extend(std::iter::repeat(n + i).take(o as usize));
    }
    let mut z: Vec<T> = req.x.iter().chain(&req.y).copied().collect();
    let steps: Vec<T> = z.iter().map(|&c| step.unwrap_or_else(|| default_step(c))).collect();
    let eval = |z: &[T]| field.value(&z[..n], &z[n..]);
    if axes.len() == 1 {
        let a = axes[0];
        let h = steps[a];
        let base = z[a];
        let mut at = |k: f64| -> Result<T> {
            z[a] = base + h * T::lit(k);
            eval(&z)
        };
        let v = (at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * T::lit(8.0)) / (T::lit(12.0) * h);
        return Ok(v);
    }
    fd_nested(&eval, &mut z, &axes, &steps)
}

fn fd_nested<T: Real>(eval: &dyn Fn(&[T]) -> Result<T>, z: &mut Vec<T>, axes: &[usize], steps: &[T]) -> Result<T> {
    match axes.split_first() {
        None => eval(z),
        Some((&a, rest)) => {
            let h = steps[a];
            let base = z[a];
            z[a] = base + h;
            let plus = fd_nested(eval, z, rest, steps)?;
            z[a] = base - h;
            let minus = fd_nested(eval, z, rest, steps)?;
            z[a] = base;
            Ok((plus - minus) / (h + h))
        }
    }
}
