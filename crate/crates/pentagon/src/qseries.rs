//! q-Pochhammer symbols with explicit truncation control.
//!
//! Every infinite product is truncated at the first index `J` for which the
//! tail bound `Σ|a| |q|^J / (1 - |q|)` drops below the policy tolerance. The
//! bound controls the error on the logarithm of the product, and is returned
//! alongside the value.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

const POLE_EPS: f64 = 1e-12;

/// A nome `q` with `|q| < 1` and a cached principal logarithm.
///
/// All fractional powers go through the cached logarithm, so `q^{1/4}` used
/// in several factors of one expression is always the same branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nome<T> {
    q: Complex<T>,
    log_q: Complex<T>,
}

impl<T: Real> Nome<T> {
    pub fn new(q: Complex<T>) -> Result<Self> {
        let r = q.norm();
        if !(r < T::one()) {
            return Err(Error::InvalidNome(r.as_f64()));
        }
        Ok(Self { q, log_q: q.ln() })
    }

    pub fn real(q: T) -> Result<Self> {
        Self::new(Complex::new(q, T::zero()))
    }

    pub fn from_polar(r: T, theta: T) -> Result<Self> {
        Self::new(Complex::from_polar(r, theta))
    }

    /// Builds a nome from a chosen logarithm, keeping that branch for powers.
    pub fn from_log(log_q: Complex<T>) -> Result<Self> {
        let q = log_q.exp();
        if !(log_q.re < T::zero()) {
            return Err(Error::InvalidNome(q.norm().as_f64()));
        }
        Ok(Self { q, log_q })
    }

    pub fn value(&self) -> Complex<T> {
        self.q
    }

    pub fn log(&self) -> Complex<T> {
        self.log_q
    }

    pub fn norm(&self) -> T {
        self.q.norm()
    }

    /// `q^r` on the cached branch.
    pub fn pow(&self, r: T) -> Complex<T> {
        if self.q == Complex::new(T::zero(), T::zero()) {
            return if r == T::zero() { Complex::new(T::one(), T::zero()) } else { self.q };
        }
        (self.log_q * r).exp()
    }

    /// The nome `q²`, with logarithm `2 log q`.
    pub fn squared(&self) -> Self {
        Self { q: self.q * self.q, log_q: self.log_q * T::lit(2.0) }
    }
}

/// Principal-branch power `q^r`.
pub fn qpow<T: Real>(q: &Nome<T>, r: T) -> Complex<T> {
    q.pow(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy<T> {
    pub tol: T,
    pub max_terms: usize,
}

impl<T: Real> TruncationPolicy<T> {
    pub fn new(tol: T, max_terms: usize) -> Result<Self> {
        if !(tol > T::zero()) || max_terms == 0 {
            return Err(Error::DomainError("truncation policy needs tol > 0 and max_terms >= 1".into()));
        }
        Ok(Self { tol, max_terms })
    }
}

impl<T: Real> Default for TruncationPolicy<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-14), max_terms: 1_000_000 }
    }
}

/// A truncated product together with its error bound.
///
/// `tail_bound` bounds the absolute error of `log(value)`, hence the
/// relative error of `value` to first order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Product<T> {
    pub value: Complex<T>,
    pub tail_bound: T,
    pub terms: usize,
}

/// Running product kept as mantissa times `exp(log_scale)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scaled<T> {
    mant: Complex<T>,
    log_scale: T,
}

impl<T: Real> Scaled<T> {
    pub(crate) fn one() -> Self {
        Self { mant: Complex::new(T::one(), T::zero()), log_scale: T::zero() }
    }

    #[inline]
    pub(crate) fn mul(&mut self, f: Complex<T>) {
        self.mant *= f;
        let n2 = self.mant.norm_sqr();
        if n2 > T::lit(1e16) || (n2 < T::lit(1e-16) && n2 > T::zero()) {
            let n = n2.sqrt();
            self.log_scale += n.ln();
            self.mant /= n;
        }
    }

    pub(crate) fn ln(&self) -> Complex<T> {
        self.mant.ln() + self.log_scale
    }

    pub(crate) fn value(&self) -> Complex<T> {
        if self.log_scale == T::zero() {
            self.mant
        } else {
            self.mant * self.log_scale.exp()
        }
    }
}

/// `(a;q)_n = ∏_{k<n} (1 - a q^k)`.
pub fn pochhammer_fin<T: Real>(a: Complex<T>, q: &Nome<T>, n: usize) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    let mut acc = one;
    let mut qk = one;
    for _ in 0..n {
        acc *= one - a * qk;
        qk *= q.value();
    }
    acc
}

/// `(a;q)_∞`.
pub fn pochhammer_inf<T: Real>(a: Complex<T>, q: &Nome<T>, pol: &TruncationPolicy<T>) -> Result<Product<T>> {
    pochhammer_ratio(&[a], &[], q, pol)
}

/// `∏ (n_i;q)_∞ / ∏ (d_i;q)_∞` as one product over paired factors.
pub fn pochhammer_ratio<T: Real>(
    numerators: &[Complex<T>],
    denominators: &[Complex<T>],
    q: &Nome<T>,
    pol: &TruncationPolicy<T>,
) -> Result<Product<T>> {
    let (acc, tail_bound, terms) = ratio_scaled(numerators, denominators, q, pol)?;
    Ok(Product { value: acc.value(), tail_bound, terms })
}

/// Logarithm of [`pochhammer_ratio`], on the branch accumulated factor by factor.
pub fn pochhammer_ratio_ln<T: Real>(
    numerators: &[Complex<T>],
    denominators: &[Complex<T>],
    q: &Nome<T>,
    pol: &TruncationPolicy<T>,
) -> Result<Product<T>> {
    let (acc, tail_bound, terms) = ratio_scaled(numerators, denominators, q, pol)?;
    Ok(Product { value: acc.ln(), tail_bound, terms })
}

fn ratio_scaled<T: Real>(
    numerators: &[Complex<T>],
    denominators: &[Complex<T>],
    q: &Nome<T>,
    pol: &TruncationPolicy<T>,
) -> Result<(Scaled<T>, T, usize)> {
    let one = Complex::new(T::one(), T::zero());
    let qv = q.value();
    let qa = q.norm();
    let mass: T = numerators.iter().chain(denominators).fold(T::zero(), |s, z| s + z.norm());
    let pole_eps2 = T::lit(POLE_EPS * POLE_EPS);
    let half = T::lit(0.5);

    let mut acc = Scaled::one();
    let mut qj = one;
    let mut qj_abs = T::one();
    let mut last_bound = T::infinity();
    for j in 0..pol.max_terms {
        let lead = mass * qj_abs;
        if lead < half {
            let tail = lead / (T::one() - qa);
            last_bound = tail / (T::one() - lead);
            if tail < pol.tol {
                return Ok((acc, last_bound, j));
            }
        }
        let pairs = numerators.len().min(denominators.len());
        for i in 0..pairs {
            let d = one - denominators[i] * qj;
            if d.norm_sqr() < pole_eps2 {
                return Err(pole(denominators[i], j));
            }
            acc.mul((one - numerators[i] * qj) / d);
        }
        for n in &numerators[pairs..] {
            acc.mul(one - *n * qj);
        }
        for dn in &denominators[pairs..] {
            let d = one - *dn * qj;
            if d.norm_sqr() < pole_eps2 {
                return Err(pole(*dn, j));
            }
            acc.mul(one / d);
        }
        qj *= qv;
        qj_abs *= qa;
    }
    Err(Error::TruncationFailure { terms: pol.max_terms, bound: last_bound.as_f64() })
}

fn pole<T: Real>(d: Complex<T>, j: usize) -> Error {
    Error::PoleHit(format!("denominator factor 1 - d q^{j} vanishes for d = {}{:+}i", d.re, d.im))
}
