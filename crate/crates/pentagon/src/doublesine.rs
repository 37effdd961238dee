//! The double sine function `s_b(x)`.
//!
//! Reference representation, valid for `|Im x| < Re(Q)/2`:
//!
//! ```text
//! log s_b(x) = -i ∫_0^∞ dt/t [ sin(2xt) / (2 sinh(bt) sinh(t/b)) - x/t ]
//! ```
//!
//! With this normalisation `s_b(0) = 1`, `s_b(x) s_b(-x) = 1`, zeros sit at
//! `x = -i(Q/2 + mb + n/b)` and poles at `x = +i(Q/2 + mb + n/b)`.
//!
//! The integrand is rewritten as the even function
//! `g(t) = sin(2xt) / (2t sinh(bt) sinh(t/b)) - x / (t sinh t)`, using
//! `∫_0^∞ (1/(t sinh t) - 1/t²) dt = -ln 2`. It decays exponentially and
//! is analytic in a strip, so the trapezoid rule converges geometrically.
//!
//! For `Im(b²) > 0` the infinite product
//! `e^{-iπx²/2} ∏_{j≥1} (1 + e^{2πbx} q^{j-1/2}) / (1 + e^{2πx/b} q̃^{j-1/2})`
//! with `q = e^{2πib²}`, `q̃ = e^{-2πi/b²}` converges. It differs from the
//! integral by the constant [`product_phase_constant`], which
//! [`sb`] divides out.

use std::sync::OnceLock;

use num_complex::Complex;

use crate::qseries::{pochhammer_ratio_ln, Nome, TruncationPolicy};
use crate::quadrature::{integrate_even_trapezoid, QuadratureResult};
use crate::{Error, Real, Result};

pub const STRIP_MARGIN: f64 = 1e-3;
pub const POLE_EPS: f64 = 1e-10;
/// Fraction of the half-strip inside which no continuation is applied.
pub const COMFORT: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquashingParameter<T> {
    b: Complex<T>,
    q: Complex<T>,
}

impl<T: Real> SquashingParameter<T> {
    pub fn new(b: Complex<T>) -> Result<Self> {
        if !(b.re > T::zero()) {
            return Err(Error::DomainError(format!("squashing parameter needs Re(b) > 0, got {}", b.re)));
        }
        Ok(Self { b, q: b + b.inv() })
    }

    pub fn real(b: T) -> Result<Self> {
        Self::new(Complex::new(b, T::zero()))
    }

    pub fn b(&self) -> Complex<T> {
        self.b
    }

    /// `Q = b + 1/b`.
    pub fn q(&self) -> Complex<T> {
        self.q
    }

    pub fn half_q_i(&self) -> Complex<T> {
        Complex::new(T::zero(), T::lit(0.5)) * self.q
    }

    pub fn dual(&self) -> Self {
        Self { b: self.b.inv(), q: self.q }
    }

    pub fn is_real(&self) -> bool {
        self.b.im == T::zero()
    }

    pub fn allows_product(&self) -> bool {
        (self.b * self.b).im > T::zero()
    }

    /// Half-width `Re(Q)/2` of the strip where the integral converges.
    pub fn half_strip(&self) -> T {
        self.q.re * T::lit(0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SbMethod {
    Product,
    Integral,
    #[default]
    Auto,
}

/// `log s_b(x)` from the integral representation, with quadrature diagnostics.
pub fn log_sb_integral<T: Real>(x: Complex<T>, b: &SquashingParameter<T>, tol: T) -> Result<QuadratureResult<T>> {
    let limit = b.half_strip() - T::lit(STRIP_MARGIN);
    if !(x.im.abs() < limit) {
        return Err(Error::StripViolation { im: x.im.abs().as_f64(), limit: limit.as_f64() });
    }
    let bb = b.b();
    let bi = bb.inv();
    let pi = T::PI();
    let d = pi * T::one().min(bb.re / bb.norm_sqr()).min(bb.re);
    let dd = d * T::lit(0.8);
    let log_tol = -tol.max(T::lit(1e-300)).ln();
    let h = T::TAU() * dd / (T::lit(2.0) * x.re.abs() * dd + T::lit(2.0) * x.im.abs() * dd + log_tol + T::lit(10.0));
    let rate = b.q().re - T::lit(2.0) * x.im.abs();
    let t_max = ((log_tol + T::lit(8.0) - rate.ln().min(T::zero())) / rate)
        .max(log_tol + T::lit(8.0) + x.norm().max(T::one()).ln());

    let series = series_coefficients(x, bb);
    let i = Complex::new(T::zero(), T::one());
    let two = T::lit(2.0);
    let one = Complex::new(T::one(), T::zero());
    let g = |t: T| -> Complex<T> {
        if t < T::lit(0.05) && x.norm() * t < T::lit(0.1) {
            let t2 = t * t;
            return series[0] + (series[1] + (series[2] + series[3] * t2) * t2) * t2;
        }
        let qt = b.q() * t;
        let e_plus = (i * x * (two * t) - qt).exp();
        let e_minus = (-i * x * (two * t) - qt).exp();
        let sin_part = (e_plus - e_minus) / (i * two);
        let den = (one - (-bb * (two * t)).exp()) * (one - (-bi * (two * t)).exp());
        let first = sin_part * T::lit(2.0) / (den * t);
        let et = (-t).exp();
        let second = x * (two * et) / (t * (T::one() - et * et));
        first - second
    };
    let ln2 = T::LN_2();
    let mut r = integrate_even_trapezoid(g, h * two, t_max, tol, x.norm() * ln2)?;
    r.value = -i * (r.value - x * ln2);
    Ok(r)
}

fn series_coefficients<T: Real>(x: Complex<T>, b: Complex<T>) -> [Complex<T>; 4] {
    let c = |v: f64| Complex::new(T::lit(v), T::zero());
    let be = b * b;
    let xx = x * x;
    let p = |k: i32| be.powi(k);
    let xp = |k: i32| xx.powi(k);
    let c0 = -x * (p(2) + c(4.0) * be * xx - be + c(1.0)) / (c(6.0) * be);
    let c2 = x
        * (c(7.0) * p(4) + c(40.0) * p(3) * xx + c(48.0) * p(2) * xp(2) + c(3.0) * p(2) + c(40.0) * be * xx + c(7.0))
        / (c(360.0) * p(2));
    let c4 = -x
        * (c(31.0) * p(6)
            + c(196.0) * p(5) * xx
            + c(336.0) * p(4) * xp(2)
            + c(49.0) * p(4)
            + c(192.0) * p(3) * xp(3)
            + c(280.0) * p(3) * xx
            - c(31.0) * p(3)
            + c(336.0) * p(2) * xp(2)
            + c(49.0) * p(2)
            + c(196.0) * be * xx
            + c(31.0))
        / (c(15120.0) * p(3));
    let c6 = x
        * (c(381.0) * p(8)
            + c(2480.0) * p(7) * xx
            + c(4704.0) * p(6) * xp(2)
            + c(620.0) * p(6)
            + c(3840.0) * p(5) * xp(3)
            + c(3920.0) * p(5) * xx
            + c(1280.0) * p(4) * xp(4)
            + c(6720.0) * p(4) * xp(2)
            + c(305.0) * p(4)
            + c(3840.0) * p(3) * xp(3)
            + c(3920.0) * p(3) * xx
            + c(4704.0) * p(2) * xp(2)
            + c(620.0) * p(2)
            + c(2480.0) * be * xx
            + c(381.0))
        / (c(1_814_400.0) * p(4));
    [c0, c2, c4, c6]
}

/// `s_b(x)` from the integral representation. Requires `|Im x| < Re(Q)/2 - 1e-3`.
pub fn sb_integral<T: Real>(x: Complex<T>, b: &SquashingParameter<T>, tol: T) -> Result<Complex<T>> {
    Ok(log_sb_integral(x, b, tol)?.value.exp())
}

/// The infinite product exactly as written, without phase adjustment.
pub fn sb_product<T: Real>(x: Complex<T>, b: &SquashingParameter<T>, pol: &TruncationPolicy<T>) -> Result<Complex<T>> {
    Ok(log_sb_product(x, b, pol)?.exp())
}

fn log_sb_product<T: Real>(x: Complex<T>, b: &SquashingParameter<T>, pol: &TruncationPolicy<T>) -> Result<Complex<T>> {
    if !b.allows_product() {
        return Err(Error::DomainError("product representation needs Im(b^2) > 0".into()));
    }
    let i = Complex::new(T::zero(), T::one());
    let pi = T::PI();
    let bb = b.b();
    let b2 = bb * bb;
    let q = Nome::from_log(i * b2 * (pi * T::lit(2.0)))?;
    let qt = Nome::from_log(-i * (pi * T::lit(2.0)) / b2)?;
    let a = -((bb * x * (pi * T::lit(2.0))) + i * pi * b2).exp();
    let at = -((x / bb * (pi * T::lit(2.0))) - i * pi / b2).exp();
    let num = pochhammer_ratio_ln(&[a], &[], &q, pol)?.value;
    let den = pochhammer_ratio_ln(&[at], &[], &qt, pol)?.value;
    Ok(-i * pi * x * x * T::lit(0.5) + num - den)
}

/// The product's value at `x = 0`; the product equals this constant times
/// the integral representation.
pub fn product_phase_constant<T: Real>(b: &SquashingParameter<T>, pol: &TruncationPolicy<T>) -> Result<Complex<T>> {
    sb_product(Complex::new(T::zero(), T::zero()), b, pol)
}

/// The sign `σ` in `s_b(x - ib/2) = (2 cosh πbx)^σ s_b(x + ib/2)`,
/// measured once with the integral representation at `b = 1`, `x = 0.3`.
pub fn shift_sign() -> i32 {
    static SIGMA: OnceLock<i32> = OnceLock::new();
    *SIGMA.get_or_init(|| {
        let b = SquashingParameter::real(1.0).expect("b = 1");
        let x = Complex::new(0.3, 0.0);
        let half = Complex::new(0.0, 0.5);
        let lo = log_sb_integral(x - half, &b, 1e-13).expect("inside strip").value;
        let hi = log_sb_integral(x + half, &b, 1e-13).expect("inside strip").value;
        let c = (2.0 * (std::f64::consts::PI * x).cosh()).ln();
        let r = lo - hi;
        if (r - c).norm() <= (r + c).norm() {
            1
        } else {
            -1
        }
    })
}

/// `s_b(x)` away from its poles.
///
/// Outside the comfortable part of the strip the functional equations in
/// the two quasi-periods `b` and `1/b` move the argument towards the real
/// axis before the integral is evaluated.
pub fn sb<T: Real>(x: Complex<T>, b: &SquashingParameter<T>, method: SbMethod, tol: T) -> Result<Complex<T>> {
    Ok(log_sb(x, b, method, tol)?.exp())
}

/// `log s_b(x)` on the branch produced by the chosen method.
pub fn log_sb<T: Real>(x: Complex<T>, b: &SquashingParameter<T>, method: SbMethod, tol: T) -> Result<Complex<T>> {
    let pol = TruncationPolicy { tol: tol.min(T::lit(1e-14)).max(T::epsilon()), ..Default::default() };
    let use_product = match method {
        SbMethod::Product => true,
        SbMethod::Integral => false,
        SbMethod::Auto => b.allows_product() && x.im.abs() >= T::lit(COMFORT) * b.half_strip(),
    };
    if use_product {
        let c = log_sb_product(Complex::new(T::zero(), T::zero()), b, &pol)?;
        return Ok(log_sb_product(x, b, &pol)? - c);
    }
    let (y, log_factor) = continue_into_strip(x, b)?;
    Ok(log_sb_integral(y, b, tol)?.value + log_factor)
}

/// Moves `x` into `|Im x| <= COMFORT·Re(Q)/2`; returns the new point and the
/// logarithm of the accumulated functional-equation factor.
pub fn continue_into_strip<T: Real>(x: Complex<T>, b: &SquashingParameter<T>) -> Result<(Complex<T>, Complex<T>)> {
    let sigma = T::from_i32(shift_sign()).unwrap();
    let i = Complex::new(T::zero(), T::one());
    let comfort = T::lit(COMFORT) * b.half_strip();
    let mut y = x;
    let mut log_factor = Complex::new(T::zero(), T::zero());
    for _ in 0..256 {
        if y.im.abs() <= comfort {
            return Ok((y, log_factor));
        }
        let down = y.im > T::zero();
        let mut best: Option<(Complex<T>, Complex<T>)> = None;
        for s in [b.b(), b.b().inv()] {
            let cand = if down { y - i * s } else { y + i * s };
            if best.is_none_or(|(c, _)| cand.im.abs() < c.im.abs()) {
                best = Some((cand, s));
            }
        }
        let (cand, s) = best.expect("two candidates");
        if cand.im.abs() >= y.im.abs() {
            return Ok((y, log_factor));
        }
        let mid = if down { y - i * s * T::lit(0.5) } else { y + i * s * T::lit(0.5) };
        let c = (s * mid * T::PI()).cosh() * T::lit(2.0);
        if c.norm() < T::lit(POLE_EPS) {
            return Err(Error::PoleHit(format!(
                "s_b has a pole or zero near {}{:+}i",
                x.re.as_f64(),
                x.im.as_f64()
            )));
        }
        let lc = c.ln() * sigma;
        log_factor = if down { log_factor - lc } else { log_factor + lc };
        y = cand;
    }
    Err(Error::DomainError("functional-equation ladder did not reach the strip".into()))
}
