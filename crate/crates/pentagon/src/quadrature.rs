//! Numerical integration and bilateral summation.
//!
//! Integrands are fallible (`Result`) so that pole hits inside special
//! function evaluations propagate out of the integrator. Infallible closures
//! can be wrapped with `|t| Ok(f(t))`.
//!
//! Tolerances passed to the adaptive rules are relative to the L¹ mass of the
//! integrand, which for O(1) integrands coincides with an absolute tolerance.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult<T> {
    pub value: Complex<T>,
    pub est_error: T,
    pub nodes_used: usize,
    pub truncation_radius: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport<T> {
    pub detected: bool,
    pub envelope_rate: T,
    pub sample_radii: Vec<T>,
    pub envelope: Vec<T>,
}

pub const PROBE_RADII: [f64; 4] = [5.0, 10.0, 20.0, 40.0];
const MAX_SEGMENTS: usize = 4000;
const CIRCLE_START: usize = 64;
const CIRCLE_CAP: usize = 1 << 20;
const STALL_FROM: usize = 1 << 13;
const STALL_RATIO: f64 = 0.3;
const STALL_STEPS: usize = 3;
const SUM_CAP: i64 = 200_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: Complex<T>,
    err: T,
    l1: T,
}

fn kronrod<T, F>(f: &mut F, a: T, b: T) -> Result<Segment<T>>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let zero = Complex::new(T::zero(), T::zero());
    let fc = f(c)?;
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    let mut l1 = fc.norm() * T::lit(WGK[7]);
    let mut vals = [zero; 15];
    vals[7] = fc;
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        vals[j] = f1;
        vals[14 - j] = f2;
        let w = T::lit(WGK[j]);
        k += (f1 + f2) * w;
        l1 += (f1.norm() + f2.norm()) * w;
        if j % 2 == 1 {
            g += (f1 + f2) * T::lit(WG[j / 2]);
        }
    }
    let mean = k * half;
    let mut asc = T::zero();
    for (j, v) in vals.iter().enumerate() {
        let w = if j < 7 { WGK[j] } else { WGK[14 - j] };
        asc += (*v - mean).norm() * T::lit(w);
    }
    let h_abs = h.abs();
    let value = k * h;
    let diff = ((k - g) * h).norm();
    let resasc = asc * h_abs;
    let mut err = diff;
    if resasc > T::zero() && diff > T::zero() {
        let ratio = (T::lit(200.0) * diff / resasc).powf(T::lit(1.5));
        err = resasc * ratio.min(T::one());
    }
    let resabs = l1 * h_abs;
    let floor = T::lit(50.0) * T::epsilon() * resabs;
    if err < floor {
        err = floor;
    }
    Ok(Segment { a, b, value, err, l1: resabs })
}

/// Globally adaptive Gauss–Kronrod (7/15) over consecutive panels.
///
/// Stops when the summed error estimate is at most `tol` times the L¹ mass.
pub fn integrate_panels<T, F>(f: F, breakpoints: &[T], tol: T) -> Result<QuadratureResult<T>>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    panels_with_mass(f, breakpoints, tol).map(|(r, _)| r)
}

fn panels_with_mass<T, F>(mut f: F, breakpoints: &[T], tol: T) -> Result<(QuadratureResult<T>, T)>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    if breakpoints.len() < 2 {
        return Err(Error::DomainError("need at least two breakpoints".into()));
    }
    let mut segs = Vec::with_capacity(64);
    for w in breakpoints.windows(2) {
        segs.push(kronrod(&mut f, w[0], w[1])?);
    }
    loop {
        let err: T = segs.iter().fold(T::zero(), |s, g| s + g.err);
        let l1: T = segs.iter().fold(T::zero(), |s, g| s + g.l1);
        if err <= tol * l1 || l1 == T::zero() {
            return Ok((finish(&segs, T::zero()), l1));
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(Error::QuadratureFailure(format!(
                "adaptive refinement stalled at error {:e} (target {:e})",
                err.as_f64(),
                (tol * l1).as_f64()
            )));
        }
        let (idx, worst) = segs
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, g)| if g.err > acc.1 { (i, g.err) } else { acc });
        let s = segs[idx];
        let mid = (s.a + s.b) * T::lit(0.5);
        if !(mid > s.a.min(s.b) && mid < s.a.max(s.b)) || !worst.is_finite() {
            return Err(Error::QuadratureFailure("interval too narrow to bisect".into()));
        }
        segs[idx] = kronrod(&mut f, s.a, mid)?;
        segs.push(kronrod(&mut f, mid, s.b)?);
    }
}

fn finish<T: Real>(segs: &[Segment<T>], radius: T) -> QuadratureResult<T> {
    let zero = Complex::new(T::zero(), T::zero());
    QuadratureResult {
        value: segs.iter().fold(zero, |s, g| s + g.value),
        est_error: segs.iter().fold(T::zero(), |s, g| s + g.err),
        nodes_used: segs.len() * 15,
        truncation_radius: radius,
    }
}

/// `∫_0^∞ f(t) dt` for `f` bounded at 0 and exponentially decaying.
///
/// Panels `[0,1], [1,2], [2,4], …` are added until two consecutive panels
/// carry less than `tol·1e-2` of the accumulated L¹ mass.
pub fn integrate_halfline<T, F>(mut f: F, tol: T) -> Result<QuadratureResult<T>>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    let mut total = Complex::new(T::zero(), T::zero());
    let mut err = T::zero();
    let mut l1 = T::zero();
    let mut nodes = 0;
    let mut quiet = 0;
    let (mut a, mut b) = (T::zero(), T::one());
    let cap = T::lit(1e4);
    while a < cap {
        let (r, mass) = panels_with_mass(&mut f, &[a, b], tol)?;
        total += r.value;
        err += r.est_error;
        l1 += mass;
        nodes += r.nodes_used;
        if mass <= tol * T::lit(1e-2) * l1 {
            quiet += 1;
            if quiet >= 2 {
                return Ok(QuadratureResult { value: total, est_error: err + mass, nodes_used: nodes, truncation_radius: b });
            }
        } else {
            quiet = 0;
        }
        a = b;
        b *= T::lit(2.0);
    }
    Err(Error::QuadratureFailure("half-line integrand did not decay before t = 1e4".into()))
}

/// `∫_0^∞ f(t) dt` for `f` even, real-analytic in a strip around the real
/// axis and negligible beyond `t_max`, by the trapezoid rule on the whole
/// line. The step starts at `h` and is halved until two successive sums agree
/// to `tol` relative to the L¹ mass, or to `tol·scale` absolutely.
pub fn integrate_even_trapezoid<T, F>(mut f: F, h: T, t_max: T, tol: T, scale: T) -> Result<QuadratureResult<T>>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    let half = T::lit(0.5);
    let mut h = h;
    let n = (t_max / h).ceil().to_usize().unwrap_or(usize::MAX);
    if n > 50_000_000 {
        return Err(Error::QuadratureFailure("trapezoid step too small for cutoff".into()));
    }
    let mut sum = f(T::zero()) * half;
    let mut l1 = sum.norm();
    for k in 1..=n {
        let v = f(T::from_usize(k).unwrap() * h);
        sum += v;
        l1 += v.norm();
    }
    let mut nodes = n + 1;
    let mut prev = sum * h;
    for _ in 0..12 {
        let m = (t_max / h).ceil().to_usize().unwrap_or(usize::MAX);
        let mut odd = Complex::new(T::zero(), T::zero());
        for k in 0..m {
            let v = f((T::from_usize(k).unwrap() + half) * h);
            odd += v;
            l1 += v.norm();
        }
        nodes += m;
        sum += odd;
        h *= half;
        let cur = sum * h;
        let diff = (cur - prev).norm();
        if diff <= tol * (l1 * h).max(scale).max(T::min_positive_value()) {
            let floor = T::epsilon() * l1 * h;
            return Ok(QuadratureResult { value: cur, est_error: diff.max(floor), nodes_used: nodes, truncation_radius: t_max });
        }
        prev = cur;
    }
    Err(Error::QuadratureFailure("trapezoid halving did not converge".into()))
}

fn envelope<T, F>(f: &mut F, r: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    let mut e = T::zero();
    for k in 0..4 {
        let z = r * (T::one() + T::from_usize(k).unwrap() / T::lit(32.0));
        for z in [z, -z] {
            let v = f(z)?.norm();
            if !v.is_finite() {
                return Ok(T::infinity());
            }
            e = e.max(v);
        }
    }
    Ok(e)
}

/// Samples the envelope of `|f|` at the probe radii.
pub fn probe_decay<T, F>(mut f: F) -> Result<DecayReport<T>>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    let radii: Vec<T> = PROBE_RADII.iter().map(|&r| T::lit(r)).collect();
    let mut env = Vec::with_capacity(radii.len());
    for &r in &radii {
        env.push(envelope(&mut f, r)?);
    }
    let decreasing = |a: T, b: T| b < a || (a == T::zero() && b == T::zero());
    let detected = env.iter().all(|e| e.is_finite()) && decreasing(env[1], env[2]) && decreasing(env[2], env[3]);
    let envelope_rate = if env[3] > T::zero() && env[2] > T::zero() {
        (env[2] / env[3]).ln() / (radii[3] - radii[2])
    } else {
        T::infinity()
    };
    Ok(DecayReport { detected, envelope_rate, sample_radii: radii, envelope: env })
}

/// `∫_ℝ f(z) dz` after probing for decay.
///
/// The interval `[-R, R]` is chosen where the envelope falls below
/// `tol·1e-2` of the peak. If that does not happen by `R = 40`, the tails are
/// mapped onto `(0, 1]` by `z = R/u` and integrated as well.
pub fn integrate_realline<T, F>(mut f: F, tol: T) -> Result<QuadratureResult<T>>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    let report = probe_decay(&mut f)?;
    if !report.detected {
        return Err(Error::NoDecay(format!(
            "integrand envelope {:?} is not decreasing at radii {:?}",
            report.envelope.iter().map(|e| e.as_f64()).collect::<Vec<_>>(),
            PROBE_RADII
        )));
    }
    let mut peak = report.envelope[0];
    for k in -20..=20 {
        peak = peak.max(f(T::from_i32(k).unwrap() * T::lit(0.25))?.norm());
    }
    let thresh = tol * T::lit(1e-2) * peak;
    let grow = T::lit(1.25);
    let mut r = T::lit(2.0);
    let cap = T::lit(PROBE_RADII[3]);
    let mut env_r = envelope(&mut f, r)?;
    while r < cap {
        let env_next = envelope(&mut f, r * grow)?;
        if env_r < thresh && env_next < thresh {
            return integrate_realline_radius(f, r * grow, tol);
        }
        r *= grow;
        env_r = env_next;
    }
    let core = integrate_realline_radius(&mut f, cap, tol)?;
    let mut tails = Complex::new(T::zero(), T::zero());
    let mut err = core.est_error;
    let mut nodes = core.nodes_used;
    for sign in [T::one(), -T::one()] {
        let t = integrate_panels(|u: T| Ok(f(sign * cap / u)? * (cap / (u * u))), &[T::zero(), T::one()], tol)?;
        tails += t.value;
        err += t.est_error;
        nodes += t.nodes_used;
    }
    Ok(QuadratureResult { value: core.value + tails, est_error: err, nodes_used: nodes, truncation_radius: T::infinity() })
}

/// `∫_{-R}^{R} f(z) dz` on unit-width starting panels.
pub fn integrate_realline_radius<T, F>(f: F, radius: T, tol: T) -> Result<QuadratureResult<T>>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    let n = (T::lit(2.0) * radius).ceil().to_usize().unwrap_or(1).max(2);
    let step = T::lit(2.0) * radius / T::from_usize(n).unwrap();
    let bps: Vec<T> = (0..=n).map(|k| -radius + step * T::from_usize(k).unwrap()).collect();
    let mut r = integrate_panels(f, &bps, tol)?;
    r.truncation_radius = radius;
    Ok(r)
}

/// `∮ dz/(2πi z) f(z)` over `|z| = 1` by the trapezoid rule with doubling.
pub fn contour_unit_circle<T, F>(mut f: F, tol: T) -> Result<QuadratureResult<T>>
where
    T: Real,
    F: FnMut(Complex<T>) -> Result<Complex<T>>,
{
    let two_pi = T::TAU();
    let mut eval = |k: usize, n: usize| -> Result<Complex<T>> {
        let theta = two_pi * T::from_usize(k).unwrap() / T::from_usize(n).unwrap();
        f(Complex::from_polar(T::one(), theta)).map_err(|e| match e {
            Error::PoleHit(msg) => Error::PoleNearContour(msg),
            other => other,
        })
    };
    let mut n = CIRCLE_START;
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut l1 = T::zero();
    for k in 0..n {
        let v = eval(k, n)?;
        sum += v;
        l1 += v.norm();
    }
    let mut prev = sum / T::from_usize(n).unwrap();
    let mut prev_diff = T::infinity();
    let mut stalls = 0;
    while n < CIRCLE_CAP {
        let n2 = 2 * n;
        for k in 0..n {
            let v = eval(2 * k + 1, n2)?;
            sum += v;
            l1 += v.norm();
        }
        n = n2;
        let nf = T::from_usize(n).unwrap();
        let cur = sum / nf;
        let diff = (cur - prev).norm();
        let mass = l1 / nf;
        if !cur.re.is_finite() || !cur.im.is_finite() {
            return Err(Error::PoleNearContour("non-finite integrand on the unit circle".into()));
        }
        if diff <= tol * mass || mass == T::zero() {
            let floor = T::epsilon() * mass;
            return Ok(QuadratureResult { value: cur, est_error: diff.max(floor), nodes_used: n, truncation_radius: T::one() });
        }
        if n >= STALL_FROM && diff > T::lit(STALL_RATIO) * prev_diff {
            stalls += 1;
            if stalls >= STALL_STEPS {
                return Err(Error::QuadratureFailure(format!(
                    "trapezoid rule converges only algebraically at {n} nodes; integrand is not analytic on the circle"
                )));
            }
        }
        prev_diff = diff;
        prev = cur;
    }
    Err(Error::QuadratureFailure(format!("trapezoid rule did not converge with {CIRCLE_CAP} nodes")))
}

/// `Σ_{s∈ℤ} term(s)`, walking outward from 0 in both directions.
///
/// A direction stops after three consecutive terms below `tol·1e-2` of the
/// accumulated L¹ mass. If the largest term of a window of ten is not smaller
/// than that of the previous window, the sum is declared non-decaying.
pub fn sum_bilateral<T, F>(mut term: F, tol: T) -> Result<QuadratureResult<T>>
where
    T: Real,
    F: FnMut(i64) -> Result<Complex<T>>,
{
    let t0 = term(0)?;
    let mut sum = t0;
    let mut l1 = t0.norm();
    let mut err = T::zero();
    let mut reach = 0i64;
    let mut count = 1usize;
    let small = tol * T::lit(1e-2);
    for dir in [1i64, -1] {
        let mut run = 0;
        let mut s = dir;
        let mut window = T::zero();
        let mut prev_window = T::infinity();
        let mut in_window = 0;
        let mut last = [T::zero(); 2];
        loop {
            let t = term(s)?;
            let a = t.norm();
            if !a.is_finite() {
                return Err(Error::NoDecay(format!("non-finite term at s = {s}")));
            }
            sum += t;
            l1 += a;
            count += 1;
            last = [last[1], a];
            if a <= small * l1 {
                run += 1;
                if run >= 3 {
                    break;
                }
            } else {
                run = 0;
                window = window.max(a);
                in_window += 1;
                if in_window == 10 {
                    if window >= prev_window {
                        return Err(Error::NoDecay(format!("terms stopped decreasing near s = {s}")));
                    }
                    prev_window = window;
                    window = T::zero();
                    in_window = 0;
                }
            }
            if s.abs() >= SUM_CAP {
                return Err(Error::NoDecay(format!("no convergence within |s| <= {SUM_CAP}")));
            }
            s += dir;
        }
        reach = reach.max(s.abs());
        let rho = if last[0] > T::zero() { (last[1] / last[0]).min(T::lit(0.9)) } else { T::zero() };
        err += last[1] * rho / (T::one() - rho);
    }
    err += T::epsilon() * l1;
    Ok(QuadratureResult {
        value: sum,
        est_error: err,
        nodes_used: count,
        truncation_radius: T::from_i64(reach).unwrap(),
    })
}
