//! Identity registry: samplers, side evaluators and residual checks for the
//! five integral pentagon identities.
//!
//! Each identity has a raw partition-function form and, where one exists, a
//! ℬ-function form. Both come in several [`FormVariant`]s: the formula as
//! typeset and the corrected readings that actually close numerically.
//! [`variant_scan`] ranks them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::doublesine::{sb, SbMethod, SquashingParameter};
use crate::qseries::{pochhammer_ratio, Nome, TruncationPolicy};
use crate::quadrature::{contour_unit_circle, integrate_realline, sum_bilateral};
use crate::{Error, Result};

type Nome64 = Nome<f64>;
type Policy64 = TruncationPolicy<f64>;

const I: C = C::new(0.0, 1.0);
const ONE: C = C::new(1.0, 0.0);

/// Lowest working tolerance used for the hyperbolic identities.
pub const HYPERBOLIC_FLOOR: f64 = 1e-10;
/// Lowest working tolerance used for the q-series identities.
pub const QSERIES_FLOOR: f64 = 1e-13;
const SAMPLER_ATTEMPTS: usize = 100;

/// `{re, im}` serialization for complex values.
pub mod complex_serde {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct ReIm {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        ReIm { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let v = ReIm::deserialize(d)?;
        Ok(Complex64::new(v.re, v.im))
    }

    pub mod triple {
        use super::ReIm;
        use num_complex::Complex64;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(z: &[Complex64; 3], s: S) -> Result<S::Ok, S::Error> {
            z.map(|c| ReIm { re: c.re, im: c.im }).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Complex64; 3], D::Error> {
            let v = <[ReIm; 3]>::deserialize(d)?;
            Ok(v.map(|c| Complex64::new(c.re, c.im)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityId {
    S3bSqed,
    S2s1Sqed,
    Rp2s1Sqed,
    S3bFlavored,
    S2s1Flavored,
}

impl IdentityId {
    pub const ALL: [IdentityId; 5] =
        [Self::S3bSqed, Self::S2s1Sqed, Self::Rp2s1Sqed, Self::S3bFlavored, Self::S2s1Flavored];

    pub fn name(self) -> &'static str {
        match self {
            Self::S3bSqed => "s3b-sqed",
            Self::S2s1Sqed => "s2s1-sqed",
            Self::Rp2s1Sqed => "rp2s1-sqed",
            Self::S3bFlavored => "s3b-flavored",
            Self::S2s1Flavored => "s2s1-flavored",
        }
    }

    pub fn is_hyperbolic(self) -> bool {
        matches!(self, Self::S3bSqed | Self::S3bFlavored)
    }

    pub fn default_tol(self) -> f64 {
        if self.is_hyperbolic() {
            1e-5
        } else {
            1e-6
        }
    }

    pub fn tolerance_floor(self) -> f64 {
        if self.is_hyperbolic() {
            HYPERBOLIC_FLOOR
        } else {
            QSERIES_FLOOR
        }
    }

    pub fn variants(self) -> &'static [FormVariant] {
        use FormVariant::*;
        match self {
            Self::S3bSqed => &[RawAsPrinted],
            Self::S2s1Sqed => {
                &[RawAsPrinted, RawNumeratorFixed, RawExponentFixed, RawCanonical, BFormAsPrinted, BFormCanonical]
            }
            Self::Rp2s1Sqed => &[RawAsPrinted, RawTildeFlipped, BFormAsPrinted, BFormCanonical],
            Self::S3bFlavored => &[RawAsPrinted, BFormAsPrinted, BFormCanonical],
            Self::S2s1Flavored => {
                &[RawAsPrinted, RawParenInside, RawSignCorrected, RawCanonical, BFormAsPrinted, BFormCanonical]
            }
        }
    }

    /// The raw form that is expected to hold.
    pub fn canonical_form(self) -> FormVariant {
        match self {
            Self::S2s1Sqed | Self::S2s1Flavored => FormVariant::RawCanonical,
            _ => FormVariant::RawAsPrinted,
        }
    }

    /// Resolves a form name, accepting `raw`, `canonical` and `bform` as shorthands.
    pub fn resolve_form(self, name: &str) -> Result<FormVariant> {
        let form = match name {
            "raw" => FormVariant::RawAsPrinted,
            "canonical" => self.canonical_form(),
            "bform" => FormVariant::BFormCanonical,
            other => other.parse()?,
        };
        if self.variants().contains(&form) {
            Ok(form)
        } else {
            Err(Error::UnknownForm { identity: self.name().into(), form: name.into() })
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|id| id.name() == key)
            .ok_or_else(|| Error::DomainError(format!("unknown identity '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormVariant {
    RawAsPrinted,
    RawNumeratorFixed,
    RawExponentFixed,
    RawParenInside,
    RawSignCorrected,
    RawTildeFlipped,
    RawCanonical,
    #[serde(rename = "bform-as-printed")]
    BFormAsPrinted,
    #[serde(rename = "bform-canonical")]
    BFormCanonical,
}

impl FormVariant {
    pub const ALL: [FormVariant; 9] = [
        Self::RawAsPrinted,
        Self::RawNumeratorFixed,
        Self::RawExponentFixed,
        Self::RawParenInside,
        Self::RawSignCorrected,
        Self::RawTildeFlipped,
        Self::RawCanonical,
        Self::BFormAsPrinted,
        Self::BFormCanonical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::RawAsPrinted => "raw-as-printed",
            Self::RawNumeratorFixed => "raw-numerator-fixed",
            Self::RawExponentFixed => "raw-exponent-fixed",
            Self::RawParenInside => "raw-paren-inside",
            Self::RawSignCorrected => "raw-sign-corrected",
            Self::RawTildeFlipped => "raw-tilde-flipped",
            Self::RawCanonical => "raw-canonical",
            Self::BFormAsPrinted => "bform-as-printed",
            Self::BFormCanonical => "bform-canonical",
        }
    }

    pub fn is_bform(self) -> bool {
        matches!(self, Self::BFormAsPrinted | Self::BFormCanonical)
    }
}

impl fmt::Display for FormVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownForm { identity: "any".into(), form: s.into() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lhs,
    Rhs,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lhs => "LHS",
            Side::Rhs => "RHS",
        })
    }
}

/// A fugacity together with the logarithm that fixes its half powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fugacity {
    #[serde(with = "complex_serde")]
    pub value: C,
    #[serde(with = "complex_serde")]
    pub log: C,
}

impl Fugacity {
    pub fn from_log(log: C) -> Self {
        Self { value: log.exp(), log }
    }

    pub fn new(value: C) -> Self {
        Self { value, log: value.ln() }
    }

    fn mul(self, other: Fugacity) -> Fugacity {
        Fugacity { value: self.value * other.value, log: self.log + other.log }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "identity", rename_all = "kebab-case")]
pub enum ParamPoint {
    S3bSqed {
        #[serde(with = "complex_serde")]
        b: C,
        #[serde(with = "complex_serde")]
        y: C,
    },
    S2s1Sqed {
        #[serde(with = "complex_serde")]
        q: C,
        #[serde(with = "complex_serde")]
        alpha: C,
        #[serde(with = "complex_serde")]
        w: C,
        m: i64,
        n: i64,
    },
    Rp2s1Sqed {
        #[serde(with = "complex_serde")]
        q: C,
        #[serde(with = "complex_serde")]
        a: C,
        s: i64,
        s_tilde: i64,
    },
    S3bFlavored {
        #[serde(with = "complex_serde")]
        b: C,
        #[serde(with = "complex_serde::triple")]
        a: [C; 3],
        #[serde(with = "complex_serde::triple")]
        bvec: [C; 3],
    },
    S2s1Flavored {
        #[serde(with = "complex_serde")]
        q: C,
        a: [Fugacity; 3],
        bvec: [Fugacity; 3],
        n: [i64; 3],
        m: [i64; 3],
    },
}

impl ParamPoint {
    pub fn identity(&self) -> IdentityId {
        match self {
            Self::S3bSqed { .. } => IdentityId::S3bSqed,
            Self::S2s1Sqed { .. } => IdentityId::S2s1Sqed,
            Self::Rp2s1Sqed { .. } => IdentityId::Rp2s1Sqed,
            Self::S3bFlavored { .. } => IdentityId::S3bFlavored,
            Self::S2s1Flavored { .. } => IdentityId::S2s1Flavored,
        }
    }

    /// Size of the violation of the balancing conditions (zero when none apply).
    pub fn balance_defect(&self) -> f64 {
        match self {
            Self::S3bFlavored { b, a, bvec } => {
                let sp = SquashingParameter::new(*b).map(|s| s.q()).unwrap_or(C::new(f64::NAN, 0.0));
                (a.iter().chain(bvec).sum::<C>() + I * sp).norm()
            }
            Self::S2s1Flavored { q, a, bvec, n, m } => {
                let half = q.ln() * 0.5;
                let da = (a.iter().map(|f| f.log).sum::<C>() - half).norm();
                let db = (bvec.iter().map(|f| f.log).sum::<C>() - half).norm();
                let dc = (n.iter().sum::<i64>().abs() + m.iter().sum::<i64>().abs()) as f64;
                da.max(db).max(dc)
            }
            _ => 0.0,
        }
    }

    /// The point with one balancing condition broken by `eps`.
    ///
    /// The SQED identities carry no explicit constraint, so there the
    /// parameter entering the right-hand side is shifted instead; use
    /// [`negative_control`] to evaluate such a pair.
    pub fn perturbed(&self, eps: f64) -> ParamPoint {
        let mut p = self.clone();
        match &mut p {
            ParamPoint::S3bSqed { y, .. } => *y += eps,
            ParamPoint::S2s1Sqed { alpha, .. } => *alpha *= 1.0 + eps,
            ParamPoint::Rp2s1Sqed { a, .. } => *a *= 1.0 + eps,
            ParamPoint::S3bFlavored { bvec, .. } => bvec[2] += eps,
            ParamPoint::S2s1Flavored { a, .. } => a[2] = Fugacity::from_log(a[2].log + eps),
        }
        p
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub nodes: usize,
    pub sum_width: usize,
    pub truncation_radius: f64,
    pub est_error: f64,
}

impl Diagnostics {
    fn absorb(&mut self, nodes: usize, est_error: f64) {
        self.nodes += nodes;
        self.est_error += est_error;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: C,
    pub diagnostics: Diagnostics,
}

impl Evaluation {
    fn closed(value: C) -> Self {
        Self { value, diagnostics: Diagnostics { nodes: 1, ..Default::default() } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportDiagnostics {
    pub lhs: Diagnostics,
    pub rhs: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub identity: IdentityId,
    pub point: ParamPoint,
    pub form: FormVariant,
    pub tol: f64,
    pub working_tol: f64,
    #[serde(with = "complex_serde")]
    pub lhs: C,
    #[serde(with = "complex_serde")]
    pub rhs: C,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub passed: bool,
    pub diagnostics: ReportDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantScore {
    pub form: FormVariant,
    pub max_rel_residual: Option<f64>,
    pub error: Option<String>,
    pub canonical: bool,
}

pub fn rel_residual(lhs: C, rhs: C) -> f64 {
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).norm() / scale
    }
}

fn policy(tol: f64) -> Policy64 {
    TruncationPolicy { tol: (tol * 1e-3).clamp(1e-16, 1e-12), max_terms: 1_000_000 }
}

fn ratio(num: &[C], den: &[C], q: &Nome64, pol: &Policy64) -> Result<C> {
    Ok(pochhammer_ratio(num, den, q, pol)?.value)
}

fn sb_tol(tol: f64) -> f64 {
    (tol * 1e-2).max(1e-14)
}

/// `ℬ(x, y) = s_b(x + iQ/2) s_b(y + iQ/2) / s_b(x + y + iQ/2)`.
pub fn bfun_s3b(x: C, y: C, b: &SquashingParameter<f64>, tol: f64) -> Result<C> {
    let h = b.half_q_i();
    let m = SbMethod::Auto;
    Ok(sb(x + h, b, m, tol)? * sb(y + h, b, m, tol)? / sb(x + y + h, b, m, tol)?)
}

/// `ℬ(m, z) = (z q^{m/2+1/2}; q)_∞ / (z^{-1} q^{m/2}; q)_∞`, with `m` allowed to be half-integral.
pub fn bfun_s2s1(m: f64, z: C, q: &Nome64) -> Result<C> {
    ratio(&[z * q.pow(m / 2.0 + 0.5)], &[q.pow(m / 2.0) / z], q, &Policy64::default())
}

/// `ℬ(z, m; q²) = z^{-1/4+m/2} q^{-1/8+m/4} (z q^{m+1}; q²)_∞ / (z^{-1} q^m; q²)_∞` on the principal branch.
pub fn bfun_rp2(z: C, m: u32, q: &Nome64) -> Result<C> {
    bfun_rp2_log(z, z.ln(), m, q, &Policy64::default())
}

/// [`bfun_rp2`] with the branch of `z` fixed by `log_z`.
pub fn bfun_rp2_log(z: C, log_z: C, m: u32, q: &Nome64, pol: &Policy64) -> Result<C> {
    let m = m as f64;
    let pre = (log_z * (-0.25 + m / 2.0)).exp() * q.pow(-0.125 + m / 4.0);
    Ok(pre * ratio(&[z * q.pow(m + 1.0)], &[q.pow(m) / z], &q.squared(), pol)?)
}

/// `ℬ_m[a, n; b, m]` exactly as typeset, with principal powers of `-q`, `a`, `b` and `ab`.
pub fn bfun_flavored(a: C, n: i64, b: C, m: i64, q: &Nome64) -> Result<C> {
    bflav_printed(a, n, b, m, q, &Policy64::default())
}

fn bflav_ratio(a: C, n: i64, b: C, m: i64, q: &Nome64, pol: &Policy64) -> Result<C> {
    let (an, am, anm) = (n.abs() as f64, m.abs() as f64, (n + m).abs() as f64);
    let ab = a * b;
    ratio(
        &[q.pow(1.0 + an / 2.0) / a, q.pow(1.0 + am / 2.0) / b, q.pow(anm / 2.0) * ab],
        &[q.pow(an / 2.0) * a, q.pow(am / 2.0) * b, q.pow(1.0 + anm / 2.0) / ab],
        q,
        pol,
    )
}

fn bflav_printed(a: C, n: i64, b: C, m: i64, q: &Nome64, pol: &Policy64) -> Result<C> {
    let (an, am, anm) = (n.abs() as f64, m.abs() as f64, (n + m).abs() as f64);
    let mq = (-q.value()).ln();
    let pre = (mq * ((an + am - anm) / 4.0) - a.ln() * (an / 2.0) - b.ln() * (am / 2.0) + (a * b).ln() * (anm / 2.0))
        .exp();
    Ok(pre * bflav_ratio(a, n, b, m, q, pol)?)
}

/// The corrected ℬ_m: sign `(-1)^{(|n|+|m|+|n+m|)/2}`, real power of `q`, half powers from the stored logs.
fn bflav_canonical(a: Fugacity, n: i64, b: Fugacity, m: i64, q: &Nome64, pol: &Policy64) -> Result<C> {
    let (an, am, anm) = (n.abs(), m.abs(), (n + m).abs());
    let sign = if ((an + am + anm) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let (an, am, anm) = (an as f64, am as f64, anm as f64);
    let pre = (q.log() * ((an + am - anm) / 4.0) - a.log * (an / 2.0) - b.log * (am / 2.0)
        + (a.log + b.log) * (anm / 2.0))
        .exp();
    Ok(pre * sign * bflav_ratio(a.value, n, b.value, m, q, pol)?)
}

/// One chiral of the flavored S²×S¹ index: `i^{|M|} q^{|M|/4} x̂^{-|M|} (q^{1+|M|/2}/x; q)_∞ / (q^{|M|/2} x; q)_∞`.
fn chi(x: Fugacity, charge: i64, q: &Nome64, pol: &Policy64) -> Result<C> {
    let a = charge.abs() as f64;
    let pre = I.powi(charge.abs() as i32) * (q.log() * (a / 4.0) - x.log * (a / 2.0)).exp();
    Ok(pre * ratio(&[q.pow(1.0 + a / 2.0) / x.value], &[q.pow(a / 2.0) * x.value], q, pol)?)
}

fn nome(q: C) -> Result<Nome64> {
    Nome::new(q)
}

fn squashing(b: C) -> Result<SquashingParameter<f64>> {
    SquashingParameter::new(b)
}

/// Evaluates one side of an identity at a point.
pub fn evaluate_side(id: IdentityId, side: Side, form: FormVariant, p: &ParamPoint, tol: f64) -> Result<Evaluation> {
    if p.identity() != id {
        return Err(Error::DomainError(format!("point belongs to {}, not {id}", p.identity())));
    }
    if !id.variants().contains(&form) {
        return Err(Error::UnknownForm { identity: id.name().into(), form: form.name().into() });
    }
    match *p {
        ParamPoint::S3bSqed { b, y } => s3b_sqed(side, &squashing(b)?, y, tol),
        ParamPoint::S2s1Sqed { q, alpha, w, m, n } => s2s1_sqed(side, form, &nome(q)?, alpha, w, m, n, tol),
        ParamPoint::Rp2s1Sqed { q, a, s, s_tilde } => rp2s1_sqed(side, form, &nome(q)?, a, s, s_tilde, tol),
        ParamPoint::S3bFlavored { b, a, bvec } => s3b_flavored(side, form, &squashing(b)?, &a, &bvec, tol),
        ParamPoint::S2s1Flavored { q, a, bvec, n, m } => {
            s2s1_flavored(side, form, &nome(q)?, &a, &bvec, &n, &m, tol)
        }
    }
}

fn realline<F: FnMut(f64) -> Result<C>>(f: F, tol: f64) -> Result<Evaluation> {
    let r = integrate_realline(f, tol)?;
    Ok(Evaluation {
        value: r.value,
        diagnostics: Diagnostics {
            nodes: r.nodes_used,
            sum_width: 0,
            truncation_radius: r.truncation_radius,
            est_error: r.est_error,
        },
    })
}

fn s3b_sqed(side: Side, b: &SquashingParameter<f64>, y: C, tol: f64) -> Result<Evaluation> {
    let st = sb_tol(tol);
    let m = SbMethod::Auto;
    match side {
        Side::Lhs => realline(
            |z| {
                let z = C::new(z, 0.0);
                Ok(sb(y - z, b, m, st)? * sb(y + z, b, m, st)?)
            },
            tol,
        ),
        Side::Rhs => {
            let h = b.half_q_i();
            let v = sb(2.0 * y - h, b, m, st)? * sb(h - y, b, m, st)?.powi(2);
            Ok(Evaluation::closed(v))
        }
    }
}

fn s3b_flavored(
    side: Side,
    form: FormVariant,
    b: &SquashingParameter<f64>,
    a: &[C; 3],
    bv: &[C; 3],
    tol: f64,
) -> Result<Evaluation> {
    let st = sb_tol(tol);
    let m = SbMethod::Auto;
    let h = b.half_q_i();
    let norm = || -> Result<C> { (0..3).try_fold(ONE, |acc, i| Ok(acc * sb(h + a[i] + bv[i], b, m, st)?)) };
    match (side, form) {
        (Side::Lhs, FormVariant::RawAsPrinted) => realline(
            |z| {
                let z = C::new(z, 0.0);
                (0..3).try_fold(ONE, |acc, i| Ok(acc * sb(h + a[i] + z, b, m, st)? * sb(h + bv[i] - z, b, m, st)?))
            },
            tol,
        ),
        (Side::Rhs, FormVariant::RawAsPrinted) => {
            let mut v = ONE;
            for ai in a {
                for bj in bv {
                    v *= sb(h + ai + bj, b, m, st)?;
                }
            }
            Ok(Evaluation::closed(v))
        }
        (Side::Lhs, _) => {
            let mut e = realline(
                |z| {
                    let z = C::new(z, 0.0);
                    (0..3).try_fold(ONE, |acc, i| Ok(acc * bfun_s3b(a[i] - z, bv[i] + z, b, st)?))
                },
                tol,
            )?;
            if form == FormVariant::BFormCanonical {
                e.value *= norm()?;
            }
            Ok(e)
        }
        (Side::Rhs, _) => {
            let mut v =
                bfun_s3b(a[1] + bv[0], a[2] + bv[1], b, st)? * bfun_s3b(a[0] + bv[1], a[2] + bv[0], b, st)?;
            if form == FormVariant::BFormCanonical {
                v *= norm()?;
            }
            Ok(Evaluation::closed(v))
        }
    }
}

/// `Σ_s ∮ term(s, z)` with diagnostics.
fn sum_of_contours<F>(mut term: F, tol: f64) -> Result<Evaluation>
where
    F: FnMut(i64, C) -> Result<C>,
{
    let mut diag = Diagnostics::default();
    let r = sum_bilateral(
        |s| {
            let c = contour_unit_circle(|z| term(s, z), tol)?;
            diag.absorb(c.nodes_used, c.est_error);
            Ok(c.value)
        },
        tol,
    )?;
    diag.sum_width = r.nodes_used;
    diag.truncation_radius = r.truncation_radius;
    diag.est_error += r.est_error;
    Ok(Evaluation { value: r.value, diagnostics: diag })
}

#[allow(clippy::too_many_arguments)]
fn s2s1_sqed(side: Side, form: FormVariant, q: &Nome64, al: C, w: C, m: i64, n: i64, tol: f64) -> Result<Evaluation> {
    use FormVariant::*;
    let pol = policy(tol);
    let mw = -w;
    let (mf, nf) = (m as f64, n as f64);
    match side {
        Side::Lhs => {
            let fixed_num = matches!(form, RawNumeratorFixed | RawCanonical);
            let exp_sign: i64 = if matches!(form, RawExponentFixed | RawCanonical | BFormCanonical) { 1 } else { -1 };
            sum_of_contours(
                |s, z| {
                    let sf = s as f64;
                    let mono = mw.powi(s as i32) * z.powi((exp_sign * (s - n)) as i32);
                    let body = match form {
                        BFormAsPrinted => {
                            let q14 = q.pow(0.25);
                            bfun_s2s1(mf - sf, z / al * q14, q)? * bfun_s2s1(mf + sf, q14 / (z * al), q)?
                        }
                        BFormCanonical => bfun_s2s1(mf + sf + 0.5, z / al, q)? * bfun_s2s1(mf - sf + 0.5, 1.0 / (z * al), q)?,
                        _ => {
                            let p = q.pow((mf + sf) / 2.0);
                            let r = q.pow((mf - sf) / 2.0);
                            let num2 = if fixed_num { 1.0 / (z * al) } else { z / al };
                            ratio(
                                &[z / al * p * q.pow(0.75), num2 * r * q.pow(0.75)],
                                &[al / z * p * q.pow(0.25), z * al * r * q.pow(0.25)],
                                q,
                                &pol,
                            )?
                        }
                    };
                    Ok(mono * body)
                },
                tol,
            )
        }
        Side::Rhs => {
            let lead = mw.powi(n as i32);
            let pp = q.pow((mf + nf) / 2.0);
            let pm = q.pow((mf - nf) / 2.0);
            let (q14, q34) = (q.pow(0.25), q.pow(0.75));
            let body = match form {
                RawAsPrinted => ratio(
                    &[al * w * pp * q34, al * w * pm * q34, q.pow(mf + 0.5) / (al * al)],
                    &[pm * q14 / (al * w), w / al * pp * q14, al * al * q.pow(mf + 0.5)],
                    q,
                    &pol,
                )?,
                BFormAsPrinted => {
                    bfun_s2s1(mf + nf, w * al * q14, q)?
                        * bfun_s2s1(mf - nf, al / w * q14, q)?
                        * bfun_s2s1(mf + 0.5, q14 / (al * al), q)?
                }
                BFormCanonical => {
                    bfun_s2s1(mf + nf + 0.5, al * w, q)?
                        * bfun_s2s1(mf - nf + 0.5, al / w, q)?
                        * bfun_s2s1(2.0 * mf + 0.5, 1.0 / (al * al * q14), q)?
                }
                _ => ratio(
                    &[al * w * pp * q34, al / w * pm * q34, q.pow(mf + 0.5) / (al * al)],
                    &[pp * q14 / (al * w), w / al * pm * q14, al * al * q.pow(mf + 0.5)],
                    q,
                    &pol,
                )?,
            };
            Ok(Evaluation::closed(lead * body))
        }
    }
}

fn rp2s1_sqed(side: Side, form: FormVariant, q: &Nome64, a: C, s: i64, s_tilde: i64, tol: f64) -> Result<Evaluation> {
    use FormVariant::*;
    let pol = policy(tol);
    let q2 = q.squared();
    let la = a.ln();
    let t = if form == RawTildeFlipped { (-s_tilde).abs() } else { s_tilde.abs() } as f64;
    match side {
        Side::Lhs => {
            let pre = ratio(&[q2.value()], &[q.value()], &q2, &pol)?;
            let lead = match form {
                BFormAsPrinted => ONE,
                _ => q.pow(0.125),
            };
            let r = contour_unit_circle(
                |z| {
                    let mut acc = C::new(0.0, 0.0);
                    for m in 0..2u32 {
                        let mf = m as f64;
                        acc += if form.is_bform() {
                            let lz = I * z.arg();
                            bfun_rp2_log(a / z, la - lz, m, q, &pol)? * bfun_rp2_log(a * z, la + lz, m, q, &pol)?
                        } else {
                            (la * (mf - 0.5)).exp()
                                * q.pow(mf / 2.0 - 0.25)
                                * ratio(
                                    &[a / z * q.pow(1.0 + mf), z * a * q.pow(1.0 + mf)],
                                    &[z / a * q.pow(mf), q.pow(mf) / (z * a)],
                                    &q2,
                                    &pol,
                                )?
                        };
                    }
                    Ok(z.powi(s as i32) * acc)
                },
                tol,
            )?;
            Ok(Evaluation {
                value: lead * pre * r.value,
                diagnostics: Diagnostics { nodes: r.nodes_used, sum_width: 2, truncation_radius: 0.0, est_error: r.est_error },
            })
        }
        Side::Rhs => {
            let v = if form.is_bform() {
                let x = 1.0 / (a * q.pow(0.5));
                let lx = -la - q.log() * 0.5;
                let tu = t as u32;
                bfun_rp2_log(x, lx, tu, q, &pol)?
                    * bfun_rp2_log(x, lx, tu + 1, q, &pol)?
                    * bfun_rp2_log(a * a, la * 2.0, 0, q, &pol)?
            } else {
                q.pow(-0.125)
                    * (la * (-0.5 - t)).exp()
                    * ratio(
                        &[q.pow(0.5 + t) / a, q.pow(1.5 + t) / a, a * a * q.value()],
                        &[a * q.pow(0.5 + t), a * q.pow(1.5 + t), 1.0 / (a * a)],
                        &q2,
                        &pol,
                    )?
            };
            Ok(Evaluation::closed(v))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn s2s1_flavored(
    side: Side,
    form: FormVariant,
    q: &Nome64,
    a: &[Fugacity; 3],
    bv: &[Fugacity; 3],
    nc: &[i64; 3],
    mc: &[i64; 3],
    tol: f64,
) -> Result<Evaluation> {
    use FormVariant::*;
    let pol = policy(tol);
    let corrected_sign = matches!(form, RawSignCorrected | RawCanonical);
    let paren_inside = matches!(form, RawParenInside | RawCanonical);
    let mq = (-q.value()).ln();
    let norm = || -> Result<C> { (0..3).try_fold(ONE, |acc, i| Ok(acc * chi(a[i].mul(bv[i]), mc[i] + nc[i], q, &pol)?)) };
    match side {
        Side::Lhs => {
            let mut e = sum_of_contours(
                |mm, z| {
                    match form {
                        BFormAsPrinted => {
                            let mut v = ONE;
                            for i in 0..3 {
                                v *= bflav_printed(a[i].value * z, nc[i] + mm, bv[i].value / z, mc[i] - mm, q, &pol)?;
                            }
                            return Ok(v);
                        }
                        BFormCanonical => {
                            let lz = I * z.arg();
                            let mut v = if mm % 2 == 0 { ONE } else { -ONE };
                            for i in 0..3 {
                                let x = Fugacity { value: a[i].value * z, log: a[i].log + lz };
                                let y = Fugacity { value: bv[i].value / z, log: bv[i].log - lz };
                                v *= bflav_canonical(x, mc[i] + mm, y, nc[i] - mm, q, &pol)?;
                            }
                            return Ok(v);
                        }
                        _ => {}
                    }
                    let ac: Vec<i64> = mc.iter().map(|m| (m + mm).abs()).collect();
                    let bc: Vec<i64> = nc.iter().map(|n| (n - mm).abs()).collect();
                    let (sa, sbc): (i64, i64) = (ac.iter().sum(), bc.iter().sum());
                    let k = (sa + sbc) as f64;
                    let mut log_pre = C::new(0.0, 0.0);
                    let mut pre = ONE;
                    if corrected_sign {
                        pre *= I.powi((sa + sbc) as i32) * if mm % 2 == 0 { 1.0 } else { -1.0 };
                        log_pre += q.log() * (k / 4.0);
                        for i in 0..3 {
                            log_pre -= a[i].log * (ac[i] as f64 / 2.0) + bv[i].log * (bc[i] as f64 / 2.0);
                        }
                    } else {
                        log_pre += mq * (k / 4.0);
                        for i in 0..3 {
                            log_pre -= a[i].value.ln() * (ac[i] as f64 / 2.0) + bv[i].value.ln() * (bc[i] as f64 / 2.0);
                        }
                    }
                    let mut num = Vec::with_capacity(6);
                    let mut den = Vec::with_capacity(6);
                    for i in 0..3 {
                        let (x, y) = (a[i].value * z, bv[i].value / z);
                        let (ai, bi) = (ac[i] as f64, bc[i] as f64);
                        num.push(q.pow(1.0 + ai / 2.0) / x);
                        den.push(q.pow(ai / 2.0) * x);
                        num.push(q.pow(1.0 + bi / 2.0) / y);
                        if paren_inside {
                            den.push(q.pow(bi / 2.0) * y);
                        } else {
                            den.push(y);
                            log_pre -= q.log() * (bi / 2.0);
                        }
                    }
                    let zp = -(sa - sbc) / 2;
                    Ok(pre * log_pre.exp() * z.powi(zp as i32) * ratio(&num, &den, q, &pol)?)
                },
                tol,
            )?;
            if form == BFormCanonical {
                e.value *= norm()?;
            }
            Ok(e)
        }
        Side::Rhs => {
            let v = match form {
                BFormAsPrinted => {
                    let f = |i: usize, j: usize| a[i].value * bv[j].value;
                    bflav_printed(f(0, 1), nc[0] + mc[1], f(2, 0), nc[2] + mc[0], q, &pol)?
                        * bflav_printed(f(1, 0), nc[1] + mc[0], f(2, 1), nc[2] + mc[1], q, &pol)?
                }
                BFormCanonical => {
                    let f = |i: usize, j: usize| a[i].mul(bv[j]);
                    bflav_canonical(f(0, 1), mc[0] + nc[1], f(2, 0), mc[2] + nc[0], q, &pol)?
                        * bflav_canonical(f(1, 0), mc[1] + nc[0], f(2, 1), mc[2] + nc[1], q, &pol)?
                        * norm()?
                }
                _ if corrected_sign => {
                    let mut v = ONE;
                    for i in 0..3 {
                        for j in 0..3 {
                            v *= chi(a[i].mul(bv[j]), mc[i] + nc[j], q, &pol)?;
                        }
                    }
                    v
                }
                _ => {
                    let mut log_pre = C::new(0.0, 0.0);
                    let mut num = Vec::with_capacity(9);
                    let mut den = Vec::with_capacity(9);
                    for i in 0..3 {
                        for j in 0..3 {
                            let k = (mc[i] + nc[j]).abs() as f64;
                            let x = a[i].value * bv[j].value;
                            log_pre += mq * (k / 4.0) - x.ln() * (k / 2.0);
                            num.push(q.pow(1.0 + k / 2.0) / x);
                            den.push(q.pow(k / 2.0) * x);
                        }
                    }
                    log_pre.exp() * ratio(&num, &den, q, &pol)?
                }
            };
            Ok(Evaluation::closed(v))
        }
    }
}

fn polar_q(rng: &mut ChaCha8Rng) -> C {
    C::from_polar(rng.gen_range(0.1..0.6), rng.gen_range(-0.9 * PI..0.9 * PI))
}

fn charge(rng: &mut ChaCha8Rng) -> i64 {
    rng.gen_range(-2..=2)
}

/// A deterministic admissible point for `id`.
pub fn sample_point(id: IdentityId, seed: u64) -> Result<ParamPoint> {
    let salt = 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(id as u64 + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
    for _ in 0..SAMPLER_ATTEMPTS {
        if let Some(p) = try_sample(id, &mut rng) {
            return Ok(p);
        }
    }
    Err(Error::SamplerExhausted(SAMPLER_ATTEMPTS))
}

fn try_sample(id: IdentityId, rng: &mut ChaCha8Rng) -> Option<ParamPoint> {
    match id {
        IdentityId::S3bSqed => {
            let b: f64 = rng.gen_range(0.7..1.4);
            let half = (b + 1.0 / b) / 2.0;
            let y = C::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.3..0.8) * half);
            Some(ParamPoint::S3bSqed { b: C::new(b, 0.0), y })
        }
        IdentityId::S3bFlavored => {
            let b: f64 = rng.gen_range(0.7..1.4);
            let qq = b + 1.0 / b;
            let mut draw = || C::new(rng.gen_range(-0.4..0.4), -qq / 6.0 + qq * rng.gen_range(-0.02..0.02));
            let a = [draw(), draw(), draw()];
            let mut bvec = [draw(), draw(), C::new(0.0, 0.0)];
            bvec[2] = C::new(0.0, -qq) - a.iter().sum::<C>() - bvec[0] - bvec[1];
            if bvec[2].re.abs() > 1.0 || (bvec[2].im + qq / 6.0).abs() > 0.1 * qq {
                return None;
            }
            Some(ParamPoint::S3bFlavored { b: C::new(b, 0.0), a, bvec })
        }
        IdentityId::S2s1Sqed => {
            let q = polar_q(rng);
            let lq = q.norm().ln();
            let alpha = C::from_polar((lq * rng.gen_range(-0.08..0.02)).exp(), rng.gen_range(-PI..PI));
            let w = C::from_polar((lq * rng.gen_range(-0.04..0.04)).exp(), rng.gen_range(-PI..PI));
            Some(ParamPoint::S2s1Sqed { q, alpha, w, m: charge(rng), n: charge(rng) })
        }
        IdentityId::Rp2s1Sqed => {
            let q = polar_q(rng);
            let lq = q.norm().ln();
            let a = C::from_polar((-lq * rng.gen_range(0.1..0.4)).exp(), rng.gen_range(-2.5..2.5));
            let s = charge(rng);
            Some(ParamPoint::Rp2s1Sqed { q, a, s, s_tilde: s })
        }
        IdentityId::S2s1Flavored => {
            let q = polar_q(rng);
            let lq = q.ln();
            let mut triple = || {
                let mut l = [C::new(0.0, 0.0); 3];
                for li in l.iter_mut().take(2) {
                    *li = C::new((1.0 / 6.0 + rng.gen_range(-0.03..0.03)) * lq.re, rng.gen_range(-PI..PI));
                }
                l[2] = lq * 0.5 - l[0] - l[1];
                l.map(Fugacity::from_log)
            };
            let a = triple();
            let bvec = triple();
            let n = [charge(rng), charge(rng), 0];
            let m = [charge(rng), charge(rng), 0];
            let n = [n[0], n[1], -n[0] - n[1]];
            let m = [m[0], m[1], -m[0] - m[1]];
            if n[2].abs() > 2 || m[2].abs() > 2 {
                return None;
            }
            Some(ParamPoint::S2s1Flavored { q, a, bvec, n, m })
        }
    }
}

fn label(side: Side) -> impl Fn(Error) -> Error {
    move |e| Error::SideFailed { side: side.to_string(), source: Box::new(e) }
}

/// Evaluates both sides at working tolerance `max(tol/100, floor)` and compares.
pub fn verify(id: IdentityId, p: &ParamPoint, form: FormVariant, tol: f64) -> Result<VerificationReport> {
    compare(id, p, p, form, tol)
}

/// Left side at `p`, right side at `p.perturbed(eps)` for the SQED identities,
/// both sides at the perturbed point for the flavored ones.
pub fn negative_control(
    id: IdentityId,
    p: &ParamPoint,
    form: FormVariant,
    eps: f64,
    tol: f64,
) -> Result<VerificationReport> {
    let broken = p.perturbed(eps);
    let lhs_point = match id {
        IdentityId::S3bFlavored | IdentityId::S2s1Flavored => &broken,
        _ => p,
    };
    let mut r = compare(id, lhs_point, &broken, form, tol)?;
    r.point = broken;
    Ok(r)
}

fn compare(id: IdentityId, pl: &ParamPoint, pr: &ParamPoint, form: FormVariant, tol: f64) -> Result<VerificationReport> {
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance must be positive, got {tol}")));
    }
    let working = (tol / 100.0).max(id.tolerance_floor());
    let l = evaluate_side(id, Side::Lhs, form, pl, working).map_err(label(Side::Lhs))?;
    let r = evaluate_side(id, Side::Rhs, form, pr, working).map_err(label(Side::Rhs))?;
    let rel = rel_residual(l.value, r.value);
    if !rel.is_finite() {
        return Err(Error::QuadratureFailure(format!("non-finite residual ({} vs {})", l.value, r.value)));
    }
    Ok(VerificationReport {
        identity: id,
        point: pl.clone(),
        form,
        tol,
        working_tol: working,
        lhs: l.value,
        rhs: r.value,
        abs_residual: (l.value - r.value).norm(),
        rel_residual: rel,
        passed: rel < tol,
        diagnostics: ReportDiagnostics { lhs: l.diagnostics, rhs: r.diagnostics },
    })
}

/// Ranks every registered form of `id` by its worst residual over `points`.
///
/// The best form below `tol` is marked canonical; forms that fail to
/// evaluate are ranked last.
pub fn variant_scan(id: IdentityId, points: &[ParamPoint], tol: f64) -> Result<Vec<VariantScore>> {
    if points.len() < 3 {
        return Err(Error::DomainError(format!("variant scan needs at least 3 points, got {}", points.len())));
    }
    let mut scores: Vec<VariantScore> = id
        .variants()
        .iter()
        .map(|&form| {
            let mut worst = 0.0f64;
            for p in points {
                match verify(id, p, form, tol) {
                    Ok(r) => worst = worst.max(r.rel_residual),
                    Err(e) => {
                        return VariantScore { form, max_rel_residual: None, error: Some(e.to_string()), canonical: false }
                    }
                }
            }
            VariantScore { form, max_rel_residual: Some(worst), error: None, canonical: false }
        })
        .collect();
    scores.sort_by(|x, y| match (x.max_rel_residual, y.max_rel_residual) {
        (Some(a), Some(b)) => a.total_cmp(&b),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    if let Some(best) = scores.first_mut() {
        if best.max_rel_residual.is_some_and(|r| r < tol) {
            best.canonical = true;
        }
    }
    Ok(scores)
}
