//! Finite modulation sets `Λ ⊂ [0,1]` and arithmetic-Minkowski covering certificates.
//!
//! Points are stored as exact rationals: the Cantor points `Σ_{j∈J} 2^{-D^j}` differ
//! in bits far below `f64` resolution once `D^depth > 53`.

use crate::stats::ls_slope;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

/// Default cap on the number of points of a Cantor set.
pub const POINT_CAP: u64 = 1 << 20;
/// Cap on `D^depth`, the bit length of the finest Cantor denominator; keeps every
/// interval width a normal `f64`.
pub const BIT_CAP: u64 = 1000;
/// Denominator cap for rational centers of explicit sets.
pub const DENOM_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LambdaError {
    #[error("base D must be >= 2 and depth >= 1, got D={d}, depth={depth}")]
    CantorParams { d: u32, depth: u32 },
    #[error("cantor({d},{depth}) exceeds the caps (2^depth <= 2^20 points, D^depth <= 1000 bits)")]
    Cap { d: u32, depth: u32 },
    #[error("point {0} outside [0,1] or not finite")]
    Point(String),
    #[error("empty set")]
    Empty,
    #[error("t must lie in (0,1), got {0}")]
    Scale(f64),
    #[error("point {witness} cannot be covered at t={t} with denominators <= {cap}")]
    NotCoverable { witness: f64, t: f64, cap: u64 },
    #[error("certificate check failed: {0}")]
    Certificate(String),
    #[error("dimension fit needs >= 3 scales spanning >= 2 decades")]
    FitRange,
    #[error("bad lambda file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Cantor { d: u32, depth: u32 },
    Explicit,
}

#[derive(Debug, Clone)]
pub struct LambdaSet {
    points: Vec<BigRational>,
    values: Vec<f64>,
    pub provenance: Provenance,
}

fn pow2(e: u64) -> BigRational {
    BigRational::from_integer(BigInt::one() << e)
}

impl LambdaSet {
    /// All `Σ_{j∈J} 2^{-D^j}`, `J ⊆ {1,…,depth}`.
    pub fn cantor(d: u32, depth: u32) -> Result<Self, LambdaError> {
        if d < 2 || depth < 1 {
            return Err(LambdaError::CantorParams { d, depth });
        }
        let bits = (d as u64).checked_pow(depth);
        if depth > 20 || (1u64 << depth) > POINT_CAP || bits.is_none_or(|b| b > BIT_CAP) {
            return Err(LambdaError::Cap { d, depth });
        }
        let mut pts = vec![BigRational::zero()];
        for j in 1..=depth {
            let step = BigRational::one() / pow2((d as u64).pow(j));
            let shifted: Vec<BigRational> = pts.iter().map(|p| p + &step).collect();
            pts.extend(shifted);
        }
        Ok(Self::build(pts, Provenance::Cantor { d, depth }))
    }

    /// Finite set from floating-point values, each taken exactly.
    pub fn explicit(values: &[f64]) -> Result<Self, LambdaError> {
        if values.is_empty() {
            return Err(LambdaError::Empty);
        }
        let mut pts = Vec::with_capacity(values.len());
        for &v in values {
            if !(0.0..=1.0).contains(&v) {
                return Err(LambdaError::Point(v.to_string()));
            }
            pts.push(BigRational::from_float(v).ok_or_else(|| LambdaError::Point(v.to_string()))?);
        }
        Ok(Self::build(pts, Provenance::Explicit))
    }

    fn build(mut pts: Vec<BigRational>, provenance: Provenance) -> Self {
        pts.sort();
        pts.dedup();
        let values = pts.iter().map(|p| p.to_f64().unwrap_or(0.0)).collect();
        Self { points: pts, values, provenance }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[BigRational] {
        &self.points
    }

    /// Points rounded to `f64` (distinct exact points may coincide here).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// JSON array of decimal strings: exact expansions for dyadic Cantor points,
    /// shortest round-trip forms for explicit sets.
    pub fn to_json(&self) -> String {
        let strs: Vec<String> = match self.provenance {
            Provenance::Cantor { .. } => self.points.iter().map(dyadic_decimal).collect(),
            Provenance::Explicit => self.values.iter().map(|v| format!("{v:?}")).collect(),
        };
        serde_json::to_string(&strs).expect("strings serialize")
    }

    /// Parses a JSON array of decimal strings; each is rounded to the nearest `f64`.
    pub fn from_json(text: &str) -> Result<Self, LambdaError> {
        let strs: Vec<String> = serde_json::from_str(text).map_err(|e| LambdaError::Parse(e.to_string()))?;
        let mut vals = Vec::with_capacity(strs.len());
        for s in &strs {
            vals.push(s.trim().parse::<f64>().map_err(|_| LambdaError::Point(s.clone()))?);
        }
        Self::explicit(&vals)
    }
}

/// Exact decimal expansion of a rational whose denominator is a power of two.
fn dyadic_decimal(p: &BigRational) -> String {
    let den = p.denom().to_biguint().expect("positive denominator");
    let k = den.trailing_zeros().unwrap_or(0);
    debug_assert_eq!(den, BigUint::one() << k);
    let num = p.numer().to_biguint().expect("nonnegative point");
    let scaled = num * BigUint::from(5u32).pow(k as u32);
    let mut digits = scaled.to_str_radix(10);
    let k = k as usize;
    if k == 0 {
        return digits;
    }
    if digits.len() <= k {
        digits = "0".repeat(k + 1 - digits.len()) + &digits;
    }
    let (int, frac) = digits.split_at(digits.len() - k);
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub center: BigRational,
    pub half_width: BigRational,
}

#[derive(Debug, Clone)]
pub struct CoveringCertificate {
    /// Scale of the certificate (the snapped `t_n` for Cantor sets).
    pub t: f64,
    pub t_requested: f64,
    pub intervals: Vec<Interval>,
    pub c_lambda: f64,
    pub d: f64,
}

#[derive(Serialize)]
struct IntervalJson {
    num: String,
    den: String,
    center: f64,
    half_width: f64,
}

#[derive(Serialize)]
struct CertificateJson<'a> {
    t: f64,
    t_requested: f64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "C_lambda")]
    c_lambda: f64,
    d: f64,
    intervals: &'a [IntervalJson],
}

impl CoveringCertificate {
    pub fn n(&self) -> usize {
        self.intervals.len()
    }

    pub fn max_denominator(&self) -> BigInt {
        self.intervals.iter().map(|i| i.center.denom().clone()).max().unwrap_or_else(BigInt::one)
    }

    pub fn to_json(&self) -> String {
        let iv: Vec<IntervalJson> = self
            .intervals
            .iter()
            .map(|i| IntervalJson {
                num: i.center.numer().to_string(),
                den: i.center.denom().to_string(),
                center: i.center.to_f64().unwrap_or(f64::NAN),
                half_width: i.half_width.to_f64().unwrap_or(f64::NAN),
            })
            .collect();
        serde_json::to_string_pretty(&CertificateJson {
            t: self.t,
            t_requested: self.t_requested,
            n: self.n(),
            c_lambda: self.c_lambda,
            d: self.d,
            intervals: &iv,
        })
        .expect("certificate serializes")
    }
}

/// Brute-force check: every point within `half_width` of some center (exact
/// arithmetic), `half_width ≤ t`, every denominator `≤ C_Λ t^{-d}`.
pub fn verify_certificate(set: &LambdaSet, cert: &CoveringCertificate) -> Result<(), LambdaError> {
    let t = BigRational::from_float(cert.t).ok_or_else(|| LambdaError::Certificate("t not finite".into()))?;
    for iv in &cert.intervals {
        if iv.half_width > t {
            return Err(LambdaError::Certificate(format!("half width above t at center {}", iv.center)));
        }
        let q = iv.center.denom().to_f64().unwrap_or(f64::INFINITY);
        let bound = cert.c_lambda * cert.t.powf(-cert.d);
        if q > bound * (1.0 + 1e-12) {
            return Err(LambdaError::Certificate(format!("denominator {q} above {bound}")));
        }
    }
    for p in set.points() {
        if !cert.intervals.iter().any(|iv| (p - &iv.center).abs() <= iv.half_width) {
            return Err(LambdaError::Certificate(format!("point {} uncovered", p.to_f64().unwrap_or(f64::NAN))));
        }
    }
    Ok(())
}

/// Simplest rational (smallest denominator) in `[lo, hi]`, `0 ≤ lo ≤ hi`.
pub fn simplest_between(lo: &BigRational, hi: &BigRational) -> BigRational {
    let c = lo.ceil();
    if &c <= hi {
        return c;
    }
    let fl = lo.floor();
    let inner = simplest_between(&(BigRational::one() / (hi - &fl)), &(BigRational::one() / (lo - &fl)));
    fl + BigRational::one() / inner
}

/// Covering certificate at scale `t`.
///
/// Cantor sets: `t` snaps down to `t_n = 2^{1−D^{n+1}}` (smallest `n` with `t_n ≤ t`),
/// centers are the level-`n` truncations (denominators `≤ 2^{D^n} ≤ 2 t_n^{-1/D}`).
/// The tail beyond level `n` reaches slightly past `t_n/2`, so each interval has
/// half width `t_n`. Explicit sets: greedy left-to-right, each center the simplest
/// rational in `[p, p + t/2]` for the first uncovered point `p`, half width `t/2`.
pub fn cover(set: &LambdaSet, t: f64) -> Result<CoveringCertificate, LambdaError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(LambdaError::Scale(t));
    }
    if set.is_empty() {
        return Err(LambdaError::Empty);
    }
    let cert = match set.provenance {
        Provenance::Cantor { d, depth } => cover_cantor(set, d, depth, t)?,
        Provenance::Explicit => cover_explicit(set, t)?,
    };
    verify_certificate(set, &cert)?;
    Ok(cert)
}

fn cover_cantor(set: &LambdaSet, d: u32, depth: u32, t: f64) -> Result<CoveringCertificate, LambdaError> {
    let d64 = d as u64;
    let mut n = 0u32;
    loop {
        let e = d64.checked_pow(n + 1).filter(|&e| e <= BIT_CAP).ok_or(LambdaError::Scale(t))?;
        if 2f64.powi(1 - e as i32) <= t {
            break;
        }
        n += 1;
    }
    let e = d64.pow(n + 1);
    let tn = 2f64.powi(1 - e as i32);
    let level = n.min(depth);
    // Truncation keeps only the digits 2^{-D^j} with j ≤ level: floor(p·2^{D^level}) / 2^{D^level}.
    let scale = pow2(d64.pow(level));
    let mut centers: Vec<BigRational> = set.points().iter().map(|p| (p * &scale).floor() / &scale).collect();
    centers.dedup();
    let hw = BigRational::from_float(tn).expect("finite");
    Ok(CoveringCertificate {
        t: tn,
        t_requested: t,
        intervals: centers.into_iter().map(|c| Interval { center: c, half_width: hw.clone() }).collect(),
        c_lambda: 2.0,
        d: 1.0 / d as f64,
    })
}

fn cover_explicit(set: &LambdaSet, t: f64) -> Result<CoveringCertificate, LambdaError> {
    let half = BigRational::from_float(t / 2.0).expect("finite");
    let mut intervals = Vec::new();
    let mut i = 0;
    let pts = set.points();
    while i < pts.len() {
        let p = &pts[i];
        let c = simplest_between(p, &(p + &half));
        if c.denom() > &BigInt::from(DENOM_CAP) {
            return Err(LambdaError::NotCoverable { witness: set.values()[i], t, cap: DENOM_CAP });
        }
        let reach = &c + &half;
        while i < pts.len() && pts[i] <= reach {
            i += 1;
        }
        intervals.push(Interval { center: c, half_width: half.clone() });
    }
    let qmax = intervals.iter().map(|iv| iv.center.denom().to_f64().unwrap_or(1.0)).fold(1.0, f64::max);
    let raw = (qmax.ln() / (1.0 / t).ln()).max(0.0);
    let d = ((raw * 100.0 - 1e-9).ceil() / 100.0).clamp(0.01, 1.0);
    let c_lambda = intervals
        .iter()
        .map(|iv| iv.center.denom().to_f64().unwrap_or(1.0) * t.powf(d))
        .fold(0.0, f64::max);
    Ok(CoveringCertificate { t, t_requested: t, intervals, c_lambda, d })
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub t: Vec<f64>,
    pub counts: Vec<usize>,
    pub max_denominators: Vec<f64>,
    /// Slope of `log N` against `log(1/t)`.
    pub count_exponent: f64,
    /// Slope of `log max q` against `log(1/t)`.
    pub denominator_exponent: f64,
    /// `1/D` for Cantor sets.
    pub reference: Option<f64>,
    /// All covering counts equal.
    pub degenerate: bool,
    /// Largest `N·t^{2d}` over the scales, the constant in `N ≤ C t^{-2d}`.
    pub count_constant: f64,
}

/// Fits covering counts and denominators over `t_list`.
pub fn dimension_estimate(set: &LambdaSet, t_list: &[f64]) -> Result<DimensionReport, LambdaError> {
    let lo = t_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = t_list.iter().cloned().fold(0.0, f64::max);
    if t_list.len() < 3 || !(hi / lo >= 100.0) {
        return Err(LambdaError::FitRange);
    }
    let mut ts = Vec::new();
    let mut counts = Vec::new();
    let mut dens = Vec::new();
    let mut count_constant: f64 = 0.0;
    for &t in t_list {
        let c = cover(set, t)?;
        ts.push(c.t);
        counts.push(c.n());
        dens.push(c.max_denominator().to_f64().unwrap_or(f64::INFINITY));
        count_constant = count_constant.max(c.n() as f64 * c.t.powf(2.0 * c.d));
    }
    let x: Vec<f64> = ts.iter().map(|t| (1.0 / t).ln()).collect();
    let yn: Vec<f64> = counts.iter().map(|&n| (n as f64).ln()).collect();
    let yq: Vec<f64> = dens.iter().map(|q| q.ln()).collect();
    let degenerate = counts.windows(2).all(|w| w[0] == w[1]);
    Ok(DimensionReport {
        count_exponent: if degenerate { 0.0 } else { ls_slope(&x, &yn).unwrap_or(0.0) },
        denominator_exponent: ls_slope(&x, &yq).unwrap_or(0.0),
        reference: match set.provenance {
            Provenance::Cantor { d, .. } => Some(1.0 / d as f64),
            Provenance::Explicit => None,
        },
        degenerate,
        count_constant,
        t: ts,
        counts,
        max_denominators: dens,
    })
}

/// `t_n = 2^{1−D^{n+1}}` for `n` in `ns`.
pub fn cantor_scales(d: u32, ns: impl IntoIterator<Item = u32>) -> Vec<f64> {
    ns.into_iter().map(|n| 2f64.powi(1 - (d as i32).pow(n + 1))).collect()
}

/// Reduced denominator of a rational, as `u64` when it fits.
pub fn denominator_u64(r: &BigRational) -> Option<u64> {
    r.denom().to_u64()
}

/// `gcd`-free check used by callers that build centers by hand.
pub fn is_reduced(num: &BigInt, den: &BigInt) -> bool {
    num.gcd(den).is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn cantor_examples() {
        let s = LambdaSet::cantor(2, 1).unwrap();
        assert_eq!(s.points(), &[r(0, 1), r(1, 4)]);
        let s = LambdaSet::cantor(2, 2).unwrap();
        assert_eq!(s.points(), &[r(0, 1), r(1, 16), r(1, 4), r(5, 16)]);
        let s = LambdaSet::cantor(3, 2).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.points().last().unwrap(), &(r(1, 8) + r(1, 512)));
        assert!(matches!(LambdaSet::cantor(1, 3), Err(LambdaError::CantorParams { .. })));
        assert!(matches!(LambdaSet::cantor(3, 7), Err(LambdaError::Cap { .. })));
        assert!(matches!(LambdaSet::cantor(2, 21), Err(LambdaError::Cap { .. })));
    }

    #[test]
    fn cantor_points_are_distinct() {
        for (d, depth) in [(2, 9), (3, 6), (4, 4), (5, 4)] {
            let s = LambdaSet::cantor(d, depth).unwrap();
            assert_eq!(s.len(), 1 << depth);
        }
        // Collapse in f64 is why points are kept exact.
        let s = LambdaSet::cantor(3, 5).unwrap();
        let mut v = s.values().to_vec();
        v.dedup();
        assert!(v.len() < s.len());
    }

    #[test]
    fn cover_examples() {
        let c = cover(&LambdaSet::cantor(2, 3).unwrap(), 0.125).unwrap();
        assert_eq!(c.n(), 2);
        let centers: Vec<_> = c.intervals.iter().map(|i| i.center.clone()).collect();
        assert_eq!(centers, vec![r(0, 1), r(1, 4)]);
        assert_eq!(c.max_denominator(), BigInt::from(4));
        assert!(4.0 <= 2.0 * 0.125f64.powf(-0.5));

        let c = cover(&LambdaSet::explicit(&[0.0]).unwrap(), 0.3).unwrap();
        assert_eq!(c.n(), 1);
        assert_eq!(c.intervals[0].center, r(0, 1));

        let t = 2f64.powi(1 - 27);
        let c = cover(&LambdaSet::cantor(3, 3).unwrap(), t).unwrap();
        assert_eq!(c.n(), 4);
        assert_eq!(c.max_denominator(), BigInt::from(512));
        assert!(512.0 <= 2.0 * t.powf(-1.0 / 3.0));
    }

    #[test]
    fn centered_length_t_intervals_do_not_cover() {
        // 17/256 sits past t/2 = 1/16 from its truncation 0.
        let s = LambdaSet::cantor(2, 3).unwrap();
        let mut c = cover(&s, 0.125).unwrap();
        for iv in &mut c.intervals {
            iv.half_width = r(1, 16);
        }
        assert!(verify_certificate(&s, &c).is_err());
    }

    #[test]
    fn snapping_between_scales() {
        let s = LambdaSet::cantor(2, 6).unwrap();
        let c = cover(&s, 0.01).unwrap();
        assert_eq!(c.t, 2f64.powi(-7));
        assert_eq!(c.n(), 4);
        assert!(cover(&s, 0.0).is_err());
        assert!(cover(&s, 1.0).is_err());
    }

    #[test]
    fn explicit_covers_and_rejects() {
        let s = LambdaSet::explicit(&[0.1, 0.1000001, 0.5, 0.333, 1.0]).unwrap();
        let c = cover(&s, 1e-3).unwrap();
        verify_certificate(&s, &c).unwrap();
        assert!(c.intervals.iter().any(|i| i.center == r(1, 3)));
        let s = LambdaSet::explicit(&[0.123456789012345]).unwrap();
        assert!(matches!(cover(&s, 1e-13), Err(LambdaError::NotCoverable { .. })));
        assert!(LambdaSet::explicit(&[1.5]).is_err());
        assert!(LambdaSet::explicit(&[]).is_err());
    }

    #[test]
    fn simplest_rationals() {
        assert_eq!(simplest_between(&r(3, 10), &r(4, 10)), r(1, 3));
        assert_eq!(simplest_between(&r(0, 1), &r(1, 100)), r(0, 1));
        assert_eq!(simplest_between(&r(1, 100), &r(1, 50)), r(1, 50));
        assert_eq!(simplest_between(&r(314, 100), &r(315, 100)), r(22, 7));
    }

    #[test]
    fn dimension_examples() {
        let z = LambdaSet::explicit(&[0.0]).unwrap();
        let rep = dimension_estimate(&z, &[0.1, 0.01, 0.001]).unwrap();
        assert_eq!(rep.count_exponent, 0.0);
        assert!(rep.degenerate);
        let c2 = LambdaSet::cantor(2, 6).unwrap();
        let rep = dimension_estimate(&c2, &cantor_scales(2, 1..=4)).unwrap();
        assert!(rep.denominator_exponent <= 0.5 + 0.05);
        assert!(rep.counts.windows(2).all(|w| w[0] <= w[1]));
        let c3 = LambdaSet::cantor(3, 5).unwrap();
        let rep = dimension_estimate(&c3, &cantor_scales(3, 1..=4)).unwrap();
        assert!(rep.denominator_exponent <= 1.0 / 3.0 + 0.05);
        assert!(rep.count_constant.is_finite());
        assert!(matches!(dimension_estimate(&c3, &[0.1, 0.05, 0.02]), Err(LambdaError::FitRange)));
    }

    #[test]
    fn json_round_trips() {
        let s = LambdaSet::cantor(2, 3).unwrap();
        let j = s.to_json();
        assert!(j.contains("\"0.0625\""));
        let back = LambdaSet::from_json(&j).unwrap();
        assert_eq!(back.values(), s.values());
        let s3 = LambdaSet::cantor(3, 3).unwrap();
        let exact: Vec<String> = serde_json::from_str(&s3.to_json()).unwrap();
        assert!(exact.iter().any(|x| x.len() > 25));
        let e = LambdaSet::explicit(&[0.3, 0.7]).unwrap();
        assert_eq!(e.to_json(), "[\"0.3\",\"0.7\"]");
        assert!(LambdaSet::from_json("[\"abc\"]").is_err());
        let cert = cover(&s, 0.125).unwrap().to_json();
        let v: serde_json::Value = serde_json::from_str(&cert).unwrap();
        assert_eq!(v["N"], 2);
        assert_eq!(v["intervals"][1]["den"], "4");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn explicit_certificates_verify(vals in proptest::collection::vec(0.0f64..=1.0, 1..40), e in 1.0f64..5.0) {
            let s = LambdaSet::explicit(&vals).unwrap();
            let t = 10f64.powf(-e);
            let c = cover(&s, t).unwrap();
            prop_assert!(verify_certificate(&s, &c).is_ok());
            prop_assert!(c.n() <= s.len());
        }

        #[test]
        fn covering_count_monotone(d in 2u32..4, depth in 1u32..5) {
            let s = LambdaSet::cantor(d, depth).unwrap();
            let ts = cantor_scales(d, 0..4).into_iter().filter(|t| *t > 1e-290).collect::<Vec<_>>();
            let ns: Vec<usize> = ts.iter().map(|&t| cover(&s, t).unwrap().n()).collect();
            // t decreasing along ts, so N must be non-decreasing.
            prop_assert!(ns.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
