//! The truncated discrete quadratic Carleson operator
//! `C_Λ^R f(n) = sup_{λ∈Λ} |Σ_{1≤|m|≤R} f(n−m) e(λm²)/m|`, applied by FFT
//! convolution, and the empirical norm probe built on it.

pub mod torus;

use crate::lambda_sets::{LambdaError, LambdaSet};
use crate::oscillatory::OscError;
use crate::phase::{e, frac_mul};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cap on the output length `L + 2R` of one convolution.
pub const CONV_CAP: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("signal must have at least one sample")]
    EmptySignal,
    #[error("signal sample {0} is not finite")]
    NonFinite(usize),
    #[error("radius must be >= 1")]
    Radius,
    #[error("output length {0} exceeds the convolution cap 2^24")]
    Cap(usize),
    #[error("modulation set is empty")]
    EmptyLambda,
    #[error("trial count must be >= 1")]
    Trials,
    #[error("grid size {0} is not a power of two")]
    GridSize(usize),
    #[error("frequencies {i} and {k} are {dist:e} apart, below tau = {tau:e}")]
    Separation { i: usize, k: usize, dist: f64, tau: f64 },
    #[error("lambda {lambda} outside the allowed range {range}")]
    LambdaRange { lambda: f64, range: String },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("no lambda in the grid admits a scale for l={0}")]
    NoValidLambda(i32),
    #[error(transparent)]
    Osc(#[from] OscError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
}

/// Finitely supported `f: ℤ → ℂ`, `samples[i] = f(origin + i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub origin: i64,
    pub samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(origin: i64, samples: Vec<Complex64>) -> Result<Self, OpError> {
        if samples.is_empty() {
            return Err(OpError::EmptySignal);
        }
        if let Some(i) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OpError::NonFinite(i));
        }
        Ok(Self { origin, samples })
    }

    pub fn impulse(origin: i64) -> Self {
        Self { origin, samples: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn norm2(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let s: Signal = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Self::new(s.origin, s.samples).map_err(|e| e.to_string())
    }
}

/// Real-valued output of the maximal operator, `samples[i]` at `origin + i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealSignal {
    pub origin: i64,
    pub samples: Vec<f64>,
}

impl RealSignal {
    pub fn norm2(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Taps `e(λm²)/m` for `1 ≤ |m| ≤ R`; `taps[m + R]`, with a zero at `m = 0`.
#[derive(Debug, Clone)]
pub struct TruncatedKernel {
    pub lambda: f64,
    pub radius: usize,
    taps: Vec<Complex64>,
}

impl TruncatedKernel {
    pub fn new(lambda: f64, radius: usize) -> Result<Self, OpError> {
        if radius == 0 {
            return Err(OpError::Radius);
        }
        let r = radius as i64;
        let taps = (-r..=r)
            .map(|m| if m == 0 { Complex64::new(0.0, 0.0) } else { e(frac_mul(lambda, (m * m) as f64)) / m as f64 })
            .collect();
        Ok(Self { lambda, radius, taps })
    }

    pub fn tap(&self, m: i64) -> Complex64 {
        let r = self.radius as i64;
        if m < -r || m > r {
            Complex64::new(0.0, 0.0)
        } else {
            self.taps[(m + r) as usize]
        }
    }

    pub fn tap_count(&self) -> usize {
        2 * self.radius
    }

    /// DFT of the taps wrapped onto a cycle of length `n ≥ 2R + 1`.
    fn spectrum(&self, n: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        let r = self.radius as i64;
        for m in -r..=r {
            v[m.rem_euclid(n as i64) as usize] = self.tap(m);
        }
        planner.plan_fft_forward(n).process(&mut v);
        v
    }
}

/// Shared FFT setup for one signal length and radius.
struct ConvPlan {
    n: usize,
    len: usize,
    radius: usize,
}

impl ConvPlan {
    fn new(len: usize, radius: usize) -> Result<Self, OpError> {
        if radius == 0 {
            return Err(OpError::Radius);
        }
        let out = len + 2 * radius;
        if out > CONV_CAP {
            return Err(OpError::Cap(out));
        }
        Ok(Self { n: out.next_power_of_two(), len, radius })
    }

    fn forward(&self, f: &[Complex64], planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.n];
        v[..f.len()].copy_from_slice(f);
        planner.plan_fft_forward(self.n).process(&mut v);
        v
    }

    /// Inverse transform of `spec·kernel` read out over the `L + 2R` output window.
    fn apply(
        &self,
        spec: &[Complex64],
        kernel: &[Complex64],
        planner: &mut FftPlanner<f64>,
        buf: &mut Vec<Complex64>,
    ) {
        buf.clear();
        buf.extend(spec.iter().zip(kernel).map(|(a, b)| a * b));
        planner.plan_fft_inverse(self.n).process(buf);
        let scale = 1.0 / self.n as f64;
        let out_len = self.len + 2 * self.radius;
        let r = self.radius;
        let n = self.n;
        let window: Vec<Complex64> = (0..out_len).map(|q| buf[(q + n - r) % n] * scale).collect();
        buf.clear();
        buf.extend(window);
    }
}

/// `Σ_{1≤|m|≤R} f(n−m) e(λm²)/m` for every `n` in `[origin − R, origin + L − 1 + R]`.
pub fn apply_kernel(f: &Signal, lambda: f64, radius: usize) -> Result<Signal, OpError> {
    let plan = ConvPlan::new(f.len(), radius)?;
    let mut planner = FftPlanner::new();
    let k = TruncatedKernel::new(lambda, radius)?.spectrum(plan.n, &mut planner);
    let spec = plan.forward(&f.samples, &mut planner);
    let mut buf = Vec::with_capacity(plan.n);
    plan.apply(&spec, &k, &mut planner, &mut buf);
    Ok(Signal { origin: f.origin - radius as i64, samples: buf })
}

fn distinct_values(lambdas: &[f64]) -> Vec<f64> {
    let mut v = lambdas.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

/// `C_Λ^R f` on the output window, max over `Λ` in increasing order of `λ`.
pub fn carleson_max(f: &Signal, lambdas: &[f64], radius: usize) -> Result<RealSignal, OpError> {
    let lams = distinct_values(lambdas);
    if lams.is_empty() {
        return Err(OpError::EmptyLambda);
    }
    let plan = ConvPlan::new(f.len(), radius)?;
    let mut planner = FftPlanner::new();
    let spec = plan.forward(&f.samples, &mut planner);
    let mut out = vec![0.0f64; f.len() + 2 * radius];
    let mut buf = Vec::with_capacity(plan.n);
    for &l in &lams {
        let k = TruncatedKernel::new(l, radius)?.spectrum(plan.n, &mut planner);
        plan.apply(&spec, &k, &mut planner, &mut buf);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = o.max(z.norm());
        }
    }
    Ok(RealSignal { origin: f.origin - radius as i64, samples: out })
}

/// [`carleson_max`] over the `f64` values of a [`LambdaSet`].
pub fn carleson_max_set(f: &Signal, set: &LambdaSet, radius: usize) -> Result<RealSignal, OpError> {
    carleson_max(f, set.values(), radius)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NormProbeConfig {
    pub lengths: Vec<usize>,
    /// Gaussian trials per length; the impulse and one chirp per `λ` come on top.
    pub trials: usize,
    pub seed: u64,
    /// `R = radius_factor · length`.
    pub radius_factor: usize,
}

impl Default for NormProbeConfig {
    fn default() -> Self {
        Self { lengths: vec![256, 512, 1024, 2048, 4096], trials: 200, seed: 1, radius_factor: 4 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormProbeRow {
    pub length: usize,
    pub radius: usize,
    pub max_ratio: f64,
    pub gaussian_max: f64,
    pub impulse: f64,
    pub chirp_max: f64,
    pub signals: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormProbeReport {
    pub seed: u64,
    pub params: NormProbeConfig,
    pub lambdas: usize,
    pub rows: Vec<NormProbeRow>,
    /// `max_ratio[i+1] / max_ratio[i]`.
    pub growth: Vec<f64>,
}

/// Largest `‖C_Λ^R f‖₂ / ‖f‖₂` per length over Gaussian signals, the impulse, and
/// windowed chirps `e(λ₀n²)` for each `λ₀ ∈ Λ`. A lower bound on the operator norm.
pub fn norm_probe(lambdas: &[f64], cfg: &NormProbeConfig) -> Result<NormProbeReport, OpError> {
    if cfg.trials == 0 {
        return Err(OpError::Trials);
    }
    let lams = distinct_values(lambdas);
    if lams.is_empty() {
        return Err(OpError::EmptyLambda);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut planner = FftPlanner::new();
    let mut rows = Vec::new();
    for &len in &cfg.lengths {
        if len == 0 {
            return Err(OpError::EmptySignal);
        }
        let radius = cfg.radius_factor.max(1) * len;
        let plan = ConvPlan::new(len, radius)?;
        let kernels: Vec<Vec<Complex64>> = lams
            .iter()
            .map(|&l| Ok(TruncatedKernel::new(l, radius)?.spectrum(plan.n, &mut planner)))
            .collect::<Result<_, OpError>>()?;
        let mut buf = Vec::with_capacity(plan.n);
        let mut ratio = |f: &[Complex64], planner: &mut FftPlanner<f64>| {
            let spec = plan.forward(f, planner);
            let mut out = vec![0.0f64; len + 2 * radius];
            for k in &kernels {
                plan.apply(&spec, k, planner, &mut buf);
                for (o, z) in out.iter_mut().zip(buf.iter()) {
                    *o = o.max(z.norm());
                }
            }
            let num = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            let den = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            num / den
        };
        let mut gaussian_max: f64 = 0.0;
        for _ in 0..cfg.trials {
            let f: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            gaussian_max = gaussian_max.max(ratio(&f, &mut planner));
        }
        let mut imp = vec![Complex64::new(0.0, 0.0); len];
        imp[0] = Complex64::new(1.0, 0.0);
        let impulse = ratio(&imp, &mut planner);
        let mut chirp_max: f64 = 0.0;
        for &l in &lams {
            let f: Vec<Complex64> = (0..len).map(|n| e(frac_mul(l, (n * n) as f64))).collect();
            chirp_max = chirp_max.max(ratio(&f, &mut planner));
        }
        rows.push(NormProbeRow {
            length: len,
            radius,
            max_ratio: gaussian_max.max(impulse).max(chirp_max),
            gaussian_max,
            impulse,
            chirp_max,
            signals: cfg.trials + 1 + lams.len(),
        });
    }
    let growth = rows.windows(2).map(|w| w[1].max_ratio / w[0].max_ratio).collect();
    Ok(NormProbeReport { seed: cfg.seed, params: cfg.clone(), lambdas: lams.len(), rows, growth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn direct(f: &Signal, lambda: f64, r: usize) -> Signal {
        let r = r as i64;
        let l = f.len() as i64;
        let samples = (0..l + 2 * r)
            .map(|q| {
                let n = q - r;
                let mut acc = Complex64::new(0.0, 0.0);
                for m in -r..=r {
                    if m == 0 {
                        continue;
                    }
                    let p = n - m;
                    if (0..l).contains(&p) {
                        let ph = lambda * (m as f64) * (m as f64);
                        acc += f.samples[p as usize] * e(ph - ph.floor()) / m as f64;
                    }
                }
                acc
            })
            .collect();
        Signal { origin: f.origin - r, samples }
    }

    fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> Signal {
        let s = (0..len).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        Signal::new(rng.random_range(-50..50), s).unwrap()
    }

    fn max_diff(a: &Signal, b: &Signal) -> f64 {
        assert_eq!(a.origin, b.origin);
        assert_eq!(a.len(), b.len());
        a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn impulse_response_is_the_kernel() {
        let out = apply_kernel(&Signal::impulse(0), 0.0, 4).unwrap();
        assert_eq!(out.origin, -4);
        for (i, z) in out.samples.iter().enumerate() {
            let n = i as i64 - 4;
            let want = if n == 0 { 0.0 } else { 1.0 / n as f64 };
            assert!((z - Complex64::new(want, 0.0)).norm() < 1e-14, "n={n}");
        }
        let k = TruncatedKernel::new(0.37, 5).unwrap();
        assert_eq!(k.tap_count(), 10);
        for m in 1..=5 {
            assert!((k.tap(-m) + k.tap(m)).norm() < 1e-15);
        }
        assert!(apply_kernel(&Signal::impulse(0), 0.0, 0).is_err());
    }

    #[test]
    fn fft_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_signal(&mut rng, 512);
        let a = apply_kernel(&f, 0.3717, 1024).unwrap();
        assert!(max_diff(&a, &direct(&f, 0.3717, 1024)) <= 1e-10);
        for _ in 0..20 {
            let len = rng.random_range(1..=512);
            let r = rng.random_range(1..=1024);
            let lam: f64 = rng.random();
            let f = random_signal(&mut rng, len);
            let d = max_diff(&apply_kernel(&f, lam, r).unwrap(), &direct(&f, lam, r));
            assert!(d <= 1e-10, "L={len} R={r}: {d:e}");
        }
    }

    #[test]
    fn integer_shift_of_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_signal(&mut rng, 100);
        let lam = 0.25 + 2f64.powi(-20);
        let a = apply_kernel(&f, lam, 64).unwrap();
        let b = apply_kernel(&f, lam + 1.0, 64).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn carleson_max_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_signal(&mut rng, 64);
        let one = carleson_max(&f, &[0.3], 32).unwrap();
        let k = apply_kernel(&f, 0.3, 32).unwrap();
        for (a, b) in one.samples.iter().zip(&k.samples) {
            assert!((a - b.norm()).abs() < 1e-12);
        }
        let small = carleson_max(&f, &[0.1, 0.3], 32).unwrap();
        let big = carleson_max(&f, &[0.1, 0.3, 0.7, 0.01], 32).unwrap();
        assert!(small.samples.iter().zip(&big.samples).all(|(a, b)| a <= b));
        assert_eq!(carleson_max(&f, &[], 8), Err(OpError::EmptyLambda));
    }

    #[test]
    fn chirp_beats_noise() {
        let set = LambdaSet::cantor(3, 4).unwrap();
        let lam0 = set.values()[5];
        let chirp: Vec<Complex64> = (0..256).map(|n| e(frac_mul(lam0, (n * n) as f64))).collect();
        let c = Signal::new(0, chirp).unwrap();
        let rc = carleson_max_set(&c, &set, 1024).unwrap().norm2() / c.norm2();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_signal(&mut rng, 256);
        let rg = carleson_max_set(&g, &set, 1024).unwrap().norm2() / g.norm2();
        assert!(rc > rg, "{rc} vs {rg}");
    }

    /// Frozen threshold for the relative change of ‖C_Λ f‖ when R doubles 2^12 → 2^13.
    const TRUNCATION_DRIFT: f64 = 0.01;

    #[test]
    fn truncation_stability() {
        let set = LambdaSet::cantor(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = random_signal(&mut rng, 256);
        let a = carleson_max_set(&f, &set, 1 << 12).unwrap().norm2();
        let b = carleson_max_set(&f, &set, 1 << 13).unwrap().norm2();
        let drift = (b - a).abs() / a;
        eprintln!("truncation drift {drift:e}");
        assert!(drift < TRUNCATION_DRIFT);
    }

    #[test]
    fn norm_probe_hilbert_plateau() {
        let cfg = NormProbeConfig { lengths: vec![64, 128, 256, 512], trials: 10, seed: 2, radius_factor: 4 };
        let rep = norm_probe(&[0.0], &cfg).unwrap();
        for r in &rep.rows {
            // ℓ² norm of the discrete Hilbert transform is π.
            assert!(r.max_ratio <= std::f64::consts::PI + 1e-9);
        }
        assert!(*rep.growth.last().unwrap() < 1.1);
        let bad = NormProbeConfig { trials: 0, ..cfg };
        assert_eq!(norm_probe(&[0.0], &bad).unwrap_err(), OpError::Trials);
    }

    #[test]
    fn signal_json() {
        let s = Signal::new(-3, vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"origin":-3,"samples":[[1.0,-2.0],[0.5,0.0]]}"#);
        assert_eq!(Signal::from_json(&j).unwrap(), s);
        assert!(Signal::from_json(r#"{"origin":0,"samples":[]}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn linear_and_translation_covariant(seed in 0u64..1000, len in 1usize..80, r in 1usize..60, lam in 0.0f64..1.0, shift in -40i64..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_signal(&mut rng, len);
            let g = Signal::new(f.origin, (0..len).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect()).unwrap();
            let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
            let comb = Signal::new(f.origin, f.samples.iter().zip(&g.samples).map(|(x, y)| a * x + b * y).collect()).unwrap();
            let lhs = apply_kernel(&comb, lam, r).unwrap();
            let tf = apply_kernel(&f, lam, r).unwrap();
            let tg = apply_kernel(&g, lam, r).unwrap();
            for i in 0..lhs.len() {
                prop_assert!((lhs.samples[i] - (a * tf.samples[i] + b * tg.samples[i])).norm() <= 1e-10);
            }
            let moved = Signal { origin: f.origin + shift, ..f.clone() };
            let tm = apply_kernel(&moved, lam, r).unwrap();
            prop_assert_eq!(tm.origin, tf.origin + shift);
            prop_assert_eq!(tm.samples, tf.samples);
        }
    }
}
