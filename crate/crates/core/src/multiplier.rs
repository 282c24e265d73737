//! Weyl-sum pieces `M_j(λ,β) = Σ_m e(λm² − βm) ψ_j(m)`, the major-arc
//! approximants `L_{j,s}`, `L_j`, `L^s`, the errors `E_j = M_j − L_j`, and the
//! decay harness that samples them.

use crate::arithmetic::{
    box_half_widths, enumerate_shell, find_major_box, gauss_sum, major_qmax, reduced_up_to,
    ArithError, ReducedRational,
};
use crate::bump::{chi_s, psi_k, BumpError};
use crate::oscillatory::{h_j, osc_norm, OscError};
use crate::phase::{frac_mul, torus_diff, wrap};
use crate::stats::log2_slope;
use num_complex::Complex64;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::rc::Rc;
use thiserror::Error;

/// Largest `j` for which `M_j` is summed directly.
pub const J_CAP: i32 = 24;
/// Frozen cap for `max |∂_λ E_j| / 4^j` over the decay sweep (measured 0.45).
pub const DLAMBDA_CAP: f64 = 1.0;
const PSI_CACHE_MAX_J: i32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultError {
    #[error("scale j={0} outside 0..=24")]
    Scale(i32),
    #[error("shell index s={0} must be >= 1")]
    Shell(i32),
    #[error("epsilon must lie in (0, 1/7), got {0}")]
    Epsilon(f64),
    #[error("empty j range {0}..={1}")]
    EmptyRange(i32, i32),
    #[error("strata side {0} leaves the spacing above half a box width (need >= 9)")]
    UnderResolved(usize),
    #[error("frequency grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Osc(#[from] OscError),
    #[error(transparent)]
    Bump(#[from] BumpError),
}

fn check_j(j: i32) -> Result<(), MultError> {
    if (0..=J_CAP).contains(&j) {
        Ok(())
    } else {
        Err(MultError::Scale(j))
    }
}

fn check_eps(eps: f64) -> Result<(), MultError> {
    if eps > 0.0 && eps < 1.0 / 7.0 {
        Ok(())
    } else {
        Err(MultError::Epsilon(eps))
    }
}

thread_local! {
    static PSI: RefCell<HashMap<i32, Rc<Vec<(f64, f64)>>>> = RefCell::new(HashMap::new());
}

/// Nonzero `(m, ψ_j(m))` for `m ≥ 1`.
fn psi_table(j: i32) -> Rc<Vec<(f64, f64)>> {
    let build = || {
        let lo = (1u64 << j) / 4;
        let hi = 1u64 << j;
        Rc::new(
            (lo.max(1)..=hi)
                .map(|m| (m as f64, psi_k(j, m as f64)))
                .filter(|p| p.1 != 0.0)
                .collect::<Vec<_>>(),
        )
    };
    if j > PSI_CACHE_MAX_J {
        return build();
    }
    PSI.with(|c| c.borrow_mut().entry(j).or_insert_with(build).clone())
}

/// `M_j(λ,β)`, summed directly over `2^{j−2} ≤ |m| ≤ 2^j`. Phases `λm²` and `βm`
/// are reduced mod 1 with an exact product split before the exponential.
pub fn m_j(j: i32, lambda: f64, beta: f64) -> Result<Complex64, MultError> {
    check_j(j)?;
    let t = psi_table(j);
    let (mut re, mut im) = (0.0, 0.0);
    // ±m pair: ψ_j(m) e(λm²) (e(−βm) − e(βm)) = −2i ψ_j(m) sin(2πβm) e(λm²)
    for &(m, w) in t.iter() {
        let sb = w * (TAU * frac_mul(beta, m)).sin();
        let (s, c) = (TAU * frac_mul(lambda, m * m)).sin_cos();
        re += sb * s;
        im -= sb * c;
    }
    Ok(Complex64::new(2.0 * re, 2.0 * im))
}

/// `M_j(A/Q + δλ, B/Q + δβ)` with the rational part of each phase reduced exactly
/// in integers. Rounding `A/Q + δλ` to `f64` would shift `λm²` by up to
/// `m²·2^{-53}`, about `10^{-5}` cycles at `j = 18`.
pub fn m_j_near(j: i32, center: &ReducedRational, dl: f64, db: f64) -> Result<Complex64, MultError> {
    check_j(j)?;
    let t = psi_table(j);
    let q = center.q as u128;
    let qf = center.q as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for &(m, w) in t.iter() {
        let mi = m as u128;
        let ra = ((center.a as u128 * (mi * mi)) % q) as f64 / qf;
        let rb = ((center.b as u128 * mi) % q) as f64 / qf;
        let sb = w * (TAU * wrap(rb + frac_mul(db, m))).sin();
        let (s, c) = (TAU * wrap(ra + frac_mul(dl, m * m))).sin_cos();
        re += sb * s;
        im -= sb * c;
    }
    Ok(Complex64::new(2.0 * re, 2.0 * im))
}

/// `M_j(λ, β₀ + k/n)` for `k = 0..n`: the coefficients are folded mod `n` and
/// transformed with one length-`n` FFT.
pub fn m_j_row(
    j: i32,
    lambda: f64,
    beta0: f64,
    n: usize,
    planner: &mut FftPlanner<f64>,
) -> Result<Vec<Complex64>, MultError> {
    check_j(j)?;
    if n == 0 {
        return Err(MultError::Grid("row length must be positive".into()));
    }
    let t = psi_table(j);
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    let nn = n as i64;
    for &(m, w) in t.iter() {
        let (s, c) = (TAU * frac_mul(lambda, m * m)).sin_cos();
        let v = Complex64::new(c, s) * w;
        let (sb, cb) = (TAU * frac_mul(beta0, m)).sin_cos();
        let mi = m as i64;
        bins[mi.rem_euclid(nn) as usize] += v * Complex64::new(cb, -sb);
        bins[(-mi).rem_euclid(nn) as usize] -= v * Complex64::new(cb, sb);
    }
    planner.plan_fft_forward(n).process(&mut bins);
    Ok(bins)
}

/// Largest shell index in `L_j`: `⌊εj⌋`.
pub fn s_max(j: i32, eps: f64) -> i32 {
    (eps * j as f64 + 1e-9).floor() as i32
}

/// Shell members whose cutoffs are live at `(λ, β)`, with the signed offsets
/// and the cutoff product.
fn live_terms(
    s: i32,
    lambda: f64,
    beta: f64,
    shell: &[ReducedRational],
) -> Result<Vec<(ReducedRational, f64, f64, f64)>, MultError> {
    let reach = 0.2 * 10f64.powi(-s);
    let mut out = Vec::new();
    for r in shell {
        let dl = torus_diff(lambda, r.lambda());
        if dl.abs() >= reach {
            continue;
        }
        let db = torus_diff(beta, r.beta());
        if db.abs() >= reach {
            continue;
        }
        let w = chi_s(s, dl)? * chi_s(s, db)?;
        if w != 0.0 {
            out.push((*r, dl, db, w));
        }
    }
    Ok(out)
}

/// `L_{j,s}(λ,β) = Σ_{R_s} S(A/Q,B/Q) H_j(λ−A/Q, β−B/Q) χ_s(λ−A/Q) χ_s(β−B/Q)`.
pub fn l_js(
    j: i32,
    s: i32,
    lambda: f64,
    beta: f64,
    shell: &[ReducedRational],
    tol: f64,
) -> Result<Complex64, MultError> {
    if s < 1 {
        return Err(MultError::Shell(s));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, dl, db, w) in live_terms(s, lambda, beta, shell)? {
        acc += gauss_sum(&r) * h_j(j, dl, db, tol)? * w;
    }
    Ok(acc)
}

/// `L_j = Σ_{1 ≤ s ≤ εj} L_{j,s}`.
pub fn l_j(j: i32, lambda: f64, beta: f64, eps: f64, tol: f64) -> Result<Complex64, MultError> {
    check_eps(eps)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for s in 1..=s_max(j, eps) {
        acc += l_js(j, s, lambda, beta, &enumerate_shell(s)?, tol)?;
    }
    Ok(acc)
}

/// `E_j = M_j − L_j`.
pub fn e_j(j: i32, lambda: f64, beta: f64, eps: f64, tol: f64) -> Result<Complex64, MultError> {
    check_eps(eps)?;
    check_j(j)?;
    Ok(m_j(j, lambda, beta)? - l_j(j, lambda, beta, eps, tol)?)
}

/// `L^s` truncated at `j_max`: `Σ_{R_s} S·(Σ_{j ≤ j_max, s ≤ εj} H_j)·χ_sχ_s`.
pub fn l_upper_s(
    s: i32,
    j_max: i32,
    lambda: f64,
    beta: f64,
    eps: f64,
    tol: f64,
) -> Result<Complex64, MultError> {
    check_eps(eps)?;
    if s < 1 {
        return Err(MultError::Shell(s));
    }
    let shell = enumerate_shell(s)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, dl, db, w) in live_terms(s, lambda, beta, &shell)? {
        let mut hs = Complex64::new(0.0, 0.0);
        for j in 0..=j_max {
            if s_max(j, eps) >= s {
                hs += h_j(j, dl, db, tol)?;
            }
        }
        acc += gauss_sum(&r) * hs * w;
    }
    Ok(acc)
}

/// `L_j` when every live term has `‖offset‖_j ≤ norm_cap`, else `None`.
fn l_j_capped(
    j: i32,
    lambda: f64,
    beta: f64,
    shells: &[Vec<ReducedRational>],
    tol: f64,
    norm_cap: f64,
) -> Result<Option<Complex64>, MultError> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, shell) in shells.iter().enumerate() {
        for (r, dl, db, w) in live_terms(i as i32 + 1, lambda, beta, shell)? {
            if osc_norm(j, dl, db) > norm_cap {
                return Ok(None);
            }
            acc += gauss_sum(&r) * h_j(j, dl, db, tol)? * w;
        }
    }
    Ok(Some(acc))
}

/// Sampled `(λ, β)` rectangle with values in row-major order (λ outer).
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyGrid {
    pub lambda_samples: Vec<f64>,
    pub beta_samples: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl FrequencyGrid {
    pub fn new(
        lambda_samples: Vec<f64>,
        beta_samples: Vec<f64>,
        values: Vec<Complex64>,
    ) -> Result<Self, MultError> {
        for (name, v) in [("lambda", &lambda_samples), ("beta", &beta_samples)] {
            if v.is_empty() {
                return Err(MultError::Grid(format!("{name} samples empty")));
            }
            if v.iter().any(|x| !(0.0..1.0).contains(x)) {
                return Err(MultError::Grid(format!("{name} samples must lie in [0,1)")));
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(MultError::Grid(format!("{name} samples must be strictly increasing")));
            }
        }
        if values.len() != lambda_samples.len() * beta_samples.len() {
            return Err(MultError::Grid("value count does not match the sample lists".into()));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MultError::Grid("non-finite value".into()));
        }
        Ok(Self { lambda_samples, beta_samples, values })
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.values[i * self.beta_samples.len() + k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    M,
    L,
    E,
}

/// `M_j`, `L_j` or `E_j` on a rectangle of samples.
pub fn sample_grid(
    field: Field,
    j: i32,
    eps: f64,
    lambdas: Vec<f64>,
    betas: Vec<f64>,
    tol: f64,
) -> Result<FrequencyGrid, MultError> {
    check_eps(eps)?;
    let mut values = Vec::with_capacity(lambdas.len() * betas.len());
    for &l in &lambdas {
        for &b in &betas {
            values.push(match field {
                Field::M => m_j(j, l, b)?,
                Field::L => l_j(j, l, b, eps, tol)?,
                Field::E => e_j(j, l, b, eps, tol)?,
            });
        }
    }
    FrequencyGrid::new(lambdas, betas, values)
}

/// Parameters of [`decay_report`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecayConfig {
    pub j_min: i32,
    pub j_max: i32,
    pub epsilon: f64,
    /// Side of the uniform λ×β grid.
    pub uniform: usize,
    /// Points per side of each box stratum, spanning four half-widths each way.
    pub strata_side: usize,
    /// Every box with `Q` up to this gets a stratum, whether or not `L_j` covers it.
    pub probe_qmax: u64,
    /// Random boxes of `𝔐_j` sampled per chosen denominator.
    pub boxes_per_q: usize,
    pub fd_points: usize,
    pub seed: u64,
    pub tol: f64,
    /// Approximant terms with `‖offset‖_j` above this are not evaluated; the
    /// point is counted as skipped.
    pub norm_cap: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            j_min: 8,
            j_max: 18,
            epsilon: 0.1,
            uniform: 512,
            strata_side: 9,
            probe_qmax: 3,
            boxes_per_q: 2,
            fd_points: 50,
            seed: 1,
            tol: 1e-13,
            norm_cap: 2e3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub j: i32,
    /// `sup |E_j|` over every evaluated sample.
    pub sup_abs_e: f64,
    pub argmax: (f64, f64),
    pub sup_abs_e_uniform: f64,
    pub sup_abs_e_strata: f64,
    /// `sup |M_j − S·H_j|` over the sampled points of `𝔐_j`.
    pub sup_major_error: f64,
    /// `sup |L_j|` over strata points outside `𝔐_j`.
    pub sup_l_off_major: f64,
    /// `max |∂_λ E_j| / 4^j` over the finite-difference points.
    pub dlambda_constant: f64,
    pub samples: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecaySlopes {
    pub sup_abs_e: Option<f64>,
    pub sup_abs_e_uniform: Option<f64>,
    pub major_error: Option<f64>,
    pub l_off_major: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayConstants {
    pub dlambda: f64,
    pub major_error_target_slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub epsilon: f64,
    pub j_range: (i32, i32),
    pub config: DecayConfig,
    pub rows: Vec<DecayRow>,
    pub slopes: DecaySlopes,
    pub constants: DecayConstants,
}

impl DecayReport {
    /// Slope of `log2 sup|E_j|` over the rows up to and including `idx`.
    pub fn slope_to_date(&self, idx: usize) -> Option<f64> {
        let r = &self.rows[..=idx];
        let x: Vec<f64> = r.iter().map(|r| r.j as f64).collect();
        let y: Vec<f64> = r.iter().map(|r| r.sup_abs_e).collect();
        log2_slope(&x, &y)
    }
}

struct Sup {
    v: f64,
    at: (f64, f64),
}

impl Sup {
    fn new() -> Self {
        Self { v: 0.0, at: (f64::NAN, f64::NAN) }
    }
    fn see(&mut self, v: f64, at: (f64, f64)) {
        if v > self.v {
            self.v = v;
            self.at = at;
        }
    }
}

fn random_box(q: u64, rng: &mut ChaCha8Rng) -> ReducedRational {
    loop {
        let a = rng.random_range(0..q);
        if a.gcd(&q) == 1 {
            let b = rng.random_range(0..q);
            return ReducedRational { q, a, b };
        }
    }
}

fn decay_row(cfg: &DecayConfig, j: i32) -> Result<DecayRow, MultError> {
    let eps = cfg.epsilon;
    let qmax = major_qmax(j, eps);
    let (wl, wb) = box_half_widths(j, eps);
    let shells: Vec<Vec<ReducedRational>> =
        (1..=s_max(j, eps)).map(enumerate_shell).collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(j as u64));
    let mut planner = FftPlanner::new();

    let mut all = Sup::new();
    let mut uni = Sup::new();
    let mut strata = Sup::new();
    let mut major_err: f64 = 0.0;
    let mut l_off: f64 = 0.0;
    let mut samples = 0usize;
    let mut skipped = 0usize;

    // Uniform grid at irrational offsets so no sample is a small-denominator rational.
    let n = cfg.uniform;
    let u0 = 0.5 * (5f64.sqrt() - 1.0);
    let u1 = 2f64.sqrt() - 1.0;
    for i in 0..n {
        let lambda = (i as f64 + u0) / n as f64;
        let row = m_j_row(j, lambda, u1 / n as f64, n, &mut planner)?;
        for (k, m) in row.iter().enumerate() {
            let beta = (k as f64 + u1) / n as f64;
            match l_j_capped(j, lambda, beta, &shells, cfg.tol, cfg.norm_cap)? {
                Some(l) => {
                    let v = (m - l).norm();
                    uni.see(v, (lambda, beta));
                    all.see(v, (lambda, beta));
                    samples += 1;
                }
                None => skipped += 1,
            }
        }
    }

    // Boxes of 𝔐_j sampled for the approximation error.
    let mut qs: Vec<u64> = [1, 2, 3, 5, qmax / 2, qmax].into_iter().filter(|&q| q >= 1 && q <= qmax).collect();
    qs.sort_unstable();
    qs.dedup();
    let mut sampled = Vec::new();
    for &q in &qs {
        for _ in 0..cfg.boxes_per_q {
            sampled.push(random_box(q, &mut rng));
        }
    }
    sampled.sort();
    sampled.dedup();
    for c in &sampled {
        let s = gauss_sum(c);
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for x in [-1.0, 0.0, 1.0] {
            for y in [-1.0, 0.0, 1.0] {
                pts.push((x, y));
            }
        }
        for _ in 0..2 {
            pts.push((rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
        for (x, y) in pts {
            let (dl, db) = (x * wl, y * wb);
            let m = m_j_near(j, c, dl, db)?;
            major_err = major_err.max((m - s * h_j(j, dl, db, cfg.tol)?).norm());
        }
    }

    // Strata: every box with Q ≤ probe_qmax, every approximant center, the sampled boxes.
    let mut centers = reduced_up_to(cfg.probe_qmax.min(qmax));
    centers.extend(shells.iter().flatten().copied());
    centers.extend(sampled.iter().copied());
    centers.sort();
    centers.dedup();
    let side = cfg.strata_side;
    for c in &centers {
        for a in 0..side {
            for b in 0..side {
                let x = -4.0 + 8.0 * a as f64 / (side - 1) as f64;
                let y = -4.0 + 8.0 * b as f64 / (side - 1) as f64;
                let lambda = (c.lambda() + x * wl).rem_euclid(1.0);
                let beta = (c.beta() + y * wb).rem_euclid(1.0);
                let Some(l) = l_j_capped(j, lambda, beta, &shells, cfg.tol, cfg.norm_cap)? else {
                    skipped += 1;
                    continue;
                };
                let v = (m_j(j, lambda, beta)? - l).norm();
                strata.see(v, (lambda, beta));
                all.see(v, (lambda, beta));
                samples += 1;
                if find_major_box(j, eps, lambda, beta, qmax)?.is_none() {
                    l_off = l_off.max(l.norm());
                }
            }
        }
    }

    // ∂_λ E_j by central differences at random points and around the approximant centers.
    let h = 1e-3 * 4f64.powi(-j);
    let mut fd_pts: Vec<(f64, f64)> =
        (0..cfg.fd_points).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    for c in shells.iter().flatten() {
        for _ in 0..5 {
            let x = rng.random_range(-4.0..4.0) * wl;
            let y = rng.random_range(-4.0..4.0) * wb;
            fd_pts.push(((c.lambda() + x).rem_euclid(1.0), (c.beta() + y).rem_euclid(1.0)));
        }
    }
    let mut dconst: f64 = 0.0;
    for (lambda, beta) in fd_pts {
        let up = l_j_capped(j, lambda + h, beta, &shells, cfg.tol, cfg.norm_cap)?;
        let dn = l_j_capped(j, lambda - h, beta, &shells, cfg.tol, cfg.norm_cap)?;
        let (Some(lu), Some(ld)) = (up, dn) else { continue };
        let eu = m_j(j, lambda + h, beta)? - lu;
        let ed = m_j(j, lambda - h, beta)? - ld;
        dconst = dconst.max(((eu - ed) / (2.0 * h)).norm() / 4f64.powi(j));
    }

    Ok(DecayRow {
        j,
        sup_abs_e: all.v,
        argmax: all.at,
        sup_abs_e_uniform: uni.v,
        sup_abs_e_strata: strata.v,
        sup_major_error: major_err,
        sup_l_off_major: l_off,
        dlambda_constant: dconst,
        samples,
        skipped,
    })
}

/// Per-`j` suprema of `|E_j|`, the major-arc error and `|L_j|` off the major arcs,
/// with least-squares slopes of their `log2` against `j`.
pub fn decay_report(cfg: &DecayConfig) -> Result<DecayReport, MultError> {
    if cfg.j_min > cfg.j_max {
        return Err(MultError::EmptyRange(cfg.j_min, cfg.j_max));
    }
    check_j(cfg.j_min)?;
    check_j(cfg.j_max)?;
    check_eps(cfg.epsilon)?;
    if cfg.strata_side < 9 {
        return Err(MultError::UnderResolved(cfg.strata_side));
    }
    if cfg.uniform == 0 {
        return Err(MultError::Grid("uniform grid side must be positive".into()));
    }
    let rows = (cfg.j_min..=cfg.j_max).map(|j| decay_row(cfg, j)).collect::<Result<Vec<_>, _>>()?;
    let js: Vec<f64> = rows.iter().map(|r| r.j as f64).collect();
    let col = |f: fn(&DecayRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let slopes = DecaySlopes {
        sup_abs_e: log2_slope(&js, &col(|r| r.sup_abs_e)),
        sup_abs_e_uniform: log2_slope(&js, &col(|r| r.sup_abs_e_uniform)),
        major_error: log2_slope(&js, &col(|r| r.sup_major_error)),
        l_off_major: {
            let live: Vec<&DecayRow> = rows.iter().filter(|r| r.sup_l_off_major > 0.0).collect();
            let x: Vec<f64> = live.iter().map(|r| r.j as f64).collect();
            let y: Vec<f64> = live.iter().map(|r| r.sup_l_off_major).collect();
            log2_slope(&x, &y)
        },
    };
    let constants = DecayConstants {
        dlambda: rows.iter().map(|r| r.dlambda_constant).fold(0.0, f64::max),
        major_error_target_slope: -(1.0 - 3.0 * cfg.epsilon) + 0.2,
    };
    Ok(DecayReport {
        epsilon: cfg.epsilon,
        j_range: (cfg.j_min, cfg.j_max),
        config: cfg.clone(),
        rows,
        slopes,
        constants,
    })
}
