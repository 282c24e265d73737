//! Reduced rationals `(A,B,Q)`, complete Gauss sums and major-box geometry.

use crate::phase::{torus_diff, unit_root, unit_roots};
use num_complex::Complex64;
use num_integer::Integer;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

/// Default cap on `2^s` for shell enumeration.
pub const SHELL_CAP: u64 = 1 << 16;
/// Exponent of the Gauss-sum decay check `|S|·Q^ν`.
pub const GAUSS_DECAY_NU: f64 = 0.45;
/// Frozen cap for `max |S|·Q^{0.45}`: twice the measured maximum `2^{0.45}` at `(1,1,2)`,
/// rounded up.
pub const GAUSS_DECAY_CAP: f64 = 2.75;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithError {
    #[error("shell index must be >= 1, got {0}")]
    ShellIndex(i32),
    #[error("shell s={s} exceeds the cap 2^s <= {cap}")]
    ShellCap { s: i32, cap: u64 },
    #[error("({a},{b},{q}) is not a reduced triple with 0 <= A,B < Q")]
    NotReduced { a: u64, b: u64, q: u64 },
    #[error("epsilon must lie in (0, 1/7), got {0}")]
    Epsilon(f64),
    #[error("denominator bound {0} is zero or too large")]
    Qmax(u64),
}

/// `(A, B, Q)` with `gcd(A,B,Q) = 1`, `0 ≤ A,B < Q`. Ordered by `Q`, then `A`, then `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ReducedRational {
    pub q: u64,
    pub a: u64,
    pub b: u64,
}

impl ReducedRational {
    pub fn new(a: u64, b: u64, q: u64) -> Result<Self, ArithError> {
        if q == 0 || a >= q || b >= q || a.gcd(&b).gcd(&q) != 1 {
            return Err(ArithError::NotReduced { a, b, q });
        }
        Ok(Self { q, a, b })
    }

    /// The `s` with `2^{s-1} ≤ Q < 2^s`.
    pub fn shell(&self) -> i32 {
        64 - self.q.leading_zeros() as i32
    }

    pub fn lambda(&self) -> f64 {
        self.a as f64 / self.q as f64
    }

    pub fn beta(&self) -> f64 {
        self.b as f64 / self.q as f64
    }
}

/// `R_s` with the default cap.
pub fn enumerate_shell(s: i32) -> Result<Vec<ReducedRational>, ArithError> {
    enumerate_shell_capped(s, SHELL_CAP)
}

pub fn enumerate_shell_capped(s: i32, cap: u64) -> Result<Vec<ReducedRational>, ArithError> {
    if s < 1 {
        return Err(ArithError::ShellIndex(s));
    }
    if s > 62 || (1u64 << s) > cap {
        return Err(ArithError::ShellCap { s, cap });
    }
    let lo = 1u64 << (s - 1);
    let hi = 1u64 << s;
    let mut out = Vec::new();
    for q in lo..hi {
        push_denominator(q, &mut out);
    }
    Ok(out)
}

/// All reduced triples with `Q ≤ qmax`, in lexicographic order.
pub fn reduced_up_to(qmax: u64) -> Vec<ReducedRational> {
    let mut out = Vec::new();
    for q in 1..=qmax {
        push_denominator(q, &mut out);
    }
    out
}

fn push_denominator(q: u64, out: &mut Vec<ReducedRational>) {
    for a in 0..q {
        let g = a.gcd(&q);
        for b in 0..q {
            if g == 1 || b.gcd(&g) == 1 {
                out.push(ReducedRational { q, a, b });
            }
        }
    }
}

/// `S = (1/Q) Σ_{r<Q} e((Ar² − Br)/Q)` by direct summation; the phase index
/// `Ar² − Br mod Q` is tracked exactly in integers.
pub fn gauss_sum(r: &ReducedRational) -> Complex64 {
    gauss_sum_raw(r.a, r.b, r.q)
}

/// Same sum without the reducedness requirement.
pub fn gauss_sum_raw(a: u64, b: u64, q: u64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for_each_phase_index(a, b, q, |d| acc += unit_root(d, q));
    acc / q as f64
}

/// Calls `f(d_r)` with `d_r = (A r² − B r) mod Q` for `r = 0..Q`.
#[inline]
fn for_each_phase_index(a: u64, b: u64, q: u64, mut f: impl FnMut(u64)) {
    let (a, b) = (a % q, b % q);
    // d_{r+1} − d_r = A(2r+1) − B
    let two_a = (2 * a) % q;
    let mut inc = (a + q - b) % q;
    let mut d = 0u64;
    for _ in 0..q {
        f(d);
        d += inc;
        if d >= q {
            d -= q;
        }
        inc += two_a;
        if inc >= q {
            inc -= q;
        }
    }
}

/// `S(A, B, Q)` for all `B` in `0..Q` at once, as one length-`Q` DFT of `e(Ar²/Q)`.
pub fn gauss_row(a: u64, q: u64, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let roots = unit_roots(q);
    let mut v: Vec<Complex64> = Vec::with_capacity(q as usize);
    for_each_phase_index(a, 0, q, |d| v.push(roots[d as usize]));
    planner.plan_fft_forward(q as usize).process(&mut v);
    let inv = 1.0 / q as f64;
    v.iter_mut().for_each(|z| *z *= inv);
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussDecayReport {
    pub qmax: u64,
    pub nu: f64,
    pub max_scaled: f64,
    pub argmax: ReducedRational,
    pub sums_evaluated: u64,
}

/// `max |S(A,B,Q)|·Q^ν` over all reduced triples with `Q ≤ qmax`.
///
/// Two exact reductions keep this to one or two sums per `(A, Q)`:
/// if `gcd(A,Q) = g > 1` then `S = 0` (the sum over `r` is invariant under
/// `r → r + Q/g`, which multiplies it by `e(−B/g) ≠ 1`); and for `gcd(A,Q) = 1`,
/// `r → r + c` shows `|S(A,B)| = |S(A, B − 2Ac)|`, so only `B mod gcd(2,Q)` matters.
pub fn gauss_decay_scan(qmax: u64, nu: f64) -> Result<GaussDecayReport, ArithError> {
    if qmax == 0 || qmax > SHELL_CAP {
        return Err(ArithError::Qmax(qmax));
    }
    let mut best = (-1.0, ReducedRational { q: 1, a: 0, b: 0 });
    let mut count = 0u64;
    for q in 1..=qmax {
        let roots = unit_roots(q);
        let scale = (q as f64).powf(nu);
        let bs: &[u64] = if q % 2 == 0 { &[0, 1] } else { &[0] };
        for a in 0..q {
            if a.gcd(&q) != 1 {
                continue;
            }
            for &b in bs {
                let mut acc = Complex64::new(0.0, 0.0);
                for_each_phase_index(a, b, q, |d| acc += roots[d as usize]);
                count += 1;
                let v = acc.norm() / q as f64 * scale;
                if v > best.0 {
                    best = (v, ReducedRational { q, a, b });
                }
            }
        }
    }
    Ok(GaussDecayReport { qmax, nu, max_scaled: best.0, argmax: best.1, sums_evaluated: count })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactLawReport {
    pub qmax: u64,
    /// `max ||S| − Q^{-1/2}|` over odd `Q ≤ qmax`, `gcd(A,Q) = 1`, all `B`.
    pub max_deviation: f64,
    pub argmax: ReducedRational,
    pub sums_evaluated: u64,
}

/// For odd `Q`, `|S(A,B,Q)| = Q^{-1/2}` whenever `gcd(A,Q) = 1`. Every `B` of a row
/// comes from one FFT.
pub fn gauss_exact_law(qmax: u64) -> Result<ExactLawReport, ArithError> {
    if qmax == 0 || qmax > SHELL_CAP {
        return Err(ArithError::Qmax(qmax));
    }
    let mut planner = FftPlanner::new();
    let mut best = (-1.0, ReducedRational { q: 1, a: 0, b: 0 });
    let mut count = 0u64;
    for q in (1..=qmax).step_by(2) {
        let want = 1.0 / (q as f64).sqrt();
        for a in 0..q {
            if a.gcd(&q) != 1 {
                continue;
            }
            for (b, z) in gauss_row(a, q, &mut planner).iter().enumerate() {
                count += 1;
                let dev = (z.norm() - want).abs();
                if dev > best.0 {
                    best = (dev, ReducedRational { q, a, b: b as u64 });
                }
            }
        }
    }
    Ok(ExactLawReport { qmax, max_deviation: best.0, argmax: best.1, sums_evaluated: count })
}

fn check_epsilon(eps: f64) -> Result<(), ArithError> {
    if eps > 0.0 && eps < 1.0 / 7.0 {
        Ok(())
    } else {
        Err(ArithError::Epsilon(eps))
    }
}

/// `|λ − A/Q| ≤ 2^{(ε−2)j}`, `|β − B/Q| ≤ 2^{(ε−1)j}` on the torus.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MajorBox {
    pub center: ReducedRational,
    pub j: i32,
    pub epsilon: f64,
    pub half_width_lambda: f64,
    pub half_width_beta: f64,
}

/// Half widths `(2^{(ε−2)j}, 2^{(ε−1)j})`.
pub fn box_half_widths(j: i32, eps: f64) -> (f64, f64) {
    let j = j as f64;
    (2f64.powf((eps - 2.0) * j), 2f64.powf((eps - 1.0) * j))
}

impl MajorBox {
    pub fn new(center: ReducedRational, j: i32, epsilon: f64) -> Result<Self, ArithError> {
        check_epsilon(epsilon)?;
        let (wl, wb) = box_half_widths(j, epsilon);
        Ok(Self { center, j, epsilon, half_width_lambda: wl, half_width_beta: wb })
    }

    pub fn contains(&self, lambda: f64, beta: f64) -> bool {
        torus_diff(lambda, self.center.lambda()).abs() <= self.half_width_lambda
            && torus_diff(beta, self.center.beta()).abs() <= self.half_width_beta
    }
}

pub fn in_major_box(
    j: i32,
    epsilon: f64,
    point: (f64, f64),
    center: &ReducedRational,
) -> Result<bool, ArithError> {
    Ok(MajorBox::new(*center, j, epsilon)?.contains(point.0, point.1))
}

/// `⌊2^{6εj}⌋`, the denominator bound of the major arcs `𝔐_j`.
pub fn major_qmax(j: i32, epsilon: f64) -> u64 {
    (2f64.powf(6.0 * epsilon * j as f64) + 1e-9).floor() as u64
}

/// The center (smallest `Q` first) of a box of `𝔐_j` containing `(λ, β)`, if any.
pub fn find_major_box(
    j: i32,
    epsilon: f64,
    lambda: f64,
    beta: f64,
    qmax: u64,
) -> Result<Option<ReducedRational>, ArithError> {
    check_epsilon(epsilon)?;
    let (wl, wb) = box_half_widths(j, epsilon);
    for q in 1..=qmax {
        let qf = q as f64;
        let a = (lambda * qf).round().rem_euclid(qf) as u64 % q;
        if torus_diff(lambda, a as f64 / qf).abs() > wl {
            continue;
        }
        let b = (beta * qf).round().rem_euclid(qf) as u64 % q;
        if torus_diff(beta, b as f64 / qf).abs() > wb {
            continue;
        }
        if a.gcd(&b).gcd(&q) == 1 {
            return Ok(Some(ReducedRational { q, a, b }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapReport {
    pub j: i32,
    pub epsilon: f64,
    pub qmax: u64,
    pub boxes: u64,
    pub overlapping_pairs: u64,
    pub witness: Option<(ReducedRational, ReducedRational)>,
}

/// Boxes sharing the λ-center `a/q`: triples `(a t, B, q t)` with `gcd(B, t) = 1`,
/// sorted by `β`.
fn beta_column(a: u64, q: u64, qmax: u64) -> Vec<(f64, ReducedRational)> {
    let mut v = Vec::new();
    for t in 1..=qmax / q {
        let big_q = q * t;
        for r in 0..t {
            if r.gcd(&t) != 1 {
                continue;
            }
            for c in 0..q {
                let b = r + t * c;
                v.push((b as f64 / big_q as f64, ReducedRational { q: big_q, a: a * t, b }));
            }
        }
    }
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    v
}

/// Pairs `i < k` of a sorted list of torus points at circular distance `≤ w`
/// (`w < 1/2`), with one witness.
fn close_pairs_circular(v: &[(f64, ReducedRational)], w: f64) -> (u64, Option<(usize, usize)>) {
    let n = v.len();
    let mut count = 0u64;
    let mut witness = None;
    let mut hi = 0usize;
    for i in 0..n {
        if hi < i + 1 {
            hi = i + 1;
        }
        while hi < n && v[hi].0 - v[i].0 <= w {
            hi += 1;
        }
        let direct = hi - i - 1;
        if direct > 0 && witness.is_none() {
            witness = Some((i, i + 1));
        }
        count += direct as u64;
        // Wrapped pairs (k < i) with v[k] + 1 − v[i] ≤ w.
        let lim = v[i].0 + w - 1.0;
        if lim >= v[0].0 {
            let wrapped = v[..i].partition_point(|p| p.0 <= lim);
            if wrapped > 0 && witness.is_none() {
                witness = Some((0, i));
            }
            count += wrapped as u64;
        }
    }
    (count, witness)
}

/// Exact count of intersecting pairs among all boxes of `𝔐_j` with `Q ≤ qmax`.
///
/// Boxes are grouped by their λ-center `a/q`; within a group pairs are found by a
/// sorted sweep over β, across groups only λ-centers within `2·2^{(ε−2)j}` of each
/// other are compared.
pub fn major_box_overlaps(j: i32, epsilon: f64, qmax: u64) -> Result<OverlapReport, ArithError> {
    check_epsilon(epsilon)?;
    if qmax == 0 || qmax > SHELL_CAP {
        return Err(ArithError::Qmax(qmax));
    }
    let (wl, wb) = box_half_widths(j, epsilon);
    let mut centers: Vec<(f64, u64, u64)> = Vec::new();
    for q in 1..=qmax {
        for a in 0..q {
            if a.gcd(&q) == 1 {
                centers.push((a as f64 / q as f64, a, q));
            }
        }
    }
    centers.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut boxes = 0u64;
    let mut pairs = 0u64;
    let mut witness = None;
    for &(_, a, q) in &centers {
        let col = beta_column(a, q, qmax);
        boxes += col.len() as u64;
        let (c, w) = close_pairs_circular(&col, 2.0 * wb);
        pairs += c;
        if witness.is_none() {
            witness = w.map(|(x, y)| (col[x].1, col[y].1));
        }
    }

    // Distinct λ-centers closer than 2·wl (circularly).
    let n = centers.len();
    for i in 0..n {
        for step in 1..n {
            let k = (i + step) % n;
            let mut d = centers[k].0 - centers[i].0;
            if d < 0.0 {
                d += 1.0;
            }
            if d > 2.0 * wl {
                break;
            }
            let x = beta_column(centers[i].1, centers[i].2, qmax);
            let y = beta_column(centers[k].1, centers[k].2, qmax);
            for p in &x {
                for r in &y {
                    if torus_diff(p.0, r.0).abs() <= 2.0 * wb {
                        pairs += 1;
                        if witness.is_none() {
                            witness = Some((p.1, r.1));
                        }
                    }
                }
            }
        }
    }
    Ok(OverlapReport { j, epsilon, qmax, boxes, overlapping_pairs: pairs, witness })
}
