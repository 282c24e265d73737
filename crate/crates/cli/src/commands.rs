//! One function per subcommand. Each returns its artifacts and checks; nothing is
//! written until the whole computation has finished.

use crate::config::RunConfig;
use crate::{Command, FieldArg, SetArgs};
use anyhow::{anyhow, bail, Context, Result};
use carleson_lab::arithmetic::{
    enumerate_shell, gauss_decay_scan, gauss_exact_law, gauss_sum_raw, GAUSS_DECAY_CAP, GAUSS_DECAY_NU,
};
use carleson_lab::lambda_sets::{cantor_scales, cover, dimension_estimate, verify_certificate, LambdaSet, Provenance};
use carleson_lab::multiplier::{decay_report, sample_grid, DecayConfig, Field, DLAMBDA_CAP};
use carleson_lab::operators::torus::{
    bourgain_growth, oscillatory_growth, single_l_sweep, BourgainConfig, OscillatoryConfig, SingleLConfig,
};
use carleson_lab::operators::{carleson_max_set, norm_probe, NormProbeConfig, Signal};
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;

/// Largest `Q` whose Gauss sums are listed row by row in the CSV.
pub const GAUSS_CSV_QMAX: u64 = 128;
/// Largest `Q` for the exact-law check `|S| = Q^{-1/2}` (odd `Q`).
pub const EXACT_LAW_QMAX: u64 = 999;
/// Slope thresholds for `approx-error`.
pub const E_SLOPE_MAX: f64 = -0.05;
/// Largest allowed growth of the norm-probe ratio per doubling at the top sizes.
pub const NORM_GROWTH_MAX: f64 = 1.10;
pub const SINGLE_L_SLOPE_MAX: f64 = -0.1;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub metric: String,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

fn at_most(metric: &str, value: f64, max: f64) -> Check {
    Check { metric: metric.into(), value, threshold: format!("<= {max:?}"), pass: value <= max }
}

pub struct Outcome {
    pub checks: Vec<Check>,
}

struct Artifacts {
    result: Value,
    checks: Vec<Check>,
    csv: Option<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    config: &'a RunConfig,
    args: &'a Command,
    result: &'a Value,
    checks: &'a [Check],
}

fn stem(cmd: &str) -> String {
    cmd.replace('-', "_")
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    let art = match cmd {
        Command::Gauss => gauss(cfg)?,
        Command::Shell { s } => shell(*s)?,
        Command::MultiplierSample { j, field } => multiplier_sample(cfg, *j, *field)?,
        Command::ApproxError => approx_error(cfg)?,
        Command::Cantor { d, depth } => cantor(*d, *depth)?,
        Command::Cover { set, t_exp, t } => cover_cmd(set, *t_exp, *t)?,
        Command::Maximal { set, signal, length } => maximal(cfg, set, signal.as_deref(), *length)?,
        Command::NormProbe { set, lengths, radius_factor } => norm(cfg, set, lengths.clone(), *radius_factor)?,
        Command::BourgainGrowth { ns, per_octave } => bourgain(cfg, ns.clone(), *per_octave)?,
        Command::OscillatoryGrowth { ns, octaves, per_octave } => oscillatory(cfg, ns.clone(), *octaves, *per_octave)?,
        Command::SingleL { ls, per_octave } => single_l(cfg, ls.clone(), *per_octave)?,
    };
    let report = Report { command: &cfg.command, config: cfg, args: cmd, result: &art.result, checks: &art.checks };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &cfg.output {
        Some(dir) => {
            let base = stem(&cfg.command);
            let path = dir.join(format!("{base}.json"));
            std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            if let Some(csv) = &art.csv {
                let path = dir.join(format!("{base}.csv"));
                std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        None => print!("{text}"),
    }
    Ok(Outcome { checks: art.checks })
}

fn load_set(set: &SetArgs, default: Option<(u32, u32)>) -> Result<LambdaSet> {
    match (&set.cantor, &set.lambda_file) {
        (Some(v), _) => Ok(LambdaSet::cantor(v[0], v[1])?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(LambdaSet::from_json(&text)?)
        }
        (None, None) => match default {
            Some((d, depth)) => Ok(LambdaSet::cantor(d, depth)?),
            None => bail!("give --cantor D DEPTH or --lambda-file PATH"),
        },
    }
}

fn gauss(cfg: &RunConfig) -> Result<Artifacts> {
    let decay = gauss_decay_scan(cfg.qmax, GAUSS_DECAY_NU)?;
    let exact = gauss_exact_law(cfg.qmax.min(EXACT_LAW_QMAX))?;
    let mut csv = String::from("A,B,Q,re,im,abs_S\n");
    for q in 1..=cfg.qmax.min(GAUSS_CSV_QMAX) {
        for a in 0..q {
            for b in 0..q {
                if a.gcd(&b).gcd(&q) != 1 {
                    continue;
                }
                let s = gauss_sum_raw(a, b, q);
                writeln!(csv, "{a},{b},{q},{},{},{}", s.re, s.im, s.norm())?;
            }
        }
    }
    let checks = vec![
        at_most("exact_law_max_deviation", exact.max_deviation, 1e-12),
        at_most("decay_max_scaled", decay.max_scaled, GAUSS_DECAY_CAP),
    ];
    let result = json!({
        "csv_qmax": cfg.qmax.min(GAUSS_CSV_QMAX),
        "exact_law": exact,
        "decay": decay,
    });
    Ok(Artifacts { result, checks, csv: Some(csv) })
}

fn shell(s: i32) -> Result<Artifacts> {
    let triples = enumerate_shell(s)?;
    let mut csv = String::from("A,B,Q,lambda,beta\n");
    for r in &triples {
        writeln!(csv, "{},{},{},{},{}", r.a, r.b, r.q, r.lambda(), r.beta())?;
    }
    Ok(Artifacts { result: json!({ "s": s, "count": triples.len() }), checks: vec![], csv: Some(csv) })
}

fn multiplier_sample(cfg: &RunConfig, j: i32, field: FieldArg) -> Result<Artifacts> {
    let n = cfg.grid;
    let pts: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let field = match field {
        FieldArg::M => Field::M,
        FieldArg::L => Field::L,
        FieldArg::E => Field::E,
    };
    let g = sample_grid(field, j, cfg.epsilon, pts.clone(), pts, cfg.tol)?;
    let mut csv = String::from("lambda,beta,re,im,abs\n");
    let mut sup = (0.0f64, (0.0, 0.0));
    for (i, &l) in g.lambda_samples.iter().enumerate() {
        for (k, &b) in g.beta_samples.iter().enumerate() {
            let z = g.get(i, k);
            writeln!(csv, "{l},{b},{},{},{}", z.re, z.im, z.norm())?;
            if z.norm() > sup.0 {
                sup = (z.norm(), (l, b));
            }
        }
    }
    let result = json!({ "j": j, "field": field, "samples": g.values.len(), "sup_abs": sup.0, "argmax": sup.1 });
    Ok(Artifacts { result, checks: vec![], csv: Some(csv) })
}

fn approx_error(cfg: &RunConfig) -> Result<Artifacts> {
    let dc = DecayConfig {
        j_min: cfg.jmin,
        j_max: cfg.jmax,
        epsilon: cfg.epsilon,
        uniform: cfg.grid,
        seed: cfg.seed,
        tol: cfg.tol,
        ..DecayConfig::default()
    };
    let rep = decay_report(&dc)?;
    let mut csv = String::from("j,sup_abs_e,sup_abs_e_uniform,sup_major_error,sup_l_off_major,dlambda_constant,samples,skipped\n");
    for r in &rep.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.j, r.sup_abs_e, r.sup_abs_e_uniform, r.sup_major_error, r.sup_l_off_major, r.dlambda_constant, r.samples, r.skipped
        )?;
    }
    let slope = |s: Option<f64>| s.unwrap_or(f64::NAN);
    let mut checks = vec![];
    if rep.rows.len() >= 2 {
        checks.push(at_most("major_error_slope", slope(rep.slopes.major_error), rep.constants.major_error_target_slope));
        checks.push(at_most("sup_abs_e_slope", slope(rep.slopes.sup_abs_e), E_SLOPE_MAX));
    }
    checks.push(at_most("dlambda_constant", rep.constants.dlambda, DLAMBDA_CAP));
    Ok(Artifacts { result: serde_json::to_value(&rep)?, checks, csv: Some(csv) })
}

fn cantor(d: u32, depth: u32) -> Result<Artifacts> {
    let set = LambdaSet::cantor(d, depth)?;
    let points: Value = serde_json::from_str(&set.to_json())?;
    let dim = dimension_estimate(&set, &cantor_scales(d, 0..=depth)).ok();
    let result = json!({ "d": d, "depth": depth, "count": set.len(), "points": points, "dimension": dim });
    Ok(Artifacts { result, checks: vec![], csv: None })
}

fn cover_cmd(set: &SetArgs, t_exp: Option<i32>, t: Option<f64>) -> Result<Artifacts> {
    let set = load_set(set, None)?;
    let t = match (t_exp, t) {
        (Some(e), _) => 2f64.powi(-e),
        (None, Some(t)) => t,
        (None, None) => bail!("give --t-exp E or --t T"),
    };
    let cert = cover(&set, t)?;
    let verified = verify_certificate(&set, &cert);
    let mut checks = vec![Check {
        metric: "certificate_verified".into(),
        value: if verified.is_ok() { 1.0 } else { 0.0 },
        threshold: "== 1".into(),
        pass: verified.is_ok(),
    }];
    if let Provenance::Cantor { d, .. } = set.provenance {
        let qmax = cert.max_denominator().to_f64().unwrap_or(f64::INFINITY);
        checks.push(at_most("max_denominator", qmax, 2.0 * cert.t.powf(-1.0 / d as f64)));
    }
    let mut result: Value = serde_json::from_str(&cert.to_json())?;
    if let Err(e) = verified {
        result["verification_error"] = json!(e.to_string());
    }
    Ok(Artifacts { result, checks, csv: None })
}

fn gaussian_signal(seed: u64, len: usize) -> Result<Signal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..len)
        .map(|_| {
            num_complex::Complex64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        })
        .collect();
    Ok(Signal::new(0, samples)?)
}

fn maximal(cfg: &RunConfig, set: &SetArgs, signal: Option<&std::path::Path>, length: Option<usize>) -> Result<Artifacts> {
    let set = load_set(set, Some((3, 4)))?;
    let f = match signal {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Signal::from_json(&text).map_err(|e| anyhow!("{}: {e}", p.display()))?
        }
        None => gaussian_signal(cfg.seed, length.unwrap_or(256))?,
    };
    let radius = cfg.radius.unwrap_or(4 * f.len());
    let out = carleson_max_set(&f, &set, radius)?;
    let mut csv = String::from("n,value\n");
    for (i, v) in out.samples.iter().enumerate() {
        writeln!(csv, "{},{v}", out.origin + i as i64)?;
    }
    let result = json!({
        "radius": radius,
        "signal_length": f.len(),
        "lambdas": set.len(),
        "l2_ratio": out.norm2() / f.norm2(),
        "output": out,
    });
    Ok(Artifacts { result, checks: vec![], csv: Some(csv) })
}

fn norm(cfg: &RunConfig, set: &SetArgs, lengths: Option<Vec<usize>>, radius_factor: usize) -> Result<Artifacts> {
    let set = load_set(set, Some((3, 5)))?;
    let pc = NormProbeConfig {
        lengths: lengths.unwrap_or_else(|| NormProbeConfig::default().lengths),
        trials: cfg.trials,
        seed: cfg.seed,
        radius_factor,
    };
    let rep = norm_probe(set.values(), &pc)?;
    let mut csv = String::from("length,radius,max_ratio,gaussian_max,impulse,chirp_max\n");
    for r in &rep.rows {
        writeln!(csv, "{},{},{},{},{},{}", r.length, r.radius, r.max_ratio, r.gaussian_max, r.impulse, r.chirp_max)?;
    }
    let checks = match rep.growth.last() {
        Some(&g) => vec![at_most("top_growth_per_doubling", g, NORM_GROWTH_MAX)],
        None => vec![],
    };
    Ok(Artifacts { result: serde_json::to_value(&rep)?, checks, csv: Some(csv) })
}

fn bourgain(cfg: &RunConfig, ns: Option<Vec<usize>>, per_octave: u32) -> Result<Artifacts> {
    let bc = BourgainConfig {
        ns: ns.unwrap_or_else(|| BourgainConfig::default().ns),
        trials: cfg.trials,
        grid: cfg.grid,
        per_octave,
        seed: cfg.seed,
    };
    let rep = bourgain_growth(&bc)?;
    let ok = rep.non_increasing_from(8, 0.0);
    let checks = vec![Check {
        metric: "ratio_over_log2N_non_increasing_from_8".into(),
        value: if ok { 1.0 } else { 0.0 },
        threshold: "== 1".into(),
        pass: ok,
    }];
    Ok(Artifacts { result: serde_json::to_value(&rep)?, checks, csv: Some(rep.to_csv()) })
}

fn oscillatory(cfg: &RunConfig, ns: Option<Vec<usize>>, octaves: u32, per_octave: u32) -> Result<Artifacts> {
    let oc = OscillatoryConfig {
        ns: ns.unwrap_or_else(|| OscillatoryConfig::default().ns),
        trials: cfg.trials,
        grid_factor: cfg.grid,
        octaves,
        per_octave,
        seed: cfg.seed,
        tol: cfg.tol,
        ..OscillatoryConfig::default()
    };
    let rep = oscillatory_growth(&oc)?;
    Ok(Artifacts { result: serde_json::to_value(&rep)?, checks: vec![], csv: Some(rep.to_csv()) })
}

fn single_l(cfg: &RunConfig, ls: Option<Vec<i32>>, per_octave: u32) -> Result<Artifacts> {
    let sc = SingleLConfig {
        ls: ls.unwrap_or_else(|| SingleLConfig::default().ls),
        trials: cfg.trials,
        per_octave,
        seed: cfg.seed,
    };
    let rep = single_l_sweep(&sc)?;
    let mut csv = String::from("l,k,grid,lambdas,ratio,white_noise_ratio\n");
    for r in &rep.rows {
        writeln!(csv, "{},{},{},{},{},{}", r.l, r.k, r.grid, r.lambdas, r.ratio, r.white_noise_ratio)?;
    }
    let checks = match rep.slope {
        Some(s) if rep.rows.len() >= 2 => vec![at_most("log2_ratio_slope", s, SINGLE_L_SLOPE_MAX)],
        _ => vec![],
    };
    Ok(Artifacts { result: serde_json::to_value(&rep)?, checks, csv: Some(csv) })
}
