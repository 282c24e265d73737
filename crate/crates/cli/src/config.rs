//! Run configuration: per-command defaults, an optional JSON file, then flags.

use carleson_lab::oscillatory::{TOL_MAX, TOL_MIN};
use carleson_lab::multiplier::J_CAP;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Settings shared by every command. `None` means "not given at this layer".
#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub qmax: Option<u64>,
    pub jmin: Option<i32>,
    pub jmax: Option<i32>,
    pub grid: Option<usize>,
    pub radius: Option<usize>,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Overrides {
    fn layer(self, top: Overrides) -> Overrides {
        Overrides {
            epsilon: top.epsilon.or(self.epsilon),
            seed: top.seed.or(self.seed),
            tol: top.tol.or(self.tol),
            qmax: top.qmax.or(self.qmax),
            jmin: top.jmin.or(self.jmin),
            jmax: top.jmax.or(self.jmax),
            grid: top.grid.or(self.grid),
            radius: top.radius.or(self.radius),
            trials: top.trials.or(self.trials),
            output: top.output.or(self.output),
        }
    }
}

/// Fully resolved settings, embedded in every report. The output directory is
/// left out so that artifacts do not depend on where they are written.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub epsilon: f64,
    pub seed: u64,
    pub tol: f64,
    pub qmax: u64,
    pub jmin: i32,
    pub jmax: i32,
    pub grid: usize,
    pub radius: Option<usize>,
    pub trials: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

/// The defaults table.
///
/// | field   | default | notes |
/// |---------|---------|-------|
/// | epsilon | 0.1     | |
/// | seed    | 1       | |
/// | tol     | 1e-10   | 1e-13 for `approx-error` |
/// | qmax    | 64      | `gauss` |
/// | jmin    | 8       | |
/// | jmax    | 18      | |
/// | grid    | 64      | 512 for `approx-error`, 2^14 for `bourgain-growth`, 64 (= G/N) for `oscillatory-growth` |
/// | radius  | none    | `maximal`: 4·length |
/// | trials  | 200     | 100 `bourgain-growth`, 8 `oscillatory-growth`, 12 `single-l` |
pub fn defaults(command: &str) -> Overrides {
    let mut d = Overrides {
        epsilon: Some(0.1),
        seed: Some(1),
        tol: Some(1e-10),
        qmax: Some(64),
        jmin: Some(8),
        jmax: Some(18),
        grid: Some(64),
        radius: None,
        trials: Some(200),
        output: None,
    };
    match command {
        "approx-error" => {
            d.tol = Some(1e-13);
            d.grid = Some(512);
        }
        "bourgain-growth" => {
            d.grid = Some(1 << 14);
            d.trials = Some(100);
        }
        "oscillatory-growth" => d.trials = Some(8),
        "single-l" => d.trials = Some(12),
        _ => {}
    }
    d
}

pub fn load_file(path: &Path) -> Result<Overrides, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
}

/// `defaults < file < flags`, then validation.
pub fn resolve(command: &str, file: Option<Overrides>, flags: Overrides) -> Result<RunConfig, String> {
    let o = defaults(command).layer(file.unwrap_or_default()).layer(flags);
    let cfg = RunConfig {
        command: command.to_string(),
        epsilon: o.epsilon.unwrap_or_default(),
        seed: o.seed.unwrap_or_default(),
        tol: o.tol.unwrap_or_default(),
        qmax: o.qmax.unwrap_or_default(),
        jmin: o.jmin.unwrap_or_default(),
        jmax: o.jmax.unwrap_or_default(),
        grid: o.grid.unwrap_or_default(),
        radius: o.radius,
        trials: o.trials.unwrap_or_default(),
        output: o.output,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(c: &RunConfig) -> Result<(), String> {
    if !(c.epsilon > 0.0 && c.epsilon < 1.0 / 7.0) {
        return Err(format!("field `epsilon`: must lie in (0, 1/7), got {}", c.epsilon));
    }
    if !(TOL_MIN..=TOL_MAX).contains(&c.tol) {
        return Err(format!("field `tol`: must lie in [{TOL_MIN:e}, {TOL_MAX:e}], got {:e}", c.tol));
    }
    if c.qmax == 0 {
        return Err("field `qmax`: must be positive".into());
    }
    if c.grid == 0 {
        return Err("field `grid`: must be positive".into());
    }
    if c.radius == Some(0) {
        return Err("field `radius`: must be positive".into());
    }
    if c.trials == 0 {
        return Err("field `trials`: must be positive".into());
    }
    if c.jmin < 0 || c.jmax > J_CAP || c.jmin > c.jmax {
        return Err(format!("fields `jmin`/`jmax`: need 0 <= jmin <= jmax <= {J_CAP}, got {}..{}", c.jmin, c.jmax));
    }
    Ok(())
}

/// Worker count from `CARLESON_THREADS`. It only ever affects speed.
pub fn threads_from_env() -> Result<usize, String> {
    match std::env::var("CARLESON_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("CARLESON_THREADS: expected a positive integer, got {v:?}")),
        },
    }
}
