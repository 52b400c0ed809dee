//! `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment. Unknown keys are rejected and
//! every problem in a document is reported at once.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use syk_sre::domain::{GridPolicy, ModelParams};
use syk_sre::sweep_driver::SeedStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ed,
    Thermal,
    Sre,
    Sweep,
    Check,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Ed => "ed",
            Mode::Thermal => "thermal",
            Mode::Sre => "sre",
            Mode::Sweep => "sweep",
            Mode::Check => "check",
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ed" => Ok(Mode::Ed),
            "thermal" => Ok(Mode::Thermal),
            "sre" => Ok(Mode::Sre),
            "sweep" => Ok(Mode::Sweep),
            "check" => Ok(Mode::Check),
            _ => Err(format!("unknown mode '{s}' (expected ed, thermal, sre, sweep or check)")),
        }
    }
}

/// Which SRE seeds to run in `sre` mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitChoice {
    Disconnected,
    Connected,
    Both,
}

impl InitChoice {
    fn as_str(&self) -> &'static str {
        match self {
            InitChoice::Disconnected => "disconnected",
            InitChoice::Connected => "connected",
            InitChoice::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// `beta` holds the first entry of `beta_grid`.
    pub params: ModelParams,
    pub grid: Option<GridPolicy>,
    pub beta_grid: Vec<f64>,
    pub init: InitChoice,
    pub seeds: SeedStrategy,
    pub n_samples: usize,
    pub rng_seed: u64,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damping: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults used by `check` when no config file is given.
    pub fn check_default() -> Self {
        Self {
            mode: Mode::Check,
            params: ModelParams::new(1, 1.0, 0.0, 0.0),
            grid: None,
            beta_grid: Vec::new(),
            init: InitChoice::Both,
            seeds: SeedStrategy::Continuation,
            n_samples: 0,
            rng_seed: 0,
            tol: None,
            max_iter: None,
            damping: None,
            output_dir: None,
        }
    }

    /// Canonical text form; `parse_config(&c.to_text()) == Ok(c)`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("mode", self.mode.as_str().into());
        put("n", self.params.n_per_side.to_string());
        put("j", format!("{:?}", self.params.coupling_j));
        put("mu", format!("{:?}", self.params.hopping_mu));
        match self.beta_grid.len() {
            0 => {}
            1 => put("beta", format!("{:?}", self.beta_grid[0])),
            _ => put("betas", self.beta_grid.iter().map(|b| format!("{b:?}")).collect::<Vec<_>>().join(", ")),
        }
        match self.grid {
            Some(GridPolicy::FixedSlices(m)) => put("slices_m", m.to_string()),
            Some(GridPolicy::MaxDtau { dtau, min_slices }) => {
                put("dtau", format!("{dtau:?}"));
                put("min_slices", min_slices.to_string());
            }
            None => {}
        }
        put("init", self.init.as_str().into());
        put(
            "seeds",
            match self.seeds {
                SeedStrategy::Continuation => "continuation",
                SeedStrategy::ColdStart => "cold",
            }
            .into(),
        );
        if self.mode == Mode::Ed {
            put("samples", self.n_samples.to_string());
        }
        put("seed", self.rng_seed.to_string());
        if let Some(t) = self.tol {
            put("tol", format!("{t:?}"));
        }
        if let Some(m) = self.max_iter {
            put("max_iter", m.to_string());
        }
        if let Some(d) = self.damping {
            put("damping", format!("{d:?}"));
        }
        if let Some(o) = &self.output_dir {
            put("output_dir", o.display().to_string());
        }
        out
    }
}

/// All problems found in one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub errors: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} config error(s):", self.errors.len())?;
        for e in &self.errors {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "n",
    "j",
    "mu",
    "beta",
    "betas",
    "slices_m",
    "dtau",
    "min_slices",
    "init",
    "seeds",
    "samples",
    "seed",
    "tol",
    "max_iter",
    "damping",
    "output_dir",
];

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cur = row[j + 1];
            row[j + 1] = if ca == *cb { prev } else { 1 + prev.min(cur).min(row[j]) };
            prev = cur;
        }
    }
    row[b.len()]
}

fn suggestion(key: &str) -> String {
    KNOWN_KEYS
        .iter()
        .map(|k| (edit_distance(key, k), k))
        .filter(|(d, _)| *d <= 2)
        .min()
        .map(|(_, k)| format!(" (did you mean '{k}'?)"))
        .unwrap_or_default()
}

struct Fields {
    map: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
}

impl Fields {
    fn take<T: FromStr>(&mut self, key: &str) -> Option<T> {
        let (line, raw) = self.map.remove(key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!("line {line}: key '{key}': cannot parse '{raw}'"));
                None
            }
        }
    }

    fn take_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let (line, raw) = self.map.remove(key)?;
        let mut out = Vec::new();
        for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.errors.push(format!("line {line}: key '{key}': cannot parse '{part}'"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }
}

/// Every β whose double lies inside the grid range must have that double in
/// the grid, so `S₂ = S_{2β} − 2S_β` is assembled from grid points only.
pub fn check_doubling(betas: &[f64]) -> Result<(), String> {
    let Some(&top) = betas.last() else { return Ok(()) };
    let tol = 1e-9 * top.max(1.0);
    let missing: Vec<String> = betas
        .iter()
        .filter(|&&b| b > 0.0 && 2.0 * b <= top + tol)
        .filter(|&&b| !betas.iter().any(|&c| (c - 2.0 * b).abs() <= tol))
        .map(|b| format!("{b}"))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(format!(
            "beta grid violates the doubling policy: 2*beta missing for beta = {} (every beta with 2*beta <= max must have its 2*beta partner)",
            missing.join(", ")
        ))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut fields = Fields { map: BTreeMap::new(), errors: Vec::new() };
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            fields.errors.push(format!("line {lineno}: expected 'key = value', got '{body}'"));
            continue;
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if !KNOWN_KEYS.contains(&k.as_str()) {
            fields.errors.push(format!("line {lineno}: unknown key '{k}'{}", suggestion(&k)));
            continue;
        }
        if fields.map.insert(k.clone(), (lineno, v)).is_some() {
            fields.errors.push(format!("line {lineno}: duplicate key '{k}'"));
        }
    }

    let mode = match fields.map.remove("mode") {
        Some((line, raw)) => match raw.parse::<Mode>() {
            Ok(m) => Some(m),
            Err(e) => {
                fields.errors.push(format!("line {line}: {e}"));
                None
            }
        },
        None => {
            fields.errors.push("missing required key 'mode'".into());
            None
        }
    };

    let required: &[&str] = match mode {
        Some(Mode::Ed) => &["n", "j", "mu", "beta|betas", "samples", "seed"],
        Some(Mode::Thermal) | Some(Mode::Sre) => &["j", "mu", "beta|betas", "slices_m|dtau"],
        Some(Mode::Sweep) => &["j", "mu", "betas", "slices_m|dtau"],
        Some(Mode::Check) | None => &[],
    };
    for r in required {
        if !r.split('|').any(|k| fields.has(k)) {
            let shown = r.replace('|', "' or '");
            fields.errors.push(format!("missing required key '{shown}' for mode {}", mode.unwrap().as_str()));
        }
    }

    let n = fields.take::<usize>("n").unwrap_or(1);
    let j = fields.take::<f64>("j").unwrap_or(1.0);
    let mu = fields.take::<f64>("mu").unwrap_or(0.0);
    let single = fields.take::<f64>("beta");
    let list = fields.take_list("betas");
    let beta_grid = match (single, list) {
        (Some(_), Some(_)) => {
            fields.errors.push("give either 'beta' or 'betas', not both".into());
            Vec::new()
        }
        (Some(b), None) => vec![b],
        (None, Some(l)) => l,
        (None, None) => Vec::new(),
    };
    if beta_grid.iter().any(|b| !b.is_finite() || *b < 0.0) {
        fields.errors.push("beta values must be finite and non-negative".into());
    } else if beta_grid.windows(2).any(|w| w[0] >= w[1]) {
        fields.errors.push("'betas' must be strictly increasing".into());
    }
    if mode == Some(Mode::Sweep) && fields.errors.is_empty() && beta_grid.len() < 2 {
        fields.errors.push("sweep mode needs at least two entries in 'betas'".into());
    }
    if matches!(mode, Some(Mode::Sre) | Some(Mode::Sweep)) && beta_grid.len() > 1 {
        if let Err(e) = check_doubling(&beta_grid) {
            fields.errors.push(e);
        }
    }

    let slices = fields.take::<usize>("slices_m");
    let dtau = fields.take::<f64>("dtau");
    let min_slices = fields.take::<usize>("min_slices");
    let grid = match (slices, dtau) {
        (Some(_), Some(_)) => {
            fields.errors.push("give either 'slices_m' or 'dtau', not both".into());
            None
        }
        (Some(m), None) => {
            if m == 0 || m % 2 == 1 {
                fields.errors.push(format!("'slices_m' must be even and positive, got {m}"));
            }
            Some(GridPolicy::FixedSlices(m))
        }
        (None, Some(d)) => {
            if !(d.is_finite() && d > 0.0) {
                fields.errors.push(format!("'dtau' must be positive, got {d}"));
            }
            Some(GridPolicy::MaxDtau { dtau: d, min_slices: min_slices.unwrap_or(16) })
        }
        (None, None) => {
            if min_slices.is_some() {
                fields.errors.push("'min_slices' requires 'dtau'".into());
            }
            None
        }
    };

    let init = match fields.map.remove("init") {
        None => InitChoice::Both,
        Some((line, raw)) => match raw.as_str() {
            "disconnected" => InitChoice::Disconnected,
            "connected" => InitChoice::Connected,
            "both" => InitChoice::Both,
            _ => {
                fields.errors.push(format!("line {line}: 'init' must be disconnected, connected or both"));
                InitChoice::Both
            }
        },
    };
    let seeds = match fields.map.remove("seeds") {
        None => SeedStrategy::Continuation,
        Some((line, raw)) => match raw.as_str() {
            "continuation" => SeedStrategy::Continuation,
            "cold" => SeedStrategy::ColdStart,
            _ => {
                fields.errors.push(format!("line {line}: 'seeds' must be continuation or cold"));
                SeedStrategy::Continuation
            }
        },
    };
    let n_samples = fields.take::<usize>("samples").unwrap_or(0);
    if mode == Some(Mode::Ed) && fields.errors.is_empty() && n_samples < 2 {
        fields.errors.push("'samples' must be at least 2".into());
    }
    let rng_seed = fields.take::<u64>("seed").unwrap_or(0);
    let tol = fields.take::<f64>("tol");
    let max_iter = fields.take::<usize>("max_iter");
    let damping = fields.take::<f64>("damping");
    if let Some(d) = damping {
        if !(d > 0.0 && d <= 1.0) {
            fields.errors.push(format!("'damping' must lie in (0, 1], got {d}"));
        }
    }
    if let Some(t) = tol {
        if t.is_nan() || t <= 0.0 {
            fields.errors.push(format!("'tol' must be positive, got {t}"));
        }
    }
    let output_dir = fields.map.remove("output_dir").map(|(_, v)| PathBuf::from(v));

    let params = ModelParams::new(n, j, mu, beta_grid.first().copied().unwrap_or(0.0));
    if let Err(e) = params.validate() {
        fields.errors.push(e.to_string());
    }

    if !fields.errors.is_empty() {
        return Err(ConfigError { errors: fields.errors });
    }
    Ok(RunConfig {
        mode: mode.expect("checked above"),
        params,
        grid,
        beta_grid,
        init,
        seeds,
        n_samples,
        rng_seed,
        tol,
        max_iter,
        damping,
        output_dir,
    })
}
