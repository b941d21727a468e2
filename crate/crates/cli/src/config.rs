//! Run configuration: plain-text `key = value` files with command-line
//! overrides. Every key has a documented default; unknown keys, malformed
//! values, constraint violations and unreadable files map to distinct exit
//! codes in `main`.

use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mu: f64,
    pub lambda: f64,
    pub k_cut: f64,
    pub eps: f64,
    pub t: f64,
    /// Initial-state momentum width.
    pub sigma: f64,
    /// Preset scale for the verification suites: tiny | desk | full.
    pub preset: String,
    pub out_dir: String,
    pub seed: u64,
    /// 0 = library default (all cores).
    pub threads: usize,
    pub n_max: usize,
    /// Lattice points per dimension for `evolve`.
    pub points_per_dim: usize,
    /// Lattice spacing for `evolve`.
    pub delta: f64,
    /// Mode-grid upper edge for `evolve`.
    pub grid_hi: f64,
    /// Hamiltonian for `evolve`: hn | hk | heps | heff.
    pub hamiltonian: String,
    /// Scalar source: discrete | continuum.
    pub source: String,
    pub tol_quad: f64,
    pub tol_3d: f64,
    pub tol_krylov: f64,
    pub dense_threshold: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mu: 100.0,
            lambda: 0.0, // 0 = derive from K and the grid
            k_cut: 0.0,  // 0 = derive as mu^{1/3}
            eps: -1.0,   // <0 = derive as 1/mu
            t: 0.1,
            sigma: 1.0,
            preset: "tiny".into(),
            out_dir: "out".into(),
            seed: 7,
            threads: 0,
            n_max: 2,
            points_per_dim: 9,
            delta: 1.0,
            grid_hi: 4.0,
            hamiltonian: "hk".into(),
            source: "discrete".into(),
            tol_quad: 1e-10,
            tol_3d: 1e-6,
            tol_krylov: 1e-11,
            dense_threshold: 2000,
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    /// Unknown key or malformed value (usage error).
    Usage(String),
    /// Parameter constraint violated.
    Constraint(String),
    /// Config file could not be read.
    Unreadable(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Usage(m) => write!(f, "usage error: {m}"),
            ConfigError::Constraint(m) => write!(f, "constraint violation: {m}"),
            ConfigError::Unreadable(m) => write!(f, "cannot read config: {m}"),
        }
    }
}

impl RunConfig {
    /// Keys accepted in config files and as `--key value` flags.
    pub const KEYS: &'static [&'static str] = &[
        "mu",
        "lambda",
        "K",
        "eps",
        "t",
        "sigma",
        "preset",
        "out_dir",
        "seed",
        "threads",
        "n_max",
        "points_per_dim",
        "delta",
        "grid_hi",
        "hamiltonian",
        "source",
        "tol_quad",
        "tol_3d",
        "tol_krylov",
        "dense_threshold",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |k: &str, v: &str| ConfigError::Usage(format!("bad value '{v}' for key '{k}'"));
        match key {
            "mu" => self.mu = value.parse().map_err(|_| bad(key, value))?,
            "lambda" => self.lambda = value.parse().map_err(|_| bad(key, value))?,
            "K" | "k" => self.k_cut = value.parse().map_err(|_| bad(key, value))?,
            "eps" => self.eps = value.parse().map_err(|_| bad(key, value))?,
            "t" => self.t = value.parse().map_err(|_| bad(key, value))?,
            "sigma" => self.sigma = value.parse().map_err(|_| bad(key, value))?,
            "preset" => {
                if !["tiny", "desk", "full"].contains(&value) {
                    return Err(bad(key, value));
                }
                self.preset = value.into();
            }
            "out_dir" => self.out_dir = value.into(),
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "threads" => self.threads = value.parse().map_err(|_| bad(key, value))?,
            "n_max" => self.n_max = value.parse().map_err(|_| bad(key, value))?,
            "points_per_dim" => {
                self.points_per_dim = value.parse().map_err(|_| bad(key, value))?
            }
            "delta" => self.delta = value.parse().map_err(|_| bad(key, value))?,
            "grid_hi" => self.grid_hi = value.parse().map_err(|_| bad(key, value))?,
            "hamiltonian" => {
                if !["hn", "hk", "heps", "heff"].contains(&value) {
                    return Err(bad(key, value));
                }
                self.hamiltonian = value.into();
            }
            "source" => {
                if !["discrete", "continuum"].contains(&value) {
                    return Err(bad(key, value));
                }
                self.source = value.into();
            }
            "tol_quad" => self.tol_quad = value.parse().map_err(|_| bad(key, value))?,
            "tol_3d" => self.tol_3d = value.parse().map_err(|_| bad(key, value))?,
            "tol_krylov" => self.tol_krylov = value.parse().map_err(|_| bad(key, value))?,
            "dense_threshold" => {
                self.dense_threshold = value.parse().map_err(|_| bad(key, value))?
            }
            _ => return Err(ConfigError::Usage(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parse a `key = value` file body on top of the defaults.
    pub fn parse_str(body: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::Usage(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &str) -> Result<RunConfig, ConfigError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Unreadable(format!("{path}: {e}")))?;
        Self::parse_str(&body)
    }

    /// Fill derived defaults and check parameter constraints.
    pub fn finalize(&mut self) -> Result<(), ConfigError> {
        if self.k_cut == 0.0 {
            self.k_cut = self.mu.powf(1.0 / 3.0);
        }
        if self.eps < 0.0 {
            self.eps = self.mu.recip();
        }
        if self.lambda == 0.0 {
            self.lambda = self.k_cut.max(self.grid_hi);
        }
        if !(self.mu > 0.0) {
            return Err(ConfigError::Constraint(format!("mu must be > 0 (got {})", self.mu)));
        }
        if self.eps > self.k_cut {
            return Err(ConfigError::Constraint(format!(
                "need eps <= K (got eps = {}, K = {})",
                self.eps, self.k_cut
            )));
        }
        if self.k_cut > self.lambda {
            return Err(ConfigError::Constraint(format!(
                "need K <= lambda (got K = {}, lambda = {})",
                self.k_cut, self.lambda
            )));
        }
        if self.points_per_dim % 2 == 0 {
            return Err(ConfigError::Constraint(
                "points_per_dim must be odd".into(),
            ));
        }
        if self.n_max < 1 {
            return Err(ConfigError::Constraint("n_max must be >= 1".into()));
        }
        Ok(())
    }

    /// Serialize back to the `key = value` format (round-trips through
    /// `parse_str`).
    pub fn to_file_string(&self) -> String {
        format!(
            "mu = {}\nlambda = {}\nK = {}\neps = {}\nt = {}\nsigma = {}\npreset = {}\nout_dir = {}\nseed = {}\nthreads = {}\nn_max = {}\npoints_per_dim = {}\ndelta = {}\ngrid_hi = {}\nhamiltonian = {}\nsource = {}\ntol_quad = {}\ntol_3d = {}\ntol_krylov = {}\ndense_threshold = {}\n",
            self.mu,
            self.lambda,
            self.k_cut,
            self.eps,
            self.t,
            self.sigma,
            self.preset,
            self.out_dir,
            self.seed,
            self.threads,
            self.n_max,
            self.points_per_dim,
            self.delta,
            self.grid_hi,
            self.hamiltonian,
            self.source,
            self.tol_quad,
            self.tol_3d,
            self.tol_krylov,
            self.dense_threshold,
        )
    }

    /// Sweep `mu` values per preset.
    pub fn mu_list(&self) -> Vec<f64> {
        match self.preset.as_str() {
            "desk" => vec![1e2, 3e2, 1e3, 3e3, 1e4],
            "full" => vec![1e2, 3e2, 1e3, 3e3, 1e4, 3e4, 1e5],
            _ => vec![1e2, 1e3, 1e4],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn constraint_violation_detected() {
        let mut cfg = RunConfig::parse_str("eps = 2\nK = 1\n").unwrap();
        match cfg.finalize() {
            Err(ConfigError::Constraint(_)) => {}
            other => panic!("expected constraint error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_usage_error() {
        match RunConfig::parse_str("nope = 3\n") {
            Err(ConfigError::Usage(_)) => {}
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_identity() {
        let mut cfg = RunConfig::default();
        cfg.mu = 123.5;
        cfg.preset = "desk".into();
        cfg.hamiltonian = "heff".into();
        cfg.seed = 99;
        let text = cfg.to_file_string();
        let back = RunConfig::parse_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = RunConfig::parse_str("# comment\n\nmu = 7\n").unwrap();
        assert_eq!(cfg.mu, 7.0);
    }
}
