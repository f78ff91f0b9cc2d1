//! Run configuration: one TOML file, rationals written as `[num, den]`, flags layered on top.

use std::path::{Path, PathBuf};

use multinorm::config::StructureFile;
use multinorm::grid::Grid;
use multinorm::matrix::Structure;
use multinorm::Rat;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn figure1() -> Vec<Vec<[i64; 2]>> {
    vec![vec![[1, 1], [1, 1]], vec![[2, 1], [1, 1]]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Samples per axis (a power of two).
    pub n: usize,
    /// Period per axis (a power of two).
    pub period: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// A structure file; when given it replaces `matrix`, `lambda` and `blocks`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<PathBuf>,
    #[serde(default = "figure1")]
    pub matrix: Vec<Vec<[i64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<[i64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
    #[serde(default = "default_window")]
    pub window: i64,
    #[serde(default = "default_bound")]
    pub bound: i64,
    /// Cancellation order of the Calderón families.
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(default = "default_tau")]
    pub tau: [i64; 2],
    /// Atom validation tolerance.
    #[serde(default = "default_epsilon")]
    pub epsilon: [i64; 2],
    #[serde(default = "default_grid")]
    pub grid: GridConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_window() -> i64 {
    4
}
fn default_bound() -> i64 {
    8
}
fn default_m() -> u32 {
    4
}
fn default_tau() -> [i64; 2] {
    [2, 1]
}
fn default_epsilon() -> [i64; 2] {
    [1, 100_000_000]
}
fn default_grid() -> GridConfig {
    GridConfig { n: 128, period: 2.0 }
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_jobs() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

/// Values given on the command line; each one overrides the file.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Structure file (JSON with `matrix`, optional `lambda` and `blocks`).
    #[arg(long, global = true)]
    pub matrix: Option<PathBuf>,
    #[arg(long, global = true)]
    pub window: Option<i64>,
    #[arg(long, global = true)]
    pub bound: Option<i64>,
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// τ as `p/q` or a decimal.
    #[arg(long, global = true, value_parser = parse_rational)]
    pub tau: Option<[i64; 2]>,
    /// ε as `p/q` or a decimal.
    #[arg(long, global = true, value_parser = parse_rational)]
    pub epsilon: Option<[i64; 2]>,
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub period: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Worker thread bound.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

/// `3/2`, `-4`, `1.25` (decimals are read exactly).
pub fn parse_rational(text: &str) -> Result<[i64; 2], String> {
    let t = text.trim();
    let bad = || format!("not a rational: {text:?}");
    let r = if let Some((a, b)) = t.split_once('/') {
        let (a, b): (i64, i64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if b == 0 {
            return Err(bad());
        }
        Rat::new(a as i128, b as i128)
    } else if let Some((int, frac)) = t.split_once('.') {
        if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10i128.pow(frac.len() as u32);
        let f: i128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = whole.unsigned_abs() as i128 * den + f;
        Rat::new(if neg { -num } else { num }, den)
    } else {
        Rat::from_integer(t.parse::<i64>().map_err(|_| bad())? as i128)
    };
    Ok([i64::try_from(*r.numer()).map_err(|_| bad())?, i64::try_from(*r.denom()).map_err(|_| bad())?])
}

pub fn to_f64(r: [i64; 2]) -> f64 {
    r[0] as f64 / r[1] as f64
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::File(path.to_path_buf(), e))?;
        let mut cfg: RunConfig = toml::from_str(&text)?;
        if let Some(s) = &cfg.structure {
            if s.is_relative() {
                cfg.structure = Some(path.parent().unwrap_or(Path::new(".")).join(s));
            }
        }
        Ok(cfg)
    }

    /// File values (or defaults) with the flags applied and any structure file inlined.
    pub fn resolve(o: &Overrides) -> CliResult<Self> {
        let mut cfg = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(p) = &o.matrix {
            cfg.structure = Some(p.clone());
        }
        if let Some(p) = cfg.structure.take() {
            let text = std::fs::read_to_string(&p).map_err(|e| CliError::File(p.clone(), e))?;
            let f: StructureFile = serde_json::from_str(&text)?;
            cfg.matrix = f.matrix;
            cfg.lambda = f.lambda;
            cfg.blocks = f.blocks;
        }
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = o.$f.clone() { cfg.$f = v; })* };
        }
        take!(window, bound, m, tau, epsilon, seed, output, jobs);
        if let Some(n) = o.grid_n {
            cfg.grid.n = n;
        }
        if let Some(p) = o.period {
            cfg.grid.period = p;
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> CliResult<()> {
        let bad = |what: &str| Err(CliError::Config(what.to_string()));
        if self.tau[1] <= 0 || self.epsilon[1] <= 0 {
            return bad("rationals need a positive denominator");
        }
        if self.tau[0] <= 0 || self.epsilon[0] <= 0 {
            return bad("tau and epsilon must be positive");
        }
        if self.window < 1 || self.bound < 1 {
            return bad("window and bound must be at least 1");
        }
        if self.m == 0 {
            return bad("m must be at least 1");
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1");
        }
        self.structure()?;
        Ok(())
    }

    pub fn structure(&self) -> CliResult<Structure> {
        let f = StructureFile { matrix: self.matrix.clone(), lambda: self.lambda.clone(), blocks: self.blocks.clone() };
        Ok(f.into_structure()?)
    }

    pub fn grid(&self, d: usize) -> CliResult<Grid> {
        Ok(Grid::uniform(d, self.grid.n, self.grid.period)?)
    }

    pub fn tau(&self) -> f64 {
        to_f64(self.tau)
    }

    pub fn epsilon(&self) -> f64 {
        to_f64(self.epsilon)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Writes the effective configuration next to a command's outputs.
    pub fn echo(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::File(dir.to_path_buf(), e))?;
        let path = dir.join("config.toml");
        std::fs::write(&path, self.to_toml()).map_err(|e| CliError::File(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/2").unwrap(), [3, 2]);
        assert_eq!(parse_rational("1.0").unwrap(), [1, 1]);
        assert_eq!(parse_rational("1.25").unwrap(), [5, 4]);
        assert_eq!(parse_rational("-0.5").unwrap(), [-1, 2]);
        assert_eq!(parse_rational("7").unwrap(), [7, 1]);
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.tau, [2, 1]);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "window = 3\ntau = [3, 1]\n[grid]\nn = 64\nperiod = 4.0\n").unwrap();
        let o = Overrides { config: Some(p), window: Some(5), ..Default::default() };
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!(c.window, 5);
        assert_eq!(c.tau, [3, 1]);
        assert_eq!(c.grid.n, 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("windw = 3").is_err());
    }
}
