//! Flat `key = value` run configuration.
//!
//! Every key has a default and a one-line description in [`KEYS`]; the CLI
//! exposes each key as a `--key` flag. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_rational::BigRational;

use crate::construction::{RankLaw, Rounding, StaircaseParams};
use crate::error::{Error, Result};
use crate::numeric::{parse_rational, rational_string};

/// Environment variable overriding `cache_dir`.
pub const CACHE_DIR_ENV: &str = "STAIRCASE_CACHE_DIR";

/// `(key, default, description)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("law", "power", "rank law: power, constant or explicit"),
    ("d", "0.5", "exponent of the power law r_j = max(r_min, round(j^d))"),
    ("rounding", "round", "rounding of j^d: round or floor"),
    ("r_min", "2", "smallest rank of the power law"),
    ("rank", "2", "rank of the constant law"),
    ("ranks", "", "comma-separated ranks of the explicit law"),
    ("base_stage", "0", "stage of the base level defining A"),
    ("base_level", "0", "level index of A inside the base tower"),
    ("eps", "1/1000000000", "enclosure width target, relative to c(0)"),
    ("lemma_rel", "1/1000000", "gap sweeps refine to width c(0)*lemma_rel/h_j"),
    ("stage_budget", "256", "extra stages tried before giving up on a width target"),
    ("precision_bits", "256", "binary precision of the Gram solver"),
    ("out_dir", "out", "directory for CSV and JSON reports"),
    ("cache_dir", ".staircase-cache", "pair-count cache directory"),
    ("cache", "true", "read and write the pair-count cache"),
    ("r", "1,2,3", "r values (list or a..b range)"),
    ("N", "4,8,16,32,64", "basis half-widths for the cyclic distance"),
    ("j", "", "stages for build, lemma and cross (empty: 0..=20 for build, the census J_r otherwise)"),
    ("p", "0,1,2,3", "height offsets for the cross estimate"),
    ("n", "0..64", "shifts for corr and mix (big integers allowed in lists)"),
    ("shifts_file", "", "file of decimal shifts, one per line, read by corr instead of n"),
    ("normalize", "false", "corr reports c(n)/mu(X) using the enclosure of mu(X)"),
    ("seed", "1", "seed for sampled oracle shifts"),
    ("samples", "200", "sampled shifts per stage in oracle-check"),
    ("oracle_j_max", "12", "last stage checked by oracle-check"),
    ("oracle_laws", "config,constant2,constant3", "constructions checked by oracle-check: config or constantK"),
    ("grid", "1024", "points of the spectral grid"),
    ("spectrum_N", "256", "number of moments in the Fejer sum"),
    ("mode", "corrected", "identity mode: corrected or printed"),
    ("max_log10_height", "300", "lemma sweeps skip stages with h_j above 10^this"),
    ("measure_stage", "40", "tower stage used to enclose mu(X)"),
    ("threads", "0", "worker threads (0: one per core)"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub law: String,
    pub d: f64,
    pub rounding: Rounding,
    pub r_min: u32,
    pub rank: u32,
    pub ranks: Vec<u32>,
    pub base_stage: usize,
    pub base_level: u64,
    pub eps: BigRational,
    pub lemma_rel: BigRational,
    pub stage_budget: usize,
    pub precision_bits: usize,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub cache: bool,
    pub r: Vec<u64>,
    pub n_basis: Vec<usize>,
    pub j: Vec<usize>,
    pub p: Vec<usize>,
    pub shifts: Vec<BigUint>,
    pub shifts_file: Option<PathBuf>,
    pub normalize: bool,
    pub seed: u64,
    pub samples: usize,
    pub oracle_j_max: usize,
    pub oracle_laws: Vec<String>,
    pub grid: usize,
    pub spectrum_n: usize,
    pub mode: String,
    pub max_log10_height: f64,
    pub measure_stage: usize,
    pub threads: usize,
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value {value:?} for key {key}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

/// Comma-separated list; items of the form `a..b` expand to `a..=b`.
fn list<T>(key: &str, value: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr + Clone + std::ops::AddAssign + PartialOrd + From<u8>,
{
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let (mut a, b): (T, T) = (num(key, a)?, num(key, b)?);
            while a <= b {
                out.push(a.clone());
                a += T::from(1u8);
            }
        } else {
            out.push(num(key, item)?);
        }
    }
    Ok(out)
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

fn rational(key: &str, value: &str) -> Result<BigRational> {
    parse_rational(value).ok_or_else(|| bad(key, value))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut c = RunConfig {
            law: String::new(),
            d: 0.0,
            rounding: Rounding::Round,
            r_min: 0,
            rank: 0,
            ranks: Vec::new(),
            base_stage: 0,
            base_level: 0,
            eps: BigRational::default(),
            lemma_rel: BigRational::default(),
            stage_budget: 0,
            precision_bits: 0,
            out_dir: PathBuf::new(),
            cache_dir: PathBuf::new(),
            cache: false,
            r: Vec::new(),
            n_basis: Vec::new(),
            j: Vec::new(),
            p: Vec::new(),
            shifts: Vec::new(),
            shifts_file: None,
            normalize: false,
            seed: 0,
            samples: 0,
            oracle_j_max: 0,
            oracle_laws: Vec::new(),
            grid: 0,
            spectrum_n: 0,
            mode: String::new(),
            max_log10_height: 0.0,
            measure_stage: 0,
            threads: 0,
        };
        for (k, v, _) in KEYS {
            c.set(k, v).expect("defaults parse");
        }
        c
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "law" => match v {
                "power" | "constant" | "explicit" => self.law = v.to_string(),
                _ => return Err(bad(key, value)),
            },
            "d" => self.d = num(key, v)?,
            "rounding" => self.rounding = v.parse().map_err(|_| bad(key, value))?,
            "r_min" => self.r_min = num(key, v)?,
            "rank" => self.rank = num(key, v)?,
            "ranks" => self.ranks = list(key, v)?,
            "base_stage" => self.base_stage = num(key, v)?,
            "base_level" => self.base_level = num(key, v)?,
            "eps" => self.eps = rational(key, v)?,
            "lemma_rel" => self.lemma_rel = rational(key, v)?,
            "stage_budget" => self.stage_budget = num(key, v)?,
            "precision_bits" => self.precision_bits = num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "cache_dir" => self.cache_dir = PathBuf::from(v),
            "cache" => self.cache = boolean(key, v)?,
            "r" => self.r = list(key, v)?,
            "N" => self.n_basis = list(key, v)?,
            "j" => self.j = list(key, v)?,
            "p" => self.p = list(key, v)?,
            "n" => self.shifts = list(key, v)?,
            "shifts_file" => self.shifts_file = (!v.is_empty()).then(|| PathBuf::from(v)),
            "normalize" => self.normalize = boolean(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "oracle_j_max" => self.oracle_j_max = num(key, v)?,
            "oracle_laws" => {
                self.oracle_laws = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
            }
            "grid" => self.grid = num(key, v)?,
            "spectrum_N" => self.spectrum_n = num(key, v)?,
            "mode" => match v {
                "corrected" | "printed" => self.mode = v.to_string(),
                _ => return Err(bad(key, value)),
            },
            "max_log10_height" => self.max_log10_height = num(key, v)?,
            "measure_stage" => self.measure_stage = num(key, v)?,
            "threads" => self.threads = num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Current value of `key` in config-file syntax.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "law" => self.law.clone(),
            "d" => self.d.to_string(),
            "rounding" => self.rounding.as_str().to_string(),
            "r_min" => self.r_min.to_string(),
            "rank" => self.rank.to_string(),
            "ranks" => join(&self.ranks),
            "base_stage" => self.base_stage.to_string(),
            "base_level" => self.base_level.to_string(),
            "eps" => rational_string(&self.eps),
            "lemma_rel" => rational_string(&self.lemma_rel),
            "stage_budget" => self.stage_budget.to_string(),
            "precision_bits" => self.precision_bits.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "cache_dir" => self.cache_dir.display().to_string(),
            "cache" => self.cache.to_string(),
            "r" => join(&self.r),
            "N" => join(&self.n_basis),
            "j" => join(&self.j),
            "p" => join(&self.p),
            "n" => join(&self.shifts),
            "shifts_file" => self.shifts_file.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "normalize" => self.normalize.to_string(),
            "seed" => self.seed.to_string(),
            "samples" => self.samples.to_string(),
            "oracle_j_max" => self.oracle_j_max.to_string(),
            "oracle_laws" => self.oracle_laws.join(","),
            "grid" => self.grid.to_string(),
            "spectrum_N" => self.spectrum_n.to_string(),
            "mode" => self.mode.clone(),
            "max_log10_height" => self.max_log10_height.to_string(),
            "measure_stage" => self.measure_stage.to_string(),
            "threads" => self.threads.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut c = Self::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    /// Applies [`CACHE_DIR_ENV`] when set.
    pub fn apply_env(&mut self) {
        if let Ok(dir) = std::env::var(CACHE_DIR_ENV) {
            if !dir.is_empty() {
                self.cache_dir = PathBuf::from(dir);
            }
        }
    }

    /// Every key, one per line, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, _, _) in KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k).unwrap_or_default());
        }
        s
    }

    pub fn params(&self) -> Result<StaircaseParams> {
        let p = match self.law.as_str() {
            "power" => StaircaseParams {
                law: RankLaw::Power {
                    d: self.d,
                    rounding: self.rounding,
                    r_min: self.r_min,
                },
                base_stage: 0,
                base_level: 0,
            },
            "constant" => StaircaseParams::constant(self.rank),
            _ => StaircaseParams::explicit(self.ranks.clone()),
        }
        .with_base(self.base_stage, self.base_level);
        p.validate()?;
        Ok(p)
    }

    /// Shifts listed in `shifts_file`, or `n` when no file is set. Blank
    /// lines and `#` comments are skipped.
    pub fn corr_shifts(&self) -> Result<Vec<BigUint>> {
        let Some(path) = &self.shifts_file else {
            return Ok(self.shifts.clone());
        };
        let text = std::fs::read_to_string(path)?;
        text.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.parse().map_err(|_| bad("shifts_file", l)))
            .collect()
    }

    /// Absolute width target `eps·c(0)`.
    pub fn absolute_eps(&self, c0: &BigRational) -> BigRational {
        &self.eps * c0
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.r.is_empty() || self.n_basis.is_empty() || self.p.is_empty() || self.shifts.is_empty() {
            return Err(Error::Config("experiment grids must be non-empty".into()));
        }
        if self.eps <= BigRational::default() || self.lemma_rel <= BigRational::default() {
            return Err(Error::Config("eps and lemma_rel must be positive".into()));
        }
        if self.grid == 0 || self.spectrum_n == 0 {
            return Err(Error::Config("grid and spectrum_N must be positive".into()));
        }
        Ok(())
    }
}
