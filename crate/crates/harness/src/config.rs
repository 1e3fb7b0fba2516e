//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lowrank_bandit::bandit::{Exploration, RegretMode};
use lowrank_bandit::environment::NoiseModel;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    LowrankElim,
    Ucb1,
    NoiseFree,
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowrank-elim" | "elim" => Ok(Self::LowrankElim),
            "ucb1" => Ok(Self::Ucb1),
            "noise-free" => Ok(Self::NoiseFree),
            _ => Err(HarnessError::Config(format!(
                "unknown algorithm `{s}` (expected lowrank-elim, ucb1 or noise-free)"
            ))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LowrankElim => "lowrank-elim",
            Self::Ucb1 => "ucb1",
            Self::NoiseFree => "noise-free",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum InstanceSpec {
    Generated {
        #[serde(rename = "K")]
        k: usize,
        #[serde(rename = "L")]
        l: usize,
        d: usize,
        seed: u64,
        min_cmin: f64,
        min_gap: f64,
    },
    File {
        path: PathBuf,
    },
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub noise: NoiseModel,
    pub algorithm: Algorithm,
    pub exploration: Exploration,
    pub regret_mode: RegretMode,
    pub realized_regret: bool,
    pub horizon: u64,
    /// Run seeds. Seed `s` uses stream `s` of `master_seed`.
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub record_steps: bool,
}

const KEYS: &[&str] = &[
    "K",
    "L",
    "d",
    "seed",
    "min_cmin",
    "min_gap",
    "instance",
    "noise",
    "sigma",
    "algo",
    "exploration",
    "regret_mode",
    "realized_regret",
    "n",
    "seeds",
    "master_seed",
    "output_dir",
    "record_steps",
];

fn canonical_key(raw: &str) -> Result<&'static str> {
    let k = raw.trim().replace('-', "_");
    let k = match k.as_str() {
        "k" => "K",
        "l" => "L",
        "horizon" => "n",
        "algorithm" => "algo",
        "instance_seed" => "seed",
        "out" => "output_dir",
        other => other,
    };
    KEYS.iter()
        .copied()
        .find(|&c| c == k)
        .ok_or_else(|| HarnessError::Config(format!("unknown key `{raw}`")))
}

/// Raw settings before validation. Later assignments win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    /// Parses `key = value` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", no + 1)))?;
            s.set(k, v.trim())?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        self.values.insert(canonical_key(key)?, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| HarnessError::Config(format!("{key} = {v}: {e}"))),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self
            .get(key)
            .ok_or_else(|| HarnessError::Config(format!("missing `{key}` (or give `instance`)")))?;
        v.parse().map_err(|e| HarnessError::Config(format!("{key} = {v}: {e}")))
    }

    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let instance = match self.get("instance") {
            Some(p) => {
                let path = PathBuf::from(p);
                if !path.is_file() {
                    return Err(HarnessError::Config(format!("instance file {} does not exist", path.display())));
                }
                InstanceSpec::File { path }
            }
            None => InstanceSpec::Generated {
                k: self.required("K")?,
                l: self.required("L")?,
                d: self.required("d")?,
                seed: self.parse_or("seed", 0)?,
                min_cmin: self.parse_or("min_cmin", 1e-4)?,
                min_gap: self.parse_or("min_gap", 0.0)?,
            },
        };
        let sigma: f64 = self.parse_or("sigma", 0.1)?;
        let noise = match self.get("noise").unwrap_or("bernoulli") {
            "bernoulli" => NoiseModel::Bernoulli,
            "truncated-gaussian" | "gaussian" => NoiseModel::TruncatedGaussian { sigma },
            "noiseless" | "none" => NoiseModel::noiseless(),
            other => return Err(HarnessError::Config(format!("unknown noise `{other}`"))),
        };
        noise.validate()?;
        let exploration = match self.get("exploration").unwrap_or("restricted") {
            "restricted" => Exploration::Restricted,
            "chain" => Exploration::Chain,
            other => return Err(HarnessError::Config(format!("unknown exploration `{other}`"))),
        };
        let regret_mode = match self.get("regret_mode").unwrap_or("best-entry") {
            "best-entry" => RegretMode::BestEntry,
            "sum-entries" => RegretMode::SumEntries,
            other => return Err(HarnessError::Config(format!("unknown regret mode `{other}`"))),
        };
        let horizon: u64 = self.parse_or("n", 10_000)?;
        if horizon == 0 {
            return Err(HarnessError::Config("n must be at least 1".into()));
        }
        let seeds = parse_seeds(self.get("seeds").unwrap_or("0"))?;
        Ok(ExperimentConfig {
            instance,
            noise,
            algorithm: self.get("algo").unwrap_or("lowrank-elim").parse()?,
            exploration,
            regret_mode,
            realized_regret: self.parse_or("realized_regret", false)?,
            horizon,
            seeds,
            master_seed: self.parse_or("master_seed", 0)?,
            output_dir: PathBuf::from(self.get("output_dir").unwrap_or("out")),
            record_steps: self.parse_or("record_steps", true)?,
        })
    }
}

/// Parses `1..20` (inclusive), `1,4,9`, or a mix such as `1..3,7`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = |part: &str| HarnessError::Config(format!("bad seed list entry `{part}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad(part))?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad(part))?;
            if b < a {
                return Err(bad(part));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if out.is_empty() {
        return Err(HarnessError::Config("seed list is empty".into()));
    }
    let mut sorted = out.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(HarnessError::Config(format!("seed list `{s}` repeats a seed")));
    }
    Ok(out)
}
