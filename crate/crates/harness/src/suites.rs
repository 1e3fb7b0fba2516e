//! Verification suites with pinned seeds.

use std::str::FromStr;

use lowrank_bandit::analysis::{
    check_concentration, check_elimination_stage, check_estimator, check_lemma2, check_lemma4,
    format_results, horizon_sweep, log_ratio_change, median_final_regret, par_map,
    regret_scaling_report, LemmaResult, ScalingTable,
};
use lowrank_bandit::bandit::{lowrank_elim, ucb1_baseline, ElimConfig, Exploration, Side};
use lowrank_bandit::environment::{generate_instance, HottTopicsInstance, NoiseModel};
use lowrank_bandit::matcore::{enum_subsets, DSubset};
use lowrank_bandit::rng::stream_rng;
use lowrank_bandit::Error;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemmas,
    Scaling,
    Estimators,
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemmas" => Ok(Self::Lemmas),
            "scaling" => Ok(Self::Scaling),
            "estimators" => Ok(Self::Estimators),
            other => Err(HarnessError::UnknownSuite(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Horizons of the scaling sweep.
    pub ns: Vec<u64>,
    /// Seeds per sweep point.
    pub seeds: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            ns: vec![1_000, 10_000, 100_000],
            seeds: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub results: Vec<LemmaResult>,
    pub tables: Vec<ScalingTable>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(LemmaResult::passed)
    }

    pub fn render(&self) -> String {
        let mut out = format_results(&self.results);
        for t in &self.tables {
            out.push('\n');
            out.push_str(&t.to_csv());
        }
        for r in &self.results {
            for n in &r.notes {
                out.push_str(&format!("{}: {n}\n", r.lemma));
            }
            for w in &r.witnesses {
                out.push_str(&format!("{}: witness: {w}\n", r.lemma));
            }
        }
        out
    }
}

/// Two-row instance whose rows separate in the first stage. Used for the
/// horizon sweep.
pub fn log_scaling_instance() -> HottTopicsInstance {
    HottTopicsInstance::rank_one(&[1.0, 0.05], &[1.0, 0.8]).expect("valid rank-one instance")
}

/// Rank-one `k x k` instance with one latent value 1 and the rest 0.5, so
/// every suboptimal row and column has the same gap.
pub fn matched_gap_instance(k: usize) -> HottTopicsInstance {
    let mut u = vec![0.5; k];
    u[0] = 1.0;
    HottTopicsInstance::rank_one(&u, &u).expect("valid rank-one instance")
}

/// `4 x 4` instance where every suboptimal subset has predicted stage 4.
pub fn elimination_stage_instance() -> HottTopicsInstance {
    HottTopicsInstance::rank_one(&[1.0, 0.8, 0.75, 0.7], &[0.7, 1.0, 0.8, 0.75]).expect("valid rank-one instance")
}

pub fn concentration_instance() -> HottTopicsInstance {
    generate_instance(3, 3, 1, 7, 1e-2, 0.0).expect("pinned instance generates")
}

/// `count` generated instances with `d` in `1..=3` and `K, L` in `d..=max_k`,
/// drawn from a fixed stream. Shapes that fail to generate are redrawn.
pub fn pinned_instances(count: usize, max_k: usize, min_cmin: f64, stream: u64) -> Vec<HottTopicsInstance> {
    let mut rng = stream_rng(0x5eed_1e55, stream);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let d = rng.random_range(1..=3usize);
        let k = rng.random_range(d..=max_k);
        let l = rng.random_range(d..=max_k);
        let seed: u64 = rng.random();
        match generate_instance(k, l, d, seed, min_cmin, 0.0) {
            Ok(inst) => out.push(inst),
            Err(Error::GenerationFailed { .. }) => continue,
            Err(e) => panic!("generator rejected a valid shape: {e}"),
        }
    }
    out
}

/// Median final regret of elimination and UCB1 on [`matched_gap_instance`]
/// for each `k`, as `(k, elim, ucb1)`.
pub fn separation_sweep(ks: &[usize], n: u64, seeds: u64, seed: u64) -> Result<Vec<(usize, f64, f64)>> {
    ks.iter()
        .map(|&k| {
            let inst = matched_gap_instance(k);
            let noise = NoiseModel::Bernoulli;
            let elim = par_map(seeds, |s| {
                lowrank_elim(&inst, &noise, &ElimConfig::new(n, seed).with_stream(s).without_steps())
                    .map(|t| t.cumulative_regret)
            })
            .into_iter()
            .collect::<std::result::Result<Vec<_>, _>>()?;
            let ucb = par_map(seeds, |s| {
                let mut rng = stream_rng(seed.wrapping_add(1), s);
                ucb1_baseline(&inst, &noise, n, &mut rng, false).map(|t| t.cumulative_regret)
            })
            .into_iter()
            .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok((k, median_final_regret(&elim), median_final_regret(&ucb)))
        })
        .collect()
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    match suite {
        Suite::Lemmas => lemmas_suite(),
        Suite::Estimators => estimators_suite(),
        Suite::Scaling => scaling_suite(opts),
    }
}

fn lemmas_suite() -> Result<SuiteReport> {
    let mut results = Vec::new();
    let mut l2 = LemmaResult::new("lemma2");
    for inst in pinned_instances(100, 7, 1e-4, 2) {
        l2.merge(check_lemma2(&inst)?);
    }
    results.push(l2);
    let mut rng = stream_rng(0x4c34, 0);
    for d in 1..=4 {
        results.push(check_lemma4(d, 10_000, &mut rng)?);
    }
    results.push(check_concentration(&concentration_instance(), &NoiseModel::Bernoulli, 10_000, 50, 5)?);
    results.push(check_elimination_stage(
        &elimination_stage_instance(),
        &NoiseModel::Bernoulli,
        2_000_000,
        50,
        6,
    )?);
    Ok(SuiteReport {
        suite: Suite::Lemmas,
        results,
        tables: Vec::new(),
    })
}

fn estimators_suite() -> Result<SuiteReport> {
    let mut results = Vec::new();
    let cases: [(usize, usize, usize, u64); 3] = [(4, 4, 1, 1), (5, 5, 2, 2), (5, 4, 3, 3)];
    for (i, (k, l, d, seed)) in cases.into_iter().enumerate() {
        let inst = generate_instance(k, l, d, seed, 1e-3, 0.0)?;
        let rows = enum_subsets(k, d)?;
        let cols = enum_subsets(l, d)?;
        let own = DSubset::new((k - d..k).collect(), k)?;
        for (side, subset, opposite) in [
            (Side::Row, own.clone(), cols.clone()),
            (Side::Col, DSubset::first(d), rows[rows.len() / 2..].to_vec()),
        ] {
            for noise in [NoiseModel::Bernoulli, NoiseModel::TruncatedGaussian { sigma: 0.2 }] {
                let mut r = check_estimator(&inst, &noise, side, &subset, &opposite, 100_000, 10 + i as u64)?;
                r.lemma = format!("{}-d{d}-{}", r.lemma, if noise == NoiseModel::Bernoulli { "bern" } else { "gauss" });
                results.push(r);
            }
        }
    }
    Ok(SuiteReport {
        suite: Suite::Estimators,
        results,
        tables: Vec::new(),
    })
}

fn scaling_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    if opts.ns.len() < 3 {
        return Err(Error::InsufficientData {
            got: opts.ns.len(),
            required: 3,
        }
        .into());
    }
    let mut ns = opts.ns.clone();
    ns.sort_unstable();
    let pts = horizon_sweep(
        &log_scaling_instance(),
        &NoiseModel::Bernoulli,
        &ns,
        opts.seeds,
        21,
        Exploration::Restricted,
    )?;
    let table = regret_scaling_report("n", &pts)?;
    let change = log_ratio_change(&table)?;
    let mut log_check = LemmaResult::new("log-scaling");
    log_check.record(0.5 - change, change < 0.5, || format!("regret/ln n changed by {change:.3}"));
    log_check.notes.push(format!("regret/ln n change between the two largest n: {change:.3}"));

    let sep = separation_sweep(&[4, 8, 16], 100_000, opts.seeds, 22)?;
    let ratios: Vec<f64> = sep.iter().map(|(_, e, u)| u / e).collect();
    let mut sep_check = LemmaResult::new("separation");
    let margin = ratios[2] - ratios[0];
    sep_check.record(margin, margin > 0.0, || format!("ucb1/elim ratios {ratios:?}"));
    for (k, e, u) in &sep {
        sep_check.notes.push(format!("K=L={k}: elim median {e:.1}, ucb1 median {u:.1}"));
    }
    let sep_table = regret_scaling_report(
        "K_elim",
        &sep.iter()
            .map(|(k, e, _)| lowrank_bandit::analysis::ScalingPoint {
                value: *k as f64,
                regrets: vec![*e],
            })
            .collect::<Vec<_>>(),
    )?;
    Ok(SuiteReport {
        suite: Suite::Scaling,
        results: vec![log_check, sep_check],
        tables: vec![table, sep_table],
    })
}
