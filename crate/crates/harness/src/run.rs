//! Seeded batch execution and artifact output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use lowrank_bandit::analysis::{par_map, percentile, theorem1_bound};
use lowrank_bandit::bandit::{lowrank_elim, noise_free_max, ucb1_baseline, ElimConfig, RegretTrace};
use lowrank_bandit::environment::{
    check_enumeration_guard, generate_instance, oracle_quantities, HottTopicsInstance,
};
use lowrank_bandit::rng::stream_rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Algorithm, ExperimentConfig, InstanceSpec};
use crate::error::{io_err, Result};

pub const AGGREGATE_CSV_HEADER: &str = "seed,final_regret,observations_used,completed_stages,converged";
/// The only key whose value changes between identical runs.
pub const METADATA_KEY: &str = "metadata";

pub fn load_instance(spec: &InstanceSpec) -> Result<HottTopicsInstance> {
    match spec {
        InstanceSpec::Generated {
            k,
            l,
            d,
            seed,
            min_cmin,
            min_gap,
        } => Ok(generate_instance(*k, *l, *d, *seed, *min_cmin, *min_gap)?),
        InstanceSpec::File { path } => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            Ok(HottTopicsInstance::from_json(&text)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub final_regret: f64,
    pub observations_used: u64,
    pub completed_stages: usize,
    pub converged: bool,
    pub found_matches_oracle: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub runs: usize,
    pub mean: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub min: f64,
    pub max: f64,
}

impl AggregateStats {
    pub fn from_regrets(regrets: &[f64]) -> Self {
        let mut v = regrets.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            runs: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: percentile(&v, 0.5),
            p25: percentile(&v, 0.25),
            p75: percentile(&v, 0.75),
            min: v.first().copied().unwrap_or(f64::NAN),
            max: v.last().copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outcomes: Vec<SeedOutcome>,
    pub aggregate: AggregateStats,
    pub output_dir: PathBuf,
}

impl RunReport {
    pub fn all_found_match(&self) -> Option<bool> {
        self.outcomes
            .iter()
            .map(|o| o.found_matches_oracle)
            .collect::<Option<Vec<bool>>>()
            .map(|v| v.iter().all(|&b| b))
    }
}

pub fn trace_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("trace_seed_{seed}.csv"))
}

pub fn eliminations_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("eliminations_seed_{seed}.jsonl"))
}

pub fn summary_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("summary_seed_{seed}.json"))
}

fn metadata() -> Value {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({ "generated_unix_s": secs, "tool": concat!("lowrank ", env!("CARGO_PKG_VERSION")) })
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Runs every seed of `cfg`, writing per-seed artifacts and an aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let inst = load_instance(&cfg.instance)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let enumerable = check_enumeration_guard(inst.k(), inst.l(), inst.d()).is_ok();
    let oracle = if enumerable { Some(oracle_quantities(&inst)?) } else { None };
    let bound = if enumerable { theorem1_bound(&inst, cfg.horizon).ok() } else { None };
    let config_json = serde_json::to_value(cfg)?;

    let outcomes = par_map(cfg.seeds.len() as u64, |idx| -> Result<SeedOutcome> {
        let seed = cfg.seeds[idx as usize];
        let mut summary = json!({
            "config": config_json,
            "seed": seed,
            "algorithm": cfg.algorithm.to_string(),
            "instance": { "K": inst.k(), "L": inst.l(), "d": inst.d() },
            "oracle": oracle,
        });
        let outcome = match cfg.algorithm {
            Algorithm::NoiseFree => {
                let found = noise_free_max(inst.rbar(), inst.d())?;
                let (_, _, best) = inst.best_entry_in(&found.rows, &found.cols);
                let regret = inst.rbar().max_entry().1 - best;
                let matches = oracle
                    .as_ref()
                    .map(|o| o.best_drow == found.rows && o.best_dcol == found.cols);
                summary["noise_free"] = json!({
                    "rows": found.rows,
                    "cols": found.cols,
                    "row_score": found.row_score,
                    "col_score": found.col_score,
                    "warnings": found.warnings(),
                });
                summary["found_matches_oracle"] = json!(matches);
                summary["final_regret"] = json!(regret);
                SeedOutcome {
                    seed,
                    final_regret: regret,
                    observations_used: 0,
                    completed_stages: 0,
                    converged: true,
                    found_matches_oracle: matches,
                }
            }
            Algorithm::LowrankElim | Algorithm::Ucb1 => {
                let trace = run_trace(cfg, &inst, seed)?;
                if cfg.record_steps {
                    write_with(&trace_path(dir, seed), |w| trace.write_csv(w))?;
                }
                if cfg.algorithm == Algorithm::LowrankElim {
                    write_with(&eliminations_path(dir, seed), |w| trace.write_eliminations_jsonl(w))?;
                }
                fill_trace_summary(&mut summary, &trace, cfg, bound.clone());
                SeedOutcome {
                    seed,
                    final_regret: trace.cumulative_regret,
                    observations_used: trace.observations_used,
                    completed_stages: trace.completed_stages,
                    converged: trace.converged(),
                    found_matches_oracle: None,
                }
            }
        };
        summary[METADATA_KEY] = metadata();
        write_json(&summary_path(dir, seed), &summary)?;
        Ok(outcome)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let regrets: Vec<f64> = outcomes.iter().map(|o| o.final_regret).collect();
    let aggregate = AggregateStats::from_regrets(&regrets);
    let agg_path = dir.join("aggregate.csv");
    write_with(&agg_path, |w| {
        writeln!(w, "{AGGREGATE_CSV_HEADER}")?;
        for o in &outcomes {
            writeln!(
                w,
                "{},{},{},{},{}",
                o.seed, o.final_regret, o.observations_used, o.completed_stages, o.converged
            )?;
        }
        Ok(())
    })?;
    write_json(
        &dir.join("aggregate_summary.json"),
        &json!({
            "config": config_json,
            "final_regret": aggregate,
            METADATA_KEY: metadata(),
        }),
    )?;
    Ok(RunReport {
        outcomes,
        aggregate,
        output_dir: dir.clone(),
    })
}

fn run_trace(cfg: &ExperimentConfig, inst: &HottTopicsInstance, seed: u64) -> Result<RegretTrace> {
    Ok(match cfg.algorithm {
        Algorithm::LowrankElim => {
            let ec = ElimConfig {
                horizon: cfg.horizon,
                regret_mode: cfg.regret_mode,
                exploration: cfg.exploration,
                seed: cfg.master_seed,
                stream: seed,
                realized_regret: cfg.realized_regret,
                record_steps: cfg.record_steps,
            };
            lowrank_elim(inst, &cfg.noise, &ec)?
        }
        Algorithm::Ucb1 => {
            let mut rng = stream_rng(cfg.master_seed, seed);
            ucb1_baseline(inst, &cfg.noise, cfg.horizon, &mut rng, cfg.record_steps)?
        }
        Algorithm::NoiseFree => unreachable!("noise-free runs have no trace"),
    })
}

fn fill_trace_summary(
    summary: &mut Value,
    trace: &RegretTrace,
    cfg: &ExperimentConfig,
    bound: Option<lowrank_bandit::analysis::BoundReport>,
) {
    summary["final_regret"] = json!(trace.cumulative_regret);
    summary["observations_used"] = json!(trace.observations_used);
    summary["completed_stages"] = json!(trace.completed_stages);
    summary["budget_exhausted_in_first_stage"] = json!(trace.budget_exhausted_in_first_stage);
    summary["converged_at"] = json!(trace.converged_at);
    if cfg.algorithm == Algorithm::LowrankElim {
        summary["final_rows"] = json!(trace.final_rows);
        summary["final_cols"] = json!(trace.final_cols);
        summary["eliminations"] = json!(trace.eliminations);
        summary["stages"] = json!(trace.stages);
    }
    summary["bound"] = json!(bound.map(|b| b.with_empirical(trace.cumulative_regret)));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_stats() {
        let a = AggregateStats::from_regrets(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(a.runs, 4);
        assert_eq!(a.mean, 2.5);
        assert_eq!(a.median, 2.5);
        assert_eq!((a.min, a.max), (1.0, 4.0));
        assert_eq!((a.p25, a.p75), (1.75, 3.25));
    }

    #[test]
    fn artifact_names() {
        let d = Path::new("o");
        assert_eq!(trace_path(d, 3), PathBuf::from("o/trace_seed_3.csv"));
        assert_eq!(summary_path(d, 3), PathBuf::from("o/summary_seed_3.json"));
        assert_eq!(eliminations_path(d, 3), PathBuf::from("o/eliminations_seed_3.jsonl"));
    }
}
