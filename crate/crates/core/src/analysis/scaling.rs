use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::bandit::{lowrank_elim, ElimConfig, Exploration};
use crate::environment::{HottTopicsInstance, NoiseModel};
use crate::error::{Error, Result};

use super::par_map;

pub const SCALING_CSV_HEADER: &str = "sweep_param,value,median_regret,p25,p75";

/// Final regrets of all seeds at one value of the swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub value: f64,
    pub regrets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub sweep_param: String,
    pub value: f64,
    pub median_regret: f64,
    pub p25: f64,
    pub p75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
}

impl ScalingTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{SCALING_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.sweep_param, r.value, r.median_regret, r.p25, r.p75)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Percentile of sorted data by linear interpolation between closest ranks.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

pub fn median_final_regret(regrets: &[f64]) -> f64 {
    let mut v = regrets.to_vec();
    v.sort_by(f64::total_cmp);
    percentile(&v, 0.5)
}

/// Summarizes a one-parameter sweep. Needs at least three points.
pub fn regret_scaling_report(param: &str, points: &[ScalingPoint]) -> Result<ScalingTable> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            got: points.len(),
            required: 3,
        });
    }
    let rows = points
        .iter()
        .map(|p| {
            let mut v = p.regrets.clone();
            v.sort_by(f64::total_cmp);
            ScalingRow {
                sweep_param: param.to_string(),
                value: p.value,
                median_regret: percentile(&v, 0.5),
                p25: percentile(&v, 0.25),
                p75: percentile(&v, 0.75),
            }
        })
        .collect();
    Ok(ScalingTable { rows })
}

/// Runs `lowrank_elim` for every horizon in `ns` with `seeds` streams of
/// `seed` and collects the final regrets.
pub fn horizon_sweep(
    inst: &HottTopicsInstance,
    noise: &NoiseModel,
    ns: &[u64],
    seeds: u64,
    seed: u64,
    exploration: Exploration,
) -> Result<Vec<ScalingPoint>> {
    ns.iter()
        .map(|&n| {
            let regrets = par_map(seeds, |s| {
                let cfg = ElimConfig::new(n, seed)
                    .with_stream(s)
                    .with_exploration(exploration)
                    .without_steps();
                lowrank_elim(inst, noise, &cfg).map(|t| t.cumulative_regret)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            Ok(ScalingPoint {
                value: n as f64,
                regrets,
            })
        })
        .collect()
}

/// Relative change of `median / ln(n)` between the last two rows of a
/// horizon sweep: `max / min - 1`.
pub fn log_ratio_change(table: &ScalingTable) -> Result<f64> {
    let k = table.rows.len();
    if k < 2 {
        return Err(Error::InsufficientData { got: k, required: 2 });
    }
    let f = |r: &ScalingRow| r.median_regret / r.value.ln();
    let (a, b) = (f(&table.rows[k - 2]), f(&table.rows[k - 1]));
    Ok(a.max(b) / a.min(b) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.5);
        assert_eq!(percentile(&v, 0.25), 1.75);
        assert_eq!(percentile(&v, 0.75), 3.25);
        assert_eq!(percentile(&[7.0], 0.3), 7.0);
        assert!(percentile(&[], 0.5).is_nan());
        assert_eq!(median_final_regret(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn report_needs_three_points() {
        let p = ScalingPoint {
            value: 1.0,
            regrets: vec![1.0],
        };
        let err = regret_scaling_report("n", &[p.clone(), p.clone()]).unwrap_err();
        assert_eq!(err, Error::InsufficientData { got: 2, required: 3 });
        let t = regret_scaling_report("n", &[p.clone(), p.clone(), p]).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("sweep_param,value,median_regret,p25,p75\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn single_arm_has_zero_regret() {
        let inst = HottTopicsInstance::rank_one(&[0.6], &[0.7]).unwrap();
        let pts = horizon_sweep(&inst, &NoiseModel::Bernoulli, &[1000, 10_000, 100_000], 3, 1, Exploration::Restricted)
            .unwrap();
        let t = regret_scaling_report("n", &pts).unwrap();
        assert!(t.rows.iter().all(|r| r.median_regret == 0.0 && r.p75 == 0.0));
    }

    #[test]
    fn log_ratio() {
        let row = |v: f64, m: f64| ScalingRow {
            sweep_param: "n".into(),
            value: v,
            median_regret: m,
            p25: m,
            p75: m,
        };
        let t = ScalingTable {
            rows: vec![row(1e3, 1.0), row(1e4, 4.0 * 1e4f64.ln()), row(1e5, 5.0 * 1e5f64.ln())],
        };
        assert!((log_ratio_change(&t).unwrap() - 0.25).abs() < 1e-12);
    }
}
