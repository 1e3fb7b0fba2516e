use rand::Rng;

use crate::environment::{HottTopicsInstance, NoiseModel, RewardSampler};
use crate::error::{Error, Result};
use crate::matcore::DSubset;

use super::trace::{RegretTrace, StepRecord};

/// UCB1 over the `K L` entries treated as independent arms.
///
/// Each entry is pulled once, then the arm maximizing
/// `mean + sqrt(2 ln t / pulls)` is played. Ties go to the first arm in
/// row-major order. Regret is measured against the means.
pub fn ucb1_baseline<R: Rng + ?Sized>(
    inst: &HottTopicsInstance,
    noise: &NoiseModel,
    n: u64,
    rng: &mut R,
    record_steps: bool,
) -> Result<RegretTrace> {
    let (k, l) = (inst.k(), inst.l());
    let arms = (k * l) as u64;
    if n < arms {
        return Err(Error::InsufficientHorizon { n, required: arms });
    }
    let sampler = RewardSampler::new(inst, noise)?;
    let rbar = inst.rbar();
    let (_, best) = rbar.max_entry();
    let singles = |m: usize| -> Result<Vec<DSubset>> { (0..m).map(|i| DSubset::new(vec![i], m)).collect() };
    let mut trace = RegretTrace::new(n, singles(k)?, singles(l)?);

    let mut sums = vec![0.0; k * l];
    let mut pulls = vec![0u64; k * l];
    for t in 1..=n {
        let arm = if t <= arms {
            (t - 1) as usize
        } else {
            let log_t = 2.0 * (t as f64).ln();
            let mut best_arm = 0;
            let mut best_idx = f64::NEG_INFINITY;
            for a in 0..k * l {
                let p = pulls[a] as f64;
                let idx = sums[a] / p + (log_t / p).sqrt();
                if idx > best_idx {
                    best_idx = idx;
                    best_arm = a;
                }
            }
            best_arm
        };
        let (i, j) = (arm / l, arm % l);
        let x = sampler.sample(i, j, rng);
        sums[arm] += x;
        pulls[arm] += 1;
        let regret = best - rbar[(i, j)];
        trace.cumulative_regret += regret;
        trace.observations_used += 1;
        if record_steps {
            trace.steps.push(StepRecord { step: t, row: i as u32, col: j as u32, reward: x, regret });
        }
    }
    Ok(trace)
}
