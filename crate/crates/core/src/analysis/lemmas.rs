use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::bandit::{lowrank_elim, ElimConfig, Exploration, RegretTrace, Side, StageState};
use crate::environment::{
    check_enumeration_guard, oracle_quantities, HottTopicsInstance, NoiseModel, OracleQuantities,
    RewardSampler,
};
use crate::error::{Error, Result};
use crate::matcore::{det, det_max, det_square, submatrix, DSubset, Matrix};
use crate::rng::stream_rng;

use super::par_map;

const MAX_WITNESSES: usize = 10;
/// Slack allowed for floating-point round-off in deterministic inequalities.
const FP_SLACK: f64 = 1e-12;

/// Outcome of one verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaResult {
    pub lemma: String,
    pub trials: u64,
    pub failures: u64,
    /// Smallest observed slack (`rhs - lhs` or equivalent); negative when
    /// some trial failed.
    pub worst_margin: f64,
    /// Allowed failure frequency for statistical checks. `None` means no
    /// failure is allowed.
    pub tolerance: Option<f64>,
    /// Trials that could not be evaluated.
    pub skipped: u64,
    /// Details of the first few failures.
    pub witnesses: Vec<String>,
    pub notes: Vec<String>,
}

impl LemmaResult {
    pub fn new(lemma: impl Into<String>) -> Self {
        Self {
            lemma: lemma.into(),
            trials: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            tolerance: None,
            skipped: 0,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Books one trial with slack `margin`; it fails when `ok` is false.
    pub fn record(&mut self, margin: f64, ok: bool, witness: impl FnOnce() -> String) {
        self.trials += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        if !ok {
            self.failures += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }

    /// Combines results of the same check computed on disjoint trials.
    pub fn merge(&mut self, other: LemmaResult) {
        self.trials += other.trials;
        self.failures += other.failures;
        self.skipped += other.skipped;
        self.worst_margin = self.worst_margin.min(other.worst_margin);
        for w in other.witnesses {
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(w);
            }
        }
        self.notes.extend(other.notes);
    }

    pub fn failure_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }

    pub fn passed(&self) -> bool {
        match self.tolerance {
            None => self.failures == 0,
            Some(t) => self.failure_rate() <= t,
        }
    }
}

impl fmt::Display for LemmaResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<24} {:>9} {:>9} {:>9} {:>14.6e}  {}",
            self.lemma,
            self.trials,
            self.failures,
            self.skipped,
            self.worst_margin,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Aligned text table of results.
pub fn format_results(results: &[LemmaResult]) -> String {
    let mut out = format!(
        "{:<24} {:>9} {:>9} {:>9} {:>14}  status\n",
        "check", "trials", "failures", "skipped", "worst_margin"
    );
    for r in results {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

/// Checks `R* - R(best in I x J) <= 6 d^3 (gap_I + gap_J) / c_max` for
/// every pair of subsets.
pub fn check_lemma2(inst: &HottTopicsInstance) -> Result<LemmaResult> {
    let o = oracle_quantities(inst)?;
    let d = inst.d() as f64;
    let scale = 6.0 * d.powi(3) / o.c_max;
    let mut res = LemmaResult::new("lemma2");
    for (rows, gi) in &o.gaps_rows {
        for (cols, gj) in &o.gaps_cols {
            let (_, _, best) = inst.best_entry_in(rows, cols);
            let lhs = o.best_value - best;
            let rhs = scale * (gi + gj);
            res.record(rhs - lhs, lhs <= rhs + FP_SLACK, || {
                format!("I={rows} J={cols} lhs={lhs:e} rhs={rhs:e}")
            });
        }
    }
    Ok(res)
}

/// Permutation minimizing `sum_i ||e_i - Z(pi(i), :)||_2`, with that sum.
/// The first minimizer in lexicographic order is returned.
pub fn lemma4_witness(z: &Matrix) -> Result<(Vec<usize>, f64)> {
    if !z.is_square() {
        return Err(Error::Dimension(format!("Z must be square, got {}x{}", z.rows(), z.cols())));
    }
    let d = z.rows();
    if d > 8 {
        return Err(Error::Domain(format!("permutation search limited to d <= 8, got {d}")));
    }
    // dist[i][r] = ||e_i - Z(r, :)||
    let dist: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|r| {
                    z.row(r)
                        .iter()
                        .enumerate()
                        .map(|(c, &x)| {
                            let e = if c == i { 1.0 } else { 0.0 };
                            (e - x) * (e - x)
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let mut perm: Vec<usize> = (0..d).collect();
    let mut best = (perm.clone(), f64::INFINITY);
    loop {
        let s: f64 = perm.iter().enumerate().map(|(i, &r)| dist[i][r]).sum();
        if s < best.1 {
            best = (perm.clone(), s);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(best)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Adversarial matrices for the permutation inequality: identity, every
/// permutation matrix (all of them for `d <= 4`), zero, repeated rows,
/// near-identity, and the uniform rank-one matrix.
pub fn lemma4_corpus(d: usize) -> Vec<(String, Matrix)> {
    let mut out = Vec::new();
    let from = |f: &dyn Fn(usize, usize) -> f64| {
        let data = (0..d * d).map(|k| f(k / d, k % d)).collect();
        Matrix::from_row_major(d, d, data).expect("square data")
    };
    out.push(("identity".to_string(), from(&|i, j| (i == j) as u8 as f64)));
    out.push(("zero".to_string(), from(&|_, _| 0.0)));
    out.push(("repeated-e1".to_string(), from(&|_, j| (j == 0) as u8 as f64)));
    if d >= 2 {
        out.push((
            "one-repeated-row".to_string(),
            from(&|i, j| if i == d - 1 { (j == 0) as u8 as f64 } else { (i == j) as u8 as f64 }),
        ));
    }
    for eps in [1e-9, 1e-6, 1e-3, 1e-1] {
        out.push((format!("scaled-identity-{eps:e}"), from(&|i, j| (1.0 - eps) * (i == j) as u8 as f64)));
        out.push((
            format!("leaky-identity-{eps:e}"),
            from(&|i, j| if i == j { 1.0 - eps } else { eps / d as f64 }),
        ));
    }
    out.push(("uniform".to_string(), from(&|_, _| 1.0 / d as f64)));
    let mut perm: Vec<usize> = (0..d).collect();
    let mut count = 0;
    while next_permutation(&mut perm) {
        if d > 4 && count >= 24 {
            break;
        }
        let p = perm.clone();
        out.push((format!("permutation-{p:?}"), from(&|i, j| (p[i] == j) as u8 as f64)));
        count += 1;
    }
    out
}

/// Checks that some permutation satisfies
/// `sum_i ||e_i - Z(pi(i), :)||_2 <= 6 d^{3/2} (1 - det^2 Z)` on the
/// adversarial corpus plus `trials` random `Z` with rows in the simplex.
pub fn check_lemma4<R: Rng + ?Sized>(d: usize, trials: u64, rng: &mut R) -> Result<LemmaResult> {
    if d == 0 || d > 6 {
        return Err(Error::Domain(format!("rank must be in 1..=6, got {d}")));
    }
    let mut res = LemmaResult::new(format!("lemma4-d{d}"));
    let rhs_scale = 6.0 * (d as f64).powf(1.5);
    let check = |label: &str, z: &Matrix, res: &mut LemmaResult| -> Result<()> {
        let (perm, lhs) = lemma4_witness(z)?;
        let dz = det(z)?;
        let rhs = rhs_scale * (1.0 - dz * dz);
        res.record(rhs - lhs, lhs <= rhs + FP_SLACK, || {
            format!("{label}: lhs={lhs:e} rhs={rhs:e} best permutation {perm:?}")
        });
        Ok(())
    };
    for (label, z) in lemma4_corpus(d) {
        check(&label, &z, &mut res)?;
    }
    let gamma = Gamma::new(1.0, 1.0).map_err(|e| Error::Internal(e.to_string()))?;
    for t in 0..trials {
        // Alternate uniform simplex rows with perturbed permutation matrices,
        // which are the nearly tight cases.
        let mut data = vec![0.0; d * d];
        let eps = if t % 2 == 0 { 1.0 } else { 10f64.powf(-rng.random_range(1.0..6.0)) };
        let mut perm: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        for i in 0..d {
            let g: Vec<f64> = (0..=d).map(|_| gamma.sample(rng)).collect();
            let s: f64 = g.iter().sum();
            for j in 0..d {
                let uniform = g[j] / s;
                let spike = (perm[i] == j) as u8 as f64;
                data[i * d + j] = (1.0 - eps) * spike + eps * uniform;
            }
        }
        let z = Matrix::from_row_major(d, d, data)?;
        check(&format!("random-{t}"), &z, &mut res)?;
    }
    Ok(res)
}

/// True averages the row and column estimates of `stage` target:
/// `sum_J p(J) det^2(R(I, J))` for rows and symmetrically for columns,
/// with `p` the stage's draw probabilities.
pub fn stage_targets(inst: &HottTopicsInstance, stage: &StageState) -> Result<(Vec<f64>, Vec<f64>)> {
    let rbar = inst.rbar();
    let vol = |rows: &DSubset, cols: &DSubset| -> Result<f64> {
        let x = det(&submatrix(rbar, rows, cols)?)?;
        Ok(x * x)
    };
    let mut row_t = Vec::with_capacity(stage.rows.len());
    for r in &stage.rows {
        let mut s = 0.0;
        for c in &stage.cols {
            if c.draw_prob > 0.0 {
                s += c.draw_prob * vol(&r.subset, &c.subset)?;
            }
        }
        row_t.push(s);
    }
    let mut col_t = Vec::with_capacity(stage.cols.len());
    for c in &stage.cols {
        let mut s = 0.0;
        for r in &stage.rows {
            if r.draw_prob > 0.0 {
                s += r.draw_prob * vol(&r.subset, &c.subset)?;
            }
        }
        col_t.push(s);
    }
    Ok((row_t, col_t))
}

/// One run with its interval checks.
struct Instrumented {
    trace: RegretTrace,
    /// Smallest `delta - |mu_hat - target|` over all intervals.
    margin: f64,
    first_miss: Option<String>,
}

fn instrumented_runs(
    inst: &HottTopicsInstance,
    noise: &NoiseModel,
    n: u64,
    runs: u64,
    seed: u64,
    exploration: Exploration,
) -> Result<Vec<Instrumented>> {
    if runs == 0 {
        return Err(Error::Domain("need at least one run".into()));
    }
    check_enumeration_guard(inst.k(), inst.l(), inst.d())?;
    par_map(runs, |r| {
        let cfg = ElimConfig::new(n, seed).with_stream(r).with_exploration(exploration).without_steps();
        let trace = lowrank_elim(inst, noise, &cfg)?;
        let mut margin = f64::INFINITY;
        let mut first_miss = None;
        for st in &trace.stages {
            let (rt, ct) = stage_targets(inst, st)?;
            let pairs = st
                .rows
                .iter()
                .zip(&rt)
                .map(|(e, t)| (Side::Row, e, t))
                .chain(st.cols.iter().zip(&ct).map(|(e, t)| (Side::Col, e, t)));
            for (side, e, &t) in pairs {
                let m = st.delta - (e.mu_hat - t).abs();
                margin = margin.min(m);
                if m < 0.0 && first_miss.is_none() {
                    first_miss = Some(format!(
                        "run {r} stage {} {side:?} {}: estimate {:.6} target {:.6} radius {:.6}",
                        st.ell, e.subset, e.mu_hat, t, st.delta
                    ));
                }
            }
        }
        Ok(Instrumented {
            trace,
            margin,
            first_miss,
        })
    })
    .into_iter()
    .collect()
}

/// Fraction of runs in which some confidence interval missed its target,
/// against the allowance `4/n + 3 sqrt((4/n)(1 - 4/n) / runs)`.
pub fn check_concentration(
    inst: &HottTopicsInstance,
    noise: &NoiseModel,
    n: u64,
    runs: u64,
    seed: u64,
) -> Result<LemmaResult> {
    let out = instrumented_runs(inst, noise, n, runs, seed, Exploration::Restricted)?;
    let mut res = LemmaResult::new("concentration");
    let p = (4.0 / n as f64).min(1.0);
    res.tolerance = Some(p + 3.0 * (p * (1.0 - p) / runs as f64).sqrt());
    let mut intervals = 0usize;
    for run in out {
        intervals += run.trace.stages.iter().map(|s| s.rows.len() + s.cols.len()).sum::<usize>();
        let miss = run.first_miss.clone();
        res.record(run.margin, miss.is_none(), || miss.unwrap_or_default());
    }
    res.notes.push(format!("{intervals} intervals checked"));
    Ok(res)
}

/// First stage `m` with `2^-m < c_min * gap / 2`.
pub fn predicted_stage(c_min: f64, gap: f64) -> Option<usize> {
    let target = c_min * gap / 2.0;
    if target.is_nan() || target <= 0.0 {
        return None;
    }
    (0..1100).find(|&m| 0.5f64.powi(m as i32) < target)
}

/// On runs whose intervals all held, every suboptimal subset must be gone
/// by its predicted stage, and the optimal ones must never be eliminated.
/// A subset still active in a run that ended before its predicted stage
/// is counted as skipped.
pub fn check_elimination_stage(
    inst: &HottTopicsInstance,
    noise: &NoiseModel,
    n: u64,
    runs: u64,
    seed: u64,
) -> Result<LemmaResult> {
    let o = oracle_quantities(inst)?;
    let out = instrumented_runs(inst, noise, n, runs, seed, Exploration::Restricted)?;
    let mut res = LemmaResult::new("elimination-stage");
    let mut unclean = 0;
    for (r, run) in out.iter().enumerate() {
        if run.first_miss.is_some() {
            unclean += 1;
            continue;
        }
        check_run_stages(&o, &run.trace, r, &mut res);
    }
    res.notes.push(format!("{} clean runs, {unclean} runs with a missed interval", out.len() - unclean));
    Ok(res)
}

fn check_run_stages(o: &OracleQuantities, trace: &RegretTrace, run: usize, res: &mut LemmaResult) {
    for (side, gaps, best) in [
        (Side::Row, &o.gaps_rows, &o.best_drow),
        (Side::Col, &o.gaps_cols, &o.best_dcol),
    ] {
        let eliminated_at = |s: &DSubset| {
            trace
                .eliminations
                .iter()
                .find(|e| e.side == side && &e.subset == s)
                .map(|e| e.stage)
        };
        if let Some(stage) = eliminated_at(best) {
            res.record(-1.0, false, || format!("run {run}: optimal {side:?} {best} eliminated in stage {stage}"));
        }
        for (s, &gap) in gaps {
            if s == best {
                continue;
            }
            let Some(m) = predicted_stage(o.c_min, gap) else {
                res.skipped += 1;
                continue;
            };
            match eliminated_at(s) {
                Some(stage) => res.record(m as f64 - stage as f64, stage <= m, || {
                    format!("run {run}: {side:?} {s} eliminated in stage {stage}, predicted {m}")
                }),
                None if trace.completed_stages > m => res.record(-1.0, false, || {
                    format!("run {run}: {side:?} {s} still active after stage {m}")
                }),
                None => res.skipped += 1,
            }
        }
    }
}

/// Monte-Carlo check of the stage estimator for one subset with a fixed
/// opposite active set drawn uniformly.
///
/// Every sampled product is checked against `det_max(d)^2`; the sample mean
/// must lie within three standard errors of the true average volume, which
/// adds one failure otherwise.
pub fn check_estimator(
    inst: &HottTopicsInstance,
    noise: &NoiseModel,
    side: Side,
    subset: &DSubset,
    opposite: &[DSubset],
    samples: u64,
    seed: u64,
) -> Result<LemmaResult> {
    if opposite.is_empty() || samples < 2 {
        return Err(Error::Domain("need a nonempty opposite set and at least two samples".into()));
    }
    let d = inst.d();
    let (own_n, opp_n) = match side {
        Side::Row => (inst.k(), inst.l()),
        Side::Col => (inst.l(), inst.k()),
    };
    if subset.len() != d || subset.indices().iter().any(|&i| i >= own_n) {
        return Err(Error::Dimension(format!("subset {subset} does not fit the instance")));
    }
    if opposite.iter().any(|s| s.len() != d || s.indices().iter().any(|&i| i >= opp_n)) {
        return Err(Error::Dimension("opposite subsets do not fit the instance".into()));
    }
    let sampler = RewardSampler::new(inst, noise)?;
    let rbar = inst.rbar();
    fn pair<'a>(side: Side, subset: &'a DSubset, other: &'a DSubset) -> (&'a DSubset, &'a DSubset) {
        match side {
            Side::Row => (subset, other),
            Side::Col => (other, subset),
        }
    }
    let mut target = 0.0;
    for other in opposite {
        let (r, c) = pair(side, subset, other);
        let x = det(&submatrix(rbar, r, c)?)?;
        target += x * x;
    }
    target /= opposite.len() as f64;

    let bound = det_max(d)?.powi(2);
    let mut rng = stream_rng(seed, 0);
    let mut res = LemmaResult::new(format!("estimator-{}", if side == Side::Row { "row" } else { "col" }));
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut buf = vec![0.0; d * d];
    for t in 0..samples {
        let other = &opposite[rng.random_range(0..opposite.len())];
        let (r, c) = pair(side, subset, other);
        let mut prod = 1.0;
        for _ in 0..2 {
            for (a, &i) in r.indices().iter().enumerate() {
                for (b, &j) in c.indices().iter().enumerate() {
                    buf[a * d + b] = sampler.sample(i, j, &mut rng);
                }
            }
            prod *= det_square(&buf, d);
        }
        sum += prod;
        sum_sq += prod * prod;
        let slack = bound - prod.abs();
        res.record(slack, slack >= -FP_SLACK, || format!("sample {t}: |product| = {} > {bound}", prod.abs()));
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    let se = (var / m).sqrt();
    let dev = (mean - target).abs();
    res.notes.push(format!("mean {mean:.6} target {target:.6} standard error {se:.3e}"));
    if dev > 3.0 * se + FP_SLACK {
        res.failures += 1;
        res.witnesses.push(format!("mean {mean} is {dev:e} from target {target}, 3 se = {:e}", 3.0 * se));
    }
    res.worst_margin = res.worst_margin.min(3.0 * se - dev);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::generate_instance;
    use crate::matcore::enum_subsets;

    #[test]
    fn lemma2_rank_one_example() {
        let inst = HottTopicsInstance::rank_one(&[0.9, 0.3], &[0.8, 0.2]).unwrap();
        let r = check_lemma2(&inst).unwrap();
        assert_eq!(r.trials, 4);
        assert!(r.passed());
        // (I*, J*) gives equality.
        assert_eq!(r.worst_margin, 0.0);
    }

    #[test]
    fn lemma2_generated() {
        for seed in 0..10 {
            let inst = generate_instance(5, 6, 2, seed, 1e-4, 0.0).unwrap();
            assert!(check_lemma2(&inst).unwrap().passed());
        }
    }

    #[test]
    fn permutations_enumerate() {
        let mut p = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut p) {
            n += 1;
        }
        assert_eq!(n, 24);
        assert_eq!(p, vec![3, 2, 1, 0]);
    }

    #[test]
    fn lemma4_examples() {
        let (perm, lhs) = lemma4_witness(&Matrix::identity(3).unwrap()).unwrap();
        assert_eq!((perm, lhs), (vec![0, 1, 2], 0.0));
        let z = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let (perm, lhs) = lemma4_witness(&z).unwrap();
        assert_eq!(perm, vec![0, 1]);
        assert!((lhs - 2f64.sqrt()).abs() < 1e-15);
        let rhs = 6.0 * 2f64.powf(1.5);
        assert!((rhs - 16.970_562_748_477_14).abs() < 1e-12);
        let swapped = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(lemma4_witness(&swapped).unwrap(), (vec![1, 0], 0.0));
    }

    #[test]
    fn lemma4_small_suite() {
        let mut rng = stream_rng(5, 0);
        for d in 1..=4 {
            let r = check_lemma4(d, 500, &mut rng).unwrap();
            assert!(r.passed(), "{r}");
            assert!(r.trials >= 500 + lemma4_corpus(d).len() as u64);
        }
        assert!(check_lemma4(7, 1, &mut rng).is_err());
    }

    #[test]
    fn corpus_has_extremes() {
        for d in 1..=5 {
            let c = lemma4_corpus(d);
            assert!(c.iter().any(|(n, z)| n == "identity" && det(z).unwrap() == 1.0));
            assert!(c.iter().any(|(_, z)| det(z).unwrap() == 0.0));
        }
    }

    #[test]
    fn predicted_stage_values() {
        assert_eq!(predicted_stage(1.0, 4.0), Some(0));
        assert_eq!(predicted_stage(0.49, 0.36), Some(4));
        assert_eq!(predicted_stage(0.49, 0.51), Some(4));
        assert_eq!(predicted_stage(0.5, 0.5), Some(4));
        assert_eq!(predicted_stage(0.5, 0.6), Some(3));
        assert_eq!(predicted_stage(0.0, 0.5), None);
        assert_eq!(predicted_stage(0.5, 0.0), None);
    }

    #[test]
    fn noiseless_concentration_never_misses() {
        let inst = generate_instance(4, 4, 2, 8, 1e-3, 0.0).unwrap();
        let r = check_concentration(&inst, &NoiseModel::noiseless(), 100_000, 3, 1).unwrap();
        assert_eq!(r.failures, 0);
        assert!(r.worst_margin > 0.0);
    }

    #[test]
    fn singleton_targets_are_pair_volumes() {
        use crate::bandit::SubsetEstimate;
        let inst = HottTopicsInstance::rank_one(&[0.9, 0.3], &[0.8, 0.2]).unwrap();
        let est = |i: usize, p: f64| SubsetEstimate {
            subset: DSubset::new(vec![i], 2).unwrap(),
            mu_hat: 0.0,
            ucb: 0.0,
            lcb: 0.0,
            draw_prob: p,
        };
        let st = StageState {
            ell: 0,
            delta_tilde: 1.0,
            n_ell: 1,
            delta: 1.0,
            rows: vec![est(1, 1.0)],
            cols: vec![est(0, 0.5), est(1, 0.5)],
            observations: 0,
            entries_observed: 0,
        };
        let (rt, ct) = stage_targets(&inst, &st).unwrap();
        // A single active row: each column target is one squared entry.
        assert!((ct[0] - (0.3f64 * 0.8).powi(2)).abs() < 1e-15);
        assert!((ct[1] - (0.3f64 * 0.2).powi(2)).abs() < 1e-15);
        let mean = 0.5 * ((0.3f64 * 0.8).powi(2) + (0.3f64 * 0.2).powi(2));
        assert!((rt[0] - mean).abs() < 1e-15);
    }

    #[test]
    fn noiseless_elimination_stages_hold() {
        let inst = HottTopicsInstance::rank_one(&[1.0, 0.8, 0.75, 0.7], &[0.7, 1.0, 0.8, 0.75]).unwrap();
        let r = check_elimination_stage(&inst, &NoiseModel::noiseless(), 2_000_000, 2, 0).unwrap();
        assert!(r.passed(), "{:?}", r.witnesses);
        assert_eq!(r.trials, 2 * 6);
        assert_eq!(r.skipped, 0);
    }

    #[test]
    fn estimator_small_run() {
        let inst = generate_instance(4, 4, 2, 2, 1e-3, 0.0).unwrap();
        let subset = DSubset::new(vec![1, 3], 4).unwrap();
        let opp = enum_subsets(4, 2).unwrap();
        let r = check_estimator(&inst, &NoiseModel::Bernoulli, Side::Row, &subset, &opp, 20_000, 4).unwrap();
        assert!(r.passed(), "{:?} {:?}", r.witnesses, r.notes);
        let r = check_estimator(&inst, &NoiseModel::noiseless(), Side::Col, &subset, &opp[..1], 100, 4).unwrap();
        assert!(r.worst_margin >= -1e-12);
    }
}
