//! `LowRankElim`: staged elimination of `d`-rows and `d`-columns by
//! confidence bounds on their scaled squared volumes.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{check_enumeration_guard, HottTopicsInstance, NoiseModel, RewardSampler};
use crate::error::{Error, Result};
use crate::matcore::{det, det_max, det_square, enum_subsets, DSubset, Matrix};
use crate::rng::{stream_rng, SimRng};

use super::trace::{Elimination, RegretTrace, Side, StepRecord};

/// How the instantaneous regret of an observed submatrix is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegretMode {
    /// `R(i*, j*) - R(i*(I, J), j*(I, J))`.
    #[default]
    BestEntry,
    /// `sum R(I*, J*) - sum R(I, J)`. Can be negative for individual steps.
    SumEntries,
}

/// Where the per-step `(I_t, J_t)` come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exploration {
    /// Uniform over the currently active subsets.
    #[default]
    Restricted,
    /// Uniform over all subsets; eliminated draws are replaced by following
    /// the chain of eliminators to an active subset.
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElimConfig {
    /// Total budget `n`. Each observed `d x d` submatrix uses one unit.
    pub horizon: u64,
    #[serde(default)]
    pub regret_mode: RegretMode,
    #[serde(default)]
    pub exploration: Exploration,
    pub seed: u64,
    /// Stream of [`crate::rng::stream_rng`] used for this run.
    #[serde(default)]
    pub stream: u64,
    /// Charge realized reward differences instead of mean differences. The
    /// benchmark entries are drawn from a separate stream, so the learner's
    /// trajectory does not change.
    #[serde(default)]
    pub realized_regret: bool,
    /// Keep per-step records. Long analysis runs turn this off.
    #[serde(default = "default_true")]
    pub record_steps: bool,
}

fn default_true() -> bool {
    true
}

impl ElimConfig {
    pub fn new(horizon: u64, seed: u64) -> Self {
        Self {
            horizon,
            regret_mode: RegretMode::BestEntry,
            exploration: Exploration::Restricted,
            seed,
            stream: 0,
            realized_regret: false,
            record_steps: true,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_exploration(mut self, e: Exploration) -> Self {
        self.exploration = e;
        self
    }

    pub fn with_regret_mode(mut self, m: RegretMode) -> Self {
        self.regret_mode = m;
        self
    }

    pub fn without_steps(mut self) -> Self {
        self.record_steps = false;
        self
    }
}

/// Estimate and confidence interval of one active subset at the end of a
/// stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetEstimate {
    pub subset: DSubset,
    pub mu_hat: f64,
    pub ucb: f64,
    pub lcb: f64,
    /// Probability that this subset is the stage's `I_t` (or `J_t`).
    pub draw_prob: f64,
}

/// Snapshot of a completed stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageState {
    pub ell: usize,
    pub delta_tilde: f64,
    pub n_ell: u64,
    /// Confidence radius `sqrt(C(n) / n_ell)`.
    pub delta: f64,
    /// Active `d`-rows during the stage, in lexicographic order.
    pub rows: Vec<SubsetEstimate>,
    pub cols: Vec<SubsetEstimate>,
    /// Budget units consumed by the stage.
    pub observations: u64,
    /// Individual matrix entries sampled by the stage.
    pub entries_observed: u64,
}

impl StageState {
    pub fn active_rows(&self) -> impl Iterator<Item = &DSubset> {
        self.rows.iter().map(|e| &e.subset)
    }

    pub fn active_cols(&self) -> impl Iterator<Item = &DSubset> {
        self.cols.iter().map(|e| &e.subset)
    }
}

/// Confidence-radius scale `4 det_max(d)^2 ln((K^d + L^d) n)`.
pub fn c_of_n(k: usize, l: usize, d: usize, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let dm = det_max(d)?;
    let exp = u32::try_from(d).map_err(|_| Error::Domain(format!("rank {d} too large")))?;
    let pow = |b: usize| (b as u128).checked_pow(exp);
    let total = pow(k)
        .zip(pow(l))
        .and_then(|(a, b)| a.checked_add(b))
        .ok_or_else(|| Error::Domain(format!("K^d + L^d overflows for K={k}, L={l}, d={d}")))?;
    Ok(4.0 * dm * dm * ((total as f64).ln() + (n as f64).ln()))
}

/// `n_ell = ceil(4 * 4^ell * C(n))`, saturating.
pub fn stage_length(c: f64, ell: usize) -> u64 {
    let v = (4.0 * 4f64.powi(ell as i32) * c).ceil();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v as u64
    }
}

/// Mean of `det(obs1[t]) * det(obs2[t])` over `t`.
pub fn stage_estimate(obs1: &[Matrix], obs2: &[Matrix]) -> Result<f64> {
    if obs1.len() != obs2.len() {
        return Err(Error::Dimension(format!(
            "observation lists differ in length: {} vs {}",
            obs1.len(),
            obs2.len()
        )));
    }
    if obs1.is_empty() {
        return Err(Error::Domain("need at least one observation pair".into()));
    }
    let mut s = 0.0;
    for (a, b) in obs1.iter().zip(obs2) {
        s += det(a)? * det(b)?;
    }
    Ok(s / obs1.len() as f64)
}

/// For every index covered by `active`, the lexicographically smallest
/// active subset containing it.
pub fn explore_cover(active: &[DSubset], ground_size: usize) -> BTreeMap<usize, DSubset> {
    let mut sorted: Vec<&DSubset> = active.iter().collect();
    sorted.sort();
    let mut out = BTreeMap::new();
    for s in sorted {
        for &i in s.indices() {
            if i < ground_size {
                out.entry(i).or_insert_with(|| s.clone());
            }
        }
    }
    out
}

/// Follows `eliminated -> eliminator` links from `drawn` until reaching a
/// subset that has not been eliminated.
pub fn chain_replace(drawn: &DSubset, elim_map: &HashMap<DSubset, DSubset>) -> Result<DSubset> {
    let mut cur = drawn;
    for _ in 0..=elim_map.len() {
        match elim_map.get(cur) {
            Some(next) => cur = next,
            None => return Ok(cur.clone()),
        }
    }
    Err(Error::Internal(format!("elimination chain from {drawn} has a cycle")))
}

/// Id-based [`chain_replace`] over a whole side.
fn resolve_chains(eliminated_by: &[Option<usize>]) -> Result<Vec<usize>> {
    let n = eliminated_by.len();
    (0..n)
        .map(|start| {
            let mut cur = start;
            for _ in 0..=n {
                match eliminated_by[cur] {
                    Some(next) => cur = next,
                    None => return Ok(cur),
                }
            }
            Err(Error::Internal(format!("elimination chain from subset #{start} has a cycle")))
        })
        .collect()
}

/// Per-side elimination state.
struct SideState {
    subsets: Vec<DSubset>,
    active: Vec<usize>,
    eliminated_by: Vec<Option<usize>>,
    /// `(index, covering subset id)` for every covered index.
    cover: Vec<(usize, usize)>,
    /// Maps any subset id to the active id it is drawn as.
    resolve: Vec<usize>,
    /// Running sum of determinant products per active position.
    sums: Vec<f64>,
    /// Latest noisy observation per index, `ground x d`, for `k = 1, 2`.
    obs: [Vec<f64>; 2],
}

impl SideState {
    fn new(subsets: Vec<DSubset>, ground: usize, d: usize) -> Self {
        let n = subsets.len();
        Self {
            subsets,
            active: (0..n).collect(),
            eliminated_by: vec![None; n],
            cover: Vec::new(),
            resolve: (0..n).collect(),
            sums: Vec::new(),
            obs: [vec![0.0; ground * d], vec![0.0; ground * d]],
        }
    }

    fn begin_stage(&mut self, exploration: Exploration) -> Result<()> {
        let mut seen = BTreeMap::new();
        for &id in &self.active {
            for &i in self.subsets[id].indices() {
                seen.entry(i).or_insert(id);
            }
        }
        self.cover = seen.into_iter().collect();
        self.sums = vec![0.0; self.active.len()];
        if exploration == Exploration::Chain {
            self.resolve = resolve_chains(&self.eliminated_by)?;
        }
        Ok(())
    }

    fn draw(&self, exploration: Exploration, rng: &mut SimRng) -> usize {
        match exploration {
            Exploration::Restricted => self.active[rng.random_range(0..self.active.len())],
            Exploration::Chain => self.resolve[rng.random_range(0..self.subsets.len())],
        }
    }

    fn draw_probs(&self, exploration: Exploration) -> Vec<f64> {
        match exploration {
            Exploration::Restricted => vec![1.0 / self.active.len() as f64; self.active.len()],
            Exploration::Chain => {
                let total = self.subsets.len() as f64;
                self.active
                    .iter()
                    .map(|&a| self.resolve.iter().filter(|&&r| r == a).count() as f64 / total)
                    .collect()
            }
        }
    }

    fn accumulate(&mut self, d: usize, buf: &mut [f64]) {
        for (pos, &id) in self.active.iter().enumerate() {
            let mut prod = 1.0;
            for k in 0..2 {
                for (a, &i) in self.subsets[id].indices().iter().enumerate() {
                    buf[a * d..(a + 1) * d].copy_from_slice(&self.obs[k][i * d..(i + 1) * d]);
                }
                prod *= det_square(buf, d);
            }
            self.sums[pos] += prod;
        }
    }

    /// Computes estimates, applies the elimination rule, and returns the
    /// stage snapshot entries plus `(eliminated, eliminator)` pairs.
    fn finish_stage(
        &mut self,
        n_ell: u64,
        delta: f64,
        probs: Vec<f64>,
    ) -> (Vec<SubsetEstimate>, Vec<(usize, usize)>) {
        let est: Vec<SubsetEstimate> = self
            .active
            .iter()
            .zip(&self.sums)
            .zip(probs)
            .map(|((&id, &s), p)| {
                let mu = s / n_ell as f64;
                SubsetEstimate {
                    subset: self.subsets[id].clone(),
                    mu_hat: mu,
                    ucb: mu + delta,
                    lcb: mu - delta,
                    draw_prob: p,
                }
            })
            .collect();
        // argmax LCB; strict comparison keeps the lexicographically smallest.
        let mut best = 0;
        for (pos, e) in est.iter().enumerate() {
            if e.lcb > est[best].lcb {
                best = pos;
            }
        }
        let threshold = est[best].lcb;
        let leader = self.active[best];
        let mut removed = Vec::new();
        let mut keep = Vec::with_capacity(self.active.len());
        for (pos, &id) in self.active.iter().enumerate() {
            if est[pos].ucb <= threshold {
                self.eliminated_by[id] = Some(leader);
                removed.push((id, leader));
            } else {
                keep.push(id);
            }
        }
        self.active = keep;
        (est, removed)
    }
}

struct Accounting<'a> {
    inst: &'a HottTopicsInstance,
    sampler: RewardSampler,
    mode: RegretMode,
    best_value: f64,
    best_entry: (usize, usize),
    star_sum: f64,
    bench_rng: Option<SimRng>,
    record: bool,
}

impl Accounting<'_> {
    /// Regret of playing `(rows, cols)` given the sampled entries of that
    /// submatrix; `best` is the position of its best mean entry.
    fn regret(
        &mut self,
        rows: &DSubset,
        cols: &DSubset,
        best_mean: f64,
        best_draw: f64,
        draw_sum: f64,
    ) -> f64 {
        let inst = self.inst;
        match (self.mode, self.bench_rng.as_mut()) {
            (RegretMode::BestEntry, None) => self.best_value - best_mean,
            (RegretMode::SumEntries, None) => self.star_sum - inst.sum_in(rows, cols),
            (RegretMode::BestEntry, Some(rng)) => {
                let (i, j) = self.best_entry;
                self.sampler.sample(i, j, rng) - best_draw
            }
            (RegretMode::SumEntries, Some(rng)) => {
                let mut s = 0.0;
                for &i in inst.base_rows().indices() {
                    for &j in inst.base_cols().indices() {
                        s += self.sampler.sample(i, j, rng);
                    }
                }
                s - draw_sum
            }
        }
    }
}

/// Runs `LowRankElim` for `cfg.horizon` budget units.
pub fn lowrank_elim(
    inst: &HottTopicsInstance,
    noise: &NoiseModel,
    cfg: &ElimConfig,
) -> Result<RegretTrace> {
    if cfg.horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let (k, l, d) = (inst.k(), inst.l(), inst.d());
    check_enumeration_guard(k, l, d)?;
    let n = cfg.horizon;
    let c = c_of_n(k, l, d, n)?;

    let mut rows = SideState::new(enum_subsets(k, d)?, k, d);
    let mut cols = SideState::new(enum_subsets(l, d)?, l, d);
    let mut trace = RegretTrace::new(n, rows.subsets.clone(), cols.subsets.clone());

    let ((bi, bj), best_value) = inst.rbar().max_entry();
    let mut acct = Accounting {
        inst,
        sampler: RewardSampler::new(inst, noise)?,
        mode: cfg.regret_mode,
        best_value,
        best_entry: (bi, bj),
        star_sum: inst.sum_in(inst.base_rows(), inst.base_cols()),
        bench_rng: cfg
            .realized_regret
            .then(|| stream_rng(cfg.seed ^ 0x9e37_79b9_7f4a_7c15, cfg.stream)),
        record: cfg.record_steps,
    };
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let mut buf = vec![0.0; d * d];

    let mut ell = 0usize;
    loop {
        if rows.active.len() == 1 && cols.active.len() == 1 {
            play_survivors(&rows, &cols, &mut acct, &mut rng, &mut trace);
            break;
        }
        let n_ell = stage_length(c, ell);
        rows.begin_stage(cfg.exploration)?;
        cols.begin_stage(cfg.exploration)?;
        let units_before = trace.observations_used;
        let mut entries = 0u64;

        let mut finished = true;
        'steps: for _ in 0..n_ell {
            let it = rows.draw(cfg.exploration, &mut rng);
            let jt = cols.draw(cfg.exploration, &mut rng);
            for kk in 0..2 {
                for ci in 0..rows.cover.len() {
                    if trace.observations_used >= n {
                        finished = false;
                        break 'steps;
                    }
                    let (_, sid) = rows.cover[ci];
                    observe(
                        &mut acct, &mut rng, &mut trace, Side::Row, sid, jt, &rows.subsets,
                        &cols.subsets, &mut rows.obs[kk], d,
                    );
                    entries += (d * d) as u64;
                }
                for ci in 0..cols.cover.len() {
                    if trace.observations_used >= n {
                        finished = false;
                        break 'steps;
                    }
                    let (_, sid) = cols.cover[ci];
                    observe(
                        &mut acct, &mut rng, &mut trace, Side::Col, sid, it, &cols.subsets,
                        &rows.subsets, &mut cols.obs[kk], d,
                    );
                    entries += (d * d) as u64;
                }
            }
            rows.accumulate(d, &mut buf);
            cols.accumulate(d, &mut buf);
        }
        if !finished {
            // Partial stages are discarded.
            trace.budget_exhausted_in_first_stage = ell == 0;
            break;
        }

        let delta = (c / n_ell as f64).sqrt();
        let row_probs = rows.draw_probs(cfg.exploration);
        let col_probs = cols.draw_probs(cfg.exploration);
        let (row_est, row_gone) = rows.finish_stage(n_ell, delta, row_probs);
        let (col_est, col_gone) = cols.finish_stage(n_ell, delta, col_probs);
        for (side, gone, subsets) in [
            (Side::Row, row_gone, &rows.subsets),
            (Side::Col, col_gone, &cols.subsets),
        ] {
            for (id, by) in gone {
                trace.eliminations.push(Elimination {
                    stage: ell,
                    side,
                    subset: subsets[id].clone(),
                    eliminator: subsets[by].clone(),
                });
            }
        }
        trace.stages.push(StageState {
            ell,
            delta_tilde: 0.5f64.powi(ell as i32),
            n_ell,
            delta,
            rows: row_est,
            cols: col_est,
            observations: trace.observations_used - units_before,
            entries_observed: entries,
        });
        trace.completed_stages += 1;
        ell += 1;
        if trace.observations_used >= n {
            break;
        }
    }

    trace.final_rows = rows.active.iter().map(|&i| rows.subsets[i].clone()).collect();
    trace.final_cols = cols.active.iter().map(|&i| cols.subsets[i].clone()).collect();
    Ok(trace)
}

/// Observes subset `own` over the opposite subset `other`, storing the
/// samples row-wise by `own`'s indices, and books one budget unit.
#[allow(clippy::too_many_arguments)]
fn observe(
    acct: &mut Accounting<'_>,
    rng: &mut SimRng,
    trace: &mut RegretTrace,
    side: Side,
    own: usize,
    other: usize,
    own_subsets: &[DSubset],
    other_subsets: &[DSubset],
    store: &mut [f64],
    d: usize,
) {
    let a_set = &own_subsets[own];
    let b_set = &other_subsets[other];
    let rbar = acct.inst.rbar();
    let mut best_mean = f64::NEG_INFINITY;
    let mut best_draw = 0.0;
    let mut draw_sum = 0.0;
    for &a in a_set.indices() {
        for (b_pos, &b) in b_set.indices().iter().enumerate() {
            let (i, j) = match side {
                Side::Row => (a, b),
                Side::Col => (b, a),
            };
            let x = acct.sampler.sample(i, j, rng);
            store[a * d + b_pos] = x;
            draw_sum += x;
            let m = rbar[(i, j)];
            if m > best_mean {
                best_mean = m;
                best_draw = x;
            }
        }
    }
    let (rows, cols) = match side {
        Side::Row => (a_set, b_set),
        Side::Col => (b_set, a_set),
    };
    let regret = acct.regret(rows, cols, best_mean, best_draw, draw_sum);
    book(trace, acct.record, side, own, other, best_draw, regret);
}

fn book(trace: &mut RegretTrace, record: bool, side: Side, own: usize, other: usize, reward: f64, regret: f64) {
    trace.observations_used += 1;
    trace.cumulative_regret += regret;
    if record {
        let (row, col) = match side {
            Side::Row => (own, other),
            Side::Col => (other, own),
        };
        trace.steps.push(StepRecord {
            step: trace.observations_used,
            row: row as u32,
            col: col as u32,
            reward,
            regret,
        });
    }
}

/// Plays the best entry of the single surviving pair until the budget ends.
fn play_survivors(
    rows: &SideState,
    cols: &SideState,
    acct: &mut Accounting<'_>,
    rng: &mut SimRng,
    trace: &mut RegretTrace,
) {
    let (rid, cid) = (rows.active[0], cols.active[0]);
    let (r_set, c_set) = (&rows.subsets[rid], &cols.subsets[cid]);
    let (bi, bj, best_mean) = acct.inst.best_entry_in(r_set, c_set);
    if trace.observations_used < trace.horizon {
        trace.converged_at = Some(trace.observations_used);
    }
    let needs_draws = acct.record || acct.bench_rng.is_some();
    let realized_sum = acct.bench_rng.is_some() && acct.mode == RegretMode::SumEntries;
    while trace.observations_used < trace.horizon {
        let draw = if needs_draws {
            acct.sampler.sample(bi, bj, rng)
        } else {
            best_mean
        };
        let mut draw_sum = 0.0;
        if realized_sum {
            for &i in r_set.indices() {
                for &j in c_set.indices() {
                    draw_sum += acct.sampler.sample(i, j, rng);
                }
            }
        }
        let regret = acct.regret(r_set, c_set, best_mean, draw, draw_sum);
        book(trace, acct.record, Side::Row, rid, cid, draw, regret);
    }
}
