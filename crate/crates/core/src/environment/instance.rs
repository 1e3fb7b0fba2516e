use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{binomial, det_square, dot, enum_subsets, row_block, DSubset, Matrix};

use super::oracle::ENUMERATION_LIMIT;

const SIMPLEX_TOL: f64 = 1e-9;

/// A stochastic low-rank bandit problem whose latent factors satisfy the
/// hott-topics assumption.
///
/// Every row of `u` (and of `v`) is a convex combination of the base rows
/// `u[base_rows]` and the zero vector. The mean reward matrix is `u v^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct HottTopicsInstance {
    k: usize,
    l: usize,
    d: usize,
    u: Matrix,
    v: Matrix,
    rbar: Matrix,
    base_rows: DSubset,
    base_cols: DSubset,
    mixing_u: Matrix,
    mixing_v: Matrix,
    seed: Option<u64>,
    row_labels: Option<Vec<usize>>,
    col_labels: Option<Vec<usize>>,
}

impl HottTopicsInstance {
    /// Builds an instance from explicit factors and validates the
    /// hott-topics structure.
    pub fn from_factors(u: Matrix, v: Matrix, base_rows: DSubset, base_cols: DSubset) -> Result<Self> {
        let d = u.cols();
        if v.cols() != d {
            return Err(Error::Dimension(format!(
                "row factors have rank {d} but column factors have rank {}",
                v.cols()
            )));
        }
        if base_rows.len() != d || base_cols.len() != d {
            return Err(Error::Dimension("base subsets must have exactly d indices".into()));
        }
        let (k, l) = (u.rows(), v.rows());
        if k < d || l < d {
            return Err(Error::Domain(format!("need K, L >= d, got K={k}, L={l}, d={d}")));
        }
        check_simplex_rows(&u, "U")?;
        check_simplex_rows(&v, "V")?;
        let mixing_u = mixing_matrix(&u, &base_rows, "U")?;
        let mixing_v = mixing_matrix(&v, &base_cols, "V")?;
        let rbar = u.mul_transpose(&v)?;

        let inst = Self {
            k,
            l,
            d,
            u,
            v,
            rbar,
            base_rows,
            base_cols,
            mixing_u,
            mixing_v,
            seed: None,
            row_labels: None,
            col_labels: None,
        };
        if binomial(k, d).saturating_add(binomial(l, d)) <= ENUMERATION_LIMIT {
            let c_min = inst.min_sq_volume()?;
            if c_min <= 0.0 {
                return Err(Error::Degenerate(
                    "some d rows or d columns of the latent factors are linearly dependent".into(),
                ));
            }
        }
        Ok(inst)
    }

    /// Rank-1 instance from latent values; the largest value on each side is
    /// taken as the base factor.
    pub fn rank_one(rows: &[f64], cols: &[f64]) -> Result<Self> {
        let argmax = |xs: &[f64]| {
            xs.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        let u = Matrix::from_row_major(rows.len(), 1, rows.to_vec())?;
        let v = Matrix::from_row_major(cols.len(), 1, cols.to_vec())?;
        let br = DSubset::new(vec![argmax(rows)], rows.len())?;
        let bc = DSubset::new(vec![argmax(cols)], cols.len())?;
        Self::from_factors(u, v, br, bc)
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn l(&self) -> usize {
        self.l
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn u(&self) -> &Matrix {
        &self.u
    }
    pub fn v(&self) -> &Matrix {
        &self.v
    }
    pub fn rbar(&self) -> &Matrix {
        &self.rbar
    }
    pub fn base_rows(&self) -> &DSubset {
        &self.base_rows
    }
    pub fn base_cols(&self) -> &DSubset {
        &self.base_cols
    }
    /// Row `i` holds the weights `z` with `U(i, :) = z U(base_rows, :)`.
    pub fn mixing_u(&self) -> &Matrix {
        &self.mixing_u
    }
    pub fn mixing_v(&self) -> &Matrix {
        &self.mixing_v
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    /// Generator-side labels before base rows were moved to the front.
    pub fn row_labels(&self) -> Option<&[usize]> {
        self.row_labels.as_deref()
    }
    pub fn col_labels(&self) -> Option<&[usize]> {
        self.col_labels.as_deref()
    }

    /// `det^2(U(I, :))`.
    pub fn row_sq_volume(&self, rows: &DSubset) -> Result<f64> {
        let b = row_block(&self.u, rows)?;
        Ok(det_square(b.as_slice(), self.d).powi(2))
    }

    /// `det^2(V(J, :))`.
    pub fn col_sq_volume(&self, cols: &DSubset) -> Result<f64> {
        let b = row_block(&self.v, cols)?;
        Ok(det_square(b.as_slice(), self.d).powi(2))
    }

    /// Best entry of `R(I, J)` as `(i, j, value)`; ties go to the first in
    /// row-major order.
    pub fn best_entry_in(&self, rows: &DSubset, cols: &DSubset) -> (usize, usize, f64) {
        let mut best = (rows.indices()[0], cols.indices()[0], f64::NEG_INFINITY);
        for &i in rows.indices() {
            for &j in cols.indices() {
                let r = self.rbar[(i, j)];
                if r > best.2 {
                    best = (i, j, r);
                }
            }
        }
        best
    }

    /// Sum of the means in `R(I, J)`.
    pub fn sum_in(&self, rows: &DSubset, cols: &DSubset) -> f64 {
        rows.indices()
            .iter()
            .flat_map(|&i| cols.indices().iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.rbar[(i, j)])
            .sum()
    }

    fn min_sq_volume(&self) -> Result<f64> {
        let mut c = f64::INFINITY;
        for s in enum_subsets(self.k, self.d)? {
            c = c.min(self.row_sq_volume(&s)?);
        }
        for s in enum_subsets(self.l, self.d)? {
            c = c.min(self.col_sq_volume(&s)?);
        }
        Ok(c)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            k: self.k,
            l: self.l,
            d: self.d,
            u: self.u.as_slice().to_vec(),
            v: self.v.as_slice().to_vec(),
            base_rows: self.base_rows.clone(),
            base_cols: self.base_cols.clone(),
            seed: self.seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_file()).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: InstanceFile =
            serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        f.into_instance()
    }
}

/// On-disk form of an instance. Factor matrices are row-major; subsets are
/// one-based. Floats are written in shortest round-trip form, so a reload
/// reproduces every factor bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    pub base_rows: DSubset,
    pub base_cols: DSubset,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<HottTopicsInstance> {
        let u = Matrix::from_row_major(self.k, self.d, self.u)?;
        let v = Matrix::from_row_major(self.l, self.d, self.v)?;
        let mut inst = HottTopicsInstance::from_factors(u, v, self.base_rows, self.base_cols)?;
        inst.seed = self.seed;
        Ok(inst)
    }
}

/// `R(i, j) = U(i, :) . V(j, :)`.
pub fn mean_reward(inst: &HottTopicsInstance, i: usize, j: usize) -> Result<f64> {
    if i >= inst.k {
        return Err(Error::IndexOutOfRange { index: i, bound: inst.k });
    }
    if j >= inst.l {
        return Err(Error::IndexOutOfRange { index: j, bound: inst.l });
    }
    Ok(dot(inst.u.row(i), inst.v.row(j)))
}

fn check_simplex_rows(m: &Matrix, name: &str) -> Result<()> {
    for i in 0..m.rows() {
        let row = m.row(i);
        if row.iter().any(|&x| !x.is_finite() || x < 0.0) || row.iter().sum::<f64>() > 1.0 + SIMPLEX_TOL
        {
            return Err(Error::Domain(format!(
                "row {} of {name} is outside the standard simplex: {row:?}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Weights `z` with `row = z * base`, by Cramer's rule.
///
/// Returns `None` when `base` is singular.
pub fn mixing_weights(base: &Matrix, row: &[f64]) -> Option<Vec<f64>> {
    let d = base.rows();
    let full = det_square(base.as_slice(), d);
    if full == 0.0 || !full.is_finite() {
        return None;
    }
    let mut work = base.as_slice().to_vec();
    let z = (0..d)
        .map(|k| {
            work[k * d..(k + 1) * d].copy_from_slice(row);
            let v = det_square(&work, d) / full;
            work[k * d..(k + 1) * d].copy_from_slice(base.row(k));
            v
        })
        .collect();
    Some(z)
}

fn mixing_matrix(m: &Matrix, base: &DSubset, name: &str) -> Result<Matrix> {
    let b = row_block(m, base)?;
    let d = m.cols();
    let mut z = Matrix::zeros(m.rows(), d)?;
    for i in 0..m.rows() {
        let w = mixing_weights(&b, m.row(i)).ok_or_else(|| {
            Error::Degenerate(format!("base rows {base} of {name} are linearly dependent"))
        })?;
        if w.iter().any(|&x| x < -SIMPLEX_TOL) || w.iter().sum::<f64>() > 1.0 + SIMPLEX_TOL {
            return Err(Error::Domain(format!(
                "row {} of {name} is not a convex combination of the base rows and zero \
                 (weights {w:?})",
                i + 1
            )));
        }
        z.row_mut(i).copy_from_slice(&w);
    }
    Ok(z)
}

/// Tuning knobs for [`generate_instance_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOptions {
    /// Lower bound on every squared `d`-volume of `U` and `V`.
    pub min_cmin: f64,
    /// Lower bound on every `d`-row and `d`-column gap.
    pub min_gap: f64,
    /// Dirichlet concentration for the base factors. Values below 1 push base
    /// rows toward simplex vertices, which keeps all `d`-volumes away from 0.
    pub base_concentration: f64,
    /// Number of base-factor draws before giving up.
    pub max_attempts: usize,
    /// Consecutive rejected candidate rows before the base is redrawn.
    pub max_row_misses: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            min_cmin: 1e-4,
            min_gap: 0.0,
            base_concentration: 0.1,
            max_attempts: 10_000,
            max_row_misses: 64,
        }
    }
}

/// Seeded instance generator with default options apart from the two
/// thresholds.
pub fn generate_instance(
    k: usize,
    l: usize,
    d: usize,
    seed: u64,
    min_cmin: f64,
    min_gap: f64,
) -> Result<HottTopicsInstance> {
    generate_instance_with(
        k,
        l,
        d,
        seed,
        &GeneratorOptions {
            min_cmin,
            min_gap,
            ..GeneratorOptions::default()
        },
    )
}

/// Samples a random hott-topics instance.
///
/// Base factors are uniform-ish simplex points (Dirichlet over `d + 1`
/// coordinates, last dropped). Each further row is `s * w * U*` with `w`
/// drawn from a flat Dirichlet and `s ~ U[0, 1]`. Candidate rows are rejected
/// whenever they would create a `d`-subset with squared volume below
/// `min_cmin` or a gap below `min_gap`; the base is redrawn after too many
/// consecutive rejections. Base rows and columns end up at `{1..d}`.
pub fn generate_instance_with(
    k: usize,
    l: usize,
    d: usize,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<HottTopicsInstance> {
    if d == 0 || k < d || l < d {
        return Err(Error::Domain(format!(
            "need K, L >= d >= 1, got K={k}, L={l}, d={d}"
        )));
    }
    if opts.min_cmin.is_nan() || opts.min_cmin <= 0.0 || opts.min_gap.is_nan() || opts.min_gap < 0.0 {
        return Err(Error::Domain("need min_cmin > 0 and min_gap >= 0".into()));
    }
    if opts.base_concentration.is_nan() || opts.base_concentration <= 0.0 {
        return Err(Error::Domain("base concentration must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut budget = Budget {
        left: opts.max_attempts,
        used: 0,
        last_cmin: 0.0,
        last_gap: 0.0,
    };
    let (u, zu) = generate_side(k, d, opts, &mut rng, &mut budget)?;
    let (v, zv) = generate_side(l, d, opts, &mut rng, &mut budget)?;

    let base = DSubset::first(d);
    let mut inst = HottTopicsInstance::from_factors(u, v, base.clone(), base)?;
    // Exact weights from generation replace the Cramer's-rule reconstruction.
    inst.mixing_u = zu;
    inst.mixing_v = zv;
    inst.seed = Some(seed);
    inst.row_labels = Some(random_labels(k, &mut rng));
    inst.col_labels = Some(random_labels(l, &mut rng));
    Ok(inst)
}

struct Budget {
    left: usize,
    used: usize,
    last_cmin: f64,
    last_gap: f64,
}

impl Budget {
    fn fail(&self) -> Error {
        Error::GenerationFailed {
            attempts: self.used,
            last_cmin: self.last_cmin,
            last_gap: self.last_gap,
        }
    }
}

fn random_labels(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn dirichlet(rng: &mut ChaCha8Rng, alpha: f64, n: usize) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("positive shape");
    loop {
        let x: Vec<f64> = (0..n).map(|_| g.sample(rng)).collect();
        let s: f64 = x.iter().sum();
        if s > 0.0 && s.is_finite() {
            return x.into_iter().map(|xi| xi / s).collect();
        }
    }
}

fn generate_side(
    n: usize,
    d: usize,
    opts: &GeneratorOptions,
    rng: &mut ChaCha8Rng,
    budget: &mut Budget,
) -> Result<(Matrix, Matrix)> {
    'attempt: loop {
        if budget.left == 0 {
            return Err(budget.fail());
        }
        budget.left -= 1;
        budget.used += 1;

        let mut rows: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                let mut p = dirichlet(rng, opts.base_concentration, d + 1);
                p.truncate(d);
                p
            })
            .collect();
        let base_sq = det_square(&rows.concat(), d).powi(2);
        if base_sq < opts.min_cmin {
            budget.last_cmin = base_sq;
            continue;
        }
        let mut weights: Vec<Vec<f64>> = (0..d)
            .map(|k| (0..d).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();

        // Index sets of size d - 1 among accepted rows, grown incrementally.
        let mut misses = 0;
        while rows.len() < n {
            let scale: f64 = rng.random();
            let w: Vec<f64> = dirichlet(rng, 1.0, d).into_iter().map(|x| x * scale).collect();
            let cand: Vec<f64> = (0..d)
                .map(|c| (0..d).map(|b| w[b] * rows[b][c]).sum())
                .collect();
            match worst_with(&rows, &cand, d, base_sq) {
                (cmin, gap) if cmin >= opts.min_cmin && gap >= opts.min_gap && gap > 0.0 => {
                    rows.push(cand);
                    weights.push(w);
                    misses = 0;
                }
                (cmin, gap) => {
                    budget.last_cmin = cmin;
                    budget.last_gap = gap;
                    misses += 1;
                    if misses >= opts.max_row_misses {
                        continue 'attempt;
                    }
                }
            }
        }
        let m = Matrix::from_rows(&rows)?;
        let z = Matrix::from_rows(&weights)?;
        return Ok((m, z));
    }
}

/// Smallest squared volume and smallest gap over every `d`-subset made of
/// `cand` and `d - 1` accepted rows.
fn worst_with(rows: &[Vec<f64>], cand: &[f64], d: usize, base_sq: f64) -> (f64, f64) {
    let mut cmin = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut buf = vec![0.0; d * d];
    buf[(d - 1) * d..].copy_from_slice(cand);
    let mut eval = |buf: &[f64]| {
        let sq = det_square(buf, d).powi(2);
        cmin = cmin.min(sq);
        gap = gap.min(base_sq - sq);
    };
    if d == 1 {
        eval(&buf);
        return (cmin, gap);
    }
    let Ok(subsets) = enum_subsets(rows.len(), d - 1) else {
        return (cmin, gap);
    };
    for s in subsets {
        for (slot, &r) in s.indices().iter().enumerate() {
            buf[slot * d..(slot + 1) * d].copy_from_slice(&rows[r]);
        }
        eval(&buf);
    }
    (cmin, gap)
}
