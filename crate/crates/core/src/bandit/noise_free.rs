use crate::error::{Error, Result};
use crate::matcore::{det_square, enum_subsets, DSubset, Matrix};

/// Winning scores below this are numerically indistinguishable from a
/// singular submatrix.
pub const WEAK_SCORE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFreeMax {
    pub rows: DSubset,
    pub cols: DSubset,
    /// `det^2(R(rows, J1))` with `J1 = {1..d}`.
    pub row_score: f64,
    /// `det^2(R(I1, cols))` with `I1 = {1..d}`.
    pub col_score: f64,
}

impl NoiseFreeMax {
    /// Human-readable warnings about near-singular winners.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.row_score < WEAK_SCORE {
            out.push(format!(
                "winning d-row {} has squared determinant {:e}; the reference d-column may be singular",
                self.rows, self.row_score
            ));
        }
        if self.col_score < WEAK_SCORE {
            out.push(format!(
                "winning d-column {} has squared determinant {:e}; the reference d-row may be singular",
                self.cols, self.col_score
            ));
        }
        out
    }
}

/// Finds the optimal `d`-row and `d`-column of a noise-free matrix.
///
/// All `d`-rows are compared on the fixed `d`-column `{1..d}` by
/// `det^2(R(I, J1))`, which is `det^2(U(I, :))` scaled by a common positive
/// factor; columns are handled symmetrically. Ties keep the
/// lexicographically smallest subset.
pub fn noise_free_max(rbar: &Matrix, d: usize) -> Result<NoiseFreeMax> {
    if d == 0 || d > rbar.rows() || d > rbar.cols() {
        return Err(Error::Domain(format!(
            "rank {d} is incompatible with a {}x{} matrix",
            rbar.rows(),
            rbar.cols()
        )));
    }
    let first = DSubset::first(d);
    let mut buf = vec![0.0; d * d];

    let mut score = |rows: &DSubset, cols: &DSubset| {
        for (a, &i) in rows.indices().iter().enumerate() {
            for (b, &j) in cols.indices().iter().enumerate() {
                buf[a * d + b] = rbar[(i, j)];
            }
        }
        det_square(&buf, d).powi(2)
    };

    let mut best_rows = (first.clone(), score(&first, &first));
    for rows in enum_subsets(rbar.rows(), d)? {
        let s = score(&rows, &first);
        if s > best_rows.1 {
            best_rows = (rows, s);
        }
    }
    let mut best_cols = (first.clone(), score(&first, &first));
    for cols in enum_subsets(rbar.cols(), d)? {
        let s = score(&first, &cols);
        if s > best_cols.1 {
            best_cols = (cols, s);
        }
    }
    Ok(NoiseFreeMax {
        rows: best_rows.0,
        cols: best_cols.0,
        row_score: best_rows.1,
        col_score: best_cols.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{generate_instance, oracle_quantities, HottTopicsInstance};

    #[test]
    fn rank_one_example() {
        let inst = HottTopicsInstance::rank_one(&[0.9, 0.3], &[0.8, 0.2]).unwrap();
        let r = noise_free_max(inst.rbar(), 1).unwrap();
        // Brute-force argmax of the 2x2 mean matrix.
        let ((i, j), _) = inst.rbar().max_entry();
        assert_eq!((r.rows.indices(), r.cols.indices()), (&[i][..], &[j][..]));
    }

    #[test]
    fn square_case_has_single_answer() {
        let inst = generate_instance(3, 3, 3, 5, 1e-4, 0.0).unwrap();
        let r = noise_free_max(inst.rbar(), 3).unwrap();
        assert_eq!(r.rows, DSubset::first(3));
        assert_eq!(r.cols, DSubset::first(3));
        assert!(r.warnings().is_empty());
    }

    #[test]
    fn matches_oracle_on_generated_instances() {
        for seed in 0..40u64 {
            let d = 1 + (seed % 3) as usize;
            let inst = generate_instance(d + 2 + (seed % 4) as usize, 8, d, seed, 1e-4, 0.0).unwrap();
            let o = oracle_quantities(&inst).unwrap();
            let r = noise_free_max(inst.rbar(), d).unwrap();
            assert_eq!((r.rows, r.cols), (o.best_drow, o.best_dcol), "seed {seed}");
        }
    }

    #[test]
    fn singular_reference_is_flagged() {
        let rbar = Matrix::from_rows(&[vec![0.0, 0.5], vec![0.0, 0.25]]).unwrap();
        let r = noise_free_max(&rbar, 1).unwrap();
        assert_eq!(r.warnings().len(), 1);
        assert!(noise_free_max(&rbar, 3).is_err());
    }
}
