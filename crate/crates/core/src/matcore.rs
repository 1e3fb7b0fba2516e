//! Small dense matrices, exact determinants, and `d`-subset enumeration.
//!
//! Every other module builds on these primitives. Subsets are always kept in
//! ascending index order, so a submatrix `M(I, J)` is well defined and its
//! determinant has a reproducible sign.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_row_major(n, m, rows.concat())
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i < self.rows && j < self.cols).then(|| self.data[i * self.cols + j])
    }

    /// `self * other^T`, the product used to form `R = U V^T`.
    pub fn mul_transpose(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "cannot form A B^T with inner dimensions {} and {}",
                self.cols, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.rows)?;
        for i in 0..self.rows {
            for j in 0..other.rows {
                out[(i, j)] = dot(self.row(i), other.row(j));
            }
        }
        Ok(out)
    }

    pub fn max_entry(&self) -> ((usize, usize), f64) {
        let mut best = ((0, 0), f64::NEG_INFINITY);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self[(i, j)];
                if v > best.1 {
                    best = ((i, j), v);
                }
            }
        }
        best
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// An ascending set of `d` distinct indices into `[0, bound)`.
///
/// Indices are zero-based internally; `Display` prints them one-based and
/// dash-separated (`1-3-4`), which is the form used in exported files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DSubset(Vec<usize>);

impl DSubset {
    /// Builds a subset from arbitrary-order distinct indices below `bound`.
    pub fn new(mut indices: Vec<usize>, bound: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Domain("a d-subset needs at least one index".into()));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!("repeated index in {indices:?}")));
        }
        if let Some(&last) = indices.last() {
            if last >= bound {
                return Err(Error::IndexOutOfRange { index: last, bound });
            }
        }
        Ok(Self(indices))
    }

    /// `{0, 1, ..., d - 1}`.
    pub fn first(d: usize) -> Self {
        Self((0..d).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Parses the one-based `i1-i2-...` form.
    pub fn parse_one_based(s: &str, bound: usize) -> Result<Self> {
        let idx = s
            .split('-')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .map(|v| v - 1)
                    .ok_or_else(|| Error::Domain(format!("bad subset token {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(idx, bound)
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for DSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

impl Serialize for DSubset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DSubset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let one_based = Vec::<usize>::deserialize(d)?;
        if one_based.contains(&0) {
            return Err(serde::de::Error::custom("subset indices are one-based"));
        }
        let mut idx: Vec<usize> = one_based.into_iter().map(|i| i - 1).collect();
        idx.sort_unstable();
        idx.dedup();
        if idx.is_empty() {
            return Err(serde::de::Error::custom("empty subset"));
        }
        Ok(DSubset(idx))
    }
}

/// Exact determinant of a square matrix.
///
/// Sizes up to 4 use closed-form cofactor expansions; larger matrices use
/// Gaussian elimination with partial pivoting.
pub fn det(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "determinant needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(det_square(m.as_slice(), m.rows()))
}

/// Determinant of a row-major `d x d` slice.
pub fn det_square(a: &[f64], d: usize) -> f64 {
    debug_assert_eq!(a.len(), d * d);
    match d {
        1 => a[0],
        2 => det2(a[0], a[1], a[2], a[3]),
        3 => det3(a),
        4 => det4(a),
        _ => det_pivoted(a, d),
    }
}

#[inline]
fn det2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    a * d - b * c
}

#[inline]
fn det3(m: &[f64]) -> f64 {
    m[0] * det2(m[4], m[5], m[7], m[8]) - m[1] * det2(m[3], m[5], m[6], m[8])
        + m[2] * det2(m[3], m[4], m[6], m[7])
}

fn det4(m: &[f64]) -> f64 {
    // Laplace expansion along the first two rows: sum over column pairs of
    // signed products of complementary 2x2 minors.
    let s0 = det2(m[0], m[1], m[4], m[5]);
    let s1 = det2(m[0], m[2], m[4], m[6]);
    let s2 = det2(m[0], m[3], m[4], m[7]);
    let s3 = det2(m[1], m[2], m[5], m[6]);
    let s4 = det2(m[1], m[3], m[5], m[7]);
    let s5 = det2(m[2], m[3], m[6], m[7]);

    let c5 = det2(m[10], m[11], m[14], m[15]);
    let c4 = det2(m[9], m[11], m[13], m[15]);
    let c3 = det2(m[9], m[10], m[13], m[14]);
    let c2 = det2(m[8], m[10], m[12], m[14]);
    let c1 = det2(m[8], m[11], m[12], m[15]);
    let c0 = det2(m[8], m[9], m[12], m[13]);

    s0 * c5 - s1 * c4 + s2 * c3 + s3 * c1 - s4 * c2 + s5 * c0
}

fn det_pivoted(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))
            .unwrap_or(col);
        let p = m[pivot * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        det *= p;
        for r in (col + 1)..n {
            let f = m[r * n + col] / p;
            if f != 0.0 {
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
            }
        }
    }
    det
}

/// Largest determinant of a `d x d` matrix with entries in `[0, 1]`.
///
/// Exact for `d <= 4`. Beyond that the Hadamard-type bound
/// `2^{-d} (d + 1)^{(d + 1) / 2}` is returned; it over-estimates the true
/// maximum and therefore widens every confidence radius built from it.
pub fn det_max(d: usize) -> Result<f64> {
    match d {
        0 => Err(Error::Domain("det_max needs d >= 1".into())),
        1 | 2 => Ok(1.0),
        3 => Ok(2.0),
        4 => Ok(3.0),
        _ => {
            let d = d as f64;
            Ok((d + 1.0).powf((d + 1.0) / 2.0) / 2f64.powf(d))
        }
    }
}

/// Whether [`det_max`] is exact for this `d`.
pub fn det_max_is_exact(d: usize) -> bool {
    (1..=4).contains(&d)
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `d`-subsets of `[0, n)` in lexicographic order.
pub fn enum_subsets(n: usize, d: usize) -> Result<Vec<DSubset>> {
    if d == 0 {
        return Err(Error::Domain("subset size must be at least 1".into()));
    }
    if d > n {
        return Err(Error::Domain(format!(
            "cannot choose {d} elements from a ground set of {n}"
        )));
    }
    let mut out = Vec::with_capacity(binomial(n, d).min(1 << 24) as usize);
    let mut cur: Vec<usize> = (0..d).collect();
    loop {
        out.push(DSubset(cur.clone()));
        // Rightmost position that can still advance.
        let Some(pos) = (0..d).rev().find(|&p| cur[p] < n - d + p) else {
            break;
        };
        cur[pos] += 1;
        for q in pos + 1..d {
            cur[q] = cur[q - 1] + 1;
        }
    }
    Ok(out)
}

/// `M(I, J)` with rows and columns in ascending order.
pub fn submatrix(m: &Matrix, rows: &DSubset, cols: &DSubset) -> Result<Matrix> {
    check_bound(rows, m.rows())?;
    check_bound(cols, m.cols())?;
    let data = rows
        .indices()
        .iter()
        .flat_map(|&i| cols.indices().iter().map(move |&j| m[(i, j)]))
        .collect();
    Matrix::from_row_major(rows.len(), cols.len(), data)
}

/// `M(I, :)`, the rows of `m` selected by `rows`.
pub fn row_block(m: &Matrix, rows: &DSubset) -> Result<Matrix> {
    check_bound(rows, m.rows())?;
    let data = rows
        .indices()
        .iter()
        .flat_map(|&i| m.row(i).iter().copied())
        .collect();
    Matrix::from_row_major(rows.len(), m.cols(), data)
}

fn check_bound(s: &DSubset, bound: usize) -> Result<()> {
    match s.indices().last() {
        Some(&i) if i >= bound => Err(Error::IndexOutOfRange { index: i, bound }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn subset(one_based: &[usize]) -> DSubset {
        DSubset::new(one_based.iter().map(|i| i - 1).collect(), 100).unwrap()
    }

    /// Leibniz formula over all permutations; independent of the closed forms.
    fn det_by_permutations(a: &[f64], d: usize) -> f64 {
        fn permute(rest: &mut Vec<usize>, k: usize, out: &mut Vec<(Vec<usize>, f64)>) {
            if k == rest.len() {
                let mut sign = 1.0;
                for i in 0..rest.len() {
                    for j in i + 1..rest.len() {
                        if rest[i] > rest[j] {
                            sign = -sign;
                        }
                    }
                }
                out.push((rest.clone(), sign));
                return;
            }
            for i in k..rest.len() {
                rest.swap(k, i);
                permute(rest, k + 1, out);
                rest.swap(k, i);
            }
        }
        let mut perms = Vec::new();
        permute(&mut (0..d).collect(), 0, &mut perms);
        perms
            .iter()
            .map(|(p, s)| s * (0..d).map(|i| a[i * d + p[i]]).product::<f64>())
            .sum()
    }

    #[test]
    fn det_identity_and_degenerate() {
        assert_eq!(det(&Matrix::identity(2).unwrap()).unwrap(), 1.0);
        let ones = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(det(&ones).unwrap(), 0.0);
        let rank_one = Matrix::from_rows(&[vec![0.72, 0.18], vec![0.24, 0.06]]).unwrap();
        assert!(det(&rank_one).unwrap().abs() < 1e-15);
    }

    #[test]
    fn det_rejects_non_square() {
        let m = Matrix::zeros(2, 3).unwrap();
        assert!(matches!(det(&m), Err(Error::Dimension(_))));
    }

    #[test]
    fn det_matches_permutation_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=6 {
            for _ in 0..500 {
                let a: Vec<f64> = (0..d * d).map(|_| rng.random::<f64>() * 2.0 - 0.5).collect();
                let want = det_by_permutations(&a, d);
                let got = det_square(&a, d);
                let tol = if d <= 4 { 1e-12 } else { 1e-10 };
                assert!((got - want).abs() <= tol, "d={d}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn det_bounded_by_det_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..=4 {
            let cap = det_max(d).unwrap();
            for _ in 0..10_000 {
                // Push mass to the corners of the cube, where extremes live.
                let a: Vec<f64> = (0..d * d)
                    .map(|_| {
                        let u: f64 = rng.random();
                        if rng.random_bool(0.7) {
                            u.round()
                        } else {
                            u
                        }
                    })
                    .collect();
                assert!(det_square(&a, d).abs() <= cap + 1e-12);
            }
        }
    }

    #[test]
    fn det_max_table() {
        assert_eq!(det_max(1).unwrap(), 1.0);
        assert_eq!(det_max(2).unwrap(), 1.0);
        assert_eq!(det_max(3).unwrap(), 2.0);
        assert_eq!(det_max(4).unwrap(), 3.0);
        assert!(det_max(0).is_err());
        // d = 5: the true maximum over {0,1}^{5x5} is 5.
        assert!(det_max(5).unwrap() >= 5.0);
        assert!(!det_max_is_exact(5));
    }

    #[test]
    fn det_max_is_attained() {
        let m3 = [1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        assert_eq!(det_square(&m3, 3), 2.0);
        let m4 = [
            1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0,
        ];
        assert_eq!(det_square(&m4, 4).abs(), 3.0);
    }

    #[test]
    fn enumeration_examples() {
        let s = enum_subsets(3, 2).unwrap();
        assert_eq!(s, vec![subset(&[1, 2]), subset(&[1, 3]), subset(&[2, 3])]);
        let s = enum_subsets(4, 1).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[3], subset(&[4]));
        let s = enum_subsets(5, 3).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s[0], subset(&[1, 2, 3]));
        assert!(matches!(enum_subsets(2, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn submatrix_examples() {
        let data: Vec<f64> = (1..=3)
            .flat_map(|i| (1..=3).map(move |j| (10 * i + j) as f64))
            .collect();
        let m = Matrix::from_row_major(3, 3, data).unwrap();
        let s = submatrix(&m, &subset(&[1, 3]), &subset(&[2, 3])).unwrap();
        assert_eq!(s.as_slice(), &[12.0, 13.0, 32.0, 33.0]);
        let one = submatrix(&m, &subset(&[2]), &subset(&[2])).unwrap();
        assert_eq!(one.as_slice(), &[22.0]);

        let two = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(
            submatrix(&two, &subset(&[1, 2]), &subset(&[1, 2])).unwrap(),
            two
        );
        assert!(matches!(
            submatrix(&two, &subset(&[1, 3]), &subset(&[1, 2])),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn subset_display_round_trip() {
        let s = subset(&[1, 3, 4]);
        assert_eq!(s.to_string(), "1-3-4");
        assert_eq!(DSubset::parse_one_based("1-3-4", 5).unwrap(), s);
        assert!(DSubset::parse_one_based("0-1", 5).is_err());
        assert!(DSubset::new(vec![1, 1], 5).is_err());
    }

    #[test]
    fn matrix_invariants() {
        assert!(Matrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::zeros(0, 3).is_err());
    }

    proptest! {
        #[test]
        fn enumeration_is_complete_sorted_and_distinct(n in 1usize..12, d in 1usize..6) {
            prop_assume!(d <= n);
            let all = enum_subsets(n, d).unwrap();
            prop_assert_eq!(all.len() as u128, binomial(n, d));
            prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(all.iter().all(|s| s.indices().windows(2).all(|w| w[0] < w[1])
                && s.indices().iter().all(|&i| i < n)));
        }
    }
}
