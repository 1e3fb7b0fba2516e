use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{binomial, enum_subsets, DSubset};

use super::instance::HottTopicsInstance;

/// Largest number of `(d-row, d-column)` pairs any exhaustive routine will
/// enumerate.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Ground-truth quantities of an instance, computed by full enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleQuantities {
    /// Zero-based `(i*, j*)` of the largest mean.
    pub best_entry: (usize, usize),
    pub best_value: f64,
    pub best_drow: DSubset,
    pub best_dcol: DSubset,
    #[serde(with = "subset_keys")]
    pub sq_volumes_rows: BTreeMap<DSubset, f64>,
    #[serde(with = "subset_keys")]
    pub sq_volumes_cols: BTreeMap<DSubset, f64>,
    /// `det^2(U(I*, :)) - det^2(U(I, :))`.
    #[serde(with = "subset_keys")]
    pub gaps_rows: BTreeMap<DSubset, f64>,
    #[serde(with = "subset_keys")]
    pub gaps_cols: BTreeMap<DSubset, f64>,
    /// Smallest gap over suboptimal `d`-rows and `d`-columns; infinite when
    /// there are none (`K = L = d`).
    pub delta_min: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub c_bar_u: f64,
    pub c_bar_v: f64,
    pub c_bar: f64,
}

impl OracleQuantities {
    pub fn gap_row(&self, s: &DSubset) -> Option<f64> {
        self.gaps_rows.get(s).copied()
    }

    pub fn gap_col(&self, s: &DSubset) -> Option<f64> {
        self.gaps_cols.get(s).copied()
    }
}

/// Writes subset-keyed maps with `1-3-4` style string keys.
mod subset_keys {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::matcore::DSubset;

    pub fn serialize<S: Serializer>(m: &BTreeMap<DSubset, f64>, s: S) -> Result<S::Ok, S::Error> {
        let keyed: BTreeMap<String, f64> = m.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        keyed.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<DSubset, f64>, D::Error> {
        let keyed = BTreeMap::<String, f64>::deserialize(d)?;
        keyed
            .into_iter()
            .map(|(k, v)| {
                DSubset::parse_one_based(&k, usize::MAX)
                    .map(|s| (s, v))
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

/// Fails with [`Error::TooLarge`] when `C(K, d) * C(L, d)` exceeds
/// [`ENUMERATION_LIMIT`].
pub fn check_enumeration_guard(k: usize, l: usize, d: usize) -> Result<()> {
    let count = binomial(k, d).saturating_mul(binomial(l, d));
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

pub fn oracle_quantities(inst: &HottTopicsInstance) -> Result<OracleQuantities> {
    let (k, l, d) = (inst.k(), inst.l(), inst.d());
    check_enumeration_guard(k, l, d)?;

    let ((bi, bj), best_value) = inst.rbar().max_entry();

    let side = |n: usize, vol: &dyn Fn(&DSubset) -> Result<f64>, base: &DSubset| -> Result<_> {
        let mut vols = BTreeMap::new();
        for s in enum_subsets(n, d)? {
            let v = vol(&s)?;
            vols.insert(s, v);
        }
        let star = vols[base];
        let gaps: BTreeMap<DSubset, f64> = vols.iter().map(|(s, v)| (s.clone(), star - v)).collect();
        // The base subset maximizes the squared volume; ties resolve to the
        // lexicographically smallest maximizer.
        let best = vols
            .iter()
            .fold(None::<(&DSubset, f64)>, |acc, (s, &v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((s, v)),
            })
            .map(|(s, _)| s.clone())
            .expect("at least one subset");
        let min = vols.values().copied().fold(f64::INFINITY, f64::min);
        let mean = vols.values().sum::<f64>() / vols.len() as f64;
        let min_gap = gaps
            .iter()
            .filter(|(s, _)| *s != base)
            .map(|(_, &g)| g)
            .fold(f64::INFINITY, f64::min);
        Ok((vols, gaps, best, star, min, mean, min_gap))
    };

    let (vr, gr, best_r, star_r, min_r, mean_r, gap_r) =
        side(k, &|s| inst.row_sq_volume(s), inst.base_rows())?;
    let (vc, gc, best_c, star_c, min_c, mean_c, gap_c) =
        side(l, &|s| inst.col_sq_volume(s), inst.base_cols())?;

    Ok(OracleQuantities {
        best_entry: (bi, bj),
        best_value,
        best_drow: best_r,
        best_dcol: best_c,
        sq_volumes_rows: vr,
        sq_volumes_cols: vc,
        gaps_rows: gr,
        gaps_cols: gc,
        delta_min: gap_r.min(gap_c),
        c_min: min_r.min(min_c),
        c_max: star_r.min(star_c),
        c_bar_u: mean_r,
        c_bar_v: mean_c,
        c_bar: mean_r.min(mean_c).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::generate_instance;

    #[test]
    fn json_uses_string_keys() {
        let inst = generate_instance(4, 3, 2, 5, 1e-3, 0.0).unwrap();
        let o = oracle_quantities(&inst).unwrap();
        let js = serde_json::to_value(&o).unwrap();
        assert!(js["gaps_rows"]["1-2"].is_number());
        assert_eq!(js["best_drow"], serde_json::json!([1, 2]));
        let back: OracleQuantities = serde_json::from_value(js).unwrap();
        assert_eq!(back, o);
    }

    #[test]
    fn rank_one_gaps_and_averages() {
        let inst = HottTopicsInstance::rank_one(&[0.9, 0.3], &[0.8, 0.2]).unwrap();
        let o = oracle_quantities(&inst).unwrap();
        let second = DSubset::new(vec![1], 2).unwrap();
        assert!((o.gap_row(&second).unwrap() - 0.72).abs() < 1e-12);
        assert_eq!(o.gap_row(&DSubset::first(1)), Some(0.0));
        assert_eq!(o.gap_col(&DSubset::first(1)), Some(0.0));
        assert!((o.c_bar_u - 0.45).abs() < 1e-12);
        assert!((o.c_min - 0.04).abs() < 1e-12);
        assert!((o.c_max - 0.64).abs() < 1e-12);
        assert!((o.delta_min - 0.6).abs() < 1e-12);
        assert_eq!(o.best_entry, (0, 0));
        assert!((o.c_bar - (0.34f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn generated_invariants() {
        for seed in 0..30 {
            let d = 1 + seed as usize % 3;
            let inst = generate_instance(d + 3, d + 4, d, seed, 1e-4, 0.0).unwrap();
            let o = oracle_quantities(&inst).unwrap();
            assert!(o.delta_min > 0.0);
            assert!(o.c_max >= o.c_min && o.c_min > 0.0);
            assert!(o.gaps_rows.values().chain(o.gaps_cols.values()).all(|&g| g >= 0.0));
            assert_eq!(&o.best_drow, inst.base_rows());
            assert_eq!(&o.best_dcol, inst.base_cols());
            assert!(inst.base_rows().contains(o.best_entry.0));
            assert!(inst.base_cols().contains(o.best_entry.1));
        }
    }

    #[test]
    fn square_instance_has_no_gap() {
        let inst = generate_instance(2, 2, 2, 1, 1e-4, 0.0).unwrap();
        let o = oracle_quantities(&inst).unwrap();
        assert!(o.delta_min.is_infinite());
    }

    #[test]
    fn guard_rejects_huge_enumerations() {
        assert!(check_enumeration_guard(8, 8, 3).is_ok());
        assert!(matches!(
            check_enumeration_guard(200, 200, 4),
            Err(Error::TooLarge { .. })
        ));
    }
}
