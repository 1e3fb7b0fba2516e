//! Theoretical quantities and empirical verification suites.

mod bound;
mod lemmas;
mod scaling;

pub use bound::{theorem1_bound, BoundComponents, BoundReport, LEADING_CONSTANT};
pub use lemmas::{
    check_concentration, check_elimination_stage, check_estimator, check_lemma2, check_lemma4,
    format_results, lemma4_corpus, lemma4_witness, predicted_stage, stage_targets, LemmaResult,
};
pub use scaling::{
    horizon_sweep, log_ratio_change, median_final_regret, percentile, regret_scaling_report,
    ScalingPoint, ScalingRow, ScalingTable, SCALING_CSV_HEADER,
};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Results keep index order.
#[cfg(feature = "parallel")]
pub fn par_map<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}
