//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string. The plain functions below the
//! bindings do the work so they can be tested natively.

use lowrank_bandit::analysis::check_lemma4;
use lowrank_bandit::bandit::{lowrank_elim, noise_free_max, ucb1_baseline, ElimConfig, Exploration, RegretTrace};
use lowrank_bandit::environment::{generate_instance, oracle_quantities, HottTopicsInstance, NoiseModel};
use lowrank_bandit::rng::stream_rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const CURVE_POINTS: usize = 200;

#[wasm_bindgen(js_name = generateInstance)]
pub fn generate_instance_js(k: usize, l: usize, d: usize, seed: u64) -> Result<String, JsValue> {
    instance_view(k, l, d, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = regretCurves)]
pub fn regret_curves_js(
    k: usize,
    l: usize,
    d: usize,
    seed: u64,
    n: u64,
    run_seed: u64,
    chain: bool,
) -> Result<String, JsValue> {
    regret_curves(k, l, d, seed, n, run_seed, chain).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = checkPermutationBound)]
pub fn check_permutation_bound_js(d: usize, trials: u32, seed: u64) -> Result<String, JsValue> {
    permutation_bound(d, trials, seed).map_err(|e| JsValue::from_str(&e))
}

fn instance(k: usize, l: usize, d: usize, seed: u64) -> Result<HottTopicsInstance, String> {
    if k * l > 400 {
        return Err("keep K * L at most 400 in the browser".into());
    }
    generate_instance(k, l, d, seed, 1e-4, 0.0).map_err(|e| e.to_string())
}

fn matrix_rows(m: &lowrank_bandit::matcore::Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Instance means, base subsets, oracle quantities and the noise-free
/// search result.
pub fn instance_view(k: usize, l: usize, d: usize, seed: u64) -> Result<String, String> {
    let inst = instance(k, l, d, seed)?;
    let o = oracle_quantities(&inst).map_err(|e| e.to_string())?;
    let found = noise_free_max(inst.rbar(), d).map_err(|e| e.to_string())?;
    let v = json!({
        "K": k,
        "L": l,
        "d": d,
        "rbar": matrix_rows(inst.rbar()),
        "base_rows": inst.base_rows(),
        "base_cols": inst.base_cols(),
        "best_entry": [o.best_entry.0 + 1, o.best_entry.1 + 1],
        "best_value": o.best_value,
        "c_min": o.c_min,
        "c_max": o.c_max,
        "delta_min": if o.delta_min.is_finite() { json!(o.delta_min) } else { Value::Null },
        "noise_free": {
            "rows": found.rows,
            "cols": found.cols,
            "matches_oracle": found.rows == o.best_drow && found.cols == o.best_dcol,
        },
    });
    Ok(v.to_string())
}

fn downsample(trace: &RegretTrace) -> Vec<[f64; 2]> {
    let curve = trace.cumulative_curve();
    if curve.is_empty() {
        return Vec::new();
    }
    let stride = curve.len().div_ceil(CURVE_POINTS).max(1);
    let mut pts: Vec<[f64; 2]> = curve
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(i, &c)| [(i + 1) as f64, c])
        .collect();
    let last = curve.len();
    if pts.last().map(|p| p[0] as usize) != Some(last) {
        pts.push([last as f64, curve[last - 1]]);
    }
    pts
}

/// Cumulative regret of elimination and UCB1 on one generated instance.
pub fn regret_curves(
    k: usize,
    l: usize,
    d: usize,
    seed: u64,
    n: u64,
    run_seed: u64,
    chain: bool,
) -> Result<String, String> {
    if n > 2_000_000 {
        return Err("keep the horizon at most 2e6 in the browser".into());
    }
    let inst = instance(k, l, d, seed)?;
    let noise = NoiseModel::Bernoulli;
    let mut cfg = ElimConfig::new(n, run_seed);
    if chain {
        cfg = cfg.with_exploration(Exploration::Chain);
    }
    let elim = lowrank_elim(&inst, &noise, &cfg).map_err(|e| e.to_string())?;
    let mut rng = stream_rng(run_seed, 1);
    let ucb = ucb1_baseline(&inst, &noise, n, &mut rng, true).map_err(|e| e.to_string())?;
    let v = json!({
        "n": n,
        "elim": downsample(&elim),
        "ucb1": downsample(&ucb),
        "elim_final": elim.cumulative_regret,
        "ucb1_final": ucb.cumulative_regret,
        "completed_stages": elim.completed_stages,
        "converged_at": elim.converged_at,
        "final_rows": elim.final_rows,
        "final_cols": elim.final_cols,
        "eliminations": elim.eliminations,
    });
    Ok(v.to_string())
}

/// Random and adversarial checks of the permutation inequality.
pub fn permutation_bound(d: usize, trials: u32, seed: u64) -> Result<String, String> {
    let mut rng = stream_rng(seed, 0);
    let r = check_lemma4(d, trials.into(), &mut rng).map_err(|e| e.to_string())?;
    let v = json!({
        "d": d,
        "trials": r.trials,
        "failures": r.failures,
        "worst_margin": r.worst_margin,
        "passed": r.passed(),
        "witnesses": r.witnesses,
    });
    Ok(v.to_string())
}
