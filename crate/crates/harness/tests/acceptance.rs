//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lowrank_bandit::analysis::{
    check_concentration, check_elimination_stage, check_estimator, check_lemma2, check_lemma4,
    horizon_sweep, log_ratio_change, par_map, regret_scaling_report, theorem1_bound,
};
use lowrank_bandit::bandit::{lowrank_elim, noise_free_max, ElimConfig, Exploration, Side};
use lowrank_bandit::environment::{generate_instance, oracle_quantities, NoiseModel};
use lowrank_bandit::matcore::{det, enum_subsets, row_block, submatrix, DSubset};
use lowrank_bandit::rng::stream_rng;
use lowrank_harness::run::METADATA_KEY;
use lowrank_harness::suites::{
    concentration_instance, elimination_stage_instance, log_scaling_instance, pinned_instances,
    separation_sweep,
};
use lowrank_harness::{run_experiment, Settings};

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn factorization() -> Outcome {
    let mut worst = 0.0f64;
    let mut pairs = 0u64;
    for inst in pinned_instances(100, 8, 1e-4, 1) {
        let d = inst.d();
        for rows in enum_subsets(inst.k(), d).unwrap() {
            let du = det(&row_block(inst.u(), &rows).unwrap()).unwrap();
            for cols in enum_subsets(inst.l(), d).unwrap() {
                let dv = det(&row_block(inst.v(), &cols).unwrap()).unwrap();
                let dr = det(&submatrix(inst.rbar(), &rows, &cols).unwrap()).unwrap();
                worst = worst.max((dr - du * dv).abs());
                pairs += 1;
            }
        }
    }
    ensure(worst <= 1e-10, format!("{pairs} pairs, max |error| {worst:.2e}"))
}

fn optimum_in_base() -> Outcome {
    let mut bad = 0;
    let insts: Vec<_> = pinned_instances(100, 8, 1e-4, 1)
        .into_iter()
        .chain(pinned_instances(200, 8, 1e-4, 3))
        .collect();
    for inst in &insts {
        let o = oracle_quantities(inst).unwrap();
        let ((i, j), _) = inst.rbar().max_entry();
        let ok = o.best_drow.contains(i)
            && o.best_dcol.contains(j)
            && inst.base_rows().contains(i)
            && inst.base_cols().contains(j);
        if !ok {
            bad += 1;
        }
    }
    ensure(bad == 0, format!("{} instances, {bad} with the argmax outside I* x J*", insts.len()))
}

fn noise_free_exact() -> Outcome {
    let insts = pinned_instances(200, 8, 1e-4, 3);
    let mut bad = 0;
    for inst in &insts {
        let o = oracle_quantities(inst).unwrap();
        assert!(o.c_min >= 1e-4 * (1.0 - 1e-9));
        let f = noise_free_max(inst.rbar(), inst.d()).unwrap();
        if f.rows != o.best_drow || f.cols != o.best_dcol {
            bad += 1;
        }
    }
    ensure(bad == 0, format!("{} instances, {bad} mismatches", insts.len()))
}

fn estimator() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, l, d, seed) in [(4usize, 4usize, 1usize, 1u64), (5, 5, 2, 2), (5, 4, 3, 3)] {
        let inst = generate_instance(k, l, d, seed, 1e-3, 0.0).unwrap();
        let row = DSubset::new((k - d..k).collect(), k).unwrap();
        let cols = enum_subsets(l, d).unwrap();
        let r = check_estimator(&inst, &NoiseModel::Bernoulli, Side::Row, &row, &cols, 100_000, seed).unwrap();
        let rows = enum_subsets(k, d).unwrap();
        let c = check_estimator(&inst, &NoiseModel::Bernoulli, Side::Col, &DSubset::first(d), &rows, 100_000, seed + 50)
            .unwrap();
        ok &= r.passed() && c.passed();
        lines.push(format!("d={d}: {} / {}", r.notes.join(""), c.notes.join("")));
    }
    ensure(ok, lines.join("; "))
}

fn concentration() -> Outcome {
    let n = 10_000;
    let r = check_concentration(&concentration_instance(), &NoiseModel::Bernoulli, n, 50, 5).unwrap();
    ensure(
        r.passed(),
        format!(
            "{} of {} runs missed, allowed rate {:.4}, worst slack {:.3}",
            r.failures,
            r.trials,
            r.tolerance.unwrap(),
            r.worst_margin
        ),
    )
}

fn elimination_stage() -> Outcome {
    let r = check_elimination_stage(&elimination_stage_instance(), &NoiseModel::Bernoulli, 2_000_000, 50, 6).unwrap();
    ensure(
        r.failures == 0 && r.trials > 0,
        format!("{} checks, {} violations, {} skipped; {}", r.trials, r.failures, r.skipped, r.notes.join("")),
    )
}

fn lemma2() -> Outcome {
    let mut trials = 0;
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for inst in pinned_instances(100, 7, 1e-4, 2) {
        let r = check_lemma2(&inst).unwrap();
        trials += r.trials;
        failures += r.failures;
        worst = worst.min(r.worst_margin);
    }
    ensure(failures == 0, format!("{trials} pairs, {failures} failures, worst slack {worst:.3e}"))
}

fn lemma4() -> Outcome {
    let mut rng = stream_rng(0x4c34, 0);
    let mut parts = Vec::new();
    let mut ok = true;
    for d in 1..=4 {
        let r = check_lemma4(d, 10_000, &mut rng).unwrap();
        ok &= r.passed() && r.trials >= 10_000;
        parts.push(format!("d={d}: {} trials {} failures", r.trials, r.failures));
    }
    ensure(ok, parts.join(", "))
}

fn bound_dominance() -> Outcome {
    let inst = generate_instance(4, 4, 1, 9, 1e-4, 0.0).unwrap();
    let n = 100_000;
    let b = theorem1_bound(&inst, n).unwrap();
    let regrets = par_map(20, |s| {
        lowrank_elim(&inst, &NoiseModel::Bernoulli, &ElimConfig::new(n, 31).with_stream(s).without_steps())
            .unwrap()
            .cumulative_regret
    });
    let below = regrets.iter().filter(|&&r| r <= b.theorem1_value).count();
    let max = regrets.iter().copied().fold(0.0, f64::max);
    ensure(
        below == 20 && b.is_consistent(),
        format!("{below}/20 runs below the bound; max regret {max:.1}, bound {:.3e}", b.theorem1_value),
    )
}

fn log_scaling() -> Outcome {
    let pts = horizon_sweep(
        &log_scaling_instance(),
        &NoiseModel::Bernoulli,
        &[1_000, 10_000, 100_000],
        20,
        21,
        Exploration::Restricted,
    )
    .unwrap();
    let t = regret_scaling_report("n", &pts).unwrap();
    let change = log_ratio_change(&t).unwrap();
    let meds: Vec<String> = t.rows.iter().map(|r| format!("{:.0}", r.median_regret)).collect();
    ensure(change < 0.5, format!("medians [{}], regret/ln n change {change:.3}", meds.join(", ")))
}

fn separation() -> Outcome {
    let s = separation_sweep(&[4, 8, 16], 100_000, 20, 22).unwrap();
    let ratio = |i: usize| s[i].2 / s[i].1;
    let msg = s
        .iter()
        .map(|(k, e, u)| format!("K={k}: ucb1/elim {:.3}", u / e))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(ratio(2) > ratio(0), msg)
}

fn strip_metadata(text: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove(METADATA_KEY);
    // The resolved config embeds the output directory.
    if let Some(c) = v.get_mut("config").and_then(|c| c.as_object_mut()) {
        c.remove("output_dir");
    }
    v
}

fn read_dir(dir: &Path) -> BTreeMap<String, String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut dirs = Vec::new();
    for (run, algo) in [(0, "lowrank-elim"), (1, "lowrank-elim"), (2, "ucb1"), (3, "ucb1")] {
        let out = tmp.path().join(format!("run{run}"));
        let mut s = Settings::parse("K = 5\nL = 4\nd = 2\nseed = 3\nn = 20000\nseeds = 1..4\nexploration = chain")
            .unwrap();
        s.set("algo", algo).unwrap();
        s.set("output_dir", out.display().to_string()).unwrap();
        run_experiment(&s.resolve().unwrap()).unwrap();
        dirs.push(out);
    }
    let mut compared = 0;
    for pair in dirs.chunks(2) {
        let (a, b) = (read_dir(&pair[0]), read_dir(&pair[1]));
        if a.keys().ne(b.keys()) {
            return Err("artifact sets differ".into());
        }
        for (name, ta) in &a {
            let tb = &b[name];
            let same = if name.ends_with(".json") {
                strip_metadata(ta) == strip_metadata(tb)
            } else {
                ta == tb
            };
            if !same {
                return Err(format!("{name} differs between identical runs"));
            }
            compared += 1;
        }
    }
    ensure(compared >= 20, format!("{compared} artifacts byte-identical across reruns"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("1 factorization identity", 10, factorization),
        ("2 hott-topics optimum", 60, optimum_in_base),
        ("3 noise-free exactness", 30, noise_free_exact),
        ("4 estimator unbiasedness", 60, estimator),
        ("5 concentration coverage", 300, concentration),
        ("6 elimination stage", 300, elimination_stage),
        ("7 volume-gap inequality", 60, lemma2),
        ("8 permutation inequality", 60, lemma4),
        ("9 bound dominance", 600, bound_dominance),
        ("10 log regret scaling", 900, log_scaling),
        ("11 (K+L) vs KL separation", 1200, separation),
        ("12 determinism", 120, determinism),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(limit);
        let (status, msg) = match (&res, in_time) {
            (Ok(m), true) => ("PASS", m.clone()),
            (Ok(m), false) => ("FAIL", format!("{m}; exceeded {limit}s")),
            (Err(m), _) => ("FAIL", m.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} criterion {name:<28} {:>7.2}s  {msg}", took.as_secs_f64());
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
