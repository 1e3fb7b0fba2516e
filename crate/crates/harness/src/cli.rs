use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lowrank_bandit::analysis::theorem1_bound;
use lowrank_bandit::environment::generate_instance;

use crate::config::Settings;
use crate::error::{io_err, Result};
use crate::run::{load_instance, run_experiment};
use crate::suites::{run_suite, Suite, SuiteOptions};

#[derive(Debug, Parser)]
#[command(name = "lowrank", version, about = "Stochastic low-rank bandit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an algorithm over a list of seeds and write artifacts.
    Run(ConfigArgs),
    /// Run a verification suite (lemmas, scaling, estimators).
    Verify(VerifyArgs),
    /// Same as `verify`, with the suite given by `--suite`.
    Check(CheckArgs),
    /// Generate an instance and print or save it as JSON.
    GenInstance(GenArgs),
    /// Print the regret bound for a configuration.
    Bound(ConfigArgs),
}

#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Instance generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_cmin: Option<f64>,
    #[arg(long)]
    pub min_gap: Option<f64>,
    /// Serialized instance instead of generating one.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// bernoulli, truncated-gaussian or noiseless.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// lowrank-elim, ucb1 or noise-free.
    #[arg(long)]
    pub algo: Option<String>,
    /// restricted or chain.
    #[arg(long)]
    pub exploration: Option<String>,
    /// best-entry or sum-entries.
    #[arg(long)]
    pub regret_mode: Option<String>,
    #[arg(long)]
    pub realized_regret: bool,
    /// Horizon.
    #[arg(long)]
    pub n: Option<u64>,
    /// Run seeds, e.g. `1..20` or `1,5,9`.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip per-step trace files.
    #[arg(long)]
    pub no_steps: bool,
}

impl ConfigArgs {
    pub fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        let path = |p: &PathBuf| p.display().to_string();
        let pairs: [(&str, Option<String>); 17] = [
            ("K", self.k.map(|v| v.to_string())),
            ("L", self.l.map(|v| v.to_string())),
            ("d", self.d.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("min_cmin", self.min_cmin.map(|v| v.to_string())),
            ("min_gap", self.min_gap.map(|v| v.to_string())),
            ("instance", self.instance.as_ref().map(path)),
            ("noise", self.noise.clone()),
            ("sigma", self.sigma.map(|v| v.to_string())),
            ("algo", self.algo.clone()),
            ("exploration", self.exploration.clone()),
            ("regret_mode", self.regret_mode.clone()),
            ("realized_regret", self.realized_regret.then(|| "true".to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("seeds", self.seeds.clone()),
            ("master_seed", self.master_seed.map(|v| v.to_string())),
            ("output_dir", self.out.as_ref().map(path)),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, v)?;
            }
        }
        if self.no_steps {
            s.set("record_steps", "false")?;
        }
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: String,
    #[command(flatten)]
    pub opts: SuiteArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub suite: String,
    #[command(flatten)]
    pub opts: SuiteArgs,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Horizons for the scaling suite, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<u64>>,
    /// Seeds per sweep point.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long = "L")]
    pub l: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub min_cmin: f64,
    #[arg(long, default_value_t = 0.0)]
    pub min_gap: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Runs a parsed command. `Ok(false)` means a suite ran and failed.
pub fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.settings()?.resolve()?;
            let report = run_experiment(&cfg)?;
            let a = &report.aggregate;
            println!(
                "{} run(s) of {} written to {}",
                a.runs,
                cfg.algorithm,
                report.output_dir.display()
            );
            println!(
                "final regret: median {:.3}  p25 {:.3}  p75 {:.3}  mean {:.3}",
                a.median, a.p25, a.p75, a.mean
            );
            if let Some(m) = report.all_found_match() {
                println!("found matches oracle: {m}");
            }
            Ok(true)
        }
        Command::Verify(VerifyArgs { suite, opts }) | Command::Check(CheckArgs { suite, opts }) => {
            let suite: Suite = suite.parse()?;
            let mut o = SuiteOptions::default();
            if let Some(ns) = opts.ns {
                o.ns = ns;
            }
            if let Some(s) = opts.seeds {
                o.seeds = s;
            }
            let report = run_suite(suite, &o)?;
            print!("{}", report.render());
            if let Some(p) = opts.json {
                fs::write(&p, serde_json::to_string_pretty(&report)?).map_err(io_err(&p))?;
            }
            println!("suite {}: {}", suite_name(suite), if report.passed() { "PASS" } else { "FAIL" });
            Ok(report.passed())
        }
        Command::GenInstance(g) => {
            let inst = generate_instance(g.k, g.l, g.d, g.seed, g.min_cmin, g.min_gap)?;
            let text = inst.to_json()?;
            match g.out {
                Some(p) => fs::write(&p, text + "\n").map_err(io_err(&p))?,
                None => println!("{text}"),
            }
            Ok(true)
        }
        Command::Bound(args) => {
            let cfg = args.settings()?.resolve()?;
            let inst = load_instance(&cfg.instance)?;
            let b = theorem1_bound(&inst, cfg.horizon)?;
            let c = &b.components;
            println!("n            {}", c.n);
            println!("C(n)         {:.6}", c.c_n);
            println!("c_min        {:.6e}", c.c_min);
            println!("c_max        {:.6e}", c.c_max);
            println!("delta_min    {:.6e}", c.delta_min);
            println!("bound        {:.6e}", b.theorem1_value);
            println!("chain bound  {:.6e}", b.chain_variant_value);
            Ok(true)
        }
    }
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Lemmas => "lemmas",
        Suite::Scaling => "scaling",
        Suite::Estimators => "estimators",
    }
}
