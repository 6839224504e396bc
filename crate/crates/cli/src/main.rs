use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ilnlab::distributions::{read_dataset, write_dataset};
use ilnlab::harness::{self, config_names, emit_csv_named, run_sweep_with_workers, write_json, ExperimentConfig};
use ilnlab::minimax::{minimax_report, write_floor_csv};
use ilnlab::verify::{run_suite, Suite, VerifyOptions};
use ilnlab::{
    bound, empirical_risk, erm_convex, erm_zero_one_finite, exact_risk, gap_constant, mc_risk, sample_dataset,
    BoundInputs, BoundKind, ClassDistribution, Hypothesis, HypothesisSpace, LabelChannel, LossKind,
};

#[derive(Parser)]
#[command(name = "ilnlab", version, about = "Label-noise risk-gap experiments and bound checks")]
struct Cli {
    /// Experiment configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed; meaning depends on the subcommand.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset with clean and noisy labels.
    Generate(GenerateArgs),
    /// Fit ERM on one label channel and write the hypothesis as JSON.
    Train(TrainArgs),
    /// Empirical and population risks of a stored hypothesis.
    Evaluate(EvaluateArgs),
    /// Evaluate one closed-form bound.
    Bounds(BoundsArgs),
    /// Run a configured (n, rho, seed) sweep and write CSV / JSON.
    Sweep(SweepArgs),
    /// Report on the three-point lower-bound construction.
    Minimax(MinimaxArgs),
    /// Run the self-check suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Sample size (default: first swept n).
    #[arg(long)]
    n: Option<usize>,
    /// Noise level (default: first swept rho).
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "noisy")]
    channel: LabelChannel,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    hypothesis: PathBuf,
    /// Dataset for empirical risks on both channels.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Loss (default: the config's loss, else zero_one).
    #[arg(long)]
    loss: Option<LossKind>,
    /// Noise level for population risks (needs --config).
    #[arg(long)]
    rho: Option<f64>,
    /// Monte-Carlo draws for synthetic laws.
    #[arg(long, default_value_t = 1_000_000)]
    draws: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Args)]
struct BoundsArgs {
    /// lemma2, theorem1, corollary1, prop_linear, prop_rkhs, theorem2_lower, lemma6_lower
    #[arg(long)]
    kind: BoundKind,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    lipschitz: Option<f64>,
    #[arg(long)]
    feature_radius: Option<f64>,
    #[arg(long)]
    weight_radius: Option<f64>,
    #[arg(long)]
    kernel_radius: Option<f64>,
    #[arg(long)]
    norm_bound: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON detail output (overrides [output] json).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Worker threads (overrides ILNLAB_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct MinimaxArgs {
    /// Noise levels in (0, 1); repeat or separate with commas.
    #[arg(long, value_delimiter = ',', default_value = "0.4")]
    rho: Vec<f64>,
    /// Largest enumerated sample size.
    #[arg(long, default_value_t = 4)]
    n_max: usize,
    /// Random lookup estimators per sample size.
    #[arg(long, default_value_t = 100)]
    estimators: usize,
    /// CSV of (rho, excess_sum, lemma6_lower, theorem2_lower) rows.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[arg(long)]
    trials: Option<usize>,
    /// Simulated flips per tuple in the lemma1 suite.
    #[arg(long, default_value_t = 1_000_000)]
    draws: usize,
}

enum Outcome {
    Ok,
    VerificationFailed,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let path = path.ok_or_else(|| anyhow!("--config is required"))?;
    Ok(ExperimentConfig::load(path)?)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn generate(cli: &Cli, args: &GenerateArgs) -> Result<Outcome> {
    let cfg = load_config(cli.config.as_deref())?;
    let out = cli.out.as_ref().ok_or_else(|| anyhow!("--out is required"))?;
    let n = args.n.unwrap_or(cfg.sweep.n[0]);
    let rho = args.rho.unwrap_or(cfg.sweep.rho[0]);
    let seed = cli.seed.unwrap_or(cfg.sweep.seeds[0]);
    let dist = cfg.distribution(rho)?;
    let noise = cfg.noise(rho)?;
    let data = sample_dataset(&dist, &noise, n, seed)?;
    write_dataset(&data, out)?;
    print_json(&data.meta())?;
    Ok(Outcome::Ok)
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<Outcome> {
    let cfg = load_config(cli.config.as_deref())?;
    let out = cli.out.as_ref().ok_or_else(|| anyhow!("--out is required"))?;
    let data = read_dataset(&args.data)?;
    let space = cfg.space()?;
    let loss = cfg.loss.kind;
    let h = match &space {
        HypothesisSpace::FiniteSign { domain } => erm_zero_one_finite(&data, args.channel, domain)?,
        _ => erm_convex(&data, args.channel, &space, loss, &cfg.solver)?,
    };
    write_text(out, &(h.to_json()? + "\n"))?;
    let risk = empirical_risk(&h, &data, loss, args.channel)?;
    print_json(&serde_json::json!({
        "channel": args.channel,
        "loss": loss,
        "empirical_risk": risk,
        "solver_tolerance": h.solver_tolerance,
        "hypothesis": out,
    }))?;
    Ok(Outcome::Ok)
}

fn evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&args.hypothesis).with_context(|| format!("reading {}", args.hypothesis.display()))?;
    let h = Hypothesis::from_json(&text)?;
    let cfg = cli.config.as_deref().map(|p| load_config(Some(p))).transpose()?;
    let loss = args
        .loss
        .or(cfg.as_ref().map(|c| c.loss.kind))
        .unwrap_or(LossKind::ZeroOne);
    let mut report = serde_json::Map::new();
    report.insert("loss".into(), serde_json::to_value(loss)?);
    if let Some(path) = &args.data {
        let data = read_dataset(path)?;
        report.insert("empirical_clean".into(), empirical_risk(&h, &data, loss, LabelChannel::Clean)?.into());
        report.insert("empirical_noisy".into(), empirical_risk(&h, &data, loss, LabelChannel::Noisy)?.into());
    }
    if let Some(cfg) = &cfg {
        let rho = args.rho.unwrap_or(cfg.sweep.rho[0]);
        let dist = cfg.distribution(rho)?;
        let noise = cfg.noise(rho)?;
        report.insert("rho".into(), rho.into());
        match &dist {
            ClassDistribution::Finite(d) => {
                report.insert("risk_clean".into(), exact_risk(&h, d, None, loss)?.into());
                report.insert("risk_noisy".into(), exact_risk(&h, d, Some(&noise), loss)?.into());
                report.insert("ci_half_width".into(), 0.0.into());
            }
            ClassDistribution::Synthetic(_) => {
                let seed = cli.seed.unwrap_or(0);
                let clean = mc_risk(&h, &dist, None, loss, args.draws, args.delta, seed)?;
                let noisy = mc_risk(&h, &dist, Some(&noise), loss, args.draws, args.delta, seed)?;
                report.insert("risk_clean".into(), clean.estimate.into());
                report.insert("risk_noisy".into(), noisy.estimate.into());
                report.insert("ci_half_width".into(), clean.ci_half_width.into());
                report.insert("ci_delta".into(), args.delta.into());
            }
        }
    }
    if args.data.is_none() && cfg.is_none() {
        bail!("nothing to evaluate: pass --data and/or --config");
    }
    let value = serde_json::Value::Object(report);
    if let Some(out) = &cli.out {
        write_text(out, &(serde_json::to_string_pretty(&value)? + "\n"))?;
    }
    print_json(&value)?;
    Ok(Outcome::Ok)
}

fn bounds_cmd(cli: &Cli, args: &BoundsArgs) -> Result<Outcome> {
    let mut inputs = BoundInputs {
        c: args.c,
        rho: args.rho,
        g: args.g,
        lipschitz: args.lipschitz,
        feature_radius: args.feature_radius,
        weight_radius: args.weight_radius,
        kernel_radius: args.kernel_radius,
        norm_bound: args.norm_bound,
        n: args.n,
        delta: args.delta,
    };
    if let Some(path) = cli.config.as_deref() {
        let cfg = load_config(Some(path))?;
        let space = cfg.space()?;
        let loss = cfg.loss.kind;
        inputs.c = inputs.c.or(Some(gap_constant(loss, &space)?));
        inputs.rho = inputs.rho.or(Some(cfg.sweep.rho[0]));
        inputs.n = inputs.n.or(Some(cfg.sweep.n[0]));
        inputs.delta = inputs.delta.or(Some(cfg.sweep.delta));
        inputs.lipschitz = inputs.lipschitz.or(loss.lipschitz_on(space.score_bound()));
        match space {
            HypothesisSpace::LinearBall {
                feature_radius,
                weight_radius,
                ..
            } => {
                inputs.feature_radius = inputs.feature_radius.or(Some(feature_radius));
                inputs.weight_radius = inputs.weight_radius.or(Some(weight_radius));
            }
            HypothesisSpace::RkhsBall { norm_bound, .. } => {
                inputs.kernel_radius = inputs.kernel_radius.or(Some(1.0));
                inputs.norm_bound = inputs.norm_bound.or(Some(norm_bound));
            }
            HypothesisSpace::FiniteSign { .. } => {}
        }
    }
    let report = bound(args.kind, &inputs)?;
    if let Some(out) = &cli.out {
        write_text(out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    print_json(&report)?;
    Ok(Outcome::Ok)
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<Outcome> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.sweep.master_seed = seed;
    }
    let workers = match args.workers {
        Some(w) => w,
        None => harness::worker_count()?,
    };
    let csv = cli.out.clone().or(cfg.output.csv.clone());
    let json = args.json.clone().or(cfg.output.json.clone());
    if csv.is_none() && json.is_none() {
        bail!("no output: pass --out or set [output] csv / json");
    }
    let results = run_sweep_with_workers(&cfg, workers)?;
    if let Some(path) = &csv {
        emit_csv_named(&results, path, &config_names(&cfg))?;
    }
    if let Some(path) = &json {
        write_json(&results, path)?;
    }
    for s in &results.summary {
        println!(
            "n={} rho={} runs={} errors={} median_gap={} within_theorem1={}",
            s.n,
            harness::fmt_float(s.rho),
            s.runs,
            s.errors,
            s.median_gap.map_or("-".into(), harness::fmt_float),
            s.frac_within_theorem1.map_or("-".into(), harness::fmt_float),
        );
    }
    Ok(Outcome::Ok)
}

fn minimax(cli: &Cli, args: &MinimaxArgs) -> Result<Outcome> {
    let seed = cli.seed.unwrap_or(0);
    let reports = args
        .rho
        .iter()
        .map(|rho| minimax_report(*rho, args.n_max, args.estimators, seed))
        .collect::<ilnlab::Result<Vec<_>>>()?;
    let value = if reports.len() == 1 {
        serde_json::to_value(&reports[0])?
    } else {
        serde_json::to_value(&reports)?
    };
    let text = serde_json::to_string_pretty(&value)? + "\n";
    if let Some(out) = &cli.out {
        write_text(out, &text)?;
    }
    if let Some(path) = &args.csv {
        write_floor_csv(&reports, path)?;
    }
    print!("{text}");
    let ok = reports.iter().all(|r| r.indistinguishable && r.all_sums_equal);
    Ok(if ok { Outcome::Ok } else { Outcome::VerificationFailed })
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Result<Outcome> {
    let opts = VerifyOptions {
        trials: args.trials,
        draws: args.draws,
        seed: cli.seed.unwrap_or(0),
    };
    let report = run_suite(args.suite, &opts)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = report.passed();
    println!(
        "suite {}: {} ({}/{} checks passed)",
        report.suite,
        if passed { "pass" } else { "fail" },
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len()
    );
    if let Some(out) = &cli.out {
        write_text(out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    Ok(if passed { Outcome::Ok } else { Outcome::VerificationFailed })
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Train(a) => train(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::Bounds(a) => bounds_cmd(cli, a),
        Command::Sweep(a) => sweep(cli, a),
        Command::Minimax(a) => minimax(cli, a),
        Command::Verify(a) => verify(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
