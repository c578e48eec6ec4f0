use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use georoute::commands::{self, BenchRow};
use georoute::config::SplitFilter;
use georoute::{CliError, CliResult, RunConfig, SharedCache};
use georoute_core::harness::{AttackProtocol, Family, Regime};

#[derive(Parser)]
#[command(name = "georoute", version, about = "Geometry-aware route-risk benchmark")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory for every default path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root scenario-generation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the effective configuration as TOML before running.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate regime and family scenarios.
    Gen(GenArgs),
    /// Train the geometry gate on train-split scenarios.
    Train(TrainArgs),
    /// Evaluate scorers and write reports.
    Eval(EvalArgs),
    /// Sweep cascade criticality on expansion trees.
    Cascade(CascadeArgs),
    /// Measure per-call scorer latency.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Comma-separated regimes (clean, noise, churn, mixed, non_tree); empty for none.
    #[arg(long)]
    regimes: Option<String>,
    #[arg(long)]
    per_regime: Option<usize>,
    /// Comma-separated families (BA, WS, ER); empty for none.
    #[arg(long)]
    families: Option<String>,
    #[arg(long)]
    family_seeds: Option<usize>,
    /// severity_load, load_matched or random.
    #[arg(long)]
    protocol: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    train_seed: Option<u64>,
    #[arg(long)]
    gate: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Comma-separated scorer names.
    #[arg(long)]
    scorers: Option<String>,
    /// train, eval or all.
    #[arg(long)]
    split: Option<String>,
    /// Nine-bit gate feature mask, decimal or 0x/0b prefixed.
    #[arg(long)]
    mask: Option<String>,
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long)]
    no_families: bool,
}

#[derive(Args)]
struct CascadeArgs {
    /// Comma-separated branching factors.
    #[arg(long)]
    branching: Option<String>,
    /// Comma-separated transmission probabilities.
    #[arg(long)]
    p_grid: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    scorers: Option<String>,
    #[arg(long)]
    calls: Option<usize>,
    #[arg(long)]
    snapshots: Option<usize>,
}

fn list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| CliError::Usage(format!("invalid {what} `{x}`"))))
        .collect()
}

fn parse_mask(s: &str) -> CliResult<u16> {
    let parsed = if let Some(hex) = s.strip_prefix("0x") {
        u16::from_str_radix(hex, 16)
    } else if let Some(bin) = s.strip_prefix("0b") {
        u16::from_str_radix(bin, 2)
    } else {
        s.parse()
    };
    parsed.map_err(|_| CliError::Usage(format!("invalid feature mask `{s}`")))
}

fn effective_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.paths.out_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Gen(a) => {
            if let Some(r) = &a.regimes {
                cfg.generate.regimes = list::<Regime>(r, "regime")?;
            }
            if let Some(n) = a.per_regime {
                cfg.generate.scenarios_per_regime = n;
            }
            if let Some(f) = &a.families {
                cfg.generate.families = list::<Family>(f, "family")?;
            }
            if let Some(n) = a.family_seeds {
                cfg.generate.family_seeds = n;
            }
            if let Some(p) = &a.protocol {
                cfg.generate.protocol = p
                    .parse::<AttackProtocol>()
                    .map_err(|_| CliError::Usage(format!("invalid protocol `{p}`")))?;
            }
        }
        Command::Train(a) => {
            if let Some(e) = a.epochs {
                cfg.train.epochs = e;
            }
            if let Some(lr) = a.lr {
                cfg.train.learning_rate = lr;
            }
            if let Some(s) = a.train_seed {
                cfg.train.seed = s;
            }
            if let Some(g) = &a.gate {
                cfg.paths.gate = Some(g.clone());
            }
        }
        Command::Eval(a) => {
            if let Some(s) = &a.scorers {
                cfg.eval.scorers = list::<String>(s, "scorer")?;
            }
            if let Some(s) = &a.split {
                cfg.eval.split = match s.as_str() {
                    "train" => SplitFilter::Train,
                    "eval" => SplitFilter::Eval,
                    "all" => SplitFilter::All,
                    other => return Err(CliError::Usage(format!("invalid split `{other}`"))),
                };
            }
            if let Some(m) = &a.mask {
                cfg.eval.feature_mask = parse_mask(m)?;
            }
            if let Some(g) = &a.gate {
                cfg.paths.gate = Some(g.clone());
            }
            if a.no_families {
                cfg.eval.include_families = false;
            }
        }
        Command::Cascade(a) => {
            if let Some(b) = &a.branching {
                cfg.cascade.branching = list(b, "branching factor")?;
            }
            if let Some(p) = &a.p_grid {
                cfg.cascade.p_grid = list(p, "probability")?;
            }
            if let Some(d) = a.depth {
                cfg.cascade.depth = d;
            }
            if let Some(t) = a.trials {
                cfg.cascade.trials = t;
            }
        }
        Command::Bench(a) => {
            if let Some(s) = &a.scorers {
                cfg.bench.scorers = list::<String>(s, "scorer")?;
            }
            if let Some(c) = a.calls {
                cfg.bench.calls = c;
            }
            if let Some(n) = a.snapshots {
                cfg.bench.snapshots = n;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_bench(rows: &[BenchRow]) {
    println!("{:<26} {:>8} {:>12} {:>12} {:>12}", "scorer", "calls", "mean_us", "median_us", "p95_us");
    for r in rows {
        println!("{:<26} {:>8} {:>12.2} {:>12.2} {:>12.2}", r.scorer, r.calls, r.mean_us, r.median_us, r.p95_us);
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = effective_config(cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
    }
    let cache = SharedCache::new();
    match &cli.command {
        Command::Gen(_) => {
            let out = commands::cmd_gen(&cfg)?;
            println!("{} regime scenarios, {} family scenarios", out.regimes.len(), out.families.len());
            for p in &out.written {
                println!("wrote {}", p.display());
            }
        }
        Command::Train(_) => {
            let out = commands::cmd_train(&cfg, &cache)?;
            let pos = out.examples.iter().filter(|(_, e)| e.label).count();
            let curve = &out.model.metadata.loss_curve;
            println!(
                "{} examples ({} labelled hyperbolic), loss {:.4} -> {:.4}",
                out.examples.len(),
                pos,
                curve.first().copied().unwrap_or(f64::NAN),
                curve.last().copied().unwrap_or(f64::NAN),
            );
            println!("wrote {}", out.gate_path.display());
            println!("wrote {}", out.labels_path.display());
        }
        Command::Eval(_) => {
            let out = commands::cmd_eval(&cfg, &cache)?;
            println!("{:<26} {:>6} {:>9} {:>11} {:>12}", "scorer", "n", "win_rate", "mean_margin", "sign_p");
            for s in &out.summary.scorers {
                let p = s.sign_test_vs_native.map_or("-".to_string(), |t| format!("{:.3e}", t.p_value));
                println!(
                    "{:<26} {:>6} {:>9.3} {:>11.4} {:>12}",
                    s.scorer, s.overall.count, s.overall.win_rate, s.overall.mean_margin, p
                );
            }
            if let Some(g) = &out.summary.gate {
                let auc = g.auc.map_or("undefined".to_string(), |a| format!("{a:.3}"));
                println!("gate: auc {auc}, accuracy {:.3}, ece {:.3}", g.accuracy, g.ece);
            }
            println!("wrote {}", out.dir.display());
        }
        Command::Cascade(_) => {
            let reports = commands::cmd_cascade(&cfg)?;
            for r in &reports {
                let b = r.rows.first().map_or(f64::NAN, |row| row.b);
                let emp = r.empirical_threshold.map_or("none".to_string(), |t| format!("{t:.4}"));
                println!("b = {b}: analytic threshold {:.4}, empirical {emp}", r.analytic_threshold);
            }
            println!("wrote {}", cfg.paths.cascade().display());
        }
        Command::Bench(_) => {
            let rows = commands::cmd_bench(&cfg, &cache)?;
            print_bench(&rows);
            println!("wrote {}", cfg.paths.bench().display());
        }
    }
    Ok(())
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
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
