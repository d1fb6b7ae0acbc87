//! `thergm` command-line interface.

mod commands;
mod config;
mod failure;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;
use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "thergm", version, about = "Temporal hierarchical ERGM toolkit")]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set k=4`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a THERGM dynamic network with known memberships.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Scenario preset such as `slow-easy` supplying defaults.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "n-per-cluster")]
        n_per_cluster: Option<usize>,
        /// Number of time points.
        #[arg(long)]
        times: Option<usize>,
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        stay: Option<f64>,
        #[arg(long = "p-within")]
        p_within: Option<f64>,
        #[arg(long = "p-between")]
        p_between: Option<f64>,
    },
    /// Estimate memberships with the latent space model or the spectral baseline.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Edge CSV (`time,source,target`).
        #[arg(long)]
        net: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
        /// `dlsm` or `dsbm`.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        /// Temporal smoothing weight for the spectral baseline.
        #[arg(long)]
        smooth: Option<f64>,
    },
    /// Fit the within-cluster temporal ERGM given memberships.
    #[command(name = "fit-tergm")]
    FitTergm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        net: Option<String>,
        /// Membership CSV (`time,node,cluster`).
        #[arg(long)]
        members: Option<String>,
        /// Comma-separated terms: edges, triangles, stability.
        #[arg(long)]
        spec: Option<String>,
        /// One coefficient vector shared by all clusters.
        #[arg(long)]
        pooled: bool,
        /// Stage-one diagnostics JSON to attach to the fit.
        #[arg(long)]
        diagnostics: Option<String>,
        #[arg(long = "mcmc-samples")]
        mcmc_samples: Option<usize>,
    },
    /// Mis-clustering, transition, goodness-of-fit and AUC reports.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        truth: Option<String>,
        #[arg(long)]
        est: Option<String>,
        #[arg(long)]
        net: Option<String>,
        #[arg(long)]
        bundle: Option<String>,
        /// Edge CSV of the following time point, for link-prediction AUC.
        #[arg(long)]
        next: Option<String>,
        #[arg(long = "n-sims")]
        n_sims: Option<usize>,
        #[arg(long = "within-only")]
        within_only: bool,
    },
    /// One-step-ahead tie probabilities from a fitted bundle.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: Option<String>,
        #[arg(long)]
        net: Option<String>,
        /// Weight within-cluster dyads by the chance both nodes stay.
        #[arg(long = "expect-moves")]
        expect_moves: bool,
    },
    /// Run a preset batch and write tidy result tables.
    Scenario {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long = "n-per-cluster")]
        n_per_cluster: Option<usize>,
        /// Comma-separated subset of: cluster, theta, auc.
        #[arg(long)]
        tasks: Option<String>,
    },
    /// Re-run a command from its manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory for the re-run (default: the recorded one).
        #[arg(long)]
        out: Option<String>,
    },
}

fn build_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let put_common = |cfg: &mut Config, c: &Common| -> Result<(), Failure> {
        cfg.flag("seed", c.seed)?;
        cfg.flag("out", c.out.clone())
    };
    match &cli.command {
        Command::Simulate { common, preset, k, n_per_cluster, times, spec, stay, p_within, p_between } => {
            put_common(&mut cfg, common)?;
            cfg.flag("preset", preset.clone())?;
            cfg.flag("k", *k)?;
            cfg.flag("n_per_cluster", *n_per_cluster)?;
            cfg.flag("times", *times)?;
            cfg.flag("spec", spec.clone())?;
            cfg.flag("stay", *stay)?;
            cfg.flag("p_within", *p_within)?;
            cfg.flag("p_between", *p_between)?;
        }
        Command::Cluster { common, net, nodes, model, k, dim, burnin, samples, rho, smooth } => {
            put_common(&mut cfg, common)?;
            cfg.flag("net", net.clone())?;
            cfg.flag("nodes", *nodes)?;
            cfg.flag("model", model.clone())?;
            cfg.flag("k", *k)?;
            cfg.flag("dim", *dim)?;
            cfg.flag("burnin", *burnin)?;
            cfg.flag("samples", *samples)?;
            cfg.flag("rho", *rho)?;
            cfg.flag("smooth", *smooth)?;
        }
        Command::FitTergm { common, net, members, spec, pooled, diagnostics, mcmc_samples } => {
            put_common(&mut cfg, common)?;
            cfg.flag("net", net.clone())?;
            cfg.flag("members", members.clone())?;
            cfg.flag("spec", spec.clone())?;
            cfg.flag("pooled", pooled.then_some(true))?;
            cfg.flag("diagnostics", diagnostics.clone())?;
            cfg.flag("mcmc_samples", *mcmc_samples)?;
        }
        Command::Evaluate { common, truth, est, net, bundle, next, n_sims, within_only } => {
            put_common(&mut cfg, common)?;
            cfg.flag("truth", truth.clone())?;
            cfg.flag("est", est.clone())?;
            cfg.flag("net", net.clone())?;
            cfg.flag("bundle", bundle.clone())?;
            cfg.flag("next", next.clone())?;
            cfg.flag("n_sims", *n_sims)?;
            cfg.flag("within_only", within_only.then_some(true))?;
        }
        Command::Predict { common, bundle, net, expect_moves } => {
            put_common(&mut cfg, common)?;
            cfg.flag("bundle", bundle.clone())?;
            cfg.flag("net", net.clone())?;
            cfg.flag("expect_moves", expect_moves.then_some(true))?;
        }
        Command::Scenario { common, preset, replicates, n_per_cluster, tasks } => {
            put_common(&mut cfg, common)?;
            cfg.flag("preset", preset.clone())?;
            cfg.flag("replicates", *replicates)?;
            cfg.flag("n_per_cluster", *n_per_cluster)?;
            cfg.flag("tasks", tasks.clone())?;
        }
        Command::Replay { .. } => {}
    }
    cfg.set_pairs(&cli.sets)?;
    Ok(cfg)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate { .. } => "simulate",
        Command::Cluster { .. } => "cluster",
        Command::FitTergm { .. } => "fit-tergm",
        Command::Evaluate { .. } => "evaluate",
        Command::Predict { .. } => "predict",
        Command::Scenario { .. } => "scenario",
        Command::Replay { .. } => "replay",
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        thergm::par::set_threads(t);
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    match &cli.command {
        Command::Replay { manifest, out } => manifest::replay(manifest, out.as_deref(), &args),
        other => {
            let name = command_name(other);
            let cfg = build_config(&cli)?;
            commands::execute(name, cfg, &args)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
