use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elastoray::commands::{self, Context, RunError};
use elastoray::verify::{parse_selector, run_verify};
use elastoray::{load_scenario, read_scenario, RunManifest};

#[derive(Parser)]
#[command(name = "elastoray", version, about = "Elastic ray tracing and microlocal probes driven by scenario files")]
struct Cli {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory (default: the scenario's output_dir, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks (default: the scenario's seed, else 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override one tolerance, e.g. `--tol-override snell=1e-9`. Repeatable.
    #[arg(long = "tol-override", value_name = "KEY=VAL", global = true)]
    tol_override: Vec<String>,
    /// Worker threads.
    #[arg(long, env = "ELASTORAY_JOBS", global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace launches as broken rays.
    Trace {
        #[arg(long)]
        launch: Option<String>,
    },
    /// Travel times and exit covectors over the lens sweep.
    Lens,
    /// Reflection and transmission matrices over the angle sweep.
    Rt,
    /// Amplitude transport along ray bundles.
    Amp {
        #[arg(long)]
        bundle: Option<String>,
    },
    /// Parametrix packets on slices around the central ray.
    Packet {
        #[arg(long)]
        name: Option<String>,
    },
    /// Ray transforms of the scenario tensors along every launch.
    Rtransform,
    /// Density equation residual on every grid.
    Pde,
    /// Compare lens data with another scenario's medium.
    Lenscheck {
        #[arg(long)]
        other: PathBuf,
    },
    /// Symbol probes on packet grids.
    Probe {
        #[arg(long)]
        name: Option<String>,
    },
    /// Run invariant suites and print a pass/fail table.
    Verify {
        /// `all` or a comma-separated list of medium, raytrace, interface,
        /// amplitude, tomography, weinstein, acceptance.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Ignore a matching cached manifest.
        #[arg(long)]
        fresh: bool,
    },
}

fn run(cli: Cli) -> Result<RunManifest, RunError> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| RunError::Usage(e.to_string()))?;
    }
    let path = cli.scenario.ok_or_else(|| RunError::Usage("--scenario is required".into()))?;
    let is_verify = matches!(cli.command, Command::Verify { .. });
    // verify reports medium failures as rows, so it only parses here
    let scenario = if is_verify { read_scenario(&path)? } else { load_scenario(&path, cli.seed.unwrap_or(0))? };
    let seed = cli.seed.or(scenario.seed).unwrap_or(0);
    let mut tolerances = scenario.tolerances()?;
    for kv in &cli.tol_override {
        let (k, v) = kv.split_once('=').ok_or_else(|| RunError::Usage(format!("expected KEY=VAL, got {kv:?}")))?;
        let v: f64 = v.trim().parse().map_err(|_| RunError::Usage(format!("bad tolerance value in {kv:?}")))?;
        tolerances.set(k.trim(), v)?;
    }
    let out_dir = cli
        .out
        .or_else(|| scenario.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context { scenario, tolerances, seed, out_dir };
    match cli.command {
        Command::Trace { launch } => commands::trace(&ctx, launch.as_deref()),
        Command::Lens => commands::lens(&ctx),
        Command::Rt => commands::rt(&ctx),
        Command::Amp { bundle } => commands::amp(&ctx, bundle.as_deref()),
        Command::Packet { name } => commands::packet(&ctx, name.as_deref()),
        Command::Rtransform => commands::rtransform(&ctx),
        Command::Pde => commands::pde(&ctx),
        Command::Lenscheck { other } => {
            let other = load_scenario(&other, seed)?;
            commands::lenscheck(&ctx, &other)
        }
        Command::Probe { name } => commands::probe(&ctx, name.as_deref()),
        Command::Verify { suite, fresh } => {
            let suites = parse_selector(&suite)?;
            let m = run_verify(&ctx, &suites, fresh)?;
            print!("{}", m.table());
            Ok(m)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verify = matches!(cli.command, Command::Verify { .. });
    match run(cli) {
        Ok(m) => {
            if !verify && m.failed() {
                eprint!("{}", m.table());
            }
            ExitCode::from(if m.failed() { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
