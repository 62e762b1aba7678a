use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracwave::diagnostics::energy_ledger;
use fracwave::harness::{
    sweep_epsilon, sweep_exponent, sweep_viscosity, weak_solution_residual_study, SweepAxis,
    SweepReport,
};
use fracwave::rothe::{run, SolverParams};

use fracwave_cli::checks;
use fracwave_cli::config::{parse_syntax, AxisConfig, ConfigError, Format, RunConfig};
use fracwave_cli::export;

#[derive(Parser)]
#[command(
    name = "fracwave",
    version,
    about = "Fractional viscoelastic wave solver with obstacle constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to a JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the sweep seed recorded in metadata.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Size of the rayon thread pool (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Replace domain.N before validation (resolution studies).
    #[arg(long, global = true, value_name = "N")]
    resolution_override: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write artifacts plus a summary.
    Run,
    /// Run the configured parameter sweep and write its table.
    Sweep,
    /// Run the acceptance checklist (all of it, or one check).
    Check {
        /// Run a single check by index (1-12).
        #[arg(long, value_name = "N")]
        only: Option<usize>,
    },
    /// Re-solve and write artifacts only — no summary, same bytes as `run`.
    Export,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("--threads: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e.downcast_ref::<ConfigError>() {
                Some(_) => 2,
                None => 1,
            })
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::Check { only } => check(*only),
        Command::Run => {
            let loaded = load(cli)?;
            solve_and_write(&loaded, true)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Export => {
            let loaded = load(cli)?;
            solve_and_write(&loaded, false)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep => {
            let loaded = load(cli)?;
            sweep(&loaded)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

struct Loaded {
    config: RunConfig,
    /// Raw file bytes, hashed into the metadata.
    raw: Vec<u8>,
    seed: u64,
    out_dir: PathBuf,
}

fn load(cli: &Cli) -> anyhow::Result<Loaded> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| anyhow::anyhow!("--config PATH is required"))?;
    let raw = fs::read(path)?;
    let text = std::str::from_utf8(&raw)?;
    let mut config = parse_syntax(text)?;
    if let Some(n) = cli.resolution_override {
        config.domain.points = n;
    }
    if let Some(seed) = cli.seed {
        if let Some(sweep) = &mut config.sweep {
            sweep.seed = seed;
        }
    }
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(ConfigError::Invalid(violations).into());
    }
    let seed = cli
        .seed
        .or(config.sweep.as_ref().map(|s| s.seed))
        .unwrap_or(0);
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    Ok(Loaded { config, raw, seed, out_dir })
}

fn solve_and_write(loaded: &Loaded, summary: bool) -> anyhow::Result<()> {
    let realized = loaded.config.realize()?;
    let traj = run(
        &realized.spec,
        realized.horizon,
        realized.steps,
        &SolverParams::default(),
    )?;
    let report = energy_ledger(&traj, &realized.spec);

    // the metadata (config hash, seed, versions) accompanies every artifact
    let mut files: Vec<(&str, String)> = vec![(
        "metadata.json",
        export::Metadata::new(&loaded.raw, loaded.seed).to_json(),
    )];
    if realized.output.formats.contains(&Format::Csv) {
        files.push(("energy.csv", export::energy_csv(&report)));
        files.push((
            "trajectory.csv",
            export::trajectory_csv(
                &traj,
                realized.output.node_stride,
                realized.output.time_stride,
            ),
        ));
    }
    if realized.output.formats.contains(&Format::Json) {
        files.push(("report.json", export::run_report_json(&report, &realized.spec)));
    }
    write_files(&loaded.out_dir, &files)?;

    if summary {
        println!(
            "solved {} steps to T = {} on {} interior nodes (s = {}, ν = {:e}, ε = {:e})",
            realized.steps,
            realized.horizon,
            realized.spec.grid.interior_count(),
            realized.spec.s,
            realized.spec.nu,
            realized.spec.eps,
        );
        println!(
            "energy ledger: max residual {:.3e}, final residual {:.3e}",
            report.max_residual(),
            report.final_residual()
        );
        for (name, _) in &files {
            println!("wrote {}", loaded.out_dir.join(name).display());
        }
    }
    Ok(())
}

fn sweep(loaded: &Loaded) -> anyhow::Result<()> {
    let realized = loaded.config.realize()?;
    let plan = realized
        .sweep
        .ok_or_else(|| anyhow::anyhow!("config has no sweep section"))?;
    let sweep_cfg = loaded.config.sweep.as_ref().unwrap();
    let report: SweepReport = match plan.axis {
        SweepAxis::Epsilon => sweep_epsilon(&plan)?,
        SweepAxis::Viscosity => sweep_viscosity(&plan)?,
        SweepAxis::ExponentS => sweep_exponent(&plan)?,
        SweepAxis::Timestep => {
            let resolutions: Vec<(usize, f64)> = sweep_cfg
                .values
                .iter()
                .map(|&n| (n as usize, plan.base.eps))
                .collect();
            weak_solution_residual_study(
                &plan.base,
                plan.horizon,
                &resolutions,
                plan.library_size,
                plan.seed,
            )?
        }
    };

    let axis_name = match sweep_cfg.axis {
        AxisConfig::Epsilon => "epsilon",
        AxisConfig::Viscosity => "viscosity",
        AxisConfig::ExponentS => "exponent_s",
        AxisConfig::Timestep => "timestep",
    };
    let mut files: Vec<(&str, String)> = vec![(
        "metadata.json",
        export::Metadata::new(&loaded.raw, loaded.seed).to_json(),
    )];
    if realized.output.formats.contains(&Format::Csv) {
        files.push(("sweep.csv", export::sweep_csv(&report)));
    }
    if realized.output.formats.contains(&Format::Json) {
        files.push(("sweep.json", export::sweep_report_json(&report)));
    }
    write_files(&loaded.out_dir, &files)?;

    println!(
        "{axis_name} sweep over {:?}: {}",
        sweep_cfg.values,
        if report.pass { "converged" } else { "NOT converged" }
    );
    println!(
        "Cauchy gaps (L² in space-time): {:?}; decreasing: {}",
        report.cauchy_qt, report.cauchy_decreasing
    );
    for note in &report.notes {
        println!("note: {note}");
    }
    for (name, _) in &files {
        println!("wrote {}", loaded.out_dir.join(name).display());
    }
    if !report.pass {
        anyhow::bail!("sweep did not meet its convergence criteria");
    }
    Ok(())
}

fn write_files(dir: &Path, files: &[(&str, String)]) -> std::io::Result<()> {
    let pairs: Vec<(&str, &str)> = files.iter().map(|(n, s)| (*n, s.as_str())).collect();
    export::write_all(dir, &pairs)
}

fn check(only: Option<usize>) -> anyhow::Result<ExitCode> {
    let indices: Vec<usize> = match only {
        Some(i) => {
            if !(1..=checks::COUNT).contains(&i) {
                anyhow::bail!("--only must lie in 1..={}", checks::COUNT);
            }
            vec![i]
        }
        None => (1..=checks::COUNT).collect(),
    };
    let mut all_ok = true;
    for i in indices {
        let outcome = checks::run_check(i);
        println!("{}", outcome.line());
        all_ok &= outcome.ok();
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
