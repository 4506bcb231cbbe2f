use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lienard::cycles::ScanConfig;
use lienard::IntegratorConfig;
use lienard_cli::{CliError, Settings};

#[derive(Parser)]
#[command(
    name = "lienard",
    version,
    about = "Construct Liénard systems and locate their limit cycles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    integrator: IntegratorArgs,
}

#[derive(Args)]
struct IntegratorArgs {
    /// Relative tolerance of the integrator.
    #[arg(long, global = true, env = "LIENARD_RTOL")]
    rtol: Option<f64>,
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Integration time limit per return.
    #[arg(long, global = true)]
    max_time: Option<f64>,
    /// Embedded pair: dopri5, rkf45 or cash-karp.
    #[arg(long, global = true)]
    method: Option<String>,
}

#[derive(Args)]
struct ScanArgs {
    /// Upper end of the y-axis scan.
    #[arg(long)]
    ymax: Option<f64>,
    /// Initial scan grid size.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an extension plan and write the resulting system.
    Construct {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate all limit cycles of a system.
    FindCycles {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Check the hypotheses of the cycle-count theorem; exit 0 iff they hold.
    Check {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Integrate full turns from (0, y0) and write a t,x,y trace.
    Simulate {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        y0: f64,
        #[arg(long, default_value_t = 1)]
        turns: usize,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Draw F and the limit cycles as SVG.
    Plot {
        #[arg(long)]
        system: PathBuf,
        /// A find-cycles or check report; cycles are located inline otherwise.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        svg: PathBuf,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Compare |H(f(s))| with |f(s)| for each extension step.
    Odani {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

fn settings(integ: &IntegratorArgs, scan: Option<&ScanArgs>) -> Result<Settings, CliError> {
    let mut integrator = IntegratorConfig::default();
    if let Some(v) = integ.rtol {
        integrator.rel_tol = v;
    }
    if let Some(v) = integ.atol {
        integrator.abs_tol = v;
    }
    if let Some(v) = integ.max_time {
        integrator.max_time = v;
    }
    if let Some(m) = &integ.method {
        integrator.method = m.clone();
    }
    let mut s = Settings {
        integrator,
        scan: ScanConfig::default(),
        y_max: None,
    };
    if let Some(scan) = scan {
        s.y_max = scan.ymax;
        if let Some(g) = scan.grid {
            s.scan.grid = g;
        }
    }
    s.validate()?;
    Ok(s)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = &mut io::stdout();
    match &cli.command {
        Command::Construct { plan, out: path } => lienard_cli::construct(plan, path, out),
        Command::FindCycles { system, report, scan } => {
            lienard_cli::find_cycles(system, report, &settings(&cli.integrator, Some(scan))?, out)
        }
        Command::Check { system, report, scan } => {
            let r = lienard_cli::check(system, report.as_deref(), &settings(&cli.integrator, Some(scan))?, out)?;
            if r.passes() {
                return Ok(());
            }
            let failed = lienard_cli::failed_conditions(&r);
            Err(CliError::CheckFailed(if failed.is_empty() {
                format!(
                    "expected {} cycles, found {}",
                    r.cycle_count_expected,
                    r.cycles_found.len()
                )
            } else {
                format!("conditions failing: {}", failed.join(", "))
            }))
        }
        Command::Simulate { system, y0, turns, csv } => {
            lienard_cli::simulate(system, *y0, *turns, csv, &settings(&cli.integrator, None)?, out)
        }
        Command::Plot {
            system,
            report,
            svg,
            scan,
        } => lienard_cli::plot(system, report.as_deref(), svg, &settings(&cli.integrator, Some(scan))?),
        Command::Odani { plan, report } => lienard_cli::odani(plan, report, out).map(|_| ()),
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let head: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.trim().is_empty() && !l.starts_with("Usage:"))
                .collect();
            eprintln!(
                "error[Usage]: {}",
                one_line(head.join(" ").trim_start_matches("error: "))
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
