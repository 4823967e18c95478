use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conspec::basis::FamilyKind;
use conspec::experiments::{run_approximation, run_pde, ApproxConfig, ErrorTable, Model, PdeConfig, TestFunctionId};
use conspec::report::{write_error_table, write_pde_report, Format};
use conspec::Error;

#[derive(Parser)]
#[command(name = "conspec", version, about = "Moment-preserving spectral approximation and Galerkin solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Standard vs conservative projection errors for a test function.
    Approx {
        /// bounded_osc, hermite_bimodal, laguerre_poly or lognormal
        #[arg(long)]
        test: String,
        /// legendre, chebyshev1, chebyshev2, jacobi:<a>:<b>, hermite or laguerre
        #[arg(long)]
        basis: String,
        /// Comma-separated mode counts
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<usize>,
        /// Preserve moments 0..=Q
        #[arg(long, default_value_t = 3)]
        constraints: usize,
        #[arg(long, default_value_t = 80)]
        quad_points: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Evolve a model with standard and constrained Galerkin operators.
    Pde {
        /// fp, opinion or callcenter
        #[arg(long)]
        model: String,
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<usize>,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Long-time horizon (default 5, or 20 with --asymmetric)
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        tf_accuracy: f64,
        /// Reference mode count for the accuracy table
        #[arg(long)]
        n_ref: Option<usize>,
        /// Asymmetric Fokker-Planck initial datum
        #[arg(long)]
        asymmetric: bool,
        #[arg(long, default_value_t = 80)]
        quad_points: usize,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

fn print_diagnostics(table: &ErrorTable) {
    for c in &table.conditioning {
        eprintln!("N={:<4} cond(M)={:.3e} rho(M^-1)={:.3e}", c.n, c.cond_m, c.spectral_radius_m_inv);
    }
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.2}"));
    let f = &table.order_fit;
    eprintln!(
        "observed order: l2_std {} l2_con {} m0_std {} m0_con {}",
        show(f.l2_std),
        show(f.l2_con),
        show(f.m0_std),
        show(f.m0_con)
    );
}

fn run(cli: Cli) -> conspec::Result<()> {
    match cli.command {
        Command::Approx { test, basis, modes, constraints, quad_points, out, format } => {
            let format: Format = format.parse()?;
            let mut cfg = ApproxConfig::new(test.parse::<TestFunctionId>()?, basis.parse::<FamilyKind>()?, modes, constraints);
            cfg.quad_points = quad_points;
            let table = run_approximation(&cfg)?;
            print_diagnostics(&table);
            write_error_table(&table, &out, format)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Pde { model, modes, dt, t_final, tf_accuracy, n_ref, asymmetric, quad_points, out, format } => {
            let format: Format = format.parse()?;
            let mut cfg = PdeConfig::new(model.parse::<Model>()?, modes, asymmetric);
            cfg.dt = dt;
            cfg.tf_accuracy = tf_accuracy;
            cfg.quad_points = quad_points;
            if let Some(t) = t_final {
                cfg.t_final = t;
            }
            if let Some(n) = n_ref {
                cfg.n_ref = n;
            }
            let report = run_pde(&cfg)?;
            print_diagnostics(&report.accuracy);
            for p in write_pde_report(&report, &out, format)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    ExitCode::from(dispatch(std::env::args_os()))
}

/// Parses `args`, runs the command and returns the process exit code.
fn dispatch<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
