use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nvnmr_cli::{
    constants_report, detect_time_csv, n_dd_sweep_csv, optimize_geometry_report, run_validation,
    CliError, Depth, ScenarioConfig,
};
use nvnmr_core::{FormVariant, GammaConvention, GeometryVariant};

#[derive(Parser)]
#[command(
    name = "nvnmr",
    version,
    about = "Detection-time sweeps and checks for NV-ensemble NMR"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Angular,
    Cyclic,
}

#[derive(Clone, Copy, ValueEnum)]
enum DepthArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Sep,
    Ent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Printed,
    Corrected,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// JSON scenario file; NV1 defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the convention of the config file.
    #[arg(long, value_enum)]
    gamma_convention: Option<Convention>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep z_min and write both detection times as CSV.
    DetectTime {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output path; overrides the config `output`. Stdout when neither is set.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Repeat the sweep for n_DD in {3, 15, 63, 255} on the NV3 sample.
        #[arg(long)]
        n_dd_sweep: bool,
    },
    /// Run the validation suites; exit status 1 when a normative check fails.
    Validate {
        #[arg(long, value_enum, default_value = "fast")]
        depth: DepthArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Minimize the dimensionless geometry objective.
    OptimizeGeometry {
        #[arg(value_enum)]
        variant: Variant,
        #[arg(long, value_enum, default_value = "corrected")]
        f_ent_variant: Form,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-derive the detection-time prefactors next to the published ones.
    Constants {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load(args: &ScenarioArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(c) = args.gamma_convention {
        cfg.gamma_convention = match c {
            Convention::Angular => GammaConvention::Angular,
            Convention::Cyclic => GammaConvention::Cyclic,
        };
    }
    Ok(cfg)
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::DetectTime {
            scenario,
            output,
            n_dd_sweep,
        } => {
            let cfg = load(&scenario)?;
            let csv = if n_dd_sweep {
                n_dd_sweep_csv(&cfg)?
            } else {
                detect_time_csv(&cfg)?
            };
            emit(&csv, output.as_deref().or(cfg.output.as_deref()))?;
        }
        Command::Validate { depth, output } => {
            let depth = match depth {
                DepthArg::Fast => Depth::Fast,
                DepthArg::Full => Depth::Full,
            };
            let report = run_validation(depth)?;
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            let text = format!(
                "validate --depth {}\n{}overall: {verdict}\n",
                depth.name(),
                report.render()
            );
            emit(&text, output.as_deref())?;
            return Ok(report.passed());
        }
        Command::OptimizeGeometry {
            variant,
            f_ent_variant,
            output,
        } => {
            let variant = match variant {
                Variant::Sep => GeometryVariant::Sep,
                Variant::Ent => GeometryVariant::Ent,
            };
            let form = match f_ent_variant {
                Form::Printed => FormVariant::Printed,
                Form::Corrected => FormVariant::Corrected,
            };
            emit(&optimize_geometry_report(variant, form)?, output.as_deref())?;
        }
        Command::Constants { scenario, output } => {
            let cfg = load(&scenario)?;
            emit(&constants_report(&cfg)?.render(), output.as_deref())?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
