use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use backaction_core::optics::BetaConvention;
use backaction_sim::compile::{cmd_compile, parse_param, CompileError};
use backaction_sim::config::{parse_energies, BackendKind, Format, ResolvedRun, RunConfig, SchemeChoice};
use backaction_sim::output::{emit, meta_line, record_rows, to_csv, RECORD_COLUMNS};
use backaction_sim::reproduce::{cmd_reproduce, Target};
use backaction_sim::run::{execute, CliError, RunRecord};
use backaction_sim::sweep::{cmd_sweep, Grid, SweepSpec, SweepVar};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

const EXIT_THRESHOLD: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "backaction-sim", version, about = "TPM versus collective-measurement work statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one configuration.
    Run(RunArgs),
    /// Evaluate a configuration over a grid of one variable.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "var", value_enum)]
        variable: SweepVar,
        /// Explicit comma-separated grid.
        #[arg(long, conflicts_with = "range")]
        grid: Option<String>,
        /// Evenly spaced grid `start:stop:count`.
        #[arg(long)]
        range: Option<String>,
    },
    /// Compare theory with the embedded experimental dataset.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Compile a `.qc` circuit to a POVM and validate it.
    Compile {
        file: PathBuf,
        /// Parameter override `name=value` in degrees; repeatable.
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeChoice>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    alpha_deg: Option<f64>,
    #[arg(long)]
    phase_deg: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta_deg: Option<f64>,
    #[arg(long)]
    beta_deg: Option<f64>,
    #[arg(long)]
    gamma_deg: Option<f64>,
    #[arg(long)]
    beta_convention: Option<BetaConvention>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `E0,E1,E0p,E1p`
    #[arg(long, allow_hyphen_values = true)]
    energies: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io { path: p.display().to_string(), message: e.to_string() })?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = self.scheme {
            c.scheme = s;
        }
        if self.p0.is_some() || self.alpha_deg.is_some() {
            c.state.p0 = self.p0;
            c.state.alpha_deg = self.alpha_deg;
        }
        if self.phase_deg.is_some() {
            c.state.phase_deg = self.phase_deg;
        }
        if self.theta_deg.is_some() || self.beta_deg.is_some() || self.gamma_deg.is_some() {
            c.process.theta_deg = self.theta_deg;
            c.process.beta_deg = self.beta_deg;
            c.process.gamma_deg = self.gamma_deg;
        }
        if self.beta_convention.is_some() {
            c.process.beta_convention = self.beta_convention;
        }
        if let Some(b) = self.backend {
            c.backend.kind = b;
        }
        if self.shots.is_some() {
            c.backend.shots = self.shots;
        }
        if self.seed.is_some() {
            c.backend.seed = self.seed;
        }
        if let Some(e) = &self.energies {
            c.energies = Some(parse_energies(e)?);
        }
        if self.out.is_some() {
            c.output.path = self.out.clone();
        }
        if let Some(f) = self.format {
            c.output.format = f;
        }
        Ok(c)
    }
}

fn run_meta(command: &str, run: &ResolvedRun, extra: &[(&str, String)]) -> String {
    let seed = match run.backend {
        backaction_sim::config::Backend::MonteCarlo(cfg) => cfg.seed.to_string(),
        _ => "none".into(),
    };
    let energies = if run.h.energies().iter().chain(run.h_prime.energies()).all(|e| *e == 0.0) {
        "degenerate".to_string()
    } else {
        format!("{:?}/{:?}", run.h.energies(), run.h_prime.energies())
    };
    let mut pairs = vec![
        ("command", command.to_string()),
        ("backend", run.backend.name().to_string()),
        ("seed", seed),
        ("beta_convention", run.convention.name().to_string()),
        ("energies", energies),
    ];
    if matches!(run.backend, backaction_sim::config::Backend::MonteCarlo(_)) {
        pairs.push(("error_bars", "binomial normal approximation, simulation only".into()));
    }
    if run.theta.to_degrees() > 45.0 + 1e-9 {
        pairs.push(("note", "theta above 45 deg uses lambda = cot(theta)".into()));
    }
    pairs.extend(extra.iter().cloned());
    meta_line(&pairs)
}

fn write_records(
    config: &RunConfig,
    run: &ResolvedRun,
    command: &str,
    var: Option<SweepVar>,
    records: &[(Option<f64>, RunRecord)],
) -> Result<(), CliError> {
    let extra: Vec<(&str, String)> = var.map(|v| vec![("variable", v.column().to_string())]).unwrap_or_default();
    let meta = run_meta(command, run, &extra);
    let text = match config.output.format {
        Format::Csv => {
            let mut header: Vec<String> = var.map(|v| vec![v.column().to_string()]).unwrap_or_default();
            header.extend(RECORD_COLUMNS.iter().map(|s| s.to_string()));
            let rows: Vec<Vec<String>> = records
                .iter()
                .flat_map(|(x, r)| {
                    record_rows(r).into_iter().map(move |row| {
                        let mut full: Vec<String> = x.map(|v| vec![backaction_sim::output::num(v)]).unwrap_or_default();
                        full.extend(row);
                        full
                    })
                })
                .collect();
            to_csv(&meta, &header, &rows)?
        }
        Format::Json => {
            let points: Vec<_> = records.iter().map(|(x, r)| json!({ "grid_value": x, "record": r })).collect();
            let body = json!({ "meta": meta.trim_start_matches("# "), "points": points });
            serde_json::to_string_pretty(&body).expect("records serialize") + "\n"
        }
    };
    emit(&text, config.output.path.as_deref())
}

fn grid(args_grid: &Option<String>, range: &Option<String>) -> Result<Grid, CliError> {
    match (args_grid, range) {
        (Some(g), _) => Ok(SweepSpec::parse_list(g)?),
        (None, Some(r)) => Ok(SweepSpec::parse_range(r)?),
        (None, None) => Err(CliError::Input("sweep needs --grid or --range".into())),
    }
}

fn real_main(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = args.config()?;
            let run = config.resolve()?;
            let record = execute(&run)?;
            write_records(&config, &run, "run", None, &[(None, record)])?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { run: args, variable, grid: g, range } => {
            let mut config = args.config()?;
            let spec = SweepSpec { variable, grid: grid(&g, &range)? };
            let first = spec.points()?[0];
            match variable {
                SweepVar::Beta => {
                    config.process = backaction_sim::config::ProcessSpec {
                        beta_deg: Some(first),
                        beta_convention: config.process.beta_convention,
                        ..Default::default()
                    }
                }
                SweepVar::Theta => {
                    config.process = backaction_sim::config::ProcessSpec {
                        theta_deg: Some(first),
                        beta_convention: config.process.beta_convention,
                        ..Default::default()
                    }
                }
                SweepVar::Alpha => {
                    config.state.p0 = None;
                    config.state.alpha_deg = Some(first);
                }
                SweepVar::P0 => {
                    config.state.alpha_deg = None;
                    config.state.p0 = Some(first);
                }
            }
            let run = config.resolve()?;
            let rows = cmd_sweep(&config, &spec)?;
            let rows: Vec<_> = rows.into_iter().map(|(x, r)| (Some(x), r)).collect();
            write_records(&config, &run, "sweep", Some(variable), &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Reproduce { target, out, format } => {
            let rep = cmd_reproduce(target)?;
            let text = match format {
                Format::Csv => rep.csv()?,
                Format::Json => serde_json::to_string_pretty(&rep).expect("report serializes") + "\n",
            };
            emit(&text, out.as_deref())?;
            eprint!("{}", rep.report());
            Ok(if rep.passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_THRESHOLD) })
        }
        Command::Compile { file, params, out } => {
            let overrides: BTreeMap<String, f64> = params.iter().map(|p| parse_param(p)).collect::<Result<_, _>>()?;
            match cmd_compile(&file, &overrides) {
                Ok(report) => {
                    emit(&(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"), out.as_deref())?;
                    eprintln!(
                        "completeness residual {:.3e}; min eigenvalue {:.3e}; {}",
                        report.completeness_residual,
                        report.min_eigenvalues.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min),
                        if report.valid { "valid" } else { "INVALID" }
                    );
                    Ok(if report.valid { ExitCode::SUCCESS } else { ExitCode::from(EXIT_THRESHOLD) })
                }
                Err(CompileError::Diagnostic { file, diagnostic }) => {
                    eprintln!("error: {file}: {diagnostic}");
                    Ok(ExitCode::from(EXIT_INPUT))
                }
                Err(CompileError::Other(e)) => Err(e),
            }
        }
    }
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
