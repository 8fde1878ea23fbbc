use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cvkraus::fock_core::{Cutoff, FockState};
use cvkraus::gkp_ec::{EcVariant, OutcomeGrid};
use cvkraus::harness::{
    fock_wavefunction_rows, parse_grid, run_all, run_identity, run_sweep, wavefunction_rows, write_identity_report,
    write_sweep_csv, write_wavefunction_csv, SweepParameter, SweepSpec, DEFAULT_BETAS, DEFAULT_CUTOFF,
};
use cvkraus::states::{
    comb_gaussian_wavefunction, gkp_codeword, gkp_plus_minus, qunaught, AncillaKind, AncillaSpec, Quadrature,
};
use cvkraus::teleport_gadget::{dual_pipeline_distance, GadgetConfig, HomodyneOutcome};
use cvkraus::{Error, C64};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "cvkraus", version, about = "Kraus operators of CV gate teleportation gadgets")]
#[command(args_override_self = true)]
struct Cli {
    /// flat JSON file of flag values; flags on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run identity checks and write per-id residual tables as JSON
    Identities {
        #[arg(long, conflicts_with = "id")]
        all: bool,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance between the direct and analytic Kraus operators
    KrausCompare {
        #[arg(long, allow_hyphen_values = true)]
        theta_a: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta_b: f64,
        /// kind:beta, or q_eigen:s:beta / p_eigen:t:beta
        #[arg(long)]
        ancilla_psi: String,
        #[arg(long)]
        ancilla_phi: String,
        #[arg(long, allow_hyphen_values = true)]
        ma: f64,
        #[arg(long, allow_hyphen_values = true)]
        mb: f64,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
    },
    /// Monte-Carlo EC chains, one CSV row per sweep point
    EcSweep {
        #[arg(long = "case", value_name = "AB|A|B|none")]
        case: String,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 2)]
        ec_period: usize,
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
        #[arg(long, value_enum)]
        parameter: Option<SweepArg>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wavefunction samples of a code state as CSV
    Wavefunction {
        #[arg(long, value_enum)]
        state: StateArg,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = BasisArg::Q)]
        basis: BasisArg,
        /// min:max:step
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Fock cutoff; defaults to max(100, 10/beta)
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepArg {
    Beta,
    SqueezingDb,
    Steps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StateArg {
    Gkp0,
    Gkp1,
    Qunaught,
    Plus,
    Minus,
    Vacuum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Q,
    P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// closed form where one exists, Fock sum otherwise
    Auto,
    Analytic,
    Fock,
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { kind: e.kind(), message: e.to_string() }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError { kind: "io", message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError { kind: "usage", message: message.into() }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind, "message": e.message }));
            ExitCode::FAILURE
        }
    }
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let argv = merge_config(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            e.print()?;
            return Ok(());
        }
        Err(e) => return Err(usage(e.to_string().trim().to_string())),
    };
    init_threads()?;
    match cli.command {
        Command::Identities { all, id, cutoff, betas, out } => identities(all, id, cutoff, betas, out.as_deref()),
        Command::KrausCompare { theta_a, theta_b, ancilla_psi, ancilla_phi, ma, mb, cutoff } => {
            let config =
                GadgetConfig::new(theta_a, theta_b, parse_ancilla(&ancilla_psi)?, parse_ancilla(&ancilla_phi)?, cut(cutoff)?)?;
            let distance = dual_pipeline_distance(&config, HomodyneOutcome::new(ma, mb)?)?;
            println!("{}", json!({ "distance": distance, "cutoff": cutoff, "interior": config.interior() }));
            Ok(())
        }
        Command::EcSweep { case, beta, steps, ec_period, seeds, cutoff, parameter, values, out } => {
            let variant = match case.to_ascii_lowercase().as_str() {
                "none" => None,
                _ => Some(case.parse::<EcVariant>()?),
            };
            let mut spec = SweepSpec::single(variant, beta, steps, ec_period, seeds)?;
            spec.cutoff = cut(cutoff)?;
            spec.grid = OutcomeGrid::wide();
            if let Some(p) = parameter {
                spec.parameter = match p {
                    SweepArg::Beta => SweepParameter::Beta,
                    SweepArg::SqueezingDb => SweepParameter::SqueezingDb,
                    SweepArg::Steps => SweepParameter::Steps,
                };
                spec.values = values.ok_or_else(|| usage("--parameter needs --values"))?;
            }
            let rows = run_sweep(&spec)?;
            write_sweep_csv(&rows, sink(out.as_deref())?)?;
            Ok(())
        }
        Command::Wavefunction { state, beta, basis, grid, method, cutoff, out } => {
            let grid = parse_grid(&grid)?;
            let rows = wavefunction(state, beta, basis, &grid, method, cutoff)?;
            write_wavefunction_csv(&rows, sink(out.as_deref())?)?;
            Ok(())
        }
    }
}

fn cut(n: usize) -> Result<Cutoff, CliError> {
    Ok(Cutoff::new(n)?)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CVKRAUS_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| usage(format!("CVKRAUS_THREADS must be a positive integer, got '{v}'")))?;
    if n == 0 {
        return Err(usage("CVKRAUS_THREADS must be a positive integer, got '0'"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError { kind: "threads", message: e.to_string() })
}

/// Splices the `--config` file's entries in as flags right after the
/// subcommand, so later command-line flags override them.
fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(PathBuf::from(it.next().ok_or_else(|| usage("--config needs a file"))?));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError { kind: "config", message: e.to_string() })?;
    let flags = config_flags(&doc)?;
    // argv[0], then the subcommand (first non-flag argument)
    let at = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|i| i + 2);
    let at = at.ok_or_else(|| usage("a subcommand is required"))?;
    rest.splice(at..at, flags.into_iter().map(OsString::from));
    Ok(rest)
}

fn config_flags(doc: &Value) -> Result<Vec<String>, CliError> {
    let obj = doc.as_object().ok_or_else(|| CliError { kind: "config", message: "config must be a JSON object".into() })?;
    let mut out = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &Value| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(CliError { kind: "config", message: format!("unsupported value for '{key}'") }),
        };
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(xs) => {
                let parts = xs.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                out.push(format!("{flag}={}", parts.join(",")));
            }
            other => out.push(format!("{flag}={}", scalar(other)?)),
        }
    }
    Ok(out)
}

fn identities(all: bool, id: Option<String>, cutoff: usize, betas: Option<Vec<f64>>, out: Option<&Path>) -> Result<(), CliError> {
    let cutoff = cut(cutoff)?;
    let betas = betas.unwrap_or_else(|| DEFAULT_BETAS.to_vec());
    let reports = match (all, id) {
        (true, _) => run_all(cutoff, &betas)?,
        (false, Some(id)) => vec![run_identity(&id, cutoff, &betas)?],
        (false, None) => return Err(usage("pass --all or --id <ID>")),
    };
    match out {
        Some(p) => write_identity_report(&reports, p)?,
        None => println!("{}", serde_json::to_string_pretty(&reports).map_err(Error::from)?),
    }
    for r in &reports {
        eprintln!("{:<24} {}", r.id, if r.pass { "pass" } else { "FAIL" });
    }
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
        Err(CliError { kind: "identity_failed", message: format!("failed: {}", failed.join(", ")) })
    }
}

/// Parses `kind:beta`, `q_eigen:s:beta` or `p_eigen:t:beta`.
fn parse_ancilla(spec: &str) -> Result<AncillaSpec, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("bad number '{s}' in ancilla '{spec}'")));
    let (kind, beta) = match parts.as_slice() {
        ["q_eigen", s, b] => (AncillaKind::QEigenstate { s: num(s)? }, num(b)?),
        ["p_eigen", t, b] => (AncillaKind::PEigenstate { t: num(t)? }, num(b)?),
        [k, b] => {
            let kind = match *k {
                "squeezed_p" => AncillaKind::SqueezedP,
                "squeezed_q" => AncillaKind::SqueezedQ,
                "qunaught" => AncillaKind::Qunaught,
                "q_eigen" => AncillaKind::QEigenstate { s: 0.0 },
                "p_eigen" => AncillaKind::PEigenstate { t: 0.0 },
                "gkp0" => AncillaKind::GkpCodeword { j: 0 },
                "gkp1" => AncillaKind::GkpCodeword { j: 1 },
                "plus" => AncillaKind::GkpPlusMinus { plus: true },
                "minus" => AncillaKind::GkpPlusMinus { plus: false },
                _ => return Err(usage(format!("unknown ancilla kind '{k}'"))),
            };
            (kind, num(b)?)
        }
        _ => return Err(usage(format!("ancilla must be kind:beta, got '{spec}'"))),
    };
    Ok(AncillaSpec::new(kind, beta)?)
}

fn wavefunction(
    state: StateArg,
    beta: f64,
    basis: BasisArg,
    grid: &[f64],
    method: MethodArg,
    cutoff: Option<usize>,
) -> Result<Vec<cvkraus::harness::WavefunctionRow>, CliError> {
    let analytic_ok = basis == BasisArg::Q && matches!(state, StateArg::Gkp0 | StateArg::Gkp1 | StateArg::Vacuum);
    let analytic = match method {
        MethodArg::Analytic if !analytic_ok => {
            return Err(usage("the analytic form covers gkp0, gkp1 and vacuum in the q basis; use --method fock"))
        }
        MethodArg::Analytic => true,
        MethodArg::Auto => analytic_ok,
        MethodArg::Fock => false,
    };
    if analytic {
        let values: Vec<f64> = match state {
            StateArg::Gkp0 => comb_gaussian_wavefunction(0, beta, grid)?,
            StateArg::Gkp1 => comb_gaussian_wavefunction(1, beta, grid)?,
            _ => grid.iter().map(|x| (-x * x / 2.0).exp() / std::f64::consts::PI.powf(0.25)).collect(),
        };
        let values: Vec<C64> = values.into_iter().map(|v| C64::new(v, 0.0)).collect();
        return Ok(wavefunction_rows(grid, &values));
    }
    let n = cutoff.unwrap_or_else(|| if beta > 0.0 { 100.max((10.0 / beta).ceil() as usize) } else { 100 });
    let c = cut(n)?;
    let st: FockState = match state {
        StateArg::Gkp0 => gkp_codeword(0, beta, c)?,
        StateArg::Gkp1 => gkp_codeword(1, beta, c)?,
        StateArg::Qunaught => qunaught(beta, c)?,
        StateArg::Plus => gkp_plus_minus(true, beta, c)?,
        StateArg::Minus => gkp_plus_minus(false, beta, c)?,
        StateArg::Vacuum => FockState::vacuum(c),
    };
    let q = if basis == BasisArg::Q { Quadrature::Q } else { Quadrature::P };
    Ok(fock_wavefunction_rows(&st, q, grid)?)
}
