use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use conefeas::harness::{BenchSpec, VolumeEstimate};
use conefeas::instance::{load_instance_with_witness, StepDocument};
use conefeas::trace::write_trace;
use conefeas::{
    bench_sweep, generate_planted_family, john_ellipsoid, mc_volume_fraction, save_instance, solve,
    verify_certificate_in, Certificate, CertificateDocument, ConeInstance64, Matrix, NormState, NormState64,
    PhaseMode, PlantedFamily, RescaleKind, SolveConfig, SolveDocument, TransformLog,
};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_INTERNAL: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "conefeas", version, about = "Find x with Ax > 0 by rescaled perceptron / MWU phases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted instance with a hidden center of margin rho
    Gen(GenArgs),
    /// Solve an instance and write the result document
    Solve(SolveArgs),
    /// Solve with rounding termination and report an approximate John ellipsoid
    Round(SolveArgs),
    /// Check a certificate against an instance
    Verify(VerifyArgs),
    /// Run a seeded parameter sweep and emit CSV
    Bench(BenchArgs),
    /// Monte-Carlo estimate of the fraction of the unit ball inside the cone
    VolumeMc(VolumeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Classical,
    Smooth,
    Mwu,
    MwuFast,
}

impl From<PhaseArg> for PhaseMode {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::Classical => PhaseMode::ClassicalPerceptron,
            PhaseArg::Smooth => PhaseMode::SmoothPerceptron,
            PhaseArg::Mwu => PhaseMode::MwuStandard,
            PhaseArg::MwuFast => PhaseMode::MwuModified,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RescaleArg {
    Rank1,
    Multirank,
    Norm,
}

impl From<RescaleArg> for RescaleKind {
    fn from(r: RescaleArg) -> Self {
        match r {
            RescaleArg::Rank1 => RescaleKind::Rank1,
            RescaleArg::Multirank => RescaleKind::MultiRank,
            RescaleArg::Norm => RescaleKind::NormUpdate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Cap,
    Boundary,
    Slab,
}

fn family(f: FamilyArg, spread: f64) -> PlantedFamily {
    match f {
        FamilyArg::Cap => PlantedFamily::Cap,
        FamilyArg::Boundary => PlantedFamily::Boundary,
        FamilyArg::Slab => PlantedFamily::Slab { spread },
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "cap")]
    family: FamilyArg,
    /// Transverse noise of the slab family
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "mwu-fast")]
    phase: PhaseArg,
    #[arg(long, value_enum, default_value = "multirank")]
    rescale: RescaleArg,
    /// Deterministic thin-direction search for rank-1 rescales
    #[arg(long)]
    derandomize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_phases: Option<usize>,
    /// Lower bound on the cone's width, used to size the phase budget
    #[arg(long)]
    rho_hint: Option<f64>,
    /// Result document (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Line-delimited JSON trace of iterations and rescales
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Standard gradient descent with step 1/(2n); `round` then runs the
    /// final phase until Φ < 1/m
    #[arg(long)]
    fixed_step: bool,
}

impl SolveArgs {
    fn config(&self) -> SolveConfig {
        let mut cfg = SolveConfig::new(self.phase.into(), self.rescale.into());
        cfg.derandomize = self.derandomize;
        cfg.seed = self.seed;
        cfg.max_phases = self.max_phases;
        cfg.rho_hint = self.rho_hint;
        cfg.record_trace = self.trace.is_some();
        cfg.fixed_step_rounding = self.fixed_step;
        cfg
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Result document from `solve`/`round`, or a bare certificate document
    #[arg(long)]
    cert: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    m_factor: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    rhos: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mwu,mwu-fast")]
    phase: Vec<PhaseArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "multirank")]
    rescale: Vec<RescaleArg>,
    #[arg(long, value_enum, default_value = "cap")]
    family: FamilyArg,
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    /// Number of seeds per cell, starting at --seed
    #[arg(long, default_value_t = 3)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    derandomize: bool,
    /// CSV output (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full JSON report with slope fits
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VolumeArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure split by exit code.
enum Failure {
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        let usage = match e.downcast_ref::<conefeas::Error>() {
            Some(
                conefeas::Error::Config(_)
                | conefeas::Error::Malformed(_)
                | conefeas::Error::Dimensions(_)
                | conefeas::Error::DimensionMismatch { .. }
                | conefeas::Error::ZeroRow(_)
                | conefeas::Error::NonFinite { .. }
                | conefeas::Error::Json(_)
                | conefeas::Error::Io(_),
            ) => true,
            Some(_) => false,
            None => e.downcast_ref::<std::io::Error>().is_some() || e.downcast_ref::<serde_json::Error>().is_some(),
        };
        if usage {
            Failure::Usage(e)
        } else {
            Failure::Internal(e)
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => run_solve(a, false),
        Command::Round(a) => run_solve(a, true),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
        Command::VolumeMc(a) => volume(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn emit_json<S: Serialize>(out: Option<&Path>, value: &S) -> anyhow::Result<()> {
    emit(out, &serde_json::to_string_pretty(value)?)
}

fn read_instance(path: &Path) -> Result<ConeInstance64, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (inst, _) = load_instance_with_witness::<f64>(&text)
        .map_err(|e| Failure::Usage(anyhow::Error::new(e).context(format!("loading {}", path.display()))))?;
    Ok(inst)
}

fn gen(a: GenArgs) -> CmdResult {
    let (inst, witness) = generate_planted_family::<f64>(a.n, a.m, a.rho, a.seed, family(a.family, a.spread))?;
    emit(a.out.as_deref(), &save_instance(&inst, Some(&witness)))?;
    Ok(EXIT_OK)
}

fn run_solve(a: SolveArgs, round: bool) -> CmdResult {
    let inst = read_instance(&a.instance)?;
    let cfg = a.config();
    let res = if round { john_ellipsoid(&inst, &cfg)? } else { solve(&inst, &cfg)? };
    if let Some(path) = &a.trace {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_trace(std::io::BufWriter::new(file), &res.trace)?;
    }
    emit_json(a.out.as_deref(), &res.to_document(&cfg))?;
    let code = match &res.certificate {
        Certificate::Feasible { .. } => match &res.roundedness {
            Some(r) if !r.check_passed => EXIT_VERIFY_FAILED,
            _ => EXIT_OK,
        },
        Certificate::DualEvidence { .. } | Certificate::BudgetExhausted(_) => EXIT_BUDGET,
    };
    eprintln!(
        "{}: {} phases, {} iterations, {} rescales",
        status(&res.certificate),
        res.phases_used,
        res.total_iterations,
        res.rescales
    );
    Ok(code)
}

fn status(c: &Certificate<f64>) -> &'static str {
    match c {
        Certificate::Feasible { .. } => "feasible",
        Certificate::DualEvidence { .. } => "dual evidence",
        Certificate::BudgetExhausted(_) => "budget exhausted",
    }
}

/// A certificate plus whatever is needed to check it in working coordinates.
struct LoadedCert {
    cert: CertificateDocument,
    norm: Option<Vec<Vec<f64>>>,
}

fn load_cert(text: &str) -> anyhow::Result<LoadedCert> {
    if let Ok(doc) = serde_json::from_str::<SolveDocument>(text) {
        return Ok(LoadedCert { cert: doc.certificate, norm: doc.norm.map(|n| n.h) });
    }
    let cert: CertificateDocument = serde_json::from_str(text).context("not a result or certificate document")?;
    Ok(LoadedCert { cert, norm: None })
}

#[derive(Serialize)]
struct VerifyOutput {
    #[serde(flatten)]
    report: conefeas::VerificationReport,
    transform_steps: usize,
}

fn verify(a: VerifyArgs) -> CmdResult {
    let inst = read_instance(&a.instance)?;
    let text = fs::read_to_string(&a.cert).with_context(|| format!("reading {}", a.cert.display()))?;
    let loaded = load_cert(&text).map_err(Failure::Usage)?;
    let cert = Certificate::<f64>::from_kind(&loaded.cert.certificate);
    if let Certificate::BudgetExhausted(s) = &cert {
        eprintln!("certificate records an exhausted budget ({} phases): nothing to verify", s.phases);
        return Ok(EXIT_BUDGET);
    }
    // Dual evidence lives in the working coordinates of the final phase.
    let steps: &[StepDocument] = &loaded.cert.transform_log;
    let log = TransformLog::<f64>::from_document(steps)?;
    let working = log.apply_to_rows(&inst)?;
    let norm: NormState64 = match loaded.norm {
        Some(h) => NormState::from_matrix(Matrix::from_rows(&h))?,
        None => NormState::identity(inst.n()),
    };
    let report = match &cert {
        Certificate::Feasible { .. } => verify_certificate_in(&inst, &cert, &NormState::identity(inst.n())),
        _ => verify_certificate_in(&working, &cert, &norm),
    };
    let report = match report {
        Ok(r) => r,
        Err(conefeas::Error::DimensionMismatch { expected, found }) => {
            eprintln!("certificate dimension {found} does not match instance ({expected})");
            return Ok(EXIT_VERIFY_FAILED);
        }
        Err(e) => return Err(e.into()),
    };
    let pass = report.pass;
    eprintln!("{}", report.message);
    emit_json(a.out.as_deref(), &VerifyOutput { report, transform_steps: log.len() })?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn bench(a: BenchArgs) -> CmdResult {
    if a.samples == 0 {
        return Err(Failure::Usage(anyhow!("--samples must be at least 1")));
    }
    let spec = BenchSpec {
        ns: a.ns.clone(),
        m_factor: a.m_factor,
        rhos: a.rhos.clone(),
        phase_modes: a.phase.iter().map(|&p| p.into()).collect(),
        rescale_modes: a.rescale.iter().map(|&r| r.into()).collect(),
        seeds: (a.seed..a.seed + a.samples).collect(),
        family: family(a.family, a.spread),
        derandomize: a.derandomize,
    };
    let report = bench_sweep(&spec)?;
    emit(a.out.as_deref(), &report.to_csv())?;
    if let Some(path) = &a.report {
        emit_json(Some(path), &report)?;
    }
    let all_feasible = report.rows.iter().all(|r| r.status == "feasible");
    Ok(if all_feasible { EXIT_OK } else { EXIT_BUDGET })
}

#[derive(Serialize)]
struct VolumeOutput {
    n: usize,
    m: usize,
    seed: u64,
    #[serde(flatten)]
    estimate: VolumeEstimate,
}

fn volume(a: VolumeArgs) -> CmdResult {
    let inst = read_instance(&a.instance)?;
    if a.samples == 0 {
        return Err(Failure::Usage(anyhow!("--samples must be at least 1")));
    }
    let estimate = mc_volume_fraction(&inst, &NormState::identity(inst.n()), a.samples, a.seed)?;
    emit_json(a.out.as_deref(), &VolumeOutput { n: inst.n(), m: inst.m(), seed: a.seed, estimate })?;
    Ok(EXIT_OK)
}
