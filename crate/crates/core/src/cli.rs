//! Command-line experiment harness.
//!
//! Each subcommand resolves an [`ExperimentConfig`] from flags (optionally
//! layered over a JSON config file), runs it, and writes a JSON report or a
//! CSV table. Reports carry a config echo, derived quantities and tallies;
//! apart from the `timestamp` field they depend only on the config.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::attacks::{
    build_nonideal_cheat_unitary, exact_accept_probability_in_mode, maximally_parallel_purification,
    naive_heuristic_probability, run_attack_with, AttackKind, AttackReport, DelayedChoicePlan, PairConvention,
};
use crate::montecarlo::{binomial_std_error, within_std_errors};
use crate::protocol::{committed_state, BobMode, CommitmentScheme, CommittedBit};
use crate::qmath::{
    dim_cap_from_env, distinguishing_probability, fidelity, partial_trace_a, schmidt_decompose, trace_distance,
    DensityOperator,
};
use crate::schemes::{Bb84Params, RandomSchemeParams, SchemeSpec, TiltedPairParams};
use crate::Error;

/// Exit status for invalid configurations.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when a state would exceed the dimension cap.
pub const EXIT_DIM_CAP: i32 = 3;

const DEFAULT_S: usize = 4;
const DEFAULT_EPSILON: f64 = 0.1;
const DEFAULT_TRIALS: u64 = 1000;
const RANDOM_DIM: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "qbc", version, about = "Quantum bit commitment simulator and attack laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Build the ideal cheating unitary for a hiding scheme and run the attack.
    DemoIdeal(ExperimentArgs),
    /// Run seeded sessions of one attack (or honest play) against a scheme.
    Attack(ExperimentArgs),
    /// Repeat an attack over a grid of scheme parameters; CSV by default.
    Sweep(ExperimentArgs),
    /// Check the numerical identities behind a scheme and its attacks.
    VerifyMath(ExperimentArgs),
}

impl CommandArgs {
    pub fn split(&self) -> (Command, &ExperimentArgs) {
        match self {
            CommandArgs::DemoIdeal(a) => (Command::DemoIdeal, a),
            CommandArgs::Attack(a) => (Command::Attack, a),
            CommandArgs::Sweep(a) => (Command::Sweep, a),
            CommandArgs::VerifyMath(a) => (Command::VerifyMath, a),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeKind>,
    /// Number of photons for the bb84 scheme.
    #[arg(long)]
    pub s: Option<usize>,
    /// Tilt angle for the tilted-pair scheme, in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// ideal-epr, nonideal-uhlmann, naive, bb84-epr or honest.
    #[arg(long)]
    pub attack: Option<AttackKind>,
    /// Bit Alice announces at opening.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub chosen_bit: Option<u8>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// store or measure-at-commit.
    #[arg(long)]
    pub bob_mode: Option<BobMode>,
    /// phi-plus or singlet, for the bb84-epr attack.
    #[arg(long)]
    pub pair_convention: Option<PairConvention>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Comma-separated sweep values (s, epsilon, or scheme seed).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Worker threads for the Monte Carlo loop; does not affect results.
    #[arg(long)]
    pub threads: Option<usize>,
    /// JSON file with config fields; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    DemoIdeal,
    Attack,
    Sweep,
    VerifyMath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Bb84,
    TiltedPair,
    Random,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Bb84 => "bb84",
            SchemeKind::TiltedPair => "tilted-pair",
            SchemeKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Fields accepted in a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConfigFile {
    pub scheme: Option<SchemeKind>,
    pub s: Option<usize>,
    pub epsilon: Option<f64>,
    pub attack: Option<AttackKind>,
    pub chosen_bit: Option<u8>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub bob_mode: Option<BobMode>,
    pub pair_convention: Option<PairConvention>,
    pub output_path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub grid: Option<Vec<f64>>,
}

/// Fully resolved experiment description. This is what reports echo.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentConfig {
    pub command: Command,
    pub scheme: SchemeKind,
    pub s: usize,
    pub epsilon: f64,
    pub attack: AttackKind,
    pub chosen_bit: CommittedBit,
    pub trials: u64,
    pub seed: u64,
    pub bob_mode: BobMode,
    pub pair_convention: PairConvention,
    pub format: OutputFormat,
    /// Where the report goes; not part of the experiment, so not echoed.
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(Error::DimensionCap { .. }) => EXIT_DIM_CAP,
            CliError::Core(
                Error::InvalidParameter(_)
                | Error::InvalidScheme(_)
                | Error::NonIdealScheme { .. }
                | Error::UnsupportedBobMode(_)
                | Error::IndexOutOfRange { .. },
            ) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Core(e) => e.fmt(f),
            CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::Config(format!("grid value `{t}` is not a number"))))
        .collect()
}

fn load_config_file(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

/// Bob keeps his register unless the naive cheat runs on photons, which is
/// posed against a Bob who measures every photon on arrival.
fn default_bob_mode(scheme: SchemeKind, attack: AttackKind) -> BobMode {
    match (scheme, attack) {
        (SchemeKind::Bb84, AttackKind::Naive) => BobMode::MeasureAtCommit,
        _ => BobMode::Store,
    }
}

fn default_attack(command: Command, scheme: SchemeKind) -> AttackKind {
    match (command, scheme) {
        (Command::DemoIdeal, _) | (_, SchemeKind::Bb84) => AttackKind::IdealEpr,
        _ => AttackKind::NonidealUhlmann,
    }
}

/// Merges flags over the optional config file and fills in defaults.
pub fn resolve_config(command: Command, args: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let file = match &args.config {
        Some(path) => load_config_file(path)?,
        None => ConfigFile::default(),
    };
    let scheme = args.scheme.or(file.scheme).unwrap_or(SchemeKind::Bb84);
    let grid = match &args.grid {
        Some(text) => Some(parse_grid(text)?),
        None => file.grid.clone(),
    };
    let chosen = args.chosen_bit.or(file.chosen_bit).unwrap_or(1);
    let attack = args.attack.or(file.attack).unwrap_or_else(|| default_attack(command, scheme));
    let config = ExperimentConfig {
        command,
        scheme,
        s: args.s.or(file.s).unwrap_or(DEFAULT_S),
        epsilon: args.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON),
        attack,
        chosen_bit: CommittedBit::try_from(chosen).map_err(|e| CliError::Config(e.to_string()))?,
        trials: args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
        seed: args.seed.or(file.seed).unwrap_or(0),
        bob_mode: args.bob_mode.or(file.bob_mode).unwrap_or_else(|| default_bob_mode(scheme, attack)),
        pair_convention: args.pair_convention.or(file.pair_convention).unwrap_or_default(),
        format: args.format.or(file.format).unwrap_or(match command {
            Command::Sweep => OutputFormat::Csv,
            _ => OutputFormat::Json,
        }),
        output_path: args.output.clone().or(file.output_path),
        grid,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &ExperimentConfig) -> CliResult<()> {
    if config.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    match config.scheme {
        SchemeKind::Bb84 => Bb84Params { s: config.s }.validate()?,
        SchemeKind::TiltedPair => TiltedPairParams { epsilon: config.epsilon }.validate()?,
        SchemeKind::Random => {}
    }
    if config.command == Command::Sweep {
        let grid = config.grid.as_deref().unwrap_or_default();
        if grid.is_empty() {
            return Err(CliError::Config("sweep needs a nonempty --grid".into()));
        }
        for &value in grid {
            spec_at(config, value)?;
        }
    } else if config.grid.is_some() {
        return Err(CliError::Config("--grid only applies to sweep".into()));
    }
    if config.bob_mode == BobMode::MeasureAtCommit && config.scheme != SchemeKind::Bb84 {
        return Err(CliError::Core(Error::UnsupportedBobMode(BobMode::MeasureAtCommit.name())));
    }
    if config.attack == AttackKind::Bb84Epr && config.scheme != SchemeKind::Bb84 {
        return Err(CliError::Config("bb84-epr needs --scheme bb84".into()));
    }
    Ok(())
}

fn integral(value: f64, what: &str) -> CliResult<u64> {
    if value.fract() != 0.0 || value < 0.0 || value > u64::MAX as f64 {
        return Err(CliError::Config(format!("{what} must be a nonnegative integer, got {value}")));
    }
    Ok(value as u64)
}

fn random_params(seed: u64) -> RandomSchemeParams {
    RandomSchemeParams { dim_a: RANDOM_DIM, dim_b: RANDOM_DIM, terms: RANDOM_DIM, seed }
}

/// Scheme description for the config itself.
pub fn scheme_spec(config: &ExperimentConfig) -> SchemeSpec {
    match config.scheme {
        SchemeKind::Bb84 => SchemeSpec::Bb84(Bb84Params { s: config.s }),
        SchemeKind::TiltedPair => SchemeSpec::TiltedPair(TiltedPairParams { epsilon: config.epsilon }),
        SchemeKind::Random => SchemeSpec::Random(random_params(config.seed)),
    }
}

/// Scheme description at one sweep value: `s` for bb84, `epsilon` for the
/// tilted pair, the generator seed for random schemes.
pub fn spec_at(config: &ExperimentConfig, value: f64) -> CliResult<SchemeSpec> {
    let spec = match config.scheme {
        SchemeKind::Bb84 => {
            let params = Bb84Params { s: integral(value, "s")? as usize };
            params.validate()?;
            SchemeSpec::Bb84(params)
        }
        SchemeKind::TiltedPair => {
            let params = TiltedPairParams { epsilon: value };
            params.validate()?;
            SchemeSpec::TiltedPair(params)
        }
        SchemeKind::Random => SchemeSpec::Random(random_params(integral(value, "seed")?)),
    };
    Ok(spec)
}

fn build(spec: &SchemeSpec) -> CliResult<CommitmentScheme> {
    Ok(spec.build_capped(dim_cap_from_env())?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SchemeSummary {
    pub label: String,
    pub spec: SchemeSpec,
    pub dim_a: usize,
    pub dim_b: usize,
    pub photons: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Derived {
    pub fidelity: f64,
    pub delta: f64,
    pub trace_distance: f64,
    pub distinguishing_probability: f64,
    pub exact_accept_prob: Option<f64>,
    /// `(1/2)^{s/2}` estimate, reported for the naive attack on photons.
    pub heuristic_accept_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Empirical {
    pub accept_rate: f64,
    pub std_error: f64,
    pub within_three_std_errors: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), value, tolerance, passed: value <= tolerance }
    }
}

/// The JSON report for `demo-ideal`, `attack` and `verify-math`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub scheme: SchemeSummary,
    pub derived: Derived,
    pub attack: Option<AttackReport>,
    pub empirical: Option<Empirical>,
    pub checks: Vec<Check>,
    pub timestamp: String,
}

impl ExperimentReport {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub scheme: SchemeKind,
    pub parameter: f64,
    pub fidelity: f64,
    pub delta: f64,
    pub exact_accept_prob: f64,
    pub empirical_accept_rate: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub timestamp: String,
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn reduced_pair(scheme: &CommitmentScheme) -> CliResult<(DensityOperator, DensityOperator)> {
    Ok((
        partial_trace_a(&committed_state(scheme, CommittedBit::Zero)?)?,
        partial_trace_a(&committed_state(scheme, CommittedBit::One)?)?,
    ))
}

fn summary(spec: SchemeSpec, scheme: &CommitmentScheme) -> SchemeSummary {
    SchemeSummary {
        label: scheme.label().to_string(),
        spec,
        dim_a: scheme.dim_a(),
        dim_b: scheme.dim_b(),
        photons: scheme.photons(),
    }
}

fn derived(config: &ExperimentConfig, scheme: &CommitmentScheme, exact: Option<f64>) -> CliResult<Derived> {
    let (rho0, rho1) = reduced_pair(scheme)?;
    let f = fidelity(&rho0, &rho1)?;
    let d = trace_distance(&rho0, &rho1)?;
    let heuristic = match (config.attack, scheme.photons()) {
        (AttackKind::Naive, Some(s)) => Some(naive_heuristic_probability(s)),
        _ => None,
    };
    Ok(Derived {
        fidelity: f,
        delta: 1.0 - f,
        trace_distance: d,
        distinguishing_probability: distinguishing_probability(d),
        exact_accept_prob: exact,
        heuristic_accept_prob: heuristic,
    })
}

fn attack(config: &ExperimentConfig, scheme: &CommitmentScheme) -> CliResult<AttackReport> {
    Ok(run_attack_with(
        scheme,
        config.attack,
        config.chosen_bit,
        config.bob_mode,
        config.pair_convention,
        config.trials,
        config.seed,
    )?)
}

fn empirical(report: &AttackReport) -> Empirical {
    let rate = report.accept_rate();
    Empirical {
        accept_rate: rate,
        std_error: binomial_std_error(rate, report.trials),
        within_three_std_errors: report.exact_accept_prob.map(|p| within_std_errors(rate, p, report.trials, 3.0)),
    }
}

/// Numerical identities every scheme should satisfy.
fn math_checks(scheme: &CommitmentScheme) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    for bit in CommittedBit::BOTH {
        let state = committed_state(scheme, bit)?;
        checks.push(Check::at_most(&format!("norm{bit}"), (state.norm() - 1.0).abs(), 1e-9));
        let form = schmidt_decompose(&state)?;
        let error = (form.reconstruct() - state.amplitudes()).norm();
        checks.push(Check::at_most(&format!("schmidtReconstruction{bit}"), error, 1e-9));
        let rho = partial_trace_a(&state)?;
        checks.push(Check::at_most(&format!("reducedTrace{bit}"), (rho.matrix().trace().re - 1.0).abs(), 1e-9));
    }
    let (rho0, rho1) = reduced_pair(scheme)?;
    let f01 = fidelity(&rho0, &rho1)?;
    let f10 = fidelity(&rho1, &rho0)?;
    checks.push(Check::at_most("fidelitySymmetry", (f01 - f10).abs(), 1e-9));
    let d = trace_distance(&rho0, &rho1)?;
    // 1 − F ≤ D ≤ √(1 − F²)
    checks.push(Check::at_most("fuchsVanDeGraafLower", (1.0 - f01) - d, 1e-9));
    checks.push(Check::at_most("fuchsVanDeGraafUpper", d - (1.0 - f01 * f01).max(0.0).sqrt(), 1e-9));

    let zero = committed_state(scheme, CommittedBit::Zero)?;
    let one = committed_state(scheme, CommittedBit::One)?;
    let psi0 = maximally_parallel_purification(&rho0, &one)?;
    let one = one.padded_a(psi0.dim_a())?;
    let overlap = psi0.inner(&one)?.norm();
    checks.push(Check::at_most("purificationOverlapVsFidelity", (overlap - f01).abs(), 1e-8));
    let unitary = build_nonideal_cheat_unitary(&zero, &psi0)?;
    checks.push(Check::at_most("cheatUnitaryDeviation", unitary.deviation(), 1e-9));
    let mapped = unitary.apply(&zero)?.phase_aligned_distance(&psi0.padded_a(unitary.dim())?)?;
    checks.push(Check::at_most("cheatUnitaryMapping", mapped, 1e-8));
    for bit in CommittedBit::BOTH {
        let p = exact_accept_probability_in_mode(scheme, AttackKind::Honest, bit, BobMode::Store)?;
        checks.push(Check::at_most(&format!("honestCompleteness{bit}"), 1.0 - p, 1e-9));
    }
    Ok(checks)
}

/// Checks specific to the ideal attack: `(U ⊗ I)|0⟩ = |1⟩` up to phase.
fn ideal_checks(scheme: &CommitmentScheme) -> CliResult<Vec<Check>> {
    let (rho0, rho1) = reduced_pair(scheme)?;
    let plan = DelayedChoicePlan::prepare_with(scheme, AttackKind::IdealEpr)?;
    let one = committed_state(scheme, CommittedBit::One)?;
    let mapped = plan.state_at_opening(CommittedBit::One).phase_aligned_distance(&one)?;
    Ok(vec![
        Check::at_most("traceDistance", trace_distance(&rho0, &rho1)?, 1e-10),
        Check::at_most("cheatUnitaryDeviation", plan.unitary().deviation(), 1e-9),
        Check::at_most("cheatUnitaryMapping", mapped, 1e-8),
    ])
}

/// Runs `demo-ideal`, `attack` or `verify-math`.
pub fn run_experiment(config: &ExperimentConfig) -> CliResult<ExperimentReport> {
    let spec = scheme_spec(config);
    let scheme = build(&spec)?;
    let (attack_report, checks) = match config.command {
        Command::Attack => (Some(attack(config, &scheme)?), Vec::new()),
        Command::DemoIdeal => {
            if config.attack != AttackKind::IdealEpr {
                return Err(CliError::Config("demo-ideal runs the ideal-epr attack only".into()));
            }
            let checks = ideal_checks(&scheme)?;
            (Some(attack(config, &scheme)?), checks)
        }
        Command::VerifyMath => (None, math_checks(&scheme)?),
        Command::Sweep => return Err(CliError::Config("use run_sweep for sweeps".into())),
    };
    let exact = match &attack_report {
        Some(r) => r.exact_accept_prob,
        None => None,
    };
    Ok(ExperimentReport {
        config: config.clone(),
        scheme: summary(spec, &scheme),
        derived: derived(config, &scheme, exact)?,
        empirical: attack_report.as_ref().map(empirical),
        attack: attack_report,
        checks,
        timestamp: timestamp(),
    })
}

/// One row per grid value, sorted by parameter.
pub fn run_sweep(config: &ExperimentConfig) -> CliResult<Vec<SweepRow>> {
    let mut grid = config.grid.clone().unwrap_or_default();
    if grid.is_empty() {
        return Err(CliError::Config("sweep needs a nonempty --grid".into()));
    }
    grid.sort_by(f64::total_cmp);
    grid.iter()
        .map(|&value| {
            let scheme = build(&spec_at(config, value)?)?;
            let report = attack(config, &scheme)?;
            let f = report.fidelity_bound;
            Ok(SweepRow {
                scheme: config.scheme,
                parameter: value,
                fidelity: f,
                delta: 1.0 - f,
                exact_accept_prob: report.exact_accept_prob.unwrap_or(f64::NAN),
                empirical_accept_rate: report.accept_rate(),
                trials: report.trials,
                seed: report.seed,
            })
        })
        .collect()
}

const SWEEP_HEADER: [&str; 8] =
    ["scheme", "parameter", "fidelity", "delta", "exactAcceptProb", "empiricalAcceptRate", "trials", "seed"];

fn sweep_csv(rows: &[SweepRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(SWEEP_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.scheme.name().to_string(),
            r.parameter.to_string(),
            r.fidelity.to_string(),
            r.delta.to_string(),
            r.exact_accept_prob.to_string(),
            r.empirical_accept_rate.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn checks_csv(checks: &[Check]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["name", "value", "tolerance", "passed"]).map_err(io)?;
    for c in checks {
        w.write_record([c.name.clone(), c.value.to_string(), c.tolerance.to_string(), c.passed.to_string()])
            .map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Serializes an experiment report in the configured format. CSV output is
/// a single sweep-style row, or the check table for `verify-math`.
pub fn render_report(report: &ExperimentReport) -> CliResult<Vec<u8>> {
    match report.config.format {
        OutputFormat::Json => json_bytes(report),
        OutputFormat::Csv if report.config.command == Command::VerifyMath => checks_csv(&report.checks),
        OutputFormat::Csv => {
            let attack = report.attack.as_ref().expect("attack commands carry an attack report");
            let config = &report.config;
            let parameter = match config.scheme {
                SchemeKind::Bb84 => config.s as f64,
                SchemeKind::TiltedPair => config.epsilon,
                SchemeKind::Random => config.seed as f64,
            };
            sweep_csv(&[SweepRow {
                scheme: config.scheme,
                parameter,
                fidelity: report.derived.fidelity,
                delta: report.derived.delta,
                exact_accept_prob: report.derived.exact_accept_prob.unwrap_or(f64::NAN),
                empirical_accept_rate: attack.accept_rate(),
                trials: attack.trials,
                seed: attack.seed,
            }])
        }
    }
}

pub fn render_sweep(config: &ExperimentConfig, rows: Vec<SweepRow>) -> CliResult<Vec<u8>> {
    match config.format {
        OutputFormat::Csv => sweep_csv(&rows),
        OutputFormat::Json => json_bytes(&SweepReport { config: config.clone(), rows, timestamp: timestamp() }),
    }
}

fn emit(config: &ExperimentConfig, bytes: &[u8]) -> CliResult<()> {
    match &config.output_path {
        Some(path) => {
            std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout().lock().write_all(bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> CliResult<i32> {
    let (command, args) = cli.command.split();
    let config = resolve_config(command, args)?;
    let work = || -> CliResult<i32> {
        if command == Command::Sweep {
            let rows = run_sweep(&config)?;
            emit(&config, &render_sweep(&config, rows)?)?;
            return Ok(0);
        }
        let report = run_experiment(&config)?;
        emit(&config, &render_report(&report)?)?;
        Ok(if report.all_checks_passed() { 0 } else { 1 })
    };
    match args.threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?
            .install(work),
        _ => work(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> ExperimentArgs {
        ExperimentArgs::default()
    }

    #[test]
    fn defaults_follow_the_scheme() {
        let c = resolve_config(Command::Attack, &args()).unwrap();
        assert_eq!((c.scheme, c.s, c.attack, c.bob_mode), (SchemeKind::Bb84, 4, AttackKind::IdealEpr, BobMode::Store));
        let c = resolve_config(Command::Attack, &ExperimentArgs { attack: Some(AttackKind::Naive), ..args() }).unwrap();
        assert_eq!(c.bob_mode, BobMode::MeasureAtCommit);
        assert_eq!(c.chosen_bit, CommittedBit::One);
        let c = resolve_config(Command::Attack, &ExperimentArgs { scheme: Some(SchemeKind::TiltedPair), ..args() })
            .unwrap();
        assert_eq!((c.attack, c.bob_mode), (AttackKind::NonidealUhlmann, BobMode::Store));
        let c = resolve_config(Command::Sweep, &ExperimentArgs { grid: Some("1,2".into()), ..args() }).unwrap();
        assert_eq!(c.format, OutputFormat::Csv);
    }

    #[test]
    fn invalid_configs_map_to_exit_two() {
        let bad = [
            ExperimentArgs { trials: Some(0), ..args() },
            ExperimentArgs { s: Some(11), ..args() },
            ExperimentArgs { scheme: Some(SchemeKind::TiltedPair), epsilon: Some(1.0), ..args() },
            ExperimentArgs { scheme: Some(SchemeKind::TiltedPair), bob_mode: Some(BobMode::MeasureAtCommit), ..args() },
            ExperimentArgs { grid: Some("1".into()), ..args() },
        ];
        for a in bad {
            assert_eq!(resolve_config(Command::Attack, &a).unwrap_err().exit_code(), EXIT_CONFIG, "{a:?}");
        }
        for grid in ["", " , ", "0.1,x"] {
            let a = ExperimentArgs { scheme: Some(SchemeKind::TiltedPair), grid: Some(grid.into()), ..args() };
            assert_eq!(resolve_config(Command::Sweep, &a).unwrap_err().exit_code(), EXIT_CONFIG);
        }
        let a = ExperimentArgs { grid: Some("1.5".into()), ..args() };
        assert_eq!(resolve_config(Command::Sweep, &a).unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn ideal_attack_on_tilted_pair_is_a_config_error() {
        let a = ExperimentArgs {
            scheme: Some(SchemeKind::TiltedPair),
            attack: Some(AttackKind::IdealEpr),
            trials: Some(10),
            ..args()
        };
        let config = resolve_config(Command::Attack, &a).unwrap();
        assert_eq!(run_experiment(&config).unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn sweep_rows_are_sorted() {
        let a = ExperimentArgs {
            scheme: Some(SchemeKind::TiltedPair),
            grid: Some("0.2,0.01,0.1".into()),
            trials: Some(50),
            ..args()
        };
        let config = resolve_config(Command::Sweep, &a).unwrap();
        let rows = run_sweep(&config).unwrap();
        let params: Vec<f64> = rows.iter().map(|r| r.parameter).collect();
        assert_eq!(params, vec![0.01, 0.1, 0.2]);
        let text = String::from_utf8(render_sweep(&config, rows).unwrap()).unwrap();
        assert!(text.starts_with("scheme,parameter,fidelity,delta,exactAcceptProb,empiricalAcceptRate,trials,seed\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn verify_math_passes_on_every_scheme_kind() {
        for scheme in [SchemeKind::Bb84, SchemeKind::TiltedPair, SchemeKind::Random] {
            let a = ExperimentArgs { scheme: Some(scheme), s: Some(2), ..args() };
            let report = run_experiment(&resolve_config(Command::VerifyMath, &a).unwrap()).unwrap();
            assert!(report.all_checks_passed(), "{:?}", report.checks);
            assert!(report.attack.is_none());
        }
    }
}
