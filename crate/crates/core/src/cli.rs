//! The `ltcodes` command line: `dist`, `analyze`, `simulate`, `relay` and
//! `selftest`.
//!
//! Every flag has a visible default. An optional `--config` file (JSON object
//! or `key = value` lines) supplies flag values; flags given on the command
//! line win. The fully resolved configuration is echoed to stderr before any
//! work starts.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{analyze, AnalysisRow};
use crate::codec::{encode, oracle, peel_decode, peel_decode_traced, EncodedSymbol, SourceBlock};
use crate::config::{Tolerances, DEFAULT_C, DEFAULT_DELTA};
use crate::distributions::{
    comparator_w1, comparator_w2, deconvolve_sqrt, degree_two_plus, ideal_soliton,
    improved_distribution, robust_soliton, DegreeDistribution, DistKind, DistParams, DlltDesign,
    Sigma,
};
use crate::error::Error;
use crate::relay::RelayConfig;
use crate::sim::{self, derive_trial_seed, Scheme, SimConfig, SimResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

const SUBCOMMANDS: [&str; 5] = ["dist", "analyze", "simulate", "relay", "selftest"];
const DEFAULT_GAMMAS: &str = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5";

#[derive(Debug, Parser)]
#[command(
    name = "ltcodes",
    version,
    about = "LT codes for the low-overhead region"
)]
pub struct Cli {
    /// Print per-point timings and a peeling trace to stderr
    #[arg(short, long, global = true)]
    pub verbose: bool,
    /// Flag defaults from a JSON object or `key = value` lines; command-line flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout
    #[arg(short, long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit a degree distribution as `degree,probability` CSV or JSON
    #[command(args_override_self = true)]
    Dist(DistArgs),
    /// And-Or fixed points and overhead thresholds over a (k, gamma) grid
    #[command(args_override_self = true)]
    Analyze(AnalyzeArgs),
    /// Monte Carlo BER/FER sweep for one scheme
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Monte Carlo sweep of DLLT / UEP-DLLT through the relay
    #[command(args_override_self = true)]
    Relay(RelayArgs),
    /// Fast built-in consistency checks
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistChoice {
    Ideal,
    Rsd,
    Improved,
    DlltDegreeOne,
    DlltHigh,
    SqrtFactor,
    DlltSource,
    UepMib,
    UepLib,
    W1,
    W2,
}

impl DistChoice {
    fn needs_deconvolution(self) -> bool {
        matches!(
            self,
            DistChoice::SqrtFactor
                | DistChoice::DlltSource
                | DistChoice::UepMib
                | DistChoice::UepLib
        )
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistArgs {
    #[arg(long, value_enum, default_value_t = DistChoice::Rsd)]
    pub kind: DistChoice,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Fraction of the spike moved to degree 1 (improved only)
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// UEP factor (uep-mib / uep-lib only)
    #[arg(long, default_value_t = 0.05)]
    pub s: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also verify validity and, for DLLT kinds, the deconvolution round trip
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Block lengths
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set,
          default_value = "400,1000,2000", conflicts_with = "k_range")]
    pub ks: Vec<usize>,
    /// Block lengths as START:END:STEP (inclusive), replacing --ks
    #[arg(long, value_name = "START:END:STEP")]
    pub k_range: Option<String>,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Overheads
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set,
          default_value = DEFAULT_GAMMAS)]
    pub gammas: Vec<f64>,
    /// Spike fraction for the improved column
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse::<Scheme>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// rsd | improved | w1 | w2 | improved+checksum | dllt | uep-dllt
    #[arg(long, value_parser = parse_scheme, default_value = "improved")]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Overheads; n = round(k(1+gamma))
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set,
          default_value = DEFAULT_GAMMAS)]
    pub gammas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Erasure probability
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2)]
    pub checksum_copies: usize,
    /// Relay forwarding probability (dllt / uep-dllt)
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// UEP factor (uep-dllt)
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    /// Worker threads; 0 uses every core
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RelayArgs {
    #[arg(long, default_value_t = 400)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// UEP factor; 0 runs plain DLLT
    #[arg(long, alias = "s", default_value_t = 0.05)]
    pub uep_factor: f64,
    /// Overheads; n = round(k(1+gamma)) relay outputs
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set,
          default_value = DEFAULT_GAMMAS, conflicts_with = "n_range")]
    pub gammas: Vec<f64>,
    /// Relay output counts as START:END:STEP (inclusive), replacing --gammas
    #[arg(long, value_name = "START:END:STEP")]
    pub n_range: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Erasure probability on the relay-to-destination link
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Worker threads; 0 uses every core
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVALID_CONFIG,
            message: msg.into(),
        }
    }

    fn check(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CHECK_FAILED,
            message: msg.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::InvalidInput(_) | Error::InvalidConfig(_) => {
                EXIT_INVALID_CONFIG
            }
            Error::DeconvolutionInfeasible { .. } | Error::DecodeInconsistency { .. } => {
                EXIT_CHECK_FAILED
            }
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn parse_range(spec: &str) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::config(format!("range `{spec}` is not START:END:STEP"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if step == 0 || start > end {
        return Err(CliError::config(format!(
            "range `{spec}` needs START <= END and STEP > 0"
        )));
    }
    Ok((start..=end).step_by(step).collect())
}

/// Turns a config file into flag tokens: JSON object keys or `key = value`
/// lines become `--key value`; `true` booleans become bare flags.
pub fn config_file_args(text: &str) -> Result<Vec<String>, CliError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if text.trim_start().starts_with('{') {
        let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("config file: {e}")))?;
        for (key, value) in map {
            let v = match value {
                serde_json::Value::String(s) => s,
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                other => other.to_string(),
            };
            pairs.push((key, v));
        }
    } else {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("config file line {}: expected key = value", no + 1))
            })?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
    }
    let mut args = Vec::new();
    for (key, value) in pairs {
        let flag = format!("--{}", key.replace('_', "-"));
        match value.as_str() {
            "true" => args.push(flag),
            "false" => {}
            _ => {
                args.push(flag);
                args.push(value);
            }
        }
    }
    Ok(args)
}

/// Splices config-file flags in right after the subcommand name so that
/// later command-line occurrences override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    let mut sub_at = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            path = args.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else if a == "--output" || a == "-o" {
            i += 2;
            continue;
        } else if sub_at.is_none() && SUBCOMMANDS.contains(&a.as_ref()) {
            sub_at = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(at)) = (path, sub_at) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::config(format!(
            "cannot read config {}: {e}",
            path.to_string_lossy()
        ))
    })?;
    let extra = config_file_args(&text)?;
    let mut out = args;
    out.splice(at + 1..at + 1, extra.into_iter().map(OsString::from));
    Ok(out)
}

fn echo<T: Serialize>(name: &str, cfg: &T) {
    eprintln!(
        "ltcodes {name}: {}",
        serde_json::to_string(cfg).expect("config serializes")
    );
}

fn build_distribution(a: &DistArgs) -> Result<DegreeDistribution, CliError> {
    let tol = Tolerances::DEFAULT;
    let design = || DlltDesign::new(a.k, a.c, a.delta, &tol);
    let d = match a.kind {
        DistChoice::Ideal => ideal_soliton(a.k)?,
        DistChoice::Rsd => robust_soliton(a.k, a.c, a.delta)?,
        DistChoice::Improved => improved_distribution(a.k, a.c, a.delta, Sigma::new(a.sigma)?)?,
        DistChoice::DlltDegreeOne => design()?.split.degree_one,
        DistChoice::DlltHigh => design()?.split.high,
        DistChoice::SqrtFactor => design()?.sqrt.distribution,
        DistChoice::DlltSource => design()?.source()?,
        DistChoice::UepMib => design()?.uep(a.s)?.mib,
        DistChoice::UepLib => design()?.uep(a.s)?.lib,
        DistChoice::W1 => comparator_w1(),
        DistChoice::W2 => comparator_w2(),
    };
    Ok(d)
}

fn check_distribution(a: &DistArgs, d: &DegreeDistribution) -> Result<Vec<String>, CliError> {
    let mut notes = Vec::new();
    check_masses(d.masses()).map_err(CliError::check)?;
    notes.push(format!(
        "valid: {} degrees, mean degree {:.6}",
        d.k_max(),
        d.mean()
    ));
    if a.kind == DistChoice::Improved && a.sigma == 1.0 {
        let spike = crate::distributions::rsd_meta(a.k, a.c, a.delta)?.spike_index;
        if d.prob(spike) != 0.0 {
            return Err(CliError::check(format!(
                "spike degree {spike} still has mass"
            )));
        }
        notes.push(format!("spike degree {spike} is empty"));
    }
    if a.kind.needs_deconvolution() || a.kind == DistChoice::DlltHigh {
        let design = DlltDesign::new(a.k, a.c, a.delta, &Tolerances::DEFAULT)?;
        let err = design.sqrt.roundtrip_error(&design.split.high);
        if err > Tolerances::DEFAULT.deconv_roundtrip {
            return Err(CliError::check(format!(
                "deconvolution round trip error {err:e}"
            )));
        }
        notes.push(format!("deconvolution round trip error {err:e}"));
    }
    Ok(notes)
}

/// Nonnegative, finite, and summing to 1 within the mass tolerance.
pub fn check_masses(mass: &[f64]) -> Result<(), String> {
    if let Some((i, p)) = mass
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(format!("degree {} has mass {p}", i + 1));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > Tolerances::DEFAULT.mass_sum {
        return Err(format!("masses sum to {total}"));
    }
    Ok(())
}

fn run_dist(a: &DistArgs) -> Result<String, CliError> {
    let d = build_distribution(a)?;
    if a.check {
        for n in check_distribution(a, &d)? {
            eprintln!("check: {n}");
        }
    }
    Ok(match a.format {
        Format::Csv => d.to_text(),
        Format::Json => d.to_json_pretty() + "\n",
    })
}

fn run_analyze(a: &AnalyzeArgs) -> Result<String, CliError> {
    let ks = match &a.k_range {
        Some(r) => parse_range(r)?,
        None => a.ks.clone(),
    };
    let rows = analyze(
        &ks,
        a.c,
        a.delta,
        &a.gammas,
        Sigma::new(a.sigma)?,
        &Tolerances::DEFAULT,
    )?;
    Ok(match a.format {
        Format::Csv => {
            let mut out = String::from(AnalysisRow::CSV_HEADER);
            out.push('\n');
            for r in &rows {
                out.push_str(&r.to_csv());
                out.push('\n');
            }
            out
        }
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    })
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn report_points(r: &SimResult) {
    for p in &r.points {
        eprintln!(
            "gamma {:.4}  n {}  ber {:.3e}  fer {:.3e}  {:.2?}",
            p.gamma, p.n, p.ber, p.fer, p.elapsed
        );
    }
}

/// Decodes the first trial of the first grid point again with tracing on.
fn print_trace(cfg: &SimConfig) -> Result<(), CliError> {
    let dist = sim::scheme_distribution(cfg)?;
    let gamma = cfg.gamma_grid[0];
    let n = cfg.symbols_for(gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(cfg.master_seed, &[0, 0]));
    let block = SourceBlock::random(cfg.k, 1, &mut rng)?;
    let received = encode(&block, &dist, n, &mut rng);
    let (res, trace) = peel_decode_traced(&received, cfg.k)?;
    eprintln!("peel trace (gamma {gamma}, n {n}, without checksum or erasures):");
    for r in &trace {
        eprintln!(
            "  round {:>4}  ripple {:>5}  recovered {:>6}",
            r.round, r.ripple_size, r.recovered
        );
    }
    eprintln!("  recovered {}/{}", res.recovered_count(), cfg.k);
    Ok(())
}

fn simulate_config(a: &SimulateArgs) -> SimConfig {
    SimConfig {
        k: a.k,
        c: a.c,
        delta: a.delta,
        sigma: a.sigma,
        scheme: a.scheme,
        gamma_grid: a.gammas.clone(),
        trials: a.trials,
        master_seed: a.seed,
        epsilon: a.epsilon,
        checksum_copies: a.checksum_copies,
        relay: a
            .scheme
            .is_relay()
            .then(|| RelayConfig::new(a.lambda, a.s, 0)),
    }
}

fn run_simulate(a: &SimulateArgs, verbose: bool) -> Result<String, CliError> {
    let cfg = simulate_config(a);
    let res = with_threads(a.threads, || sim::run(&cfg))??;
    if verbose {
        report_points(&res);
        if !cfg.scheme.is_relay() {
            print_trace(&cfg)?;
        }
    }
    Ok(match a.format {
        Format::Csv => res.to_csv(),
        Format::Json => res.to_json() + "\n",
    })
}

fn relay_config(a: &RelayArgs) -> Result<SimConfig, CliError> {
    let gamma_grid = match &a.n_range {
        Some(r) => parse_range(r)?
            .into_iter()
            .map(|n| n as f64 / a.k as f64 - 1.0)
            .collect(),
        None => a.gammas.clone(),
    };
    let scheme = if a.uep_factor > 0.0 {
        Scheme::UepDllt
    } else {
        Scheme::Dllt
    };
    Ok(SimConfig {
        gamma_grid,
        trials: a.trials,
        master_seed: a.seed,
        epsilon: a.epsilon,
        c: a.c,
        delta: a.delta,
        relay: Some(RelayConfig::new(a.lambda, a.uep_factor, 0)),
        ..SimConfig::new(scheme, a.k)
    })
}

fn run_relay(a: &RelayArgs, verbose: bool) -> Result<String, CliError> {
    let cfg = relay_config(a)?;
    let res = with_threads(a.threads, || sim::run(&cfg))??;
    if verbose {
        report_points(&res);
    }
    Ok(match a.format {
        Format::Csv => res.to_relay_csv(),
        Format::Json => res.to_json() + "\n",
    })
}

/// Outcome of one selftest check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckStatus {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Inputs to the selftest, exposed so a corrupted table can be injected.
#[derive(Debug, Clone)]
pub struct Selftest {
    /// Named degree tables checked for validity.
    pub tables: Vec<(String, Vec<f64>)>,
    pub deconv_k: usize,
    pub oracle_instances: usize,
}

impl Selftest {
    pub fn standard() -> Result<Self, Error> {
        let k = 400;
        let (c, delta) = (DEFAULT_C, DEFAULT_DELTA);
        let design = DlltDesign::new(k, c, delta, &Tolerances::DEFAULT)?;
        let uep = design.uep(0.05)?;
        let mut tables = vec![
            ("ideal".to_string(), ideal_soliton(k)?),
            ("rsd".to_string(), robust_soliton(k, c, delta)?),
            (
                "improved(0.5)".to_string(),
                improved_distribution(k, c, delta, Sigma::new(0.5)?)?,
            ),
            ("improved(1)".to_string(), design.improved.clone()),
            ("dllt-source".to_string(), design.source()?),
            ("uep-mib".to_string(), uep.mib),
            ("uep-lib".to_string(), uep.lib),
            ("w1".to_string(), comparator_w1()),
            ("w2".to_string(), comparator_w2()),
        ];
        tables.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Selftest {
            tables: tables
                .into_iter()
                .map(|(n, d)| (n, d.masses().to_vec()))
                .collect(),
            deconv_k: k,
            oracle_instances: 300,
        })
    }

    pub fn run(&self) -> Vec<CheckStatus> {
        vec![
            self.distribution_validity(),
            self.deconvolution(),
            self.decoder_oracle(),
            determinism(),
        ]
    }

    fn distribution_validity(&self) -> CheckStatus {
        let bad: Vec<String> = self
            .tables
            .iter()
            .filter_map(|(name, m)| check_masses(m).err().map(|e| format!("{name}: {e}")))
            .collect();
        CheckStatus {
            name: "distribution-validity",
            passed: bad.is_empty(),
            detail: if bad.is_empty() {
                format!("{} tables", self.tables.len())
            } else {
                bad.join("; ")
            },
        }
    }

    fn deconvolution(&self) -> CheckStatus {
        let name = "deconvolution-roundtrip";
        let k = self.deconv_k;
        let outcome = (|| -> Result<String, String> {
            let design = DlltDesign::new(k, DEFAULT_C, DEFAULT_DELTA, &Tolerances::DEFAULT)
                .map_err(|e| e.to_string())?;
            let err = design.sqrt.roundtrip_error(&design.split.high);
            if err > Tolerances::DEFAULT.deconv_roundtrip {
                return Err(format!("round trip error {err:e} at k = {k}"));
            }
            let raw = robust_soliton(k, DEFAULT_C, DEFAULT_DELTA).map_err(|e| e.to_string())?;
            let raw_high = degree_two_plus(&raw).map_err(|e| e.to_string())?;
            match deconvolve_sqrt(&raw_high, &Tolerances::DEFAULT) {
                Err(Error::DeconvolutionInfeasible { .. }) => {}
                other => {
                    return Err(format!(
                        "raw RSD with its spike should be infeasible, got {:?}",
                        other.map(|_| "a solution")
                    ))
                }
            }
            Ok(format!("k = {k}, error {err:e}; raw RSD infeasible"))
        })();
        status(name, outcome)
    }

    fn decoder_oracle(&self) -> CheckStatus {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_7e57);
        let mut mismatches = 0;
        for _ in 0..self.oracle_instances {
            let (block, rx) = random_instance(&mut rng);
            let fast = match peel_decode(&rx, block.k()) {
                Ok(r) => r.payloads,
                Err(_) => {
                    mismatches += 1;
                    continue;
                }
            };
            let slow = oracle::rescan_peel(&rx, block.k());
            let truthful = fast
                .iter()
                .enumerate()
                .all(|(i, p)| p.as_deref().is_none_or(|p| p == block.symbol(i)));
            if fast != slow || !truthful {
                mismatches += 1;
            }
        }
        CheckStatus {
            name: "decoder-oracle",
            passed: mismatches == 0,
            detail: format!(
                "{mismatches} mismatches in {} instances",
                self.oracle_instances
            ),
        }
    }
}

fn status(name: &'static str, outcome: Result<String, String>) -> CheckStatus {
    match outcome {
        Ok(detail) => CheckStatus {
            name,
            passed: true,
            detail,
        },
        Err(detail) => CheckStatus {
            name,
            passed: false,
            detail,
        },
    }
}

/// A random block with `k <= 16` and up to 40 symbols drawn from a random
/// degree table.
pub fn random_instance<R: Rng>(rng: &mut R) -> (SourceBlock, Vec<EncodedSymbol>) {
    let k = rng.gen_range(1..=16);
    let weights: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    let d = DegreeDistribution::from_weights(weights, DistKind::Custom, DistParams::block(k))
        .expect("positive weights");
    let block = SourceBlock::random(k, 2, rng).expect("k >= 1");
    let n = rng.gen_range(0..=40);
    let rx = encode(&block, &d, n, rng);
    (block, rx)
}

fn determinism() -> CheckStatus {
    let outcome = (|| -> Result<String, String> {
        let mut cfgs = vec![
            SimConfig {
                gamma_grid: vec![0.0, 0.1],
                trials: 40,
                master_seed: 11,
                ..SimConfig::new(Scheme::ImprovedChecksum, 200)
            },
            SimConfig {
                gamma_grid: vec![0.1],
                trials: 40,
                master_seed: 11,
                relay: Some(RelayConfig::new(0.5, 0.05, 0)),
                ..SimConfig::new(Scheme::UepDllt, 200)
            },
        ];
        cfgs[0].epsilon = 0.1;
        for cfg in &cfgs {
            let mut outputs = Vec::new();
            for threads in [1, 2, 1] {
                let r = with_threads(threads, || sim::run(cfg))
                    .map_err(|e| e.message)?
                    .map_err(|e| e.to_string())?;
                outputs.push(r.to_csv());
            }
            if outputs.windows(2).any(|w| w[0] != w[1]) {
                return Err(format!("{} output differs between runs", cfg.scheme));
            }
        }
        Ok("identical CSV across repeats and thread counts".to_string())
    })();
    status("determinism", outcome)
}

fn run_selftest() -> Result<String, CliError> {
    let checks = Selftest::standard()?.run();
    let mut out = String::new();
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{tag} {}: {}\n", c.name, c.detail));
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        Ok(out)
    } else {
        print!("{out}");
        Err(CliError::check(format!(
            "selftest failed: {}",
            failed.join(", ")
        )))
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError {
        code: EXIT_IO,
        message: e.to_string(),
    };
    match path {
        Some(p) => fs::write(p, text).map_err(io),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(io),
    }
}

/// Runs a parsed invocation and returns its output text.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Dist(a) => {
            echo("dist", a);
            run_dist(a)
        }
        Command::Analyze(a) => {
            echo("analyze", a);
            run_analyze(a)
        }
        Command::Simulate(a) => {
            echo("simulate", &simulate_config(a));
            run_simulate(a, cli.verbose)
        }
        Command::Relay(a) => {
            echo("relay", &relay_config(a)?);
            run_relay(a, cli.verbose)
        }
        Command::Selftest => {
            echo("selftest", &serde_json::json!({}));
            run_selftest()
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID_CONFIG
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli).and_then(|out| write_output(cli.output.as_deref(), &out)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
