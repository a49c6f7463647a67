//! Command-line front end: `check`, `run`, `sweep` and `converge`.
//!
//! Exit codes: 0 success, 1 malformed input or guard, 2 failed check or
//! admissibility gate, 3 blow-up, 4 IO failure.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::diagnostics::{
    convergence_order, interior_difference, simulate, stability_ratio, RunError, RunRecord,
    RunSettings, INTERIOR_MIN_X,
};
use crate::discretization::{InitialData, Scheme, State};
use crate::integrators::{rk4_dt, Integrator};
use crate::model::{
    check_dsdc, check_skc, check_ukc, default_delta0, delta0_threshold, is_sat_admissible,
    BoundaryData, BoundarySpec, PhysicalSystem, SatParameter,
};
use crate::quadform::{assess, boundary_matrix, certificate_c, evaluate_f};

pub const SEED_ENV: &str = "RELAXBOUND_SEED";
/// Target number of rk4 series rows; the cadence is `ceil(steps / RK4_ROWS)`.
pub const RK4_ROWS: usize = 6000;
pub const IMPLICIT_DEFAULT_DT: f64 = 1e-3;
const SPOT_CHECKS: usize = 1000;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn gate(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self {
            code: 4,
            message: format!("{}: {err}", path.display()),
        }
    }

    fn run(err: RunError) -> Self {
        let code = match err {
            RunError::BlowUp { .. } => 3,
            RunError::Step { .. } => 3,
            RunError::Settings(_) => 1,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "relaxbound",
    version,
    about = "Boundary stability checks and SBP-SAT runs for the damped wave system"
)]
pub struct Cli {
    /// JSON run configuration (flat keys; merged over --preset if both are given).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Output directory; overrides `output_path` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run even when the admissibility gate fails.
    #[arg(long, global = true)]
    pub allow_unstable: bool,
    #[arg(long, global = true, value_enum)]
    pub integrator: Option<IntegratorArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report boundary conditions, SAT admissibility and the certificate.
    Check,
    /// Run one simulation and write series.csv and final_state.csv.
    Run,
    /// One run per axis value, in parallel; writes summary.csv.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Grid-doubling self-convergence study; writes convergence_{u,v}.csv.
    Converge {
        /// Comma-separated cell counts in geometric progression.
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Figure1,
    Figure2,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Rk4,
    Implicit,
}

impl From<IntegratorArg> for Integrator {
    fn from(a: IntegratorArg) -> Self {
        match a {
            IntegratorArg::Rk4 => Integrator::Rk4,
            IntegratorArg::Implicit => Integrator::ImplicitEuler,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Eps,
    #[value(name = "J")]
    J,
    #[value(name = "Bv")]
    Bv,
}

impl Axis {
    fn key(self) -> &'static str {
        match self {
            Axis::Eps => "eps",
            Axis::J => "J",
            Axis::Bv => "Bv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedData {
    Zero,
    Sin2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataConfig {
    Named(NamedData),
    Explicit(BoundaryData),
}

impl DataConfig {
    pub fn resolve(&self) -> BoundaryData {
        match self {
            DataConfig::Named(NamedData::Zero) => BoundaryData::Zero,
            DataConfig::Named(NamedData::Sin2) => BoundaryData::sin2(),
            DataConfig::Explicit(d) => d.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub a: f64,
    pub eps: f64,
    #[serde(rename = "Bu")]
    pub bu: f64,
    #[serde(rename = "Bv")]
    pub bv: f64,
    #[serde(default)]
    pub sat: Option<SatParameter>,
    #[serde(default = "default_length")]
    pub domain_length: f64,
    #[serde(rename = "J")]
    pub cells: usize,
    #[serde(rename = "T", default = "default_t_final")]
    pub t_final: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    pub integrator: Integrator,
    pub initial: InitialData,
    pub boundary_data: DataConfig,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_length() -> f64 {
    2.0
}

fn default_t_final() -> f64 {
    0.6
}

fn default_seed() -> u64 {
    42
}

impl Preset {
    pub fn value(self) -> Value {
        let (eps, integrator, initial, data) = match self {
            Preset::Figure1 => (1e-2, "implicit", "indicator15_10", "zero"),
            Preset::Figure2 => (1e2, "rk4", "gaussians", "sin2"),
            Preset::Zero => (1e-2, "implicit", "zero", "zero"),
        };
        json!({
            "a": 4.0,
            "eps": eps,
            "Bu": 1.0,
            "Bv": 1.0,
            "J": 400,
            "T": 0.6,
            "integrator": integrator,
            "initial": initial,
            "boundary_data": data,
        })
    }
}

impl RunConfig {
    pub fn from_value(v: Value) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_value(v).map_err(|e| CliError::usage(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("a", self.a),
            ("eps", self.eps),
            ("Bu", self.bu),
            ("domain_length", self.domain_length),
            ("T", self.t_final),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(CliError::usage(format!(
                    "{name} must be positive and finite, got {x}"
                )));
            }
        }
        if !self.bv.is_finite() {
            return Err(CliError::usage("Bv must be finite"));
        }
        if self.cells < 2 {
            return Err(CliError::usage("J must be at least 2"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::usage(format!(
                    "dt must be positive and finite, got {dt}"
                )));
            }
        }
        if let Some(sat) = self.sat {
            if !(sat.alpha.is_finite() && sat.beta.is_finite()) {
                return Err(CliError::usage("sat must be finite"));
            }
        }
        self.boundary_data
            .resolve()
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        self.initial_state()?;
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.domain_length / self.cells as f64
    }

    pub fn system(&self) -> PhysicalSystem {
        PhysicalSystem::new(self.a, self.eps).expect("validated")
    }

    pub fn boundary(&self) -> BoundarySpec {
        BoundarySpec::new(self.bu, self.bv, self.boundary_data.resolve()).expect("validated")
    }

    /// The configured SAT pair, or the canonical formula (which the gate and
    /// `check` still test for admissibility).
    pub fn sat_parameter(&self) -> SatParameter {
        self.sat
            .unwrap_or_else(|| canonical_formula(&self.system(), &self.boundary()))
    }

    pub fn scheme(&self) -> Scheme {
        Scheme::new(
            self.system(),
            self.boundary(),
            self.sat_parameter(),
            self.dx(),
        )
    }

    pub fn initial_state(&self) -> Result<State, CliError> {
        self.initial
            .sample(self.cells, self.dx())
            .map_err(|e| CliError::usage(format!("initial data: {e}")))
    }

    pub fn time_step(&self, scheme: &Scheme) -> f64 {
        self.dt.unwrap_or_else(|| match self.integrator {
            Integrator::Rk4 => rk4_dt(scheme),
            Integrator::ImplicitEuler => IMPLICIT_DEFAULT_DT,
        })
    }
}

/// Config from an optional preset overlaid with an optional JSON file, the
/// integrator flag and the seed environment variable.
pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut merged = match cli.preset {
        Some(p) => p.value(),
        None => Value::Object(Map::new()),
    };
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let overlay: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let Value::Object(overlay) = overlay else {
            return Err(CliError::usage(format!(
                "{}: expected a JSON object",
                path.display()
            )));
        };
        let base = merged.as_object_mut().expect("object");
        base.extend(overlay);
    } else if cli.preset.is_none() {
        return Err(CliError::usage("either --config or --preset is required"));
    }
    let mut cfg = RunConfig::from_value(merged)?;
    if let Some(i) = cli.integrator {
        cfg.integrator = i.into();
    }
    if let Ok(raw) = std::env::var(SEED_ENV) {
        cfg.seed = raw
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV}={raw:?} is not an integer")))?;
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub ukc: bool,
    pub skc: bool,
    pub dsdc: bool,
    pub sat_admissible: bool,
    pub ratio_above_delta0: bool,
    pub alpha: f64,
    pub beta: f64,
    pub ratio: f64,
    pub delta0_threshold: f64,
    pub delta0: f64,
    pub c: Option<f64>,
    pub lambda_max: f64,
    pub case_tag: Option<String>,
    pub certificate_error: Option<String>,
    pub spot_checks: usize,
    pub spot_check_min_margin: Option<f64>,
    pub seed: u64,
    pub pass: bool,
}

/// Flags, certificate and a seeded `F(U) ≥ c|U|²` spot check for one config.
pub fn check_report(cfg: &RunConfig) -> CheckReport {
    let sys = cfg.system();
    let bc = cfg.boundary();
    let sat = cfg.sat_parameter();
    let ratio = cfg.dx() / cfg.eps;
    let delta0 = default_delta0(&sys, &bc);
    let checks = assess(&sys, &bc, &sat, ratio, delta0);
    let lambda_max = boundary_matrix(&sys, &bc, &sat, ratio).lambda_max();
    let cert = certificate_c(&sys, &bc, &sat, ratio, Some(delta0));

    let (c, case_tag, certificate_error) = match &cert {
        Ok(cert) => (
            Some(cert.c),
            serde_json::to_value(cert.case_tag)
                .ok()
                .and_then(|v| v.as_str().map(String::from)),
            None,
        ),
        Err(e) => (None, None, Some(e.to_string())),
    };

    let mut spot_min = None;
    if let Some(c) = c {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut worst = f64::INFINITY;
        for _ in 0..SPOT_CHECKS {
            let u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let norm = u[0] * u[0] + u[1] * u[1];
            let margin = evaluate_f(u, &sys, &bc, &sat, ratio) - c * norm;
            worst = worst.min(margin / norm.max(f64::MIN_POSITIVE));
        }
        spot_min = Some(worst);
    }
    let scale = boundary_matrix(&sys, &bc, &sat, ratio).max_abs_entry();
    let spot_ok = spot_min.is_some_and(|m| m >= -1e-12 * (1.0 + scale));
    CheckReport {
        ukc: checks.ukc,
        skc: checks.skc,
        dsdc: checks.dsdc,
        sat_admissible: checks.sat_admissible,
        ratio_above_delta0: checks.ratio_above_delta0,
        alpha: sat.alpha,
        beta: sat.beta,
        ratio,
        delta0_threshold: delta0_threshold(&sys, &bc),
        delta0,
        c,
        lambda_max,
        case_tag,
        certificate_error,
        spot_checks: SPOT_CHECKS,
        spot_check_min_margin: spot_min,
        seed: cfg.seed,
        pass: checks.all_pass() && cert.is_ok() && spot_ok,
    }
}

/// [`crate::model::canonical_sat`] without its admissibility assertion.
fn canonical_formula(sys: &PhysicalSystem, bc: &BoundarySpec) -> SatParameter {
    let alpha = crate::model::sat_alpha_bound(bc) - 2.0;
    let beta = -sys.a() * (1.0 - bc.bv() * alpha) / bc.bu();
    SatParameter::new(alpha, beta)
}

/// Pretty JSON on stdout; a closed pipe is not an error.
fn print_json(value: &impl Serialize) {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    cli.out
        .clone()
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
        .ok_or_else(|| CliError::usage("no output directory: pass --out or set output_path"))
}

/// Admissibility gate for runs: boundary conditions, DSDC and the SAT pair.
pub fn gate(cfg: &RunConfig) -> Result<(), String> {
    let sys = cfg.system();
    let bc = cfg.boundary();
    let mut failed = Vec::new();
    if !check_ukc(&sys, &bc) {
        failed.push("UKC");
    }
    if !check_skc(&sys, &bc) {
        failed.push("SKC");
    }
    if !check_dsdc(&sys, &bc, cfg.dx()) {
        failed.push("DSDC");
    }
    let sat = cfg.sat_parameter();
    if !is_sat_admissible(&sys, &bc, &sat) {
        failed.push("SAT admissibility");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(format!("admissibility gate failed: {}", failed.join(", ")))
    }
}

pub struct Outcome {
    pub record: RunRecord,
    pub scheme: Scheme,
    pub initial: State,
}

pub fn execute(cfg: &RunConfig, allow_unstable: bool) -> Result<Outcome, CliError> {
    if let Err(msg) = gate(cfg) {
        if !allow_unstable {
            return Err(CliError::gate(format!(
                "{msg} (use --allow-unstable to run anyway)"
            )));
        }
    }
    let scheme = cfg.scheme();
    let initial = cfg.initial_state()?;
    let dt = cfg.time_step(&scheme);
    let steps = crate::integrators::step_count(cfg.t_final, dt);
    let cadence = match cfg.integrator {
        Integrator::ImplicitEuler => 1,
        Integrator::Rk4 => steps.div_ceil(RK4_ROWS).max(1),
    };
    let settings = RunSettings {
        integrator: cfg.integrator,
        dt,
        t_final: cfg.t_final,
        cadence,
    };
    let record = simulate(&scheme, initial.clone(), &settings).map_err(CliError::run)?;
    Ok(Outcome {
        record,
        scheme,
        initial,
    })
}

fn series_comment(cfg: &RunConfig, rec: &RunRecord) -> String {
    format!(
        "integrator={} dt={} steps={} cadence={} J={} eps={} Bu={} Bv={} seed={}",
        cfg.integrator,
        rec.dt,
        rec.steps,
        rec.cadence,
        cfg.cells,
        cfg.eps,
        cfg.bu,
        cfg.bv,
        cfg.seed
    )
}

fn write_outputs(dir: &Path, cfg: &RunConfig, out: &Outcome) -> Result<(), CliError> {
    ensure_dir(dir)?;
    let series = dir.join("series.csv");
    let file = fs::File::create(&series).map_err(|e| CliError::io(&series, e))?;
    out.record
        .write_series(BufWriter::new(file), &series_comment(cfg, &out.record))
        .map_err(|e| CliError::io(&series, e))?;
    let state = dir.join("final_state.csv");
    let file = fs::File::create(&state).map_err(|e| CliError::io(&state, e))?;
    let mut w = BufWriter::new(file);
    out.record
        .final_state
        .write_csv(&mut w, cfg.dx())
        .map_err(|e| CliError::io(&state, e))?;
    w.flush().map_err(|e| CliError::io(&state, e))
}

fn cmd_check(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let report = check_report(cfg);
    print_json(&report);
    if let Some(dir) = &cli.out {
        ensure_dir(dir)?;
        write_json(&dir.join("check.json"), &report)?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::gate("one or more checks failed"))
    }
}

fn cmd_run(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let dir = out_dir(cli, cfg)?;
    let out = execute(cfg, cli.allow_unstable)?;
    write_outputs(&dir, cfg, &out)?;
    eprintln!(
        "wrote {} rows to {} (E: {} -> {})",
        out.record.len(),
        dir.join("series.csv").display(),
        out.record.energy[0],
        out.record.energy.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    value: String,
    stability_ratio: f64,
    final_energy: f64,
    max_res0: f64,
    res0_l2: f64,
}

fn with_axis(cfg: &RunConfig, axis: Axis, raw: &str) -> Result<RunConfig, CliError> {
    let mut v = serde_json::to_value(cfg).expect("serializable");
    let parsed: Value = match axis {
        Axis::J => raw
            .trim()
            .parse::<usize>()
            .map(Value::from)
            .map_err(|_| CliError::usage(format!("J value {raw:?} is not an integer")))?,
        Axis::Eps | Axis::Bv => raw.trim().parse::<f64>().map(Value::from).map_err(|_| {
            CliError::usage(format!("{} value {raw:?} is not a number", axis.key()))
        })?,
    };
    v[axis.key()] = parsed;
    let mut child = RunConfig::from_value(v)?;
    child.seed = cfg.seed;
    Ok(child)
}

fn cmd_sweep(cli: &Cli, cfg: &RunConfig, axis: Axis, values: &[String]) -> Result<(), CliError> {
    if values.len() < 2 {
        return Err(CliError::usage("a sweep needs at least two values"));
    }
    let dir = out_dir(cli, cfg)?;
    let children: Vec<RunConfig> = values
        .iter()
        .map(|raw| with_axis(cfg, axis, raw))
        .collect::<Result<_, _>>()?;
    let results: Vec<Result<SweepRow, CliError>> = children
        .par_iter()
        .zip(values.par_iter())
        .map(|(child, raw)| {
            let tag = |e: CliError| CliError {
                code: e.code,
                message: format!("{}={raw}: {}", axis.key(), e.message),
            };
            let out = execute(child, cli.allow_unstable).map_err(tag)?;
            write_outputs(
                &dir.join(format!("{}_{}", axis.key(), raw.trim())),
                child,
                &out,
            )
            .map_err(tag)?;
            let b: Vec<f64> = out
                .record
                .times
                .iter()
                .map(|&t| out.scheme.bc.b(t))
                .collect();
            let ratio =
                stability_ratio(&out.record, &out.initial, &b, out.scheme.dx).unwrap_or(f64::NAN);
            Ok(SweepRow {
                value: raw.trim().to_string(),
                stability_ratio: ratio,
                final_energy: *out.record.energy.last().expect("nonempty"),
                max_res0: out.record.residual0_max(),
                res0_l2: out.record.residual0_l2(),
            })
        })
        .collect();
    let rows: Vec<SweepRow> = results.into_iter().collect::<Result<_, _>>()?;
    ensure_dir(&dir)?;
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
    w.write_record([
        axis.key(),
        "stability_ratio",
        "final_energy",
        "max_res0",
        "res0_l2",
    ])
    .map_err(|e| CliError::io(&path, e))?;
    for r in &rows {
        w.serialize((
            &r.value,
            r.stability_ratio,
            r.final_energy,
            r.max_res0,
            r.res0_l2,
        ))
        .map_err(|e| CliError::io(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    eprintln!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

/// Common integer refinement factor of `grids`, if they form a geometric sequence.
pub fn geometric_factor(grids: &[usize]) -> Option<usize> {
    let (&first, rest) = grids.split_first()?;
    let second = *rest.first()?;
    if first == 0 || second <= first || second % first != 0 {
        return None;
    }
    let r = second / first;
    grids.windows(2).all(|w| w[1] == w[0] * r).then_some(r)
}

fn cmd_converge(cli: &Cli, cfg: &RunConfig, grids: &[usize]) -> Result<(), CliError> {
    if grids.len() < 3 {
        return Err(CliError::usage("converge needs at least three grid sizes"));
    }
    let r = geometric_factor(grids).ok_or_else(|| {
        CliError::usage(format!(
            "grid sizes {grids:?} are not a geometric refinement"
        ))
    })?;
    let dir = out_dir(cli, cfg)?;
    let children: Vec<RunConfig> = grids
        .iter()
        .map(|&j| with_axis(cfg, Axis::J, &j.to_string()))
        .collect::<Result<_, _>>()?;
    let finals: Vec<State> = children
        .par_iter()
        .map(|c| {
            execute(c, cli.allow_unstable)
                .map(|o| o.record.final_state)
                .map_err(|e| CliError {
                    code: e.code,
                    message: format!("J={}: {}", c.cells, e.message),
                })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_, _>>()?;
    let mut errors = [Vec::new(), Vec::new()];
    for (k, pair) in finals.windows(2).enumerate() {
        let d = interior_difference(
            &pair[0],
            &pair[1],
            children[k].dx(),
            INTERIOR_MIN_X,
            cfg.domain_length - INTERIOR_MIN_X,
        )
        .map_err(|e| CliError::usage(e.to_string()))?;
        errors[0].push(d[0]);
        errors[1].push(d[1]);
    }
    ensure_dir(&dir)?;
    let refinement = vec![r as f64; errors[0].len() - 1];
    let mut summary = Map::new();
    for (var, errs) in ["u", "v"].iter().zip(&errors) {
        let path = dir.join(format!("convergence_{var}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
        w.write_record(["J", "dx", "err", "order"])
            .map_err(|e| CliError::io(&path, e))?;
        for (k, err) in errs.iter().enumerate() {
            let local = (k > 0)
                .then(|| convergence_order(&errs[k - 1..=k], &[r as f64]).ok())
                .flatten();
            let order = local.map(|o| o.to_string()).unwrap_or_default();
            w.serialize((grids[k], children[k].dx(), err, order))
                .map_err(|e| CliError::io(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        let overall = convergence_order(errs, &refinement).ok();
        summary.insert(format!("order_{var}"), json!(overall));
    }
    summary.insert("grids".into(), json!(grids));
    summary.insert("errors_u".into(), json!(errors[0]));
    summary.insert("errors_v".into(), json!(errors[1]));
    summary.insert(
        "interior".into(),
        json!([INTERIOR_MIN_X, cfg.domain_length - INTERIOR_MIN_X]),
    );
    write_json(&dir.join("convergence.json"), &summary)?;
    print_json(&summary);
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Check => cmd_check(cli, &cfg),
        Command::Run => cmd_run(cli, &cfg),
        Command::Sweep { axis, values } => cmd_sweep(cli, &cfg, *axis, values),
        Command::Converge { grids } => cmd_converge(cli, &cfg, grids),
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
