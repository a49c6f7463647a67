//! Run driver and post-processing: energy and boundary traces, the continuous
//! and fully discrete stability ratios, and grid-refinement orders.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::discretization::{energy, Scheme, State};
use crate::integrators::{rk4_step, step_count, ImplicitEuler, Integrator, StepError};

/// Left edge of the region used for interior max-norms.
pub const INTERIOR_MIN_X: f64 = 0.2;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample {0} is negative")]
    Negative(usize),
    #[error("sample {0} is not positive")]
    NonPositive(usize),
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("trivial data: the denominator vanishes")]
    TrivialData,
    #[error("refinement factors must be > 1, got {0}")]
    BadRefinement(f64),
    #[error("grids are not nested: {coarse} and {fine} cells")]
    NotNested { coarse: usize, fine: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error("solution blew up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },
    #[error("step {step}: {source}")]
    Step { step: usize, source: StepError },
    #[error("invalid run settings: {0}")]
    Settings(String),
}

impl RunError {
    pub fn step(&self) -> Option<usize> {
        match self {
            RunError::BlowUp { step, .. } | RunError::Step { step, .. } => Some(*step),
            RunError::Settings(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub integrator: Integrator,
    /// Upper bound on the step; the actual step divides `t_final` evenly.
    pub dt: f64,
    pub t_final: f64,
    /// Record every `cadence`-th step (the last step is always recorded).
    pub cadence: usize,
}

/// Sampled time series of one run. All series share the length of `times`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub trace: Vec<[f64; 2]>,
    pub boundary_residual0: Vec<f64>,
    pub boundary_residual1: Vec<f64>,
    /// `Σ_j dx·|U_j|²` with uniform weights.
    pub l2_sq: Vec<f64>,
    pub final_state: State,
    pub dt: f64,
    pub steps: usize,
    pub cadence: usize,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn trace_sq(&self) -> Vec<f64> {
        self.trace.iter().map(|[u, v]| u * u + v * v).collect()
    }

    /// `L²(0, T)` norm of `BU_0 − b`.
    pub fn residual0_l2(&self) -> f64 {
        let sq: Vec<f64> = self.boundary_residual0.iter().map(|r| r * r).collect();
        trace_integral(&self.times, &sq).unwrap_or(f64::NAN).sqrt()
    }

    pub fn residual0_max(&self) -> f64 {
        self.boundary_residual0
            .iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Writes a `#` comment line followed by `t,E,u0,v0,res0,res1`.
    pub fn write_series<W: Write>(&self, mut out: W, comment: &str) -> std::io::Result<()> {
        writeln!(out, "# {comment}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "E", "u0", "v0", "res0", "res1"])?;
        for i in 0..self.len() {
            // adding 0.0 maps -0.0 to 0.0
            w.serialize((
                self.times[i] + 0.0,
                self.energy[i] + 0.0,
                self.trace[i][0] + 0.0,
                self.trace[i][1] + 0.0,
                self.boundary_residual0[i] + 0.0,
                self.boundary_residual1[i] + 0.0,
            ))?;
        }
        w.flush()
    }
}

struct Recorder<'a> {
    scheme: &'a Scheme,
    record: RunRecord,
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, s: &State) {
        let dx = self.scheme.dx;
        let r = &mut self.record;
        r.times.push(t);
        r.energy.push(energy(s, &self.scheme.sys, dx));
        r.trace.push(s.node(0));
        r.boundary_residual0
            .push(self.scheme.boundary_residual(s, 0, t));
        r.boundary_residual1
            .push(self.scheme.boundary_residual(s, 1, t));
        r.l2_sq.push(s.l2_sq(dx));
    }
}

pub fn simulate(
    scheme: &Scheme,
    initial: State,
    settings: &RunSettings,
) -> Result<RunRecord, RunError> {
    simulate_observed(scheme, initial, settings, |_, _, _| {})
}

/// [`simulate`], calling `observe(n, t_n, U^n)` for every step including `n = 0`.
pub fn simulate_observed(
    scheme: &Scheme,
    initial: State,
    settings: &RunSettings,
    mut observe: impl FnMut(usize, f64, &State),
) -> Result<RunRecord, RunError> {
    let RunSettings {
        integrator,
        dt,
        t_final,
        cadence,
    } = *settings;
    if !(dt > 0.0 && dt.is_finite() && t_final > 0.0 && t_final.is_finite()) {
        return Err(RunError::Settings(format!("dt = {dt}, T = {t_final}")));
    }
    if cadence == 0 {
        return Err(RunError::Settings("cadence must be at least 1".into()));
    }
    if !initial.is_finite() {
        return Err(RunError::BlowUp { step: 0, time: 0.0 });
    }
    let steps = step_count(t_final, dt);
    let dt = t_final / steps as f64;
    let implicit = match integrator {
        Integrator::ImplicitEuler => Some(
            ImplicitEuler::new(scheme, initial.cells(), dt)
                .map_err(|source| RunError::Step { step: 1, source })?,
        ),
        Integrator::Rk4 => None,
    };

    let mut rec = Recorder {
        scheme,
        record: RunRecord {
            times: Vec::new(),
            energy: Vec::new(),
            trace: Vec::new(),
            boundary_residual0: Vec::new(),
            boundary_residual1: Vec::new(),
            l2_sq: Vec::new(),
            final_state: initial.clone(),
            dt,
            steps,
            cadence,
        },
    };
    rec.push(0.0, &initial);
    observe(0, 0.0, &initial);

    let mut state = initial;
    for n in 1..=steps {
        let t_prev = (n - 1) as f64 * dt;
        let t = n as f64 * dt;
        state = match &implicit {
            Some(ie) => match ie.step(&state, t) {
                Ok(s) => s,
                Err(StepError::NonFiniteState(_)) => {
                    return Err(RunError::BlowUp { step: n, time: t })
                }
                Err(source) => return Err(RunError::Step { step: n, source }),
            },
            None => rk4_step(scheme, &state, t_prev, dt),
        };
        if !state.is_finite() {
            return Err(RunError::BlowUp { step: n, time: t });
        }
        observe(n, t, &state);
        if n % cadence == 0 || n == steps {
            rec.push(t, &state);
        }
    }
    rec.record.final_state = state;
    Ok(rec.record)
}

/// Composite trapezoidal rule of nonnegative samples.
pub fn trace_integral(times: &[f64], values: &[f64]) -> Result<f64, DiagnosticsError> {
    if times.len() != values.len() {
        return Err(DiagnosticsError::LengthMismatch {
            left: times.len(),
            right: values.len(),
        });
    }
    if values.len() < 2 {
        return Err(DiagnosticsError::TooFewSamples {
            needed: 2,
            got: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite(i));
    }
    if let Some(i) = values.iter().position(|&v| v < 0.0) {
        return Err(DiagnosticsError::Negative(i));
    }
    Ok(times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum())
}

fn plain_l2_sq(s: &State, dx: f64) -> f64 {
    s.l2_sq(dx)
}

/// `(∫Σ dx|U_j|² dt + ∫|U_0|² dt) / (Σ dx|f_j|² + ∫|b|² dt)` over the
/// recorded samples; `b_samples` are taken at `run.times`.
pub fn stability_ratio(
    run: &RunRecord,
    f: &State,
    b_samples: &[f64],
    dx: f64,
) -> Result<f64, DiagnosticsError> {
    if b_samples.len() != run.len() {
        return Err(DiagnosticsError::LengthMismatch {
            left: run.len(),
            right: b_samples.len(),
        });
    }
    let b_sq: Vec<f64> = b_samples.iter().map(|b| b * b).collect();
    let denominator = plain_l2_sq(f, dx) + trace_integral(&run.times, &b_sq)?;
    if denominator == 0.0 {
        return Err(DiagnosticsError::TrivialData);
    }
    let numerator =
        trace_integral(&run.times, &run.l2_sq)? + trace_integral(&run.times, &run.trace_sq())?;
    Ok(numerator / denominator)
}

/// Fully discrete ratio for `states = U^0..U^N` and `b_samples = b^0..b^N`
/// (`b^0` is not used).
pub fn discrete_stability_ratio(
    states: &[State],
    f: &State,
    b_samples: &[f64],
    dt: f64,
    dx: f64,
) -> Result<f64, DiagnosticsError> {
    if states.len() < 2 {
        return Err(DiagnosticsError::TooFewSamples {
            needed: 2,
            got: states.len(),
        });
    }
    if b_samples.len() != states.len() {
        return Err(DiagnosticsError::LengthMismatch {
            left: states.len(),
            right: b_samples.len(),
        });
    }
    let denominator = plain_l2_sq(f, dx) + dt * b_samples[1..].iter().map(|b| b * b).sum::<f64>();
    if denominator == 0.0 {
        return Err(DiagnosticsError::TrivialData);
    }
    let bulk: f64 = states.iter().map(|s| dt * plain_l2_sq(s, dx)).sum();
    let trace: f64 = states[1..]
        .iter()
        .map(|s| {
            let [u, v] = s.node(0);
            dt * (u * u + v * v)
        })
        .sum();
    Ok((bulk + trace) / denominator)
}

/// Least-squares slope of `log(error)` against `log(dx)`, where consecutive
/// grids are refined by `refinement[k]` (so `refinement.len() + 1 == errors.len()`).
pub fn convergence_order(errors: &[f64], refinement: &[f64]) -> Result<f64, DiagnosticsError> {
    if errors.len() < 2 {
        return Err(DiagnosticsError::TooFewSamples {
            needed: 2,
            got: errors.len(),
        });
    }
    if refinement.len() + 1 != errors.len() {
        return Err(DiagnosticsError::LengthMismatch {
            left: errors.len(),
            right: refinement.len(),
        });
    }
    if let Some(i) = errors.iter().position(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(DiagnosticsError::NonPositive(i));
    }
    if let Some(&r) = refinement.iter().find(|&&r| !(r > 1.0 && r.is_finite())) {
        return Err(DiagnosticsError::BadRefinement(r));
    }
    let mut log_dx = vec![0.0];
    for r in refinement {
        log_dx.push(log_dx.last().unwrap() - r.ln());
    }
    let log_e: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = errors.len() as f64;
    let mx = log_dx.iter().sum::<f64>() / n;
    let my = log_e.iter().sum::<f64>() / n;
    let sxy: f64 = log_dx
        .iter()
        .zip(&log_e)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let sxx: f64 = log_dx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Max-norm differences `(|Δu|, |Δv|)` between a coarse and a nested fine
/// grid at the coarse nodes with `x ∈ [x_min, x_max]`.
pub fn interior_difference(
    coarse: &State,
    fine: &State,
    dx_coarse: f64,
    x_min: f64,
    x_max: f64,
) -> Result<[f64; 2], DiagnosticsError> {
    let (nc, nf) = (coarse.cells(), fine.cells());
    if nf < nc || nf % nc != 0 {
        return Err(DiagnosticsError::NotNested {
            coarse: nc,
            fine: nf,
        });
    }
    let r = nf / nc;
    let mut out = [0.0f64; 2];
    for j in 0..=nc {
        let x = j as f64 * dx_coarse;
        if x < x_min - 1e-12 || x > x_max + 1e-12 {
            continue;
        }
        let (c, f) = (coarse.node(j), fine.node(j * r));
        out[0] = out[0].max((c[0] - f[0]).abs());
        out[1] = out[1].max((c[1] - f[1]).abs());
    }
    Ok(out)
}
