//! Physical, boundary and grid parameters of the damped wave system
//!
//! ```text
//!   u_t + v_x = 0
//!   v_t + a u_x = -v / eps          x > 0
//!   Bu u(0,t) + Bv v(0,t) = b(t)
//! ```
//!
//! together with the algebraic admissibility predicates used to gate a run:
//! the uniform and stiff Kreiss conditions, the discrete strict
//! dissipativity condition and the SAT-parameter inequalities.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `3 + 2√2`, the larger root of `x² − 6x + 1`.
pub const SAT_ALPHA_FACTOR: f64 = 3.0 + 2.0 * SQRT_2;

/// Absolute tolerance on `β·Bu + a` when `Bv = 0`.
pub const SAT_EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("wave parameter a must be positive and finite, got {0}")]
    NonPositiveWaveSpeed(f64),
    #[error("relaxation time eps must be positive and finite, got {0}")]
    NonPositiveRelaxation(f64),
    #[error("boundary coefficient Bu must be positive and finite, got {0}")]
    NonPositiveBu(f64),
    #[error("boundary coefficient Bv must be finite, got {0}")]
    NonFiniteBv(f64),
    #[error("grid spacing dx must lie in (0, 1], got {0}")]
    BadSpacing(f64),
    #[error("at least 2 cells are required, got {0}")]
    TooFewCells(usize),
    #[error("time step dt must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("boundary samples need a positive spacing and at least one value")]
    BadSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSystem {
    a: f64,
    eps: f64,
}

impl PhysicalSystem {
    pub fn new(a: f64, eps: f64) -> Result<Self, ModelError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(ModelError::NonPositiveWaveSpeed(a));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(ModelError::NonPositiveRelaxation(eps));
        }
        Ok(Self { a, eps })
    }

    /// Square of the characteristic speed.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn speed(&self) -> f64 {
        self.a.sqrt()
    }
}

/// Boundary data `b(t)`, sampled pointwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryData {
    Zero,
    Constant(f64),
    /// `amplitude · sin²(2π·frequency·t)`
    SinSquared {
        amplitude: f64,
        frequency: f64,
    },
    /// Samples at `t = k·dt`, linearly interpolated and held constant past the end.
    Samples {
        dt: f64,
        values: Vec<f64>,
    },
}

impl BoundaryData {
    /// `b(t) = 5 sin²(4πt)`
    pub fn sin2() -> Self {
        BoundaryData::SinSquared {
            amplitude: 5.0,
            frequency: 2.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BoundaryData::Zero => 0.0,
            BoundaryData::Constant(c) => *c,
            BoundaryData::SinSquared {
                amplitude,
                frequency,
            } => {
                let s = (2.0 * PI * frequency * t).sin();
                amplitude * s * s
            }
            BoundaryData::Samples { dt, values } => {
                let pos = (t / dt).max(0.0);
                let k = pos.floor() as usize;
                if k + 1 >= values.len() {
                    return *values.last().unwrap_or(&0.0);
                }
                let w = pos - k as f64;
                (1.0 - w) * values[k] + w * values[k + 1]
            }
        }
    }

    /// The same data multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            BoundaryData::Zero => BoundaryData::Zero,
            BoundaryData::Constant(c) => BoundaryData::Constant(factor * c),
            BoundaryData::SinSquared {
                amplitude,
                frequency,
            } => BoundaryData::SinSquared {
                amplitude: factor * amplitude,
                frequency: *frequency,
            },
            BoundaryData::Samples { dt, values } => BoundaryData::Samples {
                dt: *dt,
                values: values.iter().map(|v| factor * v).collect(),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            BoundaryData::Samples { dt, values }
                if !(dt.is_finite() && *dt > 0.0) || values.is_empty() =>
            {
                Err(ModelError::BadSamples)
            }
            _ => Ok(()),
        }
    }
}

/// `Bu u(0,t) + Bv v(0,t) = b(t)` with the normalization `Bu > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    bu: f64,
    bv: f64,
    data: BoundaryData,
}

impl BoundarySpec {
    pub fn new(bu: f64, bv: f64, data: BoundaryData) -> Result<Self, ModelError> {
        if !(bu.is_finite() && bu > 0.0) {
            return Err(ModelError::NonPositiveBu(bu));
        }
        if !bv.is_finite() {
            return Err(ModelError::NonFiniteBv(bv));
        }
        data.validate()?;
        Ok(Self { bu, bv, data })
    }

    /// Homogeneous condition `b ≡ 0`.
    pub fn homogeneous(bu: f64, bv: f64) -> Result<Self, ModelError> {
        Self::new(bu, bv, BoundaryData::Zero)
    }

    pub fn bu(&self) -> f64 {
        self.bu
    }

    pub fn bv(&self) -> f64 {
        self.bv
    }

    pub fn data(&self) -> &BoundaryData {
        &self.data
    }

    pub fn b(&self, t: f64) -> f64 {
        self.data.eval(t)
    }

    pub fn with_data(&self, data: BoundaryData) -> Self {
        Self {
            bu: self.bu,
            bv: self.bv,
            data,
        }
    }

    /// `B U - b(t)` for a node value `(u, v)`.
    pub fn residual(&self, u: f64, v: f64, t: f64) -> f64 {
        self.bu * u + self.bv * v - self.b(t)
    }
}

/// Penalty pair `Φ = (α, β)` of the boundary SAT term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatParameter {
    pub alpha: f64,
    pub beta: f64,
}

impl SatParameter {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }
}

/// Uniform grid `x_j = j·dx`, `j = 0..=cells`, plus the time step of an integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    dx: f64,
    cells: usize,
    dt: f64,
}

impl Discretization {
    pub fn new(dx: f64, cells: usize, dt: f64) -> Result<Self, ModelError> {
        if !(dx.is_finite() && dx > 0.0 && dx <= 1.0) {
            return Err(ModelError::BadSpacing(dx));
        }
        if cells < 2 {
            return Err(ModelError::TooFewCells(cells));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ModelError::BadTimeStep(dt));
        }
        Ok(Self { dx, cells, dt })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Rightmost node index `J`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn length(&self) -> f64 {
        self.dx * self.cells as f64
    }
}

/// `Bu + √a·Bv`
fn kreiss_symbol(sys: &PhysicalSystem, bc: &BoundarySpec) -> f64 {
    bc.bu + sys.speed() * bc.bv
}

pub fn check_ukc(sys: &PhysicalSystem, bc: &BoundarySpec) -> bool {
    kreiss_symbol(sys, bc) != 0.0
}

pub fn check_skc(sys: &PhysicalSystem, bc: &BoundarySpec) -> bool {
    kreiss_symbol(sys, bc) > 0.0
}

/// Strict dissipativity `2aBv + ratio·Bu > 0` at a given `ratio = dx/eps`.
pub fn dsdc_at_ratio(sys: &PhysicalSystem, bc: &BoundarySpec, ratio: f64) -> bool {
    2.0 * sys.a * bc.bv + ratio * bc.bu > 0.0
}

pub fn check_dsdc(sys: &PhysicalSystem, bc: &BoundarySpec, dx: f64) -> bool {
    dsdc_at_ratio(sys, bc, dx / sys.eps)
}

/// Lower bound `max(-4a·Bv/Bu, 0)` that `δ0` (and hence `dx/eps`) must exceed.
pub fn delta0_threshold(sys: &PhysicalSystem, bc: &BoundarySpec) -> f64 {
    (-4.0 * sys.a * bc.bv / bc.bu).max(0.0)
}

/// Smallest strict satisfier of `δ0 > delta0_threshold`, used when no `δ0` is given.
pub fn default_delta0(sys: &PhysicalSystem, bc: &BoundarySpec) -> f64 {
    delta0_threshold(sys, bc) * (1.0 + 1e-6) + 1e-12
}

/// Strict upper bound on `α`.
pub fn sat_alpha_bound(bc: &BoundarySpec) -> f64 {
    if bc.bv == 0.0 {
        0.0
    } else {
        SAT_ALPHA_FACTOR * (1.0 / bc.bv).min(0.0)
    }
}

/// Open interval that `β·Bu` must lie in when `Bv ≠ 0`, as `(center, half_width)`.
pub fn sat_beta_window(sys: &PhysicalSystem, bc: &BoundarySpec, alpha: f64) -> (f64, f64) {
    let center = -sys.a * (1.0 - bc.bv * alpha);
    let half = 2.0 * sys.a * (bc.bv * alpha).abs().sqrt();
    (center, half)
}

pub fn is_sat_admissible(sys: &PhysicalSystem, bc: &BoundarySpec, sat: &SatParameter) -> bool {
    if sat.alpha.is_nan() || sat.alpha >= sat_alpha_bound(bc) {
        return false;
    }
    let beta_bu = sat.beta * bc.bu;
    if bc.bv == 0.0 {
        return (beta_bu + sys.a).abs() <= SAT_EQUALITY_TOL;
    }
    let (center, half) = sat_beta_window(sys, bc, sat.alpha);
    center - half < beta_bu && beta_bu < center + half
}

/// `α = (3+2√2)·min(1/Bv, 0) − 2`, `β = −a(1 − Bv·α)/Bu`.
///
/// Panics if the result is not admissible, which can only happen when
/// `|Bv·α|` is so small that the `β` window collapses below one ulp.
pub fn canonical_sat(sys: &PhysicalSystem, bc: &BoundarySpec) -> SatParameter {
    let alpha = sat_alpha_bound(bc) - 2.0;
    let beta = -sys.a * (1.0 - bc.bv * alpha) / bc.bu;
    let sat = SatParameter { alpha, beta };
    assert!(
        is_sat_admissible(sys, bc, &sat),
        "canonical SAT parameter {sat:?} is not admissible for a={}, Bu={}, Bv={}",
        sys.a,
        bc.bu,
        bc.bv
    );
    sat
}
