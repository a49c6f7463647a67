//! Time stepping for the semi-discrete scheme: classical RK4 and a linearly
//! implicit Euler step solved with a cached block-tridiagonal factorization.

pub mod block;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{Scheme, State};
use crate::model::PhysicalSystem;
use block::{BlockTridiagonalFactor, BlockTridiagonalSystem, Mat2, SolveError};

/// Largest `|λ|·dt` allowed for the boundary block under RK4.
pub const RK4_BOUNDARY_MARGIN: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
    #[serde(rename = "implicit", alias = "implicit_euler")]
    ImplicitEuler,
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Integrator::Rk4 => "rk4",
            Integrator::ImplicitEuler => "implicit",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StepError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("state is not finite at node {0}")]
    NonFiniteState(usize),
    #[error("boundary data is not finite at t = {0}")]
    NonFiniteData(f64),
    #[error("state has {got} nodes, integrator was built for {expected}")]
    Size { got: usize, expected: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// `min(0.5·dx/√a, 2.5·eps)`: the CFL bound together with the relaxation bound.
pub fn stable_dt(sys: &PhysicalSystem, dx: f64) -> f64 {
    (0.5 * dx / sys.speed()).min(2.5 * sys.eps())
}

/// Jacobian block of the right-hand side at node 0 with respect to `U_0`.
pub fn boundary_block(scheme: &Scheme) -> Mat2 {
    let a = scheme.sys.a();
    let dx = scheme.dx;
    let (bu, bv) = (scheme.bc.bu(), scheme.bc.bv());
    let (alpha, beta) = (scheme.sat.alpha, scheme.sat.beta);
    let flux = Mat2::new(0.0, 1.0, a, 0.0).scale(1.0 / dx);
    let sat = Mat2::new(alpha * bu, alpha * bv, beta * bu, beta * bv).scale(2.0 / dx);
    flux - Mat2::diag(0.0, 1.0 / scheme.sys.eps()) + sat
}

/// [`stable_dt`] further limited so the boundary block stays inside the RK4
/// stability region.
pub fn rk4_dt(scheme: &Scheme) -> f64 {
    let rho = boundary_block(scheme).spectral_radius();
    let limit = if rho > 0.0 {
        RK4_BOUNDARY_MARGIN / rho
    } else {
        f64::INFINITY
    };
    stable_dt(&scheme.sys, scheme.dx).min(limit)
}

/// Number of equal steps of size at most `dt` covering `[0, t_final]`.
pub fn step_count(t_final: f64, dt: f64) -> usize {
    ((t_final / dt) - 1e-9).ceil().max(1.0) as usize
}

pub fn rk4_step(scheme: &Scheme, s: &State, t: f64, dt: f64) -> State {
    let k1 = scheme.semidiscrete_rhs(s, t);
    let k2 = scheme.semidiscrete_rhs(&s.add_scaled(0.5 * dt, &k1), t + 0.5 * dt);
    let k3 = scheme.semidiscrete_rhs(&s.add_scaled(0.5 * dt, &k2), t + 0.5 * dt);
    let k4 = scheme.semidiscrete_rhs(&s.add_scaled(dt, &k3), t + dt);
    s.add_scaled(dt / 6.0, &k1)
        .add_scaled(dt / 3.0, &k2)
        .add_scaled(dt / 3.0, &k3)
        .add_scaled(dt / 6.0, &k4)
}

/// Implicit Euler for a fixed scheme, grid and step; the matrix is factored once.
#[derive(Debug, Clone)]
pub struct ImplicitEuler {
    scheme: Scheme,
    dt: f64,
    system: BlockTridiagonalSystem,
    factor: BlockTridiagonalFactor,
}

impl ImplicitEuler {
    pub fn new(scheme: &Scheme, cells: usize, dt: f64) -> Result<Self, StepError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(StepError::BadStep(dt));
        }
        let n = cells + 1;
        let a = scheme.sys.a();
        let dx = scheme.dx;
        let flux = Mat2::new(0.0, 1.0, a, 0.0);
        let relax = Mat2::diag(0.0, 1.0 / scheme.sys.eps());
        let time = Mat2::IDENTITY.scale(1.0 / dt);
        let (bu, bv) = (scheme.bc.bu(), scheme.bc.bv());
        let (alpha, beta) = (scheme.sat.alpha, scheme.sat.beta);
        let phi_b = Mat2::new(alpha * bu, alpha * bv, beta * bu, beta * bv);

        let half = flux.scale(0.5 / dx);
        let mut lower = vec![-half; n];
        let mut diag = vec![time + relax; n];
        let mut upper = vec![half; n];
        lower[0] = Mat2::ZERO;
        upper[n - 1] = Mat2::ZERO;
        diag[0] = time - flux.scale(1.0 / dx) + relax - phi_b.scale(2.0 / dx);
        upper[0] = flux.scale(1.0 / dx);
        diag[n - 1] = time + half + relax;

        let system = BlockTridiagonalSystem {
            lower,
            diag,
            upper,
            rhs: vec![[0.0; 2]; n],
        };
        let factor = system.factor()?;
        Ok(Self {
            scheme: scheme.clone(),
            dt,
            system,
            factor,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn max_pivot_condition(&self) -> f64 {
        self.factor.max_pivot_condition()
    }

    fn rhs(&self, s: &State, t_next: f64) -> Result<Vec<[f64; 2]>, StepError> {
        let expected = self.system.len();
        if s.len() != expected {
            return Err(StepError::Size {
                got: s.len(),
                expected,
            });
        }
        if let Some(j) = s.first_non_finite() {
            return Err(StepError::NonFiniteState(j));
        }
        let b = self.scheme.bc.b(t_next);
        if !b.is_finite() {
            return Err(StepError::NonFiniteData(t_next));
        }
        let inv_dt = 1.0 / self.dt;
        let mut rhs: Vec<[f64; 2]> = (0..s.len())
            .map(|j| {
                let [u, v] = s.node(j);
                [u * inv_dt, v * inv_dt]
            })
            .collect();
        let k = 2.0 / self.scheme.dx * b;
        rhs[0][0] -= k * self.scheme.sat.alpha;
        rhs[0][1] -= k * self.scheme.sat.beta;
        Ok(rhs)
    }

    /// `U^{n+1}` from `U^n`, with boundary data taken at `t_next`.
    pub fn step(&self, s: &State, t_next: f64) -> Result<State, StepError> {
        let rhs = self.rhs(s, t_next)?;
        let x = self.factor.solve(&rhs)?;
        if let Some(j) = x
            .iter()
            .position(|n| !(n[0].is_finite() && n[1].is_finite()))
        {
            return Err(StepError::NonFiniteState(j));
        }
        let (u, v) = x.into_iter().map(|[u, v]| (u, v)).unzip();
        Ok(State::new(u, v).expect("solver output is finite"))
    }

    /// `‖M·next − rhs(prev)‖∞` for the linear system of one step.
    pub fn step_residual(&self, prev: &State, next: &State, t_next: f64) -> Result<f64, StepError> {
        let rhs = self.rhs(prev, t_next)?;
        let x: Vec<[f64; 2]> = (0..next.len()).map(|j| next.node(j)).collect();
        let system = BlockTridiagonalSystem {
            rhs,
            ..self.system.clone()
        };
        Ok(system.residual(&x))
    }
}

/// One implicit Euler step without caching.
pub fn implicit_euler_step(
    scheme: &Scheme,
    s: &State,
    t_next: f64,
    dt: f64,
) -> Result<State, StepError> {
    ImplicitEuler::new(scheme, s.cells(), dt)?.step(s, t_next)
}
