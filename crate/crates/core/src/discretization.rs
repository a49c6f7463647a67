//! Grid functions, the second-order SBP difference operator and the
//! semi-discrete SAT scheme on a truncated half-line `[0, J·dx]`.
//!
//! Row 0 of `Q` is one-sided, rows `1..J` are centered, and row `J` uses the
//! ghost value `U_{J+1} = U_J` (homogeneous Neumann closure). The SBP inner
//! product gives node 0 half weight and every other node, including `J`,
//! full weight.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BoundarySpec, PhysicalSystem, SatParameter};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("u and v must have equal length, got {u} and {v}")]
    LengthMismatch { u: usize, v: usize },
    #[error("a state needs at least 3 nodes, got {0}")]
    TooShort(usize),
    #[error("non-finite entry at node {0}")]
    NonFinite(usize),
}

/// Node values `U_j = (u_j, v_j)`, `j = 0..=J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl State {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self, StateError> {
        if u.len() != v.len() {
            return Err(StateError::LengthMismatch {
                u: u.len(),
                v: v.len(),
            });
        }
        if u.len() < 3 {
            return Err(StateError::TooShort(u.len()));
        }
        if let Some(j) = (0..u.len()).find(|&j| !(u[j].is_finite() && v[j].is_finite())) {
            return Err(StateError::NonFinite(j));
        }
        Ok(Self { u, v })
    }

    pub fn zeros(cells: usize) -> Self {
        Self {
            u: vec![0.0; cells + 1],
            v: vec![0.0; cells + 1],
        }
    }

    /// Pointwise samples `U_j = f(j·dx)`.
    pub fn from_fn(cells: usize, dx: f64, f: impl Fn(f64) -> [f64; 2]) -> Self {
        let (u, v) = (0..=cells)
            .map(|j| f(j as f64 * dx))
            .map(|[u, v]| (u, v))
            .unzip();
        Self { u, v }
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Number of nodes, `J + 1`.
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Rightmost node index `J`.
    pub fn cells(&self) -> usize {
        self.u.len() - 1
    }

    pub fn node(&self, j: usize) -> [f64; 2] {
        [self.u[j], self.v[j]]
    }

    pub fn set_node(&mut self, j: usize, value: [f64; 2]) {
        self.u[j] = value[0];
        self.v[j] = value[1];
    }

    /// First node holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<usize> {
        (0..self.len()).find(|&j| !(self.u[j].is_finite() && self.v[j].is_finite()))
    }

    pub fn is_finite(&self) -> bool {
        self.first_non_finite().is_none()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            u: self.u.iter().map(|x| factor * x).collect(),
            v: self.v.iter().map(|x| factor * x).collect(),
        }
    }

    /// `self + h·other`
    pub fn add_scaled(&self, h: f64, other: &State) -> Self {
        assert_eq!(self.len(), other.len());
        Self {
            u: self
                .u
                .iter()
                .zip(&other.u)
                .map(|(a, b)| a + h * b)
                .collect(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(a, b)| a + h * b)
                .collect(),
        }
    }

    /// `H·U` with `H = diag(a, 1)`.
    pub fn symmetrized(&self, a: f64) -> Self {
        Self {
            u: self.u.iter().map(|x| a * x).collect(),
            v: self.v.clone(),
        }
    }

    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }

    /// Plain `Σ_j dx·|U_j|²` (uniform weights, boundary node included).
    pub fn l2_sq(&self, dx: f64) -> f64 {
        dx * self
            .u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| u * u + v * v)
            .sum::<f64>()
    }

    /// Snapshot as CSV with columns `x,u,v`.
    pub fn write_csv<W: Write>(&self, out: W, dx: f64) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "u", "v"])?;
        for j in 0..self.len() {
            w.serialize((j as f64 * dx, self.u[j], self.v[j]))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Initial data presets, sampled pointwise at `x_j = j·dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// `(15, 10)·χ_(0, 1/2](x)`; zero at `x = 0`, one at `x = 1/2`.
    #[serde(rename = "indicator15_10")]
    Indicator15x10,
    /// `(2·exp(−100(0.5−x)²), 4·exp(−100(0.4−x)²))`
    Gaussians,
    Zero,
    /// Explicit node values; the length must match the grid.
    Custom {
        u: Vec<f64>,
        v: Vec<f64>,
    },
}

impl InitialData {
    pub fn sample(&self, cells: usize, dx: f64) -> Result<State, StateError> {
        match self {
            InitialData::Indicator15x10 => Ok(State::from_fn(cells, dx, |x| {
                if x > 0.0 && x <= 0.5 {
                    [15.0, 10.0]
                } else {
                    [0.0, 0.0]
                }
            })),
            InitialData::Gaussians => Ok(State::from_fn(cells, dx, |x| {
                [
                    2.0 * (-100.0 * (0.5 - x) * (0.5 - x)).exp(),
                    4.0 * (-100.0 * (0.4 - x) * (0.4 - x)).exp(),
                ]
            })),
            InitialData::Zero => Ok(State::zeros(cells)),
            InitialData::Custom { u, v } => {
                let s = State::new(u.clone(), v.clone())?;
                if s.cells() != cells {
                    return Err(StateError::LengthMismatch {
                        u: s.len(),
                        v: cells + 1,
                    });
                }
                Ok(s)
            }
        }
    }
}

/// `(QU)_j`, the SBP approximation of `A·∂x U` with `A = [[0, 1], [a, 0]]`.
pub fn apply_q(s: &State, sys: &PhysicalSystem, dx: f64) -> State {
    let n = s.len();
    assert!(n >= 3, "apply_q needs J >= 2");
    let a = sys.a();
    let (u, v) = (&s.u, &s.v);
    let mut qu = vec![0.0; n];
    let mut qv = vec![0.0; n];
    // A·(du, dv) = (dv, a·du)
    qu[0] = (v[1] - v[0]) / dx;
    qv[0] = a * (u[1] - u[0]) / dx;
    let h = 0.5 / dx;
    for j in 1..n - 1 {
        qu[j] = h * (v[j + 1] - v[j - 1]);
        qv[j] = h * a * (u[j + 1] - u[j - 1]);
    }
    let last = n - 1;
    qu[last] = h * (v[last] - v[last - 1]);
    qv[last] = h * a * (u[last] - u[last - 1]);
    State { u: qu, v: qv }
}

/// `⟨U, V⟩_dx = (dx/2)⟨U_0, V_0⟩ + dx·Σ_{j≥1} ⟨U_j, V_j⟩`
pub fn sbp_inner(s1: &State, s2: &State, dx: f64) -> f64 {
    assert_eq!(s1.len(), s2.len(), "sbp_inner: length mismatch");
    let pair = |j: usize| s1.u[j] * s2.u[j] + s1.v[j] * s2.v[j];
    let interior: f64 = (1..s1.len()).map(pair).sum();
    dx * (0.5 * pair(0) + interior)
}

/// `E = ⟨U, HU⟩_dx`, `H = diag(a, 1)`.
pub fn energy(s: &State, sys: &PhysicalSystem, dx: f64) -> f64 {
    let a = sys.a();
    let node = |j: usize| a * s.u[j] * s.u[j] + s.v[j] * s.v[j];
    let interior: f64 = (1..s.len()).map(node).sum();
    dx * (0.5 * node(0) + interior)
}

/// Everything the semi-discrete right-hand side depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub sys: PhysicalSystem,
    pub bc: BoundarySpec,
    pub sat: SatParameter,
    pub dx: f64,
}

impl Scheme {
    pub fn new(sys: PhysicalSystem, bc: BoundarySpec, sat: SatParameter, dx: f64) -> Self {
        Self { sys, bc, sat, dx }
    }

    /// The same scheme with boundary data scaled by `factor`.
    pub fn with_scaled_data(&self, factor: f64) -> Self {
        Self {
            bc: self.bc.with_data(self.bc.data().scaled(factor)),
            ..self.clone()
        }
    }

    /// `dU/dt = −QU + eps⁻¹·S·U + (2/dx)·Φ·(B·U_0 − b(t))·e_0`, `S = diag(0, −1)`.
    pub fn semidiscrete_rhs(&self, s: &State, t: f64) -> State {
        let mut out = apply_q(s, &self.sys, self.dx);
        let inv_eps = 1.0 / self.sys.eps();
        for (du, dv) in out.u.iter_mut().zip(out.v.iter_mut()) {
            *du = -*du;
            *dv = -*dv;
        }
        for (dv, v) in out.v.iter_mut().zip(&s.v) {
            *dv -= inv_eps * v;
        }
        let residual = self.bc.residual(s.u[0], s.v[0], t);
        let k = 2.0 / self.dx * residual;
        out.u[0] += k * self.sat.alpha;
        out.v[0] += k * self.sat.beta;
        out
    }

    /// `B·U_j − b(t)` at node `j`.
    pub fn boundary_residual(&self, s: &State, j: usize, t: f64) -> f64 {
        self.bc.residual(s.u[j], s.v[j], t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys4() -> PhysicalSystem {
        PhysicalSystem::new(4.0, 1.0).unwrap()
    }

    fn node_state(cells: usize, nodes: &[(usize, [f64; 2])]) -> State {
        let mut s = State::zeros(cells);
        for &(j, val) in nodes {
            s.set_node(j, val);
        }
        s
    }

    #[test]
    fn state_validation() {
        assert!(State::new(vec![0.0; 4], vec![0.0; 3]).is_err());
        assert!(State::new(vec![0.0; 2], vec![0.0; 2]).is_err());
        assert_eq!(
            State::new(vec![0.0, f64::NAN, 0.0], vec![0.0; 3]),
            Err(StateError::NonFinite(1))
        );
        let s = State::new(vec![1.0; 5], vec![2.0; 5]).unwrap();
        assert_eq!(s.cells(), 4);
        assert!(s.is_finite());
    }

    #[test]
    fn q_of_constant_is_zero() {
        let s = State::from_fn(10, 0.1, |_| [3.0, 7.0]);
        let q = apply_q(&s, &sys4(), 0.1);
        assert_eq!(q.max_abs(), 0.0);
    }

    #[test]
    fn q_of_linear_profile() {
        let dx = 0.1;
        let s = State::from_fn(8, dx, |x| [x, 0.0]);
        let q = apply_q(&s, &sys4(), dx);
        for j in 0..8 {
            assert_eq!(q.u()[j], 0.0);
            assert!((q.v()[j] - 4.0).abs() < 1e-12, "row {j}: {}", q.v()[j]);
        }
        assert_eq!(q.u()[8], 0.0);
        assert!((q.v()[8] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn q_boundary_rows_by_hand() {
        let dx = 0.25;
        let s = node_state(6, &[(0, [1.0, 2.0])]);
        let q = apply_q(&s, &sys4(), dx);
        assert_eq!(q.node(0), [-2.0 / dx, -4.0 / dx]);
        assert_eq!(q.node(1), [-1.0 / dx, -2.0 / dx]);
        assert_eq!(q.node(2), [0.0, 0.0]);
    }

    #[test]
    fn sbp_inner_weights() {
        let dx = 0.1;
        let s = node_state(5, &[(0, [1.0, 0.0])]);
        assert!((sbp_inner(&s, &s, dx) - dx / 2.0).abs() < 1e-15);
        let s = node_state(5, &[(1, [1.0, 1.0])]);
        assert!((sbp_inner(&s, &s, dx) - 2.0 * dx).abs() < 1e-15);
        let s1 = node_state(5, &[(0, [1.0, 0.0]), (1, [2.0, 0.0])]);
        let s2 = node_state(5, &[(0, [3.0, 0.0]), (1, [4.0, 0.0])]);
        assert!((sbp_inner(&s1, &s2, dx) - 0.95).abs() < 1e-14);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&State::zeros(6), &sys4(), 0.1), 0.0);
        let s = node_state(5, &[(1, [1.0, 1.0])]);
        assert!((energy(&s, &sys4(), 0.1) - 0.5).abs() < 1e-15);
        let dx = 2.0 / 400.0;
        let f = InitialData::Indicator15x10.sample(400, dx).unwrap();
        assert_eq!(f.node(0), [0.0, 0.0]);
        assert_eq!(f.node(100), [15.0, 10.0]);
        assert_eq!(f.node(101), [0.0, 0.0]);
        assert!((energy(&f, &sys4(), dx) - 500.0).abs() < 1e-9);
        assert!((sbp_inner(&f, &f.symmetrized(4.0), dx) - 500.0).abs() < 1e-9);
    }

    #[test]
    fn sbp_identity_worked_instance() {
        let dx = 0.1;
        let s = node_state(6, &[(0, [1.0, 2.0])]);
        let q = apply_q(&s, &sys4(), dx);
        let lhs = sbp_inner(&q, &s.symmetrized(4.0), dx);
        assert!((lhs + 8.0).abs() < 1e-12);
    }

    #[test]
    fn rhs_examples() {
        let sys = PhysicalSystem::new(4.0, 1e-2).unwrap();
        let sat = SatParameter::new(-2.0, -12.0);
        let bc = BoundarySpec::new(1.0, 1.0, crate::model::BoundaryData::Constant(1.0)).unwrap();
        let scheme = Scheme::new(sys, bc.clone(), sat, 0.5);
        let r = scheme.semidiscrete_rhs(&State::zeros(6), 0.0);
        assert_eq!(r.node(0), [8.0, 48.0]);
        assert_eq!(r.max_abs_diff(&node_state(6, &[(0, [8.0, 48.0])])), 0.0);

        let c = 2.5;
        let eq = State::from_fn(6, 0.5, |_| [c, 0.0]);
        let scheme = Scheme::new(
            sys,
            BoundarySpec::new(1.0, 1.0, crate::model::BoundaryData::Constant(c)).unwrap(),
            sat,
            0.5,
        );
        assert_eq!(scheme.semidiscrete_rhs(&eq, 0.3).max_abs(), 0.0);

        let scheme = Scheme::new(sys, BoundarySpec::homogeneous(1.0, 1.0).unwrap(), sat, 0.5);
        assert_eq!(
            scheme.semidiscrete_rhs(&State::zeros(6), 0.0).max_abs(),
            0.0
        );
    }

    #[test]
    fn rhs_relaxes_v() {
        let sys = PhysicalSystem::new(1.0, 0.5).unwrap();
        let scheme = Scheme::new(
            sys,
            BoundarySpec::homogeneous(1.0, 0.0).unwrap(),
            SatParameter::new(-1.0, -1.0),
            0.1,
        );
        // v constant away from the boundary: only the source acts on node 3
        let s = State::from_fn(6, 0.1, |_| [0.0, 1.0]);
        let r = scheme.semidiscrete_rhs(&s, 0.0);
        assert!((r.v()[3] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn csv_snapshot() {
        let s = State::from_fn(2, 0.5, |x| [x, -x]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf, 0.5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "x,u,v\n0.0,0.0,-0.0\n0.5,0.5,-0.5\n1.0,1.0,-1.0\n");
    }

    #[test]
    fn custom_initial_data_length_checked() {
        let d = InitialData::Custom {
            u: vec![0.0; 4],
            v: vec![0.0; 4],
        };
        assert!(d.sample(3, 0.1).is_ok());
        assert!(d.sample(5, 0.1).is_err());
    }
}
