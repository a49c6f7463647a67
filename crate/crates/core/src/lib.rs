//! Stability certificates and SBP-SAT simulation of the linear damped wave
//! system `u_t + v_x = 0`, `v_t + a·u_x = −v/eps` on a half-line with a
//! relaxation-type boundary condition `Bu·u + Bv·v = b(t)` at `x = 0`.

pub mod cli;
pub mod diagnostics;
pub mod discretization;
pub mod integrators;
pub mod model;
pub mod quadform;
