//! Boundary quadratic form of the SAT closure and its positivity certificate.
//!
//! The energy balance of the scheme leaves one boundary term,
//! `F(U0) = (dx/eps)·v² − 2(Bu·u + Bv·v)(αa·u + βv) − 2a·uv`,
//! which equals `−U0ᵀ M U0` for the symmetric matrix `M` built by
//! [`boundary_matrix`]. A certificate is a constant `c > 0` with
//! `M ⪯ −c·I`, i.e. `F(U) ≥ c|U|²`.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::model::{
    check_skc, check_ukc, default_delta0, delta0_threshold, dsdc_at_ratio, is_sat_admissible,
    sat_alpha_bound, BoundarySpec, PhysicalSystem, SatParameter,
};

pub mod sampling;

/// Symmetric 2×2 matrix `sym(HA) + ratio·HS + 2·sym(HΦB)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
    pub ratio: f64,
}

impl BoundaryMatrix {
    /// Eigenvalues `(min, max)` from the closed form `mean ± hypot(half_diff, m12)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.m11 + self.m22);
        let radius = (0.5 * (self.m11 - self.m22)).hypot(self.m12);
        (mean - radius, mean + radius)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues().1
    }

    /// `Uᵀ M U`
    pub fn quadratic(&self, u: f64, v: f64) -> f64 {
        self.m11 * u * u + 2.0 * self.m12 * u * v + self.m22 * v * v
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.m11.abs().max(self.m12.abs()).max(self.m22.abs())
    }
}

/// The three products every entry of `M` is built from. Keeping them in one
/// place makes `λmax(M)` and the certified constants round identically.
#[derive(Debug, Clone, Copy)]
struct Products {
    /// `Bu·α·a`
    p: f64,
    /// `Bv·β`
    q: f64,
    /// `Bu·β + Bv·α·a + a`
    cross: f64,
}

impl Products {
    fn new(sys: &PhysicalSystem, bc: &BoundarySpec, sat: &SatParameter) -> Self {
        let a = sys.a();
        Self {
            p: bc.bu() * sat.alpha * a,
            q: bc.bv() * sat.beta,
            cross: bc.bu() * sat.beta + bc.bv() * sat.alpha * a + a,
        }
    }

    /// `−q − p + s/2 − hypot(q − p − s/2, cross)`: the largest admissible `c`
    /// at a given dissipation ratio `s`; equals `−λmax(M)` at `ratio = s`.
    fn c_bound(&self, s: f64) -> f64 {
        -self.q - self.p + 0.5 * s - (self.q - self.p - 0.5 * s).hypot(self.cross)
    }
}

pub fn boundary_matrix(
    sys: &PhysicalSystem,
    bc: &BoundarySpec,
    sat: &SatParameter,
    ratio: f64,
) -> BoundaryMatrix {
    let pr = Products::new(sys, bc, sat);
    BoundaryMatrix {
        m11: 2.0 * pr.p,
        m12: pr.cross,
        m22: 2.0 * pr.q - ratio,
        ratio,
    }
}

/// `F(U) = ratio·v² − 2(Bu·u + Bv·v)(αa·u + βv) − 2a·uv`
pub fn evaluate_f(
    state: [f64; 2],
    sys: &PhysicalSystem,
    bc: &BoundarySpec,
    sat: &SatParameter,
    ratio: f64,
) -> f64 {
    let [u, v] = state;
    let a = sys.a();
    ratio * v * v
        - 2.0 * (bc.bu() * u + bc.bv() * v) * (sat.alpha * a * u + sat.beta * v)
        - 2.0 * a * u * v
}

/// `Δ = (2Bvβ − 2Buαa − ratio)² + 4(Buβ + Bvαa + a)²`, the discriminant of the
/// quadratic in `c` whose smaller root bounds the certificate.
pub fn discriminant_delta(
    sys: &PhysicalSystem,
    bc: &BoundarySpec,
    sat: &SatParameter,
    ratio: f64,
) -> f64 {
    let pr = Products::new(sys, bc, sat);
    let d = 2.0 * pr.q - 2.0 * pr.p - ratio;
    d * d + 4.0 * pr.cross * pr.cross
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "Bv_pos")]
    BvPos,
    #[serde(rename = "Bv_neg")]
    BvNeg,
    #[serde(rename = "Bv_zero")]
    BvZero,
}

impl CaseTag {
    pub fn of(bc: &BoundarySpec) -> Self {
        if bc.bv() > 0.0 {
            CaseTag::BvPos
        } else if bc.bv() < 0.0 {
            CaseTag::BvNeg
        } else {
            CaseTag::BvZero
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checks {
    pub ukc: bool,
    pub skc: bool,
    pub dsdc: bool,
    pub sat_admissible: bool,
    /// `ratio ≥ δ0 > δ0_threshold` when `Bv ≤ 0`; always true for `Bv > 0`.
    pub ratio_above_delta0: bool,
}

impl Checks {
    pub fn all_pass(&self) -> bool {
        self.ukc && self.skc && self.dsdc && self.sat_admissible && self.ratio_above_delta0
    }

    /// Preconditions of the certificate (UKC/SKC are reported but not required).
    pub fn certifiable(&self) -> bool {
        self.dsdc && self.sat_admissible && self.ratio_above_delta0
    }

    fn certificate_failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.sat_admissible {
            out.push("SAT parameter is not admissible");
        }
        if !self.dsdc {
            out.push("strict dissipativity 2aBv + ratio*Bu > 0 fails");
        }
        if !self.ratio_above_delta0 {
            out.push("ratio >= delta0 > -4aBv/Bu fails");
        }
        out
    }
}

pub fn assess(
    sys: &PhysicalSystem,
    bc: &BoundarySpec,
    sat: &SatParameter,
    ratio: f64,
    delta0: f64,
) -> Checks {
    let ratio_above_delta0 =
        bc.bv() > 0.0 || (delta0 > delta0_threshold(sys, bc) && delta0 > 0.0 && ratio >= delta0);
    Checks {
        ukc: check_ukc(sys, bc),
        skc: check_skc(sys, bc),
        dsdc: dsdc_at_ratio(sys, bc, ratio),
        sat_admissible: is_sat_admissible(sys, bc, sat),
        ratio_above_delta0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub c: f64,
    pub lambda_max: f64,
    pub case_tag: CaseTag,
    pub checks: Checks,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("certificate preconditions fail: {}", .failed.join("; "))]
    Precondition {
        checks: Checks,
        failed: Vec<&'static str>,
    },
    #[error("certified constant c = {c} is not positive (admissibility bug upstream)")]
    NonPositive { c: f64 },
    #[error("lambda_max = {lambda_max} exceeds -c = {}", -.c)]
    Violated { c: f64, lambda_max: f64 },
}

/// Largest constant `c` of the uniform bound for the sign case of `Bv`.
///
/// For `Bv > 0` the bound is taken at ratio 0 and so holds for every `dx, eps`;
/// for `Bv ≤ 0` it is taken at `δ0` and holds whenever `dx/eps ≥ δ0`.
/// `delta0` defaults to [`default_delta0`].
pub fn certificate_c(
    sys: &PhysicalSystem,
    bc: &BoundarySpec,
    sat: &SatParameter,
    ratio: f64,
    delta0: Option<f64>,
) -> Result<StabilityCertificate, CertificateError> {
    let delta0 = delta0.unwrap_or_else(|| default_delta0(sys, bc));
    let checks = assess(sys, bc, sat, ratio, delta0);
    if !checks.certifiable() {
        return Err(CertificateError::Precondition {
            checks,
            failed: checks.certificate_failures(),
        });
    }
    let case_tag = CaseTag::of(bc);
    let pr = Products::new(sys, bc, sat);
    let c = match case_tag {
        CaseTag::BvPos => pr.c_bound(0.0),
        CaseTag::BvNeg => pr.c_bound(delta0),
        CaseTag::BvZero => -pr.p + 0.5 * delta0 - (pr.p + 0.5 * delta0).abs(),
    };
    if c.is_nan() || c <= 0.0 {
        return Err(CertificateError::NonPositive { c });
    }
    let m = boundary_matrix(sys, bc, sat, ratio);
    let lambda_max = m.lambda_max();
    if lambda_max > -c + 1e-12 * (1.0 + m.max_abs_entry()) {
        return Err(CertificateError::Violated { c, lambda_max });
    }
    Ok(StabilityCertificate {
        c,
        lambda_max,
        case_tag,
        checks,
    })
}

/// Auxiliary inequalities that feed the positivity argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lemma {
    /// `Bv·β < 0`
    A1,
    /// Upper end of the widened `β` window lies below `−aBu²α/Bv + (Bu/Bv)·ratio/2` (`Bv > 0`).
    A2,
    /// `√(2a|Bvα|) < √(−(2aBv + ratio·Bu)α)`
    A3,
    /// Mirror of A2 for `Bv < 0`.
    A4,
    /// `2Bvβ + 2Buαa − ratio + √Δ < 0`
    A5,
    /// Uniform constant for `Bv > 0` is positive and below the ratio-dependent one.
    A6,
    /// Uniform constant at `δ0` for `Bv < 0` is positive and below the ratio-dependent one.
    A7,
}

impl Lemma {
    pub const ALL: [Lemma; 7] = [
        Lemma::A1,
        Lemma::A2,
        Lemma::A3,
        Lemma::A4,
        Lemma::A5,
        Lemma::A6,
        Lemma::A7,
    ];
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = *self as usize + 1;
        write!(f, "Lemma A.{n}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{lemma} requires {guard}")]
pub struct HypothesisError {
    pub lemma: Lemma,
    pub guard: &'static str,
}

struct Guards<'a> {
    lemma: Lemma,
    sys: &'a PhysicalSystem,
    bc: &'a BoundarySpec,
    sat: &'a SatParameter,
    ratio: f64,
    delta0: f64,
}

impl Guards<'_> {
    fn require(&self, ok: bool, guard: &'static str) -> Result<(), HypothesisError> {
        if ok {
            Ok(())
        } else {
            Err(HypothesisError {
                lemma: self.lemma,
                guard,
            })
        }
    }

    fn ratio_positive(&self) -> Result<(), HypothesisError> {
        self.require(self.ratio.is_finite() && self.ratio > 0.0, "ratio>0")
    }

    fn bv_pos(&self) -> Result<(), HypothesisError> {
        self.require(self.bc.bv() > 0.0, "Bv>0")
    }

    fn bv_neg(&self) -> Result<(), HypothesisError> {
        self.require(self.bc.bv() < 0.0, "Bv<0")
    }

    fn bv_nonzero(&self) -> Result<(), HypothesisError> {
        self.require(self.bc.bv() != 0.0, "Bv!=0")
    }

    fn alpha_sat1(&self) -> Result<(), HypothesisError> {
        self.require(
            self.sat.alpha < sat_alpha_bound(self.bc),
            "alpha satisfying SAT1",
        )
    }

    fn sat(&self) -> Result<(), HypothesisError> {
        self.require(
            is_sat_admissible(self.sys, self.bc, self.sat),
            "an admissible SAT parameter",
        )
    }

    fn dsdc(&self) -> Result<(), HypothesisError> {
        self.require(
            dsdc_at_ratio(self.sys, self.bc, self.ratio),
            "2aBv + ratio*Bu > 0 (DSDC)",
        )
    }

    fn delta0_window(&self, strict_ratio: bool) -> Result<(), HypothesisError> {
        self.require(
            self.delta0 > delta0_threshold(self.sys, self.bc),
            "delta0 > -4aBv/Bu",
        )?;
        if strict_ratio {
            self.require(self.ratio > self.delta0, "ratio > delta0")
        } else {
            self.require(self.ratio >= self.delta0, "ratio >= delta0")
        }
    }
}

/// Evaluates the concluding inequality of `lemma` with strict comparisons.
///
/// The hypotheses are checked first; a violated hypothesis is an error, not
/// `false`. `delta0` defaults to [`default_delta0`] and only matters for A3,
/// A5 (when `Bv < 0`) and A7.
pub fn verify_lemma(
    lemma: Lemma,
    sys: &PhysicalSystem,
    bc: &BoundarySpec,
    sat: &SatParameter,
    ratio: f64,
    delta0: Option<f64>,
) -> Result<bool, HypothesisError> {
    let g = Guards {
        lemma,
        sys,
        bc,
        sat,
        ratio,
        delta0: delta0.unwrap_or_else(|| default_delta0(sys, bc)),
    };
    g.ratio_positive()?;

    let a = sys.a();
    let (bu, bv) = (bc.bu(), bc.bv());
    let SatParameter { alpha, beta } = *sat;
    // −(2aBv + ratio·Bu)·α, nonnegative under DSDC with α < 0
    let dsdc_alpha = -(2.0 * a * bv + ratio * bu) * alpha;
    // −aBu²α/Bv + (Bu/Bv)·ratio/2
    let slope_bound = -a * bu * bu * alpha / bv + bu / bv * 0.5 * ratio;

    let holds = match lemma {
        Lemma::A1 => {
            g.bv_nonzero()?;
            g.sat()?;
            bv * beta < 0.0
        }
        Lemma::A2 => {
            g.bv_pos()?;
            g.alpha_sat1()?;
            g.dsdc()?;
            -a * (1.0 - bv * alpha) + (2.0 * a * dsdc_alpha).sqrt() < slope_bound
        }
        Lemma::A3 => {
            g.bv_nonzero()?;
            g.sat()?;
            g.dsdc()?;
            if bv < 0.0 {
                g.delta0_window(false)?;
            }
            (2.0 * a * (bv * alpha).abs()).sqrt() < dsdc_alpha.sqrt()
        }
        Lemma::A4 => {
            g.bv_neg()?;
            g.alpha_sat1()?;
            g.dsdc()?;
            slope_bound < -a * (1.0 - bv * alpha) - (2.0 * a * dsdc_alpha).sqrt()
        }
        Lemma::A5 => {
            g.sat()?;
            g.dsdc()?;
            if bv < 0.0 {
                g.delta0_window(false)?;
            }
            let delta = discriminant_delta(sys, bc, sat, ratio);
            2.0 * bv * beta + 2.0 * bu * alpha * a - ratio + delta.sqrt() < 0.0
        }
        Lemma::A6 => {
            g.bv_pos()?;
            g.sat()?;
            let pr = Products::new(sys, bc, sat);
            let uniform = pr.c_bound(0.0);
            uniform < pr.c_bound(ratio) && 0.0 < uniform
        }
        Lemma::A7 => {
            g.bv_neg()?;
            g.sat()?;
            g.dsdc()?;
            g.delta0_window(true)?;
            let pr = Products::new(sys, bc, sat);
            let uniform = pr.c_bound(g.delta0);
            uniform < pr.c_bound(ratio) && 0.0 < uniform
        }
    };
    Ok(holds)
}
