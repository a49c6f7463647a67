use proptest::prelude::*;

use relaxbound::discretization::{apply_q, energy, sbp_inner, Scheme, State};
use relaxbound::model::{
    canonical_sat, check_skc, check_ukc, default_delta0, dsdc_at_ratio, is_sat_admissible,
    BoundaryData, BoundarySpec, PhysicalSystem,
};
use relaxbound::quadform::sampling::{BvSign, ParameterSampler};
use relaxbound::quadform::{
    boundary_matrix, certificate_c, discriminant_delta, evaluate_f, verify_lemma, Lemma,
};

fn system() -> impl Strategy<Value = PhysicalSystem> {
    (0.1f64..=100.0, 1e-4f64..1e3).prop_map(|(a, eps)| PhysicalSystem::new(a, eps).unwrap())
}

fn boundary() -> impl Strategy<Value = BoundarySpec> {
    (1e-6f64..=100.0, -100.0f64..=100.0)
        .prop_map(|(bu, bv)| BoundarySpec::homogeneous(bu, bv).unwrap())
}

fn sign() -> impl Strategy<Value = BvSign> {
    prop_oneof![
        Just(BvSign::Positive),
        Just(BvSign::Negative),
        Just(BvSign::Zero),
        Just(BvSign::Any)
    ]
}

fn state(max_cells: usize) -> impl Strategy<Value = State> {
    (3..max_cells).prop_flat_map(|cells| {
        (
            prop::collection::vec(-10.0f64..10.0, cells + 1),
            prop::collection::vec(-10.0f64..10.0, cells + 1),
        )
            .prop_map(|(u, v)| State::new(u, v).unwrap())
    })
}

proptest! {
    #[test]
    fn canonical_sat_is_admissible(sys in system(), bc in boundary()) {
        prop_assert!(is_sat_admissible(&sys, &bc, &canonical_sat(&sys, &bc)));
    }

    #[test]
    fn skc_implies_ukc(sys in system(), bc in boundary()) {
        prop_assert!(!check_skc(&sys, &bc) || check_ukc(&sys, &bc));
    }

    #[test]
    fn nonnegative_bv_satisfies_dsdc(sys in system(), bu in 1e-6f64..100.0, bv in 0.0f64..100.0, ratio in 1e-8f64..1e8) {
        let bc = BoundarySpec::homogeneous(bu, bv).unwrap();
        prop_assert!(dsdc_at_ratio(&sys, &bc, ratio));
    }

    #[test]
    fn ratio_above_delta0_implies_dsdc(sys in system(), bc in boundary(), stretch in 1.0f64..100.0) {
        let ratio = default_delta0(&sys, &bc) * stretch;
        prop_assert!(ratio <= 0.0 || dsdc_at_ratio(&sys, &bc, ratio));
    }

    #[test]
    fn f_is_negative_quadratic_form(seed in any::<u64>(), s in sign(), u in -5.0f64..5.0, v in -5.0f64..5.0) {
        let t = ParameterSampler::new(seed).tuple(s);
        let f = evaluate_f([u, v], &t.sys, &t.bc, &t.sat, t.ratio);
        let m = boundary_matrix(&t.sys, &t.bc, &t.sat, t.ratio);
        let scale = 1.0 + m.max_abs_entry() * (u * u + v * v);
        prop_assert!((f + m.quadratic(u, v)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn certificate_bounds_f(seed in any::<u64>(), s in sign(), angle in 0.0f64..std::f64::consts::TAU) {
        let t = ParameterSampler::new(seed).tuple(s);
        let cert = certificate_c(&t.sys, &t.bc, &t.sat, t.ratio, Some(t.delta0)).unwrap();
        prop_assert!(cert.c > 0.0);
        let m = boundary_matrix(&t.sys, &t.bc, &t.sat, t.ratio);
        prop_assert!(m.lambda_max() <= -cert.c + 1e-10);
        let f = evaluate_f([angle.cos(), angle.sin()], &t.sys, &t.bc, &t.sat, t.ratio);
        prop_assert!(f >= cert.c - 1e-12 * (1.0 + m.max_abs_entry()));
    }

    #[test]
    fn lambda_max_matches_direction_scan(seed in any::<u64>(), s in sign()) {
        let t = ParameterSampler::new(seed).tuple(s);
        let min_f = (0..360)
            .map(|k| (k as f64).to_radians())
            .map(|th| evaluate_f([th.cos(), th.sin()], &t.sys, &t.bc, &t.sat, t.ratio))
            .fold(f64::INFINITY, f64::min);
        let lambda = boundary_matrix(&t.sys, &t.bc, &t.sat, t.ratio).lambda_max();
        // a one-degree grid misses the minimum by at most (1 - cos 0.5°)·spread
        let m = boundary_matrix(&t.sys, &t.bc, &t.sat, t.ratio);
        let (lo, hi) = m.eigenvalues();
        let slack = 1e-3 * (lambda.abs() + (hi - lo));
        prop_assert!(min_f >= -lambda - 1e-9 * (1.0 + m.max_abs_entry()));
        prop_assert!((min_f + lambda).abs() <= slack, "{min_f} vs {}", -lambda);
    }

    #[test]
    fn discriminant_matches_trace_determinant(seed in any::<u64>(), s in sign()) {
        let t = ParameterSampler::new(seed).tuple(s);
        let m = boundary_matrix(&t.sys, &t.bc, &t.sat, t.ratio);
        let tr = m.m11 + m.m22;
        let det = m.m11 * m.m22 - m.m12 * m.m12;
        let oracle = tr * tr - 4.0 * det;
        let delta = discriminant_delta(&t.sys, &t.bc, &t.sat, t.ratio);
        prop_assert!((delta - oracle).abs() <= 1e-10 * (tr * tr + 4.0 * det.abs()));
    }

    #[test]
    fn lemmas_hold_on_hypothesis_tuples(seed in any::<u64>()) {
        let mut sampler = ParameterSampler::new(seed);
        for lemma in Lemma::ALL {
            let sign = match lemma {
                Lemma::A1 | Lemma::A3 => BvSign::NonZero,
                Lemma::A2 | Lemma::A6 => BvSign::Positive,
                Lemma::A4 | Lemma::A7 => BvSign::Negative,
                Lemma::A5 => BvSign::Any,
            };
            let t = sampler.tuple(sign);
            prop_assert_eq!(verify_lemma(lemma, &t.sys, &t.bc, &t.sat, t.ratio, Some(t.delta0)), Ok(true));
        }
    }

    #[test]
    fn sbp_identity(s in state(60), a in 0.1f64..100.0, dx in 1e-3f64..0.5) {
        let sys = PhysicalSystem::new(a, 1.0).unwrap();
        let lhs = sbp_inner(&apply_q(&s, &sys, dx), &s.symmetrized(a), dx);
        let [u0, v0] = s.node(0);
        let [uj, vj] = s.node(s.cells());
        let rhs = -a * u0 * v0 + a * uj * vj;
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs() + a * 100.0));
    }

    #[test]
    fn energy_controls_sbp_norm(s in state(60), a in 0.1f64..100.0, dx in 1e-3f64..0.5) {
        let sys = PhysicalSystem::new(a, 1.0).unwrap();
        let norm = sbp_inner(&s, &s, dx);
        prop_assert!(energy(&s, &sys, dx) >= a.min(1.0) * norm * (1.0 - 1e-14));
    }

    #[test]
    fn rhs_is_linear(x in state(30), c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, t in 0.0f64..1.0) {
        let sys = PhysicalSystem::new(4.0, 0.1).unwrap();
        let bc = BoundarySpec::new(1.0, 1.0, BoundaryData::sin2()).unwrap();
        let sat = canonical_sat(&sys, &bc);
        let dx = 2.0 / x.cells() as f64;
        let scheme = Scheme::new(sys, bc, sat, dx);
        let y = State::from_fn(x.cells(), dx, |p| [p.cos(), p * p]);
        let combo = x.scaled(c1).add_scaled(c2, &y);
        let lhs = scheme.with_scaled_data(c1 + c2).semidiscrete_rhs(&combo, t);
        let rhs = scheme
            .semidiscrete_rhs(&x, t)
            .scaled(c1)
            .add_scaled(c2, &scheme.semidiscrete_rhs(&y, t));
        let scale = 1.0 + lhs.max_abs();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * scale);
    }
}

#[test]
fn q_consistency_orders() {
    let sys = PhysicalSystem::new(4.0, 1.0).unwrap();
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for cells in [50usize, 100, 200] {
        let dx = 1.0 / cells as f64;
        let s = State::from_fn(cells, dx, |x| [x.sin(), (2.0 * x).cos()]);
        let q = apply_q(&s, &sys, dx);
        // A·U' = (v', a·u')
        let exact = |x: f64| [-2.0 * (2.0 * x).sin(), 4.0 * x.cos()];
        let err = |j: usize| {
            let e = exact(j as f64 * dx);
            let [qu, qv] = q.node(j);
            (qu - e[0]).abs().max((qv - e[1]).abs())
        };
        interior.push((1..cells).map(err).fold(0.0, f64::max));
        boundary.push(err(0));
    }
    for (errs, expected) in [(interior, 2.0), (boundary, 1.0)] {
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - expected).abs() <= 0.2, "{errs:?}");
        }
    }
}
