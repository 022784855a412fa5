mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::Draw;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use sld_core::continuum::{lambda_gamma_coeffs, lambda_gamma_quadrature};
use sld_core::discrete::{cell_t, regular_positions};
use sld_core::scattering::{ensemble_t_closed, ensemble_t_direct, placement_s, t_r_from_t, Response};
use sld_core::schemes::{lambda_beta, two_level_beta, Scheme, SchemeParams};

fn unit8() -> impl Strategy<Value = [f64; 8]> {
    prop::array::uniform8(0.0..1.0f64)
}

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::Lambda), Just(Scheme::DualV)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cells_are_unimodular(u in unit8(), s in scheme()) {
        prop_assert_eq!(common::check_determinant(&Draw::from_unit(u, s)), Ok(()));
    }

    #[test]
    fn eigenvalues_come_in_reciprocal_pairs(u in unit8(), s in scheme()) {
        prop_assert_eq!(common::check_reciprocal_pairs(&Draw::from_unit(u, s)), Ok(()));
    }

    #[test]
    fn ensembles_are_passive(u in unit8(), s in scheme()) {
        prop_assert_eq!(common::check_passivity(&Draw::from_unit(u, s)), Ok(()));
    }

    #[test]
    fn single_mode_transmission_is_reciprocal(u in unit8()) {
        prop_assert_eq!(common::check_reciprocity(&Draw::from_unit(u, Scheme::Lambda)), Ok(()));
    }

    #[test]
    fn atoms_repeat_every_half_wavelength(u in unit8(), s in scheme()) {
        prop_assert_eq!(common::check_shift_invariance(&Draw::from_unit(u, s)), Ok(()));
    }

    #[test]
    fn node_atoms_are_two_level(u in unit8()) {
        let d = Draw::from_unit(u, Scheme::Lambda);
        let z = FRAC_PI_2 - d.params.phi;
        let beta = lambda_beta(&d.params, z, d.delta_c()).unwrap();
        let two = two_level_beta(&d.params, d.delta_c());
        prop_assert!((beta - two).norm() <= 1e-12 * two.norm(), "{} vs {}", beta, two);
    }

    #[test]
    fn gamma_closed_form_matches_quadrature(re in -50.0..0.5f64, im in -5.0..5.0f64) {
        let x = C64::new(re, im);
        let (g0, g1) = lambda_gamma_coeffs(x).unwrap();
        let q0 = lambda_gamma_quadrature(x, 0).unwrap();
        let q1 = lambda_gamma_quadrature(x, 1).unwrap();
        prop_assert!((g0 - q0).norm() <= 1e-8 * (1.0 + g0.norm()), "x={} g0 {} vs {}", x, g0, q0);
        prop_assert!((g1 - q1).norm() <= 1e-8 * (1.0 + g1.norm()), "x={} g1 {} vs {}", x, g1, q1);
    }

    #[test]
    fn closed_form_power_matches_direct(u in unit8(), n in 1u64..20_000) {
        let d = Draw::from_unit(u, Scheme::Lambda);
        let n_u = 2 * (1 + (u[4] * 4.0) as usize);
        let cell = cell_t(&d.params, &regular_positions(n_u).unwrap(), d.delta_c()).unwrap();
        let closed = ensemble_t_closed(&cell, n).unwrap();
        let direct = ensemble_t_direct(&cell, n).unwrap();
        let (a, b) = (t_r_from_t(&closed.matrix).unwrap(), t_r_from_t(&direct).unwrap());
        prop_assume!(closed.closed_form && !a.underflow && !b.underflow);
        let (ta, tb) = (a.t.0[0][0].norm(), b.t.0[0][0].norm());
        prop_assert!((ta - tb).abs() <= 1e-6 * tb, "n={} {} vs {}", n, ta, tb);
    }

    #[test]
    fn scattering_and_transfer_routes_agree(u in unit8()) {
        let d = Draw::from_unit(u, Scheme::Lambda);
        let amp = t_r_from_t(&cell_t(&d.params, &d.placement, d.delta_c()).unwrap()).unwrap();
        let Response::Scalar(s) = placement_s(&d.params, &d.placement, d.delta_c()).unwrap() else {
            unreachable!()
        };
        prop_assert!((s.t_lr - amp.t.0[0][0]).norm() <= 1e-9 * (1.0 + s.t_lr.norm()));
        prop_assert!((s.r_left - amp.r.0[0][0]).norm() <= 1e-9 * (1.0 + s.r_left.norm()));
    }
}

#[test]
fn lossless_cells_keep_unit_modulus_pairs() {
    let p = SchemeParams { gamma_prime: 0.0, gamma_1d: 1.0, ..SchemeParams::default() };
    let cell = cell_t(&p, &regular_positions(4).unwrap(), C64::new(3e-3, 0.0)).unwrap();
    let logs = sld_core::numerics::reciprocal_log_eigenvalues(&cell).unwrap();
    // Either a propagating (|λ| = 1) or an evanescent (λ real up to sign) band.
    let l = logs[0];
    assert!(l.re.abs() < 1e-9 || (l.im.rem_euclid(PI)).min(PI - l.im.rem_euclid(PI)) < 1e-9, "{l}");
}
