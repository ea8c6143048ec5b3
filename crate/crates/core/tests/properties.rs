use std::f64::consts::PI;

use eqtorus::elliptic::{complete_e, complete_k, jacobi, EllipticParam};
use eqtorus::functional::xi_functions;
use eqtorus::map_builder::{build_profiles, TorusMap};
use eqtorus::otsuki::{omega_fn, OMEGA_AT_ONE, OMEGA_AT_ZERO};
use eqtorus::stability::jacobi_block;
use eqtorus::{solve_tau, MapParams, ModuliPoint};
use proptest::prelude::*;

fn param(m: f64) -> EllipticParam {
    EllipticParam::new(m).unwrap()
}

/// A feasible nonlimit point for `(p, q, r)`: shear inside `|r + a| < q/2` and
/// `b` above the circle family by `lift`.
fn feasible(a: f64, lift: f64, p: u32, q: u32, r: i32) -> (ModuliPoint, MapParams) {
    let ra = r as f64 + a;
    let b = ((p * p) as f64 - ra * ra).max(0.0).sqrt() + lift;
    let pt = ModuliPoint::new(a, b).unwrap();
    let mp = MapParams::classify(&pt, p, q, r).unwrap();
    (pt, mp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn legendre_relation(m in 0.01f64..0.99) {
        let (k, e) = (complete_k(param(m)).unwrap(), complete_e(param(m)));
        let (k1, e1) = (complete_k(param(1.0 - m)).unwrap(), complete_e(param(1.0 - m)));
        prop_assert!((e * k1 + e1 * k - k * k1 - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn k_is_between_e_and_e_over_mc(m in 0.001f64..0.999) {
        let (k, e) = (complete_k(param(m)).unwrap(), complete_e(param(m)));
        prop_assert!(e < k && k < e / (1.0 - m));
    }

    #[test]
    fn jacobi_identities(u in -20.0f64..20.0, m in 0.0f64..0.999) {
        let j = jacobi(u, param(m));
        prop_assert!((j.sn * j.sn + j.cn * j.cn - 1.0).abs() < 1e-14);
        prop_assert!((j.dn * j.dn + m * j.sn * j.sn - 1.0).abs() < 1e-14);
        prop_assert!((j.am.sin() - j.sn).abs() < 1e-13);
    }

    #[test]
    fn omega_is_decreasing_between_its_limits(m1 in 0.001f64..0.999, m2 in 0.001f64..0.999) {
        prop_assume!((m1 - m2).abs() > 1e-6);
        let (lo, hi) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
        let (w_lo, w_hi) = (omega_fn(param(lo)), omega_fn(param(hi)));
        prop_assert!(w_lo > w_hi);
        prop_assert!(w_hi > OMEGA_AT_ONE && w_lo < OMEGA_AT_ZERO);
    }

    #[test]
    fn xi_exceeds_its_limits(m in 0.02f64..0.98, a in -0.5f64..0.5) {
        let (xi, xi_t) = xi_functions(param(m), a).unwrap();
        prop_assert!(xi > PI * PI, "Ξ = {xi}");
        prop_assert!(xi_t > 2.0, "Ξ̃ = {xi_t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jacobi_block_determinant_and_hermiticity(
        k in -6i64..=6, l in -6i64..=6, phi0 in 0.0f64..PI / 2.0,
        p in 1u32..=5, r in -3i32..=3, a in -0.5f64..0.5, b in 0.3f64..4.0,
    ) {
        prop_assume!(k != 0 || l != 0);
        let pt = ModuliPoint::new(a, b).unwrap();
        let blk = jacobi_block(&pt, p, r, phi0, k, l);
        let kla = k as f64 - l as f64 * a;
        let s = (l * l) as f64 * b * b + kla * kla;
        let scale = blk.det_closed.abs().max(s.powi(3));
        prop_assert!(blk.det_gap() <= 1e-10 * scale, "gap {} at scale {scale}", blk.det_gap());
        prop_assert!(blk.is_hermitian(1e-12 * s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tau_round_trip(a in -0.45f64..0.45, lift in 0.05f64..2.0, case in 0usize..4) {
        let (p, q, r) = [(1, 1, 0), (2, 3, 0), (2, 3, 1), (3, 5, 1)][case];
        let (pt, mp) = feasible(a, lift, p, q, r);
        let tau = solve_tau(&pt, &mp).unwrap();
        prop_assert!(tau.tau1 <= tau.tau2 && tau.tau2 <= 1.0 && 1.0 <= tau.tau3);
        for res in tau.residuals(&pt, &mp).unwrap() {
            prop_assert!(res.abs() <= 1e-9, "residual {res}");
        }
    }

    #[test]
    fn profiles_satisfy_their_first_integrals(a in -0.45f64..0.45, lift in 0.05f64..2.0, y in 0.0f64..1.0, case in 0usize..3) {
        let (p, q, r) = [(1, 1, 0), (2, 3, 1), (3, 5, 1)][case];
        let (pt, mp) = feasible(a, lift, p, q, r);
        let tau = solve_tau(&pt, &mp).unwrap();
        let ps = build_profiles(&tau, &mp, &pt).unwrap();
        let y = y * pt.b;
        let at = ps.at(y);
        let (c2, s2) = (at.cos_phi * at.cos_phi, at.sin_phi * at.sin_phi);
        let density = 0.5 * (at.dphi * at.dphi + at.dtheta * at.dtheta * c2 + (at.dalpha * at.dalpha + 4.0 * PI * PI) * s2);
        prop_assert!((density - ps.rho(y)).abs() <= 1e-9 * ps.rho(y).max(1.0));
        prop_assert!((density - ps.energy_density(0.3, y)).abs() <= 1e-9 * density.max(1.0));
        let reference = ps.at(0.0);
        let c_ref = reference.dtheta * reference.cos_phi * reference.cos_phi;
        let d_ref = reference.dalpha * reference.sin_phi * reference.sin_phi;
        prop_assert!((at.dtheta * c2 - c_ref).abs() <= 1e-9);
        prop_assert!((at.dalpha * s2 - d_ref).abs() <= 1e-9);
        prop_assert!((ps.eval(0.7, y).norm_sqr() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn rational_shear_is_reduced(num in -50i64..50, den in 1i64..50) {
        let pt = ModuliPoint::parse(&format!("{num}/{den}"), 1.0).unwrap();
        let a = pt.a_exact().unwrap();
        prop_assert_eq!(a.num() * den, num * a.den());
        prop_assert!((pt.a - num as f64 / den as f64).abs() < 1e-15);
    }
}
