use eqtorus::map_builder::build_profiles;
use eqtorus::spectral::{assemble_n2, construct_strict_instance, SlProblem};
use eqtorus::{solve_tau, Execution, MapParams, ModuliPoint};

fn report(a: &str, b: f64, p: u32, q: u32, r: i32) -> eqtorus::spectral::SpectrumReport {
    let pt = ModuliPoint::parse(a, b).unwrap();
    let mp = MapParams::classify(&pt, p, q, r).unwrap();
    let t = solve_tau(&pt, &mp).unwrap();
    assemble_n2(&t, &mp, &pt, Execution::default()).unwrap()
}

#[test]
fn clifford_type_family_has_n2_one() {
    for (a, b) in [("0", 1.2), ("0.3", 1.4), ("1/4", 2.5), ("-0.4", 1.1)] {
        let rep = report(a, b, 1, 1, 0);
        assert_eq!(rep.n2, 1, "a = {a}, b = {b}: {:?}", rep.counts_below_2);
        assert!(rep.equality);
        // λ₁(0) = λ₂(0) = 2 sit exactly at the threshold.
        assert_eq!(rep.counts_below_2[0].at_two, 2);
        assert_eq!(rep.counts_below_2[1].count, 0);
    }
}

#[test]
fn figure_map_meets_the_bound() {
    let rep = report("1/4", 2.1, 2, 3, 0);
    assert_eq!(rep.bound_rhs, 3);
    assert!(rep.sufficient_condition_met);
    assert_eq!(rep.n2, 3, "{:?}", rep.counts_below_2);
    assert!(rep.certificates.iter().all(|c| *c <= 1e-7));
}

#[test]
fn strict_instance_exceeds_the_bound() {
    let inst = construct_strict_instance(Execution::default()).unwrap();
    eprintln!("{inst:?}");
    assert!(inst.t0 > 4.0 * (inst.point.a.powi(2) / inst.point.b.powi(2) + 1.0));
    assert!(inst.point.b > 1.0);
    assert!((inst.m - 1.0 / 6.0).abs() < 1e-10);
    assert!(inst.certified);
    assert!(inst.lambda0_l2.unwrap() < inst.rayleigh_bound + 1e-9);
    let t = solve_tau(&inst.point, &inst.params).unwrap();
    let rep = assemble_n2(&t, &inst.params, &inst.point, Execution::default()).unwrap();
    assert!(!rep.equality && rep.n2 as i64 > rep.bound_rhs, "{} vs {}", rep.n2, rep.bound_rhs);
}

#[test]
fn lowest_eigenvalue_increases_with_mode() {
    let pt = ModuliPoint::parse("1/4", 2.1).unwrap();
    let mp = MapParams::classify(&pt, 2, 3, 0).unwrap();
    let ps = build_profiles(&solve_tau(&pt, &mp).unwrap(), &mp, &pt).unwrap();
    let lows: Vec<f64> = (1..=3)
        .map(|l| {
            let fc = SlProblem::for_map(&ps, l).count_below(20.0, Execution::default()).unwrap();
            fc.below[0]
        })
        .collect();
    assert!(lows.windows(2).all(|w| w[0] < w[1]), "{lows:?}");
}
