//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints its verdict line; the process fails if any gating
//! criterion fails.

use eqtorus::elliptic::EllipticParam;
use eqtorus::functional::{flat_lambda1, functional_value, hopf_derivative_check, moduli_scan, GridSpec, EIGHT_PI};
use eqtorus::otsuki::{conformality_residual, omega_fn, solve_otsuki, OMEGA_AT_ONE, OMEGA_AT_ZERO};
use eqtorus::spectral::{assemble_n2, construct_strict_instance};
use eqtorus::stability::{hersch_second_variation, index_nullity_estimate, jacobi_block, special_phi0_kernel};
use eqtorus::{solve_tau, Execution, MapParams, ModuliPoint, Regime};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn setup(a: &str, b: f64, p: u32, q: u32, r: i32) -> Result<(ModuliPoint, MapParams), String> {
    let pt = ModuliPoint::parse(a, b).map_err(|e| e.to_string())?;
    let mp = MapParams::classify(&pt, p, q, r).map_err(|e| e.to_string())?;
    Ok((pt, mp))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_tau_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    for (a, b, p, q, r, regime) in [
        ("1/4", 2.1, 2, 3, 0, Regime::Nonlimit),
        ("1/4", 1.25, 1, 2, 0, Regime::FirstLimit),
        ("1/2", 2.0, 2, 3, 1, Regime::SecondLimit),
    ] {
        let start = Instant::now();
        let (pt, mp) = setup(a, b, p, q, r)?;
        ensure(mp.regime() == regime, || format!("({a}, {b}, {p},{q},{r}) classified as {:?}", mp.regime()))?;
        let t = solve_tau(&pt, &mp).map_err(|e| e.to_string())?;
        let res = t.residuals(&pt, &mp).map_err(|e| e.to_string())?;
        let err = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        ensure(err <= 1e-9, || format!("({a}, {b}, {p},{q},{r}): residuals {res:?}"))?;
        match regime {
            Regime::FirstLimit => ensure(t.tau1 == 0.0, || format!("τ₁ = {:e}, want exactly 0", t.tau1))?,
            Regime::SecondLimit => ensure(t.tau2 == 1.0, || format!("τ₂ = {}, want exactly 1", t.tau2))?,
            _ => {}
        }
        let el = start.elapsed();
        ensure(el < Duration::from_secs(1), || format!("({a}, {b}, {p},{q},{r}) took {el:?}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max residual {worst:.2e}"))
}

/// Twenty feasible parameter sets across all regimes.
const VALUE_SAMPLE: [(&str, f64, u32, u32, i32); 20] = [
    ("0", 1.2, 1, 1, 0),
    ("0.3", 1.4, 1, 1, 0),
    ("1/2", 1.1, 1, 1, 0),
    ("-0.4", 2.5, 1, 1, 0),
    ("1/4", 2.1, 2, 3, 0),
    ("0", 2.5, 2, 3, 0),
    ("1/2", 2.2, 2, 3, 0),
    ("1/4", 1.25, 1, 2, 0),
    ("0", 1.5, 1, 2, 0),
    ("1/2", 2.0, 2, 3, 1),
    ("1/4", 2.0, 2, 3, 1),
    ("-1/4", 2.2, 2, 3, 1),
    ("1/2", 1.5, 1, 2, 0),
    ("0.2", 3.2, 3, 5, 1),
    ("0.4", 3.0, 3, 4, 1),
    ("0.1", 5.0, 5, 8, 2),
    ("1/2", 2.0, 1, 1, 0),
    ("0.15", 1.05, 1, 1, 0),
    ("1/3", 4.1, 3, 5, 2),
    ("1/2", 2.3, 2, 4, 1),
];

fn c2_closed_form_value() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (a, b, p, q, r) in VALUE_SAMPLE {
        let (pt, mp) = setup(a, b, p, q, r)?;
        let t = solve_tau(&pt, &mp).map_err(|e| e.to_string())?;
        let v = functional_value(&t, &mp, &pt, false, Execution::Sequential).map_err(|e| e.to_string())?;
        ensure(v.relative_gap() <= 1e-8, || {
            format!("({a}, {b}, {p},{q},{r}): {} vs {}", v.lambda_bar, v.lambda_bar_quadrature)
        })?;
        worst = worst.max(v.relative_gap());
    }
    let el = start.elapsed();
    ensure(el < Duration::from_secs(10), || format!("took {el:?}"))?;
    Ok(format!("max relative gap {worst:.2e} over 20 cases"))
}

fn c3_inequality_grid() -> Outcome {
    let start = Instant::now();
    let grid = GridSpec { a_min: 0.0, a_max: 0.5, a_steps: 15, b_min: 1.001, b_max: 3.0, b_steps: 15 };
    let rows = moduli_scan(&grid, 1, 1, 0, false, Execution::default());
    let mut min_slack = f64::INFINITY;
    for row in &rows {
        let v = row.outcome.as_ref().map_err(|e| format!("({}, {}): {e}", row.a, row.b))?;
        let pt = ModuliPoint::new(row.a, row.b).map_err(|e| e.to_string())?;
        let flat = 4.0 * PI * PI / row.b;
        ensure((flat_lambda1(&pt) - flat).abs() <= 1e-12 * flat, || format!("flat value mismatch at ({}, {})", row.a, row.b))?;
        let slack = v.lambda_bar - flat.max(EIGHT_PI);
        min_slack = min_slack.min(slack);
        ensure(slack > 1e-9, || format!("({}, {}): slack {slack:e}", row.a, row.b))?;
    }
    let el = start.elapsed();
    ensure(el < Duration::from_secs(60), || format!("took {el:?}"))?;
    Ok(format!("{} points, min slack {min_slack:.4}", rows.len()))
}

fn c4_spectral_index() -> Outcome {
    let start = Instant::now();
    let mut cert_worst = 0.0f64;
    let clifford = [
        ("0", 1.2),
        ("0.3", 1.4),
        ("1/4", 2.5),
        ("-0.4", 1.1),
        ("1/2", 1.0),
        ("0.1", 1.7),
        ("0.45", 0.95),
        ("0", 3.0),
        ("0.2", 2.0),
        ("1/2", 1.5),
    ];
    for (a, b) in clifford {
        let (pt, mp) = setup(a, b, 1, 1, 0)?;
        let t = solve_tau(&pt, &mp).map_err(|e| e.to_string())?;
        let rep = assemble_n2(&t, &mp, &pt, Execution::default()).map_err(|e| e.to_string())?;
        ensure(rep.n2 == 1, || format!("(1,1,0) at ({a}, {b}): N2 = {}", rep.n2))?;
        cert_worst = rep.certificates.iter().fold(cert_worst, |m, c| m.max(*c));
    }
    let sample = [
        ("1/4", 2.1, 2, 3, 0),
        ("0", 2.5, 2, 3, 0),
        ("1/2", 2.2, 2, 3, 0),
        ("1/2", 2.0, 2, 3, 1),
        ("1/4", 2.0, 2, 3, 1),
        ("-1/4", 2.2, 2, 3, 1),
        ("1/4", 1.25, 1, 2, 0),
        ("0.2", 3.2, 3, 5, 1),
        ("0.4", 3.0, 3, 4, 1),
        ("0.3", 1.2, 1, 1, 0),
    ];
    let mut with_condition = 0;
    for (a, b, p, q, r) in sample {
        let (pt, mp) = setup(a, b, p, q, r)?;
        let t = solve_tau(&pt, &mp).map_err(|e| e.to_string())?;
        let rep = assemble_n2(&t, &mp, &pt, Execution::default()).map_err(|e| e.to_string())?;
        if rep.sufficient_condition_met {
            with_condition += 1;
            ensure(rep.n2 as i64 == rep.bound_rhs, || {
                format!("({a}, {b}, {p},{q},{r}): N2 = {} but bound = {}", rep.n2, rep.bound_rhs)
            })?;
        }
        cert_worst = rep.certificates.iter().fold(cert_worst, |m, c| m.max(*c));
    }
    ensure(cert_worst <= 1e-7, || format!("certificate {cert_worst:e} > 1e-7"))?;
    let el = start.elapsed();
    ensure(el < Duration::from_secs(120), || format!("took {el:?}"))?;
    Ok(format!("N2 = 1 at 10 points; equality at {with_condition}/10 cases with the sufficient condition; worst certificate {cert_worst:.1e}"))
}

fn c5_strict_instance() -> Outcome {
    let start = Instant::now();
    let inst = construct_strict_instance(Execution::default()).map_err(|e| e.to_string())?;
    ensure(inst.certified, || format!("λ₀(2) < 2 not certified: {inst:?}"))?;
    let t = solve_tau(&inst.point, &inst.params).map_err(|e| e.to_string())?;
    let rep = assemble_n2(&t, &inst.params, &inst.point, Execution::default()).map_err(|e| e.to_string())?;
    ensure(!rep.equality && rep.n2 as i64 > rep.bound_rhs, || format!("N2 = {} vs bound {}", rep.n2, rep.bound_rhs))?;
    let el = start.elapsed();
    ensure(el < Duration::from_secs(120), || format!("took {el:?}"))?;
    Ok(format!(
        "(p,q,r) = ({},{},{}), a = {:.5}, b = {:.4}: N2 = {} > bound {}",
        inst.params.p, inst.params.q, inst.params.r, inst.point.a, inst.point.b, rep.n2, rep.bound_rhs
    ))
}

fn c6_monotonicity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for a in [0.05, 0.15, 0.25, 0.35, 0.45] {
        for b in [1.3, 2.0] {
            let rep = hopf_derivative_check(&ModuliPoint::new(a, b).map_err(|e| e.to_string())?, 1e-4).map_err(|e| e.to_string())?;
            ensure(rep.de_da > 0.0 && rep.de_db < 0.0, || format!("({a}, {b}): signs {} {}", rep.de_da, rep.de_db))?;
            let err = rep.rel_err_a().max(rep.rel_err_b());
            ensure(err <= 1e-4, || format!("({a}, {b}): relative error {err:e}: {rep:?}"))?;
            worst = worst.max(err);
        }
    }
    let el = start.elapsed();
    ensure(el < Duration::from_secs(30), || format!("took {el:?}"))?;
    Ok(format!("10 points, max relative error {worst:.1e}"))
}

fn c7_otsuki() -> Outcome {
    let start = Instant::now();
    let o = solve_otsuki(2, 3).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for prof in [o.direct_profiles(), o.profiles(1, 0)] {
        let c = conformality_residual(&prof.map_err(|e| e.to_string())?);
        worst = worst.max(c.max());
    }
    ensure(worst <= 1e-8, || format!("conformality residual {worst:e}"))?;
    let vals: Vec<f64> = (1..1000).map(|i| omega_fn(EllipticParam::new(i as f64 / 1000.0).unwrap())).collect();
    ensure(vals.windows(2).all(|w| w[1] < w[0]), || "Ω not decreasing".into())?;
    let at0 = omega_fn(EllipticParam::new(1e-12).unwrap());
    let at1 = omega_fn(EllipticParam::from_complement(1e-20).unwrap());
    ensure((at0 - OMEGA_AT_ZERO).abs() <= 1e-6 && (at1 - OMEGA_AT_ONE).abs() <= 1e-6, || format!("endpoints {at0} {at1}"))?;
    let el = start.elapsed();
    ensure(el < Duration::from_secs(5), || format!("took {el:?}"))?;
    Ok(format!("m* = {:.12}, b̃ = {:.10}, conformality {worst:.1e}", o.m_star, o.b_t))
}

fn c8_stability() -> Outcome {
    let start = Instant::now();
    let b = (1.0f64 - 0.75 * 0.75).sqrt();
    let pt = ModuliPoint::parse("-1/4", b).map_err(|e| e.to_string())?;
    let (p, q, r) = (1u32, 2u32, 1i32);
    let rep = special_phi0_kernel(&pt, p, r, q).map_err(|e| e.to_string())?;
    for k in [q as i64, -(q as i64)] {
        let blk = jacobi_block(&pt, p, r, rep.phi0, k, 0);
        ensure(blk.det.norm() <= 1e-10, || format!("det J^{{{k},0}} = {}", blk.det))?;
    }
    ensure(rep.block_residual <= 1e-9 && rep.ambient_residual <= 1e-9, || {
        format!("kernel residuals {:e} {:e}", rep.block_residual, rep.ambient_residual)
    })?;
    let h = hersch_second_variation(1.0).map_err(|e| e.to_string())?;
    ensure((h.closed_form - PI * PI / 2.0).abs() <= 1e-9 && h.gap() <= 1e-9, || format!("{h:?}"))?;
    let el = start.elapsed();
    ensure(el < Duration::from_secs(10), || format!("took {el:?}"))?;
    Ok(format!(
        "kernel residual {:.1e}, Hersch quadrature gap {:.1e}, nonintegrable = {}",
        rep.ambient_residual.max(rep.block_residual),
        h.gap(),
        rep.nonintegrable.nonintegrable()
    ))
}

fn c9_index_nullity() -> Outcome {
    let mut found = Vec::new();
    for (a, b) in [(0.0, 1.5), (0.25, 1.2), (0.5, 1.0)] {
        let rep = index_nullity_estimate(&ModuliPoint::new(a, b).map_err(|e| e.to_string())?, Execution::default())
            .map_err(|e| e.to_string())?;
        ensure(rep.index <= 4 && rep.nullity >= 6, || format!("({a}, {b}): ({}, {})", rep.index, rep.nullity))?;
        for w in &rep.warnings {
            println!("    warning at ({a}, {b}): {w}");
        }
        found.push(format!("({}, {})", rep.index, rep.nullity));
    }
    Ok(format!("(index, nullity) = {} (expected (3, 7))", found.join(", ")))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "tau round trip", c1_tau_round_trip),
        (2, "closed-form value", c2_closed_form_value),
        (3, "inequality on a 15x15 grid", c3_inequality_grid),
        (4, "spectral index", c4_spectral_index),
        (5, "strict instance", c5_strict_instance),
        (6, "monotonicity and Hopf derivative", c6_monotonicity),
        (7, "minimal tori", c7_otsuki),
        (8, "Jacobi kernel and Hersch integral", c8_stability),
        (9, "index/nullity (exploratory)", c9_index_nullity),
    ];
    let mut failed = 0;
    for (n, name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} [{name}]: PASS ({secs:.2} s) {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} [{name}]: FAIL ({secs:.2} s) {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
