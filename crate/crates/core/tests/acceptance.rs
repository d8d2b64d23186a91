//! Acceptance suite. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test --test acceptance -- --nocapture --test-threads=1` to see them in order.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robin_convection::discretization::{estimate_c1, norms, BoundaryMode, DiscreteField, Mesh1D};
use robin_convection::fixed_point::{iterate_gamma, prepare, ProblemInstance};
use robin_convection::frozen::{build_subsolution, energy_and_gradient, EnergyContext};
use robin_convection::operator::{estimate_c2, validate_ha, HaSampling, OperatorSpec};
use robin_convection::reaction::{Convection, ReactionSpec, Singular};
use robin_convection::verifier::{
    check_g_only_subsolution, check_sub_super, estimate_chain_replay, lattice_test,
    recursive_bound_test, singular_split, uniqueness_multistart_prepared, InequalityKind,
};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!(
        "{} criterion {id:>2} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn exact(x: f64) -> f64 {
    (1.0 + x - x * x) / 2.0
}

fn constant_source(n: usize) -> ProblemInstance {
    let mut inst = ProblemInstance::new(
        OperatorSpec::p_laplacian(2.0),
        ReactionSpec::new(Convection::Zero, Singular::Constant { c0: 1.0 }),
        1.0,
    );
    inst.n_elements = n;
    inst
}

fn singular_instance(n: usize) -> ProblemInstance {
    let mut inst = ProblemInstance::new(
        OperatorSpec::p_laplacian(2.0),
        ReactionSpec::new(
            Convection::Affine {
                a: 0.1,
                b: 0.01,
                c: 0.01,
            },
            Singular::PowerSingular {
                lambda: 0.1,
                gamma: 0.5,
            },
        ),
        1.0,
    );
    inst.n_elements = n;
    inst
}

/// Max error of the piecewise-linear field against `exact` at nodes and element midpoints.
fn continuum_error(u: &DiscreteField) -> (f64, f64) {
    let nodes = u.mesh().nodes();
    let nodal = nodes
        .iter()
        .zip(u.values())
        .map(|(x, v)| (v - exact(*x)).abs())
        .fold(0.0, f64::max);
    let mid = (0..nodes.len() - 1)
        .map(|e| {
            let x = 0.5 * (nodes[e] + nodes[e + 1]);
            (u.local(e, 0.5) - exact(x)).abs()
        })
        .fold(0.0, f64::max);
    (nodal, nodal.max(mid))
}

/// Least-squares slope of `log err` against `log h`.
fn fitted_order(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn criterion_01_closed_form_robin_oracle() {
    const NODAL_TOL: f64 = 1e-4;
    const ORDER: f64 = 2.0;
    const ORDER_TOL: f64 = 0.2;
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    let mut nodal_200 = f64::NAN;
    for n in [50, 100, 200, 400] {
        let r = iterate_gamma(&constant_source(n)).expect("constant-source solve");
        let (nodal, cont) = continuum_error(&r.solution);
        if n == 200 {
            nodal_200 = nodal;
        }
        hs.push(1.0 / n as f64);
        errs.push(cont);
    }
    let order = fitted_order(&hs, &errs);
    let pass = nodal_200 <= NODAL_TOL && (order - ORDER).abs() <= ORDER_TOL;
    report(
        1,
        "closed-form Robin oracle",
        pass,
        format!("nodal error {nodal_200:.2e} at n=200, order {order:.4}"),
    );
}

#[test]
fn criterion_02_subsolution_construction() {
    const MIN_TOL: f64 = 1e-3;
    const PROBE_TOL: f64 = 1e-8;
    let mut inst = singular_instance(200);
    inst.reaction = ReactionSpec::new(
        Convection::Zero,
        Singular::PowerSingular {
            lambda: 1.0,
            gamma: 0.5,
        },
    );
    let mesh = inst.mesh().unwrap();
    let (ul, delta) = build_subsolution(
        &inst.operator,
        &inst.reaction,
        inst.beta,
        mesh,
        inst.mode,
        inst.delta0,
        inst.preconditioner,
    )
    .unwrap();
    let sub = check_sub_super(&ul, &ul, &inst, InequalityKind::Subsolution).unwrap();
    let w = DiscreteField::from_fn(ul.mesh().clone(), |x| (4.0 * x).sin());
    let sub_w = check_sub_super(&ul, &w, &inst, InequalityKind::Subsolution).unwrap();
    let g_only = check_g_only_subsolution(&ul, &inst).unwrap();
    let worst = sub
        .max_violation
        .max(sub_w.max_violation)
        .max(g_only.max_violation);
    let pass = ul.max() <= 1.0 && ul.min() >= MIN_TOL && worst <= PROBE_TOL;
    report(
        2,
        "subsolution construction",
        pass,
        format!(
            "delta {delta}, sup {:.4}, min {:.4}, worst probe violation {worst:.2e}",
            ul.max(),
            ul.min()
        ),
    );
}

#[test]
fn criterion_03_fixed_point_run() {
    const MAX_OUTER: usize = 50;
    const RESIDUAL_TOL: f64 = 1e-8;
    const POS_TOL: f64 = 1e-10;
    let inst = singular_instance(200);
    let r = iterate_gamma(&inst).expect("singular-convection solve");
    let verdicts_ok = r.verdicts.cond_3_13.holds && r.verdicts.cond_3_14.holds;
    let residual = r.history.last().unwrap().residual;
    let max_norm = r.history.iter().map(|h| h.w1p_norm).fold(0.0, f64::max);
    let pass = verdicts_ok
        && r.converged
        && r.outer_iterations <= MAX_OUTER
        && residual <= RESIDUAL_TOL
        && r.max_dip <= POS_TOL
        && r.bounded_flag
        && max_norm <= r.k_star_bound;
    report(
        3,
        "fixed-point run",
        pass,
        format!(
            "{} outer iterations, residual {residual:.2e}, max dip {:.2e}, max W1p {max_norm:.4} <= K* {:.4}",
            r.outer_iterations, r.max_dip, r.k_star_bound
        ),
    );
}

#[test]
fn criterion_04_operator_constants() {
    const C2_TOL: f64 = 0.005;
    const RADIUS: f64 = 1e6;
    let c2_2 = estimate_c2(&OperatorSpec::p_laplacian(2.0), RADIUS, 20_000)
        .unwrap()
        .c2;
    let c2_3 = estimate_c2(&OperatorSpec::p_laplacian(3.0), RADIUS, 20_000)
        .unwrap()
        .c2;
    let plan = HaSampling {
        n_samples: 10_000,
        ..HaSampling::default()
    };
    let mut violations = 0;
    for op in [
        OperatorSpec::p_laplacian(3.0),
        OperatorSpec::pq_laplacian(3.0, 1.5),
        OperatorSpec::p_mean_curvature(3.0),
    ] {
        violations += validate_ha(&op, &plan).unwrap().violation_count();
    }
    let pass =
        (c2_2 - 0.5).abs() <= C2_TOL && (c2_3 - 1.0 / 3.0).abs() <= C2_TOL && violations == 0;
    report(
        4,
        "operator constants",
        pass,
        format!("c2(p=2) {c2_2:.5}, c2(p=3) {c2_3:.5}, violations {violations}"),
    );
}

#[test]
fn criterion_05_norm_equivalence() {
    const FIELDS: usize = 1000;
    const STABILITY: f64 = 5e-4;
    let mesh = Arc::new(Mesh1D::uniform(0.0, 1.0, 256).unwrap());
    let c1 = estimate_c1(&mesh, 2.0, 1.0).unwrap();
    let c1_fine = estimate_c1(&Mesh1D::uniform(0.0, 1.0, 512).unwrap(), 2.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for i in 0..FIELDS {
        let u = match i % 3 {
            0 => DiscreteField::from_fn(mesh.clone(), |_| rng.gen_range(-1.0..1.0)),
            1 => {
                let (k, a, b) = (
                    rng.gen_range(0.0..20.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                DiscreteField::from_fn(mesh.clone(), |x| a * (k * x).cos() + b)
            }
            _ => {
                let c = rng.gen_range(-2.0..2.0);
                DiscreteField::from_fn(mesh.clone(), |x| c * (1.0 + x * x))
            }
        };
        let nr = norms(&u, 2.0, 1.0);
        if c1 * nr.w1p > nr.beta_norm || nr.beta_norm > nr.w1p / c1 {
            violations += 1;
        }
    }
    let rel = (c1 - c1_fine).abs() / c1;
    let pass = violations == 0 && rel <= STABILITY;
    report(
        5,
        "norm equivalence",
        pass,
        format!("c1 {c1:.6} (n=256), {c1_fine:.6} (n=512), violations {violations}"),
    );
}

#[test]
fn criterion_06_recursion_bound() {
    const DRAWS: usize = 1000;
    const STEPS: usize = 10_000;
    const CONST_TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut unbounded = 0;
    for _ in 0..DRAWS {
        let alpha = rng.gen_range(0.1..10.0);
        let beta = rng.gen_range(0.01..10.0);
        let gamma = rng.gen_range(0.0..alpha);
        let p = 1.0 + rng.gen_range(1e-3..=3.0);
        let a0 = rng.gen_range(1e-3..=100.0);
        let r = recursive_bound_test(alpha, beta, gamma, p, a0, STEPS).unwrap();
        if !r.bounded {
            unbounded += 1;
        }
    }
    let flat = recursive_bound_test(2.0, 1.0, 0.0, 3.0, 7.0, STEPS).unwrap();
    let expected = 0.5f64.sqrt();
    let const_err = (flat.final_value - expected).abs();
    let pass = unbounded == 0 && const_err <= CONST_TOL;
    report(
        6,
        "recursion bound",
        pass,
        format!("{unbounded} unbounded of {DRAWS}, gamma=0 error {const_err:.1e}"),
    );
}

#[test]
fn criterion_07_uniqueness() {
    const STARTS: usize = 10;
    const DIST_TOL: f64 = 1e-6;
    const SPLIT_TOL: f64 = 1e-12;
    let inst = singular_instance(200);
    let prepared = prepare(&inst).unwrap();
    let u = uniqueness_multistart_prepared(&inst, &prepared, STARTS, 7).unwrap();
    let mut chain_ok = true;
    let mut split_ok = true;
    for i in 0..u.solutions.len() {
        for j in i + 1..u.solutions.len() {
            let c = estimate_chain_replay(
                &u.solutions[i],
                &u.solutions[j],
                &prepared,
                inst.beta,
                inst.tolerances.inner,
            )
            .unwrap();
            chain_ok &= c.holds;
            let s = singular_split(&inst.reaction, &u.solutions[i], &u.solutions[j]).unwrap();
            split_ok &= s.identity_error <= SPLIT_TOL && s.max_nonpositive_piece <= SPLIT_TOL;
        }
    }
    let pass = u.verdict.holds && u.max_pairwise_h1 <= DIST_TOL && chain_ok && split_ok;
    report(
        7,
        "uniqueness",
        pass,
        format!(
            "condition margin {:.4}, max pairwise H1 {:.2e}, chain replay {chain_ok}, split {split_ok}",
            u.verdict.margin, u.max_pairwise_h1
        ),
    );
}

#[test]
fn criterion_08_lattice() {
    let mut detail = Vec::new();
    let mut pass = true;
    for n in [100, 200, 400] {
        let inst = constant_source(n);
        let r = iterate_gamma(&inst).unwrap();
        let u = r.solution;
        let v1 = u.scaled(3.0);
        let v2 = DiscreteField::from_fn(u.mesh().clone(), |x| 1.5 - 0.7 * x);
        let v2 = v2.with_values(
            v2.values()
                .iter()
                .zip(u.values())
                .map(|(a, b)| a + b)
                .collect(),
        );
        let crossing = v1.values().iter().zip(v2.values()).any(|(a, b)| a < b)
            && v1.values().iter().zip(v2.values()).any(|(a, b)| a > b);
        let out = lattice_test(&v1, &v2, &u, &inst).unwrap();
        pass &= crossing && out.passed;
        detail.push(format!(
            "n={n}: violation {:.2e} <= {:.2e}",
            out.check.max_violation, out.tolerance
        ));
    }
    report(8, "lattice", pass, detail.join("; "));
}

#[test]
fn criterion_09_energy_gradient_consistency() {
    const FIELDS: usize = 20;
    const DIRECTIONS: usize = 20;
    const REL_TOL: f64 = 1e-6;
    const STEP: f64 = 1e-5;
    let inst = singular_instance(100);
    let prepared = prepare(&inst).unwrap();
    let ul = &prepared.u_lower;
    let mesh = ul.mesh().clone();
    let w = DiscreteField::from_fn(mesh.clone(), |x| 0.3 + 0.2 * (3.0 * x).sin());
    let ctx =
        EnergyContext::truncated(&inst.operator, &inst.reaction, &w, ul, inst.beta, inst.mode)
            .unwrap();
    let (e0, _) = energy_and_gradient(&ctx, &DiscreteField::zeros(mesh.clone())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..FIELDS {
        let u = DiscreteField::from_fn(mesh.clone(), |_| rng.gen_range(-1.0..2.0));
        let (_, g) = energy_and_gradient(&ctx, &u).unwrap();
        for _ in 0..DIRECTIONS {
            let d: Vec<f64> = (0..mesh.n_nodes())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let shift =
                |s: f64| u.with_values(u.values().iter().zip(&d).map(|(a, b)| a + s * b).collect());
            let (ep, _) = energy_and_gradient(&ctx, &shift(STEP)).unwrap();
            let (em, _) = energy_and_gradient(&ctx, &shift(-STEP)).unwrap();
            let fd = (ep - em) / (2.0 * STEP);
            let an: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            worst = worst.max((fd - an).abs() / an.abs());
        }
    }
    let pass = e0 == 0.0 && worst <= REL_TOL;
    report(
        9,
        "energy-gradient consistency",
        pass,
        format!("E(0) = {e0}, worst relative error {worst:.2e}"),
    );
}

#[test]
fn criterion_10_neumann_mode() {
    const TOL: f64 = 1e-6;
    let mut inst = constant_source(200);
    inst.mode = BoundaryMode::Neumann;
    let r = iterate_gamma(&inst).expect("Neumann solve");
    let err = r
        .solution
        .values()
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    report(
        10,
        "Neumann mode",
        err <= TOL,
        format!("max nodal error {err:.2e}"),
    );
}
