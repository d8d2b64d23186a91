//! Truncated energy of the frozen-gradient problem, its minimization by
//! preconditioned descent, and the construction of the positive subsolution.

use serde::{Deserialize, Serialize};

use crate::discretization::{
    for_each_quad_point, mass, norms, signed_power, stiffness, sup_norm, weak_residual,
    BoundaryMode, DiscreteField, Mesh1D, QuadPoint, Tridiagonal, GAUSS_POINTS,
};
use crate::error::{invalid, Error, Result};
use crate::fixed_point::ProblemInstance;
use crate::operator::OperatorSpec;
use crate::reaction::{hypothesis_constants, truncate, ReactionSpec, Singular};

const ARMIJO_C: f64 = 1e-4;
/// Consecutive rejected trial steps before the line search gives up.
const MAX_LINE_SEARCH_FAILURES: usize = 20;
/// Energy changes this small (relative) are treated as round-off.
const ROUNDOFF_ENERGY: f64 = 1e-13;
/// Residual tolerance used for the subsolution solve.
const SUBSOLUTION_TOL: f64 = 1e-10;
const SUBSOLUTION_MAX_ITER: usize = 50_000;
/// Smallest admissible nodal value of the subsolution.
pub const POSITIVITY_MARGIN: f64 = 1e-6;
const MIN_DELTA: f64 = 1e-12;

/// Descent preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    /// p = 2 stiffness plus the boundary (Robin) or mass (Neumann) term; fixed.
    Stiffness,
    /// Stiffness weighted by the operator's curvature `φ'(|u'|)` at the
    /// current iterate; rebuilt every step. Coincides with `Stiffness` for
    /// the Laplacian.
    #[default]
    Curvature,
}

/// Right-hand side entering the energy.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    /// `f̂ + ĝ` truncated at `u_lower`, with `∇w` frozen.
    Truncated {
        reaction: &'a ReactionSpec,
        w: &'a DiscreteField,
        u_lower: &'a DiscreteField,
    },
    /// `min(g, δ)`, used to build the subsolution.
    Capped { g: Singular, delta: f64 },
    /// A given function of `x` only.
    Given(&'a dyn Fn(f64) -> f64),
}

pub struct EnergyContext<'a> {
    pub operator: &'a OperatorSpec,
    pub source: Source<'a>,
    pub beta: f64,
    pub mode: BoundaryMode,
    pub preconditioner: Preconditioner,
    /// Per quadrature point: `u_lower` and `|w'|` (truncated source only).
    frozen: Vec<(f64, f64)>,
}

impl<'a> EnergyContext<'a> {
    pub fn new(
        operator: &'a OperatorSpec,
        source: Source<'a>,
        beta: f64,
        mode: BoundaryMode,
    ) -> Result<Self> {
        operator.validate()?;
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid(format!("beta must be positive, got {beta}")));
        }
        let mut frozen = Vec::new();
        match source {
            Source::Truncated {
                reaction,
                w,
                u_lower,
            } => {
                reaction.validate()?;
                w.same_mesh(u_lower)?;
                if u_lower.min() <= 0.0 {
                    return Err(invalid("u_lower must be strictly positive at every node"));
                }
                for_each_quad_point(u_lower, |qp, _, _| {
                    frozen.push((qp.u, w.gradient(qp.elem).abs()));
                });
            }
            Source::Capped { delta, .. } => {
                if !(delta.is_finite() && delta > 0.0) {
                    return Err(invalid("cap delta must be positive"));
                }
            }
            Source::Given(_) => {}
        }
        Ok(Self {
            operator,
            source,
            beta,
            mode,
            preconditioner: Preconditioner::default(),
            frozen,
        })
    }

    pub fn truncated(
        operator: &'a OperatorSpec,
        reaction: &'a ReactionSpec,
        w: &'a DiscreteField,
        u_lower: &'a DiscreteField,
        beta: f64,
        mode: BoundaryMode,
    ) -> Result<Self> {
        Self::new(
            operator,
            Source::Truncated {
                reaction,
                w,
                u_lower,
            },
            beta,
            mode,
        )
    }

    pub fn with_preconditioner(mut self, preconditioner: Preconditioner) -> Self {
        self.preconditioner = preconditioner;
        self
    }

    /// Source value and its primitive from 0 at a quadrature point.
    fn load(&self, qp: &QuadPoint) -> (f64, f64) {
        let p = self.operator.p();
        match self.source {
            Source::Truncated { reaction, .. } => {
                let (ul, dw) = self.frozen[qp.index];
                let t = truncate(reaction, p, ul, dw, qp.u);
                (t.f_hat + t.g_hat, t.f_prim + t.g_prim)
            }
            Source::Capped { g, delta } => g.capped(delta, qp.u),
            Source::Given(h) => {
                let v = h(qp.x);
                (v, v * qp.u)
            }
        }
    }

    fn check_mesh(&self, u: &DiscreteField) -> Result<()> {
        if let Source::Truncated { u_lower, .. } = self.source {
            u.same_mesh(u_lower)?;
        }
        Ok(())
    }

    /// Weak residual of the same data, assembled through the shared residual routine.
    pub fn residual(&self, u: &DiscreteField) -> Result<Vec<f64>> {
        self.check_mesh(u)?;
        let rhs = |qp: &QuadPoint| self.load(qp).0;
        Ok(weak_residual(u, self.operator, &rhs, self.beta, self.mode))
    }
}

/// `E(u) = ∫G(u') + (β/p)Σ_{ends}|u|^p − ∫(F̂ + Ĝ)(u)` and its nodal gradient.
///
/// Neumann mode replaces the endpoint sum by `(1/p)∫|u|^p`.
pub fn energy_and_gradient(ctx: &EnergyContext<'_>, u: &DiscreteField) -> Result<(f64, Vec<f64>)> {
    ctx.check_mesh(u)?;
    let op = ctx.operator;
    let p = op.p();
    let mesh = u.mesh();
    let n = mesh.n_nodes();
    let mut energy = 0.0;
    let mut grad = vec![0.0; n];
    for e in 0..mesh.n_elements() {
        let du = u.gradient(e);
        energy += mesh.h(e) * op.potential(du.abs())?;
        let flux = op.a_scalar(du);
        grad[e] -= flux;
        grad[e + 1] += flux;
    }
    let neumann = ctx.mode == BoundaryMode::Neumann;
    for_each_quad_point(u, |qp, w, phi| {
        let (mut load, prim) = ctx.load(qp);
        energy -= w * prim;
        if neumann {
            energy += w * qp.u.abs().powf(p) / p;
            load -= signed_power(qp.u, p - 1.0);
        }
        grad[qp.elem] -= w * load * phi[0];
        grad[qp.elem + 1] -= w * load * phi[1];
    });
    if !neumann {
        for i in [0, n - 1] {
            let v = u.values()[i];
            energy += ctx.beta * v.abs().powf(p) / p;
            grad[i] += ctx.beta * signed_power(v, p - 1.0);
        }
    }
    if !energy.is_finite() {
        return Err(Error::NumericFailure {
            what: "energy evaluation".into(),
            achieved: energy,
        });
    }
    Ok((energy, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOutcome {
    pub u: DiscreteField,
    pub energy: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    /// Total number of rejected trial steps.
    pub line_search_failures: usize,
}

fn boundary_matrix(
    ctx: &EnergyContext<'_>,
    mesh: &Mesh1D,
    mut m: Tridiagonal,
    u: Option<&DiscreteField>,
) -> Tridiagonal {
    let n = mesh.n_nodes();
    match ctx.mode {
        BoundaryMode::Robin => {
            for i in [0, n - 1] {
                let weight = match u {
                    Some(u) => {
                        let p = ctx.operator.p();
                        ((p - 1.0) * u.values()[i].abs().max(1e-12).powf(p - 2.0)).clamp(1e-6, 1e6)
                    }
                    None => 1.0,
                };
                m.diag[i] += ctx.beta * weight;
            }
            m
        }
        BoundaryMode::Neumann => {
            let mm = mass(mesh);
            for i in 0..n {
                m.diag[i] += mm.diag[i];
            }
            for i in 0..n - 1 {
                m.lower[i] += mm.lower[i];
                m.upper[i] += mm.upper[i];
            }
            m
        }
    }
}

fn preconditioner_matrix(ctx: &EnergyContext<'_>, u: &DiscreteField) -> Tridiagonal {
    let mesh = u.mesh();
    match ctx.preconditioner {
        Preconditioner::Stiffness => boundary_matrix(ctx, mesh, stiffness(mesh), None),
        Preconditioner::Curvature => {
            let weights: Vec<f64> = (0..mesh.n_elements())
                .map(|e| ctx.operator.flux_derivative(u.gradient(e).abs()))
                .collect();
            let floor = 1e-3 * weights.iter().copied().fold(1.0, f64::max);
            let mut k = Tridiagonal::zeros(mesh.n_nodes());
            for (e, wt) in weights.iter().enumerate() {
                let s = wt.max(floor) / mesh.h(e);
                k.add_element(e, s, -s);
            }
            boundary_matrix(ctx, mesh, k, Some(u))
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned descent with Armijo backtracking until the residual sup
/// drops to `tol_inner`.
pub fn minimize_energy(
    ctx: &EnergyContext<'_>,
    start: &DiscreteField,
    tol_inner: f64,
    max_iter: usize,
) -> Result<MinimizeOutcome> {
    if !(tol_inner > 0.0) {
        return Err(invalid("tol_inner must be positive"));
    }
    let mut u = start.clone();
    let (mut energy, mut grad) = energy_and_gradient(ctx, &u)?;
    let mut precond = preconditioner_matrix(ctx, &u);
    let mut dir: Vec<f64> = precond.solve(&grad)?;
    let mut failures = 0usize;
    let mut total_failures = 0usize;
    let mut step = 1.0f64;
    for it in 0..max_iter {
        let residual_sup = sup_norm(&grad);
        if residual_sup <= tol_inner {
            return Ok(MinimizeOutcome {
                u,
                energy,
                residual_sup,
                iterations: it,
                line_search_failures: total_failures,
            });
        }
        let slope = -dot(&grad, &dir);
        let mut alpha = (2.0 * step).min(1.0);
        let mut accepted = false;
        while !accepted {
            let trial = u.with_values(
                u.values()
                    .iter()
                    .zip(&dir)
                    .map(|(x, d)| x - alpha * d)
                    .collect(),
            );
            let eval = energy_and_gradient(ctx, &trial);
            if let Ok((e_trial, g_trial)) = eval {
                let decrease = e_trial <= energy + ARMIJO_C * alpha * slope;
                let roundoff = (e_trial - energy).abs() <= ROUNDOFF_ENERGY * (1.0 + energy.abs());
                let mut next_dir = None;
                let ok = decrease || {
                    let d = precond.solve(&g_trial)?;
                    let better = dot(&g_trial, &d) < -slope;
                    next_dir = Some(d);
                    roundoff && better
                };
                if ok {
                    u = trial;
                    energy = e_trial;
                    grad = g_trial;
                    if ctx.preconditioner == Preconditioner::Curvature {
                        precond = preconditioner_matrix(ctx, &u);
                        next_dir = None;
                    }
                    dir = match next_dir {
                        Some(d) => d,
                        None => precond.solve(&grad)?,
                    };
                    step = alpha;
                    failures = 0;
                    accepted = true;
                    continue;
                }
            }
            failures += 1;
            total_failures += 1;
            if failures >= MAX_LINE_SEARCH_FAILURES {
                return Err(Error::Stagnation {
                    failures,
                    residual: residual_sup,
                });
            }
            alpha *= 0.5;
        }
    }
    let residual_sup = sup_norm(&grad);
    if residual_sup <= tol_inner {
        return Ok(MinimizeOutcome {
            u,
            energy,
            residual_sup,
            iterations: max_iter,
            line_search_failures: total_failures,
        });
    }
    Err(Error::InnerNonConvergence(Box::new(MinimizeOutcome {
        u,
        energy,
        residual_sup,
        iterations: max_iter,
        line_search_failures: total_failures,
    })))
}

/// Solves the problem with right-hand side `min(g, δ)`, halving `δ` from
/// `delta0` until the solution has sup norm at most one.
pub fn build_subsolution(
    op: &OperatorSpec,
    reaction: &ReactionSpec,
    beta: f64,
    mesh: std::sync::Arc<Mesh1D>,
    mode: BoundaryMode,
    delta0: f64,
    preconditioner: Preconditioner,
) -> Result<(DiscreteField, f64)> {
    reaction.validate()?;
    match reaction.g {
        Singular::Zero | Singular::Constant { c0: 0.0 } => {
            return Err(Error::HypothesisViolation(
                "subsolution needs g(., 1) not identically zero".into(),
            ))
        }
        _ => {}
    }
    if !(delta0.is_finite() && delta0 > 0.0) {
        return Err(invalid("delta0 must be positive"));
    }
    let mut delta = delta0;
    let mut start = DiscreteField::zeros(mesh);
    while delta >= MIN_DELTA {
        let ctx = EnergyContext::new(
            op,
            Source::Capped {
                g: reaction.g,
                delta,
            },
            beta,
            mode,
        )?
        .with_preconditioner(preconditioner);
        let out = minimize_energy(&ctx, &start, SUBSOLUTION_TOL, SUBSOLUTION_MAX_ITER)?;
        if out.u.max() <= 1.0 {
            let min = out.u.min();
            if min < POSITIVITY_MARGIN {
                return Err(Error::DegenerateSubsolution {
                    min,
                    margin: POSITIVITY_MARGIN,
                });
            }
            return Ok((out.u, delta));
        }
        start = out.u.scaled(0.5);
        delta *= 0.5;
    }
    Err(Error::ConstructionFailure(format!(
        "delta fell below {MIN_DELTA:e} before sup <= 1"
    )))
}

/// Nodal residual of the untruncated frozen problem: right-hand side
/// `f(x, u, w') + g(x, u)`. Requires `u > 0` wherever `g` is singular.
pub fn untruncated_residual(
    op: &OperatorSpec,
    reaction: &ReactionSpec,
    beta: f64,
    mode: BoundaryMode,
    u: &DiscreteField,
    w: &DiscreteField,
) -> Result<Vec<f64>> {
    u.same_mesh(w)?;
    let p = op.p();
    let mut bad = None;
    for_each_quad_point(u, |qp, _, _| {
        if reaction.g.is_singular() && qp.u <= 0.0 && bad.is_none() {
            bad = Some(qp.x);
        }
    });
    if let Some(x) = bad {
        return Err(Error::DomainViolation(format!(
            "field not positive at x = {x}"
        )));
    }
    let rhs = |qp: &QuadPoint| {
        reaction.f.eval(p, qp.u, w.gradient(qp.elem).abs()) + reaction.g.eval_unchecked(qp.u)
    };
    Ok(weak_residual(u, op, &rhs, beta, mode))
}

/// Largest gap `|(f̂+ĝ)(u) − (f+g)(u, w')|` over the quadrature points.
pub fn truncation_gap(
    reaction: &ReactionSpec,
    p: f64,
    u: &DiscreteField,
    w: &DiscreteField,
    u_lower: &DiscreteField,
) -> f64 {
    let mut gap: f64 = 0.0;
    for_each_quad_point(u, |qp, _, _| {
        let s = GAUSS_POINTS[qp.index % 3];
        let ul = u_lower.local(qp.elem, s);
        let dw = w.gradient(qp.elem).abs();
        let t = truncate(reaction, p, ul, dw, qp.u);
        let exact = reaction.f.eval(p, qp.u, dw) + reaction.g.eval_unchecked(qp.u);
        gap = gap.max((t.f_hat + t.g_hat - exact).abs());
    });
    gap
}

/// Minimizes `E_w` from `u_lower` and checks the localization properties of
/// the result: `u ≥ u_lower − tol_pos`, `E_w(u) ≤ 0`, and an untruncated
/// residual below `tol_inner`.
pub fn solve_frozen(
    w: &DiscreteField,
    u_lower: &DiscreteField,
    instance: &ProblemInstance,
) -> Result<MinimizeOutcome> {
    let ctx = EnergyContext::truncated(
        &instance.operator,
        &instance.reaction,
        w,
        u_lower,
        instance.beta,
        instance.mode,
    )?
    .with_preconditioner(instance.preconditioner);
    let tol = &instance.tolerances;
    let out = minimize_energy(&ctx, u_lower, tol.inner, instance.max_inner)?;
    let depth = out
        .u
        .values()
        .iter()
        .zip(u_lower.values())
        .map(|(u, l)| l - u)
        .fold(f64::NEG_INFINITY, f64::max);
    if depth > tol.pos {
        return Err(Error::TruncationConsistency { depth });
    }
    if out.energy > ROUNDOFF_ENERGY {
        return Err(Error::InternalConsistency(format!(
            "frozen energy {:e} is positive at the minimizer",
            out.energy
        )));
    }
    let r = untruncated_residual(
        &instance.operator,
        &instance.reaction,
        instance.beta,
        instance.mode,
        &out.u,
        w,
    )?;
    let res = sup_norm(&r);
    if res > tol.inner {
        return Err(Error::InternalConsistency(format!(
            "untruncated residual {res:e} exceeds tol_inner"
        )));
    }
    Ok(out)
}

/// Constants of the coercivity estimate `E_w(u) ≥ (α₁/p)‖u‖ᵖ − α₂(1+‖u‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coercivity {
    pub alpha1: f64,
    pub alpha2: f64,
    /// The constant term `∫(f(u̲,w')+g(u̲))u̲ + ∫g(u̲)`.
    pub k: f64,
}

/// Coercivity constants for the frozen field `w`, with `M = max|w'|`.
pub fn coercivity_constants(
    op: &OperatorSpec,
    reaction: &ReactionSpec,
    c1: f64,
    c2: f64,
    u_lower: &DiscreteField,
    w: &DiscreteField,
) -> Result<Coercivity> {
    u_lower.same_mesh(w)?;
    let p = op.p();
    let m = norms(w, p, 1.0).grad_sup.max(1e-12);
    let gc = hypothesis_constants(reaction, p, m)?;
    let mut k = 0.0;
    for_each_quad_point(u_lower, |qp, wt, _| {
        let f = reaction.f.eval(p, qp.u, w.gradient(qp.elem).abs());
        let g = reaction.g.eval_unchecked(qp.u);
        k += wt * ((f + g) * qp.u + g);
    });
    let omega = u_lower.mesh().length();
    let alpha1 = c1.powf(p) * c2 - gc.d_m - gc.d;
    let alpha2 = ((gc.c_m + gc.c) * omega.powf(1.0 - 1.0 / p)).max(k);
    Ok(Coercivity { alpha1, alpha2, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::Convection;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn unit_mesh(n: usize) -> Arc<Mesh1D> {
        Arc::new(Mesh1D::uniform(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn energy_examples() {
        let op = OperatorSpec::p_laplacian(2.0);
        let zero = |_: f64| 0.0;
        let ctx = EnergyContext::new(&op, Source::Given(&zero), 1.0, BoundaryMode::Robin).unwrap();
        let mesh = unit_mesh(10);
        let (e, _) = energy_and_gradient(&ctx, &DiscreteField::zeros(mesh.clone())).unwrap();
        assert_eq!(e, 0.0);
        let (e, _) = energy_and_gradient(&ctx, &DiscreteField::from_fn(mesh, |x| x)).unwrap();
        assert!((e - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_residual_and_finite_differences() {
        let op = OperatorSpec::p_laplacian(3.0);
        let mesh = unit_mesh(20);
        let reaction = ReactionSpec::new(
            Convection::Affine {
                a: 0.1,
                b: 0.01,
                c: 0.01,
            },
            Singular::PowerSingular {
                lambda: 0.1,
                gamma: 0.5,
            },
        );
        let ul = DiscreteField::from_fn(mesh.clone(), |x| 0.2 + 0.1 * x * (1.0 - x));
        let w = DiscreteField::from_fn(mesh.clone(), |x| (3.0 * x).sin());
        let ctx =
            EnergyContext::truncated(&op, &reaction, &w, &ul, 1.0, BoundaryMode::Robin).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = DiscreteField::from_fn(mesh.clone(), |x| 0.3 * (5.0 * x).cos());
        let (_, g) = energy_and_gradient(&ctx, &u).unwrap();
        let r = ctx.residual(&u).unwrap();
        for (a, b) in g.iter().zip(&r) {
            assert!((a - b).abs() <= 1e-10);
        }
        for _ in 0..20 {
            let d: Vec<f64> = (0..u.values().len())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let h = 1e-6;
            let shift =
                |s: f64| u.with_values(u.values().iter().zip(&d).map(|(x, y)| x + s * y).collect());
            let (ep, _) = energy_and_gradient(&ctx, &shift(h)).unwrap();
            let (em, _) = energy_and_gradient(&ctx, &shift(-h)).unwrap();
            let fd = (ep - em) / (2.0 * h);
            let an = dot(&g, &d);
            assert!(
                (fd - an).abs() <= 1e-6 * an.abs().max(1e-3),
                "fd {fd} vs {an}"
            );
        }
    }

    #[test]
    fn constant_source_matches_closed_form() {
        let op = OperatorSpec::p_laplacian(2.0);
        let one = |_: f64| 1.0;
        let ctx = EnergyContext::new(&op, Source::Given(&one), 1.0, BoundaryMode::Robin).unwrap();
        let mesh = unit_mesh(200);
        let out =
            minimize_energy(&ctx, &DiscreteField::constant(mesh, 0.1), 1e-10, 10_000).unwrap();
        for (x, u) in out.u.mesh().nodes().iter().zip(out.u.values()) {
            assert!((u - (1.0 + x - x * x) / 2.0).abs() <= 1e-4);
        }
    }

    #[test]
    fn zero_source_converges_to_zero() {
        let op = OperatorSpec::p_laplacian(2.0);
        let zero = |_: f64| 0.0;
        let ctx = EnergyContext::new(&op, Source::Given(&zero), 1.0, BoundaryMode::Robin).unwrap();
        let start = DiscreteField::from_fn(unit_mesh(50), |x| (7.0 * x).sin() + 2.0);
        let out = minimize_energy(&ctx, &start, 1e-10, 10_000).unwrap();
        assert!(out.u.values().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn subsolution_examples() {
        let op = OperatorSpec::p_laplacian(2.0);
        let constant = ReactionSpec::new(Convection::Zero, Singular::Constant { c0: 1.0 });
        let (ul, delta) = build_subsolution(
            &op,
            &constant,
            1.0,
            unit_mesh(200),
            BoundaryMode::Robin,
            1.0,
            Preconditioner::Stiffness,
        )
        .unwrap();
        assert_eq!(delta, 1.0);
        assert!((ul.max() - 0.625).abs() < 1e-4 && (ul.min() - 0.5).abs() < 1e-8);
        let singular = ReactionSpec::new(
            Convection::Zero,
            Singular::PowerSingular {
                lambda: 1.0,
                gamma: 0.5,
            },
        );
        let (us, _) = build_subsolution(
            &op,
            &singular,
            1.0,
            unit_mesh(200),
            BoundaryMode::Robin,
            1.0,
            Preconditioner::Stiffness,
        )
        .unwrap();
        assert!(us.max() <= 0.625 + 1e-8);
        let zero = ReactionSpec::new(Convection::Zero, Singular::Zero);
        assert!(build_subsolution(
            &op,
            &zero,
            1.0,
            unit_mesh(20),
            BoundaryMode::Robin,
            1.0,
            Preconditioner::Stiffness
        )
        .is_err());
    }

    #[test]
    fn curvature_preconditioner_solves_p3() {
        let op = OperatorSpec::p_laplacian(3.0);
        let one = |_: f64| 1.0;
        let ctx = EnergyContext::new(&op, Source::Given(&one), 1.0, BoundaryMode::Robin)
            .unwrap()
            .with_preconditioner(Preconditioner::Curvature);
        let out = minimize_energy(
            &ctx,
            &DiscreteField::constant(unit_mesh(100), 0.5),
            1e-9,
            20_000,
        )
        .unwrap();
        assert!(out.residual_sup <= 1e-9);
    }
}
