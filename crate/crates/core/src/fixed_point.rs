//! Outer Picard iteration `w ↦ Γ(w)` on the frozen-gradient solution map,
//! the a-priori bound monitor, and the multi-start minimal selection.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::{estimate_c1, norms, sup_norm, BoundaryMode, DiscreteField, Mesh1D};
use crate::error::{invalid, Error, Result};
use crate::frozen::{
    build_subsolution, minimize_energy, untruncated_residual, EnergyContext, MinimizeOutcome,
    Preconditioner,
};
use crate::operator::{estimate_c2, validate_ha, HaSampling, HypothesisReport, OperatorSpec};
use crate::reaction::{
    check_small_data_conditions, hypothesis_constants, ConditionVerdicts, GrowthConstants,
    ReactionSpec,
};

/// Radius and sample count used for `c₂`.
pub const C2_RADIUS: f64 = 1e6;
pub const C2_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_inner")]
    pub inner: f64,
    #[serde(default = "default_outer")]
    pub outer: f64,
    #[serde(default = "default_pos")]
    pub pos: f64,
}

fn default_inner() -> f64 {
    1e-8
}
fn default_outer() -> f64 {
    1e-9
}
fn default_pos() -> f64 {
    1e-10
}
fn default_domain() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_n() -> usize {
    200
}
fn default_max_outer() -> usize {
    50
}
fn default_max_inner() -> usize {
    20_000
}
fn one() -> f64 {
    1.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inner: default_inner(),
            outer: default_outer(),
            pos: default_pos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemInstance {
    pub operator: OperatorSpec,
    pub reaction: ReactionSpec,
    pub beta: f64,
    #[serde(default = "default_domain")]
    pub domain: [f64; 2],
    #[serde(default = "default_n")]
    pub n_elements: usize,
    #[serde(default)]
    pub mode: BoundaryMode,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_max_inner")]
    pub max_inner: usize,
    /// Energy level defining the localization set `S(w)`.
    #[serde(default = "one")]
    pub s_level: f64,
    /// Initial cap for the subsolution construction.
    #[serde(default = "one")]
    pub delta0: f64,
    #[serde(default)]
    pub preconditioner: Preconditioner,
    /// Iterate even when the existence conditions fail.
    #[serde(default)]
    pub allow_override: bool,
}

impl ProblemInstance {
    pub fn new(operator: OperatorSpec, reaction: ReactionSpec, beta: f64) -> Self {
        Self {
            operator,
            reaction,
            beta,
            domain: default_domain(),
            n_elements: default_n(),
            mode: BoundaryMode::Robin,
            tolerances: Tolerances::default(),
            max_outer: default_max_outer(),
            max_inner: default_max_inner(),
            s_level: 1.0,
            delta0: 1.0,
            preconditioner: Preconditioner::default(),
            allow_override: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.operator.validate()?;
        self.reaction.validate()?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid("beta must be positive"));
        }
        let t = &self.tolerances;
        if !(t.inner > 0.0 && t.outer > 0.0 && t.pos > 0.0) {
            return Err(invalid("all tolerances must be positive"));
        }
        if !(self.s_level > 0.0) {
            return Err(invalid("s_level must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(invalid("iteration limits must be positive"));
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Arc<Mesh1D>> {
        Ok(Arc::new(Mesh1D::uniform(
            self.domain[0],
            self.domain[1],
            self.n_elements,
        )?))
    }

    pub fn p(&self) -> f64 {
        self.operator.p()
    }
}

/// Everything computed before the outer iteration starts.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub mesh: Arc<Mesh1D>,
    pub c1: f64,
    pub c2: f64,
    pub hypotheses: HypothesisReport,
    pub growth: GrowthConstants,
    pub verdicts: ConditionVerdicts,
    pub u_lower: DiscreteField,
    pub delta: f64,
    pub k_star: f64,
}

/// Norm-equivalence constant for the instance; Neumann mode uses the plain
/// `W^{1,p}` norm, so `c₁ = 1`.
pub fn instance_c1(instance: &ProblemInstance, mesh: &Mesh1D) -> Result<f64> {
    match instance.mode {
        BoundaryMode::Robin => estimate_c1(mesh, instance.p(), instance.beta),
        BoundaryMode::Neumann => Ok(1.0),
    }
}

/// Structural constants and condition verdicts of an instance.
#[derive(Debug, Clone, Serialize)]
pub struct Assessment {
    #[serde(skip)]
    pub mesh: Arc<Mesh1D>,
    pub c1: f64,
    pub c2: f64,
    pub hypotheses: HypothesisReport,
    pub growth: GrowthConstants,
    pub verdicts: ConditionVerdicts,
}

pub fn assess(instance: &ProblemInstance) -> Result<Assessment> {
    instance.validate()?;
    let mesh = instance.mesh()?;
    let p = instance.p();
    let c1 = instance_c1(instance, &mesh)?;
    let c2 = estimate_c2(&instance.operator, C2_RADIUS, C2_SAMPLES)?.c2;
    let hypotheses = validate_ha(&instance.operator, &HaSampling::default())?;
    let growth = hypothesis_constants(&instance.reaction, p, 1.0)?;
    let verdicts = check_small_data_conditions(&growth, c1, c2, instance.operator.c6(), p)?;
    Ok(Assessment {
        mesh,
        c1,
        c2,
        hypotheses,
        growth,
        verdicts,
    })
}

/// Constants, verdicts, subsolution and `K*`. Refuses the instance when the
/// existence conditions fail, unless `allow_override` is set.
pub fn prepare(instance: &ProblemInstance) -> Result<Prepared> {
    let Assessment {
        mesh,
        c1,
        c2,
        hypotheses,
        growth,
        verdicts,
    } = assess(instance)?;
    if !verdicts.existence_holds() && !instance.allow_override {
        return Err(Error::RefusedInstance(format!(
            "existence conditions fail (c4+(2p-1)c5+d = {:.6e} vs {:.6e}; c4+d = {:.6e} vs {:.6e})",
            verdicts.cond_3_13.lhs,
            verdicts.cond_3_13.rhs,
            verdicts.cond_3_14.lhs,
            verdicts.cond_3_14.rhs
        )));
    }
    let (u_lower, delta) = build_subsolution(
        &instance.operator,
        &instance.reaction,
        instance.beta,
        mesh.clone(),
        instance.mode,
        instance.delta0,
        instance.preconditioner,
    )?;
    let k_star = k_star_bound(instance, &growth, c1, c2, &u_lower);
    Ok(Prepared {
        mesh,
        c1,
        c2,
        hypotheses,
        growth,
        verdicts,
        u_lower,
        delta,
        k_star,
    })
}

/// Bound on `‖u‖_{1,p}` over the fixed points: the largest root of
/// `A tᵖ − B t − (K' + s_level) = 0` with
/// `A = (c₁ᵖc₂ − c₄ − (2p−1)c₅ − d)/p`, `B = (c₃ + c)|Ω|^{1/p'}` and
/// `K' = (c₃ + c₄ + c₅/p)|Ω| + 2‖g(εθ)‖_{p'}|Ω|^{1/p}`.
///
/// Infinite when `A ≤ 0`.
pub fn k_star_bound(
    instance: &ProblemInstance,
    gc: &GrowthConstants,
    c1: f64,
    c2: f64,
    u_lower: &DiscreteField,
) -> f64 {
    let p = instance.p();
    let omega = u_lower.mesh().length();
    let r = &instance.reaction;
    let a = (c1.powf(p) * c2 - gc.c4 - (2.0 * p - 1.0) * gc.c5 - gc.d) / p;
    if !(a > 0.0) {
        return f64::INFINITY;
    }
    let eps = 0.5 * (u_lower.min() / r.theta).min(r.epsilon0);
    let g_eps = r.g.eval_unchecked(eps * r.theta);
    let g_norm = g_eps * omega.powf(1.0 - 1.0 / p);
    let b = (gc.c3 + gc.c) * omega.powf(1.0 - 1.0 / p);
    let k_prime = (gc.c3 + gc.c4 + gc.c5 / p) * omega + 2.0 * g_norm * omega.powf(1.0 / p);
    let c = k_prime + instance.s_level;
    let poly = |t: f64| a * t.powf(p) - b * t - c;
    let mut hi = 1.0;
    while poly(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poly(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iter: usize,
    /// Discrete C¹ distance between consecutive iterates.
    pub delta_c1: f64,
    /// `E_{w_k}(w_{k+1})`.
    pub energy: f64,
    pub w1p_norm: f64,
    /// Sup of the untruncated residual with `w = u`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    #[serde(rename = "final")]
    pub solution: DiscreteField,
    pub converged: bool,
    pub outer_iterations: usize,
    pub history: Vec<HistoryEntry>,
    pub k_star_bound: f64,
    pub bounded_flag: bool,
    pub verdicts: ConditionVerdicts,
    pub c1: f64,
    pub c2: f64,
    pub delta_used: f64,
    pub u_lower_min: f64,
    /// Largest `u_lower − u` over the nodes of every iterate.
    pub max_dip: f64,
}

impl SolveReport {
    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv write: {e}"));
        for h in &self.history {
            wtr.serialize(h).map_err(io)?;
        }
        if self.history.is_empty() {
            wtr.write_record(["iter", "delta_c1", "energy", "w1p_norm", "residual"])
                .map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))?;
        Ok(())
    }
}

/// Full residual sup with the gradient source equal to `u`.
pub fn full_residual(instance: &ProblemInstance, u: &DiscreteField) -> Result<f64> {
    let r = untruncated_residual(
        &instance.operator,
        &instance.reaction,
        instance.beta,
        instance.mode,
        u,
        u,
    )?;
    Ok(sup_norm(&r))
}

/// Frozen solve from an arbitrary start, with the same post-checks as
/// [`crate::frozen::solve_frozen`] except the energy sign.
pub fn solve_frozen_from(
    w: &DiscreteField,
    u_lower: &DiscreteField,
    instance: &ProblemInstance,
    start: &DiscreteField,
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
    let out = minimize_energy(&ctx, start, instance.tolerances.inner, instance.max_inner)?;
    let depth = dip(&out.u, u_lower);
    if depth > instance.tolerances.pos {
        return Err(Error::TruncationConsistency { depth });
    }
    Ok(out)
}

fn dip(u: &DiscreteField, u_lower: &DiscreteField) -> f64 {
    u.values()
        .iter()
        .zip(u_lower.values())
        .map(|(u, l)| l - u)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Picard iteration from `w₀ = u_lower`.
pub fn iterate_gamma(instance: &ProblemInstance) -> Result<SolveReport> {
    let prepared = prepare(instance)?;
    let w0 = prepared.u_lower.clone();
    iterate_gamma_from(instance, &prepared, w0)
}

/// Picard iteration `w_{k+1} = solve_frozen(w_k)` from a given `w₀`, stopped
/// when the C¹ surrogate distance drops to `tol_outer` and the full residual
/// to `tol_inner`.
pub fn iterate_gamma_from(
    instance: &ProblemInstance,
    prepared: &Prepared,
    w0: DiscreteField,
) -> Result<SolveReport> {
    let p = instance.p();
    let tol = instance.tolerances;
    let ul = &prepared.u_lower;
    w0.same_mesh(ul)?;
    let mut w = w0;
    let mut history = Vec::new();
    let mut max_dip = f64::NEG_INFINITY;
    let mut converged = false;
    for k in 1..=instance.max_outer {
        let out = crate::frozen::solve_frozen(&w, ul, instance)?;
        let delta_c1 = out.u.c1_distance(&w);
        let residual = full_residual(instance, &out.u)?;
        max_dip = max_dip.max(dip(&out.u, ul));
        history.push(HistoryEntry {
            iter: k,
            delta_c1,
            energy: out.energy,
            w1p_norm: norms(&out.u, p, instance.beta).w1p,
            residual,
        });
        w = out.u;
        if delta_c1 <= tol.outer && residual <= tol.inner {
            converged = true;
            break;
        }
    }
    let bounded_flag = history.iter().all(|h| h.w1p_norm <= prepared.k_star);
    let report = SolveReport {
        solution: w,
        converged,
        outer_iterations: history.len(),
        history,
        k_star_bound: prepared.k_star,
        bounded_flag,
        verdicts: prepared.verdicts,
        c1: prepared.c1,
        c2: prepared.c2,
        delta_used: prepared.delta,
        u_lower_min: ul.min(),
        max_dip,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::OuterNonConvergence(Box::new(report)))
    }
}

/// Result of [`minimal_selection`].
#[derive(Debug, Clone)]
pub struct Selection {
    pub field: DiscreteField,
    pub candidates: Vec<DiscreteField>,
    /// Whether `field ≤ candidate + tol_pos` at every node of every candidate.
    pub below_all: bool,
    /// Largest `field − candidate` over all nodes and candidates.
    pub max_excess: f64,
}

/// Smooth positive bump added to `u_lower` for multi-start runs.
pub fn positive_perturbation(
    base: &DiscreteField,
    rng: &mut ChaCha8Rng,
    amplitude: f64,
) -> DiscreteField {
    let mesh = base.mesh();
    let (xl, len) = (mesh.x_left(), mesh.length());
    let a = rng.gen_range(0.1..1.0) * amplitude;
    let k = rng.gen_range(1..4) as f64;
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let values = mesh
        .nodes()
        .iter()
        .zip(base.values())
        .map(|(&x, &b)| b + a * (1.0 + (k * std::f64::consts::PI * (x - xl) / len + phase).sin()))
        .collect();
    base.with_values(values)
}

/// Multi-start stand-in for `Γ(w) = min S(w)`: solve from `u_lower` and
/// `n_starts − 1` perturbed starts, take the nodal minimum of the solutions,
/// and re-solve from it.
pub fn minimal_selection(
    instance: &ProblemInstance,
    prepared: &Prepared,
    w: &DiscreteField,
    n_starts: usize,
    seed: u64,
) -> Result<Selection> {
    if n_starts == 0 {
        return Err(invalid("minimal_selection needs at least one start"));
    }
    let ul = &prepared.u_lower;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = Vec::with_capacity(n_starts);
    for i in 0..n_starts {
        let start = if i == 0 {
            ul.clone()
        } else {
            positive_perturbation(ul, &mut rng, 0.5)
        };
        candidates.push(solve_frozen_from(w, ul, instance, &start)?.u);
    }
    let mut lowest = candidates[0].clone();
    for c in &candidates[1..] {
        lowest = lowest.nodal_min(c)?;
    }
    let field = solve_frozen_from(w, ul, instance, &lowest)?.u;
    let max_excess = candidates
        .iter()
        .flat_map(|c| field.values().iter().zip(c.values()).map(|(f, c)| f - c))
        .fold(f64::NEG_INFINITY, f64::max);
    let below_all = max_excess <= instance.tolerances.pos;
    Ok(Selection {
        field,
        candidates,
        below_all,
        max_excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::{Convection, Singular};

    fn constant_source() -> ProblemInstance {
        ProblemInstance::new(
            OperatorSpec::p_laplacian(2.0),
            ReactionSpec::new(Convection::Zero, Singular::Constant { c0: 1.0 }),
            1.0,
        )
    }

    #[test]
    fn constant_source_converges_to_closed_form() {
        let report = iterate_gamma(&constant_source()).unwrap();
        assert!(report.outer_iterations <= 2);
        for (x, u) in report
            .solution
            .mesh()
            .nodes()
            .iter()
            .zip(report.solution.values())
        {
            assert!((u - (1.0 + x - x * x) / 2.0).abs() <= 1e-4);
        }
    }

    #[test]
    fn large_c5_is_refused() {
        let mut inst = constant_source();
        inst.reaction.f = Convection::Affine {
            a: 0.1,
            b: 0.0,
            c: 10.0,
        };
        assert!(matches!(
            iterate_gamma(&inst),
            Err(Error::RefusedInstance(_))
        ));
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = constant_source();
        let s = serde_json::to_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&s).unwrap();
        assert_eq!(inst, back);
        let minimal: ProblemInstance = serde_json::from_str(
            r#"{"operator":{"family":"p_laplacian","p":2.0},
                "reaction":{"f":{"family":"zero"},"g":{"family":"constant","c0":1.0}},
                "beta":1.0}"#,
        )
        .unwrap();
        assert_eq!(minimal, inst);
    }

    #[test]
    fn k_star_is_root() {
        let inst = constant_source();
        let prepared = prepare(&inst).unwrap();
        assert!(prepared.k_star.is_finite() && prepared.k_star > 0.0);
    }
}
