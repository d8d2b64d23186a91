//! Radial operators `a(ξ) = a₀(|ξ|) ξ`, their potentials, and sampled
//! certification of the structural hypotheses.
//!
//! Every family is represented through the radial flux `φ(t) = t·a₀(t)`.
//! Code paths evaluate `φ` rather than `a₀`, so the `p < 2` families stay
//! finite at `ξ = 0` where `a₀` itself blows up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Gradient magnitudes below this are clamped in second-derivative terms.
pub const CURVATURE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    PLaplacian {
        p: f64,
    },
    PqLaplacian {
        p: f64,
        q: f64,
    },
    PMeanCurvature {
        p: f64,
    },
    /// `a₀` sampled at increasing radii `t`; `omega` holds ω at the same radii.
    Tabulated {
        p: f64,
        t: Vec<f64>,
        a0: Vec<f64>,
        omega: Vec<f64>,
    },
}

/// Constants of the comparison function ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Envelope>,
}

impl OperatorSpec {
    pub fn p_laplacian(p: f64) -> Self {
        Self {
            family: Family::PLaplacian { p },
            envelope: None,
        }
    }

    pub fn pq_laplacian(p: f64, q: f64) -> Self {
        Self {
            family: Family::PqLaplacian { p, q },
            envelope: None,
        }
    }

    pub fn p_mean_curvature(p: f64) -> Self {
        Self {
            family: Family::PMeanCurvature { p },
            envelope: None,
        }
    }

    pub fn tabulated(p: f64, t: Vec<f64>, a0: Vec<f64>, omega: Vec<f64>) -> Self {
        Self {
            family: Family::Tabulated { p, t, a0, omega },
            envelope: None,
        }
    }

    pub fn p(&self) -> f64 {
        match &self.family {
            Family::PLaplacian { p }
            | Family::PqLaplacian { p, .. }
            | Family::PMeanCurvature { p }
            | Family::Tabulated { p, .. } => *p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p.is_finite() && p > 1.0) {
            return Err(invalid(format!(
                "operator exponent p must exceed 1, got {p}"
            )));
        }
        match &self.family {
            Family::PqLaplacian { q, .. } => {
                if !(q.is_finite() && *q > 1.0 && *q < p) {
                    return Err(invalid(format!(
                        "pq_laplacian requires 1 < q < p, got q = {q}"
                    )));
                }
            }
            Family::Tabulated { t, a0, omega, .. } => {
                if t.len() < 2 || t.len() != a0.len() || t.len() != omega.len() {
                    return Err(invalid(
                        "tabulated operator needs matching t, a0, omega tables of length >= 2",
                    ));
                }
                if t[0] <= 0.0 || t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid(
                        "tabulated radii must be positive and strictly increasing",
                    ));
                }
                if a0.iter().chain(omega).any(|v| !v.is_finite() || *v <= 0.0) {
                    return Err(invalid(
                        "tabulated a0 and omega samples must be finite and positive",
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Radial flux `φ(t) = t·a₀(t)` for `t ≥ 0`, with `φ(0) = 0`.
    pub fn flux(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::PLaplacian { p } => t.powf(p - 1.0),
            Family::PqLaplacian { p, q } => t.powf(p - 1.0) + t.powf(q - 1.0),
            Family::PMeanCurvature { p } => t * (1.0 + t * t).powf(0.5 * (p - 2.0)),
            Family::Tabulated { t: knots, a0, .. } => tabulated_flux(knots, a0, t),
        }
    }

    /// Radial derivative `φ'(t)`, with `t` clamped at [`CURVATURE_FLOOR`].
    pub fn flux_derivative(&self, t: f64) -> f64 {
        let t = t.max(CURVATURE_FLOOR);
        match &self.family {
            Family::PLaplacian { p } => (p - 1.0) * t.powf(p - 2.0),
            Family::PqLaplacian { p, q } => {
                (p - 1.0) * t.powf(p - 2.0) + (q - 1.0) * t.powf(q - 2.0)
            }
            Family::PMeanCurvature { p } => {
                let s = 1.0 + t * t;
                s.powf(0.5 * (p - 4.0)) * (1.0 + (p - 1.0) * t * t)
            }
            Family::Tabulated { t: knots, a0, .. } => {
                let h = 1e-7 * t.max(1e-3);
                (tabulated_flux(knots, a0, t + h) - tabulated_flux(knots, a0, (t - h).max(0.0)))
                    / (t + h - (t - h).max(0.0))
            }
        }
    }

    /// Scalar (one-dimensional) operator `a(ξ) = φ(|ξ|) sign ξ`.
    pub fn a_scalar(&self, xi: f64) -> f64 {
        self.flux(xi.abs()).copysign(xi)
    }

    /// `G₀(t) = ∫₀ᵗ s a₀(s) ds`. Closed form for named families, adaptive
    /// Simpson quadrature for tabulated ones.
    pub fn potential(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.family {
            Family::PLaplacian { p } => t.powf(*p) / p,
            Family::PqLaplacian { p, q } => t.powf(*p) / p + t.powf(*q) / q,
            Family::PMeanCurvature { p } => (0.5 * p * (t * t).ln_1p()).exp_m1() / p,
            Family::Tabulated { .. } => {
                return adaptive_simpson(
                    &|s| self.flux(s),
                    0.0,
                    t,
                    1e-12 * (1.0 + self.flux(t) * t),
                    48,
                )
            }
        })
    }

    /// ω(t) for the family, scaled by the envelope's `C₃`.
    pub fn omega(&self, t: f64) -> f64 {
        let c3 = self.envelope().c3;
        match &self.family {
            Family::PLaplacian { p } => c3 * t.powf(p - 1.0),
            // ω must carry the q-branch too, otherwise |Da| ≤ C₅ω/t fails as t → 0.
            Family::PqLaplacian { p, q } => c3 * (t.powf(p - 1.0) + t.powf(q - 1.0)),
            Family::PMeanCurvature { p } => c3 * t * (1.0 + t * t).powf(0.5 * (p - 2.0)),
            Family::Tabulated {
                t: knots, omega, ..
            } => interpolate(knots, omega, t),
        }
    }

    /// Envelope constants: the user-supplied ones if present, otherwise the
    /// closed forms below.
    ///
    /// * p-Laplacian: ω = C₃ t^{p-1}, C₃ = min(1, p-1), C₅ = max(1, p-1)/C₃.
    /// * (p,q)-Laplacian: ω = C₃ (t^{p-1} + t^{q-1}), C₃ = min(1, q-1).
    /// * p-mean curvature: ω = C₃ t (1+t²)^{(p-2)/2}, C₃ = min(1, p-1).
    ///
    /// Tabulated operators without an explicit envelope get C₃ = 1 and a C₅
    /// estimated from the table.
    pub fn envelope(&self) -> Envelope {
        if let Some(env) = self.envelope {
            return env;
        }
        match &self.family {
            Family::PLaplacian { p } => {
                let c3 = (p - 1.0).min(1.0);
                Envelope {
                    c1: p - 1.0,
                    c2: p - 1.0,
                    c3,
                    c4: c3,
                    c5: (p - 1.0).max(1.0) / c3,
                }
            }
            Family::PqLaplacian { p, q } => {
                let c3 = (q - 1.0).min(1.0);
                Envelope {
                    c1: q - 1.0,
                    c2: p - 1.0,
                    c3,
                    c4: 2.0 * c3,
                    c5: (p - 1.0).max(1.0) / c3,
                }
            }
            Family::PMeanCurvature { p } => {
                let c3 = (p - 1.0).min(1.0);
                let lo = (p - 1.0).min(1.0);
                let hi = (p - 1.0).max(1.0);
                Envelope {
                    c1: lo,
                    c2: hi,
                    c3,
                    c4: c3 * 2f64.powf((0.5 * (p - 2.0)).abs()),
                    c5: hi / c3,
                }
            }
            Family::Tabulated { t, a0, omega, .. } => {
                let mut c5: f64 = 1.0;
                for (i, &ti) in t.iter().enumerate() {
                    let da = self.flux_derivative(ti).abs().max(a0[i]);
                    c5 = c5.max(da * ti / omega[i]);
                }
                Envelope {
                    c1: f64::NAN,
                    c2: f64::NAN,
                    c3: 1.0,
                    c4: f64::NAN,
                    c5,
                }
            }
        }
    }

    /// Strong-monotonicity constant of the p = 2 condition
    /// `⟨a(ξ)-a(η), ξ-η⟩ ≥ c₆|ξ-η|²`. `None` when `p ≠ 2`.
    pub fn c6(&self) -> Option<f64> {
        if self.p() != 2.0 {
            return None;
        }
        match &self.family {
            // The q-part of Δ + μΔ_q is monotone and only adds to the quadratic part.
            Family::PLaplacian { .. }
            | Family::PqLaplacian { .. }
            | Family::PMeanCurvature { .. } => Some(1.0),
            Family::Tabulated { t, a0, .. } => {
                let mut slope = a0[0];
                for i in 1..t.len() {
                    let s = (t[i] * a0[i] - t[i - 1] * a0[i - 1]) / (t[i] - t[i - 1]);
                    slope = slope.min(s);
                }
                Some(slope.min(1.0))
            }
        }
    }
}

fn interpolate(knots: &[f64], values: &[f64], t: f64) -> f64 {
    let n = knots.len();
    if t <= knots[0] {
        return values[0];
    }
    if t >= knots[n - 1] {
        return values[n - 1];
    }
    let i = knots.partition_point(|&k| k <= t) - 1;
    let s = (t - knots[i]) / (knots[i + 1] - knots[i]);
    values[i] + s * (values[i + 1] - values[i])
}

/// Piecewise-linear interpolation of `t·a₀(t)`: linear from the origin to the
/// first knot and extrapolated with the last slope past the table.
fn tabulated_flux(knots: &[f64], a0: &[f64], t: f64) -> f64 {
    let n = knots.len();
    let phi = |i: usize| knots[i] * a0[i];
    if t <= knots[0] {
        return phi(0) * t / knots[0];
    }
    if t >= knots[n - 1] {
        let slope = (phi(n - 1) - phi(n - 2)) / (knots[n - 1] - knots[n - 2]);
        return phi(n - 1) + slope * (t - knots[n - 1]);
    }
    let i = knots.partition_point(|&k| k <= t) - 1;
    let s = (t - knots[i]) / (knots[i + 1] - knots[i]);
    phi(i) + s * (phi(i + 1) - phi(i))
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        worst: &mut f64,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let err = (left + right - whole).abs();
        if depth == 0 || err <= 15.0 * tol {
            if depth == 0 {
                *worst = worst.max(err / 15.0);
            }
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let mut worst = 0.0;
    let value = recurse(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        simpson(fa, fm, fb, a, b),
        tol,
        max_depth,
        &mut worst,
    );
    if worst > tol {
        return Err(Error::NumericFailure {
            what: "potential quadrature".into(),
            achieved: worst,
        });
    }
    Ok(value)
}

/// `a(ξ) = a₀(|ξ|) ξ` for a vector argument; zero at `ξ = 0`.
pub fn eval_a(spec: &OperatorSpec, xi: &[f64]) -> Result<Vec<f64>> {
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(invalid("eval_a: non-finite gradient"));
    }
    let t = norm(xi);
    if t == 0.0 {
        return Ok(vec![0.0; xi.len()]);
    }
    let scale = spec.flux(t) / t;
    Ok(xi.iter().map(|v| scale * v).collect())
}

/// `G(ξ) = G₀(|ξ|)`.
pub fn eval_g(spec: &OperatorSpec, xi: &[f64]) -> Result<f64> {
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(invalid("eval_G: non-finite gradient"));
    }
    spec.potential(norm(xi))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A sample at which one of the structural inequalities failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub xi: Vec<f64>,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorConstants {
    pub c2: f64,
    pub envelope_violations: Vec<Violation>,
}

/// Sampling plan for [`validate_ha`].
#[derive(Debug, Clone, Copy)]
pub struct HaSampling {
    pub n_samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub dim: usize,
    pub seed: u64,
}

impl Default for HaSampling {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            t_min: 1e-3,
            t_max: 1e3,
            dim: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub samples: usize,
    pub envelope: Envelope,
    pub monotonicity_violations: Vec<Violation>,
    pub jacobian_violations: Vec<Violation>,
    pub ellipticity_violations: Vec<Violation>,
    /// Largest observed `|Da(ξ)| |ξ| / ω(|ξ|)`.
    pub max_jacobian_ratio: f64,
    /// Smallest observed `⟨Da(ξ)y,y⟩ |ξ| / (ω(|ξ|) |y|²)`.
    pub min_ellipticity_ratio: f64,
}

impl HypothesisReport {
    pub fn violation_count(&self) -> usize {
        self.monotonicity_violations.len()
            + self.jacobian_violations.len()
            + self.ellipticity_violations.len()
    }

    pub fn holds(&self) -> bool {
        self.violation_count() == 0
    }
}

const FD_SLACK: f64 = 1e-6;

/// Central-difference Jacobian of `a` at `ξ`, row-major `dim × dim`.
fn jacobian_fd(spec: &OperatorSpec, xi: &[f64]) -> Vec<f64> {
    let d = xi.len();
    let h = 1e-5 * norm(xi).max(1e-8);
    let mut jac = vec![0.0; d * d];
    let mut plus = xi.to_vec();
    let mut minus = xi.to_vec();
    for j in 0..d {
        plus[j] = xi[j] + h;
        minus[j] = xi[j] - h;
        let ap = eval_a(spec, &plus).expect("finite");
        let am = eval_a(spec, &minus).expect("finite");
        for i in 0..d {
            jac[i * d + j] = (ap[i] - am[i]) / (2.0 * h);
        }
        plus[j] = xi[j];
        minus[j] = xi[j];
    }
    jac
}

/// Spectral norm of a (nearly symmetric) square matrix by power iteration on JᵀJ.
fn spectral_norm(jac: &[f64], d: usize) -> f64 {
    if d == 1 {
        return jac[0].abs();
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut sigma = 0.0;
    for _ in 0..200 {
        let jv: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| jac[i * d + j] * v[j]).sum())
            .collect();
        let jtjv: Vec<f64> = (0..d)
            .map(|j| (0..d).map(|i| jac[i * d + j] * jv[i]).sum())
            .collect();
        let n = norm(&jtjv);
        if n == 0.0 {
            return 0.0;
        }
        let next = n.sqrt();
        v = jtjv.iter().map(|x| x / n).collect();
        if (next - sigma).abs() <= 1e-14 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn log_radius(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Sampled check of the structural hypotheses on `a`: strict monotonicity,
/// the Jacobian bound `|Da(ξ)| ≤ C₅ ω(|ξ|)/|ξ|`, and the ellipticity bound
/// `⟨Da(ξ)y, y⟩ ≥ ω(|ξ|)/|ξ| |y|²`. Violations are returned as data.
pub fn validate_ha(spec: &OperatorSpec, plan: &HaSampling) -> Result<HypothesisReport> {
    spec.validate()?;
    if plan.dim == 0 || !(plan.t_min > 0.0 && plan.t_max > plan.t_min) {
        return Err(invalid("validate_Ha: need dim >= 1 and 0 < t_min < t_max"));
    }
    let env = spec.envelope();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let d = plan.dim;

    let mut monotonicity = Vec::new();
    let mut jacobian = Vec::new();
    let mut ellipticity = Vec::new();
    let mut max_jac: f64 = 0.0;
    let mut min_ell = f64::INFINITY;

    // Ordered radii along one direction catch decreasing segments of t·a₀(t)
    // that independent random pairs would mostly straddle.
    let mut radii: Vec<f64> = (0..plan.n_samples)
        .map(|_| log_radius(&mut rng, plan.t_min, plan.t_max))
        .collect();
    radii.sort_by(f64::total_cmp);
    if let Family::Tabulated { t, .. } = &spec.family {
        radii.extend(
            t.iter()
                .copied()
                .filter(|&k| k >= plan.t_min && k <= plan.t_max),
        );
        radii.sort_by(f64::total_cmp);
    }
    let dir = random_unit(&mut rng, d);
    for w in radii.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let xi: Vec<f64> = dir.iter().map(|c| c * w[1]).collect();
        let eta: Vec<f64> = dir.iter().map(|c| c * w[0]).collect();
        check_pair(spec, &xi, &eta, &mut monotonicity);
    }

    for k in 0..plan.n_samples {
        let t = log_radius(&mut rng, plan.t_min, plan.t_max);
        let xi: Vec<f64> = random_unit(&mut rng, d).iter().map(|c| c * t).collect();
        let t2 = log_radius(&mut rng, plan.t_min, plan.t_max);
        let eta: Vec<f64> = random_unit(&mut rng, d).iter().map(|c| c * t2).collect();
        check_pair(spec, &xi, &eta, &mut monotonicity);

        let jac = jacobian_fd(spec, &xi);
        let scale = spec.omega(t) / t;
        let jnorm = spectral_norm(&jac, d);
        let ratio = jnorm / scale;
        max_jac = max_jac.max(ratio);
        if ratio > env.c5 * (1.0 + FD_SLACK) {
            jacobian.push(Violation {
                check: "jacobian_bound".into(),
                xi: xi.clone(),
                observed: jnorm,
                bound: env.c5 * scale,
            });
        }
        // Alternate random directions with the radial one, where the bound is tightest for p < 2.
        let y = if k % 2 == 0 {
            random_unit(&mut rng, d)
        } else {
            xi.iter().map(|c| c / t).collect()
        };
        let jy: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| jac[i * d + j] * y[j]).sum())
            .collect();
        let quad = dot(&jy, &y);
        let ell = quad / scale;
        min_ell = min_ell.min(ell);
        if ell < 1.0 - FD_SLACK {
            ellipticity.push(Violation {
                check: "ellipticity".into(),
                xi,
                observed: quad,
                bound: scale,
            });
        }
    }

    Ok(HypothesisReport {
        samples: plan.n_samples,
        envelope: env,
        monotonicity_violations: monotonicity,
        jacobian_violations: jacobian,
        ellipticity_violations: ellipticity,
        max_jacobian_ratio: max_jac,
        min_ellipticity_ratio: min_ell,
    })
}

fn check_pair(spec: &OperatorSpec, xi: &[f64], eta: &[f64], out: &mut Vec<Violation>) {
    let diff: Vec<f64> = xi.iter().zip(eta).map(|(a, b)| a - b).collect();
    if norm(&diff) == 0.0 {
        return;
    }
    let a = eval_a(spec, xi).expect("finite");
    let b = eval_a(spec, eta).expect("finite");
    let da: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let value = dot(&da, &diff);
    if value <= 0.0 {
        out.push(Violation {
            check: "strict_monotonicity".into(),
            xi: xi.to_vec(),
            observed: value,
            bound: 0.0,
        });
    }
}

/// Relative amount shaved off the sampled infimum.
const C2_MARGIN: f64 = 1e-4;

/// Largest `c₂ ∈ (0,1)` satisfying, at every sampled radius `t ∈ (0, sample_radius]`,
///
/// `|a| ≤ (1+t^{p-1})/c₂`, `c₂ t^p ≤ ⟨a(ξ),ξ⟩ ≤ (1+t^p)/c₂`, `c₂ t^p ≤ G ≤ (1+t^p)/c₂`.
///
/// The estimate is the infimum of the five ratios over a log-spaced grid,
/// reduced by a small relative margin.
pub fn estimate_c2(
    spec: &OperatorSpec,
    sample_radius: f64,
    n_samples: usize,
) -> Result<OperatorConstants> {
    spec.validate()?;
    if n_samples < 1000 {
        return Err(invalid("estimate_c2 needs at least 1000 samples"));
    }
    if !(sample_radius.is_finite() && sample_radius > 0.0) {
        return Err(invalid("estimate_c2: sample radius must be positive"));
    }
    let p = spec.p();
    let t_min = (1e-3 * sample_radius).min(1e-6);
    let (lo, hi) = (t_min.ln(), sample_radius.ln());
    let mut best = f64::INFINITY;
    for i in 0..n_samples {
        let t = (lo + (hi - lo) * i as f64 / (n_samples - 1) as f64).exp();
        let a = spec.flux(t);
        let inner = a * t;
        let g = spec.potential(t)?;
        let tp = t.powf(p);
        let ratios = [
            (1.0 + t.powf(p - 1.0)) / a,
            inner / tp,
            (1.0 + tp) / inner,
            g / tp,
            (1.0 + tp) / g,
        ];
        for r in ratios {
            if r.is_finite() {
                best = best.min(r);
            }
        }
    }
    let c2 = best.min(1.0) * (1.0 - C2_MARGIN);
    if !(c2 > 1e-12) {
        return Err(Error::HypothesisViolation(format!(
            "no admissible c2 found (sampled infimum {best:e})"
        )));
    }
    let plan = HaSampling {
        n_samples: (n_samples / 10).max(100),
        t_min: t_min.max(1e-6),
        t_max: sample_radius,
        dim: 2,
        seed: 0x5eed,
    };
    let report = validate_ha(spec, &plan)?;
    let mut envelope_violations = report.jacobian_violations;
    envelope_violations.extend(report.ellipticity_violations);
    Ok(OperatorConstants {
        c2,
        envelope_violations,
    })
}
