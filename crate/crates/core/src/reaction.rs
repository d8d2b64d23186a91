//! Convection term `f(x,s,ξ)`, singular term `g(x,s)`, their truncations at
//! a positive subsolution, growth constants, and the small-data conditions.
//!
//! The built-in families are autonomous in `x`; the `x` arguments are kept
//! so that x-dependent families can be added without changing call sites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::DiscreteField;
use crate::error::{invalid, Error, Result};

/// Convection families. All are nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Convection {
    /// `f = a + b|s|^{p-1} + c|ξ|^{p-1}`.
    Affine {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Same as `Affine` with `|ξ|` replaced by `min(|ξ|, m_sat)`.
    BoundedGradient {
        a: f64,
        b: f64,
        c: f64,
        m_sat: f64,
    },
    Zero,
}

/// Singular families, nonincreasing on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Singular {
    /// `g = λ s^{-γ}` with `λ > 0`, `γ ∈ (0,1)`.
    PowerSingular {
        lambda: f64,
        gamma: f64,
    },
    Constant {
        c0: f64,
    },
    Zero,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionSpec {
    pub f: Convection,
    pub g: Singular,
    /// Constant positivity witness θ for the integrability condition on `g`.
    #[serde(default = "one")]
    pub theta: f64,
    #[serde(default = "one")]
    pub epsilon0: f64,
}

impl ReactionSpec {
    pub fn new(f: Convection, g: Singular) -> Self {
        Self {
            f,
            g,
            theta: 1.0,
            epsilon0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64, name: &str| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )))
            }
        };
        match self.f {
            Convection::Affine { a, b, c } => {
                nonneg(a, "f.a")?;
                nonneg(b, "f.b")?;
                nonneg(c, "f.c")?;
            }
            Convection::BoundedGradient { a, b, c, m_sat } => {
                nonneg(a, "f.a")?;
                nonneg(b, "f.b")?;
                nonneg(c, "f.c")?;
                if !(m_sat.is_finite() && m_sat > 0.0) {
                    return Err(invalid("f.m_sat must be positive"));
                }
            }
            Convection::Zero => {}
        }
        match self.g {
            Singular::PowerSingular { lambda, gamma } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(invalid("g.lambda must be positive"));
                }
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(invalid("g.gamma must lie in (0, 1)"));
                }
            }
            Singular::Constant { c0 } => nonneg(c0, "g.c0")?,
            Singular::Zero => {}
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(invalid("theta must be positive"));
        }
        if !(self.epsilon0.is_finite() && self.epsilon0 > 0.0) {
            return Err(invalid("epsilon0 must be positive"));
        }
        Ok(())
    }
}

impl Convection {
    /// Part of `f` independent of `s`: `a + c·|ξ|^{p-1}` (saturated if bounded).
    fn gradient_part(&self, p: f64, xi_abs: f64) -> f64 {
        match *self {
            Convection::Affine { a, c, .. } => a + c * xi_abs.powf(p - 1.0),
            Convection::BoundedGradient { a, c, m_sat, .. } => {
                a + c * xi_abs.min(m_sat).powf(p - 1.0)
            }
            Convection::Zero => 0.0,
        }
    }

    fn s_coefficient(&self) -> f64 {
        match *self {
            Convection::Affine { b, .. } | Convection::BoundedGradient { b, .. } => b,
            Convection::Zero => 0.0,
        }
    }

    pub fn eval(&self, p: f64, s: f64, xi_abs: f64) -> f64 {
        self.gradient_part(p, xi_abs) + self.s_coefficient() * s.abs().powf(p - 1.0)
    }
}

impl Singular {
    pub fn is_singular(&self) -> bool {
        matches!(self, Singular::PowerSingular { .. })
    }

    /// `g(s)`; only meaningful for `s > 0` when singular.
    pub fn eval_unchecked(&self, s: f64) -> f64 {
        match *self {
            Singular::PowerSingular { lambda, gamma } => lambda * s.powf(-gamma),
            Singular::Constant { c0 } => c0,
            Singular::Zero => 0.0,
        }
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        if self.is_singular() && !(s > 0.0) {
            return Err(Error::DomainViolation(format!(
                "singular term evaluated at s = {s}"
            )));
        }
        Ok(self.eval_unchecked(s))
    }

    /// `∫_{lo}^{hi} g(t) dt` for `0 < lo ≤ hi` (or any range for nonsingular g).
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            Singular::PowerSingular { lambda, gamma } => {
                lambda * (hi.powf(1.0 - gamma) - lo.powf(1.0 - gamma)) / (1.0 - gamma)
            }
            Singular::Constant { c0 } => c0 * (hi - lo),
            Singular::Zero => 0.0,
        }
    }

    /// The capped term `min(g(s), δ)` with its primitive from 0, extended to
    /// `s ≤ 0` by its limit at `0⁺`.
    pub fn capped(&self, delta: f64, s: f64) -> (f64, f64) {
        match *self {
            Singular::PowerSingular { lambda, gamma } => {
                let knee = (lambda / delta).powf(1.0 / gamma);
                if s <= knee {
                    (delta, delta * s)
                } else {
                    (
                        lambda * s.powf(-gamma),
                        delta * knee + self.integral(knee, s),
                    )
                }
            }
            Singular::Constant { c0 } => {
                let m = c0.min(delta);
                (m, m * s)
            }
            Singular::Zero => (0.0, 0.0),
        }
    }
}

/// `(f(x,s,ξ), g(x,s))`.
pub fn eval_reactions(
    spec: &ReactionSpec,
    p: f64,
    _x: f64,
    s: f64,
    xi: &[f64],
) -> Result<(f64, f64)> {
    if !s.is_finite() || xi.iter().any(|v| !v.is_finite()) {
        return Err(invalid("eval_reactions: non-finite argument"));
    }
    let xi_abs = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let g = spec.g.eval(s)?;
    Ok((spec.f.eval(p, s, xi_abs), g))
}

/// Truncated reactions `f̂, ĝ` and their primitives `F̂, Ĝ` (from 0) at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncated {
    pub f_hat: f64,
    pub g_hat: f64,
    pub f_prim: f64,
    pub g_prim: f64,
}

/// Truncation at a point where the subsolution equals `u_lower > 0` and the
/// frozen gradient has magnitude `dw_abs`: below `u_lower` both terms are
/// frozen at their value on the subsolution.
pub fn truncate(spec: &ReactionSpec, p: f64, u_lower: f64, dw_abs: f64, s: f64) -> Truncated {
    let base_f = spec.f.gradient_part(p, dw_abs);
    let b = spec.f.s_coefficient();
    let f_low = base_f + b * u_lower.powf(p - 1.0);
    let g_low = spec.g.eval_unchecked(u_lower);
    if s <= u_lower {
        Truncated {
            f_hat: f_low,
            g_hat: g_low,
            f_prim: f_low * s,
            g_prim: g_low * s,
        }
    } else {
        Truncated {
            f_hat: base_f + b * s.powf(p - 1.0),
            g_hat: spec.g.eval_unchecked(s),
            f_prim: f_low * u_lower
                + base_f * (s - u_lower)
                + b * (s.powf(p) - u_lower.powf(p)) / p,
            g_prim: g_low * u_lower + spec.g.integral(u_lower, s),
        }
    }
}

/// Field version of [`truncate`]: evaluates `u_lower(x)` and `∇w(x)`.
pub fn truncated_reactions(
    spec: &ReactionSpec,
    p: f64,
    u_lower: &DiscreteField,
    w: &DiscreteField,
    x: f64,
    s: f64,
) -> Result<Truncated> {
    let ul = u_lower.value_at(x)?;
    if !(ul > 0.0) {
        return Err(Error::DomainViolation(format!(
            "subsolution not positive at x = {x}"
        )));
    }
    let dw = w.gradient_at(x)?;
    Ok(truncate(spec, p, ul, dw.abs(), s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    /// Gradient bound the `c_M, d_M` pair refers to.
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "cM")]
    pub c_m: f64,
    #[serde(rename = "dM")]
    pub d_m: f64,
    pub c: f64,
    pub d: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    /// One-sided Lipschitz constant of `f` in `s` (p = 2 only).
    pub c7: Option<f64>,
    /// Lipschitz constant of `f` in `ξ` (p = 2 only).
    pub c8: Option<f64>,
    /// One-sided Lipschitz constant of `g` on `[1, ∞)`.
    pub c9: Option<f64>,
}

const ENVELOPE_SAMPLES: usize = 10_000;

/// Tightest closed-form envelope constants of the families, checked on
/// random samples.
pub fn hypothesis_constants(spec: &ReactionSpec, p: f64, m: f64) -> Result<GrowthConstants> {
    spec.validate()?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid("hypothesis_constants needs M > 0"));
    }
    if !(p > 1.0) {
        return Err(invalid("hypothesis_constants needs p > 1"));
    }
    let (c_m, d_m, c3, c4, c5) = match spec.f {
        Convection::Affine { a, b, c } => (a + c * m.powf(p - 1.0), b, a, b, c),
        Convection::BoundedGradient { a, b, c, m_sat } => (
            a + c * m.min(m_sat).powf(p - 1.0),
            b,
            a + c * m_sat.powf(p - 1.0),
            b,
            0.0,
        ),
        Convection::Zero => (0.0, 0.0, 0.0, 0.0, 0.0),
    };
    let (c, d) = match spec.g {
        Singular::PowerSingular { lambda, .. } => (lambda, 0.0),
        Singular::Constant { c0 } => (c0, 0.0),
        Singular::Zero => (0.0, 0.0),
    };
    let quadratic = p == 2.0;
    let (b, cf) = match spec.f {
        Convection::Affine { b, c, .. } | Convection::BoundedGradient { b, c, .. } => (b, c),
        Convection::Zero => (0.0, 0.0),
    };
    let c7 = if quadratic || b == 0.0 { Some(b) } else { None };
    let c8 = if quadratic || cf == 0.0 {
        Some(cf)
    } else {
        None
    };
    // Every built-in g is nonincreasing, so [g(s)-g(t)](s-t) ≤ 0.
    let c9 = Some(0.0);
    let gc = GrowthConstants {
        m,
        c_m,
        d_m,
        c,
        d,
        c3,
        c4,
        c5,
        c7,
        c8,
        c9,
    };
    check_envelopes(spec, p, &gc)?;
    Ok(gc)
}

fn check_envelopes(spec: &ReactionSpec, p: f64, gc: &GrowthConstants) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let slack = |bound: f64| 1e-12 * (1.0 + bound.abs());
    let fail = |what: &str, at: String| {
        Err(Error::InternalConsistency(format!(
            "{what} envelope violated at {at}"
        )))
    };
    for _ in 0..ENVELOPE_SAMPLES {
        let s: f64 = rng.gen_range(-50.0..50.0);
        let t: f64 = rng.gen_range(-50.0..50.0);
        let xi: f64 = rng.gen_range(0.0..=gc.m);
        let eta: f64 = rng.gen_range(0.0..=100.0);
        let f = spec.f.eval(p, s, xi);
        let bound = gc.c_m + gc.d_m * s.abs().powf(p - 1.0);
        if f > bound + slack(bound) {
            return fail("growth of f", format!("s={s}, |xi|={xi}"));
        }
        let bound = gc.c3 + gc.c4 * s.abs().powf(p - 1.0) + gc.c5 * eta.powf(p - 1.0);
        let f_eta = spec.f.eval(p, s, eta);
        if f_eta > bound + slack(bound) {
            return fail("H'(f)", format!("s={s}, |xi|={eta}"));
        }
        if let Some(c7) = gc.c7 {
            let lhs = (spec.f.eval(p, s, eta) - spec.f.eval(p, t, eta)) * (s - t);
            let rhs = c7 * (s - t).powi(2);
            if lhs > rhs + slack(rhs + lhs.abs()) {
                return fail("one-sided Lipschitz in s", format!("s={s}, t={t}"));
            }
        }
        if let Some(c8) = gc.c8 {
            let lhs = (spec.f.eval(p, t, eta) - spec.f.eval(p, t, xi)).abs();
            let rhs = c8 * (eta - xi).abs();
            if lhs > rhs + slack(rhs + lhs) {
                return fail("Lipschitz in gradient", format!("|xi|={xi}, |eta|={eta}"));
            }
        }
        let sg = rng.gen_range(1.0..100.0f64);
        let tg = rng.gen_range(1.0..100.0f64);
        let g = spec.g.eval_unchecked(sg);
        let bound = gc.c + gc.d * sg.powf(p - 1.0);
        if g > bound + slack(bound) {
            return fail("growth of g", format!("s={sg}"));
        }
        if let Some(c9) = gc.c9 {
            let lhs = (g - spec.g.eval_unchecked(tg)) * (sg - tg);
            let rhs = c9 * (sg - tg).powi(2);
            if lhs > rhs + slack(rhs + lhs.abs()) {
                return fail("one-sided Lipschitz of g", format!("s={sg}, t={tg}"));
            }
        }
        if g > spec.g.eval_unchecked(1.0) + slack(g) {
            return fail("g(s) <= g(1)", format!("s={sg}"));
        }
    }
    Ok(())
}

/// One inequality `lhs < rhs` of the small-data family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// False when the inequality is not meaningful for this instance
    /// (uniqueness outside p = 2); `holds` is then false as well.
    pub applicable: bool,
}

impl Verdict {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            holds: lhs < rhs,
            lhs,
            rhs,
            margin: rhs - lhs,
            applicable: true,
        }
    }

    fn not_applicable() -> Self {
        Self {
            holds: false,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            applicable: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdicts {
    /// `d_M + d < c₁ᵖ c₂` (coercivity).
    pub cond_3_4: Verdict,
    /// `d_M + d < c₁ᵖ c₂ / p` (lower semicontinuity of the solution set map).
    pub cond_3_9: Verdict,
    /// `c₄ + (2p-1)c₅ + d < c₁ᵖ c₂` (a-priori bound).
    pub cond_3_13: Verdict,
    /// `c₄ + d < c₁ᵖ c₂ / p`.
    pub cond_3_14: Verdict,
    /// `c₇ + c₁c₈ + c₉ < c₁² c₆` (uniqueness, p = 2).
    pub cond_4: Verdict,
}

impl ConditionVerdicts {
    /// The pair gating the fixed-point iteration.
    pub fn existence_holds(&self) -> bool {
        self.cond_3_13.holds && self.cond_3_14.holds
    }
}

pub fn check_small_data_conditions(
    gc: &GrowthConstants,
    c1: f64,
    c2: f64,
    c6: Option<f64>,
    p: f64,
) -> Result<ConditionVerdicts> {
    if !(c1 > 0.0 && c1 <= 1.0) || !(c2 > 0.0 && c2 < 1.0) || !(p > 1.0) {
        return Err(invalid(format!(
            "conditions need c1 in (0,1], c2 in (0,1), p > 1 (got {c1}, {c2}, {p})"
        )));
    }
    let base = c1.powf(p) * c2;
    let cond_4 = match (p == 2.0, c6, gc.c7, gc.c8, gc.c9) {
        (true, Some(c6), Some(c7), Some(c8), Some(c9)) => {
            Verdict::new(c7 + c1 * c8 + c9, c1 * c1 * c6)
        }
        _ => Verdict::not_applicable(),
    };
    Ok(ConditionVerdicts {
        cond_3_4: Verdict::new(gc.d_m + gc.d, base),
        cond_3_9: Verdict::new(gc.d_m + gc.d, base / p),
        cond_3_13: Verdict::new(gc.c4 + (2.0 * p - 1.0) * gc.c5 + gc.d, base),
        cond_3_14: Verdict::new(gc.c4 + gc.d, base / p),
        cond_4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(a: f64, b: f64, c: f64) -> Convection {
        Convection::Affine { a, b, c }
    }

    #[test]
    fn reaction_examples() {
        let spec = ReactionSpec::new(
            affine(1.0, 0.1, 0.1),
            Singular::PowerSingular {
                lambda: 1.0,
                gamma: 0.5,
            },
        );
        let (f, g) = eval_reactions(&spec, 2.0, 0.0, 2.0, &[3.0]).unwrap();
        assert!((f - 1.5).abs() < 1e-14);
        assert!((g - 0.5f64.sqrt()).abs() < 1e-14);
        let (_, g) = eval_reactions(&spec, 2.0, 0.0, 0.25, &[0.0]).unwrap();
        assert!((g - 2.0).abs() < 1e-14);
        let (_, g) = eval_reactions(&spec, 2.0, 0.0, 4.0, &[0.0]).unwrap();
        assert!((g - 0.5).abs() < 1e-14 && g <= 1.0);
        assert!(matches!(
            eval_reactions(&spec, 2.0, 0.0, 0.0, &[0.0]),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn truncation_freezes_below_subsolution() {
        let spec = ReactionSpec::new(
            Convection::Zero,
            Singular::PowerSingular {
                lambda: 1.0,
                gamma: 0.5,
            },
        );
        let t = truncate(&spec, 2.0, 0.25, 0.0, -3.0);
        assert_eq!(t.g_hat, 2.0);
        let at = truncate(&spec, 2.0, 0.25, 0.0, 0.25);
        assert_eq!(at.g_hat, spec.g.eval_unchecked(0.25));
        let zero = truncate(&spec, 2.0, 0.25, 0.0, 0.0);
        assert_eq!((zero.f_prim, zero.g_prim), (0.0, 0.0));
    }

    #[test]
    fn primitives_are_antiderivatives() {
        let spec = ReactionSpec::new(
            affine(0.3, 0.2, 0.1),
            Singular::PowerSingular {
                lambda: 0.7,
                gamma: 0.4,
            },
        );
        for p in [1.5, 2.0, 3.0] {
            for s in [-1.0, 0.05, 0.4, 0.9, 2.5] {
                let h = 1e-6;
                let hi = truncate(&spec, p, 0.3, 1.7, s + h);
                let lo = truncate(&spec, p, 0.3, 1.7, s - h);
                let mid = truncate(&spec, p, 0.3, 1.7, s);
                let df = (hi.f_prim - lo.f_prim) / (2.0 * h);
                let dg = (hi.g_prim - lo.g_prim) / (2.0 * h);
                assert!(
                    (df - mid.f_hat).abs() < 1e-6 * (1.0 + mid.f_hat),
                    "p={p} s={s}"
                );
                assert!(
                    (dg - mid.g_hat).abs() < 1e-6 * (1.0 + mid.g_hat),
                    "p={p} s={s}"
                );
            }
        }
    }

    #[test]
    fn capped_term_primitive() {
        let g = Singular::PowerSingular {
            lambda: 0.1,
            gamma: 0.5,
        };
        for s in [-0.5, 0.005, 0.02, 0.2, 3.0] {
            let h = 1e-7;
            let d = (g.capped(1.0, s + h).1 - g.capped(1.0, s - h).1) / (2.0 * h);
            assert!((d - g.capped(1.0, s).0).abs() < 1e-6);
            assert!(g.capped(1.0, s).0 <= 1.0);
        }
    }

    #[test]
    fn growth_constant_examples() {
        let spec = ReactionSpec::new(
            affine(1.0, 0.1, 0.1),
            Singular::PowerSingular {
                lambda: 2.0,
                gamma: 0.5,
            },
        );
        let gc = hypothesis_constants(&spec, 2.0, 4.0).unwrap();
        assert!((gc.c_m - 1.4).abs() < 1e-14);
        assert_eq!(gc.d_m, 0.1);
        assert_eq!((gc.c, gc.d), (2.0, 0.0));
        let zero = ReactionSpec::new(Convection::Zero, Singular::Constant { c0: 1.0 });
        let gc = hypothesis_constants(&zero, 3.0, 2.0).unwrap();
        assert_eq!(
            (gc.c_m, gc.d_m, gc.c3, gc.c4, gc.c5),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn bounded_gradient_saturates() {
        let spec = ReactionSpec::new(
            Convection::BoundedGradient {
                a: 1.0,
                b: 0.0,
                c: 0.5,
                m_sat: 2.0,
            },
            Singular::Constant { c0: 1.0 },
        );
        let gc = hypothesis_constants(&spec, 2.0, 10.0).unwrap();
        assert!((gc.c_m - 2.0).abs() < 1e-14);
        assert_eq!(gc.c5, 0.0);
    }

    #[test]
    fn condition_examples() {
        let gc = GrowthConstants {
            m: 1.0,
            c_m: 0.0,
            d_m: 0.01,
            c: 0.0,
            d: 0.0,
            c3: 0.0,
            c4: 0.01,
            c5: 0.01,
            c7: Some(0.2),
            c8: Some(0.2),
            c9: Some(0.2),
        };
        let v = check_small_data_conditions(&gc, 0.5, 0.5, Some(1.0), 2.0).unwrap();
        assert!((v.cond_3_13.lhs - 0.04).abs() < 1e-15 && (v.cond_3_13.rhs - 0.125).abs() < 1e-15);
        assert!(v.cond_3_13.holds);
        assert!((v.cond_3_14.lhs - 0.01).abs() < 1e-15 && (v.cond_3_14.rhs - 0.0625).abs() < 1e-15);
        assert!(v.cond_3_14.holds);
        assert!((v.cond_4.lhs - 0.5).abs() < 1e-15 && (v.cond_4.rhs - 0.25).abs() < 1e-15);
        assert!(!v.cond_4.holds);
        let v3 = check_small_data_conditions(&gc, 0.5, 0.5, None, 3.0).unwrap();
        assert!(!v3.cond_4.applicable);
    }

    #[test]
    fn json_shape() {
        let spec: ReactionSpec = serde_json::from_str(
            r#"{"f":{"family":"affine","a":1.0,"b":0.1,"c":0.1},"g":{"family":"power_singular","lambda":1.0,"gamma":0.5}}"#,
        )
        .unwrap();
        assert_eq!(
            spec,
            ReactionSpec::new(
                affine(1.0, 0.1, 0.1),
                Singular::PowerSingular {
                    lambda: 1.0,
                    gamma: 0.5
                }
            )
        );
    }
}
