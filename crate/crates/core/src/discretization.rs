//! Piecewise-linear finite elements on an interval.
//!
//! The boundary of `(x_l, x_r)` is the two endpoints with counting measure,
//! so boundary integrals are plain sums of endpoint values. Volume integrals
//! use three-point Gauss–Legendre quadrature on every element, which is exact
//! for polynomials of degree five.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operator::OperatorSpec;

/// Gauss–Legendre points on the reference element `[0, 1]`.
pub const GAUSS_POINTS: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
/// Matching weights on `[0, 1]` (they sum to one).
pub const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// `∂u/∂ν_a + β|u|^{p-2}u = 0` at both endpoints.
    #[default]
    Robin,
    /// Zero co-normal flux, with `|u|^{p-2}u` added to the operator.
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    /// Uniform mesh of `n` elements on `[x_l, x_r]`.
    pub fn uniform(x_l: f64, x_r: f64, n: usize) -> Result<Self> {
        if !(x_l.is_finite() && x_r.is_finite() && x_l < x_r) {
            return Err(invalid(format!("degenerate interval ({x_l}, {x_r})")));
        }
        if n < 2 {
            return Err(invalid(format!("mesh needs at least 2 elements, got {n}")));
        }
        let h = (x_r - x_l) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| x_l + h * i as f64).collect();
        nodes[n] = x_r;
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(invalid("mesh needs at least 2 elements"));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("mesh nodes must be finite and strictly increasing"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn h(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn max_h(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.h(e))
            .fold(0.0, f64::max)
    }

    pub fn x_left(&self) -> f64 {
        self.nodes[0]
    }

    pub fn x_right(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.x_right() - self.x_left()
    }

    /// Element containing `x` (the right-hand one at interior nodes) and the
    /// local coordinate in `[0, 1]`.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(x >= self.x_left() && x <= self.x_right()) {
            return Err(invalid(format!(
                "point {x} outside [{}, {}]",
                self.x_left(),
                self.x_right()
            )));
        }
        let e = (self.nodes.partition_point(|&n| n <= x).max(1) - 1).min(self.n_elements() - 1);
        Ok((e, (x - self.nodes[e]) / self.h(e)))
    }

    /// Global coordinate and weight (including the Jacobian) of every
    /// quadrature point, element-major.
    pub fn quadrature(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(3 * self.n_elements());
        for e in 0..self.n_elements() {
            let h = self.h(e);
            for k in 0..3 {
                out.push((self.nodes[e] + h * GAUSS_POINTS[k], h * GAUSS_WEIGHTS[k]));
            }
        }
        out
    }
}

/// Nodal values of a continuous piecewise-linear function.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    mesh: Arc<Mesh1D>,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(mesh: Arc<Mesh1D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(invalid(format!(
                "{} values for {} nodes",
                values.len(),
                mesh.n_nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("field values must be finite"));
        }
        Ok(Self { mesh, values })
    }

    pub fn from_fn(mesh: Arc<Mesh1D>, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = mesh.nodes().iter().map(|&x| f(x)).collect();
        Self { mesh, values }
    }

    pub fn constant(mesh: Arc<Mesh1D>, c: f64) -> Self {
        let n = mesh.n_nodes();
        Self {
            mesh,
            values: vec![c; n],
        }
    }

    pub fn zeros(mesh: Arc<Mesh1D>) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            mesh: Arc::clone(&self.mesh),
            values,
        }
    }

    /// Elementwise-constant derivative on element `e`.
    pub fn gradient(&self, e: usize) -> f64 {
        (self.values[e + 1] - self.values[e]) / self.mesh.h(e)
    }

    /// Value at local coordinate `s ∈ [0,1]` of element `e`.
    pub fn local(&self, e: usize, s: f64) -> f64 {
        self.values[e] * (1.0 - s) + self.values[e + 1] * s
    }

    pub fn value_at(&self, x: f64) -> Result<f64> {
        let (e, s) = self.mesh.locate(x)?;
        Ok(self.local(e, s))
    }

    pub fn gradient_at(&self, x: f64) -> Result<f64> {
        let (e, _) = self.mesh.locate(x)?;
        Ok(self.gradient(e))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.with_values(self.values.iter().map(|v| v * factor).collect())
    }

    /// Nodewise minimum of two fields on the same mesh.
    pub fn nodal_min(&self, other: &Self) -> Result<Self> {
        self.same_mesh(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.min(*b))
                .collect(),
        ))
    }

    pub fn same_mesh(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh == other.mesh {
            Ok(())
        } else {
            Err(invalid("fields live on different meshes"))
        }
    }

    /// Discrete C¹ surrogate distance: max nodal difference plus max
    /// elementwise gradient difference.
    pub fn c1_distance(&self, other: &Self) -> f64 {
        let nodal = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let grad = (0..self.mesh.n_elements())
            .map(|e| (self.gradient(e) - other.gradient(e)).abs())
            .fold(0.0, f64::max);
        nodal + grad
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Writes `x,u` rows at full round-trip precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv write: {e}"));
        wtr.write_record(["x", "u"]).map_err(io)?;
        for (x, u) in self.mesh.nodes().iter().zip(&self.values) {
            wtr.write_record([x.to_string(), u.to_string()])
                .map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))?;
        Ok(())
    }

    /// Reads an `x,u` CSV; the mesh is rebuilt from the `x` column.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr
            .headers()
            .map_err(|e| invalid(format!("csv header: {e}")))?
            .clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "u" {
            return Err(invalid("field CSV must have header `x,u`"));
        }
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| invalid(format!("csv row {}: {e}", row + 1)))?;
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("csv row {}: {e}", row + 1)))
            };
            xs.push(parse(0)?);
            us.push(parse(1)?);
        }
        let mesh = Arc::new(Mesh1D::from_nodes(xs)?);
        Self::new(mesh, us)
    }
}

/// JSON form `{"x": [...], "u": [...]}`.
#[derive(Serialize, Deserialize)]
struct FieldRepr {
    x: Vec<f64>,
    u: Vec<f64>,
}

impl Serialize for DiscreteField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldRepr {
            x: self.mesh.nodes().to_vec(),
            u: self.values.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FieldRepr::deserialize(d)?;
        let mesh = Mesh1D::from_nodes(repr.x).map_err(serde::de::Error::custom)?;
        DiscreteField::new(Arc::new(mesh), repr.u).map_err(serde::de::Error::custom)
    }
}

/// Everything the right-hand side of the weak form may depend on at a
/// quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    /// Global quadrature index `3·elem + k`.
    pub index: usize,
    pub elem: usize,
    pub x: f64,
    pub u: f64,
    pub du: f64,
}

/// Visits every quadrature point of `u` with its weight.
pub fn for_each_quad_point(u: &DiscreteField, mut visit: impl FnMut(&QuadPoint, f64, [f64; 2])) {
    let mesh = u.mesh();
    for e in 0..mesh.n_elements() {
        let h = mesh.h(e);
        let du = u.gradient(e);
        for k in 0..3 {
            let s = GAUSS_POINTS[k];
            let qp = QuadPoint {
                index: 3 * e + k,
                elem: e,
                x: mesh.nodes()[e] + h * s,
                u: u.local(e, s),
                du,
            };
            visit(&qp, h * GAUSS_WEIGHTS[k], [1.0 - s, s]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub w1p: f64,
    pub beta_norm: f64,
    pub lp: f64,
    pub grad_lp: f64,
    pub boundary_lp: f64,
    pub sup: f64,
    pub grad_sup: f64,
}

fn lp_power(u: &DiscreteField, p: f64) -> f64 {
    let mut acc = 0.0;
    for_each_quad_point(u, |qp, w, _| acc += w * qp.u.abs().powf(p));
    acc
}

fn grad_lp_power(u: &DiscreteField, p: f64) -> f64 {
    let mesh = u.mesh();
    (0..mesh.n_elements())
        .map(|e| mesh.h(e) * u.gradient(e).abs().powf(p))
        .sum()
}

fn boundary_lp_power(u: &DiscreteField, p: f64) -> f64 {
    let v = u.values();
    v[0].abs().powf(p) + v[v.len() - 1].abs().powf(p)
}

/// `‖u‖_p`, `‖∇u‖_p`, `‖u‖_{p,∂Ω}`, `‖u‖_{1,p}`, `‖u‖_{β,1,p}` and the discrete sup norms.
pub fn norms(u: &DiscreteField, p: f64, beta: f64) -> NormReport {
    let lpp = lp_power(u, p);
    let gpp = grad_lp_power(u, p);
    let bpp = boundary_lp_power(u, p);
    let mesh = u.mesh();
    NormReport {
        w1p: (lpp + gpp).powf(1.0 / p),
        beta_norm: (beta * bpp + gpp).powf(1.0 / p),
        lp: lpp.powf(1.0 / p),
        grad_lp: gpp.powf(1.0 / p),
        boundary_lp: bpp.powf(1.0 / p),
        sup: u.values().iter().map(|v| v.abs()).fold(0.0, f64::max),
        grad_sup: (0..mesh.n_elements())
            .map(|e| u.gradient(e).abs())
            .fold(0.0, f64::max),
    }
}

/// Tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    /// Adds the symmetric element block `[[diag, off], [off, diag]]` at element `e`.
    pub fn add_element(&mut self, e: usize, diag: f64, off: f64) {
        self.diag[e] += diag;
        self.diag[e + 1] += diag;
        self.upper[e] += off;
        self.lower[e] += off;
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Thomas algorithm; the matrices built here are diagonally dominant.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::NumericFailure {
                what: "tridiagonal solve".into(),
                achieved: denom,
            });
        }
        c[0] = if n > 1 { self.upper[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::NumericFailure {
                    what: "tridiagonal solve".into(),
                    achieved: denom,
                });
            }
            if i + 1 < n {
                c[i] = self.upper[i] / denom;
            }
            d[i] = (rhs[i] - self.lower[i - 1] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Stiffness matrix `∫ φᵢ' φⱼ'`.
pub fn stiffness(mesh: &Mesh1D) -> Tridiagonal {
    let mut m = Tridiagonal::zeros(mesh.n_nodes());
    for e in 0..mesh.n_elements() {
        let k = 1.0 / mesh.h(e);
        m.add_element(e, k, -k);
    }
    m
}

/// Consistent mass matrix `∫ φᵢ φⱼ`.
pub fn mass(mesh: &Mesh1D) -> Tridiagonal {
    let mut m = Tridiagonal::zeros(mesh.n_nodes());
    for e in 0..mesh.n_elements() {
        let h = mesh.h(e);
        m.add_element(e, h / 3.0, h / 6.0);
    }
    m
}

/// Right-hand side of the weak form at a quadrature point.
pub type RhsSampler<'a> = dyn Fn(&QuadPoint) -> f64 + 'a;

/// Nodal residual of the weak form tested with every hat function:
///
/// `rᵢ = ∫⟨a(u'), φᵢ'⟩ + β(|u|^{p-2}u φᵢ)|_{x_l} + β(|u|^{p-2}u φᵢ)|_{x_r} − ∫ rhs φᵢ`
///
/// in Robin mode; Neumann mode replaces the endpoint term by `∫|u|^{p-2}u φᵢ`.
/// Elements are visited in order, so the reduction is deterministic.
pub fn weak_residual(
    u: &DiscreteField,
    op: &OperatorSpec,
    rhs: &RhsSampler<'_>,
    beta: f64,
    mode: BoundaryMode,
) -> Vec<f64> {
    let p = op.p();
    let mesh = u.mesh();
    let n = mesh.n_nodes();
    let mut r = vec![0.0; n];
    for e in 0..mesh.n_elements() {
        let flux = op.a_scalar(u.gradient(e));
        r[e] -= flux;
        r[e + 1] += flux;
    }
    for_each_quad_point(u, |qp, w, phi| {
        let mut load = rhs(qp);
        if mode == BoundaryMode::Neumann {
            load -= signed_power(qp.u, p - 1.0);
        }
        r[qp.elem] -= w * load * phi[0];
        r[qp.elem + 1] -= w * load * phi[1];
    });
    if mode == BoundaryMode::Robin {
        r[0] += beta * signed_power(u.values()[0], p - 1.0);
        r[n - 1] += beta * signed_power(u.values()[n - 1], p - 1.0);
    }
    r
}

/// `|s|^{k} sign(s)`.
pub fn signed_power(s: f64, k: f64) -> f64 {
    s.abs().powf(k).copysign(s)
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Extremes of the ratio `‖u‖^p_{β,1,p} / ‖u‖^p_{1,p}` over the discrete space.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NormEquivalence {
    pub c1: f64,
    /// `inf ‖u‖^p_{β,1,p} / ‖u‖^p_{1,p}`.
    pub lower_ratio: f64,
    /// `sup ‖u‖^p_{β,1,p} / ‖u‖^p_{1,p}`.
    pub upper_ratio: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Extreme {
    Inf,
    Sup,
}

struct RatioProblem<'a> {
    mesh: &'a Mesh1D,
    p: f64,
    beta: f64,
}

impl RatioProblem<'_> {
    /// `(β-part, full W^{1,p} part)` of the p-th powers with their gradients.
    fn parts(&self, u: &[f64]) -> (f64, Vec<f64>, f64, Vec<f64>) {
        let p = self.p;
        let n = u.len();
        let mut grad_part = 0.0;
        let mut d_grad = vec![0.0; n];
        for e in 0..self.mesh.n_elements() {
            let h = self.mesh.h(e);
            let du = (u[e + 1] - u[e]) / h;
            grad_part += h * du.abs().powf(p);
            let g = p * signed_power(du, p - 1.0);
            d_grad[e] -= g;
            d_grad[e + 1] += g;
        }
        let mut vol = 0.0;
        let mut d_vol = vec![0.0; n];
        for e in 0..self.mesh.n_elements() {
            let h = self.mesh.h(e);
            for k in 0..3 {
                let s = GAUSS_POINTS[k];
                let w = h * GAUSS_WEIGHTS[k];
                let val = u[e] * (1.0 - s) + u[e + 1] * s;
                vol += w * val.abs().powf(p);
                let g = w * p * signed_power(val, p - 1.0);
                d_vol[e] += g * (1.0 - s);
                d_vol[e + 1] += g * s;
            }
        }
        let bnd = u[0].abs().powf(p) + u[n - 1].abs().powf(p);
        let mut num_grad = d_grad.clone();
        num_grad[0] += self.beta * p * signed_power(u[0], p - 1.0);
        num_grad[n - 1] += self.beta * p * signed_power(u[n - 1], p - 1.0);
        let den_grad: Vec<f64> = d_grad.iter().zip(&d_vol).map(|(a, b)| a + b).collect();
        (
            self.beta * bnd + grad_part,
            num_grad,
            vol + grad_part,
            den_grad,
        )
    }

    fn ratio(&self, u: &[f64], which: Extreme) -> f64 {
        let (num, _, den, _) = self.parts(u);
        match which {
            Extreme::Inf => num / den,
            Extreme::Sup => den / num,
        }
    }
}

/// Preconditioned projected-gradient minimization of a scale-invariant ratio.
fn minimize_ratio(
    problem: &RatioProblem<'_>,
    precond: &Tridiagonal,
    which: Extreme,
    seed: u64,
) -> Result<(f64, usize)> {
    const MAX_ITER: usize = 5000;
    let n = problem.mesh.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<f64> = match which {
        Extreme::Inf => (0..n).map(|_| rng.gen_range(0.5..1.5)).collect(),
        Extreme::Sup => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let mut value = problem.ratio(&u, which);
    let mut stalls = 0;
    for it in 1..=MAX_ITER {
        let (num, dnum, den, dden) = problem.parts(&u);
        let grad: Vec<f64> = match which {
            Extreme::Inf => dnum
                .iter()
                .zip(&dden)
                .map(|(a, b)| (a - num / den * b) / den)
                .collect(),
            Extreme::Sup => dden
                .iter()
                .zip(&dnum)
                .map(|(a, b)| (a - den / num * b) / num)
                .collect(),
        };
        let mut dir = precond.solve(&grad)?;
        dir.iter_mut().for_each(|d| *d = -*d);
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if slope >= 0.0 || !slope.is_finite() {
            return Ok((value, it));
        }
        let phi = |t: f64| -> f64 {
            let trial: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            problem.ratio(&trial, which)
        };
        let t = line_minimum(&phi, value);
        let next = phi(t);
        if t > 0.0 && next < value {
            for (a, d) in u.iter_mut().zip(&dir) {
                *a += t * d;
            }
            let scale = sup_norm(&u);
            u.iter_mut().for_each(|a| *a /= scale);
        }
        let change = value - next.min(value);
        value = value.min(next);
        if change <= 1e-15 * value {
            stalls += 1;
            if stalls >= 3 {
                return Ok((value, it));
            }
        } else {
            stalls = 0;
        }
    }
    Err(Error::NumericFailure {
        what: "norm-ratio minimization".into(),
        achieved: value,
    })
}

/// Brackets and golden-section-searches a minimizer of `phi` on `t > 0`.
fn line_minimum(phi: &dyn Fn(f64) -> f64, phi0: f64) -> f64 {
    let mut b = 1.0;
    let mut fb = phi(b);
    let mut halvings = 0;
    while !(fb < phi0) {
        b *= 0.5;
        fb = phi(b);
        halvings += 1;
        if halvings > 60 {
            return 0.0;
        }
    }
    let mut a = 0.0;
    let mut c = 2.0 * b;
    let mut fc = phi(c);
    if halvings == 0 {
        while fc < fb {
            a = b;
            b = c;
            fb = fc;
            c *= 2.0;
            fc = phi(c);
            if c > 1e12 {
                return b;
            }
        }
    }
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, c);
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let mut f1 = phi(x1);
    let mut f2 = phi(x2);
    for _ in 0..80 {
        if hi - lo <= 1e-10 * b.max(1e-12) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = phi(x2);
        }
    }
    let mut best = (b, fb);
    for cand in [(x1, f1), (x2, f2)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best.0
}

/// Both extremes of the norm ratio, and `c₁ = min((inf)^{1/p}, (sup)^{-1/p})`,
/// the best constant in `c₁‖u‖_{1,p} ≤ ‖u‖_{β,1,p} ≤ ‖u‖_{1,p}/c₁`.
pub fn norm_equivalence(mesh: &Mesh1D, p: f64, beta: f64) -> Result<NormEquivalence> {
    if !(p > 1.0 && beta > 0.0) {
        return Err(invalid("estimate_c1 needs p > 1 and beta > 0"));
    }
    let problem = RatioProblem { mesh, p, beta };
    let mut precond = stiffness(mesh);
    let m = mass(mesh);
    for i in 0..precond.diag.len() {
        precond.diag[i] += m.diag[i];
    }
    for i in 0..precond.upper.len() {
        precond.upper[i] += m.upper[i];
        precond.lower[i] += m.lower[i];
    }
    let last = precond.diag.len() - 1;
    precond.diag[0] += beta;
    precond.diag[last] += beta;

    let (lower, it_lo) = minimize_ratio(&problem, &precond, Extreme::Inf, 11)?;
    let (inv_upper, it_hi) = minimize_ratio(&problem, &precond, Extreme::Sup, 12)?;
    let upper = 1.0 / inv_upper;
    let c1 = lower.powf(1.0 / p).min(upper.powf(-1.0 / p)).min(1.0);
    Ok(NormEquivalence {
        c1,
        lower_ratio: lower,
        upper_ratio: upper,
        iterations: it_lo + it_hi,
    })
}

pub fn estimate_c1(mesh: &Mesh1D, p: f64, beta: f64) -> Result<f64> {
    Ok(norm_equivalence(mesh, p, beta)?.c1)
}
