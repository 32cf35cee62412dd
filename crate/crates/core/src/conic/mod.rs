//! Real second-order cone programming.
//!
//! A [`ConicProgram`] minimizes `objectiveᵀx` subject to constraints
//! `‖A x + b‖₂ <= cᵀx + d` and optional per-variable boxes. A constraint with
//! zero rows in `A` is the linear inequality `0 <= cᵀx + d`. [`solve`] runs a
//! homogeneous self-dual interior-point method with Nesterov-Todd scaling and
//! Mehrotra predictor-corrector steps on dense normal equations.

mod ipm;
pub(crate) mod linalg;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use num_complex::Complex64;
#[allow(unused_imports)] // redundant when num-traits is built with std
use num_traits::Float;

use crate::{Error, Result};

pub use ipm::{solve, solve_with};

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = DenseMatrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Domain(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Domain(format!("matrix rows must all have {cols} entries")));
        }
        Ok(DenseMatrix { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| linalg::dot(self.row(r), x)).collect()
    }
}

/// `‖A x + b‖₂ <= cᵀx + d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SocConstraint {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: f64,
}

impl SocConstraint {
    pub fn new(a: DenseMatrix, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self> {
        if b.len() != a.rows() || c.len() != a.cols() {
            return Err(Error::Domain(format!(
                "SOC dimensions disagree: A is {}x{}, b has {}, c has {}",
                a.rows(),
                a.cols(),
                b.len(),
                c.len()
            )));
        }
        Ok(SocConstraint { a, b, c, d })
    }

    /// The linear inequality `0 <= cᵀx + d`.
    pub fn linear(c: Vec<f64>, d: f64) -> Self {
        SocConstraint { a: DenseMatrix::zeros(0, c.len()), b: Vec::new(), c, d }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn is_linear(&self) -> bool {
        self.a.rows() == 0
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self
            .a
            .mul_vec(x)
            .iter()
            .zip(&self.b)
            .map(|(ax, b)| (ax + b) * (ax + b))
            .sum::<f64>()
            .sqrt();
        (lhs - linalg::dot(&self.c, x) - self.d).max(0.0)
    }
}

/// `minimize objectiveᵀx` subject to SOC constraints and box bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<SocConstraint>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        ConicProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            lower: vec![f64::NEG_INFINITY; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[SocConstraint] {
        &self.constraints
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) -> Result<()> {
        if objective.len() != self.num_vars {
            return Err(Error::Domain(format!(
                "objective has {} entries for {} variables",
                objective.len(),
                self.num_vars
            )));
        }
        self.objective = objective;
        Ok(())
    }

    pub fn add_constraint(&mut self, constraint: SocConstraint) -> Result<()> {
        if constraint.num_vars() != self.num_vars {
            return Err(Error::Domain(format!(
                "constraint over {} variables added to a {}-variable program",
                constraint.num_vars(),
                self.num_vars
            )));
        }
        self.constraints.push(constraint);
        Ok(())
    }

    /// Box `lower <= x_i <= upper`; pass infinities for one-sided bounds.
    pub fn set_bounds(&mut self, i: usize, lower: f64, upper: f64) -> Result<()> {
        if i >= self.num_vars || lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::Domain(format!("invalid bounds [{lower}, {upper}] on variable {i}")));
        }
        self.lower[i] = lower;
        self.upper[i] = upper;
        Ok(())
    }

    fn num_finite_bounds(&self) -> usize {
        self.lower.iter().chain(&self.upper).filter(|v| v.is_finite()).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() && self.num_finite_bounds() == 0 {
            return Err(Error::Domain("program has neither constraints nor bounds".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective) {
            return Err(Error::Domain("objective has non-finite entries".into()));
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !finite(&con.a.data) || !finite(&con.b) || !finite(&con.c) || !con.d.is_finite() {
                return Err(Error::Domain(format!("constraint {i} has non-finite data")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.objective, x)
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let cons = self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max);
        cons.max(bounds)
    }

    /// Plain-text canonical dump: objective, bounds, then each constraint's
    /// `A`, `b`, `c`, `d`, using round-trippable float formatting.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "conic-program vars {} constraints {}", self.num_vars, self.constraints.len());
        let _ = writeln!(out, "objective {}", join(&self.objective));
        let _ = writeln!(out, "lower {}", join(&self.lower));
        let _ = writeln!(out, "upper {}", join(&self.upper));
        for (i, con) in self.constraints.iter().enumerate() {
            let _ = writeln!(out, "constraint {i} rows {}", con.a.rows());
            for r in 0..con.a.rows() {
                let _ = writeln!(out, "  A {}", join(con.a.row(r)));
            }
            let _ = writeln!(out, "  b {}", join(&con.b));
            let _ = writeln!(out, "  c {}", join(&con.c));
            let _ = writeln!(out, "  d {:e}", con.d);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SolveStatus {
    Optimal,
    /// A dual certificate proves the constraints cannot all hold.
    Infeasible,
    /// A primal ray drives the objective to minus infinity.
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Primal point; for `Infeasible` the last (meaningless) iterate.
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Dual objective `-hᵀz`; a lower bound on the optimum when dual-feasible.
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Duality gap relative to `max(1, |objective|)`.
    pub gap: f64,
    pub iterations: usize,
    /// Multipliers per constraint, `(z₀, z₁)` ordered like `(cᵀx + d, A x + b)`.
    /// For `Infeasible` these hold the normalized Farkas certificate.
    pub constraint_duals: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub max_iter: usize,
    pub feasibility_tol: f64,
    pub gap_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { max_iter: 200, feasibility_tol: 1e-8, gap_tol: 1e-8 }
    }
}

/// Rewrites `xᵀP x + qᵀx + r <= 0` (P positive semidefinite) as one SOC
/// constraint through a factorization `P = L Lᵀ` and the rotated-cone
/// identity `‖y‖² <= t  ⇔  ‖(2y, t - 1)‖ <= t + 1`.
pub fn quad_constraint_to_soc(p: &DenseMatrix, q: &[f64], r: f64) -> Result<SocConstraint> {
    let n = q.len();
    if p.rows() != n || p.cols() != n {
        return Err(Error::Domain(format!("P is {}x{} but q has {n} entries", p.rows(), p.cols())));
    }
    let scale = p.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            if (p.get(i, j) - p.get(j, i)).abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::Domain("P is not symmetric".into()));
            }
        }
    }
    // rows of Lᵀ
    let mut factor_rows: Vec<Vec<f64>> = Vec::new();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || p.get(i, j) == 0.0));
    if diagonal {
        for i in 0..n {
            let v = p.get(i, i);
            if v < -1e-10 {
                return Err(Error::Domain(format!("P is indefinite (diagonal entry {v})")));
            }
            if v > 0.0 {
                let mut row = vec![0.0; n];
                row[i] = v.sqrt();
                factor_rows.push(row);
            }
        }
    } else {
        let (vals, vecs) = linalg::symmetric_eigen(&p.data, n);
        let cutoff = 1e-14 * scale;
        for (k, &lam) in vals.iter().enumerate() {
            if lam < -1e-10 {
                return Err(Error::Domain(format!("P is indefinite (eigenvalue {lam})")));
            }
            if lam > cutoff {
                let s = lam.sqrt();
                factor_rows.push((0..n).map(|i| s * vecs[i * n + k]).collect());
            }
        }
    }
    if factor_rows.is_empty() {
        return Ok(SocConstraint::linear(q.iter().map(|v| -v).collect(), -r));
    }
    let mut rows: Vec<Vec<f64>> = factor_rows.into_iter().map(|row| row.iter().map(|v| 2.0 * v).collect()).collect();
    rows.push(q.to_vec());
    let mut b = vec![0.0; rows.len()];
    *b.last_mut().expect("nonempty") = 1.0 + r;
    let a = DenseMatrix::from_rows(&rows, n)?;
    SocConstraint::new(a, b, q.iter().map(|v| -v).collect(), 1.0 - r)
}

/// Rewrites the separable quadratic `Σ_i d_i (x_i − c_i)² + qᵀx + r <= 0`
/// (`d >= 0`) as one SOC constraint.
///
/// Keeping the quadratic centered avoids the cancellation an expanded form
/// suffers when `c` is far from the origin relative to the constraint slack.
/// With `t = −qᵀx − r` the constraint reads `‖y‖² <= t`, embedded as
/// `‖(2√μ·y, t − μ)‖ <= t + μ` for a scale `μ > 0` chosen near the typical
/// magnitude of `t`.
pub fn centered_diagonal_quad_to_soc(d: &[f64], center: &[f64], q: &[f64], r: f64, mu: f64) -> Result<SocConstraint> {
    let n = q.len();
    if d.len() != n || center.len() != n {
        return Err(Error::Domain(format!("d, center and q must share length {n}")));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("cone scale must be positive and finite (got {mu})")));
    }
    if let Some(v) = d.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("negative curvature {v} in separable quadratic")));
    }
    let active: Vec<usize> = (0..n).filter(|&i| d[i] > 0.0).collect();
    if active.is_empty() {
        return Ok(SocConstraint::linear(q.iter().map(|v| -v).collect(), -r));
    }
    let rows = active.len() + 1;
    let mut a = DenseMatrix::zeros(rows, n);
    let mut b = vec![0.0; rows];
    let root_mu = mu.sqrt();
    for (row, &i) in active.iter().enumerate() {
        let s = 2.0 * d[i].sqrt() * root_mu;
        a.set(row, i, s);
        b[row] = -s * center[i];
    }
    for (j, &qj) in q.iter().enumerate() {
        a.set(rows - 1, j, -qj);
    }
    b[rows - 1] = -r - mu;
    SocConstraint::new(a, b, q.iter().map(|v| -v).collect(), mu - r)
}

/// Interleaved real embedding of `n` complex variables: `z_i = x[2i] + j·x[2i+1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexEmbedding {
    n: usize,
}

pub fn embed_complex(n_complex: usize) -> Result<ComplexEmbedding> {
    if n_complex == 0 {
        return Err(Error::Domain("need at least one complex variable".into()));
    }
    Ok(ComplexEmbedding { n: n_complex })
}

impl ComplexEmbedding {
    pub fn num_complex(&self) -> usize {
        self.n
    }

    pub fn num_real(&self) -> usize {
        2 * self.n
    }

    pub fn re(&self, i: usize) -> usize {
        2 * i
    }

    pub fn im(&self, i: usize) -> usize {
        2 * i + 1
    }

    pub fn to_real(&self, z: &[Complex64]) -> Vec<f64> {
        z.iter().flat_map(|v| [v.re, v.im]).collect()
    }

    pub fn to_complex(&self, x: &[f64]) -> Vec<Complex64> {
        x.chunks_exact(2).take(self.n).map(|p| Complex64::new(p[0], p[1])).collect()
    }

    /// Coefficient rows `(ρ, ι)` with `Re{aᴴz} = ρᵀx` and `Im{aᴴz} = ιᵀx`.
    pub fn inner_product_rows(&self, a: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut re = vec![0.0; self.num_real()];
        let mut im = vec![0.0; self.num_real()];
        for (i, ai) in a.iter().enumerate().take(self.n) {
            // conj(a)·z = (a_re z_re + a_im z_im) + j(a_re z_im − a_im z_re)
            re[2 * i] = ai.re;
            re[2 * i + 1] = ai.im;
            im[2 * i] = -ai.im;
            im[2 * i + 1] = ai.re;
        }
        (re, im)
    }
}
