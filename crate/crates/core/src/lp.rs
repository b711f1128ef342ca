//! Dense two-phase primal simplex.
//!
//! Programs are stated over free variables as
//!
//! ```text
//! minimize ⟨c, x⟩  subject to  A_eq x = b_eq,  A_le x ≤ b_le
//! ```
//!
//! and internally rewritten in standard form by splitting every variable into
//! positive and negative parts and adding one slack per inequality. Pivoting
//! follows Bland's rule (lowest eligible index enters, lowest basic index
//! leaves on ratio ties), so results are reproducible bit for bit. Final
//! primal values and multipliers are recomputed from the original data with
//! an LU factorization of the optimal basis.

use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_finite_slice, norm_inf, Matrix, Tolerances};
use nalgebra::DVector;

/// `minimize ⟨objective, x⟩` subject to `a_eq x = b_eq`, `a_le x ≤ b_le`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub a_eq: Matrix,
    pub b_eq: Vec<f64>,
    pub a_le: Matrix,
    pub b_le: Vec<f64>,
}

fn append_row(m: &Matrix, row: &[f64]) -> Matrix {
    let mut out = m.clone().insert_row(m.nrows(), 0.0);
    for (j, v) in row.iter().enumerate() {
        out[(m.nrows(), j)] = *v;
    }
    out
}

impl LinearProgram {
    /// Pure feasibility problem over `nvars` free variables with no constraints.
    pub fn new(nvars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; nvars],
            a_eq: Matrix::zeros(0, nvars),
            b_eq: Vec::new(),
            a_le: Matrix::zeros(0, nvars),
            b_le: Vec::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_objective(mut self, c: Vec<f64>) -> Self {
        self.objective = c;
        self
    }

    pub fn eq(mut self, row: &[f64], rhs: f64) -> Self {
        self.a_eq = append_row(&self.a_eq, row);
        self.b_eq.push(rhs);
        self
    }

    pub fn le(mut self, row: &[f64], rhs: f64) -> Self {
        self.a_le = append_row(&self.a_le, row);
        self.b_le.push(rhs);
        self
    }

    pub fn ge(self, row: &[f64], rhs: f64) -> Self {
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        self.le(&neg, -rhs)
    }

    /// Adds `m x = rhs` row by row.
    pub fn eq_block(mut self, m: &Matrix, rhs: &[f64]) -> Self {
        for (i, row) in m.row_iter().enumerate() {
            let r: Vec<f64> = row.iter().copied().collect();
            self = self.eq(&r, rhs[i]);
        }
        self
    }

    /// Appends `extra` free variables with zero coefficients everywhere.
    pub fn extend_vars(mut self, extra: usize) -> Self {
        let n = self.nvars() + extra;
        self.objective.resize(n, 0.0);
        self.a_eq = self.a_eq.resize_horizontally(n, 0.0);
        self.a_le = self.a_le.resize_horizontally(n, 0.0);
        self
    }

    /// Lifts the constraint `‖dstar · x‖₁ ≤ radius` on the leading
    /// `dstar.ncols()` variables by appending one auxiliary variable `t_i`
    /// per row of `dstar`, with `±(dstar x)_i ≤ t_i` and `Σ t_i ≤ radius`.
    ///
    /// This is the only ℓ¹ reformulation used in the crate.
    pub fn with_l1_bound(self, dstar: &Matrix, radius: f64) -> Self {
        let base = self.nvars();
        let (p, n) = dstar.shape();
        let mut lp = self.extend_vars(p);
        for i in 0..p {
            let mut up = vec![0.0; base + p];
            let mut down = vec![0.0; base + p];
            for j in 0..n {
                up[j] = dstar[(i, j)];
                down[j] = -dstar[(i, j)];
            }
            up[base + i] = -1.0;
            down[base + i] = -1.0;
            lp = lp.le(&up, 0.0).le(&down, 0.0);
        }
        let mut sum = vec![0.0; base + p];
        for t in sum.iter_mut().skip(base) {
            *t = 1.0;
        }
        lp.le(&sum, radius)
    }

    fn validate(&self) -> Result<()> {
        let n = self.nvars();
        if self.a_eq.ncols() != n || self.a_le.ncols() != n {
            return Err(Error::input("constraint matrices do not match the variable count"));
        }
        if self.a_eq.nrows() != self.b_eq.len() || self.a_le.nrows() != self.b_le.len() {
            return Err(Error::input("constraint right-hand sides do not match row counts"));
        }
        check_finite_slice(&self.objective, "objective")?;
        check_finite(&self.a_eq, "equality matrix")?;
        check_finite(&self.a_le, "inequality matrix")?;
        check_finite_slice(&self.b_eq, "equality rhs")?;
        check_finite_slice(&self.b_le, "inequality rhs")?;
        Ok(())
    }

    fn rhs_scale(&self) -> f64 {
        1.0 + norm_inf(&self.b_eq).max(norm_inf(&self.b_le))
    }

    /// Largest violation of any constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let eq = &self.a_eq * &xv;
        let le = &self.a_le * &xv;
        let e = (0..self.b_eq.len()).map(|i| (eq[i] - self.b_eq[i]).abs());
        let l = (0..self.b_le.len()).map(|i| (le[i] - self.b_le[i]).max(0.0));
        e.chain(l).fold(0.0, f64::max)
    }
}

/// Multipliers satisfying `c = A_eqᵀ eq + A_leᵀ le` with `le ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpDuals {
    pub eq: Vec<f64>,
    pub le: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub duals: LpDuals,
}

/// Farkas certificate: `A_eqᵀ eq + A_leᵀ le = 0`, `le ≤ 0` and
/// `⟨b_eq, eq⟩ + ⟨b_le, le⟩ > 0`. No feasible point can exist when these hold.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub eq: Vec<f64>,
    pub le: Vec<f64>,
}

impl FarkasCertificate {
    /// Checks the certificate against `lp`; returns the certified gap
    /// `⟨b, y⟩` normalized by `‖y‖∞` when valid.
    pub fn verify(&self, lp: &LinearProgram, tol: &Tolerances) -> Option<f64> {
        let scale = norm_inf(&self.eq).max(norm_inf(&self.le));
        if scale == 0.0 || self.le.iter().any(|&v| v > tol.lp_tol * scale) {
            return None;
        }
        let combo = lp.a_eq.transpose() * DVector::from_column_slice(&self.eq)
            + lp.a_le.transpose() * DVector::from_column_slice(&self.le);
        let gap: f64 = lp.b_eq.iter().zip(&self.eq).map(|(b, y)| b * y).sum::<f64>()
            + lp.b_le.iter().zip(&self.le).map(|(b, y)| b * y).sum::<f64>();
        let bound = combo.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if bound <= 1e3 * tol.lp_tol * scale && gap > 0.0 {
            Some(gap / scale)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(FarkasCertificate),
    Unbounded,
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal(_) => LpStatus::Optimal,
            LpOutcome::Infeasible(_) => LpStatus::Infeasible,
            LpOutcome::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn solution(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn x(&self) -> Option<&[f64]> {
        self.solution().map(|s| s.x.as_slice())
    }

    pub fn value(&self) -> Option<f64> {
        self.solution().map(|s| s.value)
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible(_))
    }
}

/// Standard-form tableau `T = B⁻¹ [Ã | I]` with the right-hand side in the
/// last column.
struct Tableau {
    rows: usize,
    /// real columns (split variables and slacks); artificials follow
    real: usize,
    width: usize,
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    cap: usize,
    piv_tol: f64,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + c] = 1.0;
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * self.t[r * w + j];
                }
                self.t[i * w + c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * self.t[r * w + j];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Loads reduced costs for the column costs `cost` (artificials included).
    fn load_objective(&mut self, cost: &[f64]) {
        let w = self.width;
        let mut obj = vec![0.0; w];
        obj[..cost.len()].copy_from_slice(cost);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    obj[j] -= cb * self.t[i * w + j];
                }
            }
        }
        self.obj = obj;
    }

    /// Runs Bland-rule iterations; `Ok(false)` signals unboundedness.
    fn optimize(&mut self, dj_tol: f64) -> Result<bool> {
        loop {
            let entering = (0..self.real).find(|&j| self.obj[j] < -dj_tol && !self.basis.contains(&j));
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > self.piv_tol {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie || tie && self.basis[i] < self.basis[k] {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(Error::IterationCap { cap: self.cap });
            }
            self.pivot(r, c);
        }
    }
}

struct StandardForm {
    /// `[Ã | I]`, rows with nonnegative rhs
    a: Matrix,
    b: Vec<f64>,
    /// +1 or -1 per row
    flip: Vec<f64>,
    nvars: usize,
    n_eq: usize,
    real: usize,
}

fn standard_form(lp: &LinearProgram) -> StandardForm {
    let nv = lp.nvars();
    let (n_eq, n_le) = (lp.b_eq.len(), lp.b_le.len());
    let rows = n_eq + n_le;
    let real = 2 * nv + n_le;
    let mut a = Matrix::zeros(rows, real + rows);
    let mut b = vec![0.0; rows];
    let mut flip = vec![1.0; rows];
    for i in 0..rows {
        let (src, rhs) = if i < n_eq {
            (lp.a_eq.row(i), lp.b_eq[i])
        } else {
            (lp.a_le.row(i - n_eq), lp.b_le[i - n_eq])
        };
        let f = if rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..nv {
            a[(i, j)] = f * src[j];
            a[(i, nv + j)] = -f * src[j];
        }
        if i >= n_eq {
            a[(i, 2 * nv + (i - n_eq))] = f;
        }
        a[(i, real + i)] = 1.0;
        b[i] = f * rhs;
        flip[i] = f;
    }
    StandardForm {
        a,
        b,
        flip,
        nvars: nv,
        n_eq,
        real,
    }
}

impl StandardForm {
    fn basis_matrix(&self, basis: &[usize]) -> Matrix {
        Matrix::from_fn(basis.len(), basis.len(), |i, k| self.a[(i, basis[k])])
    }

    /// Basic values `B⁻¹ b` from the original data.
    fn primal(&self, basis: &[usize], fallback: &[f64]) -> Vec<f64> {
        let lu = self.basis_matrix(basis).lu();
        match lu.solve(&DVector::from_column_slice(&self.b)) {
            Some(v) if v.iter().all(|x| x.is_finite()) => v.iter().copied().collect(),
            _ => fallback.to_vec(),
        }
    }

    /// Multipliers `B⁻ᵀ c_B`, mapped back to the caller's row orientation.
    fn duals(&self, basis: &[usize], cost: &[f64], fallback: &[f64]) -> Vec<f64> {
        let cb = DVector::from_iterator(basis.len(), basis.iter().map(|&j| cost[j]));
        let lu = self.basis_matrix(basis).transpose().lu();
        let y: Vec<f64> = match lu.solve(&cb) {
            Some(v) if v.iter().all(|x| x.is_finite()) => v.iter().copied().collect(),
            _ => fallback.to_vec(),
        };
        y.iter().zip(&self.flip).map(|(v, f)| v * f).collect()
    }

    fn split(&self, y: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
        let mut eq = y;
        let le = eq.split_off(self.n_eq);
        (eq, le)
    }
}

/// Solves `lp` to optimality, or proves it infeasible or unbounded.
pub fn solve(lp: &LinearProgram, tol: &Tolerances) -> Result<LpOutcome> {
    lp.validate()?;
    let sf = standard_form(lp);
    let rows = sf.b.len();
    let nv = sf.nvars;
    let real = sf.real;
    let width = real + rows + 1;
    let mut t = vec![0.0; rows * width];
    for i in 0..rows {
        for j in 0..real + rows {
            t[i * width + j] = sf.a[(i, j)];
        }
        t[i * width + width - 1] = sf.b[i];
    }
    let cap = 50 * (real + rows).max(1);
    let mut tab = Tableau {
        rows,
        real,
        width,
        t,
        obj: vec![0.0; width],
        basis: (real..real + rows).collect(),
        iterations: 0,
        cap,
        piv_tol: tol.lp_tol,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; real + rows];
    for c in phase1_cost.iter_mut().skip(real) {
        *c = 1.0;
    }
    tab.load_objective(&phase1_cost);
    tab.optimize(tol.lp_tol)?;
    let infeasibility: f64 = (0..rows)
        .filter(|&i| tab.basis[i] >= real)
        .map(|i| tab.rhs(i).max(0.0))
        .sum();
    if infeasibility > tol.lp_tol * lp.rhs_scale() {
        let fallback: Vec<f64> = (0..rows).map(|i| -tab.obj[real + i] + 1.0).collect();
        let y = sf.duals(&tab.basis, &phase1_cost, &fallback);
        let (eq, le) = sf.split(y);
        return Ok(LpOutcome::Infeasible(FarkasCertificate { eq, le }));
    }

    // Drive remaining artificials out of the basis where possible.
    for i in 0..rows {
        if tab.basis[i] < real {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..real {
            let a = tab.at(i, j).abs();
            if a > tab.piv_tol && !tab.basis.contains(&j) && best.is_none_or(|(_, b)| a > b) {
                best = Some((j, a));
            }
        }
        if let Some((j, _)) = best {
            tab.pivot(i, j);
        }
    }

    // Phase 2.
    let mut cost = vec![0.0; real + rows];
    for j in 0..nv {
        cost[j] = lp.objective[j];
        cost[nv + j] = -lp.objective[j];
    }
    tab.load_objective(&cost);
    if !tab.optimize(tol.lp_tol)? {
        return Ok(LpOutcome::Unbounded);
    }

    let tableau_x: Vec<f64> = (0..rows).map(|i| tab.rhs(i)).collect();
    let basic = sf.primal(&tab.basis, &tableau_x);
    let mut z = vec![0.0; real + rows];
    for (i, &j) in tab.basis.iter().enumerate() {
        z[j] = basic[i];
    }
    let x: Vec<f64> = (0..nv).map(|j| z[j] - z[nv + j]).collect();
    let value: f64 = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();

    let fallback: Vec<f64> = (0..rows).map(|i| -tab.obj[real + i]).collect();
    let y = sf.duals(&tab.basis, &cost, &fallback);
    let (eq, le) = sf.split(y);

    let violation = lp.max_violation(&x);
    if violation > 1e2 * tol.lp_tol * lp.rhs_scale() {
        return Err(Error::internal(format!(
            "simplex returned a point violating constraints by {violation:.3e}"
        )));
    }
    Ok(LpOutcome::Optimal(LpSolution {
        x,
        value,
        duals: LpDuals { eq, le },
    }))
}

/// Maximizes `⟨w, x⟩` over the feasible region of `region` (its objective is
/// ignored). `w` may be shorter than the variable count; missing entries are
/// zero, which is how auxiliary lift variables are left out. The reported
/// value is the maximum, not the negated minimum.
pub fn max_linear_over(region: &LinearProgram, w: &[f64], tol: &Tolerances) -> Result<LpOutcome> {
    if w.len() > region.nvars() {
        return Err(Error::input("direction longer than the variable count"));
    }
    let mut c = vec![0.0; region.nvars()];
    for (ci, wi) in c.iter_mut().zip(w) {
        *ci = -wi;
    }
    let lp = region.clone().with_objective(c);
    Ok(match solve(&lp, tol)? {
        LpOutcome::Optimal(mut s) => {
            s.value = -s.value;
            LpOutcome::Optimal(s)
        }
        other => other,
    })
}

pub fn min_linear_over(region: &LinearProgram, w: &[f64], tol: &Tolerances) -> Result<LpOutcome> {
    let neg: Vec<f64> = w.iter().map(|v| -v).collect();
    Ok(match max_linear_over(region, &neg, tol)? {
        LpOutcome::Optimal(mut s) => {
            s.value = -s.value;
            LpOutcome::Optimal(s)
        }
        other => other,
    })
}

/// Support function of the region in direction `w`: `+∞` when unbounded,
/// `None` when empty.
pub fn support(region: &LinearProgram, w: &[f64], tol: &Tolerances) -> Result<Option<f64>> {
    Ok(match max_linear_over(region, w, tol)? {
        LpOutcome::Optimal(s) => Some(s.value),
        LpOutcome::Unbounded => Some(f64::INFINITY),
        LpOutcome::Infeasible(_) => None,
    })
}
