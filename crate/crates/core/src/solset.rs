//! Solution sets of `min ½‖y − Φx‖² + λ‖D*x‖₁`.
//!
//! Every solution shares `Φx` and `‖D*x‖₁`, so the solution set is the slice
//! `(x₀ + Ker Φ) ∩ B_r` of the ball through any solution `x₀`. Once the
//! maximal sign `s̄` (the sign on the relative interior) is known it is the
//! polyhedron
//!
//! ```text
//! X = { x : Φx = Φx̄,  D*_J̄ x = 0,  diag(s̄_Ī) D*_Ī x ≥ 0 }
//! ```
//!
//! which is what [`SolutionSetDescription`] stores and every query here uses.

use std::collections::BTreeMap;

use log::debug;
use nalgebra::Cholesky;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ballgeo::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::{
    check_finite, check_finite_slice, intersect_null_spaces, norm_1, norm_inf, pinv_solve, projector, Matrix,
    Tolerances, Vector,
};
use crate::lp::{self, LinearProgram, LpOutcome};
use crate::signpat::{leq, poset_cover_edges, sign_of, SignPoset, SignVector};

/// Largest `|supp(s̄)|` for which sub-signs are enumerated.
pub const SUB_SIGN_CAP: usize = 16;

/// `(Φ, y, λ, D)`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub dict: Dictionary,
    pub phi: Matrix,
    pub y: Vec<f64>,
    pub lambda: f64,
}

impl ProblemInstance {
    pub fn new(dict: Dictionary, phi: Matrix, y: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::input(format!("lambda must be positive, got {lambda}")));
        }
        if phi.ncols() != dict.n() {
            return Err(Error::input(format!(
                "Phi has {} columns but the dictionary acts on R^{}",
                phi.ncols(),
                dict.n()
            )));
        }
        if phi.nrows() != y.len() {
            return Err(Error::input(format!(
                "Phi has {} rows but y has {} entries",
                phi.nrows(),
                y.len()
            )));
        }
        check_finite(&phi, "Phi")?;
        check_finite_slice(&y, "y")?;
        Ok(ProblemInstance { dict, phi, y, lambda })
    }

    pub fn n(&self) -> usize {
        self.dict.n()
    }

    pub fn tol(&self) -> &Tolerances {
        self.dict.tol()
    }

    pub fn phi_x(&self, x: &[f64]) -> Vec<f64> {
        (&self.phi * Vector::from_column_slice(x)).iter().copied().collect()
    }

    /// `Φ*(Φx − y)`.
    pub fn gradient(&self, x: &[f64]) -> Vector {
        let r = &self.phi * Vector::from_column_slice(x) - Vector::from_column_slice(&self.y);
        self.phi.transpose() * r
    }

    /// Scale used to make stationarity residuals relative: `1 + ‖Φ*y‖∞`.
    pub fn residual_scale(&self) -> f64 {
        let g = self.phi.transpose() * Vector::from_column_slice(&self.y);
        1.0 + norm_inf(g.as_slice())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::input(format!("point has length {}, expected {}", x.len(), self.n())));
        }
        check_finite_slice(x, "point")
    }
}

/// Subgradient `u` with `Φ*(Φx − y) + λ D u = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub u: Vec<f64>,
}

impl DualCertificate {
    /// `‖Φ*(Φx − y) + λ D u‖∞`.
    pub fn stationarity(&self, inst: &ProblemInstance, x: &[f64]) -> f64 {
        let du = inst.dict.synthesize(&self.u);
        let g = inst.gradient(x);
        (0..inst.n()).map(|k| (g[k] + inst.lambda * du[k]).abs()).fold(0.0, f64::max)
    }

    /// `u_I = sign(D*x)_I` and `‖u_J‖∞ ≤ 1 + slack`.
    pub fn is_subgradient(&self, inst: &ProblemInstance, x: &[f64], slack: f64) -> Result<bool> {
        let s = sign_of(&inst.dict.analyze(x), inst.tol())?;
        Ok((0..s.len()).all(|i| match s.get(i) {
            0 => self.u[i].abs() <= 1.0 + slack,
            e => (self.u[i] - f64::from(e)).abs() <= slack,
        }))
    }
}

pub fn objective(inst: &ProblemInstance, x: &[f64]) -> Result<f64> {
    inst.check_point(x)?;
    let phi_x = inst.phi_x(x);
    let fit: f64 = phi_x.iter().zip(&inst.y).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok(0.5 * fit + inst.lambda * inst.dict.norm(x))
}

/// Smallest `‖Φ*(Φx − y) + λ D u‖∞` over subgradients `u` of `‖·‖₁` at
/// `D*x`, found by LP. A certificate is returned when the residual is at most
/// `solver_tol · (1 + ‖Φ*y‖∞)`.
pub fn optimality_residual(inst: &ProblemInstance, x: &[f64]) -> Result<(f64, Option<DualCertificate>)> {
    inst.check_point(x)?;
    let tol = inst.tol();
    let s = sign_of(&inst.dict.analyze(x), tol)?;
    let residual_bound = tol.solver_tol * inst.residual_scale();
    let (residual, u) = stationarity_lp(inst, x, &s)?;
    let cert = (residual <= residual_bound).then_some(DualCertificate { u });
    Ok((residual, cert))
}

fn stationarity_lp(inst: &ProblemInstance, x: &[f64], s: &SignVector) -> Result<(f64, Vec<f64>)> {
    let n = inst.n();
    let free = s.cosupport();
    let m = free.len();
    let mut fixed = inst.gradient(x);
    let ds = inst.dict.synthesize(&s.as_f64());
    for k in 0..n {
        fixed[k] += inst.lambda * ds[k];
    }
    // variables: u_J (m entries), then t
    let d = inst.dict.d();
    let mut lp = LinearProgram::new(m + 1).with_objective({
        let mut c = vec![0.0; m + 1];
        c[m] = 1.0;
        c
    });
    for k in 0..n {
        let mut up = vec![0.0; m + 1];
        let mut down = vec![0.0; m + 1];
        for (a, &j) in free.iter().enumerate() {
            up[a] = inst.lambda * d[(k, j)];
            down[a] = -inst.lambda * d[(k, j)];
        }
        up[m] = -1.0;
        down[m] = -1.0;
        lp = lp.le(&up, -fixed[k]).le(&down, fixed[k]);
    }
    for a in 0..m {
        let mut e = vec![0.0; m + 1];
        e[a] = 1.0;
        lp = lp.le(&e, 1.0).ge(&e, -1.0);
    }
    let sol = match lp::solve(&lp, inst.tol())? {
        LpOutcome::Optimal(sol) => sol,
        other => {
            return Err(Error::internal(format!(
                "stationarity LP ended with {:?}",
                other.status()
            )))
        }
    };
    let mut u = s.as_f64();
    for (a, &j) in free.iter().enumerate() {
        u[j] = sol.x[a].clamp(-1.0, 1.0);
    }
    // Recompute the residual from u rather than trusting the LP value.
    let du = inst.dict.synthesize(&u);
    let g = inst.gradient(x);
    let residual = (0..n)
        .map(|k| (g[k] + inst.lambda * du[k]).abs())
        .fold(0.0, f64::max);
    Ok((residual, u))
}

/// Whether `x` is a certified minimizer.
pub fn is_certified(inst: &ProblemInstance, x: &[f64]) -> Result<bool> {
    Ok(optimality_residual(inst, x)?.1.is_some())
}

/// ADMM parameters. Defaults: `ρ = λ`, `μ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub rho: Option<f64>,
    pub mu: f64,
    pub max_iter: usize,
    /// Target stationarity residual, relative to `1 + ‖Φ*y‖∞`.
    pub tol: f64,
    /// Starting point; its component in `Ker Φ ∩ Ker D*` is kept throughout.
    pub start: Option<Vec<f64>>,
    /// Attempt an active-set polish every this many iterations.
    pub polish_every: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho: None,
            mu: 1.0,
            max_iter: 20_000,
            tol: Tolerances::default().solver_tol,
            start: None,
            polish_every: 25,
        }
    }
}

/// ADMM on the splitting `z = D*x`, returning a point whose optimality
/// residual is below `tol · (1 + ‖Φ*y‖∞)`.
pub fn solve_admm(inst: &ProblemInstance, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    solve_admm_with(
        inst,
        &AdmmConfig {
            tol,
            max_iter,
            ..AdmmConfig::default()
        },
    )
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn solve_admm_with(inst: &ProblemInstance, cfg: &AdmmConfig) -> Result<Vec<f64>> {
    let n = inst.n();
    let tol = inst.tol();
    let rho = cfg.rho.unwrap_or(inst.lambda);
    if !(rho > 0.0 && cfg.mu > 0.0 && cfg.tol > 0.0) {
        return Err(Error::input("ADMM parameters must be positive"));
    }
    let target = cfg.tol * inst.residual_scale();
    let d = inst.dict.d();
    let dstar = inst.dict.dstar();
    let lineality = intersect_null_spaces(&[&inst.phi, dstar], tol)?;
    let p_lin = projector(&lineality, n);
    let system = inst.phi.transpose() * &inst.phi + d * dstar * rho + &p_lin * cfg.mu;
    let chol = Cholesky::new(system.clone());
    let solve_system = |rhs: &Vector| -> Result<Vector> {
        match &chol {
            Some(c) => Ok(c.solve(rhs)),
            None => pinv_solve(&system, rhs, tol),
        }
    };

    let phi_t_y = inst.phi.transpose() * Vector::from_column_slice(&inst.y);
    let mut x = match &cfg.start {
        Some(s) => {
            inst.check_point(s)?;
            Vector::from_column_slice(s)
        }
        None => Vector::zeros(n),
    };
    let mut z = dstar * &x;
    let mut w = Vector::zeros(z.len());
    let mut best_residual = f64::INFINITY;

    for it in 1..=cfg.max_iter {
        let rhs = &phi_t_y + d * (&z - &w) * rho + &p_lin * &x * cfg.mu;
        x = solve_system(&rhs)?;
        let dx = dstar * &x;
        let z_old = z.clone();
        z = (&dx + &w).map(|v| soft_threshold(v, inst.lambda / rho));
        w += &dx - &z;

        let primal = norm_inf((&dx - &z).as_slice());
        let dual = rho * norm_inf((d * (&z - &z_old)).as_slice());
        let settled = primal.max(dual) <= target;
        if settled || it % cfg.polish_every.max(1) == 0 {
            let active = SignVector::new(z.iter().map(|&v| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 }).collect())?;
            if let Some(polished) = polish(inst, x.as_slice(), &active)? {
                let (res, _) = optimality_residual(inst, &polished)?;
                if res <= target {
                    debug!("ADMM certified after {it} iterations (polished, residual {res:.2e})");
                    return Ok(polished);
                }
            }
            let (res, _) = optimality_residual(inst, x.as_slice())?;
            best_residual = best_residual.min(res);
            if res <= target {
                debug!("ADMM certified after {it} iterations (residual {res:.2e})");
                return Ok(x.iter().copied().collect());
            }
        }
    }
    Err(Error::Convergence(format!(
        "ADMM stopped after {} iterations with stationarity residual {best_residual:.3e} (target {target:.3e})",
        cfg.max_iter
    )))
}

/// Exact minimizer of the smooth problem obtained by freezing the sign
/// pattern `s`: `min ½‖y − Φx‖² + λ⟨D s, x⟩` subject to `D*_J x = 0`, solved
/// as a minimum-norm correction to `x` so the lineality component of `x` is
/// kept. Returns `None` if the KKT system is inconsistent.
fn polish(inst: &ProblemInstance, x: &[f64], s: &SignVector) -> Result<Option<Vec<f64>>> {
    let n = inst.n();
    let zero_rows = s.cosupport();
    let dj = inst.dict.dstar_rows(&zero_rows);
    let m = zero_rows.len();
    let gram = inst.phi.transpose() * &inst.phi;
    let mut kkt = Matrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&gram);
    kkt.view_mut((0, n), (n, m)).copy_from(&dj.transpose());
    kkt.view_mut((n, 0), (m, n)).copy_from(&dj);
    let xv = Vector::from_column_slice(x);
    let ds = Vector::from_vec(inst.dict.synthesize(&s.as_f64()));
    let top = -(inst.gradient(x) + ds * inst.lambda);
    let bottom = -(&dj * &xv);
    let mut rhs = Vector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&top);
    rhs.rows_mut(n, m).copy_from(&bottom);
    let sol = pinv_solve(&kkt, &rhs, inst.tol())?;
    if norm_inf((&kkt * &sol - &rhs).as_slice()) > 1e-8 * (1.0 + norm_inf(rhs.as_slice())) {
        return Ok(None);
    }
    let out: Vec<f64> = (0..n).map(|k| x[k] + sol[k]).collect();
    Ok(out.iter().all(|v| v.is_finite()).then_some(out))
}

/// The affine slice `{Φx = Φx₀}` with the ℓ¹ bound `‖D*x‖₁ ≤ radius`, over
/// `(x, t)`.
fn slice_region(inst: &ProblemInstance, phi_x0: &[f64], radius: f64) -> LinearProgram {
    LinearProgram::new(inst.n())
        .eq_block(&inst.phi, phi_x0)
        .with_l1_bound(inst.dict.dstar(), radius)
}

/// Maximal sign `s̄` of the solution set and a point of its relative interior.
///
/// `r` is recomputed as `min ‖D*x‖₁` over `{Φx = Φx₀}`, which equals
/// `‖D*x₀‖₁` for an exact solution and absorbs the solver's last digits.
pub fn maximal_sign(inst: &ProblemInstance, x0: &[f64]) -> Result<(SignVector, Vec<f64>)> {
    inst.check_point(x0)?;
    let tol = *inst.tol();
    if !is_certified(inst, x0)? {
        let (res, _) = optimality_residual(inst, x0)?;
        return Err(Error::precondition(format!(
            "starting point is not a certified solution (residual {res:.3e})"
        )));
    }
    let n = inst.n();
    let p = inst.dict.p();
    let phi_x0 = inst.phi_x(x0);
    let loose = 2.0 * inst.dict.norm(x0) + 1.0;
    let mut norm_lp = slice_region(inst, &phi_x0, loose);
    for j in n..n + p {
        norm_lp.objective[j] = 1.0;
    }
    let r = match lp::solve(&norm_lp, &tol)? {
        LpOutcome::Optimal(sol) => sol.value,
        other => return Err(Error::internal(format!("norm LP ended with {:?}", other.status()))),
    };
    let region = slice_region(inst, &phi_x0, r * (1.0 + 1e-12) + 1e-12);

    let extremes: Vec<Result<(Vec<f64>, Vec<f64>, f64, f64)>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = inst.dict.dstar().row(i).iter().copied().collect();
            let hi = lp::max_linear_over(&region, &row, &tol)?;
            let lo = lp::min_linear_over(&region, &row, &tol)?;
            match (hi, lo) {
                (LpOutcome::Optimal(h), LpOutcome::Optimal(l)) => Ok((h.x, l.x, h.value, l.value)),
                _ => Err(Error::internal("coordinate LP over the solution set is not bounded and feasible")),
            }
        })
        .collect();
    let mut entries = vec![0i8; p];
    let mut sum = vec![0.0; n];
    for (i, e) in extremes.into_iter().enumerate() {
        let (xh, xl, hi, lo) = e?;
        let up = hi > tol.sign_tol;
        let down = lo < -tol.sign_tol;
        if up && down {
            return Err(Error::internal(format!(
                "coordinate {i} of D*x takes both signs over the solution set ({lo:.3e}, {hi:.3e})"
            )));
        }
        entries[i] = if up { 1 } else if down { -1 } else { 0 };
        for k in 0..n {
            sum[k] += xh[k] + xl[k];
        }
    }
    let s_bar = SignVector::new(entries)?;
    let x_ri: Vec<f64> = if p == 0 {
        x0.to_vec()
    } else {
        sum.iter().map(|v| v / (2 * p) as f64).collect()
    };
    let got = sign_of(&inst.dict.analyze(&x_ri), &tol)?;
    if got != s_bar {
        return Err(Error::internal(format!(
            "relative-interior candidate has sign {got}, expected {s_bar}"
        )));
    }
    Ok((s_bar, x_ri))
}

/// Linear constraints describing the solution set.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionConstraints {
    pub phi: Matrix,
    /// Common value of `Φx` over the solution set.
    pub phi_x: Vec<f64>,
    /// Rows of `D*` on the cosupport of `s̄` (must vanish).
    pub zero_rows: Matrix,
    /// Rows `s̄_i D*_i` on the support of `s̄` (must be nonnegative).
    pub signed_rows: Matrix,
}

impl SolutionConstraints {
    pub fn region(&self) -> LinearProgram {
        let n = self.phi.ncols();
        let mut lp = LinearProgram::new(n)
            .eq_block(&self.phi, &self.phi_x)
            .eq_block(&self.zero_rows, &vec![0.0; self.zero_rows.nrows()]);
        for row in self.signed_rows.row_iter() {
            let r: Vec<f64> = row.iter().copied().collect();
            lp = lp.ge(&r, 0.0);
        }
        lp
    }

    /// Largest constraint violation at `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.region().max_violation(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSetDescription {
    pub x_ri: Vec<f64>,
    pub max_sign: SignVector,
    pub radius: f64,
    pub dim: usize,
    pub compact: bool,
    pub constraints: SolutionConstraints,
}

impl SolutionSetDescription {
    pub fn region(&self) -> LinearProgram {
        self.constraints.region()
    }

    /// Membership slack used by the point queries, scaled to the point.
    fn slack(&self, tol: &Tolerances, x: &[f64]) -> f64 {
        tol.sign_tol * (1.0 + norm_inf(x).max(norm_inf(&self.constraints.phi_x)))
    }
}

pub fn describe_solution_set(inst: &ProblemInstance, x0: &[f64]) -> Result<SolutionSetDescription> {
    let (s_bar, x_ri) = maximal_sign(inst, x0)?;
    let tol = inst.tol();
    let cosupp = s_bar.cosupport();
    let supp = s_bar.support();
    let zero_rows = inst.dict.dstar_rows(&cosupp);
    let mut signed_rows = inst.dict.dstar_rows(&supp);
    for (k, &i) in supp.iter().enumerate() {
        let sgn = f64::from(s_bar.get(i));
        signed_rows.row_mut(k).scale_mut(sgn);
    }
    let dim = intersect_null_spaces(&[&inst.phi, &zero_rows], tol)?.ncols();
    let compact = intersect_null_spaces(&[&inst.phi, inst.dict.dstar()], tol)?.ncols() == 0;
    Ok(SolutionSetDescription {
        radius: inst.dict.norm(&x_ri),
        constraints: SolutionConstraints {
            phi: inst.phi.clone(),
            phi_x: inst.phi_x(&x_ri),
            zero_rows,
            signed_rows,
        },
        x_ri,
        max_sign: s_bar,
        dim,
        compact,
    })
}

/// `Ker Φ ∩ Ker D*_J = {0}` at `x`, with `J` the cosupport of `D*x`.
pub fn is_extreme_solution(inst: &ProblemInstance, desc: &SolutionSetDescription, x: &[f64]) -> Result<bool> {
    inst.check_point(x)?;
    let tol = inst.tol();
    let violation = desc.constraints.violation(x);
    if violation > desc.slack(tol, x) {
        return Err(Error::precondition(format!(
            "point is not in the solution set (violation {violation:.3e})"
        )));
    }
    let s = sign_of(&inst.dict.analyze(x), tol)?;
    let zero_rows = inst.dict.dstar_rows(&s.cosupport());
    Ok(intersect_null_spaces(&[&inst.phi, &zero_rows], tol)?.ncols() == 0)
}

fn check_sub_sign_cap(desc: &SolutionSetDescription) -> Result<()> {
    let k = desc.max_sign.support().len();
    if k > SUB_SIGN_CAP {
        return Err(Error::precondition(format!(
            "maximal sign has support {k}; sub-sign enumeration is capped at {SUB_SIGN_CAP}"
        )));
    }
    Ok(())
}

/// Vertices of a compact solution set, sorted by the sign string of `D*x`.
///
/// Each face of `X` is cut out by extra equalities `D*_J x = 0` with
/// `J ⊇ J̄`, so the vertices are the nonempty faces with
/// `Ker Φ ∩ Ker D*_J = {0}`.
pub fn enumerate_extreme_solutions(inst: &ProblemInstance, desc: &SolutionSetDescription) -> Result<Vec<Vec<f64>>> {
    if !desc.compact {
        return Err(Error::precondition(
            "solution set is unbounded (Ker Phi ∩ Ker D* ≠ {0}) and has no extreme points",
        ));
    }
    check_sub_sign_cap(desc)?;
    let tol = *inst.tol();
    let base = desc.region();
    let candidates: Vec<Result<Option<Vec<f64>>>> = desc
        .max_sign
        .sub_signs()
        .par_iter()
        .map(|s| {
            let zero = inst.dict.dstar_rows(&s.cosupport());
            if intersect_null_spaces(&[&inst.phi, &zero], &tol)?.ncols() != 0 {
                return Ok(None);
            }
            let lp = base.clone().eq_block(&zero, &vec![0.0; zero.nrows()]);
            Ok(lp::solve(&lp, &tol)?.x().map(|x| x.to_vec()))
        })
        .collect();
    let mut found: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for c in candidates {
        let Some(x) = c? else { continue };
        let key = sign_of(&inst.dict.analyze(&x), &tol)?.to_string();
        let bucket = found.entry(key).or_default();
        if !bucket.iter().any(|y| norm_inf(&diff(y, &x)) <= 1e-6 * (1.0 + norm_inf(&x))) {
            bucket.push(x);
        }
    }
    Ok(found.into_values().flatten().collect())
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Range of `⟨w, x⟩` over the solution set; infinite ends when unbounded.
pub fn coordinate_bounds(desc: &SolutionSetDescription, w: &[f64], tol: &Tolerances) -> Result<(f64, f64)> {
    if w.len() != desc.x_ri.len() {
        return Err(Error::input("direction length differs from the ambient dimension"));
    }
    let region = desc.region();
    let value = |out: LpOutcome, unbounded: f64| match out {
        LpOutcome::Optimal(s) => Ok(s.value),
        LpOutcome::Unbounded => Ok(unbounded),
        LpOutcome::Infeasible(_) => Err(Error::internal("solution set description is empty")),
    };
    let hi = value(lp::max_linear_over(&region, w, tol)?, f64::INFINITY)?;
    let lo = value(lp::min_linear_over(&region, w, tol)?, f64::NEG_INFINITY)?;
    Ok((lo, hi))
}

/// Coordinates equal to zero on the whole solution set.
pub fn dispensable_coordinates(desc: &SolutionSetDescription, tol: &Tolerances) -> Result<Vec<usize>> {
    let n = desc.x_ri.len();
    let mut out = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let (lo, hi) = coordinate_bounds(desc, &e, tol)?;
        if lo.abs() <= tol.lp_tol * 10.0 && hi.abs() <= tol.lp_tol * 10.0 {
            out.push(i);
        }
    }
    Ok(out)
}

/// Whether some solution has `sign(D*x)` exactly `s`, for `s ⪯ s̄`: maximizes
/// the smallest margin `s_i (D*x)_i` over the face cut out by `D*_J x = 0`.
fn sign_realized(inst: &ProblemInstance, desc: &SolutionSetDescription, s: &SignVector) -> Result<bool> {
    let tol = inst.tol();
    let n = inst.n();
    let zero = inst.dict.dstar_rows(&s.cosupport());
    let mut lp = desc
        .region()
        .eq_block(&zero, &vec![0.0; zero.nrows()])
        .extend_vars(1);
    let mut c = vec![0.0; n + 1];
    c[n] = -1.0;
    lp = lp.with_objective(c);
    let mut cap = vec![0.0; n + 1];
    cap[n] = 1.0;
    lp = lp.le(&cap, 1.0);
    for i in s.support() {
        let mut row = vec![0.0; n + 1];
        for k in 0..n {
            row[k] = f64::from(s.get(i)) * inst.dict.dstar()[(i, k)];
        }
        row[n] = -1.0;
        lp = lp.ge(&row, 0.0);
    }
    Ok(match lp::solve(&lp, tol)? {
        LpOutcome::Optimal(sol) => s.is_zero() || sol.x[n] > tol.sign_tol,
        LpOutcome::Unbounded => true,
        LpOutcome::Infeasible(_) => false,
    })
}

/// Poset of the signs attained on the solution set. Its unique maximal
/// element is `s̄`.
pub fn solution_hasse(inst: &ProblemInstance, desc: &SolutionSetDescription) -> Result<SignPoset> {
    check_sub_sign_cap(desc)?;
    let subs = desc.max_sign.sub_signs();
    let realized: Vec<Result<bool>> = subs.par_iter().map(|s| sign_realized(inst, desc, s)).collect();
    let mut elements = Vec::new();
    for (s, r) in subs.into_iter().zip(realized) {
        if r? {
            elements.push(s);
        }
    }
    let poset = poset_cover_edges(&elements)?;
    for s in &poset.elements {
        if !leq(s, &desc.max_sign)? {
            return Err(Error::internal("realized sign is not below the maximal sign"));
        }
    }
    Ok(poset)
}

/// `‖D*x‖₁` of a certified solution; shared by every solution.
pub fn solution_radius(inst: &ProblemInstance, x: &[f64]) -> f64 {
    norm_1(&inst.dict.analyze(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::{difference_dict, identity_dict};

    fn sv(s: &str) -> SignVector {
        s.parse().unwrap()
    }

    pub(crate) fn setting3d() -> ProblemInstance {
        let dstar = Matrix::from_row_slice(3, 3, &[1., 1., 0., 1., 0., 1., 2., 1., 1.]);
        let dict = Dictionary::from_dstar(dstar, Tolerances::default()).unwrap();
        let phi = Matrix::from_row_slice(3, 3, &[1., 1., 1., 3., 1., 1., 2f64.sqrt(), 0., 0.]);
        ProblemInstance::new(dict, phi, vec![1., 1., 0.], 0.5).unwrap()
    }

    fn tv3() -> ProblemInstance {
        let phi = Matrix::from_row_slice(2, 3, &[1., -2., 1., 0., 1., 0.]);
        ProblemInstance::new(difference_dict(3).unwrap(), phi, vec![2., 1.], 1.0).unwrap()
    }

    fn close(a: &[f64], b: &[f64], eps: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= eps)
    }

    #[test]
    fn objective_values() {
        let inst = setting3d();
        assert!((objective(&inst, &[0., 0.5, 0.]).unwrap() - 0.75).abs() < 1e-15);
        assert!((objective(&inst, &[0., 0., 0.5]).unwrap() - 0.75).abs() < 1e-15);
        assert!((objective(&inst, &[0., 0., 0.]).unwrap() - 1.0).abs() < 1e-15);
        assert!(objective(&inst, &[1., 0., 0.]).unwrap() > 0.75);
    }

    #[test]
    fn instance_validation() {
        let inst = setting3d();
        let bad = ProblemInstance::new(inst.dict.clone(), inst.phi.clone(), inst.y.clone(), 0.0);
        assert!(matches!(bad, Err(Error::Input(_))));
        let bad = ProblemInstance::new(inst.dict.clone(), inst.phi.clone(), vec![1.0], 1.0);
        assert!(matches!(bad, Err(Error::Input(_))));
    }

    #[test]
    fn residuals() {
        let inst = setting3d();
        let (r, cert) = optimality_residual(&inst, &[0., 0.5, 0.]).unwrap();
        assert!(r < 1e-12);
        let cert = cert.unwrap();
        assert!(cert.stationarity(&inst, &[0., 0.5, 0.]) < 1e-12);
        assert!(cert.is_subgradient(&inst, &[0., 0.5, 0.], 1e-12).unwrap());
        let (r, cert) = optimality_residual(&inst, &[1., 0., 0.]).unwrap();
        assert!(r > 0.01 && cert.is_none());

        let tv = tv3();
        let (r, cert) = optimality_residual(&tv, &[1., 1., 2.]).unwrap();
        assert!(r < 1e-12);
        let u = cert.unwrap().u;
        // J = {0} is free; the canonical certificate u = s̄ = (-1, 1) is one option
        assert!((u[1] - 1.0).abs() < 1e-12);
        let fixed = DualCertificate { u: vec![-1.0, 1.0] };
        assert!(fixed.stationarity(&tv, &[1., 1., 2.]) < 1e-12);
    }

    #[test]
    fn admm_setting3d() {
        let inst = setting3d();
        let x = solve_admm(&inst, 1e-10, 20_000).unwrap();
        assert!((objective(&inst, &x).unwrap() - 0.75).abs() < 1e-6);
        assert!(close(&inst.phi_x(&x), &[0.5, 0.5, 0.0], 1e-6));
    }

    #[test]
    fn admm_small_lambda_inverts() {
        let dict = identity_dict(3).unwrap();
        let phi = Matrix::from_row_slice(3, 3, &[2., 1., 0., 0., 1., 0., 1., 0., 3.]);
        let y = vec![1., -2., 0.5];
        let inst = ProblemInstance::new(dict, phi.clone(), y.clone(), 1e-7).unwrap();
        let x = solve_admm(&inst, 1e-10, 50_000).unwrap();
        let exact = phi.lu().solve(&Vector::from_vec(y)).unwrap();
        assert!(close(&x, exact.as_slice(), 1e-5));
    }

    #[test]
    fn admm_tv3() {
        let inst = tv3();
        let x = solve_admm(&inst, 1e-10, 20_000).unwrap();
        assert!(close(&inst.phi_x(&x), &[1.0, 1.0], 1e-6));
    }

    #[test]
    fn admm_reports_non_convergence() {
        let inst = setting3d();
        let cfg = AdmmConfig {
            max_iter: 2,
            polish_every: 1000,
            ..AdmmConfig::default()
        };
        assert!(matches!(solve_admm_with(&inst, &cfg), Err(Error::Convergence(_))));
    }

    #[test]
    fn setting3d_description() {
        let inst = setting3d();
        let desc = describe_solution_set(&inst, &[0., 0.5, 0.]).unwrap();
        assert_eq!(desc.max_sign, sv("+++"));
        assert_eq!(desc.dim, 1);
        assert!(desc.compact);
        assert!((desc.radius - 1.0).abs() < 1e-9);
        assert_eq!(sign_of(&inst.dict.analyze(&desc.x_ri), inst.tol()).unwrap(), sv("+++"));

        assert!(is_extreme_solution(&inst, &desc, &[0., 0.5, 0.]).unwrap());
        assert!(!is_extreme_solution(&inst, &desc, &[0., 0.25, 0.25]).unwrap());
        assert!(matches!(
            is_extreme_solution(&inst, &desc, &[1., 0., 0.]),
            Err(Error::Precondition(_))
        ));

        let ext = enumerate_extreme_solutions(&inst, &desc).unwrap();
        assert_eq!(ext.len(), 2);
        assert!(ext.iter().any(|x| close(x, &[0., 0.5, 0.], 1e-6)));
        assert!(ext.iter().any(|x| close(x, &[0., 0., 0.5], 1e-6)));

        let tol = inst.tol();
        let (lo, hi) = coordinate_bounds(&desc, &[1., 0., 0.], tol).unwrap();
        assert!(lo.abs() < 1e-7 && hi.abs() < 1e-7);
        let (lo, hi) = coordinate_bounds(&desc, &[0., 1., 0.], tol).unwrap();
        assert!(lo.abs() < 1e-7 && (hi - 0.5).abs() < 1e-7);
        assert_eq!(coordinate_bounds(&desc, &[0., 0., 0.], tol).unwrap(), (0.0, 0.0));
        assert_eq!(dispensable_coordinates(&desc, tol).unwrap(), vec![0]);

        let poset = solution_hasse(&inst, &desc).unwrap();
        let names: Vec<String> = poset.elements.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, vec!["0++", "+0+", "+++"]);
        assert_eq!(poset.maximal(), vec![2]);
        assert_eq!(poset.cover_edges, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn uncertified_start_is_rejected() {
        let inst = setting3d();
        assert!(matches!(maximal_sign(&inst, &[1., 0., 0.]), Err(Error::Precondition(_))));
    }

    #[test]
    fn unique_solution() {
        let dict = identity_dict(3).unwrap();
        let inst = ProblemInstance::new(dict, Matrix::identity(3, 3), vec![2.0, -1.5, 0.3], 0.5).unwrap();
        // soft thresholding is the exact solution
        let x0 = vec![1.5, -1.0, 0.0];
        assert!(is_certified(&inst, &x0).unwrap());
        let (s, x_ri) = maximal_sign(&inst, &x0).unwrap();
        assert_eq!(s, sv("+-0"));
        assert!(close(&x_ri, &x0, 1e-9));
        let desc = describe_solution_set(&inst, &x0).unwrap();
        assert_eq!(desc.dim, 0);
        assert!(is_extreme_solution(&inst, &desc, &x0).unwrap());
        let ext = enumerate_extreme_solutions(&inst, &desc).unwrap();
        assert_eq!(ext.len(), 1);
        assert!(close(&ext[0], &x0, 1e-9));
        assert_eq!(solution_hasse(&inst, &desc).unwrap().elements, vec![sv("+-0")]);
    }

    #[test]
    fn tv3_solution_set() {
        let inst = tv3();
        let desc = describe_solution_set(&inst, &[1., 1., 2.]).unwrap();
        assert_eq!(desc.max_sign, sv("-+"));
        assert_eq!(desc.dim, 1);
        assert!(desc.compact);
        let ext = enumerate_extreme_solutions(&inst, &desc).unwrap();
        assert_eq!(ext.len(), 2);
        assert!(ext.iter().any(|x| close(x, &[1., 1., 2.], 1e-6)));
        assert!(ext.iter().any(|x| close(x, &[2., 1., 1.], 1e-6)));
        let names: Vec<String> = solution_hasse(&inst, &desc)
            .unwrap()
            .elements
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(names, vec!["-0", "-+", "0+"]);
    }

    #[test]
    fn unbounded_set_has_no_vertices() {
        // Φ = 0 row on TV: the solution set contains the constants
        let dict = difference_dict(3).unwrap();
        let phi = Matrix::from_row_slice(1, 3, &[1., -1., 0.]);
        let inst = ProblemInstance::new(dict, phi, vec![0.0], 1.0).unwrap();
        let x = solve_admm(&inst, 1e-10, 20_000).unwrap();
        let desc = describe_solution_set(&inst, &x).unwrap();
        assert!(!desc.compact);
        assert!(matches!(
            enumerate_extreme_solutions(&inst, &desc),
            Err(Error::Precondition(_))
        ));
        let (lo, hi) = coordinate_bounds(&desc, &[1., 1., 1.], inst.tol()).unwrap();
        assert!(lo.is_infinite() && hi.is_infinite());
    }
}
