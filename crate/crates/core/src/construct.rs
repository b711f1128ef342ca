//! Inverse constructions: problem instances whose solution set is a
//! prescribed slice of the ball.
//!
//! Two routes are provided:
//!
//! * [`construct_theorem_arb`] realizes `A ∩ B_r` for an affine subspace that
//!   touches the ball only on its boundary, with `Ker Φ = dir(A)`. It needs a
//!   nonzero `β` with `Φ*β` in the cone spanned by `D s` over `s ⪰ s̄`, found
//!   by one LP.
//! * [`construct_arbitrary_face`] realizes `A ∩ F` for any exposed face `F`
//!   met by `A`, prepending the face normal `D s̄` to the rows of `Φ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::ballgeo::{face_from_sign, Dictionary};
use crate::error::{Error, Result};
use crate::linalg::{
    check_finite_slice, intersect_null_spaces, norm_inf, null_space_basis, orthogonal_complement,
    range_basis, same_span, span_contained, Matrix, Tolerances, Vector,
};
use crate::lp::{self, LinearProgram, LpOutcome};
use crate::signpat::{sign_of, SignVector};
use crate::solset::{
    describe_solution_set, enumerate_extreme_solutions, solve_admm, DualCertificate, ProblemInstance,
};

/// Largest `|cosupp(s̄)|` for the `3^|J̄|`-column cone search.
pub const CONE_SEARCH_CAP: usize = 8;
const CONE_SEARCH_RETRIES: usize = 5;

/// `origin + span(direction_basis)`, with `normal_basis` spanning the
/// orthogonal complement of the directions.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    pub origin: Vec<f64>,
    pub direction_basis: Matrix,
    pub normal_basis: Matrix,
}

impl AffineSubspace {
    /// Subspace through `origin` orthogonal to every column of `normals`.
    pub fn from_normals(origin: Vec<f64>, normals: &Matrix, tol: &Tolerances) -> Result<Self> {
        let n = origin.len();
        check_finite_slice(&origin, "affine origin")?;
        if normals.ncols() > 0 && normals.nrows() != n {
            return Err(Error::input("normal vectors do not match the origin's dimension"));
        }
        let normal_basis = if normals.ncols() == 0 {
            Matrix::zeros(n, 0)
        } else {
            range_basis(normals, tol)?
        };
        let direction_basis = orthogonal_complement(&normal_basis, n, tol)?;
        Ok(AffineSubspace {
            origin,
            direction_basis,
            normal_basis,
        })
    }

    /// Subspace through `origin` spanned by the columns of `directions`.
    pub fn from_directions(origin: Vec<f64>, directions: &Matrix, tol: &Tolerances) -> Result<Self> {
        let n = origin.len();
        check_finite_slice(&origin, "affine origin")?;
        if directions.ncols() > 0 && directions.nrows() != n {
            return Err(Error::input("direction vectors do not match the origin's dimension"));
        }
        let direction_basis = if directions.ncols() == 0 {
            Matrix::zeros(n, 0)
        } else {
            range_basis(directions, tol)?
        };
        let normal_basis = orthogonal_complement(&direction_basis, n, tol)?;
        Ok(AffineSubspace {
            origin,
            direction_basis,
            normal_basis,
        })
    }

    /// Affine hull of a finite set of points.
    pub fn hull_of(points: &[Vec<f64>], tol: &Tolerances) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::input("affine hull of no points"));
        };
        let n = first.len();
        let dirs = Matrix::from_fn(n, points.len() - 1, |i, k| points[k + 1][i] - first[i]);
        AffineSubspace::from_directions(first.clone(), &dirs, tol)
    }

    pub fn whole_space(n: usize) -> Self {
        AffineSubspace {
            origin: vec![0.0; n],
            direction_basis: Matrix::identity(n, n),
            normal_basis: Matrix::zeros(n, 0),
        }
    }

    pub fn point(x: Vec<f64>) -> Self {
        let n = x.len();
        AffineSubspace {
            origin: x,
            direction_basis: Matrix::zeros(n, 0),
            normal_basis: Matrix::identity(n, n),
        }
    }

    pub fn ambient(&self) -> usize {
        self.origin.len()
    }

    pub fn dim(&self) -> usize {
        self.direction_basis.ncols()
    }

    /// `a_kᵀ origin` for every normal `a_k`.
    pub fn offsets(&self) -> Vec<f64> {
        (self.normal_basis.transpose() * Vector::from_column_slice(&self.origin))
            .iter()
            .copied()
            .collect()
    }

    /// Adds `a_kᵀ x = a_kᵀ origin` on the leading variables of `lp`.
    pub fn constrain(&self, lp: LinearProgram) -> LinearProgram {
        let n = self.ambient();
        let offsets = self.offsets();
        let width = lp.nvars();
        let mut lp = lp;
        for (k, col) in self.normal_basis.column_iter().enumerate() {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(col.as_slice());
            lp = lp.eq(&row, offsets[k]);
        }
        lp
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        let v = self.normal_basis.transpose() * Vector::from_column_slice(x);
        v.iter().zip(self.offsets()).all(|(a, b)| (a - b).abs() <= slack)
    }
}

/// What the constructed solution set should be.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Target {
    /// `A ∩ B_r`.
    TheoremArb { radius: f64 },
    /// `A ∩ F` with `F` the face of `B_r` with maximal sign `sign`.
    ArbitraryFace { sign: SignVector, radius: f64 },
}

/// Auxiliary data explaining why the construction works.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionCertificate {
    pub dual: DualCertificate,
    /// The optimal point used to build `y`.
    pub anchor: Vec<f64>,
    /// `β` with `y = Φ x̄ + λ β`.
    pub beta: Vec<f64>,
    /// Nonzero cone weights `α_s` (theorem route only).
    pub alpha: Vec<(SignVector, f64)>,
}

#[derive(Debug, Clone)]
pub struct ConstructedInstance {
    pub inst: ProblemInstance,
    pub affine: AffineSubspace,
    pub target: Target,
    pub certificate: ConstructionCertificate,
}

impl ConstructedInstance {
    /// The intended solution set as an LP region over `x` (plus lift
    /// variables on the theorem route).
    pub fn target_region(&self) -> Result<LinearProgram> {
        let dict = &self.inst.dict;
        Ok(match &self.target {
            Target::TheoremArb { radius } => self
                .affine
                .constrain(LinearProgram::new(dict.n()).with_l1_bound(dict.dstar(), *radius)),
            Target::ArbitraryFace { sign, radius } => {
                let face = face_from_sign(dict, sign, *radius)?;
                self.affine.constrain(face.hrep())
            }
        })
    }
}

/// Minimum of `‖D*x‖₁` over `A` and a minimizer.
fn min_norm_on(dict: &Dictionary, affine: &AffineSubspace) -> Result<(f64, Vec<f64>)> {
    let n = dict.n();
    if affine.ambient() != n {
        return Err(Error::input("affine subspace lives in the wrong dimension"));
    }
    let loose = dict.norm(&affine.origin) + 1.0;
    let mut lp = affine.constrain(LinearProgram::new(n).with_l1_bound(dict.dstar(), loose));
    for j in n..lp.nvars() {
        lp.objective[j] = 1.0;
    }
    match lp::solve(&lp, dict.tol())? {
        LpOutcome::Optimal(sol) => Ok((sol.value, sol.x[..n].to_vec())),
        other => Err(Error::internal(format!(
            "norm minimization over an affine subspace ended with {:?}",
            other.status()
        ))),
    }
}

/// `∅ ≠ A ∩ B_r ⊂ ∂B_r`, i.e. the smallest value of `‖D*x‖₁` on `A` is `r`.
pub fn check_sphere_condition(dict: &Dictionary, affine: &AffineSubspace, radius: f64) -> Result<bool> {
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::input("radius must be finite and nonnegative"));
    }
    let (min, _) = min_norm_on(dict, affine)?;
    Ok((min - radius).abs() <= dict.tol().lp_tol * (1.0 + radius))
}

/// Builds `(Φ, y, λ)` with solution set `A ∩ B_r` and `Ker Φ = dir(A)`.
pub fn construct_theorem_arb(
    dict: &Dictionary,
    affine: &AffineSubspace,
    radius: f64,
    lambda: f64,
) -> Result<ConstructedInstance> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::input("lambda must be positive"));
    }
    if !check_sphere_condition(dict, affine, radius)? {
        return Err(Error::precondition(
            "the affine subspace must meet B_r only on its boundary (min of ‖D*x‖₁ over A must equal r)",
        ));
    }
    let tol = dict.tol();
    let n = dict.n();
    let phi = affine.normal_basis.transpose();
    let m = phi.nrows();

    let (anchor, beta, alpha, u) = if radius == 0.0 {
        let lp = affine.constrain(
            LinearProgram::new(n).eq_block(dict.dstar(), &vec![0.0; dict.p()]),
        );
        let x = match lp::solve(&lp, tol)? {
            LpOutcome::Optimal(sol) => sol.x,
            _ => return Err(Error::internal("A ∩ Ker D* is empty despite the sphere condition")),
        };
        (x, vec![0.0; m], Vec::new(), vec![0.0; dict.p()])
    } else {
        let (_, x_bar) = min_norm_on(dict, affine)?;
        let s_bar = sign_of(&dict.analyze(&x_bar), tol)?;
        let (beta, alpha) = cone_search(dict, &phi, &s_bar)?;
        let mut u = vec![0.0; dict.p()];
        for (s, a) in &alpha {
            for (ui, si) in u.iter_mut().zip(s.entries()) {
                *ui += a * f64::from(*si);
            }
        }
        (x_bar, beta, alpha, u)
    };

    let phi_x = &phi * Vector::from_column_slice(&anchor);
    let y: Vec<f64> = (0..m).map(|k| phi_x[k] + lambda * beta[k]).collect();
    let inst = ProblemInstance::new(dict.clone(), phi, y, lambda)?;
    Ok(ConstructedInstance {
        inst,
        affine: affine.clone(),
        target: Target::TheoremArb { radius },
        certificate: ConstructionCertificate {
            dual: DualCertificate { u },
            anchor,
            beta,
            alpha,
        },
    })
}

/// Finds `β ≠ 0` and `α ≥ 0`, `Σα = 1` with `Φ*β = Σ_{s ⪰ s̄} α_s D s` by
/// maximizing random linear functionals of `β`.
fn cone_search(dict: &Dictionary, phi: &Matrix, s_bar: &SignVector) -> Result<(Vec<f64>, Vec<(SignVector, f64)>)> {
    let tol = dict.tol();
    let free = s_bar.cosupport().len();
    if free > CONE_SEARCH_CAP {
        return Err(Error::precondition(format!(
            "cone search over 3^{free} signs exceeds the cap of 3^{CONE_SEARCH_CAP}"
        )));
    }
    let n = dict.n();
    let m = phi.nrows();
    let signs = s_bar.super_signs();
    let k = signs.len();
    let atoms: Vec<Vec<f64>> = signs.iter().map(|s| dict.synthesize(&s.as_f64())).collect();
    // variables: β (m), α (k)
    let mut region = LinearProgram::new(m + k);
    for row in 0..n {
        let mut r = vec![0.0; m + k];
        for b in 0..m {
            r[b] = phi[(b, row)];
        }
        for (j, atom) in atoms.iter().enumerate() {
            r[m + j] = -atom[row];
        }
        region = region.eq(&r, 0.0);
    }
    let mut simplex = vec![0.0; m + k];
    for v in simplex.iter_mut().skip(m) {
        *v = 1.0;
    }
    region = region.eq(&simplex, 1.0);
    for j in 0..k {
        let mut e = vec![0.0; m + k];
        e[m + j] = 1.0;
        region = region.ge(&e, 0.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..CONE_SEARCH_RETRIES {
        let g: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let sol = match lp::max_linear_over(&region, &g, tol)? {
            LpOutcome::Optimal(sol) => sol,
            LpOutcome::Infeasible(_) => {
                return Err(Error::internal(
                    "no cone combination of D s (s ⪰ s̄) lies in the row space of Phi",
                ))
            }
            LpOutcome::Unbounded => return Err(Error::internal("cone search LP is unbounded")),
        };
        let beta = sol.x[..m].to_vec();
        if norm_inf(&beta) > 1e3 * tol.lp_tol {
            let alpha = signs
                .iter()
                .zip(&sol.x[m..])
                .filter(|(_, &a)| a > 0.0)
                .map(|(s, &a)| (s.clone(), a))
                .collect();
            return Ok((beta, alpha));
        }
    }
    Err(Error::internal("cone search only found beta = 0"))
}

/// Builds `(Φ, y, λ)` with solution set `A ∩ F`, where `F` is the face of
/// `B_r` with maximal sign `s̄`. The first row of `Φ` is `(D s̄)*`, followed by
/// an orthonormal basis of `dir(A)^⊥`, and `y = Φx + λe₁`.
pub fn construct_arbitrary_face(
    dict: &Dictionary,
    s_bar: &SignVector,
    radius: f64,
    affine: &AffineSubspace,
    lambda: f64,
) -> Result<ConstructedInstance> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::input("lambda must be positive"));
    }
    if affine.ambient() != dict.n() {
        return Err(Error::input("affine subspace lives in the wrong dimension"));
    }
    let face = face_from_sign(dict, s_bar, radius)?;
    let tol = dict.tol();
    let meet = affine.constrain(face.hrep());
    let anchor = match lp::solve(&meet, tol)? {
        LpOutcome::Optimal(sol) => sol.x,
        LpOutcome::Infeasible(_) => {
            return Err(Error::precondition("the affine subspace does not meet the face"))
        }
        LpOutcome::Unbounded => return Err(Error::internal("feasibility LP reported unbounded")),
    };
    let n = dict.n();
    let m = affine.normal_basis.ncols();
    let mut phi = Matrix::zeros(1 + m, n);
    phi.row_mut(0).copy_from_slice(face.normal());
    for k in 0..m {
        for j in 0..n {
            phi[(1 + k, j)] = affine.normal_basis[(j, k)];
        }
    }
    let phi_x = &phi * Vector::from_column_slice(&anchor);
    let mut y: Vec<f64> = phi_x.iter().copied().collect();
    y[0] += lambda;
    let mut beta = vec![0.0; 1 + m];
    beta[0] = 1.0;
    let inst = ProblemInstance::new(dict.clone(), phi, y, lambda)?;
    Ok(ConstructedInstance {
        inst,
        affine: affine.clone(),
        target: Target::ArbitraryFace {
            sign: s_bar.clone(),
            radius,
        },
        certificate: ConstructionCertificate {
            dual: DualCertificate { u: s_bar.as_f64() },
            anchor,
            beta,
            alpha: Vec::new(),
        },
    })
}

/// Outcome of [`verify_construction`].
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    /// Largest support-function difference between the recovered and the
    /// intended solution sets over the probe directions.
    pub support_gap: f64,
    pub kernel_relation_ok: bool,
    pub certificate_residual: f64,
    pub certificate_is_subgradient: bool,
    pub recovered_max_sign: SignVector,
    pub recovered_dim: usize,
    pub extreme_points: Vec<Vec<f64>>,
}

/// Solves the constructed instance from scratch and compares its solution set
/// with the target along `±e_k` and `±D*_i`.
pub fn verify_construction(ci: &ConstructedInstance, tol: f64) -> Result<VerificationReport> {
    let inst = &ci.inst;
    let dict = &inst.dict;
    let tols = *dict.tol();
    let n = dict.n();
    let x = solve_admm(inst, tols.solver_tol, 50_000)?;
    let desc = describe_solution_set(inst, &x)?;
    let recovered = desc.region();
    let target = ci.target_region()?;

    let mut probes: Vec<Vec<f64>> = Vec::with_capacity(2 * (n + dict.p()));
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        probes.push(e);
    }
    for row in dict.dstar().row_iter() {
        probes.push(row.iter().copied().collect());
    }
    let negated: Vec<Vec<f64>> = probes.iter().map(|w| w.iter().map(|v| -v).collect()).collect();
    probes.extend(negated);

    let mut gap: f64 = 0.0;
    for w in &probes {
        let a = lp::support(&recovered, w, &tols)?;
        let b = lp::support(&target, w, &tols)?;
        let g = match (a, b) {
            (Some(a), Some(b)) if a.is_infinite() && b.is_infinite() => 0.0,
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        gap = gap.max(g);
    }

    let ker_phi = null_space_basis(&inst.phi, &tols)?;
    let kernel_relation_ok = match &ci.target {
        Target::TheoremArb { .. } => same_span(&ker_phi, &ci.affine.direction_basis),
        Target::ArbitraryFace { sign, .. } => {
            let normal = Matrix::from_row_slice(1, n, &dict.synthesize(&sign.as_f64()));
            let dirs_t = ci.affine.normal_basis.transpose();
            let expected = intersect_null_spaces(&[&normal, &dirs_t], &tols)?;
            same_span(&ker_phi, &expected) && span_contained(&ker_phi, &ci.affine.direction_basis)
        }
    };

    let anchor = &ci.certificate.anchor;
    let certificate_residual = ci.certificate.dual.stationarity(inst, anchor);
    let certificate_is_subgradient = ci.certificate.dual.is_subgradient(inst, anchor, 1e3 * tols.lp_tol)?;
    let extreme_points = if desc.compact {
        enumerate_extreme_solutions(inst, &desc)?
    } else {
        Vec::new()
    };
    let cert_ok = certificate_residual <= 1e3 * tols.lp_tol * inst.residual_scale();
    Ok(VerificationReport {
        passed: gap <= tol && kernel_relation_ok && cert_ok && certificate_is_subgradient,
        support_gap: gap,
        kernel_relation_ok,
        certificate_residual,
        certificate_is_subgradient,
        recovered_max_sign: desc.max_sign,
        recovered_dim: desc.dim,
        extreme_points,
    })
}

/// Support-function distance between the solution sets of two instances on
/// the same dictionary, over `±e_k` and `±D*_i`.
pub fn solution_set_gap(a: &ProblemInstance, b: &ProblemInstance) -> Result<f64> {
    let tols = *a.dict.tol();
    let n = a.n();
    let da = describe_solution_set(a, &solve_admm(a, tols.solver_tol, 50_000)?)?;
    let db = describe_solution_set(b, &solve_admm(b, tols.solver_tol, 50_000)?)?;
    let (ra, rb) = (da.region(), db.region());
    let mut gap: f64 = 0.0;
    let mut probes: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            e
        })
        .collect();
    probes.extend(a.dict.dstar().row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()));
    for w in probes {
        let neg: Vec<f64> = w.iter().map(|v| -v).collect();
        for dir in [w, neg] {
            let g = match (lp::support(&ra, &dir, &tols)?, lp::support(&rb, &dir, &tols)?) {
                (Some(x), Some(y)) if x.is_infinite() && y.is_infinite() => 0.0,
                (Some(x), Some(y)) => (x - y).abs(),
                _ => f64::INFINITY,
            };
            gap = gap.max(g);
        }
    }
    Ok(gap)
}
