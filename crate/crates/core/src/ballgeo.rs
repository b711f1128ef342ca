//! Face structure of the unit ball `B_r = {x : ‖D*x‖₁ ≤ r}`.
//!
//! Exposed faces are indexed by their maximal sign `s̄`:
//!
//! ```text
//! F = { x : ⟨D s̄, x⟩ = r,  D*_J̄ x = 0,  diag(s̄_Ī) D*_Ī x ≥ 0 }
//! dir(F) = (D s̄)^⊥ ∩ Ker D*_J̄
//! ```
//!
//! where `J̄` is the cosupport of `s̄` and `Ī` its support. Inclusion of faces
//! is exactly the sub-sign order on their maximal signs, so the face lattice
//! is computed by enumerating feasible signs with one LP each.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, check_finite, intersect_null_spaces, norm_1, null_space_basis, select_rows, Matrix, Tolerances, Vector,
};
use crate::lp::{self, FarkasCertificate, LinearProgram, LpOutcome};
use crate::signpat::{leq, poset_cover_edges, sign_of, SignPoset, SignVector};

/// Largest `p` accepted by exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 12;
/// Largest `p` accepted by the randomized oracle (it visits all `2^p` cosupports).
pub const BRUTE_FORCE_CAP: usize = 10;

/// Analysis operator `D` (`n × p`, atoms as columns) with cached subspaces.
#[derive(Debug, Clone)]
pub struct Dictionary {
    d: Matrix,
    dstar: Matrix,
    /// Orthonormal basis of `Ker D* ⊆ R^n`.
    ker_dstar: Matrix,
    /// Orthonormal basis of `Ker D ⊆ R^p`.
    ker_d: Matrix,
    /// Orthogonal projector onto `(Ker D*)^⊥`.
    range_projector: Matrix,
    tol: Tolerances,
}

impl Dictionary {
    pub fn new(d: Matrix, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        if d.nrows() == 0 || d.ncols() == 0 {
            return Err(Error::input("dictionary must have at least one row and one column"));
        }
        check_finite(&d, "dictionary")?;
        let dstar = d.transpose();
        let ker_dstar = null_space_basis(&dstar, &tol)?;
        let ker_d = null_space_basis(&d, &tol)?;
        let n = d.nrows();
        let range_projector = Matrix::identity(n, n) - linalg::projector(&ker_dstar, n);
        Ok(Dictionary {
            d,
            dstar,
            ker_dstar,
            ker_d,
            range_projector,
            tol,
        })
    }

    /// Builds from the rows of `D*` (each row is one atom).
    pub fn from_dstar(dstar: Matrix, tol: Tolerances) -> Result<Self> {
        Dictionary::new(dstar.transpose(), tol)
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    /// Number of atoms.
    pub fn p(&self) -> usize {
        self.d.ncols()
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn dstar(&self) -> &Matrix {
        &self.dstar
    }

    pub fn ker_dstar(&self) -> &Matrix {
        &self.ker_dstar
    }

    pub fn ker_d(&self) -> &Matrix {
        &self.ker_d
    }

    pub fn range_projector(&self) -> &Matrix {
        &self.range_projector
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    /// `D* x`.
    pub fn analyze(&self, x: &[f64]) -> Vec<f64> {
        (&self.dstar * Vector::from_column_slice(x)).iter().copied().collect()
    }

    /// `D s` for a sign (or any coefficient) vector.
    pub fn synthesize(&self, u: &[f64]) -> Vec<f64> {
        (&self.d * Vector::from_column_slice(u)).iter().copied().collect()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        norm_1(&self.analyze(x))
    }

    /// Rows of `D*` indexed by `rows`.
    pub fn dstar_rows(&self, rows: &[usize]) -> Matrix {
        select_rows(&self.dstar, rows)
    }

    fn check_sign(&self, s: &SignVector) -> Result<()> {
        if s.len() != self.p() {
            return Err(Error::input(format!(
                "sign has length {}, dictionary has {} atoms",
                s.len(),
                self.p()
            )));
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::input(format!(
                "point has length {}, ambient dimension is {}",
                x.len(),
                self.n()
            )));
        }
        linalg::check_finite_slice(x, "point")
    }
}

/// Outcome of the sign feasibility LP.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    /// A point with `sign(D* x) = s` when feasible.
    pub witness: Option<Vec<f64>>,
    pub certificate: Option<FarkasCertificate>,
}

/// The LP region `{D*_J x = 0, (D*x)_i ≥ 1 on s_i = +1, (D*x)_i ≤ -1 on s_i = -1}`.
fn sign_region(dict: &Dictionary, s: &SignVector) -> LinearProgram {
    let mut lp = LinearProgram::new(dict.n());
    for (i, row) in dict.dstar.row_iter().enumerate() {
        let r: Vec<f64> = row.iter().copied().collect();
        lp = match s.get(i) {
            0 => lp.eq(&r, 0.0),
            1 => lp.ge(&r, 1.0),
            _ => lp.le(&r, -1.0),
        };
    }
    lp
}

/// Decides whether `s = sign(D* x)` for some `x`. The verdict does not depend
/// on `objective`, which only biases which witness is returned.
pub fn is_feasible(dict: &Dictionary, s: &SignVector, objective: Option<&[f64]>) -> Result<FeasibilityVerdict> {
    dict.check_sign(s)?;
    let tol = dict.tol();
    let region = sign_region(dict, s);
    let mut outcome = match objective {
        Some(c) if c.len() != dict.n() => {
            return Err(Error::input("objective length differs from the ambient dimension"))
        }
        Some(c) => lp::solve(&region.clone().with_objective(c.to_vec()), tol)?,
        None => lp::solve(&region, tol)?,
    };
    if matches!(outcome, LpOutcome::Unbounded) {
        outcome = lp::solve(&region, tol)?;
    }
    match outcome {
        LpOutcome::Optimal(sol) => {
            let got = sign_of(&dict.analyze(&sol.x), tol)?;
            if &got != s {
                return Err(Error::internal(format!("feasibility witness has sign {got}, expected {s}")));
            }
            Ok(FeasibilityVerdict {
                feasible: true,
                witness: Some(sol.x),
                certificate: None,
            })
        }
        LpOutcome::Infeasible(cert) => Ok(FeasibilityVerdict {
            feasible: false,
            witness: None,
            certificate: Some(cert),
        }),
        LpOutcome::Unbounded => Err(Error::internal("pure feasibility LP reported unbounded")),
    }
}

/// Every feasible sign, in lexicographic order. Signs are tested in pairs
/// `{s, -s}` since the ball is centrally symmetric.
pub fn enumerate_feasible_signs(dict: &Dictionary) -> Result<Vec<SignVector>> {
    enumerate_feasible_signs_capped(dict, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_feasible_signs_capped(dict: &Dictionary, cap: usize) -> Result<Vec<SignVector>> {
    let p = dict.p();
    if p > cap {
        return Err(Error::precondition(format!(
            "refusing to enumerate 3^{p} signs (cap is p <= {cap})"
        )));
    }
    let canonical: Vec<SignVector> = SignVector::all(p)
        .filter(|s| s.entries().iter().find(|&&e| e != 0).is_none_or(|&e| e == 1))
        .collect();
    let verdicts: Vec<Result<bool>> = canonical
        .par_iter()
        .map(|s| is_feasible(dict, s, None).map(|v| v.feasible))
        .collect();
    let mut out = Vec::new();
    for (s, v) in canonical.into_iter().zip(verdicts) {
        if v? {
            if !s.is_zero() {
                out.push(s.negated());
            }
            out.push(s);
        }
    }
    out.sort();
    Ok(out)
}

/// Stacked constraints whose common kernel is `dir(F)` for the face of `s`.
fn direction_constraints(dict: &Dictionary, s: &SignVector) -> (Matrix, Matrix) {
    let ds = dict.synthesize(&s.as_f64());
    let normal = Matrix::from_row_slice(1, dict.n(), &ds);
    (normal, dict.dstar_rows(&s.cosupport()))
}

/// `(Ker D*)^⊥ ∩ (D s)^⊥ ∩ Ker D*_J = {0}` with `J = cosupp(s)`.
pub fn is_pre_extremal(dict: &Dictionary, s: &SignVector) -> Result<bool> {
    dict.check_sign(s)?;
    let (normal, zero_rows) = direction_constraints(dict, s);
    let u_t = dict.ker_dstar.transpose();
    let kernel = intersect_null_spaces(&[&u_t, &normal, &zero_rows], dict.tol())?;
    Ok(kernel.ncols() == 0)
}

/// Feasible, pre-extremal and nonzero: the sign of a vertex of the ball
/// modulo `Ker D*`. The zero sign passes the algebraic test trivially but
/// indexes the interior point, not a face of the sphere.
pub fn is_extremal(dict: &Dictionary, s: &SignVector) -> Result<bool> {
    if s.is_zero() {
        dict.check_sign(s)?;
        return Ok(false);
    }
    Ok(is_pre_extremal(dict, s)? && is_feasible(dict, s, None)?.feasible)
}

/// An exposed face of `B_r`, identified by its maximal sign.
#[derive(Debug, Clone)]
pub struct Face {
    pub radius: f64,
    pub max_sign: SignVector,
    /// Orthonormal basis of `dir(F)`.
    pub direction_basis: Matrix,
    pub dim: usize,
    normal: Vec<f64>,
    dstar: Matrix,
}

impl Face {
    /// `D s̄`, the outer normal of the supporting hyperplane.
    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    /// Half-space representation as an LP region over `x`.
    pub fn hrep(&self) -> LinearProgram {
        let n = self.normal.len();
        let mut lp = LinearProgram::new(n).eq(&self.normal, self.radius);
        for i in 0..self.max_sign.len() {
            let row: Vec<f64> = self.dstar.row(i).iter().copied().collect();
            lp = match self.max_sign.get(i) {
                0 => lp.eq(&row, 0.0),
                s => {
                    let oriented: Vec<f64> = row.iter().map(|v| v * f64::from(s)).collect();
                    lp.ge(&oriented, 0.0)
                }
            };
        }
        lp
    }

    /// Membership in the half-space representation up to `slack`.
    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        let xv = Vector::from_column_slice(x);
        let on_plane = (self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.radius).abs()
            <= slack * (1.0 + self.radius);
        let dx = &self.dstar * xv;
        on_plane
            && (0..self.max_sign.len()).all(|i| match self.max_sign.get(i) {
                0 => dx[i].abs() <= slack,
                s => f64::from(s) * dx[i] >= -slack,
            })
    }
}

/// The face `B_r ∩ {⟨D s̄, x⟩ = r}`.
pub fn face_from_sign(dict: &Dictionary, s: &SignVector, radius: f64) -> Result<Face> {
    dict.check_sign(s)?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::input("face radius must be positive and finite"));
    }
    if s.is_zero() {
        return Err(Error::precondition("the zero sign does not index a face of the sphere"));
    }
    if !is_feasible(dict, s, None)?.feasible {
        return Err(Error::precondition(format!("sign {s} is not feasible; its face is empty")));
    }
    let (normal_row, zero_rows) = direction_constraints(dict, s);
    let direction_basis = intersect_null_spaces(&[&normal_row, &zero_rows], dict.tol())?;
    Ok(Face {
        radius,
        max_sign: s.clone(),
        dim: direction_basis.ncols(),
        direction_basis,
        normal: normal_row.iter().copied().collect(),
        dstar: dict.dstar.clone(),
    })
}

/// Smallest face of `B_r` containing `x` in its relative interior, with
/// `r = ‖D*x‖₁`.
pub fn minimal_face_of_point(dict: &Dictionary, x: &[f64]) -> Result<Face> {
    dict.check_point(x)?;
    let dx = dict.analyze(x);
    let r = norm_1(&dx);
    let s = sign_of(&dx, dict.tol())?;
    if s.is_zero() {
        return Err(Error::precondition("point lies in Ker D*; it is on no face of a sphere"));
    }
    face_from_sign(dict, &s, r)
}

/// `F1 ⊆ F2`, decided by the sign order on maximal signs.
pub fn face_contains(f1: &Face, f2: &Face) -> Result<bool> {
    leq(&f1.max_sign, &f2.max_sign)
}

/// The feasible-sign poset with per-node annotations.
#[derive(Debug, Clone, Serialize)]
pub struct HasseDiagram {
    pub poset: SignPoset,
    /// Dimension of the face of each element (`dim Ker D*` for the zero sign).
    pub face_dims: Vec<usize>,
    pub extremal: Vec<bool>,
    pub maximal: Vec<bool>,
}

impl HasseDiagram {
    pub fn len(&self) -> usize {
        self.poset.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poset.elements.is_empty()
    }

    pub fn extremal_count(&self) -> usize {
        self.extremal.iter().filter(|&&e| e).count()
    }

    /// Graphviz rendering. Nodes follow the lexicographic sign order and edges
    /// point from the smaller sign to the larger one.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph hasse {\n  rankdir=BT;\n  node [shape=box, fontname=\"monospace\"];\n");
        for (i, s) in self.poset.elements.iter().enumerate() {
            let mut classes = Vec::new();
            if self.extremal[i] {
                classes.push("extremal");
            }
            if self.maximal[i] {
                classes.push("maximal");
            }
            let style = match (self.extremal[i], self.maximal[i]) {
                (true, _) => ", style=filled, fillcolor=\"#b07cc6\"",
                (false, true) => ", style=filled, fillcolor=\"#f3d250\"",
                _ => "",
            };
            let class = if classes.is_empty() {
                String::new()
            } else {
                format!(", class=\"{}\"", classes.join(" "))
            };
            let _ = writeln!(
                out,
                "  n{i} [label=\"{s}\\ndim {}\"{class}{style}];",
                self.face_dims[i]
            );
        }
        for &(a, b) in &self.poset.cover_edges {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
        out.push_str("}\n");
        out
    }
}

/// Hasse diagram of the feasible signs.
pub fn hasse_diagram(dict: &Dictionary) -> Result<HasseDiagram> {
    let feasible = enumerate_feasible_signs(dict)?;
    let poset = poset_cover_edges(&feasible)?;
    let n = poset.elements.len();
    let face_dims = poset
        .elements
        .iter()
        .map(|s| {
            if s.is_zero() {
                Ok(dict.ker_dstar.ncols())
            } else {
                let (normal, zero_rows) = direction_constraints(dict, s);
                Ok(intersect_null_spaces(&[&normal, &zero_rows], dict.tol())?.ncols())
            }
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut extremal = vec![false; n];
    for i in poset.minimal_nonzero() {
        extremal[i] = true;
    }
    let mut maximal = vec![false; n];
    for i in poset.maximal() {
        maximal[i] = true;
    }
    Ok(HasseDiagram {
        poset,
        face_dims,
        extremal,
        maximal,
    })
}

/// Sign of `D*x` with the rows of `zero` forced to zero, or `None` when some
/// other entry is within `sign_tol · ‖D*‖∞ ‖x‖∞` of zero.
fn clear_sign(dict: &Dictionary, x: &Vector, zero: impl Fn(usize) -> bool) -> Option<SignVector> {
    let v = dict.dstar() * x;
    let dnorm = dict.dstar().row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
    let floor = dict.tol().sign_tol * dnorm * x.amax();
    let mut entries = vec![0i8; v.len()];
    for (i, &t) in v.iter().enumerate() {
        if zero(i) {
            continue;
        }
        if !(t.abs() > floor) {
            return None;
        }
        entries[i] = if t > 0.0 { 1 } else { -1 };
    }
    SignVector::new(entries).ok()
}

/// Randomized inner approximation of the feasible signs, independent of the
/// LP machinery.
///
/// Cosupports `J` are visited from the largest down. Each stratum gets
/// `samples_per_stratum` Gaussian draws `g` in `Ker D*_J` (orthonormal basis,
/// standard normal coefficients). Draws are first spent on pushing a
/// representative `x` of each sign already found in a stratum `J ∪ {i}` to
/// `x ± εg`, which lands on both sides of that facet; the rest are plain
/// samples. A sign is recorded only when every entry off `J` clears the sign
/// tolerance, so the result is always a subset of the feasible signs.
pub fn brute_force_feasible_signs(dict: &Dictionary, samples_per_stratum: usize, seed: u64) -> Result<Vec<SignVector>> {
    let p = dict.p();
    if p > BRUTE_FORCE_CAP {
        return Err(Error::precondition(format!(
            "randomized oracle visits 2^{p} cosupports (cap is p <= {BRUTE_FORCE_CAP})"
        )));
    }
    let tol = dict.tol();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // sign -> a point realizing it
    let mut found: std::collections::BTreeMap<SignVector, Vector> = std::collections::BTreeMap::new();
    found.insert(SignVector::zeros(p), Vector::zeros(dict.n()));
    let mut masks: Vec<usize> = (0..1usize << p).collect();
    masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    for mask in masks {
        let on_j = |i: usize| mask >> i & 1 == 1;
        let zero_rows: Vec<usize> = (0..p).filter(|&i| on_j(i)).collect();
        let basis = null_space_basis(&dict.dstar_rows(&zero_rows), tol)?;
        if basis.ncols() == 0 {
            continue;
        }
        let draw = |rng: &mut ChaCha8Rng| -> Vector {
            let coef = Vector::from_fn(basis.ncols(), |_, _| StandardNormal.sample(rng));
            &basis * coef
        };
        let mut seeds: Vec<(SignVector, Vector)> = found
            .iter()
            .filter(|(s, _)| {
                let cosupp = s.cosupport();
                cosupp.len() == zero_rows.len() + 1 && zero_rows.iter().all(|i| cosupp.contains(i))
            })
            .map(|(s, x)| (s.clone(), x.clone()))
            .collect();
        seeds.shuffle(&mut rng);
        seeds.truncate(samples_per_stratum / 2);
        let mut budget = samples_per_stratum;
        let mut new = Vec::new();
        for (s, x) in seeds {
            let g = draw(&mut rng);
            let (v, w) = (dict.dstar() * &x, dict.dstar() * &g);
            let room = s.support().iter().fold(f64::INFINITY, |m, &i| m.min(v[i].abs()));
            let push = w.amax();
            budget -= 2;
            if push == 0.0 {
                continue;
            }
            let eps = if room.is_finite() { 0.5 * room / push } else { 1.0 };
            for sgn in [1.0, -1.0] {
                let y = &x + &g * (sgn * eps);
                if let Some(s) = clear_sign(dict, &y, on_j) {
                    new.push((s, y));
                }
            }
        }
        for _ in 0..budget {
            let x = draw(&mut rng);
            if let Some(s) = clear_sign(dict, &x, on_j) {
                new.push((s, x));
            }
        }
        for (s, x) in new {
            found.entry(s).or_insert(x);
        }
    }
    Ok(found.into_keys().collect())
}
