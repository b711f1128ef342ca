//! Polyhedral geometry of analysis-ℓ¹ regularization.
//!
//! The unit ball of `x ↦ ‖D*x‖₁` is a polyhedron whose faces are indexed by
//! feasible sign vectors. This crate enumerates those signs, builds faces and
//! their Hasse diagram ([`ballgeo`]), describes the solution set of
//! `min ½‖y − Φx‖² + λ‖D*x‖₁` as a face slice ([`solset`]), and runs the
//! inverse problem of building `(Φ, y, λ)` for a prescribed slice
//! ([`construct`]). Everything is LP-driven through a small dense simplex
//! solver ([`lp`]).

pub mod ballgeo;
pub mod construct;
pub mod dict;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod signpat;
pub mod solset;

pub use ballgeo::{
    brute_force_feasible_signs, enumerate_feasible_signs, face_from_sign, hasse_diagram, is_extremal,
    is_feasible, is_pre_extremal, Dictionary, Face, HasseDiagram,
};
pub use construct::{
    check_sphere_condition, construct_arbitrary_face, construct_theorem_arb, verify_construction, AffineSubspace,
    ConstructedInstance, VerificationReport,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, Tolerances, Vector};
pub use lp::{LinearProgram, LpOutcome};
pub use signpat::{SignPoset, SignVector};
pub use solset::{
    describe_solution_set, enumerate_extreme_solutions, maximal_sign, solve_admm, DualCertificate,
    ProblemInstance, SolutionSetDescription,
};
