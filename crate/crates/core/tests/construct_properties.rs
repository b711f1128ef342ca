use proptest::prelude::*;

use l1geo::ballgeo::{enumerate_feasible_signs, is_feasible};
use l1geo::construct::{
    check_sphere_condition, construct_arbitrary_face, construct_theorem_arb, solution_set_gap, verify_construction,
    AffineSubspace,
};
use l1geo::linalg::{null_space_basis, Matrix, Tolerances};
use l1geo::signpat::{leq, sign_of};
use l1geo::{Dictionary, SignVector};

/// A dictionary, one of its nonzero feasible signs, a point of the
/// corresponding face of the unit ball, and random vectors for `A`.
#[derive(Debug, Clone)]
struct Setup {
    dict: Dictionary,
    sign: SignVector,
    point: Vec<f64>,
    extra: Vec<Vec<f64>>,
}

fn setup() -> impl Strategy<Value = Setup> {
    (2usize..=3, 1usize..=4)
        .prop_flat_map(|(n, p)| {
            (
                proptest::collection::vec(-2.0f64..2.0, n * p),
                any::<prop::sample::Index>(),
                proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, n), 0..n),
            )
                .prop_map(move |(d, pick, extra)| (n, p, d, pick, extra))
        })
        .prop_filter_map("no usable face", |(n, p, d, pick, extra)| {
            let d = Matrix::from_row_slice(n, p, &d);
            if d.amax() < 1e-2 {
                return None;
            }
            let dict = Dictionary::new(d, Tolerances::default()).ok()?;
            let signs: Vec<SignVector> =
                enumerate_feasible_signs(&dict).ok()?.into_iter().filter(|s| !s.is_zero()).collect();
            if signs.is_empty() {
                return None;
            }
            let sign = pick.get(&signs).clone();
            let w = is_feasible(&dict, &sign, None).ok()?.witness?;
            let r = dict.norm(&w);
            let point = w.iter().map(|v| v / r).collect();
            Some(Setup { dict, sign, point, extra })
        })
}

fn normals(s: &Setup) -> Matrix {
    let n = s.dict.n();
    Matrix::from_fn(n, s.extra.len(), |i, k| s.extra[k][i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn face_construction_round_trip(s in setup()) {
        let tol = *s.dict.tol();
        let a = AffineSubspace::from_normals(s.point.clone(), &normals(&s), &tol).unwrap();
        let ci = construct_arbitrary_face(&s.dict, &s.sign, 1.0, &a, 1.0).unwrap();
        let report = verify_construction(&ci, 1e-6).unwrap();
        prop_assert!(report.passed, "{:?}", report);
        prop_assert!(report.kernel_relation_ok);
        prop_assert!(leq(&report.recovered_max_sign, &s.sign).unwrap());
    }

    #[test]
    fn lambda_is_absorbed_into_y(s in setup()) {
        let tol = *s.dict.tol();
        let a = AffineSubspace::from_normals(s.point.clone(), &normals(&s), &tol).unwrap();
        let base = construct_arbitrary_face(&s.dict, &s.sign, 1.0, &a, 1.0).unwrap();
        for lambda in [0.5, 2.0] {
            let ci = construct_arbitrary_face(&s.dict, &s.sign, 1.0, &a, lambda).unwrap();
            prop_assert_eq!(&ci.inst.phi, &base.inst.phi);
            let gap = solution_set_gap(&base.inst, &ci.inst).unwrap();
            prop_assert!(gap <= 1e-6, "lambda {lambda}: gap {gap:e}");
        }
    }

    #[test]
    fn theorem_construction_on_a_tangent_slice(s in setup(), lambda in 0.3f64..3.0) {
        let tol = *s.dict.tol();
        let n = s.dict.n();
        // directions inside the supporting hyperplane of the face
        let normal = s.dict.synthesize(&s.sign.as_f64());
        let nn: f64 = normal.iter().map(|v| v * v).sum();
        let dirs = Matrix::from_fn(n, s.extra.len(), |i, k| {
            let v = &s.extra[k];
            let dot: f64 = v.iter().zip(&normal).map(|(a, b)| a * b).sum();
            v[i] - dot / nn * normal[i]
        });
        let a = AffineSubspace::from_directions(s.point.clone(), &dirs, &tol).unwrap();
        prop_assert!(check_sphere_condition(&s.dict, &a, 1.0).unwrap());
        let ci = construct_theorem_arb(&s.dict, &a, 1.0, lambda).unwrap();
        prop_assert_eq!(null_space_basis(&ci.inst.phi, &tol).unwrap().ncols(), a.dim());

        // the cone certificate
        let c = &ci.certificate;
        let total: f64 = c.alpha.iter().map(|(_, w)| w).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert!(c.alpha.iter().all(|(_, w)| *w >= 0.0));
        let phi_beta = ci.inst.phi.transpose() * nalgebra::DVector::from_column_slice(&c.beta);
        let mut cone = vec![0.0; n];
        for (sv, w) in &c.alpha {
            for (k, v) in s.dict.synthesize(&sv.as_f64()).iter().enumerate() {
                cone[k] += w * v;
            }
        }
        let mismatch = (0..n).map(|k| (phi_beta[k] - cone[k]).abs()).fold(0.0, f64::max);
        prop_assert!(mismatch <= tol.lp_tol, "Phi* beta off the cone by {mismatch:e}");
        let s_bar = sign_of(&s.dict.analyze(&c.anchor), &tol).unwrap();
        for i in 0..s_bar.len() {
            match s_bar.get(i) {
                0 => prop_assert!(c.dual.u[i].abs() <= 1.0 + 1e-12),
                v => prop_assert!((c.dual.u[i] - f64::from(v)).abs() <= 1e-9),
            }
        }

        let report = verify_construction(&ci, 1e-6).unwrap();
        prop_assert!(report.passed, "{:?}", report);
    }
}
