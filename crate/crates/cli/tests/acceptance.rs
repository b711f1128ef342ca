//! Acceptance criteria, one PASS/FAIL line each.

use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use l1geo::ballgeo::{
    brute_force_feasible_signs, enumerate_feasible_signs, face_from_sign, is_extremal, is_feasible,
};
use l1geo::construct::{construct_arbitrary_face, solution_set_gap, verify_construction, AffineSubspace};
use l1geo::dict::{difference_dict, identity_dict, incidence_dict, complete_graph_edges};
use l1geo::io;
use l1geo::linalg::{intersect_null_spaces, Matrix, Tolerances};
use l1geo::lp::{self, LinearProgram, LpOutcome};
use l1geo::signpat::leq;
use l1geo::solset::{
    coordinate_bounds, describe_solution_set, enumerate_extreme_solutions, solution_hasse, solve_admm,
    solve_admm_with, AdmmConfig,
};
use l1geo::{Dictionary, ProblemInstance, SignVector};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn close(a: &[f64], b: &[f64], eps: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= eps)
}

fn k4() -> Dictionary {
    incidence_dict(&complete_graph_edges(4), 4).unwrap()
}

fn setting3d() -> ProblemInstance {
    let text = std::fs::read_to_string(data("setting3d.json")).unwrap();
    io::parse_instance(&text, Tolerances::default()).unwrap()
}

fn sv(s: &str) -> SignVector {
    s.parse().unwrap()
}

/// 100 dictionaries, `n ≤ 4`, `p ≤ 5`, standard normal entries, seed 0.
fn random_dicts() -> Vec<Dictionary> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    (0..100)
        .map(|_| {
            let n = rng.random_range(1..=4);
            let p = rng.random_range(1..=5);
            let d = Matrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
            Dictionary::new(d, Tolerances::default()).unwrap()
        })
        .collect()
}

fn extremal_signs(dict: &Dictionary) -> Vec<SignVector> {
    enumerate_feasible_signs(dict)
        .unwrap()
        .into_iter()
        .filter(|s| is_extremal(dict, s).unwrap())
        .collect()
}

fn c1_k4_enumeration() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_l1geo"))
        .args(["signs", "enumerate", "--dict", &data("k4.csv")])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(out.status.success(), "exit status {:?}", out.status.code());
    let stdout = String::from_utf8_lossy(&out.stdout);
    ensure!(stdout.contains("feasible: 75 / 729"), "unexpected output: {}", stdout.lines().next().unwrap_or(""));
    ensure!(stdout.lines().any(|l| l == "extremal: 14"), "extremal count line missing");
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("75 / 729 feasible, 14 extremal, {:.2} s", elapsed.as_secs_f64()))
}

fn c2_k4_extremal_patterns() -> Outcome {
    let halves = ["+++000", "-00++0", "0-0-0+", "00-0--", "0++++0", "+0+-0+", "++00--"];
    let mut expected: Vec<SignVector> = halves.iter().flat_map(|s| [sv(s), sv(s).negated()]).collect();
    expected.sort();
    let got = extremal_signs(&k4());
    ensure!(got == expected, "extremal signs differ: {got:?}");
    let pairs = got.iter().filter(|s| got.contains(&s.negated())).count() / 2;
    ensure!(pairs == 7, "{pairs} centrosymmetric pairs");
    Ok("14 signs in 7 centrosymmetric pairs, exact".into())
}

fn c3_setting3d() -> Outcome {
    let inst = setting3d();
    let x = solve_admm(&inst, inst.tol().solver_tol, 50_000).map_err(|e| e.to_string())?;
    let desc = describe_solution_set(&inst, &x).map_err(|e| e.to_string())?;
    ensure!(desc.max_sign == sv("+++"), "max sign {}", desc.max_sign);
    ensure!(desc.dim == 1, "dim {}", desc.dim);
    ensure!(desc.compact, "not compact");
    let ext = enumerate_extreme_solutions(&inst, &desc).map_err(|e| e.to_string())?;
    ensure!(ext.len() == 2, "{} extreme points", ext.len());
    for target in [[0.0, 0.5, 0.0], [0.0, 0.0, 0.5]] {
        ensure!(ext.iter().any(|e| close(e, &target, 1e-6)), "missing extreme point {target:?}");
    }
    let hasse = solution_hasse(&inst, &desc).map_err(|e| e.to_string())?;
    let mut nodes: Vec<String> = hasse.elements.iter().map(|s| s.to_string()).collect();
    nodes.sort();
    ensure!(nodes == ["+++", "+0+", "0++"], "hasse nodes {nodes:?}");
    let (lo, hi) = coordinate_bounds(&desc, &[1.0, 0.0, 0.0], inst.tol()).map_err(|e| e.to_string())?;
    ensure!(lo.abs() <= 1e-7 && hi.abs() <= 1e-7, "x1 range [{lo}, {hi}]");
    Ok("s = +++, dim 1, compact, extremes (0,1/2,0) (0,0,1/2), x1 in [0,0]".into())
}

fn tv3_plane() -> AffineSubspace {
    let normal = Matrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
    AffineSubspace::from_normals(vec![1.0, 1.0, 1.0], &normal, &Tolerances::default()).unwrap()
}

fn c4_tv3_construction() -> Outcome {
    let dict = difference_dict(3).unwrap();
    let ci = construct_arbitrary_face(&dict, &sv("-+"), 1.0, &tv3_plane(), 1.0).map_err(|e| e.to_string())?;
    let phi = Matrix::from_row_slice(2, 3, &[1., -2., 1., 0., 1., 0.]);
    let phi_err = (&ci.inst.phi - &phi).amax();
    ensure!(phi_err <= 1e-12, "Phi off by {phi_err:e}: {}", ci.inst.phi);
    ensure!(close(&ci.inst.y, &[2.0, 1.0], 1e-12), "y = {:?}", ci.inst.y);
    let report = verify_construction(&ci, 1e-6).map_err(|e| e.to_string())?;
    ensure!(report.passed, "verification failed: {report:?}");
    let ext = &report.extreme_points;
    ensure!(ext.len() == 2, "{} extreme points", ext.len());
    for target in [[1.0, 1.0, 2.0], [2.0, 1.0, 1.0]] {
        ensure!(ext.iter().any(|e| close(e, &target, 1e-6)), "missing extreme point {target:?}");
    }
    Ok(format!("Phi, y reproduced (err {phi_err:.1e}); verification PASS, extremes (1,1,2) (2,1,1)"))
}

fn c5_identity_law() -> Outcome {
    for n in 2..=5 {
        let d = identity_dict(n).unwrap();
        let feasible = enumerate_feasible_signs(&d).unwrap();
        ensure!(feasible.len() == 3usize.pow(n as u32), "n = {n}: {} feasible", feasible.len());
        let ext = feasible.iter().filter(|s| is_extremal(&d, s).unwrap()).count();
        ensure!(ext == 2 * n, "n = {n}: {ext} extremal");
    }
    Ok("3^n feasible and 2n extremal for n = 2..5".into())
}

fn c6_oracle_equivalence() -> Outcome {
    let mut equal = 0;
    for (k, d) in random_dicts().iter().enumerate() {
        let lp_signs = enumerate_feasible_signs(d).unwrap();
        let oracle = brute_force_feasible_signs(d, 200, 0).unwrap();
        ensure!(
            oracle.iter().all(|s| lp_signs.binary_search(s).is_ok()),
            "dictionary {k}: oracle found a sign the LP rejects"
        );
        if oracle.len() == lp_signs.len() {
            equal += 1;
        }
    }
    ensure!(equal >= 95, "only {equal} / 100 equal");
    Ok(format!("oracle subset on 100 / 100, equal on {equal} / 100"))
}

/// Point in the relative interior of the face `s` of the unit ball.
fn face_ri_point(dict: &Dictionary, s: &SignVector) -> Vec<f64> {
    let w = is_feasible(dict, s, None).unwrap().witness.unwrap();
    let r = dict.norm(&w);
    w.iter().map(|v| v / r).collect()
}

fn c7_order_isomorphism() -> Outcome {
    let mut dicts: Vec<Dictionary> = (2..=5).map(|n| identity_dict(n).unwrap()).collect();
    dicts.push(difference_dict(3).unwrap());
    dicts.push(setting3d().dict);
    dicts.extend(random_dicts());
    let mut pairs = 0usize;
    for (k, d) in dicts.iter().enumerate() {
        if d.p() > 5 {
            continue;
        }
        let signs: Vec<SignVector> =
            enumerate_feasible_signs(d).unwrap().into_iter().filter(|s| !s.is_zero()).collect();
        let faces: Vec<_> = signs.iter().map(|s| face_from_sign(d, s, 1.0).unwrap()).collect();
        let points: Vec<Vec<f64>> = signs.iter().map(|s| face_ri_point(d, s)).collect();
        for (i, a) in signs.iter().enumerate() {
            for (j, b) in signs.iter().enumerate() {
                let included = faces[j].contains(&points[i], 1e-9);
                ensure!(
                    included == leq(a, b).unwrap(),
                    "dictionary {k}: F({a}) ⊆ F({b}) is {included} but sign order says {}",
                    !included
                );
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} face pairs agree with the sign order"))
}

fn c8_constancy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst_phi: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for k in 0..50 {
        let n = rng.random_range(3..=5);
        let q = rng.random_range(1..n);
        let p = rng.random_range(2..=5);
        let d = Matrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let phi = Matrix::from_fn(q, n, |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (0..q).map(|_| StandardNormal.sample(&mut rng)).collect();
        let lambda = rng.random_range(0.1..1.0);
        let dict = Dictionary::new(d, Tolerances::default()).unwrap();
        let inst = ProblemInstance::new(dict, phi, y, lambda).unwrap();
        let mut sols = Vec::new();
        for _ in 0..2 {
            let start: Vec<f64> = random_objective(&mut rng, n).iter().map(|v| 3.0 * v).collect();
            let cfg = AdmmConfig {
                start: Some(start),
                max_iter: 50_000,
                ..AdmmConfig::default()
            };
            sols.push(solve_admm_with(&inst, &cfg).map_err(|e| format!("instance {k}: {e}"))?);
        }
        let (a, b) = (inst.phi_x(&sols[0]), inst.phi_x(&sols[1]));
        let dphi = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        let dnorm = (inst.dict.norm(&sols[0]) - inst.dict.norm(&sols[1])).abs();
        ensure!(dphi <= 1e-5 && dnorm <= 1e-5, "instance {k}: Phi gap {dphi:e}, norm gap {dnorm:e}");
        worst_phi = worst_phi.max(dphi);
        worst_norm = worst_norm.max(dnorm);
    }
    Ok(format!("50 instances, max Phi gap {worst_phi:.1e}, max norm gap {worst_norm:.1e}"))
}

fn random_objective(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn c9_extremality_cross_check() -> Outcome {
    let mut dicts = vec![k4()];
    dicts.extend((2..=5).map(|n| identity_dict(n).unwrap()));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut singletons, mut movable) = (0, 0);
    for d in &dicts {
        let n = d.n();
        let tol = *d.tol();
        let lineality = d.ker_dstar().transpose();
        for s in enumerate_feasible_signs(d).unwrap() {
            if s.is_zero() {
                continue;
            }
            let face = face_from_sign(d, &s, 1.0).unwrap();
            if is_extremal(d, &s).unwrap() {
                // the face modulo Ker D*
                let region: LinearProgram = face.hrep().eq_block(&lineality, &vec![0.0; lineality.nrows()]);
                let mut pts = Vec::new();
                for _ in 0..2 {
                    let w = random_objective(&mut rng, n);
                    match lp::max_linear_over(&region, &w, &tol).unwrap() {
                        LpOutcome::Optimal(sol) => pts.push(sol.x),
                        other => return Err(format!("{s}: face LP ended {:?}", other.status())),
                    }
                }
                ensure!(close(&pts[0], &pts[1], 1e-7), "{s}: extremal face is not a point: {pts:?}");
                singletons += 1;
            } else {
                let normal = Matrix::from_row_slice(1, n, face.normal());
                let zero_rows = d.dstar_rows(&s.cosupport());
                let dirs = intersect_null_spaces(&[&normal, &zero_rows, &lineality], &tol).unwrap();
                ensure!(dirs.ncols() > 0, "{s}: non-extremal face with no direction");
                let v: Vec<f64> = dirs.column(0).iter().copied().collect();
                let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
                ensure!((norm - 1.0).abs() < 1e-9, "{s}: direction norm {norm}");
                let x = face_ri_point(d, &s);
                let dx = d.analyze(&x);
                let min_gap = s.support().iter().fold(f64::INFINITY, |m, &i| m.min(dx[i].abs()));
                let step = 0.5 * min_gap / (1.0 + d.analyze(&v).iter().fold(0.0f64, |m, t| m.max(t.abs())));
                for sgn in [1.0, -1.0] {
                    let moved: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + sgn * step * b).collect();
                    ensure!(face.contains(&moved, 1e-9), "{s}: direction leaves the face");
                }
                movable += 1;
            }
        }
    }
    Ok(format!("{singletons} extremal faces are points, {movable} other faces exhibit a unit direction"))
}

fn c10_lambda_invariance() -> Outcome {
    let dict = difference_dict(3).unwrap();
    let base = construct_arbitrary_face(&dict, &sv("-+"), 1.0, &tv3_plane(), 1.0).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 2.0] {
        let ci = construct_arbitrary_face(&dict, &sv("-+"), 1.0, &tv3_plane(), lambda).map_err(|e| e.to_string())?;
        let report = verify_construction(&ci, 1e-6).map_err(|e| e.to_string())?;
        ensure!(report.passed, "lambda = {lambda}: verification failed");
        let gap = solution_set_gap(&base.inst, &ci.inst).map_err(|e| e.to_string())?;
        ensure!(gap <= 1e-6, "lambda = {lambda}: support gap {gap:e}");
        worst = worst.max(gap);
    }
    Ok(format!("lambda in {{0.5, 2}} reproduces the lambda = 1 set, max gap {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("K4 enumeration", c1_k4_enumeration),
        ("K4 extremal patterns", c2_k4_extremal_patterns),
        ("setting3d round trip", c3_setting3d),
        ("TV-3 construction", c4_tv3_construction),
        ("identity-dictionary law", c5_identity_law),
        ("oracle equivalence", c6_oracle_equivalence),
        ("order isomorphism", c7_order_isomorphism),
        ("constancy", c8_constancy),
        ("extremality cross-check", c9_extremality_cross_check),
        ("lambda invariance", c10_lambda_invariance),
    ];
    let mut failed = 0;
    let mut stdout = std::io::stdout();
    panic::set_hook(Box::new(|_| {}));
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let line = match &outcome {
            Ok(detail) => format!("criterion {:>2} {name}: PASS ({detail}) [{secs:.2}s]", k + 1),
            Err(why) => {
                failed += 1;
                format!("criterion {:>2} {name}: FAIL ({why}) [{secs:.2}s]", k + 1)
            }
        };
        let _ = writeln!(stdout, "{line}");
    }
    let _ = writeln!(stdout, "acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
