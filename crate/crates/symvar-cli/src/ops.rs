//! Executes one configured operation. Errors come back as strings that name
//! the offending config field.

use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};
use symvar::applications::{
    caristi_fixed_point, clarke_fixed_point, petal_inclusions, quasilinear_experiment, semilinear_experiment,
    symmetric_drop_point, symmetric_petal_point, DropProblem, Petal, PetalProblem, QuasilinearEnergy,
    QuasilinearProblem, SemilinearEnergy,
};
use symvar::domain::{Ball, DomainRef, Intersection, Whole};
use symvar::functional::{Functional, FunctionalRef};
use symvar::metric::Metric;
use symvar::principles::{verify_certificate, zhong_radius, Certificate, SamplerSpec, Setup};
use symvar::rearrange::{approximate, find_polarizer, polarize, schwarz, symmetry_residual};
use symvar::registry::{domains, engines, functionals, integrands, maps, nonlinearities, weights, Named};
use symvar::slopes::{lower_derivative_schedule, q_form, strong_slope};
use symvar::{GridFunction, GridSpace};

use crate::config::{ExperimentConfig, Operation};

/// CSV table: a header and rows of preformatted cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub struct Outcome {
    pub passed: bool,
    pub result: Value,
    pub certificates: Vec<Certificate>,
    pub table: Table,
    /// Lines for the terminal.
    pub messages: Vec<String>,
}

impl Outcome {
    fn new(passed: bool, result: Value, table: Table) -> Self {
        Outcome { passed, result, certificates: Vec::new(), table, messages: Vec::new() }
    }
}

type Res<T> = std::result::Result<T, String>;

fn at<T, E: std::fmt::Display>(field: &str, r: std::result::Result<T, E>) -> Res<T> {
    r.map_err(|e| format!("field `{field}`: {e}"))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn space(cfg: &ExperimentConfig) -> Res<Arc<GridSpace>> {
    let spec = cfg.grid.as_ref().ok_or_else(|| format!("field `grid`: required by `{}`", cfg.operation.name()))?;
    at("grid", spec.build())
}

fn setup(cfg: &ExperimentConfig, space: &Arc<GridSpace>) -> Setup {
    let s = Setup::new(space, cfg.metric.build(space)).with_seed(cfg.seed);
    match cfg.samples {
        Some(n) => s.with_samples(n),
        None => s,
    }
}

fn function(space: &Arc<GridSpace>, field: &str, u: &[f64]) -> Res<GridFunction> {
    at(field, GridFunction::new(space, u.to_vec()))
}

fn functional(space: &Arc<GridSpace>, spec: &Named) -> Res<FunctionalRef> {
    at("operation.functional", functionals().build(space, spec))
}

fn domain(space: &Arc<GridSpace>, field: &str, specs: &[Named]) -> Res<DomainRef> {
    let reg = domains();
    let mut parts = specs.iter().map(|s| at(field, reg.build(space, s))).collect::<Res<Vec<DomainRef>>>()?;
    Ok(match parts.len() {
        0 => Arc::new(Whole),
        1 => parts.remove(0),
        _ => Arc::new(Intersection::new(parts)),
    })
}

fn cell_table(space: &GridSpace, columns: &[(&str, &[f64])]) -> Table {
    let mut header = vec!["cell"];
    let axes = ["x", "y"];
    header.extend(&axes[..space.dimension()]);
    header.extend(columns.iter().map(|(h, _)| *h));
    let mut t = Table::new(&header);
    for i in 0..space.n_cells() {
        let mut row = vec![i.to_string()];
        row.extend(space.center(i).iter().map(|&c| num(c)));
        row.extend(columns.iter().map(|(_, v)| num(v[i])));
        t.push(row);
    }
    t
}

fn certificate_table(certs: &[Certificate], f: &dyn Functional) -> Table {
    let mut t = Table::new(&["index", "variant", "status", "energy", "max_violation", "slack", "n_samples"]);
    for (k, c) in certs.iter().enumerate() {
        t.push(vec![
            k.to_string(),
            serde_json::to_value(c.variant).unwrap().as_str().unwrap_or_default().to_string(),
            if c.passed() { "PASS".into() } else { "FAILED".into() },
            num(f.eval(&c.v)),
            num(c.violation.max_violation),
            num(c.slack),
            c.violation.n_samples.to_string(),
        ]);
    }
    t
}

fn measured(c: &Certificate, name: &str) -> String {
    c.measured.get(name).map(|b| num(b.value)).unwrap_or_default()
}

pub fn execute(cfg: &ExperimentConfig, config_dir: &Path) -> Res<Outcome> {
    match &cfg.operation {
        Operation::Polarize { u, polarizer } => {
            let sp = space(cfg)?;
            let u = function(&sp, "operation.u", u)?;
            let h = find_polarizer(&sp, polarizer)
                .ok_or_else(|| "field `operation.polarizer`: no polarizer with this axis and offset on the grid".to_string())?;
            let uh = at("operation.polarizer", polarize(&u, h))?;
            let table = cell_table(&sp, &[("u", u.values()), ("u_H", uh.values())]);
            Ok(Outcome::new(true, json!({ "function": uh.to_record() }), table))
        }
        Operation::Schwarz { u } => {
            let sp = space(cfg)?;
            let u = function(&sp, "operation.u", u)?;
            let us = schwarz(&u);
            let table = cell_table(&sp, &[("u", u.values()), ("u_star", us.values())]);
            Ok(Outcome::new(true, json!({ "function": us.to_record(), "symmetry_residual": symmetry_residual(&u) }), table))
        }
        Operation::ApproxSymmetrize { u, rho } => {
            let sp = space(cfg)?;
            let u = function(&sp, "operation.u", u)?;
            let a = at("operation.rho", approximate(&sp, u.values(), *rho))?;
            let specs = a.specs(&sp);
            let mut table = Table::new(&["step", "axis", "offset"]);
            for (k, s) in specs.iter().enumerate() {
                let axis: Vec<String> = s.axis.iter().map(|&x| num(x)).collect();
                table.push(vec![k.to_string(), axis.join(" "), num(s.offset)]);
            }
            let out = GridFunction::new(&sp, a.values.clone()).map_err(|e| e.to_string())?;
            let passed = a.residual < *rho;
            let result = json!({ "function": out.to_record(), "sequence": specs, "residual": a.residual, "rho": rho });
            let mut o = Outcome::new(passed, result, table);
            o.messages.push(format!("residual {:.6e} after {} polarizations (rho {rho})", a.residual, a.sequence.len()));
            Ok(o)
        }
        Operation::ZhongRadius { weight, rho } => {
            let h = at("operation.weight", weights().build(&(), weight))?;
            let r = at("operation.rho", zhong_radius(h.as_ref(), *rho))?;
            let mut table = Table::new(&["weight", "rho", "radius"]);
            table.push(vec![weight.name.clone(), num(*rho), num(r)]);
            let mut o = Outcome::new(true, json!({ "weight": weight.name, "rho": rho, "radius": r }), table);
            o.messages.push(format!("r({rho}) = {r:.10}"));
            Ok(o)
        }
        Operation::Engine { engine, functional: fspec, u0, domain: dspec } => {
            let sp = space(cfg)?;
            let f = functional(&sp, fspec)?;
            let e = at("operation.engine", engines().build(&(), engine))?;
            let s = setup(cfg, &sp).with_domain(domain(&sp, "operation.domain", dspec)?);
            function(&sp, "operation.u0", u0)?;
            let certs = at("operation", e.run(f.clone(), &s, u0))?;
            let table = certificate_table(&certs, f.as_ref());
            let passed = certs.iter().all(|c| c.passed());
            let mut o = Outcome::new(passed, json!({ "engine": e.name(), "functional": f.name() }), table);
            o.certificates = certs;
            Ok(o)
        }
        Operation::Verify { certificate, functional: fspec, domain: dspec } => {
            let path = config_dir.join(certificate);
            let text = at("operation.certificate", std::fs::read_to_string(&path))?;
            let cert: Certificate =
                serde_json::from_str(&text).map_err(|e| format!("field `operation.certificate`: {}: {e}", path.display()))?;
            let sp = at("operation.certificate", cert.grid.build())?;
            let metric: Arc<dyn Metric> = cert.metric.build(&sp);
            let f = functional(&sp, fspec)?;
            let d = domain(&sp, "operation.domain", dspec)?;
            if cert.v.len() != sp.n_cells() {
                return Err("field `operation.certificate`: v does not match its grid".into());
            }
            let spec = SamplerSpec { n_samples: cfg.samples.unwrap_or(10_000), seed: cfg.seed };
            let report = verify_certificate(f.as_ref(), d.as_ref(), metric.as_ref(), &cert, spec);
            let bounds = cert.failures();
            let claimed = cert.passed();
            let passed = claimed && bounds.is_empty() && report.max_violation <= cert.slack;
            let mut table = Table::new(&["check", "value", "limit", "ok"]);
            table.push(vec!["claimed status".into(), format!("{:?}", cert.status), "Pass".into(), claimed.to_string()]);
            table.push(vec!["recorded bounds failing".into(), bounds.len().to_string(), "0".into(), bounds.is_empty().to_string()]);
            table.push(vec![
                "resampled max violation".into(),
                num(report.max_violation),
                num(cert.slack),
                (report.max_violation <= cert.slack).to_string(),
            ]);
            let result = json!({ "violation": report, "failing_bounds": bounds, "claimed_pass": claimed });
            let mut o = Outcome::new(passed, result, table);
            o.messages.push(format!(
                "resampled {} points: max violation {:.6e} vs slack {:.6e}",
                report.n_samples, report.max_violation, cert.slack
            ));
            Ok(o)
        }
        Operation::StrongSlope { functional: fspec, u, radii, directions } => {
            let sp = space(cfg)?;
            let f = functional(&sp, fspec)?;
            function(&sp, "operation.u", u)?;
            let metric = cfg.metric.build(&sp);
            let s = at("operation", strong_slope(f.as_ref(), metric.as_ref(), u, radii, *directions, cfg.seed))?;
            let mut table = Table::new(&["lower", "upper"]);
            table.push(vec![num(s.lower), num(s.upper)]);
            let mut o = Outcome::new(true, json!({ "slope": s }), table);
            o.messages.push(format!("strong slope in [{:.6e}, {:.6e}]", s.lower, s.upper));
            Ok(o)
        }
        Operation::QForm { functional: fspec, u, w, deltas, probes } => {
            let sp = space(cfg)?;
            let f = functional(&sp, fspec)?;
            function(&sp, "operation.u", u)?;
            function(&sp, "operation.w", w)?;
            let metric = cfg.metric.build(&sp);
            let q = at("operation", q_form(f.as_ref(), metric.as_ref(), u, w, deltas, *probes, cfg.seed))?;
            let mut table = Table::new(&["delta", "quotient"]);
            for (d, v) in &q.schedule {
                table.push(vec![num(*d), num(*v)]);
            }
            let mut o = Outcome::new(q.value.is_finite(), json!({ "q": q }), table);
            o.messages.push(format!("Q(u; w) ~ {:.6e}", q.value));
            Ok(o)
        }
        Operation::LowerDerivative { nonlinearity, s, deltas, probes } => {
            let nl = at("operation.nonlinearity", nonlinearities().build(&(), nonlinearity))?;
            if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) {
                return Err("field `operation.deltas`: must be nonempty and positive".into());
            }
            let g = |x: f64| nl.g(x);
            let sched = lower_derivative_schedule(&g, *s, deltas, *probes);
            let mut table = Table::new(&["delta", "lower_derivative"]);
            for (d, v) in &sched {
                table.push(vec![num(*d), num(*v)]);
            }
            Ok(Outcome::new(true, json!({ "nonlinearity": nl.name(), "s": s, "schedule": sched }), table))
        }
        Operation::Quasilinear { integrand, forcing, epsilon } => {
            let sp = space(cfg)?;
            let ig = at("operation.integrand", integrands().build(&(), integrand))?;
            let problem = QuasilinearProblem { integrand: ig.clone(), forcing: *forcing };
            let c = at("operation", quasilinear_experiment(&problem, &setup(cfg, &sp), *epsilon))?;
            let energy = QuasilinearEnergy::new(&sp, ig, *forcing).eval(&c.v);
            let mut table = Table::new(&["epsilon", "energy", "symmetry_residual", "dual_norm_residual", "q_min"]);
            table.push(vec![
                num(*epsilon),
                num(energy),
                measured(&c, "(ii) symmetry: ||u - u*||_V"),
                measured(&c, "(i) dual-norm residual: ||w||_X'"),
                String::new(),
            ]);
            let mut o = Outcome::new(c.passed(), json!({ "energy": energy }), table);
            o.certificates.push(c);
            Ok(o)
        }
        Operation::Semilinear { nonlinearity, u0, schedule, half_width } => {
            let sp = space(cfg)?;
            let nl = at("operation.nonlinearity", nonlinearities().build(&(), nonlinearity))?;
            let m = match half_width {
                Some(h) => Some(at("operation.box", h.resolve(&sp))?),
                None => None,
            };
            function(&sp, "operation.u0", u0)?;
            let rep = at("operation", semilinear_experiment(nl.clone(), &setup(cfg, &sp), u0, schedule, m))?;
            let energy = SemilinearEnergy::new(&sp, nl);
            let mut table = Table::new(&[
                "epsilon",
                "energy",
                "symmetry_residual",
                "dual_norm_residual",
                "q_min",
                "slope_upper",
                "second_order",
            ]);
            for (k, st) in rep.steps.iter().enumerate() {
                table.push(vec![
                    num(st.epsilon),
                    num(energy.eval(&st.certificate.v)),
                    num(st.symmetry),
                    num(rep.h_minus_one[k]),
                    num(st.q.min_value),
                    num(st.slope.upper),
                    num(rep.second_order[k]),
                ]);
            }
            let result = json!({
                "symmetry_monotone": rep.symmetry_monotone,
                "slope_monotone": rep.slope_monotone,
                "box_half_width": rep.box_half_width,
                "second_order": rep.second_order,
                "h_minus_one": rep.h_minus_one,
            });
            let mut o = Outcome::new(rep.passed(), result, table);
            o.certificates = rep.steps.into_iter().map(|s| s.certificate).collect();
            Ok(o)
        }
        Operation::Caristi { map, functional: fspec, u0, epsilon } => {
            let sp = space(cfg)?;
            let f = functional(&sp, fspec)?;
            let map = at("operation.map", maps().build(&sp, map))?;
            let fp = at("operation", caristi_fixed_point(map.as_ref(), f, &setup(cfg, &sp), u0, *epsilon))?;
            fixed_point_outcome(&sp, *epsilon, fp)
        }
        Operation::Clarke { map, sigma, u0, epsilon } => {
            let sp = space(cfg)?;
            let map = at("operation.map", maps().build(&sp, map))?;
            let fp = at("operation", clarke_fixed_point(map, *sigma, &setup(cfg, &sp), u0, *epsilon))?;
            fixed_point_outcome(&sp, *epsilon, fp)
        }
        Operation::Drop { x, ball, constraint, epsilon, minimality_samples } => {
            let sp = space(cfg)?;
            let c = domain(&sp, "operation.constraint", constraint)?;
            let ball = Ball { center: ball.center.clone(), radius: ball.radius, basis: ball.basis.clone() };
            let problem =
                DropProblem { x: x.clone(), ball, c, epsilon: *epsilon, minimality_samples: *minimality_samples };
            let cert = at("operation", symmetric_drop_point(&problem, &setup(cfg, &sp)))?;
            point_outcome(&sp, cert)
        }
        Operation::Petal { x, y, constraint, epsilon, minimality_samples } => {
            let sp = space(cfg)?;
            let c = domain(&sp, "operation.constraint", constraint)?;
            let problem =
                PetalProblem { x: x.clone(), y: y.clone(), c, epsilon: *epsilon, minimality_samples: *minimality_samples };
            let cert = at("operation", symmetric_petal_point(&problem, &setup(cfg, &sp)))?;
            point_outcome(&sp, cert)
        }
        Operation::PetalInclusions { epsilon, x0, x1, boundary_samples } => {
            let sp = space(cfg)?;
            function(&sp, "operation.x0", x0)?;
            function(&sp, "operation.x1", x1)?;
            if !(*epsilon > 0.0 && *epsilon < 1.0) {
                return Err(format!("field `operation.epsilon`: {epsilon} is outside (0, 1)"));
            }
            let p = Petal { epsilon: *epsilon, x0: x0.clone(), x1: x1.clone() };
            let rep = petal_inclusions(&p, cfg.metric.build(&sp).as_ref(), *boundary_samples, cfg.seed);
            let mut table = Table::new(&["set", "samples", "outside_petal"]);
            table.push(vec!["ball boundary".into(), rep.ball_samples.to_string(), rep.ball_failures.to_string()]);
            table.push(vec!["drop boundary".into(), rep.drop_samples.to_string(), rep.drop_failures.to_string()]);
            Ok(Outcome::new(rep.passed(), json!({ "inclusions": rep }), table))
        }
    }
}

fn fixed_point_outcome(sp: &GridSpace, epsilon: f64, fp: symvar::applications::FixedPoint) -> Res<Outcome> {
    let mut table = cell_table(sp, &[("xi", &fp.xi)]);
    table.header.push("residual".into());
    table.header.push("residual_bound".into());
    for row in &mut table.rows {
        row.push(num(fp.residual));
        row.push(num(fp.residual_bound));
    }
    let result = json!({ "epsilon": epsilon, "xi": fp.xi, "residual": fp.residual, "residual_bound": fp.residual_bound, "slack": fp.slack });
    let mut o = Outcome::new(fp.certificate.passed(), result, table);
    o.messages.push(format!("||F(xi) - xi|| = {:.6e} <= {:.6e}", fp.residual, fp.residual_bound));
    o.certificates.push(fp.certificate);
    Ok(o)
}

fn point_outcome(sp: &GridSpace, cert: Certificate) -> Res<Outcome> {
    let table = cell_table(sp, &[("xi", &cert.v)]);
    let mut o = Outcome::new(cert.passed(), json!({ "xi": cert.v }), table);
    o.certificates.push(cert);
    Ok(o)
}
