//! Smooth (Borwein-Preiss type) symmetric points with a single moving center.

use super::engine::{inf_estimate, Setup};
use super::verify::{scan, SamplerSpec};
use super::{Certificate, Inequality, Variant};
use crate::error::{Result, SymError};
use crate::functional::Functional;
use crate::optimize::{minimize_penalized, LocalOptions};
use crate::rearrange::{approximate, symmetry_residual_values};
use crate::sampling::derive_seed;

const MAX_CENTER_MOVES: usize = 200;

/// eta_0 = T_rho u0; v_j = argmin f + sigma ||. - eta_j||^p; while
/// ||v_j - eta_j|| > rho/2 the center moves halfway to v_j. Each inner
/// minimizer is polished by restarting from sampled violators.
pub fn symmetric_borwein_preiss(
    f: &dyn Functional,
    setup: &Setup,
    u0: &[f64],
    sigma: f64,
    rho: f64,
    p_exp: f64,
) -> Result<Certificate> {
    if !(sigma > 0.0 && rho > 0.0) {
        return Err(SymError::InvalidArgument("sigma and rho must be positive".into()));
    }
    if !(p_exp >= 1.0) {
        return Err(SymError::InvalidExponent(format!("p must be at least 1, got {p_exp}")));
    }
    if !setup.space.is_nonnegative(u0) {
        return Err(SymError::InvalidArgument("start point must lie in the cone S".into()));
    }
    super::symmetric::check_class(f, setup)?;
    let metric = setup.metric.as_ref();
    let domain = setup.domain.as_ref();
    let fu0 = f.eval(u0);
    let inf = inf_estimate(f, setup, u0);
    let mut inf_val = inf.value.min(fu0);
    let level = sigma * rho.powf(p_exp);
    if !(fu0 < inf_val + level) && fu0 != inf_val {
        return Err(SymError::BadStart { f_u0: fu0, required: inf_val + level });
    }
    let approx = approximate(&setup.space, u0, rho)?;
    let ut = approx.values.clone();
    let mut eta = ut.clone();
    let mut starts_extra: Vec<Vec<f64>> = setup.anchors.clone();
    starts_extra.push(inf.argmin.clone());
    let mut v = ut.clone();
    let mut moves = 0;
    loop {
        let ineq = Inequality::BorweinPreiss { sigma, p_exp, eta: eta.clone() };
        let mut starts = vec![eta.clone(), v.clone(), ut.clone()];
        starts.extend(starts_extra.iter().cloned());
        let (mut cand, _) = minimize_penalized(f, domain, metric, &eta, sigma, p_exp, &starts, LocalOptions::default());
        for k in 0..5 {
            let spec = SamplerSpec { n_samples: 2000, seed: derive_seed(setup.seed, 0xB9 + 7 * moves as u64 + k) };
            let rep = scan(f, domain, metric, &cand, &ineq, spec);
            let tol = 1e-14 * (1.0 + f.eval(&cand).abs());
            match rep.argmax_w {
                Some(w) if rep.max_violation > tol => {
                    let (c2, _) = minimize_penalized(f, domain, metric, &eta, sigma, p_exp, &[w, cand.clone()], LocalOptions::default());
                    cand = c2;
                }
                _ => break,
            }
        }
        v = cand;
        if metric.dist(&v, &eta) <= rho / 2.0 {
            break;
        }
        moves += 1;
        if moves > MAX_CENTER_MOVES {
            return Err(SymError::ConvergenceFailure {
                context: "moving center did not settle".into(),
                iterations: moves,
                residual: metric.dist(&v, &eta),
                best: Some(v),
            });
        }
        eta = eta.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
    }
    let fv = f.eval(&v);
    inf_val = inf_val.min(fv);
    let mut cert = setup.blank(
        Variant::SymBp,
        v.clone(),
        sigma,
        rho,
        p_exp,
        Inequality::BorweinPreiss { sigma, p_exp, eta: eta.clone() },
    );
    cert.eta = Some(eta.clone());
    cert.inf_est = Some(inf_val);
    cert.probes = inf.probes;
    cert.iterations = moves;
    cert.t_rho_sequence = approx.specs(&setup.space);
    let k = setup.k();
    let tu = metric.dist(&ut, u0);
    cert.report("||T u0 - u0||", tu);
    cert.report("||v - T u0||", metric.dist(&v, &ut));
    cert.report("||eta - T u0||", metric.dist(&eta, &ut));
    cert.measure(
        "(a) symmetry: ||v - v*||_V",
        symmetry_residual_values(&setup.space, &v),
        (k * (setup.space.c_theta() + 1.0) + 1.0) * rho,
    );
    cert.measure("(b) location: ||v - u0||", metric.dist(&v, u0), rho + tu);
    cert.measure("(c) center: ||eta - u0||", metric.dist(&eta, u0), rho + tu);
    cert.measure("(d) gap: f(v) - inf_est", fv - inf_val, level);
    setup.finish(f, &mut cert);
    Ok(cert)
}
