//! Local minimization with projection: Newton when a Hessian is available,
//! otherwise limited-memory BFGS preconditioned by the metric's Riesz map,
//! with a preconditioned steepest-descent fallback.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::domain::Domain;
use crate::functional::Functional;
use crate::grid::{dot, euclid};
use crate::metric::Metric;

pub struct Objective<'a> {
    pub value: &'a dyn Fn(&[f64]) -> f64,
    pub grad: &'a dyn Fn(&[f64]) -> Option<Vec<f64>>,
    pub hess: Option<&'a dyn Fn(&[f64]) -> Option<DMatrix<f64>>>,
}

#[derive(Clone, Copy, Debug)]
pub struct LocalOptions {
    pub max_iter: usize,
    /// Relative decrease below which an iteration counts as stalled.
    pub ftol: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions { max_iter: 400, ftol: 1e-15 }
    }
}

/// Central differences, falling back to one-sided steps next to +inf.
pub fn fd_gradient(value: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let f0 = value(x);
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-7 * (1.0 + x[i].abs());
        y[i] = x[i] + h;
        let fp = value(&y);
        y[i] = x[i] - h;
        let fm = value(&y);
        y[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - f0) / h,
            (false, true) => (f0 - fm) / h,
            _ => 0.0,
        };
    }
    g
}

fn newton_direction(h: &DMatrix<f64>, g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    let scale = h.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    let gv = DVector::from_column_slice(g);
    for k in 0..6 {
        let shift = if k == 0 { 0.0 } else { scale * 10f64.powi(2 * k - 12) };
        let m = h + DMatrix::identity(n, n) * shift;
        if let Some(c) = m.cholesky() {
            let d = -c.solve(&gv);
            return Some(d.as_slice().to_vec());
        }
    }
    None
}

fn lbfgs_direction(metric: &dyn Metric, mem: &VecDeque<(Vec<f64>, Vec<f64>)>, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y) in mem.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    let mut r = metric.riesz(&q);
    if let Some((s, y)) = mem.back() {
        let py = metric.riesz(y);
        let gamma = dot(s, y) / dot(y, &py);
        r.iter_mut().for_each(|x| *x *= gamma);
    }
    for ((s, y), (a, rho)) in mem.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
    }
    r.into_iter().map(|x| -x).collect()
}

/// Projected descent from x0. Returns the final point and its value; the
/// value never exceeds that of the projected start.
pub fn local_min(
    obj: &Objective,
    domain: &dyn Domain,
    metric: &dyn Metric,
    x0: &[f64],
    opts: LocalOptions,
) -> (Vec<f64>, f64) {
    let mut x = domain.project(x0);
    let mut fx = (obj.value)(&x);
    if !fx.is_finite() {
        return (x, fx);
    }
    let grad_at = |x: &[f64]| (obj.grad)(x).unwrap_or_else(|| fd_gradient(obj.value, x));
    let mut g = grad_at(&x);
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut steep_t = 1.0;
    let mut stall = 0;
    for _ in 0..opts.max_iter {
        if g.iter().all(|&v| v == 0.0) {
            break;
        }
        let mut dirs: Vec<(Vec<f64>, bool)> = Vec::new();
        if let Some(h) = obj.hess.and_then(|hf| hf(&x)) {
            if let Some(d) = newton_direction(&h, &g) {
                dirs.push((d, false));
            }
        }
        if !mem.is_empty() {
            dirs.push((lbfgs_direction(metric, &mem, &g), false));
        }
        let sd: Vec<f64> = metric.riesz(&g).into_iter().map(|v| -v).collect();
        dirs.push((sd, true));

        let mut accepted = None;
        for (d, steepest) in dirs {
            let slope = dot(&g, &d);
            if !(slope < 0.0) {
                continue;
            }
            let mut t = if steepest { steep_t } else { 1.0 };
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let xt = domain.project(&trial);
                let ft = (obj.value)(&xt);
                let decrease = dot(&g, &crate::grid::sub(&xt, &x));
                if ft.is_finite() && ft < fx && ft <= fx + 1e-4 * decrease.min(0.0) {
                    accepted = Some((xt, ft, t, steepest));
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((xn, fnew, t, steepest)) = accepted else {
            break;
        };
        if steepest {
            steep_t = (t * 4.0).min(1e6);
        }
        let gn = grad_at(&xn);
        let s = crate::grid::sub(&xn, &x);
        let y = crate::grid::sub(&gn, &g);
        let sy = dot(&s, &y);
        if sy > 1e-14 * euclid(&s) * euclid(&y) && sy > 0.0 {
            mem.push_back((s, y));
            if mem.len() > 20 {
                mem.pop_front();
            }
        }
        let rel = (fx - fnew) / (1.0 + fx.abs());
        x = xn;
        fx = fnew;
        g = gn;
        if rel <= opts.ftol {
            stall += 1;
            if stall >= 3 {
                break;
            }
        } else {
            stall = 0;
        }
    }
    (x, fx)
}

/// Minimizes f(w) + sigma * d(w, center)^power over the domain from each start
/// and returns the best point with its exact (unsmoothed) objective value.
/// For power = 1 the distance is smoothed as sqrt(d^2 + mu^2) - mu along a
/// decreasing mu schedule.
pub fn minimize_penalized(
    f: &dyn Functional,
    domain: &dyn Domain,
    metric: &dyn Metric,
    center: &[f64],
    sigma: f64,
    power: f64,
    starts: &[Vec<f64>],
    opts: LocalOptions,
) -> (Vec<f64>, f64) {
    let exact = |w: &[f64]| {
        let fw = f.eval(w);
        if sigma == 0.0 {
            fw
        } else {
            fw + sigma * metric.dist(w, center).powf(power)
        }
    };
    let mut best: (Vec<f64>, f64) = (center.to_vec(), f64::INFINITY);
    let mut consider = |w: Vec<f64>| {
        if domain.contains(&w) {
            let v = exact(&w);
            if v < best.1 {
                best = (w, v);
            }
        }
    };
    for s in starts {
        let scale = 1.0 + metric.dist(s, center);
        let mus: Vec<f64> = if power == 1.0 && sigma > 0.0 {
            [1e-2, 1e-4, 1e-6, 1e-8, 1e-11].iter().map(|m| m * scale).collect()
        } else {
            vec![0.0]
        };
        let mut x = domain.project(s);
        consider(x.clone());
        for &mu in &mus {
            let value = |w: &[f64]| {
                let fw = f.eval(w);
                if sigma == 0.0 || !fw.is_finite() {
                    return fw;
                }
                let r = metric.dist(w, center);
                let pen = if power == 1.0 { (r * r + mu * mu).sqrt() - mu } else { r.powf(power) };
                fw + sigma * pen
            };
            let grad = |w: &[f64]| -> Option<Vec<f64>> {
                let mut g = f.gradient(w).unwrap_or_else(|| fd_gradient(&|z: &[f64]| f.eval(z), w));
                if sigma == 0.0 {
                    return Some(g);
                }
                let d: Vec<f64> = w.iter().zip(center).map(|(a, b)| a - b).collect();
                let r = metric.norm(&d);
                if r == 0.0 {
                    return Some(g);
                }
                let c = if power == 1.0 {
                    r / (r * r + mu * mu).sqrt()
                } else {
                    power * r.powf(power - 1.0)
                };
                let ng = metric.norm_grad(&d)?;
                for (gi, ni) in g.iter_mut().zip(ng) {
                    *gi += sigma * c * ni;
                }
                Some(g)
            };
            let hess = |w: &[f64]| -> Option<DMatrix<f64>> {
                let hf = f.hessian(w)?;
                if sigma == 0.0 {
                    return Some(hf);
                }
                let gm = metric.gram()?;
                let d = DVector::from_iterator(w.len(), w.iter().zip(center).map(|(a, b)| a - b));
                let gd = gm * &d;
                let r2 = d.dot(&gd).max(0.0);
                if power == 2.0 {
                    return Some(hf + gm * (2.0 * sigma));
                }
                if power != 1.0 {
                    return None;
                }
                let s = (r2 + mu * mu).sqrt();
                if s == 0.0 {
                    return None;
                }
                Some(hf + (gm / s - (&gd * gd.transpose()) / (s * s * s)) * sigma)
            };
            let has_hess = f.hessian(&x).is_some() && (sigma == 0.0 || metric.gram().is_some());
            let obj = Objective {
                value: &value,
                grad: &grad,
                hess: if has_hess { Some(&hess) } else { None },
            };
            let (xn, _) = local_min(&obj, domain, metric, &x, opts);
            x = xn;
            consider(x.clone());
        }
    }
    best
}
