//! Closed sets the engines run on: membership plus (Euclidean) projection.

use std::sync::Arc;

use crate::grid::{dot, euclid};

pub trait Domain: Send + Sync {
    fn contains(&self, u: &[f64]) -> bool;

    /// A nearby point of the set. Exact Euclidean projection for the convex
    /// sets below; a restoration step for constraint manifolds.
    fn project(&self, u: &[f64]) -> Vec<f64>;

    fn describe(&self) -> String;

    /// True when every point is admissible.
    fn is_whole(&self) -> bool {
        false
    }
}

pub type DomainRef = Arc<dyn Domain>;

fn tol(u: &[f64]) -> f64 {
    1e-10 * (1.0 + euclid(u))
}

pub struct Whole;

impl Domain for Whole {
    fn contains(&self, _u: &[f64]) -> bool {
        true
    }
    fn project(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
    fn describe(&self) -> String {
        "whole space".into()
    }
    fn is_whole(&self) -> bool {
        true
    }
}

/// The cone S of nonnegative functions.
pub struct Cone;

impl Domain for Cone {
    fn contains(&self, u: &[f64]) -> bool {
        u.iter().all(|&x| x >= -1e-12)
    }
    fn project(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&x| x.max(0.0)).collect()
    }
    fn describe(&self) -> String {
        "nonnegative cone".into()
    }
}

/// lo <= u_i <= hi for every cell.
pub struct CoordBox {
    pub lo: f64,
    pub hi: f64,
}

impl Domain for CoordBox {
    fn contains(&self, u: &[f64]) -> bool {
        let t = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        u.iter().all(|&x| x >= self.lo - t && x <= self.hi + t)
    }
    fn project(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&x| x.clamp(self.lo, self.hi)).collect()
    }
    fn describe(&self) -> String {
        format!("box [{}, {}]", self.lo, self.hi)
    }
}

/// {u : a.u >= b}.
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub level: f64,
}

impl Domain for HalfSpace {
    fn contains(&self, u: &[f64]) -> bool {
        dot(&self.normal, u) >= self.level - tol(u)
    }
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let gap = self.level - dot(&self.normal, u);
        if gap <= 0.0 {
            return u.to_vec();
        }
        let nn = dot(&self.normal, &self.normal);
        u.iter().zip(&self.normal).map(|(x, a)| x + gap * a / nn).collect()
    }
    fn describe(&self) -> String {
        format!("half-space a.u >= {}", self.level)
    }
}

/// Euclidean ball {c + z : z in span(basis), |z| <= r}; without a basis the
/// ball is full dimensional. The basis must be orthonormal.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub basis: Option<Vec<Vec<f64>>>,
}

impl Ball {
    /// Splits d into (in-subspace part, squared orthogonal distance).
    fn split(&self, d: &[f64]) -> (Vec<f64>, f64) {
        match &self.basis {
            None => (d.to_vec(), 0.0),
            Some(b) => {
                let mut e = vec![0.0; d.len()];
                for v in b {
                    let c = dot(v, d);
                    for (ei, vi) in e.iter_mut().zip(v) {
                        *ei += c * vi;
                    }
                }
                let o: f64 = d.iter().zip(&e).map(|(x, y)| (x - y) * (x - y)).sum();
                (e, o)
            }
        }
    }

    pub fn distance(&self, u: &[f64]) -> f64 {
        let d: Vec<f64> = u.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let (e, o) = self.split(&d);
        (o + (euclid(&e) - self.radius).max(0.0).powi(2)).sqrt()
    }

    /// Largest distance between two points of the ball.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

impl Domain for Ball {
    fn contains(&self, u: &[f64]) -> bool {
        self.distance(u) <= tol(u)
    }
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = u.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let (e, _) = self.split(&d);
        let n = euclid(&e);
        let s = if n > self.radius { self.radius / n } else { 1.0 };
        self.center.iter().zip(&e).map(|(c, x)| c + s * x).collect()
    }
    fn describe(&self) -> String {
        format!("ball of radius {}", self.radius)
    }
}

/// Drop(x, B): union of the segments [x, b], b in B, for a Euclidean ball B.
#[derive(Clone, Debug)]
pub struct DropSet {
    pub vertex: Vec<f64>,
    pub ball: Ball,
}

impl DropSet {
    /// Slice at parameter t: the ball x + t(B - x).
    fn slice(&self, t: f64) -> Ball {
        Ball {
            center: self.vertex.iter().zip(&self.ball.center).map(|(x, c)| x + t * (c - x)).collect(),
            radius: t * self.ball.radius,
            basis: self.ball.basis.clone(),
        }
    }

    /// Distance to the drop and the minimizing slice parameter. The map
    /// t -> dist(y, slice(t)) is convex, so golden-section search is exact
    /// up to its tolerance.
    pub fn distance_with_t(&self, y: &[f64]) -> (f64, f64) {
        let g = |t: f64| self.slice(t).distance(y);
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        while b - a > 1e-15 {
            if gc <= gd {
                b = d;
                d = c;
                gd = gc;
                c = b - phi * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + phi * (b - a);
                gd = g(d);
            }
        }
        let mut best = (g(0.5 * (a + b)), 0.5 * (a + b));
        for t in [0.0, 1.0] {
            let v = g(t);
            if v < best.0 {
                best = (v, t);
            }
        }
        best
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        self.distance_with_t(y).0
    }
}

impl Domain for DropSet {
    fn contains(&self, u: &[f64]) -> bool {
        self.distance(u) <= tol(u)
    }
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let (_, t) = self.distance_with_t(u);
        self.slice(t).project(u)
    }
    fn describe(&self) -> String {
        "drop of a ball".into()
    }
}

/// {start + s dir : s >= 0}.
pub struct Ray {
    pub start: Vec<f64>,
    pub dir: Vec<f64>,
}

impl Domain for Ray {
    fn contains(&self, u: &[f64]) -> bool {
        euclid(&crate::grid::sub(u, &self.project(u))) <= tol(u)
    }
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let d = crate::grid::sub(u, &self.start);
        let s = (dot(&d, &self.dir) / dot(&self.dir, &self.dir)).max(0.0);
        self.start.iter().zip(&self.dir).map(|(a, b)| a + s * b).collect()
    }
    fn describe(&self) -> String {
        "ray".into()
    }
}

pub struct Singleton(pub Vec<f64>);

impl Domain for Singleton {
    fn contains(&self, u: &[f64]) -> bool {
        euclid(&crate::grid::sub(u, &self.0)) <= tol(u)
    }
    fn project(&self, _u: &[f64]) -> Vec<f64> {
        self.0.clone()
    }
    fn describe(&self) -> String {
        "singleton".into()
    }
}

/// Intersection of convex sets, projected by Dykstra's algorithm.
pub struct Intersection {
    parts: Vec<DomainRef>,
}

impl Intersection {
    pub fn new(parts: Vec<DomainRef>) -> Self {
        Intersection { parts }
    }
}

impl Domain for Intersection {
    fn contains(&self, u: &[f64]) -> bool {
        self.parts.iter().all(|p| p.contains(u))
    }

    fn project(&self, u: &[f64]) -> Vec<f64> {
        let parts: Vec<&DomainRef> = self.parts.iter().filter(|p| !p.is_whole()).collect();
        match parts.len() {
            0 => return u.to_vec(),
            1 => return parts[0].project(u),
            _ => {}
        }
        let n = u.len();
        let mut x = u.to_vec();
        let mut incr = vec![vec![0.0; n]; parts.len()];
        for _ in 0..20_000 {
            let prev = x.clone();
            for (k, p) in parts.iter().enumerate() {
                let y: Vec<f64> = x.iter().zip(&incr[k]).map(|(a, b)| a + b).collect();
                let z = p.project(&y);
                incr[k] = y.iter().zip(&z).map(|(a, b)| a - b).collect();
                x = z;
            }
            let moved = euclid(&crate::grid::sub(&x, &prev));
            if moved <= 1e-15 * (1.0 + euclid(&x)) && self.contains(&x) {
                break;
            }
        }
        x
    }

    fn describe(&self) -> String {
        self.parts.iter().map(|p| p.describe()).collect::<Vec<_>>().join(" & ")
    }

    fn is_whole(&self) -> bool {
        self.parts.iter().all(|p| p.is_whole())
    }
}
