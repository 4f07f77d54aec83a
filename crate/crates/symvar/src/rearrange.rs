//! Two-point rearrangement (polarization), Schwarz rearrangement, and the
//! iterated-polarization approximation of the Schwarz rearrangement.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SymError};
use crate::grid::{GridFunction, GridSpace};

/// A reflection half-space {a.x <= beta} containing the origin, with its cell
/// pairing precomputed.
#[derive(Clone, Debug)]
pub struct Polarizer {
    axis: [i64; 2],
    level: i64,
    dimension: usize,
    space_id: u64,
    inside: Vec<bool>,
    mirror: Vec<Option<usize>>,
}

/// Serialized polarizer: unit axis and offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarizerSpec {
    pub axis: Vec<f64>,
    pub offset: f64,
}

impl Polarizer {
    pub fn axis(&self) -> Vec<f64> {
        let norm = ((self.axis[0] * self.axis[0] + self.axis[1] * self.axis[1]) as f64).sqrt();
        self.axis[..self.dimension].iter().map(|&a| a as f64 / norm).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.axis[0] != 0 && self.axis[1] != 0
    }

    /// Offset beta in physical units.
    pub fn offset(&self, spacing: f64) -> f64 {
        if self.is_diagonal() {
            self.level as f64 * spacing / std::f64::consts::SQRT_2
        } else {
            self.level as f64 * spacing / 2.0
        }
    }

    pub fn spec(&self, spacing: f64) -> PolarizerSpec {
        PolarizerSpec { axis: self.axis(), offset: self.offset(spacing) }
    }

    pub fn space_id(&self) -> u64 {
        self.space_id
    }

    pub fn is_inside(&self, cell: usize) -> bool {
        self.inside[cell]
    }

    /// Mirror cell, or `None` when the mirror lies outside the grid.
    pub fn mirror(&self, cell: usize) -> Option<usize> {
        self.mirror[cell]
    }

    /// Pairs (inside, outside) of distinct mirrored cells.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mirror
            .iter()
            .enumerate()
            .filter_map(move |(i, m)| m.filter(|&j| j != i && self.inside[i]).map(|j| (i, j)))
    }

    /// Applies the two-point rearrangement to raw values.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = u.to_vec();
        for (i, m) in self.mirror.iter().enumerate() {
            match *m {
                Some(j) if j == i => {}
                Some(j) => {
                    if self.inside[i] {
                        out[i] = u[i].max(u[j]);
                    } else {
                        out[i] = u[i].min(u[j]);
                    }
                }
                None => {
                    out[i] = if self.inside[i] { u[i].max(0.0) } else { u[i].min(0.0) };
                }
            }
        }
        out
    }

    pub fn fixes(&self, u: &[f64]) -> bool {
        self.pairs().all(|(i, j)| u[i] >= u[j])
            && self.mirror.iter().enumerate().all(|(i, m)| match m {
                None if self.inside[i] => u[i] >= 0.0,
                None => u[i] <= 0.0,
                _ => true,
            })
    }
}

pub(crate) fn build_family(space_id: u64, dimension: usize, n: usize, half: &[[i64; 2]]) -> Vec<Polarizer> {
    let lim = n as i64 - 1;
    let index_of = |x: i64, y: i64| -> Option<usize> {
        if x.abs() > lim || (dimension == 2 && y.abs() > lim) || (dimension == 1 && y != 0) {
            return None;
        }
        let ix = ((x + lim) / 2) as usize;
        let iy = if dimension == 1 { 0 } else { ((y + lim) / 2) as usize };
        Some(iy * n + ix)
    };
    let make = |axis: [i64; 2], level: i64| -> Polarizer {
        let a2 = axis[0] * axis[0] + axis[1] * axis[1];
        let c = level * a2;
        let mut inside = Vec::with_capacity(half.len());
        let mut mirror = Vec::with_capacity(half.len());
        for h in half {
            let s = axis[0] * h[0] + axis[1] * h[1];
            inside.push(s <= c);
            let t = 2 * (s - c) / a2;
            mirror.push(index_of(h[0] - t * axis[0], h[1] - t * axis[1]));
        }
        Polarizer { axis, level, dimension, space_id, inside, mirror }
    };
    let base: Vec<[i64; 2]> = if dimension == 1 {
        vec![[1, 0]]
    } else {
        vec![[1, 0], [0, 1], [1, 1], [-1, 1]]
    };
    let mut family: Vec<Polarizer> = base.iter().map(|&a| make(a, 0)).collect();
    for level in 1..=(2 * lim) {
        for &a in &base {
            for sign in [1, -1] {
                family.push(make([sign * a[0], sign * a[1]], level));
            }
        }
    }
    family.retain(|h| h.pairs().next().is_some());
    family
}

/// u^H. Errors if H was built for another space.
pub fn polarize(u: &GridFunction, h: &Polarizer) -> Result<GridFunction> {
    if h.space_id != u.space().id() {
        return Err(SymError::SpaceMismatch);
    }
    Ok(GridFunction::from_raw(u.space(), h.apply(u.values())))
}

pub fn schwarz_values(space: &GridSpace, u: &[f64]) -> Vec<f64> {
    let mut vals: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let mut out = vec![0.0; u.len()];
    for (&cell, v) in space.radial_order().iter().zip(vals) {
        out[cell] = v;
    }
    out
}

/// Symmetric-decreasing rearrangement of |u|, ties by cell index.
pub fn schwarz(u: &GridFunction) -> GridFunction {
    GridFunction::from_raw(u.space(), schwarz_values(u.space(), u.values()))
}

/// ||u - u*||_V.
pub fn symmetry_residual(u: &GridFunction) -> f64 {
    let s = schwarz_values(u.space(), u.values());
    u.space().dist(crate::grid::NormKind::V, u.values(), &s)
}

pub fn symmetry_residual_values(space: &GridSpace, u: &[f64]) -> f64 {
    let s = schwarz_values(space, u);
    space.dist(crate::grid::NormKind::V, u, &s)
}

/// True when every registered polarizer fixes u.
pub fn is_family_fixed(space: &GridSpace, u: &[f64]) -> bool {
    space.family().iter().all(|h| h.fixes(u))
}

/// Outcome of the iterated polarization.
#[derive(Clone, Debug)]
pub struct Approximation {
    pub values: Vec<f64>,
    pub sequence: Vec<usize>,
    pub residual: f64,
}

impl Approximation {
    pub fn specs(&self, space: &GridSpace) -> Vec<PolarizerSpec> {
        self.sequence.iter().map(|&k| space.family()[k].spec(space.spacing())).collect()
    }
}

/// Greedy iterated polarization on raw values.
pub fn approximate(space: &GridSpace, u: &[f64], rho: f64) -> Result<Approximation> {
    if !(rho > 0.0) {
        return Err(SymError::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let v_dist = |a: &[f64], b: &[f64]| space.dist(crate::grid::NormKind::V, a, b);
    let target = schwarz_values(space, u);
    let mut cur: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    let mut res = v_dist(&cur, &target);
    let mut sequence = Vec::new();
    let family = space.family();
    let cap = 10 * space.n_cells() * family.len();
    while res >= rho {
        if sequence.len() >= cap {
            return Err(SymError::ConvergenceFailure {
                context: "iterated polarization cap".into(),
                iterations: sequence.len(),
                residual: res,
                best: Some(cur),
            });
        }
        let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
        for (k, h) in family.iter().enumerate() {
            if h.fixes(&cur) {
                continue;
            }
            let w = h.apply(&cur);
            let r = v_dist(&w, &target);
            if r < res && best.as_ref().map_or(true, |b| r < b.0) {
                best = Some((r, vec![k], w));
            }
        }
        if best.is_none() {
            for (k1, h1) in family.iter().enumerate() {
                if h1.fixes(&cur) {
                    continue;
                }
                let w1 = h1.apply(&cur);
                for (k2, h2) in family.iter().enumerate() {
                    let w2 = h2.apply(&w1);
                    let r = v_dist(&w2, &target);
                    if r < res && best.as_ref().map_or(true, |b| r < b.0) {
                        best = Some((r, vec![k1, k2], w2));
                    }
                }
            }
        }
        match best {
            Some((r, ks, w)) => {
                res = r;
                cur = w;
                sequence.extend(ks);
            }
            None => {
                return Err(SymError::ConvergenceFailure {
                    context: "no polarizer in the family reduces the distance to the rearrangement".into(),
                    iterations: sequence.len(),
                    residual: res,
                    best: Some(cur),
                });
            }
        }
    }
    Ok(Approximation { values: cur, sequence, residual: res })
}

/// T_rho u with the polarizer list used.
pub fn approx_symmetrize(u: &GridFunction, rho: f64) -> Result<(GridFunction, Vec<PolarizerSpec>)> {
    let a = approximate(u.space(), u.values(), rho)?;
    let specs = a.specs(u.space());
    Ok((GridFunction::from_raw(u.space(), a.values), specs))
}

/// Looks up a registered polarizer by its serialized form.
pub fn find_polarizer<'a>(space: &'a GridSpace, spec: &PolarizerSpec) -> Option<&'a Polarizer> {
    space.family().iter().find(|h| {
        let s = h.spec(space.spacing());
        s.axis.len() == spec.axis.len()
            && s.axis.iter().zip(&spec.axis).all(|(a, b)| (a - b).abs() < 1e-9)
            && (s.offset - spec.offset).abs() < 1e-9
    })
}
