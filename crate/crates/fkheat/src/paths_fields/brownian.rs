//! Brownian path sampling and Brownian-bridge grid refinement.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{GridKind, TimeGrid};
use crate::rng::normal;

/// A d-dimensional Brownian trajectory sampled on a time grid.
///
/// `values` is dimension-major: `values[dim * (n + 1) + node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub grid: TimeGrid,
    pub d: usize,
    pub start: Vec<f64>,
    values: Vec<f64>,
}

impl BrownianPath {
    pub fn n_nodes(&self) -> usize {
        self.grid.n + 1
    }

    #[inline]
    pub fn value(&self, dim: usize, node: usize) -> f64 {
        self.values[dim * (self.grid.n + 1) + node]
    }

    /// All nodes of one coordinate.
    pub fn coord(&self, dim: usize) -> &[f64] {
        let m = self.grid.n + 1;
        &self.values[dim * m..(dim + 1) * m]
    }

    /// Position at an arbitrary time by linear interpolation.
    pub fn at_time(&self, dim: usize, t: f64) -> f64 {
        let t = t.clamp(0.0, self.grid.t_max);
        let dt = self.grid.dt();
        let k = ((t / dt).floor() as usize).min(self.grid.n - 1);
        let frac = (t - self.grid.node(k)) / dt;
        self.value(dim, k) * (1.0 - frac) + self.value(dim, k + 1) * frac
    }

    /// Endpoint `B_{t_max}` as a point.
    pub fn endpoint(&self) -> Vec<f64> {
        (0..self.d).map(|dim| self.value(dim, self.grid.n)).collect()
    }

    /// Midpoints `(B_k + B_{k+1}) / 2` of one coordinate, i.e. the linear
    /// interpolation of the path at cell centers.
    pub fn cell_midpoints(&self, dim: usize) -> Vec<f64> {
        let c = self.coord(dim);
        c.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// True when every coordinate is constant (degenerate synthetic path).
    pub fn is_constant(&self) -> bool {
        (0..self.d).all(|dim| {
            let c = self.coord(dim);
            c.iter().all(|&v| v == c[0])
        })
    }

    /// Build a path from explicit node values (one Vec per dimension).
    /// Intended for tests and synthetic-path studies.
    pub fn from_values(grid: TimeGrid, coords: Vec<Vec<f64>>) -> Result<Self> {
        let d = coords.len();
        if d == 0 {
            return Err(Error::DegeneratePath("no coordinates".to_string()));
        }
        let m = grid.n + 1;
        if coords.iter().any(|c| c.len() != m) {
            return Err(Error::DegeneratePath(format!(
                "coordinate arrays must have {m} nodes"
            )));
        }
        let start = coords.iter().map(|c| c[0]).collect();
        let mut values = Vec::with_capacity(d * m);
        for c in coords {
            values.extend_from_slice(&c);
        }
        Ok(BrownianPath {
            grid,
            d,
            start,
            values,
        })
    }
}

/// Sample one standard Brownian path started at `start`.
///
/// Deterministic function of `(grid, d, start, rng state)`.
pub fn sample_bm(
    grid: &TimeGrid,
    d: usize,
    start: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<BrownianPath> {
    if grid.n == 0 {
        return Err(Error::DegenerateGrid("n = 0 subintervals".to_string()));
    }
    if start.len() != d {
        return Err(Error::DegeneratePath(format!(
            "start has {} coordinates, expected {d}",
            start.len()
        )));
    }
    let m = grid.n + 1;
    let mut values = vec![0.0; d * m];
    for dim in 0..d {
        values[dim * m] = start[dim];
        for k in 0..grid.n {
            let dt = grid.node(k + 1) - grid.node(k);
            let z = normal(rng);
            values[dim * m + k + 1] = values[dim * m + k] + dt.sqrt() * z;
        }
    }
    Ok(BrownianPath {
        grid: grid.clone(),
        d,
        start: start.to_vec(),
        values,
    })
}

/// Brownian-bridge midpoint refinement of a dyadic path.
///
/// Inserts conditionally-sampled midpoints level by level until the grid
/// reaches `new_level`. The restriction of the output to the coarse grid
/// equals the input exactly.
pub fn refine_bridge(
    path: &BrownianPath,
    new_level: u32,
    rng: &mut ChaCha8Rng,
) -> Result<BrownianPath> {
    let level = match path.grid.kind {
        GridKind::Dyadic { level } => level,
        GridKind::Uniform => {
            return Err(Error::UnsupportedGrid(
                "bridge refinement requires a dyadic grid".to_string(),
            ))
        }
    };
    if new_level < level {
        return Err(Error::UnsupportedGrid(format!(
            "new_level {new_level} below current level {level}"
        )));
    }
    if new_level == level {
        return Ok(path.clone());
    }

    let mut current = path.clone();
    for lvl in level..new_level {
        let n_old = 1usize << lvl;
        let m_old = n_old + 1;
        let m_new = 2 * n_old + 1;
        let dt_old = current.grid.t_max / n_old as f64;
        let mut values = vec![0.0; current.d * m_new];
        for dim in 0..current.d {
            let old = &current.values[dim * m_old..(dim + 1) * m_old];
            let new = &mut values[dim * m_new..(dim + 1) * m_new];
            for k in 0..n_old {
                new[2 * k] = old[k];
                // midpoint given endpoints: N(mean of endpoints, dt/4)
                let z = normal(rng);
                new[2 * k + 1] = 0.5 * (old[k] + old[k + 1]) + (dt_old / 4.0).sqrt() * z;
            }
            new[m_new - 1] = old[m_old - 1];
        }
        current = BrownianPath {
            grid: TimeGrid::dyadic(current.grid.t_max, lvl + 1)?,
            d: current.d,
            start: current.start.clone(),
            values,
        };
    }
    Ok(current)
}
