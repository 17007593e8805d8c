//! Exact sampling of fractional-Brownian-sheet realizations on rectangular
//! grids via per-factor Cholesky and sequential tensor application.
//!
//! The sheet covariance is separable,
//! `E[W(t,x) W(s,y)] = R_{H0}(s,t) prod_i R_{Hi}(x_i, y_i)`,
//! so a draw is `(L_0 (x) L_1 (x) ... (x) L_d) z` with `z` iid standard
//! normal and `L_a` the Cholesky factor of the 1-D covariance along axis
//! `a`. The Kronecker product is never materialized; each factor is applied
//! along its axis in turn.

use std::io::{Read, Write};

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels_quadrature::rh_cov;
use crate::model::{HurstSpec, Regime};
use crate::rng::fill_normal;

/// Largest number of grid vertices a sheet may hold.
pub const MAX_SHEET_VERTICES: usize = 1 << 22;

/// One realization of the sheet on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SheetSample {
    pub spec: HurstSpec,
    pub time_nodes: Vec<f64>,
    /// One strictly increasing node array per spatial dimension.
    pub space_nodes: Vec<Vec<f64>>,
    /// Row-major over `[time, x_1, ..., x_d]`.
    pub values: Vec<f64>,
}

impl SheetSample {
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.time_nodes.len()];
        d.extend(self.space_nodes.iter().map(|n| n.len()));
        d
    }

    pub fn n_vertices(&self) -> usize {
        self.dims().iter().product()
    }

    /// Value at a multi-index `(time index, space indices...)`.
    pub fn value(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let dims = self.dims();
        debug_assert_eq!(idx.len(), dims.len());
        let mut flat = 0;
        for (i, &k) in idx.iter().enumerate() {
            debug_assert!(k < dims[i]);
            flat = flat * dims[i] + k;
        }
        flat
    }

    /// Rectangular increment of `W` over the grid cell whose lower corner is
    /// `cell` (one index per axis): the alternating sum over the `2^(d+1)`
    /// corners. This is the discrete measure `W(ds, dy)` of one cell.
    pub fn cell_increment(&self, cell: &[usize]) -> f64 {
        let naxes = cell.len();
        let mut acc = 0.0;
        let mut idx = vec![0usize; naxes];
        for mask in 0..(1usize << naxes) {
            let mut ones = 0;
            for a in 0..naxes {
                let bit = (mask >> a) & 1;
                idx[a] = cell[a] + bit;
                ones += bit;
            }
            let sign = if (naxes - ones) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * self.value(&idx);
        }
        acc
    }

    /// Deterministic sheet built from a function of `(t, x)`; used to inject
    /// the zero realization and smooth synthetic sheets in tests and
    /// convergence studies.
    pub fn from_fn(
        spec: &HurstSpec,
        time_nodes: &[f64],
        space_nodes: &[Vec<f64>],
        f: impl Fn(f64, &[f64]) -> f64,
    ) -> Result<Self> {
        check_nodes(spec, time_nodes, space_nodes)?;
        let dims: Vec<usize> = std::iter::once(time_nodes.len())
            .chain(space_nodes.iter().map(|n| n.len()))
            .collect();
        let total: usize = dims.iter().product();
        let mut values = vec![0.0; total];
        let mut x = vec![0.0; space_nodes.len()];
        for (flat, v) in values.iter_mut().enumerate() {
            let mut rem = flat;
            let mut idx = vec![0usize; dims.len()];
            for a in (0..dims.len()).rev() {
                idx[a] = rem % dims[a];
                rem /= dims[a];
            }
            for (j, nodes) in space_nodes.iter().enumerate() {
                x[j] = nodes[idx[j + 1]];
            }
            *v = f(time_nodes[idx[0]], &x);
        }
        Ok(SheetSample {
            spec: spec.clone(),
            time_nodes: time_nodes.to_vec(),
            space_nodes: space_nodes.to_vec(),
            values,
        })
    }

    pub fn spatial_hull(&self) -> Vec<(f64, f64)> {
        self.space_nodes
            .iter()
            .map(|n| (n[0], *n.last().unwrap()))
            .collect()
    }

    pub fn t_max(&self) -> f64 {
        *self.time_nodes.last().unwrap()
    }

    // -- binary dump ---------------------------------------------------------

    const MAGIC: &'static [u8; 8] = b"FKSHEET1";

    pub fn write_binary<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(Self::MAGIC)?;
        out.write_all(&(self.spec.d as u64).to_le_bytes())?;
        out.write_all(&self.spec.h0.to_le_bytes())?;
        for &h in &self.spec.h {
            out.write_all(&h.to_le_bytes())?;
        }
        let regime = match self.spec.regime {
            Regime::Regular => 0u8,
            Regime::SpecialD1 => 1u8,
        };
        out.write_all(&[regime])?;
        let write_nodes = |out: &mut W, nodes: &[f64]| -> Result<()> {
            out.write_all(&(nodes.len() as u64).to_le_bytes())?;
            for &v in nodes {
                out.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        };
        write_nodes(out, &self.time_nodes)?;
        for nodes in &self.space_nodes {
            write_nodes(out, nodes)?;
        }
        for &v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Config("not a sheet dump (bad magic)".to_string()));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |input: &mut R| -> Result<u64> {
            input.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let d = read_u64(input)? as usize;
        if d == 0 || d > 16 {
            return Err(Error::Config(format!("implausible dimension {d}")));
        }
        let mut f64buf = [0u8; 8];
        let mut read_f64 = |input: &mut R| -> Result<f64> {
            input.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let h0 = read_f64(input)?;
        let mut h = Vec::with_capacity(d);
        for _ in 0..d {
            h.push(read_f64(input)?);
        }
        let mut regime_byte = [0u8; 1];
        input.read_exact(&mut regime_byte)?;
        let regime = match regime_byte[0] {
            0 => Regime::Regular,
            1 => Regime::SpecialD1,
            b => return Err(Error::Config(format!("unknown regime byte {b}"))),
        };
        let mut read_nodes = |input: &mut R| -> Result<Vec<f64>> {
            let mut u64buf = [0u8; 8];
            input.read_exact(&mut u64buf)?;
            let n = u64::from_le_bytes(u64buf) as usize;
            if n == 0 || n > MAX_SHEET_VERTICES {
                return Err(Error::Config(format!("implausible node count {n}")));
            }
            let mut nodes = Vec::with_capacity(n);
            let mut f64buf = [0u8; 8];
            for _ in 0..n {
                input.read_exact(&mut f64buf)?;
                nodes.push(f64::from_le_bytes(f64buf));
            }
            Ok(nodes)
        };
        let time_nodes = read_nodes(input)?;
        let mut space_nodes = Vec::with_capacity(d);
        for _ in 0..d {
            space_nodes.push(read_nodes(input)?);
        }
        let total: usize = std::iter::once(time_nodes.len())
            .chain(space_nodes.iter().map(|n| n.len()))
            .product();
        let mut values = Vec::with_capacity(total);
        let mut f64buf = [0u8; 8];
        for _ in 0..total {
            input.read_exact(&mut f64buf)?;
            values.push(f64::from_le_bytes(f64buf));
        }
        Ok(SheetSample {
            spec: HurstSpec { d, h0, h, regime },
            time_nodes,
            space_nodes,
            values,
        })
    }
}

fn check_nodes(spec: &HurstSpec, time_nodes: &[f64], space_nodes: &[Vec<f64>]) -> Result<()> {
    if space_nodes.len() != spec.d {
        return Err(Error::DegenerateGrid(format!(
            "{} spatial node arrays for d = {}",
            space_nodes.len(),
            spec.d
        )));
    }
    let strictly_increasing = |n: &[f64]| n.windows(2).all(|w| w[1] > w[0]);
    if time_nodes.is_empty() || !strictly_increasing(time_nodes) {
        return Err(Error::DegenerateGrid(
            "time nodes must be nonempty and strictly increasing".to_string(),
        ));
    }
    if time_nodes[0] < 0.0 {
        return Err(Error::DegenerateGrid("negative time node".to_string()));
    }
    for nodes in space_nodes {
        if nodes.is_empty() || !strictly_increasing(nodes) {
            return Err(Error::DegenerateGrid(
                "space nodes must be nonempty and strictly increasing".to_string(),
            ));
        }
    }
    let total: usize = std::iter::once(time_nodes.len())
        .chain(space_nodes.iter().map(|n| n.len()))
        .product();
    if total > MAX_SHEET_VERTICES {
        return Err(Error::DegenerateGrid(format!(
            "{total} vertices exceed the memory budget of {MAX_SHEET_VERTICES}"
        )));
    }
    Ok(())
}

/// Draw one sheet realization with the separable covariance.
pub fn sample_sheet(
    spec: &HurstSpec,
    time_nodes: &[f64],
    space_nodes: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> Result<SheetSample> {
    check_nodes(spec, time_nodes, space_nodes)?;
    let mut factors = Vec::with_capacity(1 + spec.d);
    factors.push(cholesky_factor(&cov_matrix(spec.h0, time_nodes), 0)?);
    for (j, nodes) in space_nodes.iter().enumerate() {
        factors.push(cholesky_factor(&cov_matrix(spec.h[j], nodes), j + 1)?);
    }

    let dims: Vec<usize> = std::iter::once(time_nodes.len())
        .chain(space_nodes.iter().map(|n| n.len()))
        .collect();
    let total: usize = dims.iter().product();
    let mut values = vec![0.0; total];
    fill_normal(rng, &mut values);
    for (axis, factor) in factors.iter().enumerate() {
        apply_axis(&mut values, &dims, axis, factor);
    }
    Ok(SheetSample {
        spec: spec.clone(),
        time_nodes: time_nodes.to_vec(),
        space_nodes: space_nodes.to_vec(),
        values,
    })
}

fn cov_matrix(h: f64, nodes: &[f64]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = rh_cov(h, nodes[i], nodes[j]);
            c[i][j] = v;
            c[j][i] = v;
        }
    }
    c
}

/// Lower-triangular Cholesky factor with an escalating diagonal jitter
/// ladder. A node at coordinate 0 yields an exactly-zero row/column, which is
/// preserved as a zero column of the factor.
fn cholesky_factor(c: &[Vec<f64>], dimension: usize) -> Result<Vec<Vec<f64>>> {
    let n = c.len();
    let max_diag = c
        .iter()
        .enumerate()
        .map(|(i, row)| row[i].abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for jitter_rel in [0.0, 1e-12, 1e-10, 1e-8] {
        let jitter = jitter_rel * max_diag;
        match try_cholesky(c, jitter, max_diag) {
            Some(l) => return Ok(l),
            None => continue,
        }
    }
    Err(Error::Factorization {
        dimension,
        detail: "not positive definite after jitter ladder 1e-12, 1e-10, 1e-8".to_string(),
    })
}

fn try_cholesky(c: &[Vec<f64>], jitter: f64, scale: f64) -> Option<Vec<Vec<f64>>> {
    let n = c.len();
    let mut l = vec![vec![0.0; n]; n];
    for k in 0..n {
        let mut s = c[k][k] - l[k][..k].iter().map(|v| v * v).sum::<f64>();
        if c[k][k] == 0.0 {
            // exactly-zero node: the whole slice is deterministically zero
            for i in k..n {
                if c[i][k].abs() > 1e-12 * scale {
                    return None;
                }
                l[i][k] = 0.0;
            }
            continue;
        }
        s += jitter;
        if s <= 0.0 {
            return None;
        }
        let diag = s.sqrt();
        l[k][k] = diag;
        for i in (k + 1)..n {
            let mut r = c[i][k];
            for j in 0..k {
                r -= l[i][j] * l[k][j];
            }
            l[i][k] = r / diag;
        }
    }
    Some(l)
}

/// In-place application of a lower-triangular factor along one axis of a
/// row-major tensor.
fn apply_axis(values: &mut [f64], dims: &[usize], axis: usize, l: &[Vec<f64>]) {
    let size = dims[axis];
    let post: usize = dims[axis + 1..].iter().product();
    let pre: usize = dims[..axis].iter().product();
    let mut slab = vec![0.0; size];
    for p in 0..pre {
        for q in 0..post {
            let base = p * size * post + q;
            for (i, s) in slab.iter_mut().enumerate() {
                *s = values[base + i * post];
            }
            for i in (0..size).rev() {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += l[i][j] * slab[j];
                }
                values[base + i * post] = acc;
            }
        }
    }
}
