//! Evaluation of the smoothed noise field
//! `W_dot^{eps,delta}(t,x) = int_0^t int phi_delta(t-s) p_eps(x-y) W(ds,dy)`
//! against a sheet realization by midpoint summation over grid cells.

use crate::error::{Error, Result};
use crate::kernels_quadrature::heat_kernel_raw;
use crate::paths_fields::SheetSample;

/// Number of heat-kernel standard deviations kept in the spatial truncation.
/// The Gaussian tail mass beyond 5 sigma is below the 1e-6 tail tolerance.
pub const SPATIAL_TRUNCATION_SIGMAS: f64 = 5.0;

/// Smoothed noise field backed by one sheet realization.
///
/// Linear in the backing sheet; Gaussian as a field when the sheet is a
/// sheet draw.
#[derive(Debug, Clone)]
pub struct SmoothedNoiseField<'a> {
    pub eps: f64,
    pub delta: f64,
    pub sheet: &'a SheetSample,
}

impl<'a> SmoothedNoiseField<'a> {
    pub fn new(eps: f64, delta: f64, sheet: &'a SheetSample) -> Result<Self> {
        if !(eps > 0.0) || !(delta > 0.0) {
            return Err(Error::Domain(format!(
                "mollification widths must be positive (eps = {eps}, delta = {delta})"
            )));
        }
        Ok(SmoothedNoiseField { eps, delta, sheet })
    }

    /// Half-width of the spatial truncation window.
    pub fn spatial_radius(&self) -> f64 {
        SPATIAL_TRUNCATION_SIGMAS * self.eps.sqrt()
    }

    /// Check that the truncation window around `x` fits inside the sheet hull.
    pub fn check_domain(&self, t: f64, x: &[f64]) -> Result<()> {
        if x.len() != self.sheet.spec.d {
            return Err(Error::Domain(format!(
                "point has {} coordinates, sheet has d = {}",
                x.len(),
                self.sheet.spec.d
            )));
        }
        if t < 0.0 || t > self.sheet.t_max() + 1e-12 {
            return Err(Error::Domain(format!(
                "t = {t} outside sheet horizon [0, {}]",
                self.sheet.t_max()
            )));
        }
        let r = self.spatial_radius();
        for (j, (&xi, (lo, hi))) in x.iter().zip(self.sheet.spatial_hull()).enumerate() {
            if xi - r < lo || xi + r > hi {
                return Err(Error::TruncationDomain(format!(
                    "window [{}, {}] around x[{j}] exceeds hull [{lo}, {hi}]",
                    xi - r,
                    xi + r
                )));
            }
        }
        Ok(())
    }

    /// Evaluate the field. Errors when the truncation window leaves the hull.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_domain(t, x)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let sheet = self.sheet;
        let d = sheet.spec.d;
        let window_lo = (t - self.delta).max(0.0);
        let tn = &sheet.time_nodes;

        // spatial cell ranges per dimension and their midpoints
        let r = self.spatial_radius();
        let mut cell_ranges = Vec::with_capacity(d);
        for (j, nodes) in sheet.space_nodes.iter().enumerate() {
            let lo = x[j] - r;
            let hi = x[j] + r;
            let first = nodes.partition_point(|&v| v <= lo).saturating_sub(1);
            let last = nodes.partition_point(|&v| v < hi).min(nodes.len() - 1);
            if last <= first {
                return Ok(0.0);
            }
            cell_ranges.push((first, last)); // cells first..last
        }

        let mut acc = 0.0;
        let mut spatial_cells: Vec<usize> = cell_ranges.iter().map(|(f, _)| *f).collect();
        let mut xmid = vec![0.0; d];
        'outer: loop {
            // midpoint displacement and the heat-kernel factor for this column
            for j in 0..d {
                let nodes = &sheet.space_nodes[j];
                let c = spatial_cells[j];
                xmid[j] = x[j] - 0.5 * (nodes[c] + nodes[c + 1]);
            }
            let pk = heat_kernel_raw(self.eps, &xmid);
            if pk > 0.0 {
                // walk time cells intersecting [window_lo, t]
                for i in 0..tn.len() - 1 {
                    let lo = tn[i].max(window_lo);
                    let hi = tn[i + 1].min(t);
                    if hi <= lo {
                        continue;
                    }
                    let inc = self.clipped_increment(i, lo, hi, &spatial_cells);
                    acc += pk * inc / self.delta;
                }
            }
            // advance the spatial multi-index
            for j in (0..d).rev() {
                spatial_cells[j] += 1;
                if spatial_cells[j] < cell_ranges[j].1 {
                    continue 'outer;
                }
                spatial_cells[j] = cell_ranges[j].0;
                if j == 0 {
                    break 'outer;
                }
            }
            if d == 0 {
                break;
            }
        }
        Ok(acc)
    }

    /// Sheet increment over `[lo, hi] x (spatial cell)` with the time
    /// endpoints interpolated linearly between grid nodes.
    fn clipped_increment(&self, time_cell: usize, lo: f64, hi: f64, cells: &[usize]) -> f64 {
        let sheet = self.sheet;
        let d = cells.len();
        let tn = &sheet.time_nodes;
        let t0 = tn[time_cell];
        let t1 = tn[time_cell + 1];
        let w_at = |s: f64, idx_tail: &[usize]| -> f64 {
            let frac = (s - t0) / (t1 - t0);
            let mut idx = Vec::with_capacity(d + 1);
            idx.push(time_cell);
            idx.extend_from_slice(idx_tail);
            let a = sheet.value(&idx);
            idx[0] = time_cell + 1;
            let b = sheet.value(&idx);
            a * (1.0 - frac) + b * frac
        };
        let mut acc = 0.0;
        let mut tail = vec![0usize; d];
        for mask in 0..(1usize << d) {
            let mut ones = 0;
            for (a, cell) in cells.iter().enumerate() {
                let bit = (mask >> a) & 1;
                tail[a] = cell + bit;
                ones += bit;
            }
            let sign = if (d - ones) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (w_at(hi, &tail) - w_at(lo, &tail));
        }
        acc
    }
}
