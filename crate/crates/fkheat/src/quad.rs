//! Deterministic quadrature building blocks.
//!
//! Three families of integrals recur throughout the crate:
//!
//! * exact double integrals of power-law kernels `|u - v + tau|^alpha` over
//!   grid cells, via the closed-form second antiderivative;
//! * Gaussian expectations `E|c + sigma*xi|^p` with `p` in `(-1, 0]`, where
//!   the integrable singularity is absorbed by the substitution
//!   `w = v^(1/(1+p))`;
//! * generic 1-D integrals with endpoint singularities, via tanh-sinh
//!   (double-exponential) quadrature.

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let z1 = z;
            z -= p0 / dp;
            if (z - z1).abs() < 1e-15 {
                x[i] = -z;
                x[n - 1 - i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                w[n - 1 - i] = w[i];
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss-Legendre integral of `f` over `[a, b]` with `panels`
/// equal panels of a 32-point rule.
pub fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (xs, ws) = gauss_legendre(32);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let c = lo + 0.5 * h;
        let d = 0.5 * h;
        let mut panel = 0.0;
        for (x, w) in xs.iter().zip(ws.iter()) {
            panel += w * f(c + d * x);
        }
        acc += panel * d;
    }
    acc
}

/// Nodes and weights for `E f(xi)`, `xi ~ N(0,1)`, as a Gauss-Hermite rule:
/// `E f(xi) = sum_i w_i f(x_i)`.
pub fn gauss_hermite_normal(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Physicists' Hermite roots by Newton iteration on the orthonormal
    // recurrence, then rescaled by sqrt(2) for the standard normal weight.
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = 0.751_125_544_464_942_9_f64; // pi^(-1/4)
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2
                    - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // sum of physicists' weights is sqrt(pi); normalize to a probability rule
    // and stretch abscissas by sqrt(2).
    let norm: f64 = std::f64::consts::PI.sqrt();
    for i in 0..n {
        x[i] *= std::f64::consts::SQRT_2;
        w[i] /= norm;
    }
    (x, w)
}

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Density of N(0, var) at x.
pub fn normal_pdf(x: f64, var: f64) -> f64 {
    (-(x * x) / (2.0 * var)).exp() / (var.sqrt() * SQRT_2PI)
}

// ---------------------------------------------------------------------------
// Exact power-law cell weights
// ---------------------------------------------------------------------------

/// Second antiderivative of `|z|^alpha`, i.e. `K''(z) = |z|^alpha` a.e.
/// Requires `alpha > -2`; the combination formulas below only use it for
/// `alpha > -1`, where the kernel is locally integrable.
#[inline]
fn k2(z: f64, alpha: f64) -> f64 {
    if (alpha + 1.0).abs() < 1e-6 {
        // boundary guard: K''(z) = 1/|z| has K(z) = |z| (ln|z| - 1)
        if z == 0.0 {
            return 0.0;
        }
        let a = z.abs();
        return a * (a.ln() - 1.0);
    }
    z.abs().powf(alpha + 2.0) / ((alpha + 1.0) * (alpha + 2.0))
}

/// Exact `int_a^b int_c^e |u - v + tau|^alpha dv du` for `alpha > -1`.
///
/// Valid across the singular line `u - v + tau = 0`; the kernel is
/// integrable there and `K` is C^1.
#[inline]
pub fn power_cell_weight(a: f64, b: f64, c: f64, e: f64, tau: f64, alpha: f64) -> f64 {
    k2(b - c + tau, alpha) - k2(a - c + tau, alpha) - k2(b - e + tau, alpha)
        + k2(a - e + tau, alpha)
}

/// Exact `int_a^b int_c^e (u + v)^alpha dv du` for `alpha > -1` and
/// nonnegative cell corners.
#[inline]
pub fn plus_cell_weight(a: f64, b: f64, c: f64, e: f64, alpha: f64) -> f64 {
    k2(b + e, alpha) - k2(a + e, alpha) - k2(b + c, alpha) + k2(a + c, alpha)
}

// ---------------------------------------------------------------------------
// Gaussian power moments
// ---------------------------------------------------------------------------

/// `E |xi|^p` for a standard normal `xi` and `p > -1`, by the Gamma formula
/// `2^(p/2) Gamma((p+1)/2) / sqrt(pi)`.
pub fn std_normal_abs_moment(p: f64) -> f64 {
    use statrs::function::gamma::gamma;
    assert!(p > -1.0, "|xi|^p is not integrable for p <= -1");
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// `E |c + sigma*xi|^p` for `xi ~ N(0,1)` and `p` in `(-1, 0]`.
///
/// Writes the expectation as `int_0^inf w^p g(w) dw` with
/// `g(w) = phi_sigma(w - c) + phi_sigma(w + c)` and substitutes
/// `w = v^(1/(1+p))`, which removes the singularity exactly.
pub fn gaussian_abs_power_moment(c: f64, sigma: f64, p: f64) -> f64 {
    assert!(p > -1.0 && p <= 0.0, "p must lie in (-1, 0], got {p}");
    assert!(sigma > 0.0, "sigma must be positive");
    if p == 0.0 {
        return 1.0;
    }
    let beta = 1.0 / (1.0 + p);
    let var = sigma * sigma;
    let g = |w: f64| normal_pdf(w - c, var) + normal_pdf(w + c, var);
    let w_max = c.abs() + 12.0 * sigma;
    let v_max = w_max.powf(1.0 + p);
    beta * integrate_gl(|v| g(v.powf(beta)), 0.0, v_max, 24)
}

// ---------------------------------------------------------------------------
// tanh-sinh quadrature
// ---------------------------------------------------------------------------

/// Integrate `f` over `[a, b]` by tanh-sinh quadrature. Handles integrable
/// endpoint singularities. Fails if the level refinement does not converge
/// to the requested relative tolerance.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    const T_MAX: f64 = 6.11;
    const MAX_LEVEL: u32 = 12;
    let c = 0.5 * (a + b);
    let d = 0.5 * (b - a);
    if d <= 0.0 {
        return Ok(0.0);
    }
    let half_pi = 0.5 * std::f64::consts::PI;

    // evaluate the weighted integrand at parameter t
    let sample = |t: f64| -> f64 {
        let u = half_pi * t.sinh();
        let ch = u.cosh();
        let weight = half_pi * t.cosh() / (ch * ch);
        if !weight.is_finite() || weight < 1e-300 {
            return 0.0;
        }
        // offset from the nearer endpoint, computed without cancellation:
        // 1 - tanh(u) = 2 / (1 + e^{2u})
        let off = d * 2.0 / (1.0 + (2.0 * u.abs()).exp());
        let x = if t >= 0.0 { b - off } else { a + off };
        let v = f(x);
        if v.is_finite() {
            d * weight * v
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = sample(0.0);
    {
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            sum += sample(t) + sample(-t);
            k += 1;
        }
    }
    let mut prev = sum * h;
    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        // new points are odd multiples of the new h
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            sum += sample(t) + sample(-t);
            k += 2;
        }
        let cur = sum * h;
        let scale = cur.abs().max(1e-300);
        if (cur - prev).abs() <= rel_tol * scale && _level >= 3 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "tanh-sinh did not reach rel_tol {rel_tol} on [{a}, {b}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(12);
        // degree-7 polynomial integrated exactly
        let val: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * (3.0 * xi.powi(7) + xi.powi(4) - xi + 2.0))
            .sum();
        let exact = 2.0 / 5.0 + 4.0; // odd terms vanish
        assert!((val - exact).abs() < 1e-13, "{val} vs {exact}");
    }

    #[test]
    fn hermite_matches_gamma_formula() {
        let (x, w) = gauss_hermite_normal(48);
        // E xi^2 = 1, E xi^4 = 3
        let m2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        let m4: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(4)).sum();
        assert!((m2 - 1.0).abs() < 1e-10);
        assert!((m4 - 3.0).abs() < 1e-9);
    }

    #[test]
    fn abs_power_moment_matches_gamma_formula() {
        for p in [-0.2, -0.4, -0.6, -0.9] {
            let q = gaussian_abs_power_moment(0.0, 1.0, p);
            let exact = std_normal_abs_moment(p);
            assert!(
                (q - exact).abs() < 1e-9 * exact,
                "p={p}: quad {q} vs gamma {exact}"
            );
        }
        // scaling: E|c + s xi|^p = s^p E|c/s + xi|^p
        let a = gaussian_abs_power_moment(0.3, 2.0, -0.5);
        let b = 2f64.powf(-0.5) * gaussian_abs_power_moment(0.15, 1.0, -0.5);
        assert!((a - b).abs() < 1e-10 * a.abs());
    }

    #[test]
    fn power_cell_weight_closed_forms() {
        // int_0^1 int_0^1 |u - v|^a = 2/((a+1)(a+2))
        for a in [-0.5, -0.9, 0.0, 0.7] {
            let w = power_cell_weight(0.0, 1.0, 0.0, 1.0, 0.0, a);
            let exact = 2.0 / ((a + 1.0) * (a + 2.0));
            assert!((w - exact).abs() < 1e-12, "a={a}: {w} vs {exact}");
        }
        // additivity over a split cell
        let whole = power_cell_weight(0.0, 1.0, 2.0, 3.0, 0.3, -0.4);
        let parts = power_cell_weight(0.0, 0.5, 2.0, 3.0, 0.3, -0.4)
            + power_cell_weight(0.5, 1.0, 2.0, 3.0, 0.3, -0.4);
        assert!((whole - parts).abs() < 1e-13);
    }

    #[test]
    fn plus_cell_weight_matches_quadrature() {
        let a = -0.7;
        let exact = plus_cell_weight(0.0, 1.0, 0.0, 1.0, a);
        let quad = tanh_sinh(
            |u| {
                if u == 0.0 {
                    0.0
                } else {
                    ((1.0 + u).powf(a + 1.0) - u.powf(a + 1.0)) / (a + 1.0)
                }
            },
            0.0,
            1.0,
            1e-11,
        )
        .unwrap();
        assert!((exact - quad).abs() < 1e-9, "{exact} vs {quad}");
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let v = tanh_sinh(|x| x.powf(-0.5), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        // int_0^1 ln x dx = -1
        let v = tanh_sinh(|x| x.ln(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v + 1.0).abs() < 1e-10, "{v}");
    }
}
