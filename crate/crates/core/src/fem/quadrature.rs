//! Conical-product quadrature on reference simplices.
//!
//! Rules are built from Gauss-Legendre points on `[0,1]` through the collapsed
//! (Duffy) map, with the Jacobian folded into the weights. Points are stored in
//! barycentric form so they can be mapped onto any affine element.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 10;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dim: usize,
    degree: usize,
    points: Vec<[f64; 4]>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds a rule on the reference `dim`-simplex that integrates polynomials of total
    /// degree `degree` exactly. Weights sum to the reference measure `1/dim!`.
    pub fn new(dim: usize, degree: usize) -> Result<QuadratureRule> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("no quadrature for dimension {dim}")));
        }
        if degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "quadrature degree {degree} exceeds {MAX_DEGREE}"
            )));
        }
        // Gauss-Legendre with n points is exact to degree 2n-1; the collapsed directions
        // carry extra Jacobian powers.
        let n_for = |extra: usize| (degree + extra + 1).div_ceil(2);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match dim {
            1 => {
                for (s, ws) in gauss_legendre(n_for(0)) {
                    points.push([1.0 - s, s, 0.0, 0.0]);
                    weights.push(ws);
                }
            }
            2 => {
                let rs = gauss_legendre(n_for(0));
                for (t, wt) in gauss_legendre(n_for(1)) {
                    for &(s, ws) in &rs {
                        let x = s * (1.0 - t);
                        points.push([1.0 - x - t, x, t, 0.0]);
                        weights.push(ws * wt * (1.0 - t));
                    }
                }
            }
            _ => {
                let rs = gauss_legendre(n_for(0));
                let ru = gauss_legendre(n_for(1));
                for (t, wt) in gauss_legendre(n_for(2)) {
                    for &(u, wu) in &ru {
                        for &(s, ws) in &rs {
                            let z = t;
                            let y = u * (1.0 - t);
                            let x = s * (1.0 - u) * (1.0 - t);
                            points.push([1.0 - x - y - z, x, y, z]);
                            weights.push(ws * wu * wt * (1.0 - t).powi(2) * (1.0 - u));
                        }
                    }
                }
            }
        }
        Ok(QuadratureRule {
            dim,
            degree,
            points,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates of the points (unused trailing entries are zero).
    pub fn points(&self) -> &[[f64; 4]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 4], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Measure of the reference simplex, `1/dim!`.
    pub fn reference_measure(&self) -> f64 {
        reference_measure(self.dim)
    }
}

pub fn reference_measure(dim: usize) -> f64 {
    match dim {
        1 => 1.0,
        2 => 0.5,
        _ => 1.0 / 6.0,
    }
}

/// Shared cached rule for `(dim, degree)`.
///
/// # Panics
/// If `dim` is not 1, 2 or 3, or `degree > MAX_DEGREE`.
pub fn rule(dim: usize, degree: usize) -> &'static QuadratureRule {
    static CACHE: OnceLock<Vec<Vec<QuadratureRule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        (1..=3)
            .map(|d| {
                (0..=MAX_DEGREE)
                    .map(|p| QuadratureRule::new(d, p).expect("valid rule parameters"))
                    .collect()
            })
            .collect()
    });
    assert!((1..=3).contains(&dim) && degree <= MAX_DEGREE);
    &cache[dim - 1][degree]
}

/// Gauss-Legendre nodes and weights on `[0,1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(r: &QuadratureRule, f: impl Fn(&[f64; 4]) -> f64) -> f64 {
        r.iter().map(|(p, w)| w * f(p)).sum()
    }

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact monomial integral over the reference simplex: a! b! c! / (d + a + b + c)!.
    fn monomial_oracle(dim: u32, exps: [u32; 3]) -> f64 {
        exps.iter().map(|&e| factorial(e)).product::<f64>() / factorial(dim + exps.iter().sum::<u32>())
    }

    #[test]
    fn weights_sum_to_reference_measure() {
        for dim in 1..=3 {
            for p in 0..=MAX_DEGREE {
                let r = rule(dim, p);
                let s: f64 = r.weights().iter().sum();
                assert!((s - reference_measure(dim)).abs() < 1e-14, "dim {dim} degree {p}");
                assert!(r.weights().iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn known_integrals() {
        let x2y = integrate(rule(2, 3), |l| l[1] * l[1] * l[2]);
        assert!((x2y - 1.0 / 60.0).abs() < 1e-15);
        let x = integrate(rule(3, 1), |l| l[1]);
        assert!((x - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_all_monomials_up_to_degree() {
        for dim in 1..=3u32 {
            for p in 0..=6u32 {
                let r = rule(dim as usize, p as usize);
                for a in 0..=p {
                    for b in 0..=(p - a) {
                        for c in 0..=(p - a - b) {
                            let exps = [a, if dim >= 2 { b } else { 0 }, if dim == 3 { c } else { 0 }];
                            let q = integrate(r, |l| {
                                l[1].powi(exps[0] as i32) * l[2].powi(exps[1] as i32) * l[3].powi(exps[2] as i32)
                            });
                            let exact = monomial_oracle(dim, exps);
                            assert!((q - exact).abs() < 1e-14, "dim {dim} p {p} exps {exps:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(QuadratureRule::new(4, 2).is_err());
        assert!(QuadratureRule::new(2, MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn points_are_inside_the_simplex() {
        for dim in 1..=3 {
            for (p, _) in rule(dim, 6).iter() {
                assert!(p[..=dim].iter().all(|&l| l > 0.0));
                assert!(p[dim + 1..].iter().all(|&l| l == 0.0));
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }
}
