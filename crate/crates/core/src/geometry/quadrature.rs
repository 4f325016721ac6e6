//! Quadrature rules for the Furstenberg boundary: uniform rules on the circle,
//! Gauss-Legendre by azimuth product rules on the 2-sphere, and tensor grids
//! across product factors. These discretize the K_o-invariant reference
//! measure nu_o.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::point::IdealPoint;
use crate::geometry::space::ModelSpace;

/// Minimum node budget for a circle factor.
pub const MIN_BUDGET_S1: usize = 32;
/// Minimum node budget for a 2-sphere factor.
pub const MIN_BUDGET_S2: usize = 86;

/// A quadrature rule on the boundary of a model space.
#[derive(Debug, Clone)]
pub struct BoundaryQuadrature {
    pub space: ModelSpace,
    pub nodes: Vec<IdealPoint>,
    pub weights: Vec<f64>,
    /// Per factor: largest polynomial / spherical-harmonic degree integrated
    /// exactly.
    pub exactness: Vec<usize>,
    /// Per-factor budget the rule was built from.
    pub budget: usize,
}

impl BoundaryQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Total weight; 1 up to roundoff by construction.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// True when, for every factor, no closed hemisphere is free of nodes.
    /// Checked against a deterministic candidate set of poles: all node
    /// directions, their negatives, and the coordinate axes.
    pub fn covers_boundary(&self) -> bool {
        for fi in 0..self.space.num_factors() {
            let dim = self.space.factor_dims()[fi];
            let mut candidates: Vec<DVector<f64>> = Vec::new();
            for node in &self.nodes {
                candidates.push(node.factors[fi].clone());
                candidates.push(-&node.factors[fi]);
            }
            for i in 0..dim {
                let mut e = DVector::zeros(dim);
                e[i] = 1.0;
                candidates.push(e.clone());
                candidates.push(-e);
            }
            for u in &candidates {
                let best = self
                    .nodes
                    .iter()
                    .map(|n| n.factors[fi].dot(u))
                    .fold(f64::NEG_INFINITY, f64::max);
                if best <= 1e-12 {
                    return false;
                }
            }
        }
        true
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(k, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(k, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_and_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=k {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Uniform rule on S^1: `m` equally spaced angles, weights 1/m. Integrates
/// trigonometric polynomials of degree <= m-1 exactly.
fn circle_rule(m: usize) -> (Vec<DVector<f64>>, Vec<f64>, usize) {
    let nodes = (0..m)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / m as f64;
            DVector::from_vec(vec![t.cos(), t.sin()])
        })
        .collect();
    (nodes, vec![1.0 / m as f64; m], m - 1)
}

/// Product rule on S^2: Gauss-Legendre in cos(theta) by uniform azimuth.
/// Picks the largest spherical-harmonic exactness degree p whose node count
/// ceil((p+1)/2) * (p+1) fits the budget.
fn sphere_rule(budget: usize) -> (Vec<DVector<f64>>, Vec<f64>, usize) {
    let mut p: usize = 1;
    while (p + 2).div_ceil(2) * (p + 2) <= budget {
        p += 1;
    }
    let k = (p + 1).div_ceil(2);
    let m = p + 1;
    let (gl_nodes, gl_weights) = gauss_legendre(k);
    let mut nodes = Vec::with_capacity(k * m);
    let mut weights = Vec::with_capacity(k * m);
    for (u, wu) in gl_nodes.iter().zip(&gl_weights) {
        let sin_theta = (1.0 - u * u).sqrt();
        for j in 0..m {
            let phi = std::f64::consts::TAU * j as f64 / m as f64;
            nodes.push(DVector::from_vec(vec![
                sin_theta * phi.cos(),
                sin_theta * phi.sin(),
                *u,
            ]));
            weights.push(wu / 2.0 / m as f64);
        }
    }
    (nodes, weights, p)
}

/// Quadrature for the boundary of `space` with a per-factor node budget.
/// Product spaces get the tensor grid with multiplied weights.
pub fn boundary_quadrature(space: &ModelSpace, budget: usize) -> Result<BoundaryQuadrature> {
    let mut factor_nodes: Vec<Vec<DVector<f64>>> = Vec::new();
    let mut factor_weights: Vec<Vec<f64>> = Vec::new();
    let mut exactness = Vec::new();
    for &n in space.factor_dims() {
        let (nodes, weights, degree) = match n {
            2 => {
                if budget < MIN_BUDGET_S1 {
                    return Err(Error::Config(format!(
                        "budget {budget} below the S^1 minimum {MIN_BUDGET_S1}"
                    )));
                }
                circle_rule(budget)
            }
            3 => {
                if budget < MIN_BUDGET_S2 {
                    return Err(Error::Config(format!(
                        "budget {budget} below the S^2 minimum {MIN_BUDGET_S2}"
                    )));
                }
                sphere_rule(budget)
            }
            _ => {
                return Err(Error::Config(format!(
                    "no boundary rule for factor dimension {n} (supported: 2, 3)"
                )))
            }
        };
        factor_nodes.push(nodes);
        factor_weights.push(weights);
        exactness.push(degree);
    }

    // tensor product across factors
    let mut nodes = vec![Vec::new()];
    let mut weights = vec![1.0];
    for (fnodes, fweights) in factor_nodes.iter().zip(&factor_weights) {
        let mut next_nodes = Vec::with_capacity(nodes.len() * fnodes.len());
        let mut next_weights = Vec::with_capacity(nodes.len() * fnodes.len());
        for (prefix, w) in nodes.iter().zip(&weights) {
            for (fnode, fw) in fnodes.iter().zip(fweights) {
                let mut item = prefix.clone();
                item.push(fnode.clone());
                next_nodes.push(item);
                next_weights.push(w * fw);
            }
        }
        nodes = next_nodes;
        weights = next_weights;
    }

    Ok(BoundaryQuadrature {
        space: space.clone(),
        nodes: nodes.into_iter().map(IdealPoint::new).collect(),
        weights,
        exactness,
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circle_rule_uniform() {
        let space = ModelSpace::hyperbolic(2).unwrap();
        let q = boundary_quadrature(&space, 64).unwrap();
        assert_eq!(q.len(), 64);
        assert!(q.weights.iter().all(|&w| (w - 1.0 / 64.0).abs() < 1e-15));
        assert!((q.total_weight() - 1.0).abs() < 1e-12);
        assert!(q.covers_boundary());
        assert_eq!(q.exactness, vec![63]);
    }

    #[test]
    fn circle_rule_integrates_trig_polynomials() {
        let space = ModelSpace::hyperbolic(2).unwrap();
        let q = boundary_quadrature(&space, 32).unwrap();
        // cos(k t) and sin(k t) integrate to 0 for 1 <= k <= 31
        for k in 1..=31 {
            let mut sc = 0.0;
            let mut ss = 0.0;
            for (node, w) in q.nodes.iter().zip(&q.weights) {
                let t = node.factors[0][1].atan2(node.factors[0][0]);
                sc += w * (k as f64 * t).cos();
                ss += w * (k as f64 * t).sin();
            }
            assert_abs_diff_eq!(sc, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ss, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (nodes, weights) = gauss_legendre(6);
        // exact for polynomials of degree <= 11
        for deg in 0..=11u32 {
            let quad: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert_abs_diff_eq!(quad, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn sphere_rule_integrates_polynomials() {
        let space = ModelSpace::hyperbolic(3).unwrap();
        let q = boundary_quadrature(&space, 86).unwrap();
        let p = q.exactness[0];
        assert!(p >= 11, "degree {p} too small for budget 86");
        // monomial x^a y^b z^c averages over the sphere have closed form:
        // zero when any exponent is odd, else a Beta-type ratio
        let exact_avg = |a: u32, b: u32, c: u32| -> f64 {
            if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
                return 0.0;
            }
            // double factorials
            let df = |k: i64| -> f64 {
                let mut v = 1.0;
                let mut i = k;
                while i > 1 {
                    v *= i as f64;
                    i -= 2;
                }
                v
            };
            let (a, b, c) = (a as i64, b as i64, c as i64);
            df(a - 1) * df(b - 1) * df(c - 1) / df(a + b + c + 1)
        };
        for (a, b, c) in [(2, 0, 0), (0, 2, 0), (4, 0, 0), (2, 2, 0), (2, 2, 2), (6, 0, 0), (1, 0, 0), (3, 1, 0)] {
            if (a + b + c) as usize > p {
                continue;
            }
            let quad: f64 = q
                .nodes
                .iter()
                .zip(&q.weights)
                .map(|(n, w)| {
                    let v = &n.factors[0];
                    w * v[0].powi(a) * v[1].powi(b) * v[2].powi(c)
                })
                .sum();
            assert_abs_diff_eq!(quad, exact_avg(a as u32, b as u32, c as u32), epsilon = 1e-12);
        }
        assert!(q.covers_boundary());
    }

    #[test]
    fn product_rule_tensors() {
        let space = ModelSpace::product(&[2, 2]).unwrap();
        let q = boundary_quadrature(&space, 32).unwrap();
        assert_eq!(q.len(), 32 * 32);
        assert_abs_diff_eq!(q.total_weight(), 1.0, epsilon = 1e-12);
        assert!(q.weights.iter().all(|&w| (w - 1.0 / 1024.0).abs() < 1e-18));
    }

    #[test]
    fn budget_below_minimum_rejected() {
        let space = ModelSpace::hyperbolic(2).unwrap();
        assert!(matches!(
            boundary_quadrature(&space, 16),
            Err(Error::Config(_))
        ));
        let space3 = ModelSpace::hyperbolic(3).unwrap();
        assert!(matches!(
            boundary_quadrature(&space3, 50),
            Err(Error::Config(_))
        ));
    }
}
