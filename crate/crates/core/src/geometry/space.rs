//! Model spaces: hyperbolic H^n and finite products of hyperbolic factors.
//!
//! Product Busemann functions at Furstenberg-boundary points combine factor
//! values with weights h_i/h, the direction that carries the Patterson-Sullivan
//! density: with this choice dnu_b/dnu_o = exp(-h * busemann) holds with the
//! measure supported on the product of the factor boundaries.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::factor;
use crate::geometry::isometry::Isometry;
use crate::geometry::point::{IdealPoint, ModelPoint, TangentVector};

/// Descriptor of the concrete Hadamard space: ball dimensions per factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpace {
    factor_dims: Vec<usize>,
}

impl ModelSpace {
    /// Real hyperbolic space H^n, n >= 2.
    pub fn hyperbolic(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("hyperbolic dimension {n} < 2")));
        }
        Ok(Self {
            factor_dims: vec![n],
        })
    }

    /// Product of hyperbolic factors, each of dimension >= 2.
    pub fn product(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Config("product needs at least one factor".into()));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::Config("every factor dimension must be >= 2".into()));
        }
        Ok(Self {
            factor_dims: dims.to_vec(),
        })
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn dim(&self) -> usize {
        self.factor_dims.iter().sum()
    }

    pub fn boundary_dim(&self) -> usize {
        self.factor_dims.iter().map(|n| n - 1).sum()
    }

    /// Volume entropy: n-1 per factor, Euclidean norm across factors.
    pub fn entropy(&self) -> f64 {
        self.factor_entropies()
            .iter()
            .map(|h| h * h)
            .sum::<f64>()
            .sqrt()
    }

    pub fn factor_entropies(&self) -> Vec<f64> {
        self.factor_dims.iter().map(|&n| (n - 1) as f64).collect()
    }

    /// Busemann direction weights h_i/h for Furstenberg boundary points.
    pub fn direction_weights(&self) -> Vec<f64> {
        let h = self.entropy();
        self.factor_entropies().iter().map(|hi| hi / h).collect()
    }

    pub fn origin(&self) -> ModelPoint {
        ModelPoint::new(self.factor_dims.iter().map(|&n| DVector::zeros(n)).collect())
    }

    pub fn identity(&self) -> Isometry {
        Isometry::identity(&self.factor_dims)
    }

    pub fn validate_point(&self, p: &ModelPoint) -> Result<()> {
        if p.factors.len() != self.num_factors() {
            return Err(Error::InvalidPoint(format!(
                "expected {} factors, got {}",
                self.num_factors(),
                p.factors.len()
            )));
        }
        for (f, &n) in p.factors.iter().zip(&self.factor_dims) {
            if f.len() != n {
                return Err(Error::InvalidPoint(format!(
                    "factor dimension {} differs from {n}",
                    f.len()
                )));
            }
            if f.norm() >= 1.0 {
                return Err(Error::InvalidPoint(format!(
                    "factor norm {} not inside the open unit ball",
                    f.norm()
                )));
            }
        }
        Ok(())
    }

    pub fn validate_ideal(&self, xi: &IdealPoint) -> Result<()> {
        if xi.factors.len() != self.num_factors() {
            return Err(Error::InvalidIdealPoint(format!(
                "expected {} factors, got {}",
                self.num_factors(),
                xi.factors.len()
            )));
        }
        for (f, &n) in xi.factors.iter().zip(&self.factor_dims) {
            if f.len() != n {
                return Err(Error::InvalidIdealPoint(format!(
                    "factor dimension {} differs from {n}",
                    f.len()
                )));
            }
        }
        xi.validate()
    }

    /// Riemannian distance; Pythagorean across factors.
    pub fn distance(&self, a: &ModelPoint, b: &ModelPoint) -> Result<f64> {
        self.validate_point(a)?;
        self.validate_point(b)?;
        Ok(self.distance_unchecked(a, b))
    }

    pub fn distance_unchecked(&self, a: &ModelPoint, b: &ModelPoint) -> f64 {
        a.factors
            .iter()
            .zip(&b.factors)
            .map(|(x, y)| {
                let d = factor::dist(x, y);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Busemann function pointed at `xi`, normalized at `base`:
    /// the limit of d(b, c(t)) - d(base, c(t)) along the ray c toward xi.
    pub fn busemann(&self, base: &ModelPoint, b: &ModelPoint, xi: &IdealPoint) -> Result<f64> {
        self.validate_point(base)?;
        self.validate_point(b)?;
        self.validate_ideal(xi)?;
        Ok(self.busemann_unchecked(base, b, xi))
    }

    pub fn busemann_unchecked(&self, base: &ModelPoint, b: &ModelPoint, xi: &IdealPoint) -> f64 {
        let w = self.direction_weights();
        let mut s = 0.0;
        for i in 0..self.num_factors() {
            s += w[i]
                * (factor::busemann_origin(&b.factors[i], &xi.factors[i])
                    - factor::busemann_origin(&base.factors[i], &xi.factors[i]));
        }
        s
    }

    /// Riemannian gradient in `b` of the Busemann function pointed at `xi`.
    /// Independent of the normalization base point; unit norm.
    pub fn busemann_gradient(&self, b: &ModelPoint, xi: &IdealPoint) -> Result<TangentVector> {
        self.validate_point(b)?;
        self.validate_ideal(xi)?;
        Ok(self.busemann_gradient_unchecked(b, xi))
    }

    pub fn busemann_gradient_unchecked(&self, b: &ModelPoint, xi: &IdealPoint) -> TangentVector {
        let w = self.direction_weights();
        let comps = (0..self.num_factors())
            .map(|i| factor::busemann_grad_frame(&b.factors[i], &xi.factors[i]) * w[i])
            .collect();
        TangentVector::new(b.clone(), comps)
    }

    /// Hessian of the Busemann function at `b` as a symmetric matrix in the
    /// stacked orthonormal frame: block-diagonal with factor weights.
    pub fn busemann_hessian(&self, b: &ModelPoint, xi: &IdealPoint) -> Result<DMatrix<f64>> {
        self.validate_point(b)?;
        self.validate_ideal(xi)?;
        Ok(self.busemann_hessian_unchecked(b, xi))
    }

    pub fn busemann_hessian_unchecked(&self, b: &ModelPoint, xi: &IdealPoint) -> DMatrix<f64> {
        let w = self.direction_weights();
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut off = 0;
        for i in 0..self.num_factors() {
            let ni = self.factor_dims[i];
            let block = factor::busemann_hessian_frame(&b.factors[i], &xi.factors[i]) * w[i];
            out.view_mut((off, off), (ni, ni)).copy_from(&block);
            off += ni;
        }
        out
    }

    /// Radon-Nikodym derivative dnu_b/dnu_o(xi) of the Patterson-Sullivan
    /// density relative to the origin: exp(-h * busemann(o, b, xi)).
    pub fn ps_density(&self, b: &ModelPoint, xi: &IdealPoint) -> Result<f64> {
        self.validate_point(b)?;
        self.validate_ideal(xi)?;
        Ok(self.ps_density_unchecked(b, xi))
    }

    pub fn ps_density_unchecked(&self, b: &ModelPoint, xi: &IdealPoint) -> f64 {
        let o = self.origin();
        (-self.entropy() * self.busemann_unchecked(&o, b, xi)).exp()
    }

    /// log of `ps_density`, used to keep convolution kernels in the exponent.
    pub fn log_ps_density_unchecked(&self, b: &ModelPoint, xi: &IdealPoint) -> f64 {
        let o = self.origin();
        -self.entropy() * self.busemann_unchecked(&o, b, xi)
    }

    /// The point at arclength `t` on the ray from `a` toward `xi`, with the
    /// factor speeds h_i/h that make the product Busemann decrease at unit
    /// rate.
    pub fn geodesic_ray(&self, a: &ModelPoint, xi: &IdealPoint, t: f64) -> Result<ModelPoint> {
        self.validate_point(a)?;
        self.validate_ideal(xi)?;
        if t < 0.0 {
            return Err(Error::Config(format!("ray parameter {t} < 0")));
        }
        let w = self.direction_weights();
        let factors = (0..self.num_factors())
            .map(|i| factor::geodesic_toward(&a.factors[i], &xi.factors[i], w[i] * t))
            .collect();
        Ok(ModelPoint::new(factors))
    }

    /// Exponential map, factor-wise.
    pub fn exp(&self, v: &TangentVector) -> ModelPoint {
        let factors = v
            .base
            .factors
            .iter()
            .zip(&v.factors)
            .map(|(x, comp)| factor::exp_frame(x, comp))
            .collect();
        ModelPoint::new(factors)
    }

    /// Logarithm map: tangent at `a` reaching `b` in unit time.
    pub fn log(&self, a: &ModelPoint, b: &ModelPoint) -> TangentVector {
        let comps = a
            .factors
            .iter()
            .zip(&b.factors)
            .map(|(x, y)| factor::log_frame(x, y))
            .collect();
        TangentVector::new(a.clone(), comps)
    }

    /// Gradient of `a -> d(a, z)` in the stacked frame at `a`. Undefined at
    /// a = z.
    pub fn distance_gradient(&self, a: &ModelPoint, z: &ModelPoint) -> TangentVector {
        let d = self.distance_unchecked(a, z);
        self.log(a, z).scale(-1.0 / d)
    }
}
