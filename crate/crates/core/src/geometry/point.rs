//! Points, ideal points and tangent vectors on model spaces.

use nalgebra::DVector;
use crate::error::{Error, Result};

/// A point of the model space: one Poincaré-ball vector per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoint {
    pub factors: Vec<DVector<f64>>,
}

impl ModelPoint {
    pub fn new(factors: Vec<DVector<f64>>) -> Self {
        Self { factors }
    }

    /// Single-factor point from raw coordinates.
    pub fn from_slice(coords: &[f64]) -> Self {
        Self {
            factors: vec![DVector::from_row_slice(coords)],
        }
    }

    /// The single factor of a rank-one point.
    pub fn single(&self) -> &DVector<f64> {
        debug_assert_eq!(self.factors.len(), 1);
        &self.factors[0]
    }

    /// Flatten all factor coordinates into one vector (serialization order).
    pub fn flat(&self) -> Vec<f64> {
        self.factors.iter().flat_map(|f| f.iter().copied()).collect()
    }

    pub fn close_to(&self, other: &ModelPoint, tol: f64) -> bool {
        self.factors.len() == other.factors.len()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// A point of the Furstenberg boundary: one unit vector per factor sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealPoint {
    pub factors: Vec<DVector<f64>>,
}

impl IdealPoint {
    pub fn new(factors: Vec<DVector<f64>>) -> Self {
        Self { factors }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self {
            factors: vec![DVector::from_row_slice(coords)],
        }
    }

    pub fn single(&self) -> &DVector<f64> {
        debug_assert_eq!(self.factors.len(), 1);
        &self.factors[0]
    }

    /// Check unit norms; degenerate directions are rejected, never projected.
    pub fn validate(&self) -> Result<()> {
        for f in &self.factors {
            if (f.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidIdealPoint(format!(
                    "factor norm {} differs from 1 beyond 1e-12",
                    f.norm()
                )));
            }
        }
        Ok(())
    }
}

/// A tangent vector at `base`, with per-factor components in the conformal
/// orthonormal frame there.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: ModelPoint,
    pub factors: Vec<DVector<f64>>,
}

impl TangentVector {
    pub fn new(base: ModelPoint, factors: Vec<DVector<f64>>) -> Self {
        Self { base, factors }
    }

    pub fn zero_at(base: &ModelPoint) -> Self {
        let factors = base.factors.iter().map(|f| DVector::zeros(f.len())).collect();
        Self {
            base: base.clone(),
            factors,
        }
    }

    /// Riemannian norm = Euclidean norm of the stacked frame components.
    pub fn norm(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, other: &TangentVector) -> f64 {
        self.factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            factors: self.factors.iter().map(|f| f * s).collect(),
        }
    }

    /// Stack all factor components into one vector.
    pub fn stacked(&self) -> DVector<f64> {
        let total: usize = self.factors.iter().map(|f| f.len()).sum();
        let mut out = DVector::zeros(total);
        let mut k = 0;
        for f in &self.factors {
            for i in 0..f.len() {
                out[k] = f[i];
                k += 1;
            }
        }
        out
    }

    /// Rebuild per-factor components from a stacked vector.
    pub fn from_stacked(base: &ModelPoint, stacked: &DVector<f64>) -> Self {
        let mut factors = Vec::with_capacity(base.factors.len());
        let mut k = 0;
        for f in &base.factors {
            let mut comp = DVector::zeros(f.len());
            for i in 0..f.len() {
                comp[i] = stacked[k];
                k += 1;
            }
            factors.push(comp);
        }
        Self {
            base: base.clone(),
            factors,
        }
    }
}
