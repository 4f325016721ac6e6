//! Isometries as per-factor matrices in the identity component SO+(n,1),
//! acting on the hyperboloid model with the time coordinate first.

use nalgebra::{DMatrix, DVector};
use crate::error::{Error, Result};
use crate::geometry::factor;
use crate::geometry::point::{IdealPoint, ModelPoint, TangentVector};

/// One isometry of a model space: a Minkowski-orthogonal, orthochronous,
/// orientation-preserving matrix per factor, with the inverse cached via
/// the exact formula J M^T J.
#[derive(Debug, Clone)]
pub struct Isometry {
    pub factors: Vec<DMatrix<f64>>,
    inverses: Vec<DMatrix<f64>>,
}

/// Exact inverse of a Minkowski-orthogonal matrix: conjugate the transpose by
/// J = diag(-1, 1, ..., 1).
fn minkowski_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    let mut out = m.transpose();
    for i in 1..k {
        out[(0, i)] = -out[(0, i)];
        out[(i, 0)] = -out[(i, 0)];
    }
    out
}

/// Residual of the Minkowski orthogonality condition M^T J M = J.
pub fn minkowski_defect(m: &DMatrix<f64>) -> f64 {
    let k = m.nrows();
    let mut j = DMatrix::identity(k, k);
    j[(0, 0)] = -1.0;
    let res = m.transpose() * &j * m - j;
    res.amax()
}

impl Isometry {
    /// Identity on a space with the given per-factor ball dimensions.
    pub fn identity(factor_dims: &[usize]) -> Self {
        let factors: Vec<_> = factor_dims
            .iter()
            .map(|&n| DMatrix::identity(n + 1, n + 1))
            .collect();
        let inverses = factors.clone();
        Self { factors, inverses }
    }

    /// Build from factor matrices, rejecting anything outside SO+(n,1).
    pub fn from_factor_matrices(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        for m in &mats {
            let defect = minkowski_defect(m);
            if defect > 1e-10 {
                return Err(Error::InvalidIsometry(format!(
                    "Minkowski form not preserved, defect {defect:e}"
                )));
            }
            if m[(0, 0)] <= 0.0 {
                return Err(Error::InvalidIsometry(
                    "time orientation reversed".to_string(),
                ));
            }
            if m.determinant() <= 0.0 {
                return Err(Error::InvalidIsometry(
                    "orientation reversed (not in the identity component)".to_string(),
                ));
            }
        }
        let inverses = mats.iter().map(minkowski_inverse).collect();
        Ok(Self {
            factors: mats,
            inverses,
        })
    }

    /// Hyperbolic translation along the unit axis direction `axis` by `length`
    /// for a single factor of ball dimension `axis.len()`.
    pub fn boost_matrix(axis: &DVector<f64>, length: f64) -> DMatrix<f64> {
        let n = axis.len();
        let (c, s) = (length.cosh(), length.sinh());
        let mut m = DMatrix::identity(n + 1, n + 1);
        m[(0, 0)] = c;
        for i in 0..n {
            m[(0, i + 1)] = s * axis[i];
            m[(i + 1, 0)] = s * axis[i];
            for j in 0..n {
                m[(i + 1, j + 1)] = if i == j { 1.0 } else { 0.0 } + (c - 1.0) * axis[i] * axis[j];
            }
        }
        m
    }

    /// Rotation by `angle` in the coordinate plane (i, j) of a single factor.
    pub fn rotation_matrix(n: usize, i: usize, j: usize, angle: f64) -> DMatrix<f64> {
        let mut m = DMatrix::identity(n + 1, n + 1);
        let (c, s) = (angle.cos(), angle.sin());
        m[(i + 1, i + 1)] = c;
        m[(j + 1, j + 1)] = c;
        m[(i + 1, j + 1)] = -s;
        m[(j + 1, i + 1)] = s;
        m
    }

    /// Single-factor isometry from one matrix.
    pub fn from_single(m: DMatrix<f64>) -> Result<Self> {
        Self::from_factor_matrices(vec![m])
    }

    /// The translation moving the origin to `target` along the radial geodesic.
    pub fn translation_to(target: &ModelPoint) -> Result<Self> {
        let mats = target
            .factors
            .iter()
            .map(|p| {
                let r = p.norm();
                if r < 1e-15 {
                    DMatrix::identity(p.len() + 1, p.len() + 1)
                } else {
                    Self::boost_matrix(&(p / r), 2.0 * r.atanh())
                }
            })
            .collect();
        Self::from_factor_matrices(mats)
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        let factors: Vec<_> = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| a * b)
            .collect();
        let inverses = factors.iter().map(minkowski_inverse).collect();
        Isometry { factors, inverses }
    }

    pub fn inverse(&self) -> Isometry {
        Isometry {
            factors: self.inverses.clone(),
            inverses: self.factors.clone(),
        }
    }

    pub fn apply_point(&self, p: &ModelPoint) -> ModelPoint {
        let factors = self
            .factors
            .iter()
            .zip(&p.factors)
            .map(|(m, x)| factor::hyperboloid_to_ball(&(m * factor::ball_to_hyperboloid(x))))
            .collect();
        ModelPoint::new(factors)
    }

    pub fn apply_ideal(&self, xi: &IdealPoint) -> IdealPoint {
        let factors = self
            .factors
            .iter()
            .zip(&xi.factors)
            .map(|(m, x)| factor::light_to_ideal(&(m * factor::ideal_to_light(x))))
            .collect();
        IdealPoint::new(factors)
    }

    /// Pushforward of a tangent vector by the differential of the isometry.
    pub fn apply_tangent(&self, v: &TangentVector) -> TangentVector {
        let mut base_factors = Vec::with_capacity(v.factors.len());
        let mut comp_factors = Vec::with_capacity(v.factors.len());
        for ((m, x), vf) in self.factors.iter().zip(&v.base.factors).zip(&v.factors) {
            let xh = m * factor::ball_to_hyperboloid(x);
            let vh = m * factor::frame_to_hyperboloid_tangent(x, vf);
            base_factors.push(factor::hyperboloid_to_ball(&xh));
            comp_factors.push(factor::hyperboloid_tangent_to_frame(&xh, &vh));
        }
        TangentVector::new(ModelPoint::new(base_factors), comp_factors)
    }

    /// Max entrywise deviation from another isometry, over all factors.
    pub fn matrix_distance(&self, other: &Isometry) -> f64 {
        self.factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    /// Scale-aware deviation: entrywise gap divided by max(1, entry scale).
    /// Coincides with `matrix_distance` near the identity; for hyperboloid
    /// matrices with exponentially large entries it measures relative
    /// agreement, the quantity f64 word evaluation can actually certify.
    pub fn deviation(&self, other: &Isometry) -> f64 {
        self.factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| {
                let scale = a.amax().max(b.amax()).max(1.0);
                (a - b).amax() / scale
            })
            .fold(0.0, f64::max)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.factors.iter().all(|m| {
            let id = DMatrix::identity(m.nrows(), m.ncols());
            (m - id).amax() <= tol
        })
    }

    /// Largest defect of the Minkowski orthogonality condition over factors.
    pub fn defect(&self) -> f64 {
        self.factors.iter().map(minkowski_defect).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn random_isometry(rng: &mut ChaCha8Rng, n: usize, max_len: f64) -> Isometry {
        let mut m = DMatrix::identity(n + 1, n + 1);
        for i in 0..n {
            for j in (i + 1)..n {
                m = Isometry::rotation_matrix(n, i, j, rng.random_range(0.0..std::f64::consts::TAU)) * m;
            }
        }
        let axis = {
            let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0_f64));
            let nv = v.norm();
            v / nv
        };
        m = Isometry::boost_matrix(&axis, rng.random_range(0.0..max_len)) * m;
        Isometry::from_single(m).unwrap()
    }

    #[test]
    fn identity_fixes_inputs() {
        let id = Isometry::identity(&[2]);
        let p = ModelPoint::from_slice(&[0.3, -0.2]);
        let xi = IdealPoint::from_slice(&[0.6, 0.8]);
        assert!(id.apply_point(&p).close_to(&p, 1e-15));
        assert!((id.apply_ideal(&xi).single() - xi.single()).norm() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let g = random_isometry(&mut rng, 3, 2.0);
            assert!(g.compose(&g.inverse()).is_identity(1e-10));
            assert!(g.inverse().compose(&g).is_identity(1e-10));
        }
    }

    #[test]
    fn preserves_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let g = random_isometry(&mut rng, 2, 2.5);
            let a = DVector::from_vec(vec![rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)]);
            let b = DVector::from_vec(vec![rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)]);
            let pa = ModelPoint::new(vec![a.clone()]);
            let pb = ModelPoint::new(vec![b.clone()]);
            let d0 = factor::dist(&a, &b);
            let d1 = factor::dist(g.apply_point(&pa).single(), g.apply_point(&pb).single());
            assert_abs_diff_eq!(d0, d1, epsilon = 1e-9);
        }
    }

    #[test]
    fn tangent_pushforward_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let g = random_isometry(&mut rng, 3, 2.0);
            let base = ModelPoint::from_slice(&[0.2, -0.1, 0.3]);
            let v = TangentVector::new(
                base,
                vec![DVector::from_vec(vec![
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ])],
            );
            let gv = g.apply_tangent(&v);
            assert_abs_diff_eq!(v.norm(), gv.norm(), epsilon = 1e-10);
            assert!(gv.base.close_to(&g.apply_point(&v.base), 1e-12));
        }
    }

    #[test]
    fn translation_to_moves_origin() {
        let target = ModelPoint::from_slice(&[0.4, 0.3]);
        let g = Isometry::translation_to(&target).unwrap();
        let o = ModelPoint::from_slice(&[0.0, 0.0]);
        assert!(g.apply_point(&o).close_to(&target, 1e-12));
    }

    #[test]
    fn rejects_non_isometric_matrix() {
        let mut m = DMatrix::identity(3, 3);
        m[(1, 1)] = 2.0;
        assert!(matches!(
            Isometry::from_single(m),
            Err(Error::InvalidIsometry(_))
        ));
    }
}
