//! Seeded random geometry inputs shared by unit tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::isometry::Isometry;
use crate::geometry::point::{IdealPoint, ModelPoint};
use crate::geometry::space::ModelSpace;

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0_f64));
        let norm = v.norm();
        if norm > 0.1 && norm < 1.0 {
            return v / norm;
        }
    }
}

pub fn random_ball(rng: &mut ChaCha8Rng, n: usize, rmax: f64) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0_f64));
        if v.norm() < 1.0 {
            return v * rmax;
        }
    }
}

pub fn random_model_point(rng: &mut ChaCha8Rng, space: &ModelSpace, rmax: f64) -> ModelPoint {
    ModelPoint::new(
        space
            .factor_dims()
            .iter()
            .map(|&n| random_ball(rng, n, rmax))
            .collect(),
    )
}

pub fn random_ideal_point(rng: &mut ChaCha8Rng, space: &ModelSpace) -> IdealPoint {
    IdealPoint::new(
        space
            .factor_dims()
            .iter()
            .map(|&n| random_unit(rng, n))
            .collect(),
    )
}

pub fn random_factor_matrix(rng: &mut ChaCha8Rng, n: usize, max_len: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n + 1, n + 1);
    for i in 0..n {
        for j in (i + 1)..n {
            m = Isometry::rotation_matrix(n, i, j, rng.random_range(0.0..std::f64::consts::TAU))
                * m;
        }
    }
    let axis = random_unit(rng, n);
    Isometry::boost_matrix(&axis, rng.random_range(0.0..max_len)) * m
}

pub fn random_space_isometry(rng: &mut ChaCha8Rng, space: &ModelSpace, max_len: f64) -> Isometry {
    let mats = space
        .factor_dims()
        .iter()
        .map(|&n| random_factor_matrix(rng, n, max_len))
        .collect();
    Isometry::from_factor_matrices(mats).expect("random factors are isometric")
}
