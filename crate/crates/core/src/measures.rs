//! Quadrature representations of interior measures on the model space and of
//! boundary measures on the Furstenberg boundary; pushforward and convolution
//! with the Patterson-Sullivan family.
//!
//! Boundary measures always carry densities against a fixed reference
//! quadrature. Measures produced by `convolve_with_ps` additionally keep their
//! generating interior mixture, which makes their density evaluable anywhere
//! on the boundary and makes isometry transport exact: transporting a mixture
//! moves its interior nodes and re-expands on the same reference.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryQuadrature, IdealPoint, Isometry, ModelPoint, ModelSpace};

/// Discrete interior measure: weighted points of a model space with the decay
/// parameter that produced the weights.
#[derive(Debug, Clone)]
pub struct InteriorMeasure {
    pub space: ModelSpace,
    pub nodes: Vec<ModelPoint>,
    pub weights: Vec<f64>,
    pub s: f64,
}

impl InteriorMeasure {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// The family mu^s_a: weights proportional to exp(-s d(a, z_j)) over the grid,
/// normalized to a probability measure.
///
/// Requires s strictly above the volume entropy of the source space; below it
/// the defining integral diverges and the truncation would be meaningless.
pub fn interior_family(
    space: &ModelSpace,
    a: &ModelPoint,
    s: f64,
    grid: &[ModelPoint],
) -> Result<InteriorMeasure> {
    if s <= space.entropy() {
        return Err(Error::SubcriticalParameter(format!(
            "s = {s} must exceed the volume entropy {}",
            space.entropy()
        )));
    }
    if grid.is_empty() {
        return Err(Error::Config("interior grid is empty".into()));
    }
    space.validate_point(a)?;
    // log-sum-exp normalization keeps far grids from underflowing
    let logs: Vec<f64> = grid
        .iter()
        .map(|z| -s * space.distance_unchecked(a, z))
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    Ok(InteriorMeasure {
        space: space.clone(),
        nodes: grid.to_vec(),
        weights: unnorm.into_iter().map(|w| w / total).collect(),
        s,
    })
}

/// Pushforward along a point map: nodes move, weights stay.
pub fn pushforward<F>(map: F, m: &InteriorMeasure, target: &ModelSpace) -> Result<InteriorMeasure>
where
    F: Fn(&ModelPoint) -> Result<ModelPoint>,
{
    let nodes = m.nodes.iter().map(&map).collect::<Result<Vec<_>>>()?;
    Ok(InteriorMeasure {
        space: target.clone(),
        nodes,
        weights: m.weights.clone(),
        s: m.s,
    })
}

/// Pushforward by an isometry.
pub fn pushforward_isometry(g: &Isometry, m: &InteriorMeasure) -> InteriorMeasure {
    InteriorMeasure {
        space: m.space.clone(),
        nodes: m.nodes.iter().map(|p| g.apply_point(p)).collect(),
        weights: m.weights.clone(),
        s: m.s,
    }
}

/// Probability measure on the Furstenberg boundary, stored as weights on a
/// shared reference quadrature, with the generating Patterson-Sullivan
/// mixture retained when known.
#[derive(Debug, Clone)]
pub struct BoundaryMeasure {
    pub reference: Arc<BoundaryQuadrature>,
    pub weights: Vec<f64>,
    /// Interior mixture (nodes, weights) whose PS convolution this measure
    /// discretizes; present for measures built by `convolve_with_ps`.
    pub mixture: Option<InteriorMeasure>,
}

impl BoundaryMeasure {
    /// The reference measure nu_o itself: the PS mixture of a point mass at
    /// the origin.
    pub fn reference_uniform(reference: Arc<BoundaryQuadrature>) -> Self {
        let space = reference.space.clone();
        let weights = reference.weights.clone();
        BoundaryMeasure {
            reference,
            weights,
            mixture: Some(InteriorMeasure {
                nodes: vec![space.origin()],
                weights: vec![1.0],
                s: f64::INFINITY,
                space,
            }),
        }
    }

    /// Raw weights on the reference (normalized here); no generator attached.
    pub fn from_weights(reference: Arc<BoundaryQuadrature>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != reference.len() {
            return Err(Error::IncompatibleMeasures(format!(
                "{} weights for {} reference nodes",
                weights.len(),
                reference.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::IllPosedMeasure("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::IllPosedMeasure("zero total mass".into()));
        }
        Ok(BoundaryMeasure {
            reference,
            weights: weights.into_iter().map(|w| w / total).collect(),
            mixture: None,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Checks the invariants required of barycenter inputs: probability mass,
    /// full support on the reference, no near-atom, and per-factor spanning
    /// support (no closed hemisphere of a factor sphere carrying all of it).
    pub fn validate(&self) -> Result<()> {
        if (self.total_mass() - 1.0).abs() > 1e-12 {
            return Err(Error::IllPosedMeasure(format!(
                "total mass {} differs from 1",
                self.total_mass()
            )));
        }
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::IllPosedMeasure(
                "not fully supported on the reference".into(),
            ));
        }
        if self.max_weight() >= 0.5 {
            return Err(Error::IllPosedMeasure(format!(
                "max weight {} >= 1/2",
                self.max_weight()
            )));
        }
        let space = &self.reference.space;
        for fi in 0..space.num_factors() {
            // weighted mean direction strictly inside the sphere rules out
            // support concentrated in a closed half-space cap
            let dim = space.factor_dims()[fi];
            let mut mean = nalgebra::DVector::zeros(dim);
            for (node, w) in self.reference.nodes.iter().zip(&self.weights) {
                mean += &node.factors[fi] * *w;
            }
            if mean.norm() > 1.0 - 1e-9 {
                return Err(Error::IllPosedMeasure(format!(
                    "support of factor {fi} concentrated near one direction"
                )));
            }
        }
        Ok(())
    }

    /// Log-density of the generating PS mixture at an arbitrary boundary
    /// point, relative to nu_o.
    pub fn log_density(&self, xi: &IdealPoint) -> Result<f64> {
        let mix = self.mixture.as_ref().ok_or_else(|| {
            Error::Evaluation("measure carries no closed-form generator".into())
        })?;
        let space = &self.reference.space;
        let logs: Vec<f64> = mix
            .nodes
            .iter()
            .zip(&mix.weights)
            .map(|(b, w)| w.ln() + space.log_ps_density_unchecked(b, xi))
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln())
    }

    /// Isometry transport g_* of a generated measure, re-expanded on the same
    /// reference by moving the interior mixture nodes and re-convolving.
    pub fn transport(&self, g: &Isometry) -> Result<BoundaryMeasure> {
        let mix = self.mixture.as_ref().ok_or_else(|| {
            Error::Evaluation("transport requires the generating mixture".into())
        })?;
        let moved = pushforward_isometry(g, mix);
        convolve_with_ps(&moved, Arc::clone(&self.reference))
    }

    pub fn same_reference(&self, other: &BoundaryMeasure) -> bool {
        Arc::ptr_eq(&self.reference, &other.reference)
            || (self.reference.space == other.reference.space
                && self.reference.budget == other.reference.budget
                && self.reference.len() == other.reference.len())
    }
}

/// Convolution of an interior measure with the Patterson-Sullivan family:
/// weight at reference node xi_k proportional to
/// W_k * sum_j w_j dnu_{b_j}/dnu_o(xi_k), normalized to total mass 1.
pub fn convolve_with_ps(
    m: &InteriorMeasure,
    reference: Arc<BoundaryQuadrature>,
) -> Result<BoundaryMeasure> {
    if m.space != reference.space {
        return Err(Error::IncompatibleMeasures(
            "interior measure and reference live on different spaces".into(),
        ));
    }
    let space = &reference.space;
    let mut weights = Vec::with_capacity(reference.len());
    for (xi, wref) in reference.nodes.iter().zip(&reference.weights) {
        // log-sum-exp over mixture nodes
        let logs: Vec<f64> = m
            .nodes
            .iter()
            .zip(&m.weights)
            .map(|(b, w)| w.ln() + space.log_ps_density_unchecked(b, xi))
            .collect();
        let mx = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let val = mx.exp() * logs.iter().map(|l| (l - mx).exp()).sum::<f64>();
        weights.push(wref * val);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(BoundaryMeasure {
        reference,
        weights,
        mixture: Some(m.clone()),
    })
}

/// Total variation distance of two measures on the same reference:
/// half the l1 gap of the weight vectors.
pub fn total_variation_distance(m1: &BoundaryMeasure, m2: &BoundaryMeasure) -> Result<f64> {
    if !m1.same_reference(m2) || m1.len() != m2.len() {
        return Err(Error::IncompatibleMeasures(
            "total variation requires a common reference".into(),
        ));
    }
    Ok(0.5
        * m1.weights
            .iter()
            .zip(&m2.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}
