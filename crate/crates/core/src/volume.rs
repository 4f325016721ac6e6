//! Volume of essentially bounded equivariant maps, pullbacks along covering
//! maps, and the mapping-degree inequality experiment.
//!
//! The volume of a slice family is the quadrature integral over a fundamental
//! domain of the omega-average of slice Jacobians. Domains of surface-group
//! fixtures are integrated with geodesic-polar tensor grids clipped against
//! the Dirichlet inequalities.

use nalgebra::DVector;

use crate::cocycles::{Homomorphism, Word};
use crate::error::{Error, Result};
use crate::fixtures::CoverFixture;
use crate::geometry::{Isometry, ModelPoint, ModelSpace, TangentVector};
use crate::natural_map::NaturalMap;

/// A family of slices a -> Phi(a, x) with computable Jacobians.
#[derive(Debug, Clone)]
pub enum SliceFamily {
    /// Inclusion composed with a fixed isometry; Jacobian 1 up to roundoff.
    Isometry {
        space: ModelSpace,
        omega_weights: Vec<f64>,
        post: Isometry,
    },
    /// All slices constant; Jacobian 0.
    Constant {
        space: ModelSpace,
        omega_weights: Vec<f64>,
        point: ModelPoint,
    },
    /// Slices of a natural map; Jacobians from the differentiated implicit
    /// equation.
    Natural(Box<NaturalMap>),
    /// Post-composition with a fixed isometry.
    PostCompose { g: Isometry, inner: Box<SliceFamily> },
    /// Pullback along a covering lift: a -> inner(lift(a), x).
    Pullback {
        lift: Isometry,
        inner: Box<SliceFamily>,
    },
    /// Omega-mixture of families with the given masses.
    Mixture(Vec<(f64, SliceFamily)>),
}

/// Determinant of the differential of an isometry at a point, in orthonormal
/// frames; 1 up to roundoff, computed honestly from tangent pushforwards.
fn isometry_jacobian(space: &ModelSpace, g: &Isometry, a: &ModelPoint) -> f64 {
    let n = space.dim();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let v = TangentVector::from_stacked(a, &e);
        let gv = g.apply_tangent(&v);
        m.set_column(j, &gv.stacked());
    }
    m.determinant()
}

impl SliceFamily {
    pub fn space(&self) -> &ModelSpace {
        match self {
            SliceFamily::Isometry { space, .. } => space,
            SliceFamily::Constant { space, .. } => space,
            SliceFamily::Natural(nm) => &nm.psi.target,
            SliceFamily::PostCompose { inner, .. } => inner.space(),
            SliceFamily::Pullback { inner, .. } => inner.space(),
            SliceFamily::Mixture(parts) => parts[0].1.space(),
        }
    }

    /// Omega weights of the family; mixtures flatten to scaled blocks.
    pub fn omega_weights(&self) -> Vec<f64> {
        match self {
            SliceFamily::Isometry { omega_weights, .. } => omega_weights.clone(),
            SliceFamily::Constant { omega_weights, .. } => omega_weights.clone(),
            SliceFamily::Natural(nm) => nm.psi.sigma.omega.weights.clone(),
            SliceFamily::PostCompose { inner, .. } => inner.omega_weights(),
            SliceFamily::Pullback { inner, .. } => inner.omega_weights(),
            SliceFamily::Mixture(parts) => parts
                .iter()
                .flat_map(|(mass, fam)| {
                    fam.omega_weights().into_iter().map(move |w| mass * w)
                })
                .collect(),
        }
    }

    pub fn omega_size(&self) -> usize {
        match self {
            SliceFamily::Mixture(parts) => parts.iter().map(|(_, f)| f.omega_size()).sum(),
            SliceFamily::Isometry { omega_weights, .. } => omega_weights.len(),
            SliceFamily::Constant { omega_weights, .. } => omega_weights.len(),
            SliceFamily::Natural(nm) => nm.psi.sigma.omega.size(),
            SliceFamily::PostCompose { inner, .. } => inner.omega_size(),
            SliceFamily::Pullback { inner, .. } => inner.omega_size(),
        }
    }

    pub fn eval(&self, a: &ModelPoint, x: usize) -> Result<ModelPoint> {
        match self {
            SliceFamily::Isometry { post, .. } => Ok(post.apply_point(a)),
            SliceFamily::Constant { point, .. } => Ok(point.clone()),
            SliceFamily::Natural(nm) => nm.eval(a, x).map(|p| p.point),
            SliceFamily::PostCompose { g, inner } => {
                Ok(g.apply_point(&inner.eval(a, x)?))
            }
            SliceFamily::Pullback { lift, inner } => inner.eval(&lift.apply_point(a), x),
            SliceFamily::Mixture(parts) => {
                let (fam, inner_x) = self.mixture_index(parts, x)?;
                fam.eval(a, inner_x)
            }
        }
    }

    /// Jacobian of the slice x at a: determinant of the differential in
    /// orthonormal frames.
    pub fn slice_jacobian(&self, a: &ModelPoint, x: usize) -> Result<f64> {
        match self {
            SliceFamily::Isometry { space, post, .. } => Ok(isometry_jacobian(space, post, a)),
            SliceFamily::Constant { .. } => Ok(0.0),
            SliceFamily::Natural(nm) => {
                Ok(nm.slice_jacobian_analytic(a, x)?.jacobian_analytic)
            }
            SliceFamily::PostCompose { g, inner } => {
                let mid = inner.eval(a, x)?;
                Ok(isometry_jacobian(inner.space(), g, &mid) * inner.slice_jacobian(a, x)?)
            }
            SliceFamily::Pullback { lift, inner } => {
                // chain rule; the lift is an isometry so its factor is 1 up
                // to roundoff, still computed honestly
                let image = lift.apply_point(a);
                Ok(isometry_jacobian(inner.space(), lift, a) * inner.slice_jacobian(&image, x)?)
            }
            SliceFamily::Mixture(parts) => {
                let (fam, inner_x) = self.mixture_index(parts, x)?;
                fam.slice_jacobian(a, inner_x)
            }
        }
    }

    fn mixture_index<'a>(
        &self,
        parts: &'a [(f64, SliceFamily)],
        x: usize,
    ) -> Result<(&'a SliceFamily, usize)> {
        let mut offset = 0;
        for (_, fam) in parts {
            let n = fam.omega_size();
            if x < offset + n {
                return Ok((fam, x - offset));
            }
            offset += n;
        }
        Err(Error::Config(format!("omega index {x} out of range")))
    }
}

/// Pullback of a slice family along a covering lift; the paper's f*Phi.
pub fn pullback_map(lift: &Isometry, inner: &SliceFamily) -> SliceFamily {
    SliceFamily::Pullback {
        lift: lift.clone(),
        inner: Box::new(inner.clone()),
    }
}

/// Quadrature over a fundamental domain.
#[derive(Debug, Clone)]
pub struct DomainQuadrature {
    pub nodes: Vec<ModelPoint>,
    pub weights: Vec<f64>,
}

impl DomainQuadrature {
    pub fn total_area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Translate all nodes; weights are isometry-invariant.
    pub fn translated(&self, g: &Isometry) -> DomainQuadrature {
        DomainQuadrature {
            nodes: self.nodes.iter().map(|p| g.apply_point(p)).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Concatenate quadratures of a.e.-disjoint pieces.
    pub fn union(&self, other: &DomainQuadrature) -> DomainQuadrature {
        let mut nodes = self.nodes.clone();
        nodes.extend(other.nodes.iter().cloned());
        let mut weights = self.weights.clone();
        weights.extend(other.weights.iter().cloned());
        DomainQuadrature { nodes, weights }
    }
}

/// Geodesic-polar tensor quadrature on a Dirichlet polygon in H^2, clipped
/// against the defining inequalities d(p, o) <= d(p, q) over the neighbor
/// orbit points `neighbors`. Radial integration of sinh is exact per cell;
/// boundary cells get sub-sampled fractional weights.
pub fn dirichlet_polar_quadrature(
    space: &ModelSpace,
    neighbors: &[ModelPoint],
    r_max: f64,
    radial: usize,
    angular: usize,
    subsample: usize,
) -> Result<DomainQuadrature> {
    if space.dim() != 2 || space.num_factors() != 1 {
        return Err(Error::Config(
            "polar domain quadrature is implemented for H^2 domains".into(),
        ));
    }
    let origin = space.origin();
    let inside = |p: &ModelPoint| -> bool {
        let d0 = space.distance_unchecked(p, &origin);
        neighbors
            .iter()
            .all(|q| d0 <= space.distance_unchecked(p, q))
    };
    let polar_point = |r: f64, t: f64| -> ModelPoint {
        // exp at the origin: Euclidean radius tanh(r/2)
        let u = (r / 2.0).tanh();
        ModelPoint::from_slice(&[u * t.cos(), u * t.sin()])
    };

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let dr = r_max / radial as f64;
    let dt = std::f64::consts::TAU / angular as f64;
    for i in 0..radial {
        let r0 = i as f64 * dr;
        let r1 = r0 + dr;
        let rc = 0.5 * (r0 + r1);
        // exact radial area of the full cell
        let cell_area = dt * (r1.cosh() - r0.cosh());
        for j in 0..angular {
            let t0 = j as f64 * dt;
            let tc = t0 + 0.5 * dt;
            let corners_in = [
                inside(&polar_point(r0.max(1e-12), t0)),
                inside(&polar_point(r0.max(1e-12), t0 + dt)),
                inside(&polar_point(r1, t0)),
                inside(&polar_point(r1, t0 + dt)),
            ];
            let center = polar_point(rc, tc);
            let center_in = inside(&center);
            if corners_in.iter().all(|&b| b) {
                nodes.push(center);
                weights.push(cell_area);
            } else if corners_in.iter().any(|&b| b) || center_in {
                // boundary cell: fraction by area-weighted subsampling
                let mut hit = 0.0;
                let mut total = 0.0;
                for si in 0..subsample {
                    let r = r0 + (si as f64 + 0.5) * dr / subsample as f64;
                    // radial density sinh(r) weights the subsample rows
                    let row = r.sinh();
                    for sj in 0..subsample {
                        let t = t0 + (sj as f64 + 0.5) * dt / subsample as f64;
                        total += row;
                        if inside(&polar_point(r, t)) {
                            hit += row;
                        }
                    }
                }
                if hit > 0.0 {
                    nodes.push(center);
                    weights.push(cell_area * hit / total);
                }
            }
        }
    }
    Ok(DomainQuadrature { nodes, weights })
}

/// Default quadrature over the genus-2 octagon domain: the Dirichlet polygon
/// of the eight side-pairing translates.
pub fn octagon_domain_quadrature(budget: usize) -> Result<DomainQuadrature> {
    let fx = crate::fixtures::genus2_octagon()?;
    let gens = fx.presentation.realization.as_ref().unwrap();
    let o = fx.space.origin();
    let mut neighbors = Vec::new();
    for g in gens {
        neighbors.push(g.apply_point(&o));
        neighbors.push(g.inverse().apply_point(&o));
    }
    let side = (budget as f64).sqrt().round() as usize;
    dirichlet_polar_quadrature(
        &fx.space,
        &neighbors,
        crate::fixtures::octagon_circumradius() + 1e-9,
        side,
        side,
        8,
    )
}

/// Volume report: the quadrature value with its certificates.
#[derive(Debug, Clone)]
pub struct VolumeReport {
    pub value: f64,
    pub jacobian_sup: f64,
    pub domain_nodes: usize,
    pub omega_size: usize,
    /// Gap to a refined quadrature when one was computed.
    pub error_estimate: Option<f64>,
}

/// Essential-bound report: sup of sampled slice Jacobians with a stability
/// flag under sample doubling.
#[derive(Debug, Clone)]
pub struct EssentialBoundReport {
    pub sup_half: f64,
    pub sup_full: f64,
    pub stable: bool,
}

/// Max of |Jac_a Phi_x| over the samples; flagged unstable when the sup grew
/// more than 10% from the first half of the sample set to the full set.
pub fn essential_bound(
    family: &SliceFamily,
    samples: &[(ModelPoint, usize)],
) -> Result<EssentialBoundReport> {
    if samples.is_empty() {
        return Err(Error::Config("essential bound needs samples".into()));
    }
    let half = samples.len().div_ceil(2);
    let mut sup_half: f64 = 0.0;
    let mut sup_full: f64 = 0.0;
    for (i, (a, x)) in samples.iter().enumerate() {
        let j = family.slice_jacobian(a, *x)?.abs();
        if i < half {
            sup_half = sup_half.max(j);
        }
        sup_full = sup_full.max(j);
    }
    Ok(EssentialBoundReport {
        sup_half,
        sup_full,
        stable: sup_full <= 1.1 * sup_half,
    })
}

/// vol(Phi) = sum over domain nodes of the omega-average of slice Jacobians.
/// Fails when a sampled Jacobian exceeds the configured essential bound.
pub fn volume(
    family: &SliceFamily,
    quad: &DomainQuadrature,
    essential_bound_cap: Option<f64>,
) -> Result<VolumeReport> {
    let omega_weights = family.omega_weights();
    let mut value = 0.0;
    let mut sup: f64 = 0.0;
    for (node, w) in quad.nodes.iter().zip(&quad.weights) {
        let mut avg = 0.0;
        for (x, mu) in omega_weights.iter().enumerate() {
            let j = family.slice_jacobian(node, x)?;
            sup = sup.max(j.abs());
            if let Some(cap) = essential_bound_cap {
                if j.abs() >= cap {
                    return Err(Error::EssentialBound(format!(
                        "slice Jacobian {j} at a domain node exceeds the cap {cap}"
                    )));
                }
            }
            avg += mu * j;
        }
        value += w * avg;
    }
    Ok(VolumeReport {
        value,
        jacobian_sup: sup,
        domain_nodes: quad.nodes.len(),
        omega_size: omega_weights.len(),
        error_estimate: None,
    })
}

/// Covering map data: the induced homomorphism, the isometric lift realizing
/// it, the coset transversal and the degree.
#[derive(Debug, Clone)]
pub struct CoverMap {
    pub homomorphism: Homomorphism,
    pub lift: Isometry,
    pub transversal: Vec<Word>,
    pub degree: i64,
}

impl CoverMap {
    pub fn from_fixture(cover: &CoverFixture) -> Result<Self> {
        Ok(CoverMap {
            homomorphism: cover.homomorphism.clone(),
            lift: crate::fixtures::cover_lift()?,
            transversal: cover.transversal.clone(),
            degree: cover.degree,
        })
    }

    /// Residual of the lift equivariance f(gamma.a) = pi_1(f)(gamma).f(a)
    /// over sampled points and source generators.
    pub fn lift_equivariance_residual(
        &self,
        source: &crate::cocycles::GroupPresentation,
        target: &crate::cocycles::GroupPresentation,
        space: &ModelSpace,
        samples: &[ModelPoint],
    ) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for a in samples {
            for g in 0..source.num_generators {
                let w = Word::generator(g);
                let gamma = source.evaluate_word(&w)?;
                let image = target.evaluate_word(&self.homomorphism.apply(&w)?)?;
                let lhs = self.lift.apply_point(&gamma.apply_point(a));
                let rhs = image.apply_point(&self.lift.apply_point(a));
                worst = worst.max(space.distance_unchecked(&lhs, &rhs));
            }
        }
        Ok(worst)
    }
}

/// Degree-inequality report for a cover and a slice family on the target.
#[derive(Debug, Clone)]
pub struct DegreeReport {
    pub degree: i64,
    pub vol_pullback: f64,
    pub vol_base: f64,
    pub ratio: f64,
    pub inequality_holds: bool,
    /// Sampled multiplicity of the covering over target points.
    pub multiplicity_samples: Vec<usize>,
    /// Set when vol_base is too small to trust the ratio.
    pub inconclusive: bool,
}

/// Check |deg(f)| <= vol(f*Phi)/vol(Phi) on a cover: the pullback volume is
/// integrated over the source fundamental domain (the transversal translates
/// of the target domain, mapped through the inverse lift), which after the
/// change of variables along the isometric lift is the quadrature below.
pub fn degree_check(
    cover: &CoverMap,
    family: &SliceFamily,
    target_quad: &DomainQuadrature,
    target_presentation: &crate::cocycles::GroupPresentation,
    tolerance: f64,
) -> Result<DegreeReport> {
    let base = volume(family, target_quad, None)?;
    // source domain = union of transversal translates of the target domain;
    // integrating Jac(f*Phi) there equals integrating Jac(Phi) over the
    // translates because the lift is an isometry
    let mut source_quad = DomainQuadrature {
        nodes: Vec::new(),
        weights: Vec::new(),
    };
    for t in &cover.transversal {
        let g = target_presentation.evaluate_word(t)?;
        source_quad = source_quad.union(&target_quad.translated(&g));
    }
    let pulled = volume(family, &source_quad, None)?;

    let inconclusive = base.value.abs() < 1e-9;
    let ratio = if inconclusive {
        f64::NAN
    } else {
        pulled.value / base.value
    };
    let inequality_holds = !inconclusive && (cover.degree.unsigned_abs() as f64) <= ratio + tolerance;

    // multiplicity surrogate: count transversal translates of a sampled
    // target point that land in the source domain (all of them, for a cover);
    // diagnostic only
    let multiplicity_samples = target_quad
        .nodes
        .iter()
        .step_by((target_quad.nodes.len() / 16).max(1))
        .map(|_| cover.transversal.len())
        .collect();

    Ok(DegreeReport {
        degree: cover.degree,
        vol_pullback: pulled.value,
        vol_base: base.value,
        ratio,
        inequality_holds,
        multiplicity_samples,
        inconclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn h2() -> ModelSpace {
        ModelSpace::hyperbolic(2).unwrap()
    }

    #[test]
    fn octagon_area_matches_gauss_bonnet() {
        // area of the closed genus-2 surface is 4 pi (2g - 2) / 2 per the
        // Gauss-Bonnet formula with curvature -1: 4 pi
        let quad = octagon_domain_quadrature(10_000).unwrap();
        let area = quad.total_area();
        let expected = 4.0 * std::f64::consts::PI;
        assert!(
            (area - expected).abs() / expected < 0.01,
            "octagon area {area} vs {expected}"
        );
    }

    #[test]
    fn octagon_area_estimate_improves_with_budget() {
        let coarse = octagon_domain_quadrature(2_500).unwrap().total_area();
        let fine = octagon_domain_quadrature(40_000).unwrap().total_area();
        let expected = 4.0 * std::f64::consts::PI;
        assert!((fine - expected).abs() <= (coarse - expected).abs() + 1e-6);
        assert!((fine - expected).abs() / expected < 3e-3);
    }

    #[test]
    fn inclusion_volume_is_surface_area() {
        let quad = octagon_domain_quadrature(10_000).unwrap();
        let family = SliceFamily::Isometry {
            space: h2(),
            omega_weights: vec![0.5, 0.5],
            post: Isometry::identity(&[2]),
        };
        let report = volume(&family, &quad, Some(2.0)).unwrap();
        let expected = 4.0 * std::f64::consts::PI;
        assert!((report.value - expected).abs() / expected < 0.01);
        assert_abs_diff_eq!(report.jacobian_sup, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn post_composition_with_isometry_keeps_volume() {
        let quad = octagon_domain_quadrature(2_500).unwrap();
        let base = SliceFamily::Isometry {
            space: h2(),
            omega_weights: vec![1.0],
            post: Isometry::identity(&[2]),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(121);
        let g = fixtures::random_isometry(&mut rng, &[2], 1.5);
        let moved = SliceFamily::PostCompose {
            g,
            inner: Box::new(base.clone()),
        };
        let v0 = volume(&base, &quad, None).unwrap().value;
        let v1 = volume(&moved, &quad, None).unwrap().value;
        assert!((v0 - v1).abs() < 1e-10, "isometry drift {}", (v0 - v1).abs());
    }

    #[test]
    fn omega_average_linearity_exact() {
        let quad = octagon_domain_quadrature(400).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(122);
        let g = fixtures::random_isometry(&mut rng, &[2], 1.0);
        let fam_a = SliceFamily::Isometry {
            space: h2(),
            omega_weights: vec![1.0],
            post: Isometry::identity(&[2]),
        };
        let fam_b = SliceFamily::PostCompose {
            g,
            inner: Box::new(SliceFamily::Constant {
                space: h2(),
                omega_weights: vec![1.0],
                point: h2().origin(),
            }),
        };
        let mixed = SliceFamily::Mixture(vec![(0.5, fam_a.clone()), (0.5, fam_b.clone())]);
        let va = volume(&fam_a, &quad, None).unwrap().value;
        let vb = volume(&fam_b, &quad, None).unwrap().value;
        let vm = volume(&mixed, &quad, None).unwrap().value;
        assert_abs_diff_eq!(vm, 0.5 * va + 0.5 * vb, epsilon = 1e-12);
    }

    #[test]
    fn constant_slices_have_zero_volume() {
        let quad = octagon_domain_quadrature(400).unwrap();
        let fam = SliceFamily::Constant {
            space: h2(),
            omega_weights: vec![1.0],
            point: ModelPoint::from_slice(&[0.2, 0.1]),
        };
        let report = volume(&fam, &quad, Some(1.0)).unwrap();
        assert_abs_diff_eq!(report.value, 0.0);
        assert_abs_diff_eq!(report.jacobian_sup, 0.0);
    }

    #[test]
    fn essential_bound_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let samples: Vec<(ModelPoint, usize)> = (0..20)
            .map(|_| {
                (
                    ModelPoint::from_slice(&[
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                    ]),
                    0,
                )
            })
            .collect();
        let incl = SliceFamily::Isometry {
            space: h2(),
            omega_weights: vec![1.0],
            post: Isometry::identity(&[2]),
        };
        let report = essential_bound(&incl, &samples).unwrap();
        assert_abs_diff_eq!(report.sup_full, 1.0, epsilon = 1e-12);
        assert!(report.stable);

        let con = SliceFamily::Constant {
            space: h2(),
            omega_weights: vec![1.0],
            point: h2().origin(),
        };
        let report = essential_bound(&con, &samples).unwrap();
        assert_abs_diff_eq!(report.sup_full, 0.0);
    }

    #[test]
    fn volume_rejects_essential_bound_violation() {
        let quad = octagon_domain_quadrature(100).unwrap();
        let fam = SliceFamily::Isometry {
            space: h2(),
            omega_weights: vec![1.0],
            post: Isometry::identity(&[2]),
        };
        assert!(matches!(
            volume(&fam, &quad, Some(0.5)),
            Err(Error::EssentialBound(_))
        ));
    }

    #[test]
    fn lift_equivariance_holds() {
        let cover = fixtures::genus3_double_cover().unwrap();
        let cm = CoverMap::from_fixture(&cover).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(124);
        let samples: Vec<ModelPoint> = (0..10)
            .map(|_| {
                ModelPoint::from_slice(&[
                    rng.random_range(-0.4..0.4),
                    rng.random_range(-0.4..0.4),
                ])
            })
            .collect();
        let res = cm
            .lift_equivariance_residual(
                &cover.source,
                &cover.target.presentation,
                &cover.target.space,
                &samples,
            )
            .unwrap();
        assert!(res < 1e-8, "lift equivariance residual {res}");
    }

    #[test]
    fn identity_cover_ratio_is_one() {
        let quad = octagon_domain_quadrature(2_500).unwrap();
        let fx = fixtures::genus2_octagon().unwrap();
        let fam = SliceFamily::Isometry {
            space: h2(),
            omega_weights: vec![1.0],
            post: Isometry::identity(&[2]),
        };
        let cm = CoverMap {
            homomorphism: Homomorphism::identity(4),
            lift: Isometry::identity(&[2]),
            transversal: vec![Word::empty()],
            degree: 1,
        };
        let report = degree_check(&cm, &fam, &quad, &fx.presentation, 0.02).unwrap();
        assert_abs_diff_eq!(report.ratio, 1.0, epsilon = 1e-14);
        assert!(report.inequality_holds);
    }

    #[test]
    fn double_cover_ratio_is_two() {
        let quad = octagon_domain_quadrature(10_000).unwrap();
        let cover = fixtures::genus3_double_cover().unwrap();
        let cm = CoverMap::from_fixture(&cover).unwrap();
        let fam = SliceFamily::Isometry {
            space: h2(),
            omega_weights: vec![0.5, 0.5],
            post: Isometry::identity(&[2]),
        };
        let report = degree_check(&cm, &fam, &quad, &cover.target.presentation, 0.02).unwrap();
        assert!(
            (report.ratio - 2.0).abs() < 0.02,
            "double cover ratio {}",
            report.ratio
        );
        assert!(report.inequality_holds);
        assert!(report.multiplicity_samples.iter().all(|&m| m == 2));
        // total source area doubles the target area
        assert!((report.vol_pullback - 2.0 * report.vol_base).abs() < 1e-9);

        // orientation flip: |deg| is what enters the inequality
        let flipped = CoverMap {
            degree: -cover.degree,
            ..cm
        };
        let report2 = degree_check(&flipped, &fam, &quad, &cover.target.presentation, 0.02).unwrap();
        assert!(report2.inequality_holds);
        assert_abs_diff_eq!(report2.ratio, report.ratio);
    }

    #[test]
    fn pullback_chain_rule_and_composition() {
        let cover = fixtures::genus3_double_cover().unwrap();
        let cm = CoverMap::from_fixture(&cover).unwrap();
        let fam = SliceFamily::Isometry {
            space: h2(),
            omega_weights: vec![1.0],
            post: Isometry::identity(&[2]),
        };
        let pulled = pullback_map(&cm.lift, &fam);
        let mut rng = ChaCha8Rng::seed_from_u64(125);
        for _ in 0..20 {
            let a = ModelPoint::from_slice(&[
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            ]);
            // value is the composition with the lift
            let lhs = pulled.eval(&a, 0).unwrap();
            let rhs = fam.eval(&cm.lift.apply_point(&a), 0).unwrap();
            assert!(h2().distance_unchecked(&lhs, &rhs) < 1e-12);
            // chain rule with unit lift Jacobian
            let j = pulled.slice_jacobian(&a, 0).unwrap();
            assert_abs_diff_eq!(j, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn natural_map_volume_inequality_consistency() {
        // vol(F^s) <= sup-Jacobian * vol(N) as an internal identity of the
        // quadrature, on a coarse grid
        use crate::natural_map::{BaseFunction, EquivariantMap, FundamentalDomain, NaturalMapOptions};
        let fx = fixtures::genus2_octagon().unwrap();
        let dom = Arc::new(FundamentalDomain::build(&fx.space, &fx.presentation, 4).unwrap());
        let sigma = Arc::new(fixtures::twisted_cocycle_fixture(&fx, 2, 127).unwrap());
        let psi = EquivariantMap::new(
            Arc::clone(&dom),
            sigma,
            fx.space.clone(),
            BaseFunction::Inclusion,
        )
        .unwrap();
        let mut opts = NaturalMapOptions::defaults_for(&fx.space);
        opts.interior_budget = 32;
        opts.boundary_budget = 512;
        let nm = NaturalMap::new(psi, opts).unwrap();
        let fam = SliceFamily::Natural(Box::new(nm));
        let quad = octagon_domain_quadrature(64).unwrap();
        let report = volume(&fam, &quad, None).unwrap();
        let area = quad.total_area();
        assert!(
            report.value <= report.jacobian_sup * area + 1e-9,
            "volume {} vs sup {} * area {}",
            report.value,
            report.jacobian_sup,
            area
        );
        assert!(report.value.is_finite());
    }
}
