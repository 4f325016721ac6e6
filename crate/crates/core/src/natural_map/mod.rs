//! Measurable equivariant maps from fundamental domains, the natural map
//! F^s = barycenter of the Patterson-Sullivan convolution of the pushed
//! forward interior family, equivariance testing, and slice Jacobians with
//! the Cauchy-Schwarz bound chain.

pub mod domain;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::barycenter::{barycenter, BarycenterOptions, BarycenterResult};
use crate::cocycles::{Cocycle, OmegaMap, Word};
use crate::error::{Error, Result};
use crate::geometry::{
    boundary_quadrature, BoundaryQuadrature, ModelPoint, ModelSpace, TangentVector,
};
use crate::measures::{convolve_with_ps, BoundaryMeasure, InteriorMeasure};

pub use domain::{FundamentalDomain, GridNode, GridSelection, Located, OrbitElement};

/// Base function q on (fundamental domain) x Omega for building equivariant
/// maps.
#[derive(Debug, Clone)]
pub enum BaseFunction {
    /// q(a, x) = fixed point of the target.
    Constant(ModelPoint),
    /// q(a, x) = a; requires the source and target spaces to coincide.
    Inclusion,
    /// q(a, x) = g(a) for a fixed isometry, e.g. the lift of a covering map.
    FixedIsometry(crate::geometry::Isometry),
    /// q(a, x) = T_x(a); requires matching spaces.
    PerOmegaIsometry(Vec<crate::geometry::Isometry>),
}

/// A measurable sigma-equivariant map: base function on the Dirichlet domain
/// extended by psi(gamma.a0, gamma.x0) = sigma(gamma, x0) q(a0, x0).
///
/// Twisting by an omega map f multiplies the base by f(x0)^-1 and replaces
/// the cocycle by f.sigma; the extension rule then reproduces
/// (f.psi)(a, x) = f(x)^-1 psi(a, x) on all of Y.
#[derive(Debug, Clone)]
pub struct EquivariantMap {
    pub domain: Arc<FundamentalDomain>,
    pub sigma: Arc<Cocycle>,
    pub target: ModelSpace,
    pub base_fn: BaseFunction,
    /// Accumulated twist applied at the base as f(x0)^-1 q(a0, x0).
    pub base_twist: Option<OmegaMap>,
}

impl EquivariantMap {
    pub fn new(
        domain: Arc<FundamentalDomain>,
        sigma: Arc<Cocycle>,
        target: ModelSpace,
        base_fn: BaseFunction,
    ) -> Result<Self> {
        if sigma.presentation.num_generators != domain.presentation.num_generators {
            return Err(Error::Config(
                "cocycle and domain have different generator counts".into(),
            ));
        }
        Ok(Self {
            domain,
            sigma,
            target,
            base_fn,
            base_twist: None,
        })
    }

    fn base_value(&self, a0: &ModelPoint, x0: usize) -> Result<ModelPoint> {
        let q = match &self.base_fn {
            BaseFunction::Constant(p) => p.clone(),
            BaseFunction::Inclusion => a0.clone(),
            BaseFunction::FixedIsometry(g) => g.apply_point(a0),
            BaseFunction::PerOmegaIsometry(ts) => ts
                .get(x0)
                .ok_or_else(|| Error::Config("omega point out of range".into()))?
                .apply_point(a0),
        };
        Ok(match &self.base_twist {
            None => q,
            Some(f) => f.table[x0].inverse().apply_point(&q),
        })
    }

    /// psi(a, x) through the Dirichlet location of `a`.
    pub fn eval(&self, a: &ModelPoint, x: usize) -> Result<ModelPoint> {
        let located = self.domain.locate(a)?;
        self.eval_located(&located.word, &located.representative, x)
    }

    /// psi(gamma.a0, x) when the location (gamma, a0) is already known;
    /// exact for orbit grids where gamma is carried with the node.
    pub fn eval_located(&self, gamma: &Word, a0: &ModelPoint, x: usize) -> Result<ModelPoint> {
        let x0 = self.sigma.omega.act_word(&gamma.inverse(), x);
        let q = self.base_value(a0, x0)?;
        let g = self.sigma.evaluate(gamma, x0)?;
        Ok(g.apply_point(&q))
    }

    /// The slice psi_x as a closure.
    pub fn slice(&self, x: usize) -> impl Fn(&ModelPoint) -> Result<ModelPoint> + '_ {
        move |a| self.eval(a, x)
    }
}

/// Twisted equivariant map (f.psi)(a, x) = f(x)^-1 psi(a, x), equivariant for
/// the twisted cocycle f.sigma.
pub fn twist_equivariant_map(f: &OmegaMap, psi: &EquivariantMap) -> Result<EquivariantMap> {
    if f.table.len() != psi.sigma.omega.size() {
        return Err(Error::IncompatibleOmega(
            "omega map size differs from the cocycle's omega".into(),
        ));
    }
    let twisted_sigma = crate::cocycles::twist(f, &psi.sigma)?;
    // double twists compose pointwise: the base factor becomes
    // (prev(x) f(x))^-1, matching f.(prev.sigma) = (prev compose f).sigma
    let combined = match &psi.base_twist {
        None => f.clone(),
        Some(prev) => prev.compose(f),
    };
    Ok(EquivariantMap {
        domain: Arc::clone(&psi.domain),
        sigma: Arc::new(twisted_sigma),
        target: psi.target.clone(),
        base_fn: psi.base_fn.clone(),
        base_twist: Some(combined),
    })
}

/// Max over samples (gamma, a, x) of d(map(gamma.a, gamma.x),
/// sigma(gamma, x) map(a, x)).
pub fn equivariance_residual<F>(
    map: F,
    sigma: &Cocycle,
    space_target: &ModelSpace,
    samples: &[(Word, ModelPoint, usize)],
) -> Result<f64>
where
    F: Fn(&ModelPoint, usize) -> Result<ModelPoint>,
{
    let mut worst: f64 = 0.0;
    for (gamma, a, x) in samples {
        let g = sigma
            .presentation
            .realization
            .as_ref()
            .ok_or_else(|| Error::Config("equivariance test needs a realized group".into()))?;
        let _ = g;
        let gamma_iso = sigma.presentation.evaluate_word(gamma)?;
        let ga = gamma_iso.apply_point(a);
        let gx = sigma.omega.act_word(gamma, *x);
        let lhs = map(&ga, gx)?;
        let rhs = sigma.evaluate(gamma, *x)?.apply_point(&map(a, *x)?);
        worst = worst.max(space_target.distance_unchecked(&lhs, &rhs));
    }
    Ok(worst)
}

/// Quadrature budgets and solver options of a natural map.
#[derive(Debug, Clone)]
pub struct NaturalMapOptions {
    /// Decay parameter; must exceed the volume entropy of the source space.
    pub s: f64,
    /// Number of nearest orbit nodes in the interior grid.
    pub interior_budget: usize,
    /// Per-factor budget of the boundary reference quadrature.
    pub boundary_budget: usize,
    pub solver: BarycenterOptions,
    /// Grid nodes closer than this to the evaluation point are dropped from
    /// derivative quadratures, where the distance gradient is undefined.
    pub exclusion_radius: f64,
    /// Step of the central-difference Jacobian oracle.
    pub fd_step: f64,
}

impl NaturalMapOptions {
    /// Defaults for a source space: s = 1.2 h(Y), budgets tuned per factor
    /// dimension so the PS kernels of retained interior nodes stay resolved
    /// on the reference.
    pub fn defaults_for(space: &ModelSpace) -> Self {
        Self {
            s: 1.2 * space.entropy(),
            interior_budget: 48,
            boundary_budget: 4096,
            solver: BarycenterOptions::default(),
            exclusion_radius: 1e-6,
            fd_step: 1e-4,
        }
    }

    fn tight_solver(&self) -> BarycenterOptions {
        BarycenterOptions {
            tolerance: 1e-10,
            ..self.solver.clone()
        }
    }
}

/// One natural-map evaluation with its certificates.
#[derive(Debug, Clone)]
pub struct NaturalMapPoint {
    pub point: ModelPoint,
    pub barycenter: BarycenterResult,
    /// The convolved boundary measure that was minimized.
    pub measure: BoundaryMeasure,
    pub grid_size: usize,
}

/// Jacobian of one slice at one point, with the bound chain of the
/// differentiated implicit equation.
#[derive(Debug, Clone)]
pub struct JacobianReport {
    pub point: ModelPoint,
    pub omega_point: usize,
    pub jacobian_analytic: f64,
    pub jacobian_fd: Option<f64>,
    /// s^n sqrt(det A) sqrt(det B) / det L, the Cauchy-Schwarz bound.
    pub bound_value: f64,
    /// (s/sqrt(n))^n sqrt(det A) / det L, after the trace normalization.
    pub bound_simplified: f64,
    /// det of the mixed bilinear form (numerator of the determinant ratio).
    pub numerator_det: f64,
    /// det of the Hessian-average form (denominator).
    pub denominator_det: f64,
    pub hessian_min_eigenvalue: f64,
    pub barycenter_residual: f64,
    /// Weight fraction dropped by the coincidence exclusion.
    pub excluded_weight: f64,
}

/// The natural map F^s of an equivariant map: parameters plus the evaluation
/// pipeline producing F^s(a, x) and slice Jacobians.
#[derive(Debug, Clone)]
pub struct NaturalMap {
    pub psi: EquivariantMap,
    pub reference: Arc<BoundaryQuadrature>,
    pub opts: NaturalMapOptions,
}

impl NaturalMap {
    pub fn new(psi: EquivariantMap, opts: NaturalMapOptions) -> Result<Self> {
        let source = &psi.domain.space;
        if opts.s <= source.entropy() {
            return Err(Error::SubcriticalParameter(format!(
                "s = {} must exceed h(Y) = {}",
                opts.s,
                source.entropy()
            )));
        }
        let reference = Arc::new(boundary_quadrature(&psi.target, opts.boundary_budget)?);
        Ok(Self {
            psi,
            reference,
            opts,
        })
    }

    /// The covariant interior grid at `a`, in global coordinates.
    pub fn grid_at(&self, a: &ModelPoint) -> Result<GridSelection> {
        self.psi.domain.covariant_grid(a, self.opts.interior_budget)
    }

    /// Normalize the evaluation to the Dirichlet frame of `a`: the interior
    /// family, pushforward and convolution are assembled at the located
    /// representative, where the Patterson-Sullivan kernels stay resolved on
    /// the fixed reference, and the solved barycenter is transported back by
    /// the cocycle value of the located word. This is the equivariant-chart
    /// discretization of bar(mu^s_{a,x}); a fixed-chart quadrature would need
    /// a reference of size e^{d(o,a)} to resolve the same kernels.
    fn frame_problem(&self, a: &ModelPoint, x: usize) -> Result<FrameProblem> {
        let located = self.psi.domain.locate(a)?;
        let x0 = self
            .psi
            .sigma
            .omega
            .act_word(&located.word.inverse(), x);
        let transport = self.psi.sigma.evaluate(&located.word, x0)?;
        let a0 = located.representative.clone();

        // nearest interior nodes to a0 from the enumerated orbit, with ties
        let dom = &self.psi.domain;
        let mut scored: Vec<(f64, usize)> = dom
            .elements()
            .iter()
            .enumerate()
            .map(|(i, e)| (dom.space.distance_unchecked(&a0, &e.point), i))
            .collect();
        scored.sort_by(|u, v| {
            u.0.total_cmp(&v.0).then_with(|| {
                domain::word_order_key(&dom.elements()[u.1].word)
                    .cmp(&domain::word_order_key(&dom.elements()[v.1].word))
            })
        });
        let budget = self.opts.interior_budget.min(scored.len());
        let cutoff = scored[budget - 1].0;
        let mut nodes = Vec::new();
        let mut images = Vec::new();
        let mut dists = Vec::new();
        for (d, i) in scored {
            if d > cutoff + 1e-9 {
                break;
            }
            let e = &dom.elements()[i];
            nodes.push(e.point.clone());
            dists.push(d);
            images.push(self.psi.eval_located(&e.word, &dom.base, x0)?);
        }
        Ok(FrameProblem {
            a0,
            x0,
            transport,
            nodes,
            images,
            dists,
        })
    }

    fn measure_of(&self, fp: &FrameProblem, at: &ModelPoint) -> Result<BoundaryMeasure> {
        let weights = self.weights_at(&fp.nodes, at);
        let pushed = InteriorMeasure {
            space: self.psi.target.clone(),
            nodes: fp.images.clone(),
            weights,
            s: self.opts.s,
        };
        convolve_with_ps(&pushed, Arc::clone(&self.reference))
    }

    /// Full pipeline: interior family at `a`, pushforward along the slice
    /// psi_x, convolution with the Patterson-Sullivan family, barycenter.
    pub fn eval(&self, a: &ModelPoint, x: usize) -> Result<NaturalMapPoint> {
        let fp = self.frame_problem(a, x)?;
        let measure = self.measure_of(&fp, &fp.a0)?;
        let result = barycenter(&measure, &self.opts.solver)?;
        if !result.converged {
            return Err(Error::NonConverged(format!(
                "barycenter residual {} after {} iterations",
                result.residual, result.iterations
            )));
        }
        Ok(NaturalMapPoint {
            point: fp.transport.apply_point(&result.point),
            barycenter: result,
            measure,
            grid_size: fp.nodes.len(),
        })
    }

    /// The convolved boundary measure mu^s_{a,x} on the reference, assembled
    /// in global coordinates from a covariant grid; used by the matched-
    /// quadrature equivariance checks of the measure family.
    pub fn convolved_measure(
        &self,
        grid: &GridSelection,
        a: &ModelPoint,
        x: usize,
    ) -> Result<BoundaryMeasure> {
        let s = self.opts.s;
        let logs: Vec<f64> = grid
            .nodes
            .iter()
            .map(|n| -s * n.distance_to_center)
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        let weights: Vec<f64> = unnorm.into_iter().map(|w| w / total).collect();

        let nodes = grid
            .nodes
            .iter()
            .map(|n| self.psi.eval_located(&n.word, &self.psi.domain.base, x))
            .collect::<Result<Vec<_>>>()?;
        let pushed = InteriorMeasure {
            space: self.psi.target.clone(),
            nodes,
            weights,
            s,
        };
        let _ = a;
        convolve_with_ps(&pushed, Arc::clone(&self.reference))
    }

    /// Max pairwise distance of the slices at `a` over all omega points:
    /// zero for cocycles of representations.
    pub fn slice_spread(&self, a: &ModelPoint) -> Result<f64> {
        let m = self.psi.sigma.omega.size();
        let points: Vec<ModelPoint> = (0..m)
            .map(|x| self.eval(a, x).map(|p| p.point))
            .collect::<Result<Vec<_>>>()?;
        let mut spread: f64 = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                spread = spread.max(self.psi.target.distance_unchecked(&points[i], &points[j]));
            }
        }
        Ok(spread)
    }

    /// Frozen-grid data for derivative work at (a, x): the frame problem with
    /// coincident nodes excluded (the distance gradient is undefined there)
    /// and the dropped weight recorded.
    fn frozen_grid(&self, a: &ModelPoint, x: usize) -> Result<(FrameProblem, f64)> {
        let fp = self.frame_problem(a, x)?;
        let s = self.opts.s;
        let mut nodes = Vec::new();
        let mut images = Vec::new();
        let mut dists = Vec::new();
        let mut excluded_raw = 0.0;
        let mut kept_raw = 0.0;
        for ((node, image), d) in fp.nodes.iter().zip(&fp.images).zip(&fp.dists) {
            let w_raw = (-s * d).exp();
            if *d < self.opts.exclusion_radius {
                excluded_raw += w_raw;
                continue;
            }
            kept_raw += w_raw;
            nodes.push(node.clone());
            images.push(image.clone());
            dists.push(*d);
        }
        if nodes.is_empty() {
            return Err(Error::Evaluation("frozen grid is empty".into()));
        }
        let excluded = excluded_raw / (excluded_raw + kept_raw);
        Ok((
            FrameProblem {
                a0: fp.a0,
                x0: fp.x0,
                transport: fp.transport,
                nodes,
                images,
                dists,
            },
            excluded,
        ))
    }

    fn weights_at(&self, nodes: &[ModelPoint], a: &ModelPoint) -> Vec<f64> {
        let source = &self.psi.domain.space;
        let s = self.opts.s;
        let logs: Vec<f64> = nodes
            .iter()
            .map(|z| -s * source.distance_unchecked(a, z))
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        unnorm.into_iter().map(|w| w / total).collect()
    }

    fn solve_on_frozen(
        &self,
        frozen: &FrameProblem,
        at: &ModelPoint,
        solver: &BarycenterOptions,
    ) -> Result<BarycenterResult> {
        let measure = self.measure_of(frozen, at)?;
        let result = barycenter(&measure, solver)?;
        if !result.converged {
            return Err(Error::NonConverged(format!(
                "frozen-grid barycenter residual {}",
                result.residual
            )));
        }
        Ok(result)
    }

    /// Assemble the differentiated implicit equation at (a, x) and solve the
    /// linear system for the slice differential; returns the determinant with
    /// the Cauchy-Schwarz bound chain. All forms are assembled in the
    /// Dirichlet frame; Jacobians and bounds are frame-invariant.
    pub fn slice_jacobian_analytic(&self, a: &ModelPoint, x: usize) -> Result<JacobianReport> {
        let source = self.psi.domain.space.clone();
        let target = self.psi.target.clone();
        let n_y = source.dim();
        let n_x = target.dim();
        if n_y != n_x {
            return Err(Error::Config(format!(
                "slice Jacobian needs equal dimensions, got {n_y} and {n_x}"
            )));
        }
        let (frozen, excluded_weight) = self.frozen_grid(a, x)?;
        let a0 = frozen.a0.clone();
        let solved = self.solve_on_frozen(&frozen, &a0, &self.opts.tight_solver())?;
        let f_point = &solved.point;

        let w = self.weights_at(&frozen.nodes, &a0);
        // joint measure over (interior node j, reference node k), normalized
        let nk = self.reference.len();
        let nj = frozen.nodes.len();
        let mut kernel = vec![0.0; nj * nk];
        let mut total = 0.0;
        for (j, b) in frozen.images.iter().enumerate() {
            for (k, xi) in self.reference.nodes.iter().enumerate() {
                let v = w[j]
                    * self.reference.weights[k]
                    * target.log_ps_density_unchecked(b, xi).exp();
                kernel[j * nk + k] = v;
                total += v;
            }
        }
        for v in &mut kernel {
            *v /= total;
        }

        // boundary marginals and the gradient/Hessian data at the barycenter
        let grads: Vec<DVector<f64>> = self
            .reference
            .nodes
            .iter()
            .map(|xi| target.busemann_gradient_unchecked(f_point, xi).stacked())
            .collect();
        let mut c = vec![0.0; nk];
        for j in 0..nj {
            for k in 0..nk {
                c[k] += kernel[j * nk + k];
            }
        }

        let mut left = DMatrix::zeros(n_x, n_x);
        let mut a_form = DMatrix::zeros(n_x, n_x);
        for (k, xi) in self.reference.nodes.iter().enumerate() {
            left += target.busemann_hessian_unchecked(f_point, xi) * c[k];
            a_form += &grads[k] * grads[k].transpose() * c[k];
        }

        // interior gradients of the distance function at the frame point
        let dist_grads: Vec<DVector<f64>> = frozen
            .nodes
            .iter()
            .map(|z| source.distance_gradient(&a0, z).stacked())
            .collect();

        let s = self.opts.s;
        let mut right = DMatrix::zeros(n_x, n_y);
        let mut b_form = DMatrix::zeros(n_y, n_y);
        for j in 0..nj {
            let mut u_avg = DVector::zeros(n_x);
            let mut mass_j = 0.0;
            for k in 0..nk {
                let m = kernel[j * nk + k];
                u_avg += &grads[k] * m;
                mass_j += m;
            }
            right += s * u_avg * dist_grads[j].transpose();
            b_form += &dist_grads[j] * dist_grads[j].transpose() * mass_j;
        }

        let min_eig = left
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig <= 1e-12 {
            return Err(Error::DegenerateHessian {
                min_eigenvalue: min_eig,
            });
        }

        let det_left = left.determinant();
        let det_right = right.determinant();
        let det_a = a_form.determinant().max(0.0);
        let det_b = b_form.determinant().max(0.0);
        let n = n_x as i32;
        let jacobian_analytic = det_right / det_left;
        let bound_value = s.powi(n) * det_a.sqrt() * det_b.sqrt() / det_left;
        let bound_simplified = (s / (n_x as f64).sqrt()).powi(n) * det_a.sqrt() / det_left;

        Ok(JacobianReport {
            point: a.clone(),
            omega_point: x,
            jacobian_analytic,
            jacobian_fd: None,
            bound_value,
            bound_simplified,
            numerator_det: det_right,
            denominator_det: det_left,
            hessian_min_eigenvalue: min_eig,
            barycenter_residual: solved.residual,
            excluded_weight,
        })
    }

    /// Central-difference Jacobian of the slice on the frozen grid: re-solves
    /// the barycenter at the stencil points with tightened tolerance.
    pub fn slice_jacobian_fd(&self, a: &ModelPoint, x: usize) -> Result<f64> {
        let source = self.psi.domain.space.clone();
        let target = self.psi.target.clone();
        let n_y = source.dim();
        let n_x = target.dim();
        if n_y != n_x {
            return Err(Error::Config(format!(
                "slice Jacobian needs equal dimensions, got {n_y} and {n_x}"
            )));
        }
        let (frozen, _) = self.frozen_grid(a, x)?;
        let a0 = frozen.a0.clone();
        let solver = self.opts.tight_solver();
        let center = self.solve_on_frozen(&frozen, &a0, &solver)?;
        let h = self.opts.fd_step;
        let mut diff = DMatrix::zeros(n_x, n_y);
        for j in 0..n_y {
            let mut e = DVector::zeros(n_y);
            e[j] = 1.0;
            let tv = TangentVector::from_stacked(&a0, &e);
            let a_plus = source.exp(&tv.scale(h));
            let a_minus = source.exp(&tv.scale(-h));
            let f_plus = self.solve_on_frozen(&frozen, &a_plus, &solver)?;
            let f_minus = self.solve_on_frozen(&frozen, &a_minus, &solver)?;
            let v_plus = target.log(&center.point, &f_plus.point).stacked();
            let v_minus = target.log(&center.point, &f_minus.point).stacked();
            let col = (v_plus - v_minus) / (2.0 * h);
            diff.set_column(j, &col);
        }
        Ok(diff.determinant())
    }
}

/// The evaluation normalized to the Dirichlet frame: representative point,
/// frame omega point, the transport back, interior nodes with their slice
/// images and distances to the representative.
#[derive(Debug, Clone)]
struct FrameProblem {
    a0: ModelPoint,
    x0: usize,
    transport: crate::geometry::Isometry,
    nodes: Vec<ModelPoint>,
    images: Vec<ModelPoint>,
    dists: Vec<f64>,
}

#[cfg(test)]
mod tests;
