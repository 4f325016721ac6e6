//! Subcommand implementations: fixture resolution, pipeline orchestration and
//! report assembly. Every numerical certificate (residuals, Hessian
//! eigenvalues, deviations) is emitted in the report; silent success is not
//! an outcome.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::barycenter::BarycenterOptions;
use crate::cocycles::{pullback_cocycle, random_word, Cocycle, Word};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::geometry::{ModelPoint, ModelSpace};
use crate::measures::total_variation_distance;
use crate::natural_map::{
    equivariance_residual, BaseFunction, EquivariantMap, FundamentalDomain, NaturalMap,
    NaturalMapOptions,
};
use crate::volume::{
    degree_check, octagon_domain_quadrature, volume, CoverMap, SliceFamily,
};

use super::config::ExperimentConfig;
use super::report::Report;

/// A resolved experiment: the acting group, its space, the cocycle and the
/// equivariant-map base choice.
pub struct ResolvedFixture {
    pub id: String,
    pub space: ModelSpace,
    pub presentation: crate::cocycles::GroupPresentation,
    pub sigma: Arc<Cocycle>,
    pub base_fn: BaseFunction,
    pub closed: bool,
}

/// Resolve the configured fixture: a built-in id or a natmap-cocycle/1 file.
pub fn resolve_fixture(config: &ExperimentConfig) -> Result<ResolvedFixture> {
    let fc = &config.fixture;
    if fc.group.ends_with(".toml") {
        let (id, space, sigma) = fixtures::load_cocycle(Path::new(&fc.group))?;
        let presentation = sigma.presentation.clone();
        let base_fn = BaseFunction::Constant(space.origin());
        return Ok(ResolvedFixture {
            id,
            space,
            presentation,
            sigma: Arc::new(sigma),
            base_fn,
            closed: false,
        });
    }
    match fc.cocycle.as_str() {
        "pullback" => {
            let cover = fixtures::genus3_double_cover()?;
            let sigma2 = fixtures::rep_cocycle(&cover.target, fc.omega_size)?;
            let pulled = pullback_cocycle(&cover.homomorphism, &cover.source, &sigma2)?;
            Ok(ResolvedFixture {
                id: "genus3-pullback".into(),
                space: cover.target.space.clone(),
                presentation: cover.source.clone(),
                sigma: Arc::new(pulled),
                base_fn: BaseFunction::FixedIsometry(fixtures::cover_lift()?),
                closed: true,
            })
        }
        kind @ ("representation" | "twisted") => {
            let fx = fixtures::group_fixture_by_id(&fc.group)?;
            let sigma = match kind {
                "representation" => fixtures::rep_cocycle(&fx, fc.omega_size)?,
                _ => fixtures::twisted_cocycle_fixture(&fx, fc.omega_size, fc.twist_seed)?,
            };
            Ok(ResolvedFixture {
                id: fx.id.clone(),
                space: fx.space.clone(),
                presentation: fx.presentation.clone(),
                sigma: Arc::new(sigma),
                base_fn: BaseFunction::Inclusion,
                closed: fx.closed,
            })
        }
        other => Err(Error::Config(format!(
            "unknown cocycle kind '{other}' (representation | twisted | pullback)"
        ))),
    }
}

fn natural_map_options(config: &ExperimentConfig, space: &ModelSpace) -> NaturalMapOptions {
    NaturalMapOptions {
        s: config.natural_map.s_factor * space.entropy(),
        interior_budget: config.natural_map.interior_budget,
        boundary_budget: config.natural_map.boundary_budget,
        solver: BarycenterOptions {
            tolerance: config.solver.tolerance,
            max_iterations: config.solver.max_iterations,
            seed: config.seed,
        },
        exclusion_radius: config.natural_map.exclusion_radius,
        fd_step: config.natural_map.fd_step,
    }
}

pub fn build_natural_map(config: &ExperimentConfig, fixture: &ResolvedFixture) -> Result<NaturalMap> {
    let dom = Arc::new(FundamentalDomain::build(
        &fixture.space,
        &fixture.presentation,
        config.natural_map.domain_radius,
    )?);
    let psi = EquivariantMap::new(
        Arc::clone(&dom),
        Arc::clone(&fixture.sigma),
        fixture.space.clone(),
        fixture.base_fn.clone(),
    )?;
    NaturalMap::new(psi, natural_map_options(config, &fixture.space))
}

fn sample_points(
    rng: &mut ChaCha8Rng,
    space: &ModelSpace,
    radius: f64,
    count: usize,
) -> Vec<ModelPoint> {
    (0..count)
        .map(|_| {
            ModelPoint::new(
                space
                    .factor_dims()
                    .iter()
                    .map(|&n| {
                        let v = nalgebra::DVector::from_fn(n, |_, _| {
                            rng.random_range(-1.0..1.0_f64)
                        });
                        let norm = v.norm().max(1.0);
                        v / norm * radius
                    })
                    .collect(),
            )
        })
        .collect()
}

fn sample_moves(
    rng: &mut ChaCha8Rng,
    sigma: &Cocycle,
    space: &ModelSpace,
    config: &ExperimentConfig,
) -> Vec<(Word, ModelPoint, usize)> {
    let points = sample_points(rng, space, config.samples.point_radius, config.samples.count);
    points
        .into_iter()
        .map(|a| {
            let mut w = random_word(
                rng,
                sigma.presentation.num_generators,
                config.samples.word_length,
            );
            if w.is_empty() {
                w = Word::generator(0);
            }
            let x = rng.random_range(0..sigma.omega.size());
            (w, a, x)
        })
        .collect()
}

/// validate-cocycle: relator descent and the cocycle identity on random word
/// pairs.
pub fn run_validate_cocycle(config: &ExperimentConfig) -> Result<Report> {
    let fixture = resolve_fixture(config)?;
    let report = fixture.sigma.validate(1000, config.seed)?;
    let relator_tol = config.tolerances.relator_descent;
    let cocycle_tol = config.tolerances.cocycle_identity;
    let passed = report.passes(relator_tol, cocycle_tol);
    Ok(Report::new(
        "validate-cocycle",
        config,
        passed,
        json!({
            "fixture": fixture.id,
            "max_relator_deviation": report.max_relator_deviation,
            "max_cocycle_deviation": report.max_cocycle_deviation,
            "samples": report.samples,
            "relator_tolerance": relator_tol,
            "cocycle_tolerance": cocycle_tol,
        }),
    ))
}

/// natural-map: evaluate F^s on sampled (a, x), report certificates, slice
/// spread and the equivariance residual.
pub fn run_natural_map(config: &ExperimentConfig) -> Result<Report> {
    let fixture = resolve_fixture(config)?;
    let nm = build_natural_map(config, &fixture)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let points = sample_points(
        &mut rng,
        &fixture.space,
        config.samples.point_radius,
        config.samples.count,
    );

    let mut evaluations = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        let x = rng.random_range(0..fixture.sigma.omega.size());
        let out = nm.eval(a, x)?;
        max_residual = max_residual.max(out.barycenter.residual);
        min_eig = min_eig.min(out.barycenter.hessian_min_eigenvalue);
        evaluations.push(json!({
            "index": i,
            "input": a.flat(),
            "omega_point": x,
            "point": out.point.flat(),
            "residual": out.barycenter.residual,
            "iterations": out.barycenter.iterations,
            "hessian_min_eigenvalue": out.barycenter.hessian_min_eigenvalue,
            "grid_size": out.grid_size,
        }));
    }

    let spread = nm.slice_spread(&points[0])?;
    let moves = sample_moves(&mut rng, &fixture.sigma, &fixture.space, config);
    let eq_residual = equivariance_residual(
        |a, x| nm.eval(a, x).map(|p| p.point),
        &fixture.sigma,
        &fixture.space,
        &moves,
    )?;

    let passed = max_residual < config.solver.tolerance
        && eq_residual < config.tolerances.equivariance;
    Ok(Report::new(
        "natural-map",
        config,
        passed,
        json!({
            "fixture": fixture.id,
            "s": nm.opts.s,
            "evaluations": evaluations,
            "max_barycenter_residual": max_residual,
            "min_hessian_eigenvalue": min_eig,
            "slice_spread": spread,
            "equivariance_residual": eq_residual,
            "equivariance_tolerance": config.tolerances.equivariance,
        }),
    ))
}

pub const JACOBIAN_CSV_HEADER: &str = "fixture,s,interior_budget,boundary_budget,point_index,omega_point,jacobian_analytic,jacobian_fd,bound_cauchy_schwarz,bound_simplified,jacobian_over_bound";

/// jacobian-sweep: analytic and finite-difference Jacobians with the bound
/// chain across the configured s sweep; emits a CSV table.
pub fn run_jacobian_sweep(config: &ExperimentConfig) -> Result<(Report, String)> {
    let fixture = resolve_fixture(config)?;
    let sweep = if config.natural_map.s_sweep.is_empty() {
        vec![config.natural_map.s_factor]
    } else {
        config.natural_map.s_sweep.clone()
    };

    let mut rows = vec![JACOBIAN_CSV_HEADER.to_string()];
    let mut entries = Vec::new();
    let mut chain_ok = true;
    let mut fd_ok = true;
    for s_factor in &sweep {
        let mut cfg = config.clone();
        cfg.natural_map.s_factor = *s_factor;
        let nm = build_natural_map(&cfg, &fixture)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let points = sample_points(
            &mut rng,
            &fixture.space,
            config.samples.point_radius,
            config.samples.count,
        );
        for (i, a) in points.iter().enumerate() {
            let x = rng.random_range(0..fixture.sigma.omega.size());
            let report = nm.slice_jacobian_analytic(a, x)?;
            let fd = nm.slice_jacobian_fd(a, x)?;
            let rel = (report.jacobian_analytic - fd).abs()
                / report.jacobian_analytic.abs().max(1.0);
            fd_ok &= rel < 1e-3;
            chain_ok &= report.jacobian_analytic <= report.bound_value + 1e-12
                && report.bound_value <= report.bound_simplified + 1e-12;
            rows.push(format!(
                "{},{},{},{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                fixture.id,
                nm.opts.s,
                nm.opts.interior_budget,
                nm.opts.boundary_budget,
                i,
                x,
                report.jacobian_analytic,
                fd,
                report.bound_value,
                report.bound_simplified,
                report.jacobian_analytic / report.bound_value,
            ));
            entries.push(json!({
                "s": nm.opts.s,
                "point_index": i,
                "omega_point": x,
                "jacobian_analytic": report.jacobian_analytic,
                "jacobian_fd": fd,
                "fd_relative_error": rel,
                "bound_cauchy_schwarz": report.bound_value,
                "bound_simplified": report.bound_simplified,
                "numerator_det": report.numerator_det,
                "denominator_det": report.denominator_det,
                "hessian_min_eigenvalue": report.hessian_min_eigenvalue,
                "excluded_weight": report.excluded_weight,
            }));
        }
    }
    let passed = chain_ok && fd_ok;
    let report = Report::new(
        "jacobian-sweep",
        config,
        passed,
        json!({
            "fixture": fixture.id,
            "sweep": sweep,
            "fd_consistent": fd_ok,
            "bound_chain_holds": chain_ok,
            "samples": entries,
        }),
    );
    Ok((report, rows.join("\n") + "\n"))
}

pub const VOLUME_CSV_HEADER: &str =
    "fixture,family,s,interior_budget,boundary_budget,domain_nodes,volume,jacobian_sup,sup_times_area,volume_over_area";

/// volume: integrate the configured slice family over the genus-2 octagon
/// domain.
pub fn run_volume(config: &ExperimentConfig) -> Result<(Report, String)> {
    let fixture = resolve_fixture(config)?;
    if !fixture.closed {
        return Err(Error::Config(format!(
            "volume needs a closed-surface fixture, got '{}'",
            fixture.id
        )));
    }
    let quad = octagon_domain_quadrature(config.volume.domain_budget)?;
    let area = quad.total_area();
    let (family, s) = match config.volume.family.as_str() {
        "inclusion" => (
            SliceFamily::Isometry {
                space: fixture.space.clone(),
                omega_weights: fixture.sigma.omega.weights.clone(),
                post: fixture.space.identity(),
            },
            f64::NAN,
        ),
        "natural" => {
            let nm = build_natural_map(config, &fixture)?;
            let s = nm.opts.s;
            (SliceFamily::Natural(Box::new(nm)), s)
        }
        other => {
            return Err(Error::Config(format!(
                "unknown volume family '{other}' (inclusion | natural)"
            )))
        }
    };
    let report = volume(&family, &quad, Some(config.volume.essential_bound))?;
    let csv = format!(
        "{}\n{},{},{},{},{},{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
        VOLUME_CSV_HEADER,
        fixture.id,
        config.volume.family,
        s,
        config.natural_map.interior_budget,
        config.natural_map.boundary_budget,
        report.domain_nodes,
        report.value,
        report.jacobian_sup,
        report.jacobian_sup * area,
        report.value / area,
    );
    // the volume inequality vol <= sup * area is exact for the quadrature
    let passed = report.value <= report.jacobian_sup * area + 1e-9;
    let out = Report::new(
        "volume",
        config,
        passed,
        json!({
            "fixture": fixture.id,
            "family": config.volume.family,
            "volume": report.value,
            "jacobian_sup": report.jacobian_sup,
            "domain_nodes": report.domain_nodes,
            "omega_size": report.omega_size,
            "domain_area": area,
            "sup_bound": report.jacobian_sup * area,
        }),
    );
    Ok((out, csv))
}

/// degree-check: the double-cover degree inequality on the configured family.
pub fn run_degree_check(config: &ExperimentConfig) -> Result<Report> {
    let cover = fixtures::genus3_double_cover()?;
    let cm = CoverMap::from_fixture(&cover)?;
    let quad = octagon_domain_quadrature(config.volume.domain_budget)?;
    let family = SliceFamily::Isometry {
        space: cover.target.space.clone(),
        omega_weights: vec![1.0 / config.fixture.omega_size as f64; config.fixture.omega_size],
        post: cover.target.space.identity(),
    };
    let report = degree_check(
        &cm,
        &family,
        &quad,
        &cover.target.presentation,
        config.tolerances.degree_ratio,
    )?;
    let ratio_ok = (report.ratio - cover.degree.unsigned_abs() as f64).abs()
        < config.tolerances.degree_ratio * cover.degree.unsigned_abs() as f64;
    let passed = report.inequality_holds && !report.inconclusive && ratio_ok;
    Ok(Report::new(
        "degree-check",
        config,
        passed,
        json!({
            "fixture": "genus3-double-cover",
            "degree": report.degree,
            "vol_pullback": report.vol_pullback,
            "vol_base": report.vol_base,
            "ratio": report.ratio,
            "inequality_holds": report.inequality_holds,
            "inconclusive": report.inconclusive,
            "multiplicity_samples": report.multiplicity_samples,
        }),
    ))
}

/// property-suite: randomized battery over the geometry kernel, barycenter,
/// cocycle algebra and the natural-map identities; one named check per line.
pub fn run_property_suite(config: &ExperimentConfig) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks: Vec<serde_json::Value> = Vec::new();
    let mut push = |name: &str, value: f64, threshold: f64, checks: &mut Vec<serde_json::Value>| {
        let pass = value < threshold;
        checks.push(json!({
            "name": name,
            "value": value,
            "threshold": threshold,
            "pass": pass,
        }));
        pass
    };

    // geometry kernel on H^2, H^3 and a product
    let mut geom_worst: [f64; 4] = [0.0; 4];
    for space in [
        ModelSpace::hyperbolic(2)?,
        ModelSpace::hyperbolic(3)?,
        ModelSpace::product(&[2, 3])?,
    ] {
        for _ in 0..100 {
            let a = random_point(&mut rng, &space, 0.7);
            let b = random_point(&mut rng, &space, 0.7);
            let c = random_point(&mut rng, &space, 0.7);
            let xi = random_ideal(&mut rng, &space);
            let coc = (space.busemann_unchecked(&a, &b, &xi)
                + space.busemann_unchecked(&b, &c, &xi)
                - space.busemann_unchecked(&a, &c, &xi))
            .abs();
            geom_worst[0] = geom_worst[0].max(coc);
            let g = space.busemann_gradient_unchecked(&b, &xi);
            geom_worst[1] = geom_worst[1].max((g.norm() - 1.0).abs());
            let h = space.entropy();
            let chain = ((-h * space.busemann_unchecked(&b, &a, &xi)).exp()
                * (-h * space.busemann_unchecked(&c, &b, &xi)).exp()
                - (-h * space.busemann_unchecked(&c, &a, &xi)).exp())
            .abs()
            / (-h * space.busemann_unchecked(&c, &a, &xi)).exp().max(1.0);
            geom_worst[2] = geom_worst[2].max(chain);
        }
    }
    // Hessian spectrum on H^3
    let h3 = ModelSpace::hyperbolic(3)?;
    for _ in 0..100 {
        let b = random_point(&mut rng, &h3, 0.8);
        let xi = random_ideal(&mut rng, &h3);
        let hess = h3.busemann_hessian_unchecked(&b, &xi);
        let mut eig: Vec<f64> = hess.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let dev = eig[0].abs().max((eig[1] - 1.0).abs()).max((eig[2] - 1.0).abs());
        geom_worst[3] = geom_worst[3].max(dev);
    }
    let mut all = true;
    all &= push("busemann-cocycle-identity", geom_worst[0], 1e-8, &mut checks);
    all &= push("busemann-gradient-unit-norm", geom_worst[1], 1e-10, &mut checks);
    all &= push("ps-density-chain-rule", geom_worst[2], 1e-8, &mut checks);
    all &= push("busemann-hessian-spectrum", geom_worst[3], 1e-8, &mut checks);

    // barycenter certificates
    let reference = Arc::new(crate::geometry::boundary_quadrature(
        &ModelSpace::hyperbolic(2)?,
        1024,
    )?);
    let uniform = crate::measures::BoundaryMeasure::reference_uniform(Arc::clone(&reference));
    let solver = BarycenterOptions {
        tolerance: config.solver.tolerance,
        max_iterations: config.solver.max_iterations,
        seed: config.seed,
    };
    let origin_result = crate::barycenter::barycenter(&uniform, &solver)?;
    all &= push(
        "barycenter-uniform-residual",
        origin_result.residual,
        1e-10,
        &mut checks,
    );
    let mut eq_worst: f64 = 0.0;
    let h2 = ModelSpace::hyperbolic(2)?;
    for _ in 0..10 {
        let g = fixtures::random_isometry(&mut rng, &[2], 2.0);
        let moved = uniform.transport(&g)?;
        let result = crate::barycenter::barycenter(&moved, &solver)?;
        let expected = g.apply_point(&h2.origin());
        eq_worst = eq_worst.max(h2.distance_unchecked(&result.point, &expected));
    }
    all &= push("barycenter-equivariance", eq_worst, 1e-6, &mut checks);

    // cocycle algebra on the configured fixture
    let fixture = resolve_fixture(config)?;
    let validation = fixture.sigma.validate(500, config.seed)?;
    all &= push(
        "cocycle-identity",
        validation.max_cocycle_deviation,
        config.tolerances.cocycle_identity,
        &mut checks,
    );
    all &= push(
        "relator-descent",
        validation.max_relator_deviation,
        config.tolerances.relator_descent,
        &mut checks,
    );

    // natural-map identities
    let nm = build_natural_map(config, &fixture)?;
    let moves = sample_moves(&mut rng, &fixture.sigma, &fixture.space, config);
    let eq = equivariance_residual(
        |a, x| nm.eval(a, x).map(|p| p.point),
        &fixture.sigma,
        &fixture.space,
        &moves[..moves.len().min(4)],
    )?;
    all &= push(
        "natural-map-equivariance",
        eq,
        config.tolerances.equivariance,
        &mut checks,
    );

    // matched-quadrature equivariance of the convolved family
    let (w, a, x) = &moves[0];
    let gamma = fixture.sigma.presentation.evaluate_word(w)?;
    let ga = gamma.apply_point(a);
    let gx = fixture.sigma.omega.act_word(w, *x);
    let lhs = nm.convolved_measure(&nm.grid_at(&ga)?, &ga, gx)?;
    let rhs = nm
        .convolved_measure(&nm.grid_at(a)?, a, *x)?
        .transport(&fixture.sigma.evaluate(w, *x)?)?;
    let tv = total_variation_distance(&lhs, &rhs)?;
    all &= push("convolved-family-equivariance-tv", tv, 1e-6, &mut checks);

    // jacobian consistency at one sample
    if fixture.space.dim() == nm.psi.target.dim() {
        let a = random_point(&mut rng, &fixture.space, 0.2);
        let x = rng.random_range(0..fixture.sigma.omega.size());
        let jr = nm.slice_jacobian_analytic(&a, x)?;
        let fd = nm.slice_jacobian_fd(&a, x)?;
        let rel = (jr.jacobian_analytic - fd).abs() / jr.jacobian_analytic.abs().max(1.0);
        all &= push("jacobian-fd-consistency", rel, 1e-3, &mut checks);
        let chain = if jr.jacobian_analytic <= jr.bound_value + 1e-12
            && jr.bound_value <= jr.bound_simplified + 1e-12
        {
            0.0
        } else {
            1.0
        };
        all &= push("jacobian-bound-chain", chain, 0.5, &mut checks);
    }

    Ok(Report::new(
        "property-suite",
        config,
        all,
        json!({ "fixture": fixture.id, "checks": checks }),
    ))
}

fn random_point(rng: &mut ChaCha8Rng, space: &ModelSpace, rmax: f64) -> ModelPoint {
    ModelPoint::new(
        space
            .factor_dims()
            .iter()
            .map(|&n| {
                loop {
                    let v = nalgebra::DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0_f64));
                    if v.norm() < 1.0 {
                        return v * rmax;
                    }
                }
            })
            .collect(),
    )
}

fn random_ideal(rng: &mut ChaCha8Rng, space: &ModelSpace) -> crate::geometry::IdealPoint {
    crate::geometry::IdealPoint::new(
        space
            .factor_dims()
            .iter()
            .map(|&n| {
                loop {
                    let v = nalgebra::DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0_f64));
                    let norm = v.norm();
                    if norm > 0.1 && norm < 1.0 {
                        return v / norm;
                    }
                }
            })
            .collect(),
    )
}
