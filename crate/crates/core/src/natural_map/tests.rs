use std::sync::Arc;

use approx::assert_abs_diff_eq;
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::barycenter::{barycenter, BarycenterOptions};
use crate::cocycles::{random_word, Cocycle};
use crate::fixtures;
use crate::measures::{interior_family, pushforward, total_variation_distance};

fn octagon_setup(k: usize, radius: usize) -> (Arc<FundamentalDomain>, fixtures::GroupFixture) {
    let fx = fixtures::genus2_octagon().unwrap();
    let dom = Arc::new(FundamentalDomain::build(&fx.space, &fx.presentation, radius).unwrap());
    let _ = k;
    (dom, fx)
}

fn rep_map(
    dom: &Arc<FundamentalDomain>,
    fx: &fixtures::GroupFixture,
    k: usize,
    base: BaseFunction,
) -> EquivariantMap {
    let sigma = Arc::new(fixtures::rep_cocycle(fx, k).unwrap());
    EquivariantMap::new(Arc::clone(dom), sigma, fx.space.clone(), base).unwrap()
}

fn sample_moves(
    sigma: &Cocycle,
    space: &crate::geometry::ModelSpace,
    n: usize,
    max_len: usize,
    seed: u64,
) -> Vec<(Word, ModelPoint, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut w = random_word(&mut rng, sigma.presentation.num_generators, max_len);
            if w.is_empty() {
                w = Word::generator(0);
            }
            let a = crate::geometry::ModelPoint::from_slice(&[
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
            ]);
            let point = if space.dim() == 2 {
                a
            } else {
                unreachable!("samples are drawn on surface fixtures")
            };
            let x = rng.random_range(0..sigma.omega.size());
            (w, point, x)
        })
        .collect()
}

#[test]
fn equivariant_map_rep_constant_base() {
    // q == o with a representation cocycle: psi(gamma.a0, x) = rho(gamma).o
    let (dom, fx) = octagon_setup(4, 4);
    let o = fx.space.origin();
    let psi = rep_map(&dom, &fx, 4, BaseFunction::Constant(o.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    for _ in 0..20 {
        let w = random_word(&mut rng, 4, 2);
        let g = fx.presentation.evaluate_word(&w).unwrap();
        let a0 = ModelPoint::from_slice(&[rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)]);
        let a = g.apply_point(&a0);
        for x in 0..4 {
            let got = psi.eval(&a, x).unwrap();
            let expected = g.apply_point(&o);
            assert!(fx.space.distance_unchecked(&got, &expected) < 1e-9);
        }
    }
}

#[test]
fn equivariant_map_inclusion_is_projection() {
    // q = inclusion with the cocycle of the realization: psi(a, x) = a
    let (dom, fx) = octagon_setup(2, 4);
    let psi = rep_map(&dom, &fx, 2, BaseFunction::Inclusion);
    let mut rng = ChaCha8Rng::seed_from_u64(92);
    for _ in 0..20 {
        let w = random_word(&mut rng, 4, 2);
        let g = fx.presentation.evaluate_word(&w).unwrap();
        let a = g.apply_point(&ModelPoint::from_slice(&[
            rng.random_range(-0.25..0.25),
            rng.random_range(-0.25..0.25),
        ]));
        for x in 0..2 {
            let got = psi.eval(&a, x).unwrap();
            assert!(
                fx.space.distance_unchecked(&got, &a) < 1e-9,
                "inclusion slice moved the point"
            );
        }
    }
}

#[test]
fn equivariant_map_passes_residual_test() {
    let (dom, fx) = octagon_setup(4, 5);
    let psi = rep_map(&dom, &fx, 4, BaseFunction::Constant(fx.space.origin()));
    let samples = sample_moves(&psi.sigma, &fx.space, 25, 2, 93);
    let res = equivariance_residual(
        |a, x| psi.eval(a, x),
        &psi.sigma,
        &fx.space,
        &samples,
    )
    .unwrap();
    assert!(res < 1e-8, "residual {res}");
}

#[test]
fn twisted_equivariant_map_is_twisted_pointwise() {
    let (dom, fx) = octagon_setup(4, 4);
    let psi = rep_map(&dom, &fx, 4, BaseFunction::Constant(fx.space.origin()));
    let f = fixtures::random_omega_map(4, &[2], 95);
    let twisted = twist_equivariant_map(&f, &psi).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(96);
    for _ in 0..20 {
        let a = ModelPoint::from_slice(&[rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)]);
        let x = rng.random_range(0..4);
        let lhs = twisted.eval(&a, x).unwrap();
        let rhs = f.table[x].inverse().apply_point(&psi.eval(&a, x).unwrap());
        assert!(fx.space.distance_unchecked(&lhs, &rhs) < 1e-10);
    }

    // and it is (f.sigma)-equivariant
    let samples = sample_moves(&twisted.sigma, &fx.space, 20, 2, 97);
    let res = equivariance_residual(
        |a, x| twisted.eval(a, x),
        &twisted.sigma,
        &fx.space,
        &samples,
    )
    .unwrap();
    assert!(res < 1e-8, "twisted residual {res}");
}

#[test]
fn corrupted_cocycle_flagged_by_residual() {
    let (dom, fx) = octagon_setup(2, 4);
    let psi = rep_map(&dom, &fx, 2, BaseFunction::Constant(fx.space.origin()));
    // corrupt one generator value for one omega point
    let mut sigma_bad = (*psi.sigma).clone();
    let bump = crate::geometry::Isometry::from_single(crate::geometry::Isometry::boost_matrix(
        &DVector::from_vec(vec![1.0, 0.0]),
        0.05,
    ))
    .unwrap();
    sigma_bad.table[0][1] = sigma_bad.table[0][1].compose(&bump);
    let samples = sample_moves(&psi.sigma, &fx.space, 30, 2, 98);
    let res = equivariance_residual(
        |a, x| psi.eval(a, x),
        &sigma_bad,
        &fx.space,
        &samples,
    )
    .unwrap();
    assert!(res > 1e-3, "corruption not flagged, residual {res}");
}

fn natural_map_for(
    base: BaseFunction,
    k: usize,
    seed_twist: Option<u64>,
    interior: usize,
    boundary: usize,
) -> NaturalMap {
    let (dom, fx) = octagon_setup(k, 5);
    let psi = rep_map(&dom, &fx, k, base);
    let psi = match seed_twist {
        None => psi,
        Some(seed) => {
            let f = fixtures::random_omega_map(k, &[2], seed);
            twist_equivariant_map(&f, &psi).unwrap()
        }
    };
    let mut opts = NaturalMapOptions::defaults_for(&fx.space);
    opts.interior_budget = interior;
    opts.boundary_budget = boundary;
    NaturalMap::new(psi, opts).unwrap()
}

#[test]
fn representation_cocycle_slices_coincide() {
    let nm = natural_map_for(BaseFunction::Inclusion, 4, None, 48, 512);
    let a = ModelPoint::from_slice(&[0.15, 0.08]);
    let spread = nm.slice_spread(&a).unwrap();
    assert!(spread < 1e-6, "slice spread {spread}");
}

#[test]
fn natural_map_equivariance_residual() {
    let nm = natural_map_for(BaseFunction::Inclusion, 2, Some(101), 64, 1024);
    let samples = sample_moves(&nm.psi.sigma, &nm.psi.target, 8, 2, 102);
    let res = equivariance_residual(
        |a, x| nm.eval(a, x).map(|p| p.point),
        &nm.psi.sigma,
        &nm.psi.target,
        &samples,
    )
    .unwrap();
    assert!(res < 1e-5, "natural map equivariance residual {res}");
}

#[test]
fn lemma_equivariance_of_convolved_family_matched_quadrature() {
    // mu^s_{gamma.a, gamma.x} equals the sigma(gamma, x)-transport of
    // mu^s_{a,x} when the quadratures are matched; the covariant grid makes
    // the match automatic
    let nm = natural_map_for(BaseFunction::Inclusion, 4, Some(103), 64, 1024);
    let sigma = Arc::clone(&nm.psi.sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..6 {
        let a = ModelPoint::from_slice(&[rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)]);
        let x = rng.random_range(0..4);
        let mut w = random_word(&mut rng, 4, 2);
        if w.is_empty() {
            w = Word::generator(1);
        }
        let gamma = sigma.presentation.evaluate_word(&w).unwrap();
        let ga = gamma.apply_point(&a);
        let gx = sigma.omega.act_word(&w, x);

        let lhs = nm
            .convolved_measure(&nm.grid_at(&ga).unwrap(), &ga, gx)
            .unwrap();
        let rhs_raw = nm
            .convolved_measure(&nm.grid_at(&a).unwrap(), &a, x)
            .unwrap();
        let transport = sigma.evaluate(&w, x).unwrap();
        let rhs = rhs_raw.transport(&transport).unwrap();
        let tv = total_variation_distance(&lhs, &rhs).unwrap();
        assert!(tv < 1e-6, "matched-quadrature TV {tv}");
        assert!(tv < 1e-10, "expected roundoff-level TV, got {tv}");
    }
}

#[test]
fn twisting_identity_for_natural_maps() {
    // F^s_{f.sigma}(a, x) = f(x)^-1 F^s_sigma(a, x)
    let (dom, fx) = octagon_setup(3, 5);
    let psi = rep_map(&dom, &fx, 3, BaseFunction::Inclusion);
    let mut opts = NaturalMapOptions::defaults_for(&fx.space);
    opts.interior_budget = 64;
    opts.boundary_budget = 2048;
    let nm = NaturalMap::new(psi.clone(), opts.clone()).unwrap();

    let f = fixtures::random_omega_map(3, &[2], 105);
    let twisted_psi = twist_equivariant_map(&f, &psi).unwrap();
    let nm_twisted = NaturalMap::new(twisted_psi, opts).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for _ in 0..4 {
        let a = ModelPoint::from_slice(&[rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)]);
        let x = rng.random_range(0..3);
        let lhs = nm_twisted.eval(&a, x).unwrap().point;
        let rhs = f.table[x]
            .inverse()
            .apply_point(&nm.eval(&a, x).unwrap().point);
        let gap = fx.space.distance_unchecked(&lhs, &rhs);
        assert!(gap < 1e-6, "twisting identity gap {gap}");
    }
}

#[test]
fn symmetric_grid_fixes_center() {
    // with a rotationally symmetric interior grid centered at a and the
    // inclusion slice, the convolved measure is symmetric about a and the
    // barycenter returns a; cross-checked by zoomed grid search
    let space = crate::geometry::ModelSpace::hyperbolic(2).unwrap();
    let reference = Arc::new(boundary_quadrature(&space, 2048).unwrap());
    let a = ModelPoint::from_slice(&[0.25, -0.15]);
    let mut grid = Vec::new();
    for r in [0.5, 1.0, 1.5] {
        for j in 0..16 {
            let t = std::f64::consts::TAU * j as f64 / 16.0;
            let v = TangentVector::from_stacked(&a, &DVector::from_vec(vec![r * t.cos(), r * t.sin()]));
            grid.push(space.exp(&v));
        }
    }
    let m = interior_family(&space, &a, 1.2, &grid).unwrap();
    let pushed = pushforward(|p: &ModelPoint| Ok(p.clone()), &m, &space).unwrap();
    let nu = convolve_with_ps(&pushed, Arc::clone(&reference)).unwrap();
    let result = barycenter(&nu, &BarycenterOptions::default()).unwrap();
    assert!(result.converged);
    let gap = space.distance_unchecked(&result.point, &a);
    assert!(gap < 1e-6, "symmetric-grid barycenter gap {gap}");

    // zoomed grid-search oracle
    let mut center = (a.single()[0], a.single()[1]);
    let mut step = 0.01f64;
    let mut best = (f64::INFINITY, center);
    for _round in 0..4 {
        for i in -12i64..=12 {
            for j in -12i64..=12 {
                let x = center.0 + i as f64 * step;
                let y = center.1 + j as f64 * step;
                if x * x + y * y >= 0.99 {
                    continue;
                }
                let p = ModelPoint::from_slice(&[x, y]);
                let v = crate::barycenter::busemann_average(&nu, &p).unwrap();
                if v < best.0 {
                    best = (v, (x, y));
                }
            }
        }
        center = best.1;
        step *= 0.1;
    }
    let oracle = ModelPoint::from_slice(&[best.1 .0, best.1 .1]);
    assert!(space.distance_unchecked(&oracle, &a) < 1e-4);
}

#[test]
fn jacobian_fd_matches_analytic_identity_fixture() {
    // inclusion slices with the representation cocycle across the s sweep
    for s in [1.1, 1.5, 2.0] {
        let (dom, fx) = octagon_setup(1, 5);
        let psi = rep_map(&dom, &fx, 1, BaseFunction::Inclusion);
        let mut opts = NaturalMapOptions::defaults_for(&fx.space);
        opts.s = s;
        opts.interior_budget = 48;
        opts.boundary_budget = 512;
        let nm = NaturalMap::new(psi, opts).unwrap();
        let a = ModelPoint::from_slice(&[0.12, 0.07]);
        let report = nm.slice_jacobian_analytic(&a, 0).unwrap();
        let fd = nm.slice_jacobian_fd(&a, 0).unwrap();
        let rel = (report.jacobian_analytic - fd).abs() / report.jacobian_analytic.abs().max(1.0);
        assert!(
            rel < 1e-3,
            "s={s}: analytic {} vs fd {fd}, rel {rel}",
            report.jacobian_analytic
        );
        // bound chain at the same quadrature
        assert!(report.jacobian_analytic <= report.bound_value + 1e-12);
        assert!(report.bound_value <= report.bound_simplified + 1e-12);
        assert!(report.hessian_min_eigenvalue > 0.0);
        assert!(report.barycenter_residual < 1e-10);
    }
}

#[test]
fn jacobian_bound_chain_on_twisted_fixture() {
    let nm = natural_map_for(BaseFunction::Inclusion, 2, Some(107), 48, 512);
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for _ in 0..5 {
        let a = ModelPoint::from_slice(&[rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)]);
        let x = rng.random_range(0..2);
        let report = nm.slice_jacobian_analytic(&a, x).unwrap();
        let fd = nm.slice_jacobian_fd(&a, x).unwrap();
        let rel = (report.jacobian_analytic - fd).abs() / report.jacobian_analytic.abs().max(1.0);
        assert!(rel < 1e-3, "analytic vs fd rel {rel}");
        assert!(report.jacobian_analytic <= report.bound_value + 1e-12);
        assert!(report.bound_value <= report.bound_simplified + 1e-12);
    }
}

#[test]
fn distance_gradient_trace_normalization() {
    // tr <grad_a d(a,z), .>^2 = |grad|^2 = 1 pointwise
    let space = crate::geometry::ModelSpace::hyperbolic(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    for _ in 0..100 {
        let a = ModelPoint::from_slice(&[rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)]);
        let z = ModelPoint::from_slice(&[rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)]);
        if space.distance_unchecked(&a, &z) < 1e-3 {
            continue;
        }
        let g = space.distance_gradient(&a, &z).stacked();
        let gram = &g * g.transpose();
        assert_abs_diff_eq!(gram.trace(), 1.0, epsilon = 1e-10);
    }
}

#[test]
fn jacobian_rejects_dimension_mismatch() {
    // slices from H^2 into H^3 have no volume-ratio Jacobian
    let fx2 = fixtures::genus2_octagon().unwrap();
    let dom = Arc::new(FundamentalDomain::build(&fx2.space, &fx2.presentation, 3).unwrap());
    let target = crate::geometry::ModelSpace::hyperbolic(3).unwrap();
    // constant-in-x cocycle into H^3: trivial representation
    let rho3 = vec![crate::geometry::Isometry::identity(&[3]); 4];
    let omega = fixtures::omega_mod_k(&fx2.presentation, 2).unwrap();
    let sigma = Arc::new(
        Cocycle::from_representation(fx2.presentation.clone(), omega, rho3).unwrap(),
    );
    let psi = EquivariantMap::new(
        Arc::clone(&dom),
        sigma,
        target.clone(),
        BaseFunction::Constant(target.origin()),
    )
    .unwrap();
    let mut opts = NaturalMapOptions::defaults_for(&fx2.space);
    opts.boundary_budget = 128;
    let nm = NaturalMap::new(psi, opts).unwrap();
    let a = ModelPoint::from_slice(&[0.1, 0.1]);
    assert!(matches!(
        nm.slice_jacobian_analytic(&a, 0),
        Err(Error::Config(_))
    ));
}

#[test]
fn subcritical_s_rejected() {
    let (dom, fx) = octagon_setup(2, 3);
    let psi = rep_map(&dom, &fx, 2, BaseFunction::Inclusion);
    let mut opts = NaturalMapOptions::defaults_for(&fx.space);
    opts.s = 1.0;
    assert!(matches!(
        NaturalMap::new(psi, opts),
        Err(Error::SubcriticalParameter(_))
    ));
}

#[test]
fn genus3_pullback_natural_map_equivariance() {
    // natural map over the pulled-back cocycle of the double cover
    let cover = fixtures::genus3_double_cover().unwrap();
    let sigma2 = fixtures::rep_cocycle(&cover.target, 2).unwrap();
    let pulled = crate::cocycles::pullback_cocycle(&cover.homomorphism, &cover.source, &sigma2)
        .unwrap();
    let space = cover.target.space.clone();
    let dom = Arc::new(FundamentalDomain::build(&space, &cover.source, 3).unwrap());
    // the pullback of the inclusion along the cover: base = the lift
    let psi = EquivariantMap::new(
        Arc::clone(&dom),
        Arc::new(pulled),
        space.clone(),
        BaseFunction::FixedIsometry(fixtures::cover_lift().unwrap()),
    )
    .unwrap();
    let mut opts = NaturalMapOptions::defaults_for(&space);
    opts.interior_budget = 48;
    opts.boundary_budget = 1024;
    let nm = NaturalMap::new(psi, opts).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let samples: Vec<(Word, ModelPoint, usize)> = (0..4)
        .map(|_| {
            let g = rng.random_range(1..=7i32);
            let w = Word(vec![if rng.random_bool(0.5) { g } else { -g }]);
            let a = ModelPoint::from_slice(&[
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
            ]);
            let x = rng.random_range(0..2);
            (w, a, x)
        })
        .collect();
    let res = equivariance_residual(
        |a, x| nm.eval(a, x).map(|p| p.point),
        &nm.psi.sigma,
        &space,
        &samples,
    )
    .unwrap();
    assert!(res < 1e-5, "pullback natural map residual {res}");
}
