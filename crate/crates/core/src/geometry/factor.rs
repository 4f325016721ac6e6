//! Closed-form kernels for a single hyperbolic factor in the Poincaré ball model.
//!
//! Points are vectors of Euclidean norm < 1, ideal points unit vectors. Tangent
//! vectors are expressed in the conformal orthonormal frame at their base point
//! (coordinate frame scaled by 1/lambda, lambda = 2/(1-|x|^2)), so Riemannian
//! norms and inner products are plain Euclidean ones on frame components.
//!
//! Group operations go through the hyperboloid model: a ball point x maps to
//! X = ((1+|x|^2)/(1-|x|^2), 2x/(1-|x|^2)) on the upper sheet of <X,X> = -1,
//! with the Minkowski form <X,Y> = -X_0 Y_0 + sum X_i Y_i (time coordinate
//! first). An ideal point xi maps to the light ray through (1, xi).

use nalgebra::{DMatrix, DVector};

/// Conformal factor lambda(x) = 2/(1-|x|^2) of the ball metric.
pub fn conformal(x: &DVector<f64>) -> f64 {
    2.0 / (1.0 - x.norm_squared())
}

/// Hyperbolic distance between two ball points.
///
/// Uses d = 2 asinh(|x-y| / sqrt((1-|x|^2)(1-|y|^2))), which is exact and
/// stable for nearby points where the arcosh form cancels.
pub fn dist(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let num = (x - y).norm();
    let den = ((1.0 - x.norm_squared()) * (1.0 - y.norm_squared())).sqrt();
    2.0 * (num / den).asinh()
}

/// Busemann function pointed at `xi`, normalized at the Euclidean origin:
/// log(|b - xi|^2 / (1 - |b|^2)).
///
/// This is the convex normalization: the value decreases at unit rate along
/// the geodesic ray toward `xi` and equals -log of the Poisson kernel.
pub fn busemann_origin(b: &DVector<f64>, xi: &DVector<f64>) -> f64 {
    ((b - xi).norm_squared() / (1.0 - b.norm_squared())).ln()
}

/// Riemannian gradient of `b -> busemann_origin(b, xi)` in frame components.
///
/// Closed form (1-|b|^2)(b-xi)/|b-xi|^2 + b; has Euclidean norm exactly 1.
pub fn busemann_grad_frame(b: &DVector<f64>, xi: &DVector<f64>) -> DVector<f64> {
    let diff = b - xi;
    let scale = (1.0 - b.norm_squared()) / diff.norm_squared();
    diff * scale + b
}

/// Hessian of the Busemann function as a bilinear form in frame components.
///
/// Constant curvature -1 gives identity minus the rank-one gradient square;
/// eigenvalues are 0 along the gradient and 1 on the horospherical directions.
pub fn busemann_hessian_frame(b: &DVector<f64>, xi: &DVector<f64>) -> DMatrix<f64> {
    let g = busemann_grad_frame(b, xi);
    let n = g.len();
    DMatrix::identity(n, n) - &g * g.transpose()
}

/// Minkowski inner product with time coordinate first.
pub fn mink(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let mut s = -x[0] * y[0];
    for i in 1..x.len() {
        s += x[i] * y[i];
    }
    s
}

/// Ball point to hyperboloid point (dimension n -> n+1).
pub fn ball_to_hyperboloid(x: &DVector<f64>) -> DVector<f64> {
    let d = 1.0 - x.norm_squared();
    let mut out = DVector::zeros(x.len() + 1);
    out[0] = (1.0 + x.norm_squared()) / d;
    for i in 0..x.len() {
        out[i + 1] = 2.0 * x[i] / d;
    }
    out
}

/// Hyperboloid point back to the ball: spatial part over 1 + time part.
pub fn hyperboloid_to_ball(xh: &DVector<f64>) -> DVector<f64> {
    let t = 1.0 + xh[0];
    DVector::from_fn(xh.len() - 1, |i, _| xh[i + 1] / t)
}

/// Ideal point to a light-cone representative (1, xi).
pub fn ideal_to_light(xi: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(xi.len() + 1);
    out[0] = 1.0;
    for i in 0..xi.len() {
        out[i + 1] = xi[i];
    }
    out
}

/// Light-cone vector back to the boundary sphere: project out the time entry.
pub fn light_to_ideal(l: &DVector<f64>) -> DVector<f64> {
    let v = DVector::from_fn(l.len() - 1, |i, _| l[i + 1] / l[0]);
    // renormalize to kill drift from the matrix action
    let n = v.norm();
    v / n
}

/// Frame components at `x` to a hyperboloid tangent vector at the image of `x`.
pub fn frame_to_hyperboloid_tangent(x: &DVector<f64>, v_frame: &DVector<f64>) -> DVector<f64> {
    let d = 1.0 - x.norm_squared();
    // coordinate components of the tangent vector
    let dx = v_frame * (d / 2.0);
    let xdx = x.dot(&dx);
    let mut out = DVector::zeros(x.len() + 1);
    out[0] = 4.0 * xdx / (d * d);
    for i in 0..x.len() {
        out[i + 1] = 2.0 * dx[i] / d + 4.0 * x[i] * xdx / (d * d);
    }
    out
}

/// Hyperboloid tangent at hyperboloid point `xh` back to frame components at
/// the corresponding ball point.
pub fn hyperboloid_tangent_to_frame(xh: &DVector<f64>, vh: &DVector<f64>) -> DVector<f64> {
    let t = 1.0 + xh[0];
    let x = hyperboloid_to_ball(xh);
    let dx = DVector::from_fn(xh.len() - 1, |i, _| {
        vh[i + 1] / t - xh[i + 1] * vh[0] / (t * t)
    });
    dx * conformal(&x)
}

/// Exponential map: follow the geodesic from `x` with initial frame velocity
/// `v_frame` for unit time.
pub fn exp_frame(x: &DVector<f64>, v_frame: &DVector<f64>) -> DVector<f64> {
    let r = v_frame.norm();
    if r < 1e-300 {
        return x.clone();
    }
    let xh = ball_to_hyperboloid(x);
    let vh = frame_to_hyperboloid_tangent(x, &(v_frame / r));
    hyperboloid_to_ball(&(&xh * r.cosh() + &vh * r.sinh()))
}

/// Logarithm map: frame components at `x` of the initial velocity of the
/// unit-time geodesic from `x` to `y`.
pub fn log_frame(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let theta = dist(x, y);
    if theta < 1e-14 {
        // first order: the chart is conformal, so scale the coordinate gap
        return (y - x) * conformal(x);
    }
    let xh = ball_to_hyperboloid(x);
    let yh = ball_to_hyperboloid(y);
    let vh = (&yh - &xh * theta.cosh()) * (theta / theta.sinh());
    hyperboloid_tangent_to_frame(&xh, &vh)
}

/// Point at arclength `t` on the geodesic ray from `x` toward the ideal point
/// `xi`.
pub fn geodesic_toward(x: &DVector<f64>, xi: &DVector<f64>, t: f64) -> DVector<f64> {
    let xh = ball_to_hyperboloid(x);
    let l = ideal_to_light(xi);
    // unit tangent at x pointing to the class of l
    let vh = &l * (-1.0 / mink(&xh, &l)) - &xh;
    hyperboloid_to_ball(&(&xh * t.cosh() + &vh * t.sinh()))
}

/// Gradient of `a -> dist(a, z)` in frame components at `a`. Undefined at
/// a = z; callers must exclude coincident nodes.
pub fn dist_grad_frame(a: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
    let d = dist(a, z);
    log_frame(a, z) * (-1.0 / d)
}
