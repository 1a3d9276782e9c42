//! Poincaré-ball kernels (curvature −1) and the flat Euclidean backend.
//!
//! All functions work on plain `&[f64]` coordinates so the trainer can run
//! them directly on rows of an embedding matrix. The hyperbolic distance is
//!
//! ```text
//! d(u, v) = arcosh(1 + 2‖u − v‖² / ((1 − ‖u‖²)(1 − ‖v‖²)))
//! ```
//!
//! and its partial derivatives have the closed form implemented in
//! [`distance_gradients_into`]. Updates rescale a Euclidean direction by the
//! inverse metric factor `(1 − ‖x‖²)² / 4`, then pull the point back inside
//! the ball.

use thiserror::Error;

/// Added to the norm when pulling an escaped point back onto the ball.
pub const BOUNDARY_EPS: f64 = 1e-7;

/// Points are kept at norm `<= 1 - BALL_MARGIN` after every update.
pub const BALL_MARGIN: f64 = 1e-5;

/// Pairs with `gamma - 1` below this are treated as coincident.
pub const SINGULAR_GAMMA: f64 = 1e-12;

/// Lower clamp for `1 - ‖x‖²` before dividing by it.
pub const DELTA_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("point with norm {norm} lies outside the open unit ball")]
    OutsideBall { norm: f64 },
    #[error("coincident points: the distance gradient is undefined")]
    SingularPair,
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

type GeoResult<T> = std::result::Result<T, GeometryError>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Inverse hyperbolic cosine, written to stay accurate near `x = 1`.
#[inline]
pub fn arcosh(x: f64) -> f64 {
    (x + ((x - 1.0) * (x + 1.0)).sqrt()).ln()
}

/// A point of the open unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint(Vec<f64>);

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> GeoResult<Self> {
        check_inside(&coords)?;
        Ok(BallPoint(coords))
    }

    pub fn origin(dim: usize) -> Self {
        BallPoint(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        sq_norm(&self.0).sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_inside(x: &[f64]) -> GeoResult<()> {
    let sq = sq_norm(x);
    if !(sq < 1.0) {
        return Err(GeometryError::OutsideBall { norm: sq.sqrt() });
    }
    Ok(())
}

fn check_dims(u: &[f64], v: &[f64]) -> GeoResult<()> {
    if u.len() != v.len() {
        return Err(GeometryError::DimensionMismatch(u.len(), v.len()));
    }
    Ok(())
}

#[inline]
fn delta(x: &[f64]) -> f64 {
    (1.0 - sq_norm(x)).max(DELTA_FLOOR)
}

/// Hyperbolic distance; both arguments must lie strictly inside the ball.
pub fn poincare_distance(u: &[f64], v: &[f64]) -> GeoResult<f64> {
    check_dims(u, v)?;
    check_inside(u)?;
    check_inside(v)?;
    Ok(poincare_distance_unchecked(u, v))
}

/// Hyperbolic distance without the domain check (deltas are clamped).
#[inline]
pub fn poincare_distance_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let gamma_minus_one = 2.0 * sq_dist(u, v) / (delta(u) * delta(v));
    arcosh(1.0 + gamma_minus_one)
}

/// Distance and both partial derivatives of one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGradients {
    pub distance: f64,
    pub grad_u: Vec<f64>,
    pub grad_v: Vec<f64>,
    /// `1 - ‖u‖²` (always 1 for the Euclidean backend).
    pub delta_u: f64,
    pub delta_v: f64,
    /// `1 + 2‖u − v‖² / (δ_u δ_v)` (always 1 for the Euclidean backend).
    pub gamma: f64,
}

pub fn distance_gradients(u: &[f64], v: &[f64]) -> GeoResult<DistanceGradients> {
    check_dims(u, v)?;
    let mut grad_u = vec![0.0; u.len()];
    let mut grad_v = vec![0.0; u.len()];
    let (distance, delta_u, delta_v, gamma) = distance_gradients_into(u, v, &mut grad_u, &mut grad_v)?;
    Ok(DistanceGradients {
        distance,
        grad_u,
        grad_v,
        delta_u,
        delta_v,
        gamma,
    })
}

/// Writes `∂d/∂u` and `∂d/∂v` into the buffers and returns
/// `(distance, δ_u, δ_v, γ)`:
///
/// ```text
/// ∂d/∂u = 4 / (δ_v √(γ² − 1)) · ((‖v‖² − 2⟨u, v⟩ + 1) / δ_u² · u − v / δ_u)
/// ```
///
/// and symmetrically for `v`.
pub fn distance_gradients_into(
    u: &[f64],
    v: &[f64],
    grad_u: &mut [f64],
    grad_v: &mut [f64],
) -> GeoResult<(f64, f64, f64, f64)> {
    let sq_u = sq_norm(u);
    let sq_v = sq_norm(v);
    let uv = dot(u, v);
    let delta_u = (1.0 - sq_u).max(DELTA_FLOOR);
    let delta_v = (1.0 - sq_v).max(DELTA_FLOOR);
    let gamma_minus_one = 2.0 * sq_dist(u, v) / (delta_u * delta_v);
    if !(gamma_minus_one >= SINGULAR_GAMMA) {
        return Err(GeometryError::SingularPair);
    }
    let gamma = 1.0 + gamma_minus_one;
    let root = (gamma_minus_one * (gamma + 1.0)).sqrt();

    let coef_u = 4.0 / (delta_v * root);
    let a_u = (sq_v - 2.0 * uv + 1.0) / (delta_u * delta_u);
    let coef_v = 4.0 / (delta_u * root);
    let a_v = (sq_u - 2.0 * uv + 1.0) / (delta_v * delta_v);
    for i in 0..u.len() {
        grad_u[i] = coef_u * (a_u * u[i] - v[i] / delta_u);
        grad_v[i] = coef_v * (a_v * v[i] - u[i] / delta_v);
    }
    Ok((arcosh(gamma), delta_u, delta_v, gamma))
}

/// Inverse metric factor `(1 − ‖x‖²)² / 4`.
#[inline]
pub fn metric_scale(x: &[f64]) -> f64 {
    let d = 1.0 - sq_norm(x);
    d * d / 4.0
}

/// Boundary pull-back: `x / (‖x‖ + ε)` when `‖x‖ >= 1`, identity otherwise.
pub fn pull_back(x: &mut [f64]) {
    let norm = sq_norm(x).sqrt();
    if norm >= 1.0 {
        let s = 1.0 / (norm + BOUNDARY_EPS);
        x.iter_mut().for_each(|c| *c *= s);
    }
}

/// [`pull_back`] followed by the interior margin: any point farther out
/// than `1 - BALL_MARGIN` is rescaled onto that radius.
pub fn project(x: &mut [f64]) {
    pull_back(x);
    let norm = sq_norm(x).sqrt();
    let max = 1.0 - BALL_MARGIN;
    if norm > max {
        let s = max / norm;
        x.iter_mut().for_each(|c| *c *= s);
    }
}

/// `x ← proj(x + lr · (1 − ‖x‖²)²/4 · direction)`.
///
/// `direction` is the ascent direction of the objective, i.e. the negated
/// gradient of a loss. A non-finite direction leaves `x` untouched.
pub fn riemannian_step_in_place(x: &mut [f64], direction: &[f64], lr: f64) -> GeoResult<()> {
    check_dims(x, direction)?;
    if direction.iter().any(|g| !g.is_finite()) {
        return Err(GeometryError::NonFiniteGradient);
    }
    let s = lr * metric_scale(x);
    for (c, g) in x.iter_mut().zip(direction) {
        *c += s * g;
    }
    project(x);
    Ok(())
}

pub fn riemannian_step(x: &BallPoint, direction: &[f64], lr: f64) -> GeoResult<BallPoint> {
    let mut out = x.0.clone();
    riemannian_step_in_place(&mut out, direction, lr)?;
    Ok(BallPoint(out))
}

pub fn euclidean_distance(u: &[f64], v: &[f64]) -> f64 {
    sq_dist(u, v).sqrt()
}

/// Euclidean distance and its gradients; coincident points are singular.
pub fn euclidean_gradients_into(
    u: &[f64],
    v: &[f64],
    grad_u: &mut [f64],
    grad_v: &mut [f64],
) -> GeoResult<f64> {
    let d = euclidean_distance(u, v);
    if !(d >= SINGULAR_GAMMA) {
        return Err(GeometryError::SingularPair);
    }
    for i in 0..u.len() {
        let g = (u[i] - v[i]) / d;
        grad_u[i] = g;
        grad_v[i] = -g;
    }
    Ok(d)
}

/// Plain gradient step: unit metric scale, no projection.
pub fn euclidean_step_in_place(x: &mut [f64], direction: &[f64], lr: f64) -> GeoResult<()> {
    check_dims(x, direction)?;
    if direction.iter().any(|g| !g.is_finite()) {
        return Err(GeometryError::NonFiniteGradient);
    }
    for (c, g) in x.iter_mut().zip(direction) {
        *c += lr * g;
    }
    Ok(())
}

/// Geometry used by the trainer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Hyperbolic,
    Euclidean,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Hyperbolic => "hyperbolic",
            Backend::Euclidean => "euclidean",
        }
    }

    pub fn parse(s: &str) -> Option<Backend> {
        match s {
            "hyperbolic" | "poincare" => Some(Backend::Hyperbolic),
            "euclidean" => Some(Backend::Euclidean),
            _ => None,
        }
    }

    #[inline]
    pub fn distance(self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            Backend::Hyperbolic => poincare_distance_unchecked(u, v),
            Backend::Euclidean => euclidean_distance(u, v),
        }
    }

    /// Distance plus gradients written into the buffers.
    #[inline]
    pub fn gradients_into(
        self,
        u: &[f64],
        v: &[f64],
        grad_u: &mut [f64],
        grad_v: &mut [f64],
    ) -> GeoResult<f64> {
        match self {
            Backend::Hyperbolic => distance_gradients_into(u, v, grad_u, grad_v).map(|r| r.0),
            Backend::Euclidean => euclidean_gradients_into(u, v, grad_u, grad_v),
        }
    }

    pub fn gradients(self, u: &[f64], v: &[f64]) -> GeoResult<DistanceGradients> {
        check_dims(u, v)?;
        match self {
            Backend::Hyperbolic => distance_gradients(u, v),
            Backend::Euclidean => {
                let mut grad_u = vec![0.0; u.len()];
                let mut grad_v = vec![0.0; u.len()];
                let distance = euclidean_gradients_into(u, v, &mut grad_u, &mut grad_v)?;
                Ok(DistanceGradients {
                    distance,
                    grad_u,
                    grad_v,
                    delta_u: 1.0,
                    delta_v: 1.0,
                    gamma: 1.0,
                })
            }
        }
    }

    /// Multiplier applied to a Euclidean direction before the step.
    pub fn metric_scale(self, x: &[f64]) -> f64 {
        match self {
            Backend::Hyperbolic => metric_scale(x),
            Backend::Euclidean => 1.0,
        }
    }

    #[inline]
    pub fn step_in_place(self, x: &mut [f64], direction: &[f64], lr: f64) -> GeoResult<()> {
        match self {
            Backend::Hyperbolic => riemannian_step_in_place(x, direction, lr),
            Backend::Euclidean => euclidean_step_in_place(x, direction, lr),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point<R: Rng>(rng: &mut R, dim: usize, max_norm: f64) -> Vec<f64> {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = sq_norm(&x).sqrt();
        let r = max_norm * rng.gen::<f64>();
        x.iter_mut().for_each(|c| *c *= r / n);
        x
    }

    /// Central differences of `f` at `x`, step `h`.
    fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|i| {
                probe[i] = x[i] + h;
                let up = f(&probe);
                probe[i] = x[i] - h;
                let down = f(&probe);
                probe[i] = x[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn known_distances() {
        assert_eq!(poincare_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        // 1 + 2·0.25/0.75 = 5/3 and arcosh(5/3) = ln 3.
        assert_relative_eq!(
            poincare_distance(&[0.5, 0.0], &[0.0, 0.0]).unwrap(),
            3f64.ln(),
            epsilon = 1e-12
        );
        // 1 + 2·1/0.5625 = 41/9 and arcosh(41/9) = ln 9.
        assert_relative_eq!(
            poincare_distance(&[0.5, 0.0], &[-0.5, 0.0]).unwrap(),
            9f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn boundary_points_are_rejected() {
        assert!(matches!(
            poincare_distance(&[1.0, 0.0], &[0.0, 0.0]),
            Err(GeometryError::OutsideBall { .. })
        ));
        assert!(BallPoint::new(vec![0.6, 0.8]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 1000 {
            let dim = rng.gen_range(1..=8);
            let u = random_point(&mut rng, dim, 0.9);
            let v = random_point(&mut rng, dim, 0.9);
            if euclidean_distance(&u, &v) < 1e-3 {
                continue;
            }
            let g = distance_gradients(&u, &v).unwrap();
            let fu = numeric_gradient(|x| poincare_distance_unchecked(x, &v), &u, 1e-6);
            let fv = numeric_gradient(|x| poincare_distance_unchecked(&u, x), &v, 1e-6);
            for (a, n) in g.grad_u.iter().zip(&fu).chain(g.grad_v.iter().zip(&fv)) {
                let scale = n.abs().max(1e-2);
                assert!((a - n).abs() / scale < 1e-4, "analytic {a} numeric {n}");
            }
            checked += 1;
        }
    }

    #[test]
    fn moving_toward_partner_decreases_distance() {
        let g = distance_gradients(&[0.3], &[0.6]).unwrap();
        assert!(g.grad_u[0] < 0.0);
        assert!(g.grad_v[0] > 0.0);
    }

    #[test]
    fn swapped_arguments_swap_gradients() {
        let u = [0.1, -0.4, 0.2];
        let v = [-0.3, 0.5, 0.05];
        let a = distance_gradients(&u, &v).unwrap();
        let b = distance_gradients(&v, &u).unwrap();
        for (x, y) in b.grad_u.iter().zip(&a.grad_v) {
            assert_relative_eq!(x, y, epsilon = 1e-14);
        }
        assert_relative_eq!(a.distance, b.distance);
    }

    #[test]
    fn coincident_points_are_singular() {
        assert_eq!(
            distance_gradients(&[0.2, 0.2], &[0.2, 0.2]).unwrap_err(),
            GeometryError::SingularPair
        );
    }

    #[test]
    fn step_arithmetic() {
        assert_eq!(metric_scale(&[0.0, 0.0]), 0.25);

        let mut x = vec![1.5, 0.0];
        pull_back(&mut x);
        assert_relative_eq!(x[0], 1.5 / (1.5 + 1e-7), epsilon = 1e-15);
        assert!(x[0] < 1.0);
        let mut y = vec![1.5, 0.0];
        project(&mut y);
        assert_relative_eq!(y[0], 1.0 - BALL_MARGIN, epsilon = 1e-15);

        let p = BallPoint::new(vec![0.3, -0.2]).unwrap();
        assert_eq!(riemannian_step(&p, &[5.0, 5.0], 0.0).unwrap(), p);
        assert_eq!(
            riemannian_step(&p, &[f64::NAN, 0.0], 0.1).unwrap_err(),
            GeometryError::NonFiniteGradient
        );
        let q = riemannian_step(&BallPoint::origin(2), &[1.0, 0.0], 0.4).unwrap();
        assert_relative_eq!(q.as_slice()[0], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn euclidean_backend() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let u: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let g = Backend::Euclidean.gradients(&u, &v).unwrap();
            let fu = numeric_gradient(|x| euclidean_distance(x, &v), &u, 1e-6);
            for (a, n) in g.grad_u.iter().zip(&fu) {
                assert!((a - n).abs() / n.abs().max(1e-2) < 1e-4);
            }
        }
        let mut x = vec![0.5, 0.5];
        Backend::Euclidean.step_in_place(&mut x, &[2.0, -2.0], 0.5).unwrap();
        assert_eq!(x, vec![1.5, -0.5]);
    }

    #[test]
    fn distance_diverges_toward_boundary() {
        let v = [0.1, 0.0];
        let mut last = 0.0;
        for k in 1..60 {
            let r = 1.0 - 0.5f64.powi(k / 3 + 1);
            let d = poincare_distance(&[0.0, r], &v).unwrap();
            assert!(d >= last);
            last = d;
        }
        assert!(last > 14.0);
    }

    proptest! {
        #[test]
        fn triangle_inequality(
            a in proptest::collection::vec(-0.57f64..0.57, 3),
            b in proptest::collection::vec(-0.57f64..0.57, 3),
            c in proptest::collection::vec(-0.57f64..0.57, 3),
        ) {
            let ab = poincare_distance(&a, &b).unwrap();
            let bc = poincare_distance(&b, &c).unwrap();
            let ac = poincare_distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-10);
            prop_assert!((ab - poincare_distance(&b, &a).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn steps_stay_inside(
            start in proptest::collection::vec(-0.5f64..0.5, 4),
            dirs in proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, 4), 1..30),
            lr in 0.0f64..10.0,
        ) {
            let mut x = start;
            for d in &dirs {
                riemannian_step_in_place(&mut x, d, lr).unwrap();
                prop_assert!(sq_norm(&x).sqrt() <= 1.0 - BALL_MARGIN + 1e-15);
                prop_assert!(x.iter().all(|c| c.is_finite()));
            }
        }
    }
}
