//! Co-occurrence pairs and the negative-sampling ranking loss.
//!
//! For a target `u`, a context `v` and negatives `n_1..n_k` the minimized
//! loss is
//!
//! ```text
//! L = -Σ_i log σ(d(u, n_i) - d(u, v))
//! ```
//!
//! so every term pushes `v` closer to `u` than each negative. Its gradient
//! with respect to each point is the distance gradient weighted by
//! `1 - σ(d(u, n_i) - d(u, v))`.

use crate::geometry::{Backend, GeometryError};

/// Every `(walk[i], walk[j])` with `0 < |i - j| <= window`, skipping pairs
/// whose two nodes coincide.
pub fn cooccurrence_pairs<'a, I>(walks: I, window: usize) -> impl Iterator<Item = (usize, usize)> + 'a
where
    I: IntoIterator<Item = &'a [usize]>,
    I::IntoIter: 'a,
{
    walks.into_iter().flat_map(move |walk| {
        (0..walk.len()).flat_map(move |i| {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(walk.len() - 1);
            (lo..=hi)
                .filter(move |&j| j != i && walk[j] != walk[i])
                .map(move |j| (walk[i], walk[j]))
        })
    })
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log σ(z)` without overflow for large `|z|`.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Co-occurrence probability `σ(-d(u, v))`.
pub fn cooccurrence_probability(backend: Backend, u: &[f64], v: &[f64]) -> f64 {
    sigmoid(-backend.distance(u, v))
}

/// Reusable buffers for [`pair_loss_into`].
#[derive(Debug, Clone, Default)]
pub struct PairWorkspace {
    pub grad_u: Vec<f64>,
    pub grad_v: Vec<f64>,
    /// Flattened `k × dim` gradients, one row per negative.
    pub grad_neg: Vec<f64>,
    scratch_u: Vec<f64>,
    scratch_other: Vec<f64>,
    uv_grad_u: Vec<f64>,
    uv_grad_v: Vec<f64>,
}

impl PairWorkspace {
    pub fn new(dim: usize, k: usize) -> Self {
        PairWorkspace {
            grad_u: vec![0.0; dim],
            grad_v: vec![0.0; dim],
            grad_neg: vec![0.0; dim * k],
            scratch_u: vec![0.0; dim],
            scratch_other: vec![0.0; dim],
            uv_grad_u: vec![0.0; dim],
            uv_grad_v: vec![0.0; dim],
        }
    }

    fn reset(&mut self, dim: usize, k: usize) {
        for buf in [
            &mut self.grad_u,
            &mut self.grad_v,
            &mut self.scratch_u,
            &mut self.scratch_other,
            &mut self.uv_grad_u,
            &mut self.uv_grad_v,
        ] {
            buf.clear();
            buf.resize(dim, 0.0);
        }
        self.grad_neg.clear();
        self.grad_neg.resize(dim * k, 0.0);
    }
}

/// Loss of one `(u, v)` pair against its negatives; gradients (of the loss)
/// land in `ws`. A negative coinciding with `u` contributes nothing. A
/// coincident `(u, v)` pair is [`GeometryError::SingularPair`].
pub fn pair_loss_into(
    backend: Backend,
    u: &[f64],
    v: &[f64],
    negatives: &[&[f64]],
    ws: &mut PairWorkspace,
) -> Result<f64, GeometryError> {
    let dim = u.len();
    ws.reset(dim, negatives.len());
    let d_uv = backend.gradients_into(u, v, &mut ws.uv_grad_u, &mut ws.uv_grad_v)?;
    let mut loss = 0.0;
    for (i, n) in negatives.iter().enumerate() {
        let d_un = match backend.gradients_into(u, n, &mut ws.scratch_u, &mut ws.scratch_other) {
            Ok(d) => d,
            Err(GeometryError::SingularPair) => continue,
            Err(e) => return Err(e),
        };
        let z = d_un - d_uv;
        loss -= log_sigmoid(z);
        let c = 1.0 - sigmoid(z);
        let gn = &mut ws.grad_neg[i * dim..(i + 1) * dim];
        for j in 0..dim {
            ws.grad_u[j] -= c * (ws.scratch_u[j] - ws.uv_grad_u[j]);
            ws.grad_v[j] += c * ws.uv_grad_v[j];
            gn[j] = -c * ws.scratch_other[j];
        }
    }
    Ok(loss)
}

/// Loss value and gradients of one training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLoss {
    pub loss: f64,
    pub grad_u: Vec<f64>,
    pub grad_v: Vec<f64>,
    pub grad_negatives: Vec<Vec<f64>>,
}

pub fn pair_loss(backend: Backend, u: &[f64], v: &[f64], negatives: &[&[f64]]) -> Result<PairLoss, GeometryError> {
    let mut ws = PairWorkspace::new(u.len(), negatives.len());
    let loss = pair_loss_into(backend, u, v, negatives, &mut ws)?;
    Ok(PairLoss {
        loss,
        grad_u: ws.grad_u.clone(),
        grad_v: ws.grad_v.clone(),
        grad_negatives: ws.grad_neg.chunks(u.len().max(1)).map(<[f64]>::to_vec).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{poincare_distance_unchecked, sq_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Loss recomputed from distances only.
    fn reference_loss(u: &[f64], v: &[f64], negs: &[Vec<f64>]) -> f64 {
        let d_uv = poincare_distance_unchecked(u, v);
        negs.iter()
            .map(|n| -(1.0 / (1.0 + (-(poincare_distance_unchecked(u, n) - d_uv)).exp())).ln())
            .sum()
    }

    fn point<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
        loop {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.6..0.6)).collect();
            if sq_norm(&x) < 0.81 {
                return x;
            }
        }
    }

    #[test]
    fn pairs_window_one_and_two() {
        let walk = [0usize, 1, 2];
        let mut p: Vec<_> = cooccurrence_pairs([&walk[..]], 1).collect();
        p.sort();
        assert_eq!(p, vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        let mut p: Vec<_> = cooccurrence_pairs([&walk[..]], 2).collect();
        p.sort();
        assert_eq!(p, vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
    }

    #[test]
    fn self_pairs_are_dropped() {
        let walk = [4usize, 4, 5];
        let p: Vec<_> = cooccurrence_pairs([&walk[..]], 1).collect();
        assert!(p.iter().all(|(a, b)| a != b));
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn probability_values() {
        assert_eq!(cooccurrence_probability(Backend::Hyperbolic, &[0.1, 0.1], &[0.1, 0.1]), 0.5);
        let p = cooccurrence_probability(Backend::Hyperbolic, &[0.5, 0.0], &[0.0, 0.0]);
        assert!((p - 0.25).abs() < 1e-12);
        let far = cooccurrence_probability(Backend::Hyperbolic, &[0.999999, 0.0], &[-0.999999, 0.0]);
        assert!(far < 1e-11);
    }

    #[test]
    fn equal_distances_give_k_ln2() {
        let u = [0.0, 0.0];
        let v = [0.3, 0.0];
        let negs: Vec<&[f64]> = vec![&[0.0, 0.3], &[-0.3, 0.0], &[0.0, -0.3]];
        let l = pair_loss(Backend::Hyperbolic, &u, &v, &negs).unwrap();
        assert!((l.loss - 3.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for _ in 0..300 {
            let dim = rng.gen_range(1..6);
            let u = point(&mut rng, dim);
            let v = point(&mut rng, dim);
            let negs: Vec<Vec<f64>> = (0..3).map(|_| point(&mut rng, dim)).collect();
            let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            let g = pair_loss(Backend::Hyperbolic, &u, &v, &refs).unwrap();
            assert!((g.loss - reference_loss(&u, &v, &negs)).abs() < 1e-10);

            let check = |analytic: &[f64], perturb: &dyn Fn(usize, f64) -> f64| {
                for j in 0..dim {
                    let numeric = (perturb(j, h) - perturb(j, -h)) / (2.0 * h);
                    let scale = numeric.abs().max(1e-2);
                    assert!((analytic[j] - numeric).abs() / scale < 1e-4, "{} vs {numeric}", analytic[j]);
                }
            };
            check(&g.grad_u, &|j, e| {
                let mut x = u.clone();
                x[j] += e;
                reference_loss(&x, &v, &negs)
            });
            check(&g.grad_v, &|j, e| {
                let mut x = v.clone();
                x[j] += e;
                reference_loss(&u, &x, &negs)
            });
            for k in 0..negs.len() {
                check(&g.grad_negatives[k], &|j, e| {
                    let mut n = negs.clone();
                    n[k][j] += e;
                    reference_loss(&u, &v, &n)
                });
            }
        }
    }

    #[test]
    fn small_step_against_gradient_descends() {
        let u = [0.1, 0.2];
        let v = [-0.4, 0.3];
        let negs: Vec<&[f64]> = vec![&[0.15, 0.25], &[0.5, -0.5]];
        let g = pair_loss(Backend::Hyperbolic, &u, &v, &negs).unwrap();
        let moved: Vec<f64> = v.iter().zip(&g.grad_v).map(|(x, d)| x - 1e-4 * d).collect();
        let after = pair_loss(Backend::Hyperbolic, &u, &moved, &negs).unwrap();
        assert!(after.loss < g.loss);
    }

    #[test]
    fn singular_pairs() {
        let u = [0.2, 0.2];
        assert_eq!(
            pair_loss(Backend::Hyperbolic, &u, &u, &[&[0.0, 0.0]]).unwrap_err(),
            GeometryError::SingularPair
        );
        // a negative sitting on u is ignored
        let l = pair_loss(Backend::Hyperbolic, &u, &[0.0, 0.0], &[&u]).unwrap();
        assert_eq!(l.loss, 0.0);
        assert!(l.grad_u.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn stable_log_sigmoid() {
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!(log_sigmoid(800.0) == 0.0);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
    }
}
