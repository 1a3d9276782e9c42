use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::graph::TemporalHin;

/// How negatives are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativeDistribution {
    #[default]
    Uniform,
    /// Proportional to node degree.
    Degree,
}

impl NegativeDistribution {
    pub fn name(self) -> &'static str {
        match self {
            NegativeDistribution::Uniform => "uniform",
            NegativeDistribution::Degree => "degree",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(NegativeDistribution::Uniform),
            "degree" => Some(NegativeDistribution::Degree),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum NegativeSampler {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

/// Draws per slot before a weighted sampler gives up on that slot.
const MAX_ATTEMPTS: usize = 1000;

impl NegativeSampler {
    pub fn uniform(node_count: usize) -> Self {
        NegativeSampler::Uniform(node_count)
    }

    pub fn for_graph(graph: &TemporalHin, dist: NegativeDistribution) -> Self {
        match dist {
            NegativeDistribution::Uniform => NegativeSampler::Uniform(graph.node_count()),
            NegativeDistribution::Degree => {
                let weights: Vec<f64> = (0..graph.node_count()).map(|v| graph.degree(v) as f64).collect();
                match WeightedIndex::new(&weights) {
                    Ok(w) => NegativeSampler::Weighted(w),
                    Err(_) => NegativeSampler::Uniform(graph.node_count()),
                }
            }
        }
    }

    /// Appends `k` draws to `out`, redrawing any that hit `exclude`. Returns
    /// early (with fewer than `k`) only when no admissible node exists.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, k: usize, exclude: [usize; 2], out: &mut Vec<usize>) {
        match self {
            NegativeSampler::Uniform(n) => {
                let excluded = if exclude[0] == exclude[1] {
                    usize::from(exclude[0] < *n)
                } else {
                    exclude.iter().filter(|&&x| x < *n).count()
                };
                if *n <= excluded {
                    return;
                }
                for _ in 0..k {
                    loop {
                        let c = rng.gen_range(0..*n);
                        if c != exclude[0] && c != exclude[1] {
                            out.push(c);
                            break;
                        }
                    }
                }
            }
            NegativeSampler::Weighted(w) => {
                for _ in 0..k {
                    for _ in 0..MAX_ATTEMPTS {
                        let c = w.sample(rng);
                        if c != exclude[0] && c != exclude[1] {
                            out.push(c);
                            break;
                        }
                    }
                }
            }
        }
    }
}

/// `k` negatives drawn uniformly from `0..node_count`, none in `exclude`.
pub fn negative_sample<R: Rng + ?Sized>(rng: &mut R, node_count: usize, k: usize, exclude: [usize; 2]) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    NegativeSampler::uniform(node_count).sample_into(rng, k, exclude, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exclusion_leaves_only_admissible_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [false; 5];
        for _ in 0..200 {
            let s = negative_sample(&mut rng, 5, 3, [1, 3]);
            assert_eq!(s.len(), 3);
            for x in s {
                assert!(x != 1 && x != 3);
                seen[x] = true;
            }
        }
        assert_eq!(seen, [true, false, true, false, true]);
    }

    #[test]
    fn zero_k_and_impossible_requests() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(negative_sample(&mut rng, 10, 0, [0, 1]).is_empty());
        assert!(negative_sample(&mut rng, 2, 4, [0, 1]).is_empty());
    }

    #[test]
    fn marginal_is_uniform() {
        // Chi-square over 10^6 draws from 20 admissible nodes (22 total).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 22;
        let mut counts = vec![0usize; n];
        let sampler = NegativeSampler::uniform(n);
        let mut buf = Vec::with_capacity(5);
        for _ in 0..200_000 {
            buf.clear();
            sampler.sample_into(&mut rng, 5, [4, 17], &mut buf);
            for &x in &buf {
                counts[x] += 1;
            }
        }
        assert_eq!(counts[4] + counts[17], 0);
        let expected = 1_000_000.0 / 20.0;
        let chi2: f64 = counts
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 4 && *i != 17)
            .map(|(_, &c)| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 19 degrees of freedom: mean 19, sd ~6.2
        assert!(chi2 < 19.0 + 3.0 * (2.0f64 * 19.0).sqrt(), "chi2 = {chi2}");
    }
}
