use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{nearest_centroid, EmbeddingSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iterations: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Centroids in canonical (lexicographic) order.
    pub centroids: Vec<Vec<f32>>,
    /// Per input row, the index of its nearest centroid.
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub inertia_history: Vec<f64>,
    pub converged: bool,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lex_cmp<T: Copy + Into<f64>>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x).into().total_cmp(&(*y).into()))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Lloyd's k-means with k-means++ seeding.
///
/// Points are sorted before seeding so the result does not depend on input order.
pub fn cluster(set: &EmbeddingSet, config: &KMeansConfig) -> Result<Clustering> {
    let k = config.k;
    if k == 0 {
        return Err(Error::Cluster("K must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(set.row(a), set.row(b)));
    let points: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| set.row(i).iter().map(|&v| f64::from(v)).collect())
        .collect();
    let distinct = points.windows(2).filter(|w| w[0] != w[1]).count() + usize::from(!points.is_empty());
    if distinct < k {
        return Err(Error::Cluster(format!(
            "{distinct} distinct embeddings cannot form {k} clusters"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &d) in nearest.iter().enumerate() {
            if d > 0.0 {
                pick = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
        }
        let c = points[pick.expect("a point with positive distance exists")].clone();
        for (n, p) in nearest.iter_mut().zip(&points) {
            *n = n.min(dist2(p, &c));
        }
        centroids.push(c);
    }

    let dim = set.dim();
    let mut labels = vec![usize::MAX; points.len()];
    let mut inertia_history = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iterations {
        let mut changed = false;
        let mut inertia = 0.0;
        let mut dists = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let (mut best, mut best_d) = (0, f64::INFINITY);
            for (c, cen) in centroids.iter().enumerate() {
                let d = dist2(p, cen);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            changed |= labels[i] != best;
            labels[i] = best;
            inertia += best_d;
            dists.push(best_d);
        }
        inertia_history.push(inertia);
        if !changed {
            converged = true;
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Reseed an empty cluster at the point worst served by its centroid.
                let far = (0..points.len())
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("more points than clusters");
                counts[labels[far]] -= 1;
                sums[labels[far]].iter_mut().zip(&points[far]).for_each(|(s, v)| *s -= v);
                labels[far] = c;
                dists[far] = 0.0;
                counts[c] = 1;
                sums[c] = points[far].clone();
            }
        }
        for c in 0..k {
            centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
    }

    let mut out: Vec<Vec<f32>> = centroids
        .iter()
        .map(|c| c.iter().map(|&v| v as f32).collect())
        .collect();
    out.sort_by(|a, b| lex_cmp(a, b));
    out.dedup();
    if out.len() != k {
        return Err(Error::Cluster("k-means produced coincident centroids".into()));
    }
    let labels = (0..set.len()).map(|i| nearest_centroid(set.row(i), &out)).collect();
    Ok(Clustering {
        centroids: out,
        labels,
        inertia_history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[[f32; 2]]) -> EmbeddingSet {
        EmbeddingSet::from_rows("t", 2, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn k1_gives_the_mean() {
        let s = set(&[[0.0, 0.0], [2.0, 4.0], [4.0, 2.0]]);
        let c = cluster(&s, &KMeansConfig::new(1, 3)).unwrap();
        assert_eq!(c.centroids, vec![vec![2.0, 2.0]]);
        assert!(c.converged);
    }

    #[test]
    fn too_few_distinct_points() {
        let s = set(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(cluster(&s, &KMeansConfig::new(2, 0)), Err(Error::Cluster(_))));
        assert!(cluster(&s, &KMeansConfig::new(0, 0)).is_err());
        assert!(cluster(&s, &KMeansConfig::new(1, 0)).is_ok());
    }

    #[test]
    fn exact_k_points() {
        let s = set(&[[5.0, 0.0], [0.0, 0.0], [0.0, 5.0]]);
        let c = cluster(&s, &KMeansConfig::new(3, 9)).unwrap();
        assert_eq!(c.centroids, vec![vec![0.0, 0.0], vec![0.0, 5.0], vec![5.0, 0.0]]);
        assert_eq!(c.labels, vec![2, 0, 1]);
    }
}
