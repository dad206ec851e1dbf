//! Lloyd's K-means with k-means++ seeding, used to discretize the indicator.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct KMeans {
    pub labels: Vec<usize>,
    pub inertia: f64,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centers.row(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn seed_centers(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = points.nrows();
    let mut centers = DMatrix::zeros(k, points.ncols());
    centers.set_row(0, &points.row(rng.random_range(0..n)));
    let mut best: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in best.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.set_row(c, &points.row(pick));
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

fn lloyd(points: &DMatrix<f64>, mut centers: DMatrix<f64>) -> KMeans {
    let n = points.nrows();
    let k = centers.nrows();
    let mut labels = vec![0; n];
    let mut dists = vec![0.0; n];
    for iter in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for i in 0..n {
            let (mut arg, mut min) = (0, f64::INFINITY);
            for c in 0..k {
                let d = sq_dist(points, i, &centers, c);
                if d < min {
                    min = d;
                    arg = c;
                }
            }
            if labels[i] != arg {
                changed = true;
                labels[i] = arg;
            }
            dists[i] = min;
        }
        if !changed && iter > 0 {
            break;
        }

        let mut counts = vec![0usize; k];
        let mut sums = DMatrix::zeros(k, points.ncols());
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += points.row(i);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers.set_row(c, &(sums.row(c) / counts[c] as f64));
            } else {
                // Empty cluster: move it onto the worst-served point.
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]))
                    .unwrap_or(0);
                centers.set_row(c, &points.row(far));
                dists[far] = 0.0;
            }
        }
    }
    let inertia = dists.iter().sum();
    KMeans { labels, inertia }
}

/// Best of `restarts` runs by inertia; ties keep the earliest run.
pub(crate) fn kmeans(points: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> KMeans {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = k.min(points.nrows()).max(1);
    let mut best: Option<KMeans> = None;
    for _ in 0..restarts.max(1) {
        let centers = seed_centers(points, k, &mut rng);
        let run = lloyd(points, centers);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn separates_obvious_groups() {
        let pts = dmatrix![0.0, 0.0; 0.1, 0.0; 10.0, 10.0; 10.1, 10.0; 0.0, 0.1; 10.0, 10.1];
        let out = kmeans(&pts, 2, 5, 0);
        assert_eq!(out.labels[0], out.labels[1]);
        assert_eq!(out.labels[0], out.labels[4]);
        assert_eq!(out.labels[2], out.labels[3]);
        assert_eq!(out.labels[2], out.labels[5]);
        assert_ne!(out.labels[0], out.labels[2]);
    }

    #[test]
    fn deterministic_for_seed() {
        let pts = DMatrix::from_fn(30, 3, |i, j| ((i * 31 + j * 17) % 11) as f64);
        assert_eq!(kmeans(&pts, 4, 20, 7), kmeans(&pts, 4, 20, 7));
        assert!(kmeans(&pts, 4, 20, 7).labels.iter().all(|&l| l < 4));
    }

    #[test]
    fn duplicate_points_do_not_panic() {
        let pts = DMatrix::from_element(5, 2, 1.0);
        let out = kmeans(&pts, 3, 3, 1);
        assert_eq!(out.labels.len(), 5);
        assert_eq!(out.inertia, 0.0);
    }
}
