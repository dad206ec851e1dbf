//! Synthetic multi-view benchmarks with known labels.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::MultiViewDataset;
use crate::error::{Error, Result};

/// Gaussian clusters shared across views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub k: usize,
    /// Feature count of every view; its length is the view count.
    pub dims: Vec<usize>,
    /// Minimum pairwise center distance, in within-cluster standard deviations.
    pub separation: f64,
    /// The last `noise_views` views carry no cluster signal.
    pub noise_views: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn num_views(&self) -> usize {
        self.dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return Err(Error::TooManyClusters {
                k: self.k,
                n: self.n,
            });
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Config(
                "every view needs at least one feature".into(),
            ));
        }
        if self.noise_views > self.dims.len() {
            return Err(Error::Config(format!(
                "{} noise views requested but only {} views",
                self.noise_views,
                self.dims.len()
            )));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::Config("separation must be non-negative".into()));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    DMatrix::from_vec(rows, cols, data)
}

/// `k` centers (columns) in `d` dimensions whose closest pair sits exactly
/// `separation` apart.
fn centers(rng: &mut ChaCha8Rng, d: usize, k: usize, separation: f64) -> DMatrix<f64> {
    let raw = gaussian(rng, d, k);
    if k < 2 {
        return raw * 0.0;
    }
    let mut min = f64::INFINITY;
    for a in 0..k {
        for b in a + 1..k {
            min = min.min((raw.column(a) - raw.column(b)).norm());
        }
    }
    if min > 0.0 {
        raw * (separation / min)
    } else {
        raw * 0.0
    }
}

/// Instances go to clusters round-robin (`label = i mod k`); each informative
/// view adds unit-variance noise to its cluster center.
pub fn generate(spec: &SynthSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<usize> = (0..spec.n).map(|i| i % spec.k).collect();
    let informative = spec.num_views() - spec.noise_views;
    let mut views = Vec::with_capacity(spec.num_views());
    for (v, &d) in spec.dims.iter().enumerate() {
        let mut x = gaussian(&mut rng, d, spec.n);
        if v < informative {
            let c = centers(&mut rng, d, spec.k, spec.separation);
            for (i, &l) in labels.iter().enumerate() {
                let mut col = x.column_mut(i);
                col += c.column(l);
            }
        }
        views.push(x);
    }
    MultiViewDataset::new(views, Some(labels), None)
}

/// Two views whose class is the sign of the product of one feature from
/// each view. Neither view alone separates the classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub n: usize,
    /// Feature counts of the two views; feature 0 of each carries the sign.
    pub dims: [usize; 2],
    /// Magnitude of the designated features, in units of their noise.
    pub margin: f64,
    /// Standard deviation of the remaining (uninformative) features.
    pub noise: f64,
    pub seed: u64,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        Self {
            n: 200,
            dims: [1, 1],
            margin: 4.0,
            noise: 0.1,
            seed: 0,
        }
    }
}

/// Label 0 when the designated features agree in sign, 1 otherwise.
/// Sign patterns cycle through all four quadrants so classes are balanced.
pub fn generate_interaction(spec: &InteractionSpec) -> Result<MultiViewDataset> {
    if spec.n < 4 {
        return Err(Error::Config(
            "interaction data needs at least 4 instances".into(),
        ));
    }
    if spec.dims.contains(&0) {
        return Err(Error::Config(
            "every view needs at least one feature".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut a = gaussian(&mut rng, spec.dims[0], spec.n) * spec.noise;
    let mut b = gaussian(&mut rng, spec.dims[1], spec.n) * spec.noise;
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let sa = if i % 2 == 0 { 1.0 } else { -1.0 };
        let sb = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let ga: f64 = rng.sample(StandardNormal);
        let gb: f64 = rng.sample(StandardNormal);
        a[(0, i)] = sa * (spec.margin + ga);
        b[(0, i)] = sb * (spec.margin + gb);
        labels.push(if sa * sb > 0.0 { 0 } else { 1 });
    }
    MultiViewDataset::new(vec![a, b], Some(labels), None)
}
