//! Seeded synthetic two-class data and a nearest-centroid evaluator.
//!
//! The generator is fully specified so other implementations can reproduce
//! datasets bit for bit (modulo the platform's `ln`/`cos`):
//!
//! 1. Seed xoshiro256++ through SplitMix64 ([`SeededRng::new`]).
//! 2. Shuffle the feature positions `0..n` with Fisher-Yates, walking `i`
//!    from `n - 1` down to `1` and swapping with `below(i + 1)`. Output column
//!    `c` then holds original feature `perm[c]`; original features
//!    `0..n_informative` are the informative ones.
//! 3. For each sample `s` (class `s mod 2`), for each original feature in
//!    order, draw one standard normal. Informative features add a class mean
//!    of `-separation / 2` (class 0) or `+separation / 2` (class 1).
//!
//! Uniforms are `(next_u64 >> 11) * 2^-53`; normals use one Box-Muller
//! output, `sqrt(-2 ln(1 - u1)) * cos(2π u2)`; `below(k)` is the high word of
//! the 128-bit product `next_u64 * k`.

use ndarray::Array2;
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Deterministic random source shared by the generator and the verification suites.
#[derive(Debug, Clone)]
pub struct SeededRng(Xoshiro256PlusPlus);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Integer in `0..bound`; `bound` must be positive.
    pub fn below(&mut self, bound: usize) -> usize {
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    /// Distance between the class means of informative features, in standard deviations.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_samples: 200,
            n_informative: 5,
            n_noise: 45,
            separation: 3.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 samples, got {}",
                self.n_samples
            )));
        }
        if self.n_informative < 1 {
            return Err(Error::InvalidParameter("need at least one informative feature".into()));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "separation must be positive, got {}",
                self.separation
            )));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.n_informative + self.n_noise
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub data: FeatureMatrix,
    /// Columns holding informative features, ascending.
    pub informative: Vec<usize>,
}

struct Generator {
    spec: SynthSpec,
    rng: SeededRng,
    /// `position[f]` is the output column of original feature `f`.
    position: Vec<usize>,
}

impl Generator {
    fn new(spec: SynthSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = SeededRng::new(spec.seed);
        let n = spec.n_features();
        let mut perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut perm);
        let mut position = vec![0; n];
        for (column, &original) in perm.iter().enumerate() {
            position[original] = column;
        }
        Ok(Self { spec, rng, position })
    }

    fn informative_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self.position[..self.spec.n_informative].to_vec();
        cols.sort_unstable();
        cols
    }

    fn draw(&mut self, m: usize) -> Result<FeatureMatrix> {
        let n = self.spec.n_features();
        let half = self.spec.separation / 2.0;
        let mut values = Array2::zeros((m, n));
        let mut labels = Vec::with_capacity(m);
        for s in 0..m {
            let class = s % 2;
            let mean = if class == 0 { -half } else { half };
            for f in 0..n {
                let shift = if f < self.spec.n_informative { mean } else { 0.0 };
                values[[s, self.position[f]]] = shift + self.rng.normal();
            }
            labels.push(class);
        }
        FeatureMatrix::new(values, labels, None)
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    let mut g = Generator::new(*spec)?;
    let data = g.draw(spec.n_samples)?;
    Ok(SynthData {
        data,
        informative: g.informative_columns(),
    })
}

/// Like [`generate`], then draws `n_test` further samples from the same stream
/// with the same column layout. The training part equals `generate(spec)`.
pub fn generate_split(spec: &SynthSpec, n_test: usize) -> Result<(SynthData, FeatureMatrix)> {
    let mut g = Generator::new(*spec)?;
    let data = g.draw(spec.n_samples)?;
    let test = g.draw(n_test)?;
    Ok((
        SynthData {
            data,
            informative: g.informative_columns(),
        },
        test,
    ))
}

/// Fraction of `test` samples whose nearest class centroid (Euclidean, over
/// `selected` features, centroids from `train`) carries their own label.
pub fn nearest_centroid_accuracy(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    selected: &[usize],
) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    if train.n_features() != test.n_features() {
        return Err(Error::ShapeMismatch(format!(
            "train has {} features, test has {}",
            train.n_features(),
            test.n_features()
        )));
    }
    if let Some(&bad) = selected.iter().find(|&&j| j >= train.n_features()) {
        return Err(Error::ShapeMismatch(format!("feature index {bad} out of range")));
    }

    let k = train.n_classes();
    let sizes = train.class_sizes();
    let mut centroids = Array2::<f64>::zeros((k, selected.len()));
    for (row, &label) in train.values().outer_iter().zip(train.labels()) {
        for (c, &j) in selected.iter().enumerate() {
            centroids[[label, c]] += row[j];
        }
    }
    for (mut centroid, &size) in centroids.outer_iter_mut().zip(&sizes) {
        centroid.mapv_inplace(|v| v / size as f64);
    }

    let correct = test
        .values()
        .outer_iter()
        .zip(test.labels())
        .filter(|(row, &label)| {
            let nearest = (0..k)
                .map(|class| {
                    let d: f64 = selected
                        .iter()
                        .enumerate()
                        .map(|(c, &j)| (row[j] - centroids[[class, c]]).powi(2))
                        .sum();
                    (class, d)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(class, _)| class);
            nearest == Some(label)
        })
        .count();
    Ok(correct as f64 / test.n_samples() as f64)
}
