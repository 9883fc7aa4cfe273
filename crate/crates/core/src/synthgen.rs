//! Seeded generators: synthetic Gaussian classification data, fold
//! partitions and label-permutation schedules.
//!
//! Every generator draws from its own `ChaCha8Rng` stream, seeded from the
//! caller's seed mixed with a per-operation tag, so the same seed can be
//! reused for data, folds and permutations without the streams overlapping.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Cholesky, UPLO};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{class_counts, Dataset};
use crate::error::{invalid, Error, Result};

const TAG_SYNTHETIC: u64 = 0x5359_4e54;
const TAG_FOLDS: u64 = 0x464f_4c44;
const TAG_PERMUTATIONS: u64 = 0x5045_524d;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a list of coordinates
/// (grid-cell indices, repeat number, ...). Stable across platforms and
/// releases.
pub fn child_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix64(master), |acc, &c| mix64(acc ^ mix64(c)))
}

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, &[tag]))
}

/// Parameters of the synthetic Gaussian generator.
///
/// Class centroids are placed uniformly at random on the unit sphere (scaled
/// by `centroid_scale`), a shared covariance is drawn from a Wishart
/// distribution with `P + 1` degrees of freedom and scale `I / (P + 1)`, and
/// samples are multivariate normal around their class centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    /// Relative class sizes. `None` means balanced (sizes differ by at most 1).
    pub class_weights: Option<Vec<f64>>,
    /// Radius of the sphere the centroids live on. `0.0` gives pure noise.
    pub centroid_scale: f64,
}

/// Output of [`SyntheticConfig::generate`] with the generating parameters
/// kept for inspection.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// `n_classes × n_features`, row `j` is the centroid of class `j + 1`.
    pub centroids: Array2<f64>,
    pub covariance: Array2<f64>,
}

impl SyntheticConfig {
    pub fn new(n_samples: usize, n_features: usize, n_classes: usize) -> Self {
        Self {
            n_samples,
            n_features,
            n_classes,
            class_weights: None,
            centroid_scale: 1.0,
        }
    }

    pub fn class_weights(mut self, weights: Vec<f64>) -> Self {
        self.class_weights = Some(weights);
        self
    }

    pub fn centroid_scale(mut self, scale: f64) -> Self {
        self.centroid_scale = scale;
        self
    }

    /// Class sizes summing to `n_samples`, each at least 1. Balanced sizes put
    /// the remainder on the first classes; weighted sizes use largest
    /// remainders.
    pub fn class_sizes(&self) -> Result<Vec<usize>> {
        let (n, c) = (self.n_samples, self.n_classes);
        if c < 2 {
            return Err(invalid("need at least 2 classes"));
        }
        if n < c {
            return Err(invalid(format!("{n} samples cannot cover {c} classes")));
        }
        let Some(weights) = &self.class_weights else {
            return Ok((0..c).map(|j| n / c + usize::from(j < n % c)).collect());
        };
        if weights.len() != c || weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(invalid("class weights must be positive, one per class"));
        }
        let total: f64 = weights.iter().sum();
        let ideal: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
        let mut sizes: Vec<usize> = ideal.iter().map(|&v| (v.floor() as usize).max(1)).collect();
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&a, &b| {
            let ra = ideal[a] - ideal[a].floor();
            let rb = ideal[b] - ideal[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let mut assigned: usize = sizes.iter().sum();
        let mut k = 0;
        while assigned < n {
            sizes[order[k % c]] += 1;
            assigned += 1;
            k += 1;
        }
        while assigned > n {
            // only reachable when the `max(1)` floor pushed us over
            let j = (0..c).max_by_key(|&j| sizes[j]).unwrap();
            sizes[j] -= 1;
            assigned -= 1;
        }
        Ok(sizes)
    }

    pub fn generate(&self, seed: u64) -> Result<SyntheticData> {
        let p = self.n_features;
        if p == 0 {
            return Err(invalid("need at least one feature"));
        }
        if !self.centroid_scale.is_finite() || self.centroid_scale < 0.0 {
            return Err(invalid("centroid scale must be finite and non-negative"));
        }
        let sizes = self.class_sizes()?;
        let mut rng = rng_for(seed, TAG_SYNTHETIC);

        let mut centroids = Array2::<f64>::zeros((self.n_classes, p));
        for mut row in centroids.rows_mut() {
            let v = unit_vector(&mut rng, p);
            row.assign(&(v * self.centroid_scale));
        }

        let covariance = wishart_identity_mean(&mut rng, p);
        let chol = covariance
            .cholesky(UPLO::Lower)
            .map_err(|_| Error::NumericalDegeneracy("Wishart draw is not positive definite".into()))?;

        let mut features = Array2::<f64>::zeros((self.n_samples, p));
        let mut labels = Vec::with_capacity(self.n_samples);
        let mut row_idx = 0;
        for (j, &size) in sizes.iter().enumerate() {
            for _ in 0..size {
                let z = standard_normal_vec(&mut rng, p);
                let x = centroids.row(j).to_owned() + chol.dot(&z);
                features.row_mut(row_idx).assign(&x);
                labels.push(j + 1);
                row_idx += 1;
            }
        }
        let dataset = Dataset::new(features, labels, self.n_classes)?;
        Ok(SyntheticData {
            dataset,
            centroids,
            covariance,
        })
    }
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    loop {
        let v = standard_normal_vec(rng, n);
        let norm = v.dot(&v).sqrt();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Wishart draw with `p + 1` degrees of freedom and scale `I / (p + 1)`:
/// the sum of `p + 1` outer products of `N(0, I / (p + 1))` vectors.
fn wishart_identity_mean(rng: &mut ChaCha8Rng, p: usize) -> Array2<f64> {
    let df = p + 1;
    let sd = (1.0 / df as f64).sqrt();
    let z = Array2::from_shape_simple_fn((df, p), || rng.sample::<f64, _>(StandardNormal) * sd);
    let w = z.t().dot(&z);
    (&w + &w.t()) * 0.5
}

/// Balanced synthetic dataset: `n_classes` centroids on the unit sphere,
/// Wishart covariance, class sizes differing by at most one.
pub fn make_synthetic(n_samples: usize, n_features: usize, n_classes: usize, seed: u64) -> Result<Dataset> {
    Ok(SyntheticConfig::new(n_samples, n_features, n_classes)
        .generate(seed)?
        .dataset)
}

/// `K` disjoint test folds covering `0..n_samples`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPartition {
    folds: Vec<Vec<usize>>,
    n_samples: usize,
}

impl FoldPartition {
    /// Validates a hand-built partition.
    pub fn from_folds(folds: Vec<Vec<usize>>, n_samples: usize) -> Result<Self> {
        if folds.len() < 2 {
            return Err(invalid("need at least two folds"));
        }
        let mut seen = vec![false; n_samples];
        for fold in &folds {
            if fold.is_empty() {
                return Err(invalid("folds must be non-empty"));
            }
            for &i in fold {
                if i >= n_samples || std::mem::replace(&mut seen[i], true) {
                    return Err(invalid(format!("index {i} out of range or repeated")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(invalid("folds do not cover every sample"));
        }
        Ok(Self { folds, n_samples })
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }

    pub fn test(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Complement of fold `fold`, ascending.
    pub fn train(&self, fold: usize) -> Vec<usize> {
        let mut in_test = vec![false; self.n_samples];
        for &i in &self.folds[fold] {
            in_test[i] = true;
        }
        (0..self.n_samples).filter(|&i| !in_test[i]).collect()
    }
}

/// Random partition into `n_folds` folds whose sizes differ by at most one
/// (the first `N mod K` folds get the extra sample). With `stratify_labels`,
/// each class is spread as evenly as possible over the folds. `n_folds ==
/// n_samples` gives leave-one-out.
pub fn make_folds(
    n_samples: usize,
    n_folds: usize,
    seed: u64,
    stratify_labels: Option<&[usize]>,
) -> Result<FoldPartition> {
    if n_folds < 2 || n_folds > n_samples {
        return Err(invalid(format!(
            "number of folds must lie in [2, {n_samples}], got {n_folds}"
        )));
    }
    let mut rng = rng_for(seed, TAG_FOLDS);
    let order: Vec<usize> = match stratify_labels {
        None => {
            let mut idx: Vec<usize> = (0..n_samples).collect();
            idx.shuffle(&mut rng);
            idx
        }
        Some(labels) => {
            if labels.len() != n_samples {
                return Err(invalid("stratification labels must have one entry per sample"));
            }
            let n_classes = labels.iter().copied().max().unwrap_or(0);
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes + 1];
            for (i, &l) in labels.iter().enumerate() {
                by_class[l].push(i);
            }
            let mut order = Vec::with_capacity(n_samples);
            for mut members in by_class {
                members.shuffle(&mut rng);
                order.extend(members);
            }
            order
        }
    };
    // Dealing round-robin keeps sizes within one and, for the class-sorted
    // order, per-class counts within one as well.
    let mut folds = vec![Vec::with_capacity(n_samples / n_folds + 1); n_folds];
    for (pos, &i) in order.iter().enumerate() {
        folds[pos % n_folds].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPartition { folds, n_samples })
}

/// A schedule of `T` label permutations. Entry 0 is always the identity, so
/// the observed (unpermuted) statistic is part of every run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationPlan {
    seed: u64,
    permutations: Vec<Vec<usize>>,
}

impl PermutationPlan {
    pub fn new(n_samples: usize, n_permutations: usize, seed: u64) -> Result<Self> {
        if n_permutations == 0 {
            return Err(invalid("a permutation plan needs at least the identity"));
        }
        let mut rng = rng_for(seed, TAG_PERMUTATIONS);
        let identity: Vec<usize> = (0..n_samples).collect();
        let mut permutations = Vec::with_capacity(n_permutations);
        permutations.push(identity.clone());
        for _ in 1..n_permutations {
            let mut p = identity.clone();
            p.shuffle(&mut rng);
            permutations.push(p);
        }
        Ok(Self { seed, permutations })
    }

    /// Validates explicit permutations (each must be a bijection on
    /// `0..n`, the first must be the identity).
    pub fn from_permutations(permutations: Vec<Vec<usize>>, seed: u64) -> Result<Self> {
        let Some(first) = permutations.first() else {
            return Err(invalid("empty permutation plan"));
        };
        let n = first.len();
        if first.iter().enumerate().any(|(i, &v)| i != v) {
            return Err(invalid("permutation 0 must be the identity"));
        }
        for p in &permutations {
            let mut seen = vec![false; n];
            if p.len() != n || p.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
                return Err(invalid("every entry must be a bijection"));
            }
        }
        Ok(Self { seed, permutations })
    }

    pub fn n_permutations(&self) -> usize {
        self.permutations.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn permutation(&self, t: usize) -> &[usize] {
        &self.permutations[t]
    }

    /// `out[i] = values[perm_t[i]]`.
    pub fn apply<T: Copy>(&self, t: usize, values: &[T]) -> Result<Vec<T>> {
        let perm = self.permutations.get(t).ok_or_else(|| {
            invalid(format!(
                "permutation index {t} out of range (plan has {})",
                self.permutations.len()
            ))
        })?;
        if perm.len() != values.len() {
            return Err(invalid(format!(
                "plan permutes {} samples, got {}",
                perm.len(),
                values.len()
            )));
        }
        Ok(perm.iter().map(|&i| values[i]).collect())
    }

    /// Row-permuted copy of a response matrix.
    pub(crate) fn apply_rows(&self, t: usize, values: &Array2<f64>) -> Array2<f64> {
        values.select(Axis(0), &self.permutations[t])
    }
}

/// Labels reordered by permutation `t` of the plan.
pub fn permute_labels(labels: &[usize], plan: &PermutationPlan, t: usize) -> Result<Vec<usize>> {
    plan.apply(t, labels)
}

/// Per-fold class counts, used by the stratification tests and the CLI.
pub fn fold_class_counts(partition: &FoldPartition, labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    partition
        .folds()
        .iter()
        .map(|f| {
            let fl: Vec<usize> = f.iter().map(|&i| labels[i]).collect();
            class_counts(&fl, n_classes)
        })
        .collect()
}
