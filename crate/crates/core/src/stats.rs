//! Gaussian and Gaussian-mixture intensity models.
//!
//! Models are one-dimensional (pixel intensity) and fitted by maximum
//! likelihood: closed form for a single Gaussian, EM for mixtures. Variances
//! are floored at [`VARIANCE_FLOOR`] so collapsed components stay finite.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2, LabelMask, LikelihoodField};

pub const VARIANCE_FLOOR: f64 = 1e-4;
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// `-ln(PROBABILITY_FLOOR)`, the largest value a likelihood field can hold.
pub const MAX_NLL: f64 = 27.631021115928547;

pub const EM_MAX_ITERATIONS: usize = 200;
pub const EM_TOLERANCE: f64 = 1e-6;

/// Negative log of a probability, clamped at the floor.
#[inline]
pub fn nll(p: f64) -> f64 {
    -p.max(PROBABILITY_FLOOR).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    #[serde(rename = "K")]
    k: usize,
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let m = Self {
            k: weights.len(),
            weights,
            means,
            variances,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn single(mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![variance])
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        if k == 0 || self.weights.len() != k || self.means.len() != k || self.variances.len() != k
        {
            return Err(Error::InvalidArgument(format!(
                "mixture with K={k} has inconsistent parameter lengths"
            )));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "mixture weights must be nonnegative and sum to 1, got {:?}",
                self.weights
            )));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("mixture means must be finite".into()));
        }
        if self
            .variances
            .iter()
            .any(|&v| !(v >= VARIANCE_FLOOR * (1.0 - 1e-12)) || !v.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "mixture variances must be >= {VARIANCE_FLOOR}, got {:?}",
                self.variances
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn density(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((&w, &m), &v)| w * normal_pdf(x, m, v))
            .sum()
    }

    pub fn neg_log_density(&self, x: f64) -> f64 {
        nll(self.density(x))
    }

    /// Mean log-likelihood of `samples` (exact, via log-sum-exp).
    pub fn mean_log_likelihood(&self, samples: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.k];
        samples
            .iter()
            .map(|&x| self.log_density_components(x, &mut buf))
            .sum::<f64>()
            / samples.len() as f64
    }

    /// Fills `buf[k] = ln(w_k N(x; mu_k, var_k))` and returns the log of the sum.
    fn log_density_components(&self, x: f64, buf: &mut [f64]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for j in 0..self.k {
            let w = self.weights[j];
            buf[j] = if w > 0.0 {
                w.ln() + log_normal_pdf(x, self.means[j], self.variances[j])
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(buf[j]);
        }
        let s: f64 = buf.iter().map(|&l| (l - max).exp()).sum();
        max + s.ln()
    }
}

#[inline]
fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    log_normal_pdf(x, mean, var).exp()
}

#[inline]
fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var + (2.0 * PI * var).ln())
}

/// Maximum-likelihood single Gaussian (biased variance, floored).
pub fn fit_gaussian(samples: &[f64]) -> Result<GaussianMixture> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(format!(
            "fit_gaussian needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
    GaussianMixture::single(mean, var.max(VARIANCE_FLOOR))
}

/// Per-iteration record of an EM run.
#[derive(Debug, Clone, Default)]
pub struct EmTrace {
    /// Mean log-likelihood after initialization and after every M-step.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn fit_gmm(samples: &[f64], k: usize, seed: u64) -> Result<GaussianMixture> {
    fit_gmm_traced(samples, k, seed).map(|(m, _)| m)
}

/// EM for a `k`-component mixture from a seeded k-means++ start.
///
/// Stops when the mean log-likelihood gains less than [`EM_TOLERANCE`] or
/// after [`EM_MAX_ITERATIONS`] iterations. Components are returned sorted by
/// mean.
pub fn fit_gmm_traced(samples: &[f64], k: usize, seed: u64) -> Result<(GaussianMixture, EmTrace)> {
    if k == 0 {
        return Err(Error::InvalidArgument("mixture needs K >= 1".into()));
    }
    if samples.len() < k.max(2) {
        return Err(Error::Degenerate(format!(
            "fit_gmm with K={k} needs at least {} samples, got {}",
            k.max(2),
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    if k == 1 {
        let m = fit_gaussian(samples)?;
        let ll = m.mean_log_likelihood(samples);
        return Ok((
            m,
            EmTrace {
                log_likelihood: vec![ll],
                iterations: 0,
                converged: true,
            },
        ));
    }

    let n = samples.len();
    let mut model = kmeans_pp_init(samples, k, seed);
    let mut resp = vec![0.0; n * k];
    let mut buf = vec![0.0; k];
    let mut trace = EmTrace::default();

    let mut ll = e_step(&model, samples, &mut resp, &mut buf);
    trace.log_likelihood.push(ll);
    for it in 1..=EM_MAX_ITERATIONS {
        m_step(&mut model, samples, &resp);
        let next = e_step(&model, samples, &mut resp, &mut buf);
        trace.log_likelihood.push(next);
        trace.iterations = it;
        let gain = next - ll;
        ll = next;
        if gain < EM_TOLERANCE {
            trace.converged = true;
            break;
        }
    }
    sort_components(&mut model);
    model.validate()?;
    Ok((model, trace))
}

/// Responsibilities into `resp` (row per sample); returns mean log-likelihood.
fn e_step(model: &GaussianMixture, samples: &[f64], resp: &mut [f64], buf: &mut [f64]) -> f64 {
    let k = model.k;
    let mut total = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let lse = model.log_density_components(x, buf);
        total += lse;
        for j in 0..k {
            resp[i * k + j] = (buf[j] - lse).exp();
        }
    }
    total / samples.len() as f64
}

fn m_step(model: &mut GaussianMixture, samples: &[f64], resp: &[f64]) {
    let k = model.k;
    let n = samples.len() as f64;
    for j in 0..k {
        let nk: f64 = (0..samples.len()).map(|i| resp[i * k + j]).sum();
        if nk <= f64::MIN_POSITIVE {
            // Empty component: zero weight, parameters left in place.
            model.weights[j] = 0.0;
            continue;
        }
        let mean = samples
            .iter()
            .enumerate()
            .map(|(i, &x)| resp[i * k + j] * x)
            .sum::<f64>()
            / nk;
        let var = samples
            .iter()
            .enumerate()
            .map(|(i, &x)| resp[i * k + j] * (x - mean) * (x - mean))
            .sum::<f64>()
            / nk;
        model.weights[j] = nk / n;
        model.means[j] = mean;
        model.variances[j] = var.max(VARIANCE_FLOOR);
    }
    let s: f64 = model.weights.iter().sum();
    for w in &mut model.weights {
        *w /= s;
    }
}

/// k-means++ seeding followed by one hard assignment to set weights and
/// variances.
fn kmeans_pp_init(samples: &[f64], k: usize, seed: u64) -> GaussianMixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = samples.len();
    let mut centers = vec![samples[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = samples.iter().map(|&x| (x - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            samples[pick]
        } else {
            samples[rng.random_range(0..n)]
        };
        centers.push(next);
        for (d, &x) in d2.iter_mut().zip(samples) {
            *d = d.min((x - next).powi(2));
        }
    }

    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k];
    let mut sq = vec![0.0; k];
    for &x in samples {
        let j = nearest(&centers, x);
        counts[j] += 1;
        sums[j] += x;
        sq[j] += x * x;
    }
    let overall_var = {
        let m = samples.iter().sum::<f64>() / n as f64;
        samples.iter().map(|&x| (x - m).powi(2)).sum::<f64>() / n as f64
    };
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for j in 0..k {
        if counts[j] == 0 {
            weights.push(0.5 / n as f64);
            means.push(centers[j]);
            variances.push(overall_var.max(VARIANCE_FLOOR));
        } else {
            let c = counts[j] as f64;
            let m = sums[j] / c;
            weights.push(c / n as f64);
            means.push(m);
            variances.push((sq[j] / c - m * m).max(VARIANCE_FLOOR));
        }
    }
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    GaussianMixture {
        k,
        weights,
        means,
        variances,
    }
}

fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (j, &c) in centers.iter().enumerate() {
        if (x - c).abs() < (x - centers[best]).abs() {
            best = j;
        }
    }
    best
}

fn sort_components(m: &mut GaussianMixture) {
    let mut idx: Vec<usize> = (0..m.k).collect();
    idx.sort_by(|&a, &b| m.means[a].total_cmp(&m.means[b]));
    m.weights = idx.iter().map(|&i| m.weights[i]).collect();
    m.means = idx.iter().map(|&i| m.means[i]).collect();
    m.variances = idx.iter().map(|&i| m.variances[i]).collect();
}

/// Per-pixel `-ln p(I)` under `model`. Pixels outside `roi` get [`MAX_NLL`].
pub fn neg_log_likelihood_field(
    pixels: &Grid2<f64>,
    model: &GaussianMixture,
    roi: Option<&LabelMask>,
) -> LikelihoodField {
    match roi {
        None => pixels.map(|&v| model.neg_log_density(v)),
        Some(roi) => pixels.zip_map(roi, |&v, &inside| {
            if inside {
                model.neg_log_density(v)
            } else {
                MAX_NLL
            }
        }),
    }
}

/// Values of `pixels` inside `mask`, in scan order.
pub fn masked_samples(pixels: &Grid2<f64>, mask: &LabelMask) -> Vec<f64> {
    pixels
        .data()
        .iter()
        .zip(mask.data())
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .collect()
}
