//! Seeded synthetic return generators.
//!
//! Randomness comes from ChaCha8 seeded with a 64-bit seed, so a
//! [`GeneratorSpec`] always produces the same series on every platform.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::series::{ReturnSeries, SeriesError};
use crate::Scalar;

pub const MIN_LENGTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    RandomWalk,
    /// Fractional Gaussian noise with Hurst parameter in (0, 1).
    Fgn { hurst: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub mean: f64,
    pub std: f64,
    pub length: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.std > 0.0 && self.std.is_finite()) {
            return Err(SynthError::Spec(format!("std {} must be positive", self.std)));
        }
        if !self.mean.is_finite() {
            return Err(SynthError::Spec("mean must be finite".into()));
        }
        if self.length < MIN_LENGTH {
            return Err(SynthError::Spec(format!(
                "length {} below {MIN_LENGTH}",
                self.length
            )));
        }
        if let GeneratorKind::Fgn { hurst } = self.kind {
            if !(hurst > 0.0 && hurst < 1.0) {
                return Err(SynthError::Spec(format!("hurst {hurst} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

/// How a series was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Iid,
    CirculantEmbedding,
    /// Durbin-Levinson conditional sampling, used when the circulant
    /// embedding is not non-negative definite.
    Hosking,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Iid => "iid",
            Method::CirculantEmbedding => "circulant-embedding",
            Method::Hosking => "hosking",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic<T> {
    pub series: ReturnSeries<T>,
    pub method: Method,
}

fn to_series<T: Scalar>(
    index_id: &str,
    values: Vec<f64>,
    method: Method,
) -> Result<Synthetic<T>, SynthError> {
    let returns = values.into_iter().map(T::of).collect();
    Ok(Synthetic {
        series: ReturnSeries::synthetic(index_id, returns)?,
        method,
    })
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Iid Gaussian returns with the spec's mean and std.
pub fn gaussian_random_walk<T: Scalar>(
    spec: &GeneratorSpec,
    index_id: &str,
) -> Result<Synthetic<T>, SynthError> {
    spec.validate()?;
    if spec.kind != GeneratorKind::RandomWalk {
        return Err(SynthError::Spec("expected a random-walk spec".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values = normals(&mut rng, spec.length)
        .into_iter()
        .map(|z| spec.mean + spec.std * z)
        .collect();
    to_series(index_id, values, Method::Iid)
}

/// Autocovariance of unit-variance fGn at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Unit-variance fGn by circulant embedding (Davies-Harte). `None` when the
/// embedding has a materially negative eigenvalue.
pub fn fgn_circulant(hurst: f64, n: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let size = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..size)
        .map(|j| {
            let lag = if j <= n { j } else { size - j };
            Complex::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut row);
    let scale = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let mut eig = Vec::with_capacity(size);
    for c in &row {
        if c.re < -1e-10 * scale {
            return None;
        }
        eig.push(c.re.max(0.0));
    }

    let z = normals(rng, size);
    let nf = size as f64;
    let mut w = vec![Complex::new(0.0, 0.0); size];
    w[0] = Complex::new((eig[0] / nf).sqrt() * z[0], 0.0);
    w[n] = Complex::new((eig[n] / nf).sqrt() * z[1], 0.0);
    for k in 1..n {
        let a = (eig[k] / (2.0 * nf)).sqrt();
        let v = Complex::new(a * z[2 * k], a * z[2 * k + 1]);
        w[k] = v;
        w[size - k] = v.conj();
    }
    fft.process(&mut w);
    Some(w[..n].iter().map(|c| c.re).collect())
}

/// Unit-variance fGn by sequential conditional sampling. O(n²).
pub fn fgn_hosking(hurst: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(hurst, k)).collect();
    let z = normals(rng, n);
    let mut out = Vec::with_capacity(n);
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut var = gamma[0];
    out.push(var.sqrt() * z[0]);
    for t in 1..n {
        // Durbin-Levinson update of the order-t prediction coefficients.
        let num = gamma[t] - phi.iter().enumerate().map(|(j, p)| p * gamma[t - 1 - j]).sum::<f64>();
        let kappa = num / var;
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - kappa * prev[prev.len() - 1 - j];
        }
        phi.push(kappa);
        var *= 1.0 - kappa * kappa;
        let cond_mean: f64 = phi.iter().enumerate().map(|(j, p)| p * out[t - 1 - j]).sum();
        out.push(cond_mean + var.max(0.0).sqrt() * z[t]);
    }
    out
}

/// Stationary Gaussian returns with fGn autocovariance
/// `γ(k) = σ²/2 (|k+1|^{2H} − 2|k|^{2H} + |k−1|^{2H})`, plus the mean.
pub fn fractional_gaussian_noise<T: Scalar>(
    spec: &GeneratorSpec,
    index_id: &str,
) -> Result<Synthetic<T>, SynthError> {
    spec.validate()?;
    let GeneratorKind::Fgn { hurst } = spec.kind else {
        return Err(SynthError::Spec("expected an fgn spec".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (unit, method) = match fgn_circulant(hurst, spec.length, &mut rng) {
        Some(v) => (v, Method::CirculantEmbedding),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (fgn_hosking(hurst, spec.length, &mut rng), Method::Hosking)
        }
    };
    let values = unit.into_iter().map(|z| spec.mean + spec.std * z).collect();
    to_series(index_id, values, method)
}

/// Dispatches on the spec's kind.
pub fn generate<T: Scalar>(spec: &GeneratorSpec, index_id: &str) -> Result<Synthetic<T>, SynthError> {
    match spec.kind {
        GeneratorKind::RandomWalk => gaussian_random_walk(spec, index_id),
        GeneratorKind::Fgn { .. } => fractional_gaussian_noise(spec, index_id),
    }
}

/// Independent seed for member `i` of a family seeded with `seed`.
pub fn child_seed(seed: u64, i: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i.wrapping_add(1));
    rng.random()
}

/// Random-walk stand-in for `source`: iid Gaussian returns with the same
/// length, sample mean and sample standard deviation, on the same dates.
pub fn random_walk_surrogate<T: Scalar>(
    source: &ReturnSeries<T>,
    seed: u64,
) -> Result<Synthetic<T>, SynthError> {
    let x: Vec<f64> = source.returns().iter().map(|v| v.as_f64()).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let spec = GeneratorSpec {
        kind: GeneratorKind::RandomWalk,
        mean,
        std: var.sqrt(),
        length: x.len(),
        seed,
    };
    let generated = gaussian_random_walk::<T>(&spec, source.index_id())?;
    Ok(Synthetic {
        series: ReturnSeries::new(
            source.index_id(),
            source.dates().to_vec(),
            generated.series.returns().to_vec(),
        )?,
        method: Method::Iid,
    })
}

/// Family of synthetic indexes drawn from one seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleKind {
    RandomWalk,
    /// Hurst parameters uniform on `[hurst_min, hurst_max]`.
    Fgn { hurst_min: f64, hurst_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub count: usize,
    pub length: usize,
    pub mean: f64,
    pub std: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    /// Per-index generator specs. Each index gets its own seed drawn from the
    /// ensemble seed, so member `i` does not depend on `count`.
    pub fn members(&self) -> Result<Vec<GeneratorSpec>, SynthError> {
        if let EnsembleKind::Fgn { hurst_min, hurst_max } = self.kind {
            if !(hurst_min <= hurst_max) {
                return Err(SynthError::Spec(format!(
                    "hurst range [{hurst_min}, {hurst_max}] is empty"
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let specs = (0..self.count)
            .map(|_| {
                let seed: u64 = rng.random();
                let u: f64 = rng.random();
                let kind = match self.kind {
                    EnsembleKind::RandomWalk => GeneratorKind::RandomWalk,
                    EnsembleKind::Fgn { hurst_min, hurst_max } => GeneratorKind::Fgn {
                        hurst: hurst_min + u * (hurst_max - hurst_min),
                    },
                };
                GeneratorSpec {
                    kind,
                    mean: self.mean,
                    std: self.std,
                    length: self.length,
                    seed,
                }
            })
            .collect::<Vec<_>>();
        for s in &specs {
            s.validate()?;
        }
        Ok(specs)
    }
}
