//! Statistical cross-validation: seeded Gaussian sampling of quadrature
//! fluctuations, synthetic photocurrent time series, a spectrum-analyzer
//! emulation, and a binary pulse-code round trip.
//!
//! Determinism contract: sampling is chunked, each chunk draws from a ChaCha
//! stream derived from `(seed, chunk index)`, and chunk results are reduced
//! in index order with compensated summation, so identical inputs reproduce
//! identical numbers bit for bit regardless of thread count.

use crate::gaussian::{GaussianError, GaussianState, QuadratureForm};
use crate::numeric::compensated_sum;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("covariance is not positive definite; cannot factor for sampling")]
    NotPositiveDefinite,
    #[error("sample rate {sample_rate} Hz below four times the signal frequency {freq} Hz")]
    NyquistViolation { sample_rate: f64, freq: f64 },
    #[error("series of {got} samples shorter than {needed} (ten analyzer windows)")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("parameter {name} = {value} outside its domain")]
    ParamOutOfDomain { name: &'static str, value: f64 },
    #[error("empty bit sequence")]
    EmptyBits,
}

const CHUNK: usize = 1 << 14;

fn chunk_rng(seed: u64, chunk_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk_index);
    rng
}

fn cholesky_factor(state: &GaussianState) -> Result<DMatrix<f64>, MonteCarloError> {
    state
        .cov()
        .clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or(MonteCarloError::NotPositiveDefinite)
}

/// Values of a quadrature form drawn from a state, reproducible from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub seed: u64,
    pub values: Vec<f64>,
}

/// Draw `n` samples of `form` on `state`. Each sample consumes `2N` standard
/// normals from its chunk's stream, in quadrature order.
pub fn sample_form(
    state: &GaussianState,
    form: &QuadratureForm,
    n: usize,
    seed: u64,
) -> Result<SampleBatch, MonteCarloError> {
    state.variance_of(form)?; // dimension check
    let l = cholesky_factor(state)?;
    let mean_value = state.mean_of(form)?;
    // value = c . (mean + L z) = c . mean + (L^T c) . z
    let projected: DVector<f64> = l.transpose() * form.vector().clone();
    let w = projected.as_slice().to_vec();

    let mut values = vec![0.0f64; n];
    values
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk_index, out)| {
            let mut rng = chunk_rng(seed, chunk_index as u64);
            for value in out.iter_mut() {
                let mut acc = mean_value;
                for &wi in &w {
                    let z: f64 = rng.sample(StandardNormal);
                    acc += wi * z;
                }
                *value = acc;
            }
        });
    Ok(SampleBatch { seed, values })
}

/// Full quadrature vectors drawn from a state, row-major `n x 2N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSamples {
    pub seed: u64,
    pub n_modes: usize,
    data: Vec<f64>,
}

impl QuadratureSamples {
    pub fn len(&self) -> usize {
        self.data.len() / (2 * self.n_modes)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let dim = 2 * self.n_modes;
        &self.data[i * dim..(i + 1) * dim]
    }

    /// Sample covariance entry between quadratures `a` and `b` (two-pass,
    /// compensated, unbiased).
    pub fn covariance_entry(&self, a: usize, b: usize) -> f64 {
        let n = self.len();
        let dim = 2 * self.n_modes;
        let mean_a = compensated_sum(self.data.iter().skip(a).step_by(dim).copied()) / n as f64;
        let mean_b = compensated_sum(self.data.iter().skip(b).step_by(dim).copied()) / n as f64;
        let cross =
            compensated_sum((0..n).map(|i| (self.row(i)[a] - mean_a) * (self.row(i)[b] - mean_b)));
        cross / (n - 1) as f64
    }
}

/// Draw `n` full quadrature vectors; same chunk/stream layout as
/// [`sample_form`].
pub fn sample_quadratures(
    state: &GaussianState,
    n: usize,
    seed: u64,
) -> Result<QuadratureSamples, MonteCarloError> {
    if n < 2 {
        return Err(MonteCarloError::TooFewSamples { needed: 2, got: n });
    }
    let l = cholesky_factor(state)?;
    let dim = 2 * state.n_modes();
    let mean = state.mean().clone();

    let mut data = vec![0.0f64; n * dim];
    data.par_chunks_mut(CHUNK * dim)
        .enumerate()
        .for_each(|(chunk_index, out)| {
            let mut rng = chunk_rng(seed, chunk_index as u64);
            let mut z = DVector::zeros(dim);
            for row in out.chunks_exact_mut(dim) {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                let x = &mean + &l * &z;
                row.copy_from_slice(x.as_slice());
            }
        });
    Ok(QuadratureSamples {
        seed,
        n_modes: state.n_modes(),
        data,
    })
}

/// Unbiased variance estimate with its Gaussian standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub mean: f64,
    pub variance: f64,
    /// `sqrt(2/(n-1))` times the variance: the standard error of the sample
    /// variance of a normal population.
    pub std_error: f64,
    pub n_samples: usize,
}

impl VarianceEstimate {
    /// Distance from a reference variance in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.variance - reference) / self.std_error
    }
}

/// Sample variance of a quadrature form, an independent statistical oracle
/// for [`GaussianState::variance_of`].
pub fn sample_variance(
    state: &GaussianState,
    form: &QuadratureForm,
    n: usize,
    seed: u64,
) -> Result<VarianceEstimate, MonteCarloError> {
    if n < 2 {
        return Err(MonteCarloError::TooFewSamples { needed: 2, got: n });
    }
    let batch = sample_form(state, form, n, seed)?;
    Ok(estimate_from_values(&batch.values))
}

fn estimate_from_values(values: &[f64]) -> VarianceEstimate {
    let n = values.len();
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let variance = ss / (n - 1) as f64;
    VarianceEstimate {
        mean,
        variance,
        std_error: variance * (2.0 / (n - 1) as f64).sqrt(),
        n_samples: n,
    }
}

/// Spectrum-analyzer settings: sampling, displayed span, resolution and
/// video bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub sample_rate_hz: f64,
    pub center_hz: f64,
    pub span_hz: f64,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
}

impl SpectrumConfig {
    /// The benchmark analyzer settings: 1.5-2.5 MHz span, 30 kHz resolution
    /// bandwidth, 0.1 kHz video bandwidth.
    pub fn benchmark() -> Self {
        Self {
            sample_rate_hz: 10.0e6,
            center_hz: 2.0e6,
            span_hz: 1.0e6,
            rbw_hz: 30.0e3,
            vbw_hz: 100.0,
        }
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        let positive = [
            ("sample_rate", self.sample_rate_hz),
            ("center", self.center_hz),
            ("span", self.span_hz),
            ("rbw", self.rbw_hz),
            ("vbw", self.vbw_hz),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(MonteCarloError::ParamOutOfDomain { name, value });
            }
        }
        if self.rbw_hz > self.span_hz {
            return Err(MonteCarloError::ParamOutOfDomain {
                name: "rbw",
                value: self.rbw_hz,
            });
        }
        if self.vbw_hz > self.rbw_hz {
            return Err(MonteCarloError::ParamOutOfDomain {
                name: "vbw",
                value: self.vbw_hz,
            });
        }
        Ok(())
    }

    /// Samples per analyzer window: `round(sample_rate / rbw)`.
    pub fn segment_len(&self) -> usize {
        (self.sample_rate_hz / self.rbw_hz).round().max(2.0) as usize
    }
}

/// A pulse-code-modulated tone: carrier frequency, modulation depth, bit
/// pattern cycled at `bit_rate_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulatedTone {
    pub freq_hz: f64,
    pub depth: f64,
    pub bits: Vec<bool>,
    pub bit_rate_hz: f64,
}

impl ModulatedTone {
    /// Unmodulated carrier at the benchmark signal frequency of 2 MHz.
    pub fn benchmark_carrier(depth: f64) -> Self {
        Self {
            freq_hz: 2.0e6,
            depth,
            bits: vec![true],
            bit_rate_hz: 100.0e3,
        }
    }
}

/// Synthesize a photocurrent: white Gaussian noise at an SNL-relative
/// variance plus the pulse-modulated tone. Deterministic per seed.
pub fn synthesize_photocurrent(
    noise_variance: f64,
    signal: &ModulatedTone,
    cfg: &SpectrumConfig,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>, MonteCarloError> {
    cfg.validate()?;
    if !noise_variance.is_finite() || noise_variance < 0.0 {
        return Err(MonteCarloError::ParamOutOfDomain {
            name: "noise_variance",
            value: noise_variance,
        });
    }
    if cfg.sample_rate_hz < 4.0 * signal.freq_hz {
        return Err(MonteCarloError::NyquistViolation {
            sample_rate: cfg.sample_rate_hz,
            freq: signal.freq_hz,
        });
    }
    let sigma = noise_variance.sqrt();
    let dt = 1.0 / cfg.sample_rate_hz;
    let omega = 2.0 * std::f64::consts::PI * signal.freq_hz;
    let n_bits = signal.bits.len().max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let series = (0..n_samples)
        .map(|k| {
            let t = k as f64 * dt;
            let bit_index = ((t * signal.bit_rate_hz) as usize) % n_bits;
            let level = if signal.bits[bit_index] { 1.0 } else { 0.0 };
            let tone = signal.depth * level * (omega * t).cos();
            let noise: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            tone + noise
        })
        .collect();
    Ok(series)
}

/// An averaged-periodogram power-spectral-density trace, SNL-relative: white
/// noise of variance 1 reads 0 dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdTrace {
    pub freq_hz: Vec<f64>,
    pub psd_db_rel_snl: Vec<f64>,
    pub n_segments: usize,
    pub rbw_hz: f64,
}

impl PsdTrace {
    /// Index of the strongest bin.
    pub fn peak_bin(&self) -> usize {
        self.psd_db_rel_snl
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite PSD"))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Median level of all bins farther than `guard_hz` from `exclude_hz`;
    /// the displayed noise floor away from a tone.
    pub fn floor_db(&self, exclude_hz: f64, guard_hz: f64) -> f64 {
        let mut floor: Vec<f64> = self
            .freq_hz
            .iter()
            .zip(&self.psd_db_rel_snl)
            .filter(|(f, _)| (**f - exclude_hz).abs() > guard_hz)
            .map(|(_, p)| *p)
            .collect();
        floor.sort_by(|a, b| a.partial_cmp(b).expect("finite PSD"));
        floor[floor.len() / 2]
    }

    /// Mean linear power across the displayed span.
    pub fn mean_linear(&self) -> f64 {
        let linear: Vec<f64> = self
            .psd_db_rel_snl
            .iter()
            .map(|db| 10.0f64.powf(db / 10.0))
            .collect();
        compensated_sum(linear.iter().copied()) / linear.len() as f64
    }
}

/// Estimate the PSD of a real series with segment length set by the
/// resolution bandwidth and video filtering emulated as a moving average
/// over periodogram frames. The returned trace is the average of the
/// smoothed frames, restricted to the displayed span.
pub fn spectrum_estimate(
    series: &[f64],
    cfg: &SpectrumConfig,
) -> Result<PsdTrace, MonteCarloError> {
    cfg.validate()?;
    let seg = cfg.segment_len();
    if series.len() < 10 * seg {
        return Err(MonteCarloError::SeriesTooShort {
            needed: 10 * seg,
            got: series.len(),
        });
    }
    let n_frames = series.len() / seg;
    let fft = rustfft::FftPlanner::new().plan_fft_forward(seg);
    let bin_hz = cfg.sample_rate_hz / seg as f64;

    // Periodogram per frame: |FFT|^2 / N, so white noise of variance V
    // averages to V in every bin.
    let mut frames: Vec<Vec<f64>> = Vec::with_capacity(n_frames);
    let mut buf = vec![rustfft::num_complex::Complex64::default(); seg];
    for frame in 0..n_frames {
        let window = &series[frame * seg..(frame + 1) * seg];
        for (slot, &x) in buf.iter_mut().zip(window) {
            *slot = rustfft::num_complex::Complex64::new(x, 0.0);
        }
        fft.process(&mut buf);
        frames.push(buf.iter().map(|z| z.norm_sqr() / seg as f64).collect());
    }

    // Video filter: moving average over ~rbw/vbw consecutive frames.
    let vbw_frames = ((cfg.rbw_hz / cfg.vbw_hz).round() as usize).clamp(1, n_frames);
    let n_smoothed = n_frames - vbw_frames + 1;
    let half_bins = seg / 2;
    let lo = cfg.center_hz - 0.5 * cfg.span_hz;
    let hi = cfg.center_hz + 0.5 * cfg.span_hz;

    let mut freq_hz = Vec::new();
    let mut psd_db = Vec::new();
    for bin in 0..=half_bins {
        let f = bin as f64 * bin_hz;
        if f < lo || f > hi {
            continue;
        }
        let series_bin: Vec<f64> = frames.iter().map(|fr| fr[bin]).collect();
        let smoothed: Vec<f64> = (0..n_smoothed)
            .map(|start| {
                compensated_sum(series_bin[start..start + vbw_frames].iter().copied())
                    / vbw_frames as f64
            })
            .collect();
        let level = compensated_sum(smoothed.iter().copied()) / smoothed.len() as f64;
        freq_hz.push(f);
        psd_db.push(10.0 * level.max(f64::MIN_POSITIVE).log10());
    }
    Ok(PsdTrace {
        freq_hz,
        psd_db_rel_snl: psd_db,
        n_segments: n_frames,
        rbw_hz: bin_hz,
    })
}

/// Samples integrated per bit by the matched filter.
pub const SAMPLES_PER_BIT: usize = 8;

/// Result of a pulse-code round trip: decoded bits, error count, bit error
/// rate and its 95% Wilson interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpcmReport {
    pub decoded: Vec<bool>,
    pub errors: usize,
    pub ber: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

/// Wilson score interval for `errors` out of `trials` at confidence `z`.
pub fn wilson_interval(errors: usize, trials: usize, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Encode bits as on/off pulses of amplitude `depth` over
/// [`SAMPLES_PER_BIT`] samples each, add white noise at the SNL-relative
/// variance, and decode with a matched filter thresholded at `depth/2`.
///
/// The per-bit decision statistic is Gaussian with standard deviation
/// `sqrt(noise/SAMPLES_PER_BIT)`, so the expected error rate is
/// `Q(depth * sqrt(SAMPLES_PER_BIT) / (2 sqrt(noise)))`.
pub fn bpcm_roundtrip(
    bits: &[bool],
    noise_variance: f64,
    depth: f64,
    seed: u64,
) -> Result<BpcmReport, MonteCarloError> {
    if bits.is_empty() {
        return Err(MonteCarloError::EmptyBits);
    }
    if !depth.is_finite() || depth <= 0.0 {
        return Err(MonteCarloError::ParamOutOfDomain {
            name: "depth",
            value: depth,
        });
    }
    if !noise_variance.is_finite() || noise_variance < 0.0 {
        return Err(MonteCarloError::ParamOutOfDomain {
            name: "noise_variance",
            value: noise_variance,
        });
    }
    let sigma = noise_variance.sqrt();
    let threshold = 0.5 * depth;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut decoded = Vec::with_capacity(bits.len());
    let mut errors = 0usize;
    for &bit in bits {
        let level = if bit { depth } else { 0.0 };
        let statistic = compensated_sum((0..SAMPLES_PER_BIT).map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            level + sigma * z
        })) / SAMPLES_PER_BIT as f64;
        let guess = statistic > threshold;
        if guess != bit {
            errors += 1;
        }
        decoded.push(guess);
    }
    let ber = errors as f64 / bits.len() as f64;
    let (wilson_low, wilson_high) = wilson_interval(errors, bits.len(), 1.96);
    Ok(BpcmReport {
        decoded,
        errors,
        ber,
        wilson_low,
        wilson_high,
    })
}
