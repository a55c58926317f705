//! Monte-Carlo homodyne detection of a single-sideband Gaussian state.
//!
//! Samples are drawn directly from the quadrature variance selected by the
//! local-oscillator phase. Generation is split into fixed-size blocks; block
//! `k` draws from ChaCha8 stream `k` keyed by the run seed, so the output is
//! bitwise identical however the blocks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::level::{NoiseLevel, QuadraturePair};

/// Samples per independently seeded block.
pub const BLOCK_LEN: usize = 1 << 16;

/// Local-oscillator phase versus sample index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseProgram {
    Fixed(f64),
    /// `θ(t) = start + rate·t`, with the samples spread evenly over
    /// `[0, duration)`.
    Ramp {
        start_rad: f64,
        rate_rad_per_s: f64,
        duration_s: f64,
    },
}

impl PhaseProgram {
    /// Ramp covering `[from, to)` over the run.
    pub fn sweep(from: f64, to: f64, duration_s: f64) -> Self {
        PhaseProgram::Ramp {
            start_rad: from,
            rate_rad_per_s: (to - from) / duration_s,
            duration_s,
        }
    }

    pub fn phase_at(&self, i: usize, n: usize) -> f64 {
        match *self {
            PhaseProgram::Fixed(theta) => theta,
            PhaseProgram::Ramp {
                start_rad,
                rate_rad_per_s,
                duration_s,
            } => start_rad + rate_rad_per_s * duration_s * (i as f64 / n as f64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomodyneRun {
    pub pair: QuadraturePair,
    pub phase: PhaseProgram,
    pub n_samples: usize,
    pub seed: u64,
}

impl HomodyneRun {
    pub fn new(pair: QuadraturePair, phase: PhaseProgram, n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::invalid("homodyne run needs at least one sample"));
        }
        if let PhaseProgram::Ramp {
            duration_s,
            rate_rad_per_s,
            start_rad,
        } = phase
        {
            if !(duration_s > 0.0) || !duration_s.is_finite() {
                return Err(Error::invalid(format!(
                    "ramp duration must be positive, got {duration_s}"
                )));
            }
            if !rate_rad_per_s.is_finite() || !start_rad.is_finite() {
                return Err(Error::invalid("ramp phase parameters must be finite"));
            }
        }
        Ok(HomodyneRun {
            pair,
            phase,
            n_samples,
            seed,
        })
    }
}

/// Zero-mean Gaussian quadrature samples with variance `V(θ_i)`.
pub fn sample_quadratures(run: &HomodyneRun) -> Vec<f64> {
    let n = run.n_samples;
    let mut out = vec![0.0; n];
    out.par_chunks_mut(BLOCK_LEN)
        .enumerate()
        .for_each(|(block, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            rng.set_stream(block as u64);
            let first = block * BLOCK_LEN;
            for (k, x) in chunk.iter_mut().enumerate() {
                let theta = run.phase.phase_at(first + k, n);
                let sd = run.pair.variance_at_phase(theta).linear().sqrt();
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = sd * z;
            }
        });
    out
}

/// Unbiased sample variance (mean removed).
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// One zero-span point: the variance of a block of consecutive samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroSpanPoint {
    pub first_sample: usize,
    /// Mean local-oscillator phase over the window.
    pub phase_rad: f64,
    pub level: NoiseLevel,
}

/// Smallest window accepted by [`zero_span_trace`].
pub const MIN_WINDOW: usize = 100;

/// Variance estimates over non-overlapping windows, relative to shot noise.
///
/// The vacuum reference has unit variance by construction, so no separate
/// reference run is drawn. A trailing partial window is dropped.
pub fn zero_span_trace(run: &HomodyneRun, window: usize) -> Result<Vec<ZeroSpanPoint>> {
    if window < MIN_WINDOW {
        return Err(Error::invalid(format!(
            "window must hold at least {MIN_WINDOW} samples, got {window}"
        )));
    }
    if window > run.n_samples {
        return Err(Error::invalid(format!(
            "window {window} exceeds the {} samples of the run",
            run.n_samples
        )));
    }
    let samples = sample_quadratures(run);
    let n = run.n_samples;
    samples
        .par_chunks_exact(window)
        .enumerate()
        .map(|(w, chunk)| {
            let first = w * window;
            let phase = 0.5 * (run.phase.phase_at(first, n) + run.phase.phase_at(first + window - 1, n));
            Ok(ZeroSpanPoint {
                first_sample: first,
                phase_rad: phase,
                level: NoiseLevel::from_linear(sample_variance(chunk))?,
            })
        })
        .collect()
}
