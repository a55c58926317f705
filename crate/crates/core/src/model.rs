//! Squeezing and anti-squeezing spectra of an OPA followed by an
//! up-conversion (SFG) cavity.
//!
//! With sideband frequency `ω`, OPA half-width `γ`, SFG half-width `κ`,
//! pump parameter `ε = x·γ` and detection efficiency `η`:
//!
//! ```text
//! S±(ω) = 1 ± η · κ²/(κ² + ω²) · 4γ|ε| / ((γ ∓ |ε|)² + ω²)
//! ```
//!
//! All widths are stored as ordinary frequencies (the `/2π` values) in Hz.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::level::QuadraturePair;
use crate::trace::{PowerUnit, SpectrumTrace, TraceKind};

/// Parameters of the cascaded OPA/SFG model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainModel {
    eta: f64,
    gamma_hwhm_hz: f64,
    kappa_hwhm_hz: f64,
    pump_ratio: f64,
}

impl ChainModel {
    pub fn new(eta: f64, gamma_hwhm_hz: f64, kappa_hwhm_hz: f64, pump_ratio: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!(
                "eta must satisfy 0 < eta <= 1, got {eta}"
            )));
        }
        if !(gamma_hwhm_hz > 0.0 && gamma_hwhm_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma must be positive, got {gamma_hwhm_hz} Hz"
            )));
        }
        if !(kappa_hwhm_hz > 0.0 && kappa_hwhm_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "kappa must be positive, got {kappa_hwhm_hz} Hz"
            )));
        }
        if !(0.0..1.0).contains(&pump_ratio) {
            return Err(Error::invalid(format!(
                "pump ratio must satisfy 0 <= x < 1 (below threshold), got {pump_ratio}"
            )));
        }
        Ok(ChainModel {
            eta,
            gamma_hwhm_hz,
            kappa_hwhm_hz,
            pump_ratio,
        })
    }

    /// Fit values reported for the 532 nm up-converted spectrum:
    /// η = 0.73, γ/2π = 60 MHz, κ/2π = 40 MHz, ε = 0.77 γ.
    pub fn reference() -> Self {
        ChainModel {
            eta: 0.73,
            gamma_hwhm_hz: 60e6,
            kappa_hwhm_hz: 40e6,
            pump_ratio: 0.77,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma_hwhm_hz(&self) -> f64 {
        self.gamma_hwhm_hz
    }

    pub fn kappa_hwhm_hz(&self) -> f64 {
        self.kappa_hwhm_hz
    }

    pub fn pump_ratio(&self) -> f64 {
        self.pump_ratio
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(eta, self.gamma_hwhm_hz, self.kappa_hwhm_hz, self.pump_ratio)
    }

    pub fn with_pump_ratio(self, x: f64) -> Result<Self> {
        Self::new(self.eta, self.gamma_hwhm_hz, self.kappa_hwhm_hz, x)
    }

    /// `(S⁻, S⁺)` at sideband frequency `f`, in linear units.
    pub fn spectrum_at(&self, f: SidebandFrequency) -> QuadraturePair {
        let w = TAU * f.hz();
        let g = TAU * self.gamma_hwhm_hz;
        let k = TAU * self.kappa_hwhm_hz;
        let e = self.pump_ratio * g;

        let sfg = k * k / (k * k + w * w);
        let num = 4.0 * g * e;
        let minus = 1.0 - self.eta * sfg * num / ((g + e) * (g + e) + w * w);
        let plus = 1.0 + self.eta * sfg * num / ((g - e) * (g - e) + w * w);
        QuadraturePair::from_linear_unchecked(minus, plus)
    }
}

/// Sideband (Fourier) frequency `ω/2π` in Hz.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SidebandFrequency(f64);

impl SidebandFrequency {
    pub fn new(f_hz: f64) -> Result<Self> {
        if !(f_hz >= 0.0) || !f_hz.is_finite() {
            return Err(Error::invalid(format!(
                "sideband frequency must be finite and >= 0, got {f_hz}"
            )));
        }
        Ok(SidebandFrequency(f_hz))
    }

    pub fn from_mhz(f_mhz: f64) -> Result<Self> {
        Self::new(f_mhz * 1e6)
    }

    #[inline]
    pub fn hz(self) -> f64 {
        self.0
    }
}

pub fn spectrum_at(model: &ChainModel, f: SidebandFrequency) -> QuadraturePair {
    model.spectrum_at(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// Frequency grid with both endpoints included.
pub fn frequency_grid(f_min: f64, f_max: f64, n_points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(f_min >= 0.0 && f_min < f_max && f_max.is_finite()) {
        return Err(Error::invalid(format!(
            "frequency range must satisfy 0 <= f_min < f_max, got [{f_min}, {f_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 points, got {n_points}"
        )));
    }
    if spacing == Spacing::Log && f_min == 0.0 {
        return Err(Error::invalid("log spacing requires f_min > 0"));
    }
    let last = (n_points - 1) as f64;
    let mut grid: Vec<f64> = (0..n_points)
        .map(|i| {
            let t = i as f64 / last;
            match spacing {
                Spacing::Linear => f_min + (f_max - f_min) * t,
                Spacing::Log => f_min * (f_max / f_min).powf(t),
            }
        })
        .collect();
    grid[0] = f_min;
    grid[n_points - 1] = f_max;
    Ok(grid)
}

/// Samples `S⁻` and `S⁺` over a frequency range. Both traces are linear
/// shot-noise ratios.
pub fn spectrum_trace(
    model: &ChainModel,
    f_min: f64,
    f_max: f64,
    n_points: usize,
    spacing: Spacing,
) -> Result<(SpectrumTrace, SpectrumTrace)> {
    let freqs = frequency_grid(f_min, f_max, n_points, spacing)?;
    let (minus, plus): (Vec<f64>, Vec<f64>) = freqs
        .iter()
        .map(|&f| {
            let p = model.spectrum_at(SidebandFrequency(f));
            (p.squeezed().linear(), p.antisqueezed().linear())
        })
        .unzip();
    Ok((
        SpectrumTrace::new(freqs.clone(), minus, PowerUnit::RelShot, TraceKind::Signal)?,
        SpectrumTrace::new(freqs, plus, PowerUnit::RelShot, TraceKind::Signal)?,
    ))
}

/// Pump ratio `x = ε/γ = sqrt(P / P_th)` of a below-threshold OPA.
pub fn pump_ratio_from_powers(p_pump: f64, p_threshold: f64) -> Result<f64> {
    if !(p_threshold > 0.0) || !p_threshold.is_finite() {
        return Err(Error::invalid(format!(
            "threshold power must be positive, got {p_threshold}"
        )));
    }
    if !(p_pump >= 0.0) || !p_pump.is_finite() {
        return Err(Error::invalid(format!(
            "pump power must be non-negative, got {p_pump}"
        )));
    }
    if p_pump >= p_threshold {
        return Err(Error::AboveThreshold {
            pump: p_pump,
            threshold: p_threshold,
        });
    }
    Ok((p_pump / p_threshold).sqrt())
}

/// Model values and partial derivatives at one frequency, for the fitter.
///
/// Derivatives are with respect to `(η, γ, κ, x)` where `γ`, `κ` and `f`
/// share whatever frequency unit the caller uses; the model only depends on
/// their ratios.
pub(crate) struct SpectrumGradient {
    pub minus: f64,
    pub plus: f64,
    pub d_minus: [f64; 4],
    pub d_plus: [f64; 4],
}

pub(crate) fn spectrum_gradient(eta: f64, gamma: f64, kappa: f64, x: f64, f: f64) -> SpectrumGradient {
    let w2 = f * f;
    let k2 = kappa * kappa;
    let g2 = gamma * gamma;
    let sfg = k2 / (k2 + w2);
    let d_sfg_dk = 2.0 * kappa * w2 / ((k2 + w2) * (k2 + w2));

    let dm = g2 * (1.0 + x) * (1.0 + x) + w2;
    let dp = g2 * (1.0 - x) * (1.0 - x) + w2;
    let opa_m = 4.0 * x * g2 / dm;
    let opa_p = 4.0 * x * g2 / dp;
    let shared_x = g2 * (1.0 - x * x) + w2;
    let d_opa_m = [8.0 * x * gamma * w2 / (dm * dm), 4.0 * g2 * shared_x / (dm * dm)];
    let d_opa_p = [8.0 * x * gamma * w2 / (dp * dp), 4.0 * g2 * shared_x / (dp * dp)];

    SpectrumGradient {
        minus: 1.0 - eta * sfg * opa_m,
        plus: 1.0 + eta * sfg * opa_p,
        d_minus: [
            -sfg * opa_m,
            -eta * sfg * d_opa_m[0],
            -eta * d_sfg_dk * opa_m,
            -eta * sfg * d_opa_m[1],
        ],
        d_plus: [
            sfg * opa_p,
            eta * sfg * d_opa_p[0],
            eta * d_sfg_dk * opa_p,
            eta * sfg * d_opa_p[1],
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(model: &ChainModel, f_hz: f64) -> QuadraturePair {
        model.spectrum_at(SidebandFrequency::new(f_hz).unwrap())
    }

    // Frozen from a 30-digit evaluation of the closed form at the reference
    // parameters, f = 5 MHz.
    const S_MINUS_5MHZ: f64 = 0.294_930_283_987_066_7;
    const S_PLUS_5MHZ: f64 = 37.992_727_584_335_46;

    #[test]
    fn reference_point_matches_oracle() {
        let p = at(&ChainModel::reference(), 5e6);
        assert!((p.squeezed().linear() / S_MINUS_5MHZ - 1.0).abs() < 1e-12);
        assert!((p.antisqueezed().linear() / S_PLUS_5MHZ - 1.0).abs() < 1e-12);
        assert!((p.squeezed().db() + 5.30).abs() < 0.01);
        assert!((p.antisqueezed().db() - 15.80).abs() < 0.01);
    }

    #[test]
    fn zero_pump_is_vacuum() {
        let m = ChainModel::new(0.9, 10e6, 5e6, 0.0).unwrap();
        for f in [0.0, 1e6, 3e8] {
            let p = at(&m, f);
            assert_eq!(p.squeezed().linear(), 1.0);
            assert_eq!(p.antisqueezed().linear(), 1.0);
        }
    }

    #[test]
    fn transfer_vanishes_far_above_linewidths() {
        let m = ChainModel::new(1.0, 30e6, 50e6, 0.5).unwrap();
        let p = at(&m, 1e6 * 30e6);
        assert!((p.squeezed().linear() - 1.0).abs() < 1e-6);
        assert!((p.antisqueezed().linear() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn near_threshold_squeezing_vanishes() {
        let gamma = 10e6;
        let m = ChainModel::new(1.0, gamma, 1e9 * gamma, 1.0 - 1e-6).unwrap();
        assert!(at(&m, 0.0).squeezed().linear() < 1e-5);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ChainModel::new(0.0, 1.0, 1.0, 0.5).is_err());
        assert!(ChainModel::new(1.1, 1.0, 1.0, 0.5).is_err());
        assert!(ChainModel::new(0.5, 0.0, 1.0, 0.5).is_err());
        assert!(ChainModel::new(0.5, 1.0, -1.0, 0.5).is_err());
        assert!(ChainModel::new(0.5, 1.0, 1.0, 1.0).is_err());
        assert!(ChainModel::new(0.5, 1.0, 1.0, -0.1).is_err());
        assert!(SidebandFrequency::new(-1.0).is_err());
    }

    #[test]
    fn trace_samples_match_pointwise() {
        let m = ChainModel::reference();
        let (sm, sp) = spectrum_trace(&m, 1e6, 50e6, 500, Spacing::Linear).unwrap();
        assert_eq!(sm.len(), 500);
        assert_eq!(sm.freqs_hz()[0], 1e6);
        assert_eq!(sm.freqs_hz()[499], 50e6);
        // the 500-point grid misses 5 MHz; a 50-point grid hits it
        let (sm100, _) = spectrum_trace(&m, 1e6, 50e6, 50, Spacing::Linear).unwrap();
        let i = sm100.freqs_hz().iter().position(|f| (f - 5e6).abs() < 1.0).unwrap();
        let direct = at(&m, sm100.freqs_hz()[i]).squeezed().linear();
        assert!((sm100.power()[i] - direct).abs() <= 1e-12);
        for (i, &f) in sp.freqs_hz().iter().enumerate() {
            assert_eq!(sp.power()[i], at(&m, f).antisqueezed().linear());
        }
        // S⁻ rises monotonically toward 1 across the band.
        assert!(sm.power().windows(2).all(|w| w[1] > w[0]));
        assert!(sm.power().iter().all(|p| *p < 1.0));
    }

    #[test]
    fn log_grid_and_errors() {
        let g = frequency_grid(1e5, 1e8, 4, Spacing::Log).unwrap();
        assert!((g[1] - 1e6).abs() < 1e-3 && (g[2] - 1e7).abs() < 1e-2);
        assert!(frequency_grid(5.0, 1.0, 10, Spacing::Linear).is_err());
        assert!(frequency_grid(0.0, 1.0, 1, Spacing::Linear).is_err());
        assert!(frequency_grid(0.0, 1.0, 3, Spacing::Log).is_err());
    }

    #[test]
    fn pump_ratio_cases() {
        assert_eq!(pump_ratio_from_powers(0.0, 0.2).unwrap(), 0.0);
        assert!((pump_ratio_from_powers(0.05, 0.2).unwrap() - 0.5).abs() < 1e-15);
        assert!((pump_ratio_from_powers(0.5929, 1.0).unwrap() - 0.77).abs() < 1e-12);
        assert!(matches!(
            pump_ratio_from_powers(0.2, 0.2),
            Err(Error::AboveThreshold { .. })
        ));
        assert!(matches!(
            pump_ratio_from_powers(-0.1, 0.2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let p = [0.73, 60.0, 40.0, 0.77];
        for f in [0.5, 5.0, 23.0, 80.0] {
            let g = spectrum_gradient(p[0], p[1], p[2], p[3], f);
            for j in 0..4 {
                let h = 1e-6 * p[j].abs().max(1e-3);
                let mut up = p;
                let mut dn = p;
                up[j] += h;
                dn[j] -= h;
                let a = spectrum_gradient(up[0], up[1], up[2], up[3], f);
                let b = spectrum_gradient(dn[0], dn[1], dn[2], dn[3], f);
                let fd_m = (a.minus - b.minus) / (2.0 * h);
                let fd_p = (a.plus - b.plus) / (2.0 * h);
                assert!((fd_m - g.d_minus[j]).abs() < 1e-6 * (1.0 + fd_m.abs()), "d- {j} at {f}");
                assert!((fd_p - g.d_plus[j]).abs() < 1e-6 * (1.0 + fd_p.abs()), "d+ {j} at {f}");
            }
        }
    }

    fn model_strategy() -> impl Strategy<Value = ChainModel> {
        (0.01f64..=1.0, 1e5f64..1e9, 1e5f64..1e9, 0.0f64..0.999)
            .prop_map(|(e, g, k, x)| ChainModel::new(e, g, k, x).unwrap())
    }

    proptest! {
        #[test]
        fn spectra_bracket_shot_noise(m in model_strategy(), f in 0.0f64..1e9) {
            let p = at(&m, f);
            prop_assert!(p.squeezed().linear() > 0.0);
            prop_assert!(p.squeezed().linear() <= 1.0);
            prop_assert!(p.antisqueezed().linear() >= 1.0);
        }

        #[test]
        fn spectra_monotone_in_frequency(m in model_strategy(), f in 0.0f64..1e9, df in 1.0f64..1e8) {
            let lo = at(&m, f);
            let hi = at(&m, f + df);
            prop_assert!(hi.squeezed().linear() >= lo.squeezed().linear());
            prop_assert!(hi.antisqueezed().linear() <= lo.antisqueezed().linear());
        }

        #[test]
        fn lower_efficiency_moves_toward_shot_noise(m in model_strategy(), f in 0.0f64..1e9, s in 0.0f64..1.0) {
            let less = m.with_eta(m.eta() * (1.0 - 0.99 * s).max(1e-6)).unwrap();
            let a = at(&m, f);
            let b = at(&less, f);
            prop_assert!(b.squeezed().linear() >= a.squeezed().linear());
            prop_assert!(b.antisqueezed().linear() <= a.antisqueezed().linear());
        }
    }
}
