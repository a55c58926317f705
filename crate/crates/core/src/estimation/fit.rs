//! Joint least-squares fit of the chain model to measured `S⁻` and `S⁺`
//! spectra.
//!
//! Residuals are taken in dB so the squeezed and anti-squeezed traces, which
//! span very different linear ranges, weigh comparably. All four parameters
//! are shared between the two traces. Internally the widths are scaled to MHz
//! so the gradient tolerance is meaningful for every parameter.

use nalgebra::DMatrix;

use super::lm::{self, Bounds, LeastSquaresProblem, LmOptions};
use crate::error::{Error, Result};
use crate::model::{spectrum_gradient, ChainModel};
use crate::report::KeyValueDoc;
use crate::trace::SpectrumTrace;

const HZ_PER_UNIT: f64 = 1e6;
const DB_PER_LN: f64 = 10.0 / std::f64::consts::LN_10;

/// Fitted quantities, in the order used by parameter vectors.
pub const PARAM_NAMES: [&str; 4] = ["eta", "gamma_hwhm_hz", "kappa_hwhm_hz", "pump_ratio"];

/// Box constraints on `(η, γ/2π, κ/2π, x)`. Widths in Hz. A zero-width
/// interval freezes that parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamBounds {
    pub eta: (f64, f64),
    pub gamma_hz: (f64, f64),
    pub kappa_hz: (f64, f64),
    pub pump_ratio: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            eta: (1e-3, 1.0),
            gamma_hz: (1e3, 1e11),
            kappa_hz: (1e3, 1e11),
            pump_ratio: (0.0, 0.999),
        }
    }
}

impl ParamBounds {
    /// Freezes every parameter except `η` and `x` at the given model values.
    pub fn freeze_linewidths(mut self, model: &ChainModel) -> Self {
        self.gamma_hz = (model.gamma_hwhm_hz(), model.gamma_hwhm_hz());
        self.kappa_hz = (model.kappa_hwhm_hz(), model.kappa_hwhm_hz());
        self
    }

    fn scaled(&self) -> Result<Bounds> {
        let ranges = [self.eta, self.gamma_hz, self.kappa_hz, self.pump_ratio];
        let domain_ok = self.eta.0 > 0.0
            && self.eta.1 <= 1.0
            && self.gamma_hz.0 > 0.0
            && self.kappa_hz.0 > 0.0
            && self.pump_ratio.0 >= 0.0
            && self.pump_ratio.1 < 1.0;
        if !domain_ok {
            return Err(Error::invalid(
                "fit bounds must stay inside the model domain \
                 (0 < eta <= 1, widths > 0, 0 <= x < 1)",
            ));
        }
        let scale = [1.0, HZ_PER_UNIT, HZ_PER_UNIT, 1.0];
        Bounds::new(
            ranges.iter().zip(scale).map(|(r, s)| r.0 / s).collect(),
            ranges.iter().zip(scale).map(|(r, s)| r.1 / s).collect(),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Frequency intervals `[lo, hi]` in Hz excluded from the fit, e.g.
    /// electronic pick-up spikes.
    pub mask_hz: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: ChainModel,
    /// Standard errors in the units of [`PARAM_NAMES`]; infinite when the
    /// parameter is not identifiable from the data, zero when frozen.
    pub std_errors: [f64; 4],
    pub residual_rms_db: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rank_deficient: bool,
    pub termination: lm::Termination,
    pub gradient_norm: f64,
    pub samples_used: usize,
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn to_doc(&self) -> KeyValueDoc {
        let mut doc = KeyValueDoc::new();
        let m = &self.model;
        let vals = [m.eta(), m.gamma_hwhm_hz(), m.kappa_hwhm_hz(), m.pump_ratio()];
        for (name, v) in PARAM_NAMES.iter().zip(vals) {
            doc.push(*name, v);
        }
        for (name, e) in PARAM_NAMES.iter().zip(self.std_errors) {
            doc.push(format!("{name}_stderr"), e);
        }
        doc.push("residual_rms_db", self.residual_rms_db)
            .push("samples_used", self.samples_used)
            .push("iterations", self.iterations)
            .push("converged", self.converged)
            .push("termination", format!("{:?}", self.termination))
            .push("gradient_norm", self.gradient_norm)
            .push("rank_deficient", self.rank_deficient);
        doc
    }
}

/// Reads a chain model from a `key = value` document using [`PARAM_NAMES`].
pub fn model_from_doc(doc: &KeyValueDoc) -> Result<ChainModel> {
    let get = |k: &str| {
        doc.get_f64(k)
            .ok_or_else(|| Error::invalid(format!("parameter `{k}` missing or not a number")))
    };
    ChainModel::new(
        get(PARAM_NAMES[0])?,
        get(PARAM_NAMES[1])?,
        get(PARAM_NAMES[2])?,
        get(PARAM_NAMES[3])?,
    )
}

#[derive(Clone, Copy)]
enum Branch {
    Minus,
    Plus,
}

/// One residual: model at `f` (in MHz) on `branch` minus measured dB.
struct Sample {
    f: f64,
    branch: Branch,
    data_db: f64,
}

pub(crate) struct SpectrumProblem {
    samples: Vec<Sample>,
}

impl SpectrumProblem {
    fn new(s_minus: &SpectrumTrace, s_plus: &SpectrumTrace, mask_hz: &[(f64, f64)]) -> Result<Self> {
        let masked = |f: f64| mask_hz.iter().any(|(lo, hi)| f >= *lo && f <= *hi);
        let mut samples = Vec::new();
        for (trace, branch) in [(s_minus, Branch::Minus), (s_plus, Branch::Plus)] {
            let db = trace.to_db_rel_shot()?;
            samples.extend(db.valid_samples().filter(|(f, _)| !masked(*f)).map(|(f, p)| Sample {
                f: f / HZ_PER_UNIT,
                branch,
                data_db: p,
            }));
        }
        Ok(SpectrumProblem { samples })
    }

    fn model_db(p: &[f64], s: &Sample) -> (f64, [f64; 4]) {
        let g = spectrum_gradient(p[0], p[1], p[2], p[3], s.f);
        let (v, d) = match s.branch {
            Branch::Minus => (g.minus, g.d_minus),
            Branch::Plus => (g.plus, g.d_plus),
        };
        let k = DB_PER_LN / v;
        (DB_PER_LN * v.ln(), d.map(|x| k * x))
    }
}

impl LeastSquaresProblem for SpectrumProblem {
    fn residual_count(&self) -> usize {
        self.samples.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.samples) {
            *o = Self::model_db(p, s).0 - s.data_db;
        }
    }

    fn jacobian(&self, p: &[f64], _bounds: &Bounds) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.samples.len(), 4);
        for (i, s) in self.samples.iter().enumerate() {
            let (_, d) = Self::model_db(p, s);
            for j in 0..4 {
                jac[(i, j)] = d[j];
            }
        }
        jac
    }
}

fn to_scaled(m: &ChainModel) -> [f64; 4] {
    [
        m.eta(),
        m.gamma_hwhm_hz() / HZ_PER_UNIT,
        m.kappa_hwhm_hz() / HZ_PER_UNIT,
        m.pump_ratio(),
    ]
}

/// Half the summed squared dB residuals of `model` against the traces, the
/// quantity [`fit_spectrum`] minimizes.
pub fn fit_cost(
    model: &ChainModel,
    s_minus: &SpectrumTrace,
    s_plus: &SpectrumTrace,
    mask_hz: &[(f64, f64)],
) -> Result<f64> {
    let problem = SpectrumProblem::new(s_minus, s_plus, mask_hz)?;
    let mut r = vec![0.0; problem.residual_count()];
    problem.residuals(&to_scaled(model), &mut r);
    Ok(0.5 * r.iter().map(|v| v * v).sum::<f64>())
}

/// Minimum number of usable samples across both traces.
pub const MIN_SAMPLES: usize = 8;

pub fn fit_spectrum(
    s_minus: &SpectrumTrace,
    s_plus: &SpectrumTrace,
    initial: &ChainModel,
    bounds: &ParamBounds,
    options: &FitOptions,
) -> Result<FitResult> {
    for t in [s_minus, s_plus] {
        if !t.unit().is_shot_normalized() {
            return Err(Error::Unit(
                "fit traces must be normalized to shot noise".into(),
            ));
        }
    }
    let problem = SpectrumProblem::new(s_minus, s_plus, &options.mask_hz)?;
    if problem.residual_count() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} usable samples, got {}",
            problem.residual_count()
        )));
    }
    let box_ = bounds.scaled()?;
    let start = to_scaled(initial);
    if !box_.contains(&start) {
        return Err(Error::invalid("initial model lies outside the fit bounds"));
    }

    let report = lm::minimize(&problem, &start, &box_, &options.lm)?;
    let unc = lm::standard_errors(&report, &box_);
    if unc.rank_deficient {
        log::warn!("spectrum fit Jacobian is rank deficient; some parameters are unidentifiable");
    }
    if !report.converged() {
        log::warn!(
            "spectrum fit did not converge ({:?}) after {} iterations",
            report.termination,
            report.iterations
        );
    }
    let p = &report.params;
    let model = ChainModel::new(p[0], p[1] * HZ_PER_UNIT, p[2] * HZ_PER_UNIT, p[3])?;
    let scale = [1.0, HZ_PER_UNIT, HZ_PER_UNIT, 1.0];
    let mut std_errors = [0.0; 4];
    for j in 0..4 {
        std_errors[j] = unc.std_errors[j] * scale[j];
    }
    let m = report.residuals.len() as f64;
    Ok(FitResult {
        model,
        std_errors,
        residual_rms_db: (2.0 * report.cost / m).sqrt(),
        iterations: report.iterations,
        converged: report.converged(),
        rank_deficient: unc.rank_deficient,
        termination: report.termination,
        gradient_norm: report.gradient_norm,
        samples_used: report.residuals.len(),
        cost_history: report.cost_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{spectrum_trace, Spacing};
    use crate::trace::{PowerUnit, TraceKind};

    fn synthetic(model: &ChainModel, n: usize) -> (SpectrumTrace, SpectrumTrace) {
        spectrum_trace(model, 1e6, 50e6, n, Spacing::Linear).unwrap()
    }

    fn perturbed(m: &ChainModel, k: f64) -> ChainModel {
        ChainModel::new(
            (m.eta() * (1.0 + 0.2 * k)).min(1.0),
            m.gamma_hwhm_hz() * (1.0 - 0.2 * k),
            m.kappa_hwhm_hz() * (1.0 + 0.2 * k),
            (m.pump_ratio() * (1.0 - 0.2 * k)).min(0.99),
        )
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn recovers_reference_parameters_without_noise() {
        let truth = ChainModel::reference();
        let (sm, sp) = synthetic(&truth, 100);
        for k in [-1.0, 1.0] {
            let fit = fit_spectrum(&sm, &sp, &perturbed(&truth, k), &ParamBounds::default(), &FitOptions::default()).unwrap();
            assert!(fit.converged, "{:?}", fit.termination);
            assert!(rel(fit.model.eta(), truth.eta()) < 1e-3);
            assert!(rel(fit.model.gamma_hwhm_hz(), truth.gamma_hwhm_hz()) < 1e-3);
            assert!(rel(fit.model.kappa_hwhm_hz(), truth.kappa_hwhm_hz()) < 1e-3);
            assert!(rel(fit.model.pump_ratio(), truth.pump_ratio()) < 1e-3);
            assert!(fit.cost_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn vacuum_data_drives_pump_to_zero() {
        let flat = SpectrumTrace::new(
            (1..=50).map(|i| i as f64 * 1e6).collect(),
            vec![0.0; 50],
            PowerUnit::DbRelShot,
            TraceKind::Signal,
        )
        .unwrap();
        let fit = fit_spectrum(&flat, &flat, &ChainModel::reference(), &ParamBounds::default(), &FitOptions::default()).unwrap();
        assert!(fit.model.pump_ratio() < 1e-6);
        assert!(fit.rank_deficient);
        assert!(fit.std_errors[0].is_infinite());
    }

    #[test]
    fn mask_excludes_spikes() {
        let truth = ChainModel::reference();
        let (sm, sp) = synthetic(&truth, 99);
        let mut power = sm.power().to_vec();
        let spike = sm.freqs_hz().iter().position(|f| (*f - 21e6).abs() < 0.3e6).unwrap();
        power[spike] = 0.9;
        let spiky = SpectrumTrace::new(sm.freqs_hz().to_vec(), power, PowerUnit::RelShot, TraceKind::Signal).unwrap();
        let opts = FitOptions {
            mask_hz: vec![(20.8e6, 21.2e6)],
            ..FitOptions::default()
        };
        let fit = fit_spectrum(&spiky, &sp, &perturbed(&truth, 1.0), &ParamBounds::default(), &opts).unwrap();
        assert!(rel(fit.model.eta(), truth.eta()) < 1e-3);
        // the mask removes the bin from both traces
        assert_eq!(fit.samples_used, 2 * 99 - 2);
    }

    #[test]
    fn input_errors() {
        let truth = ChainModel::reference();
        let (sm, sp) = synthetic(&truth, 3);
        assert!(fit_spectrum(&sm, &sp, &truth, &ParamBounds::default(), &FitOptions::default()).is_err());
        let (sm, sp) = synthetic(&truth, 20);
        let raw = SpectrumTrace::new(sm.freqs_hz().to_vec(), sm.power().to_vec(), PowerUnit::Linear, TraceKind::Signal).unwrap();
        assert!(matches!(
            fit_spectrum(&raw, &sp, &truth, &ParamBounds::default(), &FitOptions::default()),
            Err(Error::Unit(_))
        ));
        let tight = ParamBounds { eta: (0.9, 1.0), ..ParamBounds::default() };
        assert!(fit_spectrum(&sm, &sp, &truth, &tight, &FitOptions::default()).is_err());
    }

    #[test]
    fn report_round_trips_model() {
        let truth = ChainModel::reference();
        let (sm, sp) = synthetic(&truth, 30);
        let fit = fit_spectrum(&sm, &sp, &truth, &ParamBounds::default(), &FitOptions::default()).unwrap();
        let doc = fit.to_doc();
        assert_eq!(model_from_doc(&doc).unwrap(), fit.model);
        assert_eq!(doc.get("converged"), Some("true"));
    }
}
