//! Optical loss bookkeeping for Gaussian quadrature variances.
//!
//! Each loss is a beam splitter of efficiency `η` mixing in vacuum, so a
//! variance maps as `V' = η·V + (1 − η)`. A chain of uncorrelated losses has
//! total efficiency equal to the product of its elements.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::level::{NoiseLevel, QuadraturePair};

fn check_efficiency(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "efficiency must lie in (0, 1], got {eta}"
        )))
    }
}

/// Applies a loss channel of efficiency `eta` to both quadratures.
pub fn apply_loss(pair: &QuadraturePair, eta: f64) -> Result<QuadraturePair> {
    check_efficiency(eta)?;
    let mix = |v: f64| eta * v + (1.0 - eta);
    Ok(QuadraturePair::from_linear_unchecked(
        mix(pair.squeezed().linear()),
        mix(pair.antisqueezed().linear()),
    ))
}

/// One itemized efficiency in a detection chain.
#[derive(Clone, Debug, PartialEq)]
pub struct LossElement {
    label: String,
    efficiency: f64,
}

impl LossElement {
    pub fn new(label: impl Into<String>, efficiency: f64) -> Result<Self> {
        check_efficiency(efficiency)?;
        Ok(LossElement {
            label: label.into(),
            efficiency,
        })
    }

    /// Builds an element from a loss in percent, e.g. `2.5` for 2.5 % loss.
    pub fn from_loss_percent(label: impl Into<String>, loss_percent: f64) -> Result<Self> {
        if !(0.0..100.0).contains(&loss_percent) {
            return Err(Error::invalid(format!(
                "loss percent must lie in [0, 100), got {loss_percent}"
            )));
        }
        Self::new(label, 1.0 - loss_percent / 100.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn loss_percent(&self) -> f64 {
        100.0 * (1.0 - self.efficiency)
    }
}

/// Ordered list of loss elements.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossBudget {
    elements: Vec<LossElement>,
}

impl LossBudget {
    pub fn new(elements: Vec<LossElement>) -> Self {
        LossBudget { elements }
    }

    /// The five loss sources itemized for the 532 nm detection chain.
    pub fn reference() -> Self {
        let e = |l: &str, v: f64| LossElement::new(l, v).expect("valid efficiency");
        LossBudget::new(vec![
            e("up-conversion", 0.90),
            e("photodiode quantum efficiency", 0.90),
            e("mode matching", 0.975),
            e("homodyne visibility", 0.98),
            e("propagation", 0.95),
        ])
    }

    pub fn push(&mut self, element: LossElement) {
        self.elements.push(element);
    }

    pub fn elements(&self) -> &[LossElement] {
        &self.elements
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Total efficiency, the product of all elements.
    pub fn compose(&self) -> Result<f64> {
        if self.elements.is_empty() {
            return Err(Error::invalid("loss budget is empty"));
        }
        Ok(self.elements.iter().map(|e| e.efficiency).product())
    }

    /// Parses the `label = value` budget format.
    ///
    /// Values are efficiencies in (0, 1]; a trailing `%` marks a loss percent
    /// instead (`mode matching = 2.5%`). `#` starts a comment.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut budget = LossBudget::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (label, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(origin, format!("line {}: expected `label = efficiency`", n + 1))
            })?;
            let (label, value) = (label.trim(), value.trim());
            if label.is_empty() {
                return Err(Error::parse(origin, format!("line {}: empty label", n + 1)));
            }
            let bad = |e: Error| Error::parse(origin, format!("line {}: {e}", n + 1));
            let element = if let Some(pct) = value.strip_suffix('%') {
                let pct: f64 = pct.trim().parse().map_err(|_| {
                    Error::parse(origin, format!("line {}: bad percent `{value}`", n + 1))
                })?;
                LossElement::from_loss_percent(label, pct).map_err(bad)?
            } else {
                let eff: f64 = value.parse().map_err(|_| {
                    Error::parse(origin, format!("line {}: bad efficiency `{value}`", n + 1))
                })?;
                LossElement::new(label, eff).map_err(bad)?
            };
            budget.push(element);
        }
        Ok(budget)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.elements
            .iter()
            .map(|e| format!("{} = {}\n", e.label, e.efficiency))
            .collect()
    }
}

pub fn compose(budget: &LossBudget) -> Result<f64> {
    budget.compose()
}

/// Total loss and initial pure-state squeezing behind a measured pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetInversion {
    pub eta_total: f64,
    pub initial_squeezing: NoiseLevel,
}

impl BudgetInversion {
    pub fn loss_percent(&self) -> f64 {
        100.0 * (1.0 - self.eta_total)
    }

    /// The pure state `(v, 1/v)` passed through the recovered loss.
    pub fn reconstruct(&self) -> QuadraturePair {
        let v = self.initial_squeezing.linear();
        let eta = self.eta_total;
        QuadraturePair::from_linear_unchecked(eta * v + 1.0 - eta, eta / v + 1.0 - eta)
    }
}

/// Solves `S⁻ = 1 − η + η·v`, `S⁺ = 1 − η + η/v` for a pure input state.
pub fn invert_pair(measured: &QuadraturePair) -> Result<BudgetInversion> {
    let sm = measured.squeezed().linear();
    let sp = measured.antisqueezed().linear();
    if !(sm < 1.0 && sp > 1.0) {
        return Err(Error::NoSqueezing {
            squeezed: sm,
            antisqueezed: sp,
        });
    }
    let v = (1.0 - sm) / (sp - 1.0);
    if !(v < 1.0) {
        return Err(Error::InconsistentPair(format!(
            "solved pure-state variance {v} is not below shot noise"
        )));
    }
    let eta = (1.0 - sm) / (1.0 - v);
    if !(eta > 0.0 && eta <= 1.0 + 1e-12) {
        return Err(Error::InconsistentPair(format!(
            "solved efficiency {eta} lies outside (0, 1]; the pair carries less \
             anti-squeezing than any lossy pure state"
        )));
    }
    Ok(BudgetInversion {
        eta_total: eta.min(1.0),
        initial_squeezing: NoiseLevel::from_linear(v)?,
    })
}

/// Result of [`required_extra_loss`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtraLoss {
    pub efficiency: f64,
    pub implied_antisqueezed: NoiseLevel,
    /// Reaching shot noise takes total loss; `efficiency` is then 0.
    pub degenerate: bool,
}

/// Extra efficiency that degrades `from` to a target squeezed level.
pub fn required_extra_loss(from: &QuadraturePair, to_squeezed_db: f64) -> Result<ExtraLoss> {
    let target = crate::level::db_to_linear(to_squeezed_db)?;
    let sm = from.squeezed().linear();
    if target < sm {
        return Err(Error::Infeasible(format!(
            "target {to_squeezed_db} dB is more squeezed than the source {:.4} dB",
            from.squeezed().db()
        )));
    }
    if target > 1.0 {
        return Err(Error::Infeasible(format!(
            "target {to_squeezed_db} dB lies above shot noise; loss cannot add noise"
        )));
    }
    if sm >= 1.0 {
        // vacuum source: any efficiency keeps it there
        return Ok(ExtraLoss {
            efficiency: 1.0,
            implied_antisqueezed: from.antisqueezed(),
            degenerate: false,
        });
    }
    let eta = ((1.0 - target) / (1.0 - sm)).clamp(0.0, 1.0);
    let anti = eta * from.antisqueezed().linear() + 1.0 - eta;
    Ok(ExtraLoss {
        efficiency: eta,
        implied_antisqueezed: NoiseLevel::from_linear(anti)?,
        degenerate: eta == 0.0,
    })
}

/// RMS of a zero-mean Gaussian phase jitter between signal and local
/// oscillator, in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseJitter(f64);

impl PhaseJitter {
    /// Above this RMS the averaged model no longer describes a small jitter.
    pub const SMALL_ANGLE_LIMIT: f64 = 0.3;

    pub fn new(theta_rms: f64) -> Result<Self> {
        if !(theta_rms >= 0.0) || !theta_rms.is_finite() {
            return Err(Error::invalid(format!(
                "phase jitter RMS must be >= 0, got {theta_rms}"
            )));
        }
        Ok(PhaseJitter(theta_rms))
    }

    pub fn rms(self) -> f64 {
        self.0
    }
}

/// Averages the quadrature variances over a Gaussian phase distribution.
///
/// `⟨sin²θ⟩ = (1 − e^(−2σ²))/2`, so the squeezed variance picks up that
/// fraction of the anti-squeezed one and vice versa.
pub fn apply_phase_jitter(pair: &QuadraturePair, jitter: PhaseJitter) -> QuadraturePair {
    let sigma = jitter.rms();
    if sigma > PhaseJitter::SMALL_ANGLE_LIMIT {
        log::warn!(
            "phase jitter {sigma} rad exceeds {} rad; small-jitter interpretation degrades",
            PhaseJitter::SMALL_ANGLE_LIMIT
        );
    }
    let mix = (1.0 - (-2.0 * sigma * sigma).exp()) / 2.0;
    let sm = pair.squeezed().linear();
    let sp = pair.antisqueezed().linear();
    let d = (sp - sm) * mix;
    QuadraturePair::from_linear_unchecked(sm + d, sp - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn measured() -> QuadraturePair {
        QuadraturePair::from_db(-5.55, 17.94).unwrap()
    }

    #[test]
    fn pure_19_3_db_through_27_percent_loss() {
        let v = 10f64.powf(-1.93);
        let out = apply_loss(&QuadraturePair::pure(v).unwrap(), 0.730).unwrap();
        assert!((out.squeezed().db() + 5.55).abs() < 0.02);
        assert!((out.antisqueezed().db() - 17.94).abs() < 0.02);
    }

    #[test]
    fn loss_limits() {
        let p = measured();
        assert_eq!(apply_loss(&p, 1.0).unwrap(), p);
        let gone = apply_loss(&p, 1e-12).unwrap();
        assert!((gone.squeezed().linear() - 1.0).abs() < 1e-9);
        assert!((gone.antisqueezed().linear() - 1.0).abs() < 1e-9);
        assert!(apply_loss(&p, 0.0).is_err());
        assert!(apply_loss(&p, 1.01).is_err());
    }

    #[test]
    fn compose_reference_budget() {
        let eta = LossBudget::reference().compose().unwrap();
        assert!((eta - 0.73525725).abs() < 1e-12);
        assert!((100.0 * (1.0 - eta) - 27.0).abs() < 1.0);
        let one = LossBudget::new(vec![LossElement::new("a", 1.0).unwrap()]);
        assert_eq!(one.compose().unwrap(), 1.0);
        let half = LossBudget::new(vec![
            LossElement::new("a", 0.5).unwrap(),
            LossElement::new("b", 0.5).unwrap(),
        ]);
        assert_eq!(half.compose().unwrap(), 0.25);
        assert!(LossBudget::default().compose().is_err());
    }

    #[test]
    fn budget_file_format() {
        let text = "# 532 nm chain\nconversion = 0.90\nphotodiodes = 10%\n\
                    mode matching = 2.5 %  # loss\n\nvisibility=0.98\npropagation = 5%\n";
        let b = LossBudget::parse(text, Path::new("b.txt")).unwrap();
        assert_eq!(b.elements().len(), 5);
        assert_eq!(b.elements()[2].label(), "mode matching");
        assert!((b.compose().unwrap() - 0.73525725).abs() < 1e-12);
        assert!(LossBudget::parse("x 0.5\n", Path::new("b")).is_err());
        assert!(LossBudget::parse("x = 1.5\n", Path::new("b")).is_err());
        assert!(LossBudget::parse("x = abc\n", Path::new("b")).is_err());
        assert!(LossBudget::parse("= 0.5\n", Path::new("b")).is_err());
        let back = LossBudget::parse(&b.to_text(), Path::new("b")).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn inversion_of_measured_pair() {
        let inv = invert_pair(&measured()).unwrap();
        // 30-digit oracle: η = 0.729988315612, v = −19.28795618 dB
        assert!((inv.eta_total - 0.729988315612222).abs() < 1e-9);
        assert!((inv.initial_squeezing.db() + 19.2879561832820).abs() < 1e-9);
        assert!((inv.loss_percent() - 27.0).abs() < 0.5);
        let back = inv.reconstruct();
        assert_relative_eq!(back.squeezed().linear(), measured().squeezed().linear(), max_relative = 1e-9);
        assert_relative_eq!(back.antisqueezed().linear(), measured().antisqueezed().linear(), max_relative = 1e-9);
    }

    #[test]
    fn inversion_of_pure_state_is_lossless() {
        let inv = invert_pair(&QuadraturePair::from_db(-3.0, 3.0).unwrap()).unwrap();
        assert!((inv.eta_total - 1.0).abs() < 1e-12);
        assert_relative_eq!(inv.initial_squeezing.linear(), 10f64.powf(-0.3), max_relative = 1e-12);
    }

    #[test]
    fn inversion_errors() {
        assert!(matches!(
            invert_pair(&QuadraturePair::vacuum()),
            Err(Error::NoSqueezing { .. })
        ));
        // any impure pair with v < 1 is explained by loss on a pure state
        let impure = QuadraturePair::from_linear(0.2, 5.5).unwrap();
        assert!(invert_pair(&impure).unwrap().eta_total < 1.0);
        // inside the uncertainty slack the solved efficiency exceeds 1
        let over = QuadraturePair::from_linear(0.5, 1.9999999995).unwrap();
        assert!(matches!(invert_pair(&over), Err(Error::InconsistentPair(_))));
    }

    #[test]
    fn extra_loss_from_532_to_mzi() {
        let x = required_extra_loss(&measured(), -3.3).unwrap();
        // oracle: η₂ = 0.737834487, anti-squeezing 16.6443 dB
        assert!((x.efficiency - 0.737834487042114).abs() < 1e-9);
        assert!((x.efficiency - 0.738).abs() < 0.005);
        assert!((x.implied_antisqueezed.db() - 16.644316084).abs() < 1e-6);
        assert!((x.implied_antisqueezed.db() - 16.66).abs() < 0.05);
        assert!(!x.degenerate);

        let same = required_extra_loss(&measured(), measured().squeezed().db()).unwrap();
        assert!((same.efficiency - 1.0).abs() < 1e-12);

        let full = required_extra_loss(&measured(), 0.0).unwrap();
        assert_eq!(full.efficiency, 0.0);
        assert!(full.degenerate);

        assert!(matches!(
            required_extra_loss(&measured(), -6.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn phase_jitter_cases() {
        let p = QuadraturePair::from_linear(0.2786, 62.23).unwrap();
        assert_eq!(apply_phase_jitter(&p, PhaseJitter::new(0.0).unwrap()), p);
        let j = apply_phase_jitter(&p, PhaseJitter::new(0.01).unwrap());
        // oracle: 0.2786 + 61.9514·(1 − e^(−0.0002))/2
        let expected = 0.2786 + (62.23 - 0.2786) * (1.0 - (-0.0002f64).exp()) / 2.0;
        assert!((j.squeezed().linear() - expected).abs() < 1e-12);
        assert!((j.squeezed().linear() - 0.2848).abs() < 1e-3);
        assert!((j.squeezed().db() - p.squeezed().db()) < 0.1);
        let big = apply_phase_jitter(&p, PhaseJitter::new(10.0).unwrap());
        let mean = (0.2786 + 62.23) / 2.0;
        assert_relative_eq!(big.squeezed().linear(), mean, max_relative = 1e-12);
        assert_relative_eq!(big.antisqueezed().linear(), mean, max_relative = 1e-12);
        assert!(PhaseJitter::new(-0.1).is_err());
    }

    fn pure_pair() -> impl Strategy<Value = QuadraturePair> {
        (1e-3f64..1.0).prop_map(|v| QuadraturePair::pure(v).unwrap())
    }

    proptest! {
        #[test]
        fn loss_composes_multiplicatively(p in pure_pair(), a in 1e-6f64..=1.0, b in 1e-6f64..=1.0) {
            let two = apply_loss(&apply_loss(&p, a).unwrap(), b).unwrap();
            let one = apply_loss(&p, a * b).unwrap();
            prop_assert!((two.squeezed().linear() - one.squeezed().linear()).abs()
                <= 1e-12 * one.squeezed().linear());
            prop_assert!((two.antisqueezed().linear() - one.antisqueezed().linear()).abs()
                <= 1e-12 * one.antisqueezed().linear());
        }

        #[test]
        fn inversion_recovers_loss_and_purity(v in 1e-2f64..0.99, eta in 1e-2f64..=1.0) {
            let measured = apply_loss(&QuadraturePair::pure(v).unwrap(), eta).unwrap();
            let inv = invert_pair(&measured).unwrap();
            prop_assert!((inv.eta_total / eta - 1.0).abs() <= 1e-9);
            prop_assert!((inv.initial_squeezing.linear() / v - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn uncertainty_product_survives_loss(p in pure_pair(), eta in 1e-6f64..=1.0) {
            let out = apply_loss(&p, eta).unwrap();
            prop_assert!(out.uncertainty_product() >= 1.0 - 1e-12);
        }

        #[test]
        fn more_loss_means_closer_to_shot_noise(p in pure_pair(), eta in 1e-6f64..=1.0, s in 0.0f64..1.0) {
            let a = apply_loss(&p, eta).unwrap();
            let b = apply_loss(&p, eta * (1.0 - s).max(1e-6)).unwrap();
            prop_assert!(b.squeezed().linear() >= a.squeezed().linear());
            prop_assert!(b.antisqueezed().linear() <= a.antisqueezed().linear());
        }

        #[test]
        fn jitter_degrades_squeezing(p in pure_pair(), sigma in 0.0f64..2.0) {
            let out = apply_phase_jitter(&p, PhaseJitter::new(sigma).unwrap());
            prop_assert!(out.squeezed().linear() >= p.squeezed().linear());
            prop_assert!(out.antisqueezed().linear() <= p.antisqueezed().linear());
        }
    }
}
