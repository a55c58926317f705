//! Dark-noise subtraction and shot-noise normalization of analyzer traces.
//!
//! Both steps work in linear power. A sample where the dark noise reaches the
//! signal carries no usable information and is flagged invalid; flags
//! propagate through every later step.

use crate::error::{Error, Result};
use crate::trace::{PowerUnit, SpectrumTrace, TraceKind};

/// Relative tolerance when comparing frequency grids.
pub const GRID_TOLERANCE: f64 = 1e-9;

fn require_linear(t: &SpectrumTrace, what: &str) -> Result<()> {
    match t.unit() {
        PowerUnit::Linear => Ok(()),
        PowerUnit::Dbm => Err(Error::Unit(format!(
            "{what} trace is in dBm; convert to linear power first"
        ))),
        u => Err(Error::Unit(format!(
            "{what} trace must be absolute linear power, found {u:?}"
        ))),
    }
}

fn require_same_grid(a: &SpectrumTrace, b: &SpectrumTrace) -> Result<()> {
    if a.same_grid(b, GRID_TOLERANCE) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{} vs {} samples or differing frequencies",
            a.len(),
            b.len()
        )))
    }
}

/// Per-sample `signal − dark`. Keeps the kind of `signal`, so shot-noise
/// traces can be corrected the same way.
pub fn subtract_dark(signal: &SpectrumTrace, dark: &SpectrumTrace) -> Result<SpectrumTrace> {
    require_linear(signal, "signal")?;
    require_linear(dark, "dark")?;
    require_same_grid(signal, dark)?;
    let n = signal.len();
    let mut power = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for i in 0..n {
        let d = signal.power()[i] - dark.power()[i];
        power.push(d);
        valid.push(signal.is_valid(i) && dark.is_valid(i) && d > 0.0);
    }
    let out = SpectrumTrace::with_validity(
        signal.freqs_hz().to_vec(),
        power,
        valid,
        PowerUnit::Linear,
        signal.kind(),
    )?;
    if out.invalid_count() > 0 {
        log::warn!(
            "{} of {} samples are dominated by dark noise and were flagged invalid",
            out.invalid_count(),
            n
        );
    }
    Ok(out)
}

/// Per-sample `signal / shot`, a linear shot-noise ratio.
pub fn normalize_to_shot(signal: &SpectrumTrace, shot: &SpectrumTrace) -> Result<SpectrumTrace> {
    require_linear(signal, "signal")?;
    require_linear(shot, "shot-noise")?;
    require_same_grid(signal, shot)?;
    let n = signal.len();
    let mut power = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for i in 0..n {
        let s = shot.power()[i];
        if shot.is_valid(i) && !(s > 0.0) {
            return Err(Error::Domain(format!(
                "shot-noise power {s} at {} Hz cannot normalize",
                shot.freqs_hz()[i]
            )));
        }
        let ok = signal.is_valid(i) && shot.is_valid(i) && signal.power()[i] > 0.0;
        power.push(if ok { signal.power()[i] / s } else { f64::NAN });
        valid.push(ok);
    }
    SpectrumTrace::with_validity(
        signal.freqs_hz().to_vec(),
        power,
        valid,
        PowerUnit::RelShot,
        TraceKind::Signal,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(power: Vec<f64>, kind: TraceKind) -> SpectrumTrace {
        let freqs = (0..power.len()).map(|i| 1e6 + i as f64 * 1e5).collect();
        SpectrumTrace::new(freqs, power, PowerUnit::Linear, kind).unwrap()
    }

    #[test]
    fn dark_subtraction_cases() {
        let dark = trace(vec![1.0, 2.0, 3.0], TraceKind::Dark);
        let sig = trace(vec![2.0, 4.0, 6.0], TraceKind::Signal);
        assert_eq!(subtract_dark(&sig, &dark).unwrap().power(), dark.power());

        let zero = trace(vec![0.0; 3], TraceKind::Dark);
        assert_eq!(subtract_dark(&sig, &zero).unwrap().power(), sig.power());

        let hot = trace(vec![1.0, 4.0, 3.0], TraceKind::Dark);
        let out = subtract_dark(&sig, &hot).unwrap();
        assert_eq!(out.valid(), &[true, false, true]);
        assert_eq!(out.power()[1], 0.0);
    }

    #[test]
    fn dark_subtraction_errors() {
        let sig = trace(vec![2.0, 4.0], TraceKind::Signal);
        let short = trace(vec![1.0], TraceKind::Dark);
        assert!(matches!(subtract_dark(&sig, &short), Err(Error::GridMismatch(_))));
        let shifted = SpectrumTrace::new(vec![1e6, 1.2e6], vec![1.0, 1.0], PowerUnit::Linear, TraceKind::Dark).unwrap();
        assert!(matches!(subtract_dark(&sig, &shifted), Err(Error::GridMismatch(_))));
        let dbm = SpectrumTrace::new(sig.freqs_hz().to_vec(), vec![-80.0, -80.0], PowerUnit::Dbm, TraceKind::Dark).unwrap();
        assert!(matches!(subtract_dark(&sig, &dbm), Err(Error::Unit(_))));
        assert!(subtract_dark(&sig, &dbm.to_linear()).is_ok());
    }

    #[test]
    fn normalization_cases() {
        let shot = trace(vec![2.0, 3.0, 5.0], TraceKind::Shot);
        let same = normalize_to_shot(&shot.clone().with_kind(TraceKind::Signal), &shot).unwrap();
        assert!(same.power().iter().all(|p| (*p - 1.0).abs() < 1e-15));
        assert_eq!(same.unit(), PowerUnit::RelShot);

        let sq = trace(shot.power().iter().map(|p| 0.2786 * p).collect(), TraceKind::Signal);
        let db = normalize_to_shot(&sq, &shot).unwrap().to_db_rel_shot().unwrap();
        assert!(db.power().iter().all(|p| (*p + 5.55).abs() < 1e-3));

        let dark = trace(vec![0.1, 10.0, 0.1], TraceKind::Dark);
        let corrected = subtract_dark(&sq, &dark).unwrap();
        let out = normalize_to_shot(&corrected, &shot).unwrap();
        assert_eq!(out.valid(), &[true, false, true]);
        assert_eq!(out.invalid_count(), 1);
    }

    #[test]
    fn normalization_rejects_zero_shot() {
        let shot = trace(vec![1.0, 0.0], TraceKind::Shot);
        let sig = trace(vec![1.0, 1.0], TraceKind::Signal);
        assert!(matches!(normalize_to_shot(&sig, &shot), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn analyzer_gain_cancels(
            gain in 1e-3f64..1e3,
            rows in proptest::collection::vec((0.1f64..1.0, 1.0f64..5.0, 0.2f64..3.0), 2..20)
        ) {
            let dark = trace(rows.iter().map(|r| r.0).collect(), TraceKind::Dark);
            let shot = trace(rows.iter().map(|r| r.0 + r.1).collect(), TraceKind::Shot);
            let sig = trace(rows.iter().map(|r| r.0 + r.1 * r.2).collect(), TraceKind::Signal);
            let scale = |t: &SpectrumTrace| trace(t.power().iter().map(|p| p * gain).collect(), t.kind());
            let base = normalize_to_shot(&subtract_dark(&sig, &dark).unwrap(), &subtract_dark(&shot, &dark).unwrap()).unwrap();
            let scaled = normalize_to_shot(
                &subtract_dark(&scale(&sig), &scale(&dark)).unwrap(),
                &subtract_dark(&scale(&shot), &scale(&dark)).unwrap(),
            ).unwrap();
            for (a, b) in base.power().iter().zip(scaled.power()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            }
            for (a, r) in base.power().iter().zip(&rows) {
                prop_assert!((a - r.2).abs() <= 1e-12 * r.2);
            }
        }
    }
}
