//! Turning raw analyzer traces into shot-noise-relative spectra: dark-noise
//! subtraction in linear power, then division by the shot-noise trace.
//!
//!     cargo run --example dark_noise_preprocessing

use squeezelab::estimation::{normalize_to_shot, subtract_dark};
use squeezelab::{frequency_grid, ChainModel, SidebandFrequency, Spacing, SpectrumTrace, PowerUnit, TraceKind};

fn dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

fn main() -> squeezelab::Result<()> {
    let model = ChainModel::reference();
    let freqs = frequency_grid(2e6, 20e6, 10, Spacing::Linear)?;
    // detector gain in mW per shot-noise unit, and a sloped electronic floor
    let gain = 2.0e-9;
    let dark_mw: Vec<f64> = freqs.iter().map(|f| 6.0e-10 * (1.0 + f / 4e7)).collect();

    let mut sig = Vec::new();
    let mut shot = Vec::new();
    for (f, d) in freqs.iter().zip(&dark_mw) {
        let s = model.spectrum_at(SidebandFrequency::new(*f)?).squeezed().linear();
        sig.push(dbm(gain * s + d));
        shot.push(dbm(gain + d));
    }
    let dark: Vec<f64> = dark_mw.iter().map(|d| dbm(*d)).collect();
    let sig = SpectrumTrace::new(freqs.clone(), sig, PowerUnit::Dbm, TraceKind::Signal)?;
    let shot = SpectrumTrace::new(freqs.clone(), shot, PowerUnit::Dbm, TraceKind::Shot)?;
    let dark = SpectrumTrace::new(freqs.clone(), dark, PowerUnit::Dbm, TraceKind::Dark)?;

    // dB arithmetic would be wrong here; convert first
    let (sig, shot, dark) = (sig.to_linear(), shot.to_linear(), dark.to_linear());
    let shot_clean = subtract_dark(&shot, &dark)?;
    let rel = normalize_to_shot(&subtract_dark(&sig, &dark)?, &shot_clean)?.to_db_rel_shot()?;
    let naive = normalize_to_shot(&sig, &shot)?.to_db_rel_shot()?;

    println!("{:>8} {:>12} {:>14} {:>10}", "f [MHz]", "corrected", "no dark corr.", "model");
    for (i, f) in freqs.iter().enumerate() {
        let truth = model.spectrum_at(SidebandFrequency::new(*f)?).squeezed().db();
        println!(
            "{:>8.1} {:>12.3} {:>14.3} {:>10.3}",
            f / 1e6,
            rel.power()[i],
            naive.power()[i],
            truth
        );
    }
    Ok(())
}
