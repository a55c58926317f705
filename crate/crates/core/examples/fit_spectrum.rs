//! Fit the chain model to noisy synthetic spectra and report parameters
//! with standard errors. Writes the traces and a plot to `target/examples-out`.
//!
//!     cargo run --example fit_spectrum

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use squeezelab::estimation::fit::PARAM_NAMES;
use squeezelab::estimation::{fit_spectrum, FitOptions, ParamBounds};
use squeezelab::svg::{Plot, Series};
use squeezelab::{spectrum_trace, ChainModel, PowerUnit, Spacing, SpectrumTrace, TraceKind};

fn noisy(t: &SpectrumTrace, rng: &mut ChaCha8Rng, sigma_db: f64) -> SpectrumTrace {
    let n = Normal::new(0.0, sigma_db).unwrap();
    let p = t.power().iter().map(|v| 10.0 * v.log10() + n.sample(rng)).collect();
    SpectrumTrace::new(t.freqs_hz().to_vec(), p, PowerUnit::DbRelShot, TraceKind::Signal).unwrap()
}

fn main() -> squeezelab::Result<()> {
    let truth = ChainModel::reference();
    let (sm, sp) = spectrum_trace(&truth, 1e6, 50e6, 300, Spacing::Linear)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (sm, sp) = (noisy(&sm, &mut rng, 0.1), noisy(&sp, &mut rng, 0.1));

    let initial = ChainModel::new(0.9, 40e6, 70e6, 0.6)?;
    let fit = fit_spectrum(&sm, &sp, &initial, &ParamBounds::default(), &FitOptions::default())?;
    let m = fit.model;
    let values = [m.eta(), m.gamma_hwhm_hz(), m.kappa_hwhm_hz(), m.pump_ratio()];
    let truths = [truth.eta(), truth.gamma_hwhm_hz(), truth.kappa_hwhm_hz(), truth.pump_ratio()];
    for j in 0..4 {
        println!(
            "{:<14} {:>14.6e} ± {:<10.2e} (true {:e})",
            PARAM_NAMES[j], values[j], fit.std_errors[j], truths[j]
        );
    }
    println!(
        "rms residual {:.4} dB over {} samples, {} iterations, {:?}",
        fit.residual_rms_db, fit.samples_used, fit.iterations, fit.termination
    );

    // pump ratio and efficiency only, linewidths taken as known
    let frozen = ParamBounds::default().freeze_linewidths(&truth);
    let start = ChainModel::new(0.9, truth.gamma_hwhm_hz(), truth.kappa_hwhm_hz(), 0.6)?;
    let sub = fit_spectrum(&sm, &sp, &start, &frozen, &FitOptions::default())?;
    println!(
        "linewidths frozen: eta {:.4} ± {:.4}, x {:.4} ± {:.4}",
        sub.model.eta(),
        sub.std_errors[0],
        sub.model.pump_ratio(),
        sub.std_errors[3]
    );

    let out = std::path::Path::new("target/examples-out");
    std::fs::create_dir_all(out).map_err(|e| squeezelab::Error::Io { path: out.into(), source: e })?;
    let (mm, mp) = spectrum_trace(&m, 1e6, 50e6, 300, Spacing::Linear)?;
    let pts = |t: &SpectrumTrace| -> Vec<(f64, f64)> {
        let t = t.to_db_rel_shot().unwrap();
        t.valid_samples().map(|(f, p)| (f / 1e6, p)).collect()
    };
    let plot = Plot::new("Spectrum fit", "sideband frequency [MHz]", "dB relative to shot noise")
        .with_series(Series::new("S+ data", "#17becf", pts(&sp)))
        .with_series(Series::new("S- data", "#ff7f0e", pts(&sm)))
        .with_series(Series::new("S+ fit", "#1f4fd8", pts(&mp)))
        .with_series(Series::new("S- fit", "#d62728", pts(&mm)));
    let path = out.join("fit_spectrum.svg");
    std::fs::write(&path, plot.render()).map_err(|e| squeezelab::Error::Io { path: path.clone(), source: e })?;
    sm.write_csv_file(&out.join("s_minus_noisy.csv"))?;
    sp.write_csv_file(&out.join("s_plus_noisy.csv"))?;
    println!("wrote {}", path.display());
    Ok(())
}
