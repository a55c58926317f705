//! Noise spectra of the squeezer / up-converter chain and how they respond
//! to loss and pump power.
//!
//!     cargo run --example spectrum_model

use squeezelab::{frequency_grid, pump_ratio_from_powers, ChainModel, SidebandFrequency, Spacing};

fn main() -> squeezelab::Result<()> {
    let model = ChainModel::reference();
    println!(
        "eta = {}, gamma/2pi = {} MHz, kappa/2pi = {} MHz, x = {}",
        model.eta(),
        model.gamma_hwhm_hz() / 1e6,
        model.kappa_hwhm_hz() / 1e6,
        model.pump_ratio()
    );
    println!("{:>10} {:>10} {:>10}", "f [MHz]", "S- [dB]", "S+ [dB]");
    for f in frequency_grid(1e6, 200e6, 12, Spacing::Log)? {
        let pair = model.spectrum_at(SidebandFrequency::new(f)?);
        println!("{:>10.2} {:>10.3} {:>10.3}", f / 1e6, pair.squeezed().db(), pair.antisqueezed().db());
    }

    let at = SidebandFrequency::from_mhz(5.0)?;
    println!("\nsqueezing at 5 MHz versus detection efficiency:");
    for eta in [1.0, 0.9, 0.73, 0.5] {
        let pair = model.with_eta(eta)?.spectrum_at(at);
        println!("  eta {eta:<5} {:>7.3} dB", pair.squeezed().db());
    }

    println!("\nsqueezing at 5 MHz versus pump power (threshold 100 mW):");
    for p in [10.0, 30.0, 59.3, 80.0, 95.0] {
        let x = pump_ratio_from_powers(p, 100.0)?;
        let pair = model.with_pump_ratio(x)?.spectrum_at(at);
        println!(
            "  {p:>5} mW  x = {x:.3}  S- {:>7.3} dB  S+ {:>7.3} dB",
            pair.squeezed().db(),
            pair.antisqueezed().db()
        );
    }
    Ok(())
}
