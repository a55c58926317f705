//! Signal-to-noise gain of a mid-fringe Mach-Zehnder interferometer when
//! squeezed vacuum enters the unused port, and its erosion by loss.
//!
//!     cargo run --example mzi_enhancement

use squeezelab::simulation::{mzi_response, mzi_spectrum, AnalyzerNoise, MziConfig};
use squeezelab::{apply_loss, QuadraturePair};

fn main() -> squeezelab::Result<()> {
    let vacuum = MziConfig::new(QuadraturePair::vacuum());
    let squeezed = MziConfig::new(QuadraturePair::from_db(-3.3, 3.3)?);
    for (name, c) in [("vacuum", vacuum), ("-3.3 dB", squeezed)] {
        let r = mzi_response(&c)?;
        println!(
            "{name:<8} floor {:>6.2} dB  signal {:>6.2} dB above floor  power x{:.3}  amplitude x{:.3}",
            r.noise_floor.db(),
            r.signal_peak_db,
            r.snr_power_factor,
            r.snr_amplitude_factor
        );
    }

    println!("\nenhancement from a 10 dB pure source after loss:");
    let source = QuadraturePair::from_db(-10.0, 10.0)?;
    for eta in [1.0, 0.9, 0.73, 0.5, 0.25] {
        let r = mzi_response(&MziConfig::new(apply_loss(&source, eta)?))?;
        println!("  eta {eta:<5} power x{:.3}", r.snr_power_factor);
    }

    // analyzer view around the modulation line, 100 averages per bin
    let noise = Some(AnalyzerNoise { seed: 1, averages: 100 });
    let a = mzi_spectrum(&vacuum, 4.5e6, 5.5e6, 21, noise)?.to_db_rel_shot()?;
    let b = mzi_spectrum(&squeezed, 4.5e6, 5.5e6, 21, noise.map(|n| AnalyzerNoise { seed: 2, ..n }))?
        .to_db_rel_shot()?;
    println!("\n{:>8} {:>10} {:>10}", "f [MHz]", "vacuum", "squeezed");
    for i in 0..a.len() {
        println!("{:>8.2} {:>10.2} {:>10.2}", a.freqs_hz()[i] / 1e6, a.power()[i], b.power()[i]);
    }
    Ok(())
}
