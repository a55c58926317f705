//! Cavity linewidth from a swept Airy transmission scan with phase-modulation
//! sidebands acting as frequency markers.
//!
//!     cargo run --example linewidth

use squeezelab::estimation::{extract_linewidth, SyntheticAiryScan};

fn main() -> squeezelab::Result<()> {
    let cases = [
        ("clean", SyntheticAiryScan::default()),
        (
            "1 % noise",
            SyntheticAiryScan {
                noise_rel: 0.01,
                seed: 3,
                ..SyntheticAiryScan::default()
            },
        ),
        (
            "nonlinear sweep",
            SyntheticAiryScan {
                nonlinearity: 0.15,
                ..SyntheticAiryScan::default()
            },
        ),
        (
            "narrow cavity",
            SyntheticAiryScan {
                kappa_hwhm_hz: 15e6,
                f_mod_hz: 80e6,
                ..SyntheticAiryScan::default()
            },
        ),
    ];
    for (name, cfg) in cases {
        let scan = cfg.generate()?;
        let r = extract_linewidth(&scan)?;
        println!(
            "{name:<16} true {:>6.2} MHz  found {:>7.3} MHz  markers at {:.4} / {:.4} / {:.4} ms{}",
            cfg.kappa_hwhm_hz / 1e6,
            r.hwhm_hz / 1e6,
            r.marker_times_s[0] * 1e3,
            r.marker_times_s[1] * 1e3,
            r.marker_times_s[2] * 1e3,
            if r.nonlinear_scan { "  (nonlinear scan)" } else { "" }
        );
    }

    let unresolved = SyntheticAiryScan {
        f_mod_hz: 10e6,
        ..SyntheticAiryScan::default()
    }
    .generate()?;
    if let Err(e) = extract_linewidth(&unresolved) {
        println!("10 MHz markers: {e}");
    }
    Ok(())
}
