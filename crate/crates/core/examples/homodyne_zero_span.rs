//! Monte-Carlo homodyne detection: fixed-phase variances and a zero-span
//! trace while the local-oscillator phase is ramped through half a turn.
//!
//!     cargo run --release --example homodyne_zero_span

use std::f64::consts::PI;

use squeezelab::simulation::{sample_quadratures, sample_variance, zero_span_trace, HomodyneRun, PhaseProgram};
use squeezelab::QuadraturePair;

fn main() -> squeezelab::Result<()> {
    let state = QuadraturePair::from_db(-5.55, 17.94)?;
    for (label, theta) in [("squeezed", 0.0), ("45 deg", PI / 4.0), ("anti-squeezed", PI / 2.0)] {
        let run = HomodyneRun::new(state, PhaseProgram::Fixed(theta), 1_000_000, 42)?;
        let v = sample_variance(&sample_quadratures(&run));
        println!(
            "{label:<14} variance {v:.4} ({:.3} dB), expected {:.4}",
            10.0 * v.log10(),
            state.variance_at_phase(theta).linear()
        );
    }

    let run = HomodyneRun::new(state, PhaseProgram::sweep(0.0, PI, 0.1), 2_000_000, 7)?;
    let trace = zero_span_trace(&run, 20_000)?;
    println!("\nzero span, phase ramp 0..180 deg ({} windows):", trace.len());
    for p in trace.iter().step_by(5) {
        let bar = ((p.level.db() + 8.0) * 2.0).max(0.0) as usize;
        println!("{:>6.1} deg {:>7.2} dB {}", p.phase_rad.to_degrees(), p.level.db(), "#".repeat(bar));
    }
    Ok(())
}
