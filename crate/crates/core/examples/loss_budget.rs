//! Loss budgets: compose itemized efficiencies, infer total loss and the
//! squeezing generated inside the source from a measured pair, and ask how
//! much extra loss a target level tolerates.
//!
//!     cargo run --example loss_budget

use squeezelab::{
    apply_loss, apply_phase_jitter, invert_pair, required_extra_loss, LossBudget, PhaseJitter, QuadraturePair,
};

fn main() -> squeezelab::Result<()> {
    let budget = LossBudget::reference();
    print!("{}", budget.to_text());
    let total = budget.compose()?;
    println!("total efficiency {total:.4} ({:.1} % loss)\n", 100.0 * (1.0 - total));

    let measured = QuadraturePair::from_db(-5.55, 17.94)?;
    let inv = invert_pair(&measured)?;
    println!(
        "measured ({:.2} dB, {:.2} dB) -> eta {:.4}, loss {:.1} %, initial squeezing {:.2} dB",
        measured.squeezed().db(),
        measured.antisqueezed().db(),
        inv.eta_total,
        inv.loss_percent(),
        inv.initial_squeezing.db()
    );
    let back = inv.reconstruct();
    println!(
        "forward check: ({:.4} dB, {:.4} dB)\n",
        back.squeezed().db(),
        back.antisqueezed().db()
    );

    let pure = QuadraturePair::pure(inv.initial_squeezing.linear())?;
    for eta in [1.0, 0.9, 0.8, 0.73, 0.5] {
        let out = apply_loss(&pure, eta)?;
        println!(
            "eta {eta:<4}: {:>7.3} dB / {:>7.3} dB  (uncertainty product {:.3})",
            out.squeezed().db(),
            out.antisqueezed().db(),
            out.uncertainty_product()
        );
    }

    let extra = required_extra_loss(&measured, -3.3)?;
    println!(
        "\nextra efficiency to reach -3.3 dB: {:.4}, anti-squeezing becomes {:.2} dB",
        extra.efficiency,
        extra.implied_antisqueezed.db()
    );

    for mrad in [0.0, 5.0, 10.0, 20.0, 50.0] {
        let j = apply_phase_jitter(&measured, PhaseJitter::new(mrad * 1e-3)?);
        println!("phase jitter {mrad:>4} mrad -> squeezing {:.3} dB", j.squeezed().db());
    }
    Ok(())
}
