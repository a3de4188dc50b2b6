//! The fooling adversary: given any deterministic sampling method with
//! budget m, plant a spike in a box none of its queries touch. The method
//! cannot distinguish the spiked target from the base target — its
//! transcripts are bit-identical — so its error is at least the spike's
//! norm, no matter how clever the method is.
//!
//! Run with `cargo run --release --example fooling_attack`.

use unilearn::exponent::Exponent;
use unilearn::fooling::{fooling_attack, AttackOptions};
use unilearn::recovery::{ConstantMethod, GridRecovery};

fn main() -> Result<(), unilearn::error::Error> {
    // Method 1: query nothing, predict zero. The attack fools it at full
    // spike height.
    let zero = ConstantMethod::zero(1, 4);
    let r = fooling_attack(
        &zero,
        1,
        1,
        1.0,
        &|_: &[f64]| 0.0,
        Exponent::Infinity,
        &AttackOptions::default(),
    )?;
    println!("zero-predictor, m = 4:");
    println!("  grid k = {}, boxes = {}, untouched = {}", r.k, r.candidate_cells, r.untouched_count);
    println!("  planted spike at {:?} (sign {:?})", r.fooling_function.center, r.chosen_nu);
    println!("  measured sup error {} >= floor {}", r.measured_error, r.theoretical_floor);

    // Method 2: grid recovery with a generous budget. Still fooled — the
    // attack grid is strictly finer than anything m samples can cover.
    let grid = GridRecovery::new(1, 16, 2.0)?;
    let r = fooling_attack(
        &grid,
        1,
        1,
        1.0,
        &|_: &[f64]| 0.0,
        Exponent::Infinity,
        &AttackOptions::default(),
    )?;
    println!("\ngrid recovery, m = 16:");
    println!("  used {} queries; k = {}, untouched boxes = {} of {}",
        r.queries_used, r.k, r.untouched_count, r.candidate_cells);
    println!("  measured sup error {} >= floor {}", r.measured_error, r.theoretical_floor);

    // The same attack measured in L1: the floor shrinks like M^{-1}
    // because the spike is thin, but it never vanishes.
    let r = fooling_attack(
        &grid,
        1,
        1,
        1.0,
        &|_: &[f64]| 0.0,
        Exponent::Finite(1.0),
        &AttackOptions {
            mc_samples: 65536,
            ..Default::default()
        },
    )?;
    println!("\nsame method, L1 damage: measured {} >= floor {}", r.measured_error, r.theoretical_floor);

    // A deliberately undersized grid (k = 1 means 4 boxes for 16 queries)
    // trips the fallback: k doubles until untouched boxes must exist.
    let r = fooling_attack(
        &grid,
        1,
        1,
        1.0,
        &|_: &[f64]| 0.0,
        Exponent::Infinity,
        &AttackOptions {
            k_override: Some(1),
            ..Default::default()
        },
    )?;
    println!("\nk override 1 with m = 16: attack escalated to k = {}", r.k);

    // Two-dimensional attack with a 2-active-coordinate spike.
    let zero2 = ConstantMethod::zero(2, 9);
    let r = fooling_attack(
        &zero2,
        2,
        2,
        0.5,
        &|_: &[f64]| 0.0,
        Exponent::Infinity,
        &AttackOptions::default(),
    )?;
    println!(
        "\nd = s = 2, m = 9, amplitude 0.5: k = {}, {} untouched boxes, measured {}",
        r.k, r.untouched_count, r.measured_error
    );
    Ok(())
}
