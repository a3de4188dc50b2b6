//! The Lp-norm sandwich for hat functions: closed-form lower and upper
//! bounds pin the numerically integrated norm from both sides, for every
//! steepness, activity count, and exponent.
//!
//! Run with `cargo run --release --example norm_sandwich`.

use unilearn::exponent::Exponent;
use unilearn::hat::{hat_lp_bounds, hat_lp_norm_numeric, HatSpec, Sign};

fn main() -> Result<(), unilearn::error::Error> {
    println!(
        "{:>3} {:>3} {:>6} {:>5}  {:>14} {:>14} {:>14}",
        "d", "s", "M", "p", "lower", "numeric", "upper"
    );
    for (d, s, m) in [(1usize, 1usize, 2.0f64), (1, 1, 16.0), (2, 1, 8.0), (2, 2, 4.0), (3, 2, 8.0)] {
        for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
            let spec = HatSpec::new(d, s, m, vec![0.5; d], Sign::Pos, 1.0)?;
            let (lo, hi) = hat_lp_bounds(s, m, p)?;
            // Resolution is per axis of the support box; the quadrature
            // clips to the box so steep spikes stay cheap.
            let numeric = hat_lp_norm_numeric(&spec, p, 1024)?;
            assert!(lo <= numeric && numeric <= hi, "sandwich violated");
            println!("{d:>3} {s:>3} {m:>6} {p:>5}  {lo:>14.8} {numeric:>14.8} {hi:>14.8}");
        }
    }

    // The norms shrink like M^{-s/p}: doubling the steepness at p = 1
    // halves the mass; the sup norm stays put.
    println!("\nsteepness scaling at s = 1:");
    for m in [2.0f64, 4.0, 8.0, 16.0, 32.0] {
        let spec = HatSpec::new(1, 1, m, vec![0.5], Sign::Pos, 1.0)?;
        let l1 = hat_lp_norm_numeric(&spec, Exponent::Finite(1.0), 2048)?;
        let sup = hat_lp_norm_numeric(&spec, Exponent::Infinity, 2048)?;
        println!("  M = {m:>4}: L1 = {l1:.6}  sup = {sup:.6}");
    }
    println!("\nthe gap between L1 and sup is exactly why average-error");
    println!("training metrics can miss a full-height spike.");
    Ok(())
}
