//! Closed-form bound tables: how the lower bound, the grid-recovery upper
//! bound, and the minimum-sample identity scale with class parameters.
//!
//! Run with `cargo run --release --example bounds_table`.

use unilearn::bounds::{compute_report, BoundQuery};
use unilearn::exponent::Exponent;
use unilearn::nn::NetworkClass;

fn class(d: usize, depth: usize, width: usize, c: f64, q: Exponent) -> NetworkClass {
    let mut arch = vec![d];
    arch.extend(std::iter::repeat(width).take(depth - 1));
    arch.push(1);
    NetworkClass::new(arch, c, q).expect("valid class")
}

fn main() -> Result<(), unilearn::error::Error> {
    // Lower vs upper error bounds at fixed sample budgets, sup norm.
    println!("d=1, L=3, width 3, c=1, q=2, p=inf, s=1:");
    println!("{:>8}  {:>22}  {:>22}", "m", "lower bound", "upper bound");
    for m in [16u64, 256, 4096, 65536] {
        let report = compute_report(&BoundQuery {
            cls: class(1, 3, 3, 1.0, Exponent::Finite(2.0)),
            m,
            p: Exponent::Infinity,
            s: 1,
            epsilon: 1e-3,
            c0: 1.0,
        })?;
        println!(
            "{m:>8}  {:>22.6e}  {:>22.6e}",
            report.lower_bound_error, report.upper_bound_error
        );
    }

    // The same class measured in L^p: weaker p, weaker lower bound.
    println!("\nsame class, m = 4096, lower bound by error norm:");
    for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
        let report = compute_report(&BoundQuery {
            cls: class(1, 3, 3, 1.0, Exponent::Finite(2.0)),
            m: 4096,
            p,
            s: 1,
            epsilon: 1e-3,
            c0: 1.0,
        })?;
        println!("  p = {p:<4}  {:.6e}", report.lower_bound_error);
    }

    // Sample counts for uniform accuracy explode with dimension. The log2
    // of the bound is exact; the raw count overflows f64 quickly.
    println!("\nminimum samples for uniform accuracy eps = 2^-10 (c = 2, L = 7, width 3d):");
    println!("{:>4}  {:>20}", "d", "log2(min samples)");
    for d in [2usize, 5, 10, 15] {
        let report = compute_report(&BoundQuery {
            cls: class(d, 7, 3 * d, 2.0, Exponent::Infinity),
            m: 1,
            p: Exponent::Infinity,
            s: d,
            epsilon: (2.0f64).powi(-10),
            c0: 1.0,
        })?;
        println!("{d:>4}  {:>20.6}", report.min_samples_log2.expect("uniform regime"));
    }
    println!("\nd = 15 is the headline case: 15 + 105 + 75*log2(45) = 531.889 bits,");
    println!("i.e. more samples than there are atoms in the observable universe.");
    Ok(())
}
