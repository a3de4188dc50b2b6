//! Grid recovery: lattice queries plus piecewise-constant prediction meet
//! the Lipschitz-based guarantee `Lip * 2 sqrt(d) * m^(-1/d)` — the upper
//! bound that squeezes against the spike lower bound.
//!
//! Run with `cargo run --release --example grid_recovery`.

use unilearn::bounds::{lipschitz_bound, upper_bound_error};
use unilearn::exponent::Exponent;
use unilearn::fooling::{lp_error_estimate, EstimateOptions, PeakRefinement};
use unilearn::hat::{HatSpec, Sign};
use unilearn::nn::NetworkClass;
use unilearn::recovery::{run_with_recording, GridRecovery};
use unilearn::witness::construct;

fn main() -> Result<(), unilearn::error::Error> {
    // Target: a constructed spike network in a q = 2 class, so its
    // Lipschitz constant is certified by the class bound.
    let cls = NetworkClass::new(vec![1, 3, 3, 1], 1.0, Exponent::Finite(2.0))?;
    let plan = construct(&cls, &HatSpec::new(1, 1, 8.0, vec![0.3125], Sign::Pos, 1.0)?)?;
    let lip = lipschitz_bound(&cls);
    println!("target: spike of height {} at {:?}, class Lipschitz bound {lip}",
        plan.realized_amplitude, plan.spec.center);

    let net = plan.net.clone();
    let target = move |x: &[f64]| net.forward_scalar(x).unwrap_or(f64::NAN);
    let anchors = vec![plan.spec.center.clone()];

    println!("\n{:>6} {:>6} {:>14} {:>14} {:>14}", "m", "K", "measured sup", "guarantee", "class bound");
    for m in [16usize, 64, 256, 1024] {
        let grid = GridRecovery::new(1, m, lip)?;
        let run = run_with_recording(&grid, &target)?;
        let predictor = run.predictor.clone();
        let measured = lp_error_estimate(
            &target,
            &move |x: &[f64]| predictor.eval(x),
            Exponent::Infinity,
            8192,
            0,
            1,
            &EstimateOptions {
                anchors: &anchors,
                refine: Some(PeakRefinement::for_steepness(plan.spec.steepness)),
            },
        )?;
        let guarantee = grid.guaranteed_sup_error();
        let class_bound = upper_bound_error(&cls, m as u64)?;
        assert!(measured <= guarantee && guarantee <= class_bound);
        println!(
            "{m:>6} {:>6} {measured:>14.8} {guarantee:>14.8} {class_bound:>14.8}",
            grid.resolution()
        );
    }

    // The oracle enforces the budget: one query too many is an error.
    let grid = GridRecovery::new(2, 9, lip)?;
    let run = run_with_recording(&grid, &|x: &[f64]| x[0] + x[1])?;
    println!("\nd = 2, m = 9: grid used {} of 9 queries (3x3 lattice)", run.points.len());
    println!("first queries: {:?}", &run.points[..3.min(run.points.len())]);
    Ok(())
}
