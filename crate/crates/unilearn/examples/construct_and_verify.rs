//! Spike networks: build a ReLU network inside a coefficient-bounded class
//! whose realization is an exact scaled hat function, then verify the
//! construction pointwise and through the JSON artifact.
//!
//! Run with `cargo run --release --example construct_and_verify`.

use unilearn::exponent::Exponent;
use unilearn::hat::{hat_eval, HatSpec, Sign};
use unilearn::nn::{Mlp, NetworkClass};
use unilearn::witness::{construct, verify_construction};

fn main() -> Result<(), unilearn::error::Error> {
    // A q = inf class: 1-d input, depth 3, hidden width 3, coefficients
    // bounded by 1 in the entrywise max norm.
    let cls = NetworkClass::new(vec![1, 3, 3, 1], 1.0, Exponent::Infinity)?;
    let spec = HatSpec::new(1, 1, 2.0, vec![0.5], Sign::Pos, 1.0)?;
    let plan = construct(&cls, &spec)?;

    println!("class arch {:?}, c = {}, q = {}", plan.class.arch, plan.class.c, plan.class.q);
    println!("lambda = {}", plan.lambda_value);
    println!("realized spike height = {}", plan.realized_amplitude);
    println!("norm = {} (bound {})", plan.net.coefficient_norm(Exponent::Infinity), cls.c);
    assert!(plan.net.in_class(&cls, 0.0), "zero-slack membership");

    // The network IS the spike: compare forward passes against the analytic
    // hat on a dense line.
    let mut worst: f64 = 0.0;
    for i in 0..=1000 {
        let x = [i as f64 / 1000.0];
        let want = hat_eval(&plan.spec, &x)?;
        let got = plan.net.forward_scalar(&x)?;
        worst = worst.max((want - got).abs());
    }
    println!("max |net - spike| on a 1001-point line: {worst:e}");

    // Randomized verification with structured probes (center, plateau,
    // support corners, splice hyperplanes).
    let dev = verify_construction(&plan.net, &plan.spec, plan.realized_amplitude, 4096, 0)?;
    println!("randomized verification deviation: {dev:e} (tolerance {:e})", 1e-10 * plan.realized_amplitude);

    // Sign flip negates the realization exactly.
    let neg = construct(&cls, &HatSpec::new(1, 1, 2.0, vec![0.5], Sign::Neg, 1.0)?)?;
    let x = [0.43];
    println!(
        "nu = +1 gives {}, nu = -1 gives {}",
        plan.net.forward_scalar(&x)?,
        neg.net.forward_scalar(&x)?
    );

    // Small-q construction: a single live hidden unit carries the spike.
    let small = construct(
        &NetworkClass::new(vec![2, 6, 6, 1], 1.0, Exponent::Finite(1.0))?,
        &HatSpec::new(2, 2, 4.0, vec![0.5, 0.25], Sign::Pos, 1.0)?,
    )?;
    println!(
        "\nq = 1, d = s = 2: lambda = {}, height = {}",
        small.lambda_value, small.realized_amplitude
    );
    println!(
        "peak check at the center: {}",
        small.net.forward_scalar(&small.spec.center)?
    );

    // The serialized plan doubles as a plain network file.
    let artifact = serde_json::to_string_pretty(&plan).expect("serialize");
    let as_net = Mlp::from_json(&artifact)?;
    assert_eq!(as_net, plan.net);
    println!("\nartifact parses back as a plain network: ok ({} bytes)", artifact.len());
    Ok(())
}
