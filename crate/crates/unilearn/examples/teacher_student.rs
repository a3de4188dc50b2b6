//! Teacher-student training: sample random teacher networks, train students
//! on point samples with Adam, and watch the L-infinity error stay far
//! above the L1 error — the empirical face of the sampling lower bounds.
//!
//! This example runs a deliberately tiny sweep so it finishes in seconds.
//! The full desk-scale configuration (5 teachers, 2 seeds, 4000 epochs,
//! 2^16 evaluation points) runs via `unilearn experiment --out <dir>`.
//!
//! Run with `cargo run --release --example teacher_student`.

use unilearn::experiments::{
    estimate_err_hat, run_gap_demo, sample_teacher, series_csv, AdamParams, ExperimentConfig,
    GapDemoConfig, StudentVariant,
};
use unilearn::exponent::Exponent;
use unilearn::nn::NetworkClass;

fn main() -> Result<(), unilearn::error::Error> {
    // Teachers are drawn coefficient-wise uniform in [-c, c]; they land in
    // the q = inf class with zero slack.
    let teacher_class = NetworkClass::new(vec![1, 16, 16, 1], 0.5, Exponent::Infinity)?;
    let teacher = sample_teacher(&teacher_class, 1)?;
    println!(
        "sample teacher: arch {:?}, coefficient norm {:.4} <= {}",
        teacher.arch(),
        teacher.coefficient_norm(Exponent::Infinity),
        teacher_class.c
    );

    let config = ExperimentConfig {
        d: 1,
        m_list: vec![32, 128],
        teacher_class,
        n_teachers: 3,
        students: vec![StudentVariant {
            arch: vec![1, 24, 24, 1],
            batch_size: 8,
        }],
        n_seeds: 2,
        epochs: 250,
        n_eval: 4096,
        p_list: vec![Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity],
        adam: AdamParams {
            lr_init: 1e-2,
            lr_final: 1e-4,
            ..Default::default()
        },
        centered_domain: true,
        seed: 7,
    };
    let report = estimate_err_hat(&config)?;

    println!("\nerr_hat(m, p) = min over students, max over teachers, mean over seeds:");
    print!("{}", series_csv(&report));
    for &m in &config.m_list {
        let l1 = report.err_hat(m, Exponent::Finite(1.0)).unwrap();
        let sup = report.err_hat(m, Exponent::Infinity).unwrap();
        println!("m = {m:>4}: sup/L1 ratio = {:.2}", sup / l1);
    }
    println!("({} trials, {} flagged)", report.trials.len(), report.flagged_trials);

    // The single-target version of the same story: a spiky 1-d function,
    // m = 1000 samples, and a student that nails the average but not the
    // peaks. Shortened here; the full run uses 5000 epochs.
    let demo = run_gap_demo(&GapDemoConfig {
        epochs: 600,
        n_eval: 8192,
        ..Default::default()
    })?;
    println!(
        "\noscillatory target, 600 epochs: L1 = {:.4}, Linf = {:.4}, ratio = {:.2}",
        demo.l1_error, demo.linf_error, demo.ratio
    );
    println!("training loss {:.4} -> {:.6}", demo.initial_loss, demo.final_loss);
    Ok(())
}
