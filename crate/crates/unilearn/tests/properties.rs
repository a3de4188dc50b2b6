//! Randomized invariants. Each property states something that must hold for
//! *every* input, so shrinking a failure points straight at the broken edge
//! case.

use proptest::prelude::*;

use unilearn::bounds::{operator_norm_bound, spectral_norm};
use unilearn::hat::{hat_eval, HatSpec};
use unilearn::recovery::{int_ceil_root, int_floor_root};
use unilearn::{pairwise_sum, Exponent, Mlp, Sign};

fn exponent_strategy() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        (1.0f64..16.0).prop_map(Exponent::Finite),
        Just(Exponent::Infinity),
    ]
}

proptest! {
    /// Pairwise summation is a reordering of the same additions; on
    /// integer-valued floats it must agree with the sequential sum exactly,
    /// on arbitrary floats up to accumulated rounding.
    #[test]
    fn pairwise_sum_matches_sequential(xs in prop::collection::vec(-1.0e6f64..1.0e6, 0..200)) {
        let ints: Vec<f64> = xs.iter().map(|v| v.trunc()).collect();
        let seq_int: f64 = ints.iter().sum();
        prop_assert_eq!(pairwise_sum(&ints), seq_int);

        let seq: f64 = xs.iter().sum();
        let abs: f64 = xs.iter().map(|v| v.abs()).sum();
        prop_assert!((pairwise_sum(&xs) - seq).abs() <= 1e-9 * abs.max(1.0));
    }

    /// The raw hat is bounded by its amplitude, vanishes outside the support
    /// box, and is symmetric about its center in every active coordinate.
    #[test]
    fn hat_is_bounded_local_and_symmetric(
        steep in 1.0f64..12.0,
        center in 0.0f64..1.0,
        offset in -2.0f64..2.0,
        amplitude in 0.1f64..5.0,
        pos in any::<bool>(),
    ) {
        let sign = if pos { Sign::Pos } else { Sign::Neg };
        let spec = HatSpec::new(1, 1, steep, vec![center], sign, amplitude).unwrap();
        let v = hat_eval(&spec, &[center + offset]).unwrap();
        prop_assert!(v.abs() <= amplitude * (1.0 + 1e-12));
        prop_assert!(v * sign.as_f64() >= 0.0, "sign of {v} disagrees with {sign:?}");
        // Strictly outside the support (with an ulp margin for the
        // boundary itself, where M * (1/M) rounds either way).
        if offset.abs() >= (1.0 + 1e-12) / steep {
            prop_assert_eq!(v, 0.0, "support must end at 1/M");
        }
        let mirrored = hat_eval(&spec, &[center - offset]).unwrap();
        prop_assert!((v - mirrored).abs() <= 1e-12 * amplitude, "{v} vs {mirrored}");
    }

    /// Display/FromStr round trip, and `recip` mapping `[1, ∞]` into `[0, 1]`.
    #[test]
    fn exponent_round_trips_and_recip_is_sane(q in exponent_strategy()) {
        let text = q.to_string();
        let back: Exponent = text.parse().unwrap();
        prop_assert_eq!(back, q);
        let r = q.recip();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(q.is_infinite(), r == 0.0);
        prop_assert!(q.ge(1.0));
    }

    /// Entrywise norms shrink as the exponent grows, so the class with
    /// smaller q is the smaller class: coefficient_norm must be
    /// anti-monotone in q on every network.
    #[test]
    fn coefficient_norm_is_antimonotone_in_q(
        entries in prop::collection::vec(-3.0f64..3.0, 7),
        q_lo in 1.0f64..8.0,
        bump in 0.0f64..8.0,
    ) {
        let net = Mlp::new(
            vec![1, 2, 1],
            vec![entries[0..2].to_vec(), entries[2..4].to_vec()],
            vec![entries[4..6].to_vec(), entries[6..7].to_vec()],
        )
        .unwrap();
        let hi = net.coefficient_norm(Exponent::Finite(q_lo + bump));
        let lo = net.coefficient_norm(Exponent::Finite(q_lo));
        prop_assert!(lo >= hi * (1.0 - 1e-12), "norm grew from q={q_lo} to q={}", q_lo + bump);
        prop_assert!(hi >= net.coefficient_norm(Exponent::Infinity) * (1.0 - 1e-12));
    }

    /// The closed-form operator bound dominates the power-iteration value on
    /// arbitrary matrices for every admissible exponent.
    #[test]
    fn operator_bound_dominates_power_iteration(
        rows in 1usize..6,
        cols in 1usize..6,
        q in exponent_strategy(),
        seed in any::<u64>(),
        raw in prop::collection::vec(-2.0f64..2.0, 25),
    ) {
        let mat: Vec<f64> = raw[..rows * cols].to_vec();
        let entrywise = match q {
            Exponent::Infinity => mat.iter().fold(0.0f64, |a, &v| a.max(v.abs())),
            Exponent::Finite(qf) => mat
                .iter()
                .map(|v| v.abs().powf(qf))
                .sum::<f64>()
                .powf(1.0 / qf),
        };
        let bound = operator_norm_bound(rows, cols, q, entrywise).unwrap();
        let sigma = spectral_norm(&mat, rows, cols, seed).unwrap();
        prop_assert!(bound * (1.0 + 1e-12) >= sigma, "bound {bound} < sigma {sigma}");
    }

    /// Integer roots bracket the budget: `⌊m^{1/d}⌋^d ≤ m < (⌊m^{1/d}⌋+1)^d`
    /// and `⌈m^{1/s}⌉` is the least integer whose power reaches m.
    #[test]
    fn integer_roots_bracket_the_budget(m in 1usize..1_000_000, d in 1usize..6) {
        let k = int_floor_root(m, d);
        prop_assert!(k.pow(d as u32) <= m);
        prop_assert!((k + 1).pow(d as u32) > m);
        let k_up = int_ceil_root(m, d);
        prop_assert!(k_up.pow(d as u32) >= m);
        prop_assert!(k_up == 1 || (k_up - 1).pow(d as u32) < m);
    }

    /// Stored networks survive serialization bit for bit.
    #[test]
    fn network_json_round_trip_is_exact(
        w in prop::collection::vec(-10.0f64..10.0, 8),
        b in prop::collection::vec(-10.0f64..10.0, 3),
        x in -1.0f64..2.0,
    ) {
        let net = Mlp::new(
            vec![1, 2, 1],
            vec![w[0..2].to_vec(), w[2..4].to_vec()],
            vec![b[0..2].to_vec(), b[2..3].to_vec()],
        )
        .unwrap();
        let back = Mlp::from_json(&net.to_json()).unwrap();
        prop_assert_eq!(&back, &net);
        let before = net.forward_scalar(&[x]).unwrap();
        let after = back.forward_scalar(&[x]).unwrap();
        prop_assert_eq!(before.to_bits(), after.to_bits());
    }
}
