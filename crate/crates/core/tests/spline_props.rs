use composed_core::spline::{
    base_construction, staircase_std_interpolant, std_lower_bound, theorem_report, LinearSpline,
    StaircaseSpec,
};
use composed_core::valid_set::ValidSet;
use proptest::prelude::*;

/// Random univariate staircase over a random valid set of 2..=7 values.
fn staircase() -> impl Strategy<Value = (StaircaseSpec, ValidSet)> {
    (2usize..=7, 1usize..=20)
        .prop_flat_map(|(m, n)| {
            (
                prop::collection::vec(0.1f64..3.0, m),
                prop::collection::vec(0usize..m - 1, n),
                prop::collection::vec(0.05f64..2.0, n),
                0.01f64..2.0,
            )
        })
        .prop_map(|(steps, picks, lengths, gap)| {
            let mut values = Vec::with_capacity(steps.len());
            let mut v = 0.0;
            for s in &steps {
                values.push(v);
                v += s;
            }
            // Consecutive picks must differ: skip over the previous one.
            let mut seq: Vec<usize> = Vec::with_capacity(picks.len());
            for p in picks {
                let p = match seq.last() {
                    Some(&last) if p >= last => p + 1,
                    _ => p,
                };
                seq.push(p);
            }
            let ys = seq.iter().map(|&i| vec![values[i]]).collect();
            let spec = StaircaseSpec::from_lengths(0.0, &lengths, gap, ys).unwrap();
            (spec, ValidSet::from_scalars(&values).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn std_interpolant_attains_lower_bound((spec, _) in staircase()) {
        let f = staircase_std_interpolant(&spec).unwrap();
        let lower = std_lower_bound(&spec);
        prop_assert!((f.norm() - lower).abs() <= 1e-9 * lower.max(1.0));
    }

    #[test]
    fn construction_reproduces_staircase_within_bound((spec, valid) in staircase()) {
        let r = theorem_report(&spec, &valid, None).unwrap();
        prop_assert_eq!(r.grid_mismatches, 0);
        prop_assert!(
            r.within_bound,
            "measured {} > bound {} + {}",
            r.measured_base_norm,
            r.base_upper_bound,
            r.slack_constant * r.epsilon
        );
    }

    #[test]
    fn collinear_knot_keeps_norm(x in -5.0f64..5.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = LinearSpline::new(vec![(-1.0, 0.0), (0.5, a), (2.0, b)], a, -b).unwrap();
        let g = f.with_knot(x).unwrap();
        prop_assert!((f.norm() - g.norm()).abs() < 1e-9);
        prop_assert!((f.eval(x) - g.eval(x)).abs() < 1e-12);
    }
}

#[test]
fn construction_norm_decreases_with_epsilon() {
    let spec = StaircaseSpec::from_lengths(
        0.0,
        &[1.0, 0.5, 0.8, 1.2],
        0.3,
        vec![vec![0.0], vec![2.0], vec![1.0], vec![3.0]],
    )
    .unwrap();
    let v = ValidSet::integer_range(0, 3).unwrap();
    let norms: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| base_construction(&spec, &v, e).unwrap().norm())
        .collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{norms:?}");
}
