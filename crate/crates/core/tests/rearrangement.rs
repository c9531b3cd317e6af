use proptest::prelude::*;
use rough_sparse::field::{Cube, Grid, GridFunction};
use rough_sparse::rearrange::{quantile, quantile_of_values, rearrange, weak_quasinorm, Rearrangement};

/// `|{|f| > α}|` by direct counting.
fn distribution(values: &[f64], c: f64, alpha: f64) -> f64 {
    values.iter().filter(|v| v.abs() > alpha).count() as f64 * c
}

/// `inf{α ≥ 0 : |{|f| > α}| ≤ t}`, searched over the attained values.
fn rearrangement_oracle(values: &[f64], c: f64, t: f64) -> f64 {
    let mut candidates: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    candidates.push(0.0);
    candidates
        .into_iter()
        .filter(|&a| distribution(values, c, a) <= t)
        .fold(f64::INFINITY, f64::min)
}

fn values_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), -8.0..8.0f64, (-3i32..4).prop_map(|e| 2f64.powi(e))], 1..64)
}

proptest! {
    #[test]
    fn matches_distribution_oracle(values in values_strategy(), e in 0u32..4) {
        let c = 0.5f64.powi(e as i32);
        let r = Rearrangement::from_values(values.iter().copied(), c);
        for t in r.breakpoints() {
            prop_assert_eq!(r.eval(t), rearrangement_oracle(&values, c, t));
        }
        prop_assert_eq!(r.total(), values.len() as f64 * c);
    }

    #[test]
    fn equimeasurable(values in values_strategy()) {
        let c = 0.25;
        let r = Rearrangement::from_values(values.iter().copied(), c);
        for &alpha in r.sorted() {
            let star = r.sorted().iter().filter(|&&v| v > alpha).count() as f64 * c;
            prop_assert_eq!(star, distribution(&values, c, alpha));
        }
        let direct: f64 = values.iter().map(|v| v.abs().powi(2)).sum::<f64>() * c;
        prop_assert!((r.integral_pow(2.0) - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn sum_is_dominated_at_half_times(pair in values_strategy().prop_flat_map(|a| {
        let n = a.len();
        (Just(a), prop::collection::vec(-8.0..8.0f64, n))
    })) {
        let (f, g) = pair;
        let c = 1.0;
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let rf = Rearrangement::from_values(f.iter().copied(), c);
        let rg = Rearrangement::from_values(g.iter().copied(), c);
        let rs = Rearrangement::from_values(sum, c);
        for t in rs.breakpoints() {
            prop_assert!(rs.eval(t) <= rf.eval(t / 2.0) + rg.eval(t / 2.0));
        }
    }

    #[test]
    fn layer_cake_for_quantiles(values in values_strategy(), p in prop_oneof![Just(1.0), Just(2.0), Just(3.0)]) {
        let n = values.len();
        let mean: f64 = values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n as f64;
        // The quantile is constant on [j/n, (j+1)/n); integrate at midpoints.
        let integral: f64 = (0..n)
            .map(|j| quantile_of_values(values.clone(), (j as f64 + 0.5) / n as f64).powf(p))
            .sum::<f64>() / n as f64;
        prop_assert!((mean - integral).abs() <= 1e-12 * mean.max(1.0));
    }

    #[test]
    fn chebyshev_for_quantiles(values in values_strategy(), j in 1i32..7, p in prop_oneof![Just(1.0), Just(2.0), Just(4.0)]) {
        let lambda = 0.5f64.powi(j);
        let n = values.len() as f64;
        let mean = (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n).powf(1.0 / p);
        prop_assert!(quantile_of_values(values.clone(), lambda) <= lambda.powf(-1.0 / p) * mean * (1.0 + 1e-12));
    }

    #[test]
    fn weak_norm_is_below_l1(values in values_strategy()) {
        let grid = Grid::new(1, 3, &[0.0], &[values.len() as f64 / 8.0]).unwrap();
        let f = GridFunction::from_values(grid, values).unwrap();
        prop_assert!(weak_quasinorm(&f, 1.0) <= f.l1_norm() * (1.0 + 1e-12));
    }
}

#[test]
fn quantile_reads_the_cube() {
    let grid = Grid::new(1, 2, &[0.0], &[2.0]).unwrap();
    let f = GridFunction::from_values(grid, vec![4.0, -3.0, 2.0, 1.0, 9.0, 9.0, 9.0, 9.0]).unwrap();
    let q = Cube::new(1, &[0.0], 1.0);
    assert_eq!(quantile(&f, &q, 0.25).unwrap(), 3.0);
    assert_eq!(quantile(&f, &q, 1.0).unwrap(), 1.0);
    assert!(quantile(&f, &q, 0.0).is_err());
    let r = rearrange(&f, &[true, true, true, true, false, false, false, false]).unwrap();
    assert_eq!(r.sorted(), &[4.0, 3.0, 2.0, 1.0]);
}
