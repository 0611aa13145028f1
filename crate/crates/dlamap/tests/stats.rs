use dlamap::rng::trial_rng;
use dlamap::stats::{fit_power_law, mean_and_stderr, two_sample_chi_square, StatsError};
use rand::Rng;

#[test]
fn exact_power_laws() {
    let pts: Vec<(f64, f64)> = [10.0, 100.0, 1e3, 1e4].iter().map(|&x: &f64| (x, x.sqrt())).collect();
    let f = fit_power_law(&pts).unwrap();
    assert!((f.slope - 0.5).abs() < 1e-9);
    assert!((f.r_squared - 1.0).abs() < 1e-12);
    assert!(f.stderr_slope < 1e-9);
    assert_eq!(f.range, (10.0, 1e4));

    let pts: Vec<(f64, f64)> = (1..=6).map(|i| (i as f64, 3.0 * (i * i) as f64)).collect();
    let f = fit_power_law(&pts).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-12);
    assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn noisy_power_law() {
    let mut rng = trial_rng(3, 0);
    let pts: Vec<(f64, f64)> = (0..30)
        .map(|i| {
            let x = 10f64.powf(1.0 + i as f64 / 10.0);
            (x, x.powf(0.56) * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)))
        })
        .collect();
    let f = fit_power_law(&pts).unwrap();
    assert!((f.slope - 0.56).abs() < 0.01, "{f:?}");
    assert!(f.stderr_slope > 0.0 && f.r_squared <= 1.0);
}

#[test]
fn degenerate_fits() {
    assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]), Err(StatsError::DegenerateInput(_))));
    assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(StatsError::DegenerateInput(_))));
    assert!(matches!(fit_power_law(&[(5.0, 1.0), (5.0, 2.0), (5.0, 3.0)]), Err(StatsError::DegenerateInput(_))));
}

#[test]
fn chi_square_extremes() {
    let a = [40u64, 30, 20, 10, 3, 1];
    let t = two_sample_chi_square(&a, &a).unwrap();
    assert_eq!(t.statistic, 0.0);
    assert_eq!(t.p_value, 1.0);

    let a = [500u64, 500, 0, 0];
    let b = [0u64, 0, 500, 500];
    let t = two_sample_chi_square(&a, &b).unwrap();
    assert!(t.p_value < 1e-6, "{t:?}");

    assert_eq!(two_sample_chi_square(&[3, 1], &[2, 2]), Err(StatsError::InsufficientCounts));
    assert_eq!(two_sample_chi_square(&[0, 0], &[2, 2]), Err(StatsError::InsufficientCounts));
}

#[test]
fn pooling_keeps_expected_counts_large() {
    // Many rare categories must be pooled rather than inflate the statistic.
    let mut a = vec![100u64, 100];
    let mut b = vec![100u64, 100];
    a.extend(std::iter::repeat(1).take(40));
    b.extend(std::iter::repeat(1).take(40));
    let t = two_sample_chi_square(&a, &b).unwrap();
    assert!(t.categories <= 10, "{t:?}");
    assert!(t.p_value > 0.5);
}

/// Kolmogorov-Smirnov statistic of `p` against the uniform law.
fn ks_uniform(mut p: Vec<f64>) -> f64 {
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = p.len() as f64;
    p.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

#[test]
fn p_values_are_roughly_uniform_under_the_null() {
    let probs = [0.4, 0.25, 0.15, 0.1, 0.06, 0.03, 0.01];
    let mut rng = trial_rng(11, 0);
    let mut draw = |n: usize| {
        let mut c = vec![0u64; probs.len()];
        for _ in 0..n {
            let mut u: f64 = rng.random();
            let mut k = 0;
            while k + 1 < probs.len() && u >= probs[k] {
                u -= probs[k];
                k += 1;
            }
            c[k] += 1;
        }
        c
    };
    let ps: Vec<f64> = (0..100).map(|_| two_sample_chi_square(&draw(2000), &draw(3000)).unwrap().p_value).collect();
    // 1.63 / sqrt(100) is the 1% critical value of the KS statistic.
    assert!(ks_uniform(ps) < 0.163);
}

#[test]
fn mean_and_standard_error() {
    let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    assert_eq!(mean_and_stderr(&[7.0]), (7.0, 0.0));
}

#[test]
fn pooling_ignores_how_rare_counts_split() {
    // Sixty singletons, half in each sample: pooling must not sort them by side.
    let mut a = vec![500u64, 500];
    let mut b = vec![500u64, 500];
    for i in 0..60 {
        a.push((i % 2) as u64);
        b.push(1 - (i % 2) as u64);
    }
    let t = two_sample_chi_square(&a, &b).unwrap();
    assert!(t.p_value > 0.1, "{t:?}");
}
