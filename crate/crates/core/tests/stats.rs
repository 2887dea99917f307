use guohua_core::stats::{
    cronbach_alpha, exact_p, paired_t_test, signed_ranks, t_test_differences, wilcoxon_from_differences, ItemAxis,
    Method, RatingMatrix, RatingSheet, StatsError,
};
use guohua_testkit::{alpha_from_covariances, rank_sums, rng, wilcoxon_p_by_enumeration};
use rand::Rng;

fn random_diffs(r: &mut impl Rng, n: usize) -> Vec<f64> {
    // small integer range forces ties and zeros
    (0..n).map(|_| r.random_range(-4..=4) as f64).collect()
}

#[test]
fn exact_path_matches_enumeration() {
    let mut r = rng(7);
    let mut checked = 0;
    while checked < 50 {
        let n = r.random_range(1..=12);
        let d = random_diffs(&mut r, n);
        let Ok(sr) = signed_ranks(&d) else { continue };
        let oracle = wilcoxon_p_by_enumeration(&d);
        assert!((exact_p(&sr) - oracle).abs() <= 1e-12, "{d:?}: {} vs {oracle}", exact_p(&sr));
        let (wp, wm) = rank_sums(&d);
        assert!((sr.w_plus - wp).abs() < 1e-12 && (sr.w_minus - wm).abs() < 1e-12);
        checked += 1;
    }
}

#[test]
fn rank_sum_identity() {
    let mut r = rng(8);
    for _ in 0..500 {
        let n = r.random_range(1..40);
        let d: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0f64).round()).collect();
        if let Ok(sr) = signed_ranks(&d) {
            let m = sr.n() as f64;
            assert!((sr.w_plus + sr.w_minus - m * (m + 1.0) / 2.0).abs() < 1e-9);
        }
    }
}

#[test]
fn zero_differences_are_dropped() {
    let res = wilcoxon_from_differences(&[0.0, 1.0, 0.0, 2.0, -3.0]).unwrap();
    assert_eq!(res.n_effective, 3);
    assert_eq!(res.method, Method::ExactEnumeration);
    assert!(matches!(wilcoxon_from_differences(&[0.0, 0.0]), Err(StatsError::NoNonzeroDifferences)));
}

#[test]
fn large_samples_use_normal_approximation() {
    let d: Vec<f64> = (1..=30).map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 }).collect();
    let res = wilcoxon_from_differences(&d).unwrap();
    assert_eq!(res.method, Method::NormalApproximation);
    assert!(res.z.unwrap() <= 0.0);
    assert!(res.p_value > 0.0 && res.p_value < 1.0);
}

#[test]
fn t_on_known_differences() {
    // mean 1.5, sd sqrt(5/3), t = 1.5 / (sqrt(5/3)/2)
    let r = t_test_differences(&[2.0, 0.0, 1.0, 3.0]).unwrap();
    assert!((r.statistic - 2.3238).abs() < 1e-3, "{}", r.statistic);
    assert_eq!(r.df, Some(3.0));
    assert!(r.p_value > 0.1 && r.p_value < 0.11);
    let paired = paired_t_test(&[(3.0, 1.0), (1.0, 1.0), (2.0, 1.0), (4.0, 1.0)]).unwrap();
    assert_eq!(paired.statistic, r.statistic);
    assert!(matches!(t_test_differences(&[1.0, 1.0, 1.0]), Err(StatsError::DegenerateVariance)));
}

fn matrix(scores: Vec<Vec<f64>>) -> RatingMatrix {
    let items = (0..scores[0].len()).map(|i| format!("s{i}")).collect();
    let raters = (0..scores.len()).map(|i| format!("R{i}")).collect();
    RatingMatrix::new(raters, items, scores).unwrap()
}

#[test]
fn duplicated_raters_give_alpha_one() {
    let mut r = rng(9);
    for _ in 0..20 {
        let row: Vec<f64> = (0..8).map(|_| r.random_range(1..=5) as f64).collect();
        if row.iter().all(|x| *x == row[0]) {
            continue;
        }
        let a = cronbach_alpha(&matrix(vec![row.clone(), row.clone(), row]), ItemAxis::Raters).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
    }
}

#[test]
fn alpha_matches_covariance_form() {
    let mut r = rng(10);
    let mut checked = 0;
    while checked < 100 {
        let k = r.random_range(2..6);
        let n = r.random_range(3..15);
        let scores: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| r.random_range(1..=7) as f64).collect()).collect();
        let Ok(a) = cronbach_alpha(&matrix(scores.clone()), ItemAxis::Raters) else { continue };
        assert!((a - alpha_from_covariances(&scores)).abs() <= 1e-9);
        checked += 1;
    }
}

#[test]
fn alpha_axes_and_small_example() {
    // two raters over three paintings
    let m = matrix(vec![vec![1.0, 5.0, 2.0], vec![5.0, 1.0, 3.0]]);
    let a = cronbach_alpha(&m, ItemAxis::Raters).unwrap();
    assert!((a - alpha_from_covariances(&m.scores)).abs() < 1e-12);
    assert!(a < 0.0);
    let cols: Vec<Vec<f64>> = (0..3).map(|j| m.scores.iter().map(|row| row[j]).collect()).collect();
    assert!((cronbach_alpha(&m, ItemAxis::Items).unwrap() - alpha_from_covariances(&cols)).abs() < 1e-12);
    assert!(matches!(cronbach_alpha(&matrix(vec![vec![1.0, 2.0]]), ItemAxis::Raters), Err(StatsError::TooFewObservations { .. })));
}

#[test]
fn rating_sheet_csv_round_trip_and_gaps() {
    let csv = "set_id,item,rater,score\nset-01,crafted:image_relevance,R1,4\nset-01,crafted:image_relevance,R2,\n";
    let sheet = RatingSheet::from_csv(csv.as_bytes()).unwrap();
    assert_eq!(sheet.rows[1].score, None);
    assert_eq!(RatingSheet::from_csv(sheet.to_csv().as_bytes()).unwrap(), sheet);
    assert!(sheet.matrix_for("crafted:image_relevance").is_err());
}
