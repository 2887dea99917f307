use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{Method, StatsError, TestResult};

/// Two-sided paired-sample t-test on `d = a - b`.
pub fn paired_t_test(pairs: &[(f64, f64)]) -> Result<TestResult, StatsError> {
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    t_test_differences(&diffs)
}

pub fn t_test_differences(diffs: &[f64]) -> Result<TestResult, StatsError> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = diffs.len();
    if n < 2 {
        return Err(StatsError::TooFewObservations { need: 2, got: n });
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let t = mean / (var.sqrt() / nf.sqrt());
    let df = nf - 1.0;
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid degrees of freedom");
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TestResult {
        statistic: t,
        p_value: p,
        method: Method::StudentT,
        n_effective: n,
        z: None,
        df: Some(df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_differences() {
        let r = t_test_differences(&[2.0, 0.0, 1.0, 3.0]).unwrap();
        assert!((r.statistic - 2.3238).abs() < 1e-3, "{}", r.statistic);
        assert_eq!(r.df, Some(3.0));
        // t-table: t_{0.05, 3} two-sided critical value is 3.182, so p > 0.05;
        // t_{0.20, 3} = 1.638, so p < 0.20.
        assert!(r.p_value > 0.05 && r.p_value < 0.20, "{}", r.p_value);
    }

    #[test]
    fn identical_pairs_are_degenerate() {
        let err = paired_t_test(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).unwrap_err();
        assert!(matches!(err, StatsError::DegenerateVariance));
        assert!(err.to_string().contains("degenerate variance"));
    }

    #[test]
    fn antisymmetric_in_sign() {
        let d = [0.5, -1.25, 2.0, 3.5, 0.1];
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        let a = t_test_differences(&d).unwrap();
        let b = t_test_differences(&neg).unwrap();
        assert_eq!(a.statistic, -b.statistic);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn critical_value_gives_five_percent() {
        // t = 2.228 at df = 10 is the tabulated two-sided 5% point.
        let dist = StudentsT::new(0.0, 1.0, 10.0).unwrap();
        assert!((2.0 * dist.cdf(-2.228138851986) - 0.05).abs() < 1e-9);
    }
}
