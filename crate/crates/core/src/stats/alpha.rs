use super::{RatingMatrix, StatsError};

/// Which axis of a [`RatingMatrix`] plays the role of "items" in α.
///
/// For inter-rater agreement the raters are the items and the rated things are
/// the observations: `ItemAxis::Raters`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemAxis {
    Raters,
    Items,
}

/// Cronbach's α with sample (n − 1) variances. Can be negative.
pub fn cronbach_alpha(matrix: &RatingMatrix, axis: ItemAxis) -> Result<f64, StatsError> {
    // columns[i] = scores of item i across observations
    let columns: Vec<Vec<f64>> = match axis {
        ItemAxis::Raters => matrix.scores.clone(),
        ItemAxis::Items => (0..matrix.items.len())
            .map(|j| matrix.scores.iter().map(|row| row[j]).collect())
            .collect(),
    };
    let k = columns.len();
    if k < 2 {
        return Err(StatsError::TooFewObservations { need: 2, got: k });
    }
    let obs = columns[0].len();
    if obs < 2 {
        return Err(StatsError::TooFewObservations { need: 2, got: obs });
    }
    let item_var: f64 = columns.iter().map(|c| sample_variance(c)).sum();
    let totals: Vec<f64> = (0..obs).map(|o| columns.iter().map(|c| c[o]).sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var <= 1e-300 {
        return Err(StatsError::DegenerateVariance);
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> RatingMatrix {
        RatingMatrix::new(
            (0..rows.len()).map(|i| format!("r{i}")).collect(),
            (0..rows[0].len()).map(|j| format!("i{j}")).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn duplicated_raters_agree_perfectly() {
        let m = matrix(&[&[1.0, 4.0, 2.0, 5.0], &[1.0, 4.0, 2.0, 5.0]]);
        assert!((cronbach_alpha(&m, ItemAxis::Raters).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn opposed_raters_go_negative() {
        let m = matrix(&[&[1.0, 5.0, 2.0], &[5.0, 1.0, 3.0]]);
        // variances 13/3 and 4; totals 6, 6, 5 have variance 1/3
        let expected = 2.0 * (1.0 - (13.0 / 3.0 + 4.0) / (1.0 / 3.0));
        let a = cronbach_alpha(&m, ItemAxis::Raters).unwrap();
        assert!((a - expected).abs() < 1e-9);
        assert!(a < 0.0);
    }

    #[test]
    fn constant_totals_are_degenerate() {
        // perfectly mirrored scores sum to a constant per observation
        let m = matrix(&[&[1.0, 5.0, 2.0], &[5.0, 1.0, 4.0]]);
        assert!(matches!(
            cronbach_alpha(&m, ItemAxis::Raters),
            Err(StatsError::DegenerateVariance)
        ));
    }

    #[test]
    fn item_axis_transposes() {
        let m = matrix(&[&[1.0, 2.0], &[2.0, 3.0], &[4.0, 4.0]]);
        let t = RatingMatrix::new(
            m.items.clone(),
            m.raters.clone(),
            vec![vec![1.0, 2.0, 4.0], vec![2.0, 3.0, 4.0]],
        )
        .unwrap();
        assert_eq!(
            cronbach_alpha(&m, ItemAxis::Items).unwrap(),
            cronbach_alpha(&t, ItemAxis::Raters).unwrap()
        );
    }
}
