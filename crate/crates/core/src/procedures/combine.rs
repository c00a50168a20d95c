//! Combining several summaries into one test.

use crate::error::{Error, Result};
use crate::ordering::{depths, DepthMeasure, RankMatrix, Sidedness};
use crate::stats::{CurveMatrix, Extremeness, StatVariant};

use super::{ci_halfwidth, decision, global_envelope, mc_p_value, Method, TestDetails, TestReport};

/// One-step combination: rows of every matrix are concatenated into long
/// vectors, which are then ordered by `measure` and enveloped as usual.
pub fn combine_one_step(cms: &[CurveMatrix], measure: DepthMeasure, alpha: f64) -> Result<TestReport> {
    let cm = CurveMatrix::concat(cms)?;
    let scores = depths(&RankMatrix::new(&cm, Sidedness::TwoSided), measure);
    let p = mc_p_value(&scores);
    let envelope = global_envelope(&cm, &scores, alpha).ok();
    let m = cm.m();
    Ok(TestReport {
        p_value: p,
        method: Method::Mc.name().into(),
        statistic: StatVariant::Fun.name(),
        measure: Some(measure.name().into()),
        m,
        s: None,
        alpha,
        decision: decision(p, alpha),
        ci_halfwidth: ci_halfwidth(p, m),
        seed: 0,
        truncated_at: cm.truncated_at(),
        details: TestDetails { depths: Some(scores), envelope, ..Default::default() },
    })
}

/// Stage-one measures of one test for every row (row 0 observed).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarColumn {
    pub values: Vec<f64>,
    pub tag: Extremeness,
}

impl ScalarColumn {
    pub fn large_is_extreme(values: Vec<f64>) -> Self {
        ScalarColumn { values, tag: Extremeness::LargeOnly }
    }
}

/// Turns depths (small = extreme) into a column where large is extreme.
pub fn invert_depths(depths: &[f64]) -> ScalarColumn {
    ScalarColumn::large_is_extreme(depths.iter().map(|d| 1.0 - d).collect())
}

/// Two-step combination: the k stage-one measures of each row form a
/// vector which is ordered by the one-sided extreme rank length.
///
/// Every column must be large-is-extreme; two-sided columns cannot be put
/// on a common scale and give [`Error::MixedDirections`].
pub fn combine_two_step(columns: &[ScalarColumn], alpha: f64) -> Result<TestReport> {
    let Some(first) = columns.first() else {
        return Err(Error::InvalidArgs("no columns to combine".into()));
    };
    if columns.iter().any(|c| c.tag != Extremeness::LargeOnly) {
        return Err(Error::MixedDirections);
    }
    let rows = first.values.len();
    if columns.iter().any(|c| c.values.len() != rows) {
        return Err(Error::MismatchedShapes("columns differ in length".into()));
    }
    let k = columns.len();
    let mut data = Vec::with_capacity(rows * k);
    for i in 0..rows {
        data.extend(columns.iter().map(|c| c.values[i]));
    }
    let cm = CurveMatrix::new((0..k).map(|j| j as f64).collect(), rows, data)?;
    let scores = depths(&RankMatrix::new(&cm, Sidedness::LargeOnly), DepthMeasure::Erl);
    let p = mc_p_value(&scores);
    let m = rows - 1;
    Ok(TestReport {
        p_value: p,
        method: Method::Mc.name().into(),
        statistic: "two-step".into(),
        measure: Some(DepthMeasure::Erl.name().into()),
        m,
        s: None,
        alpha,
        decision: decision(p, alpha),
        ci_halfwidth: ci_halfwidth(p, m),
        seed: 0,
        truncated_at: None,
        details: TestDetails { depths: Some(scores), ..Default::default() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::pointwise_ranks;
    use proptest::prelude::*;

    fn matrix(rows: usize, cols: usize, vals: &[f64]) -> CurveMatrix {
        CurveMatrix::new((0..cols).map(|j| j as f64 * 0.1).collect(), rows, vals.to_vec()).unwrap()
    }

    #[test]
    fn one_step_shape_and_duplication() {
        let vals: Vec<f64> = (0..20 * 5).map(|i| ((i * 37) % 101) as f64).collect();
        let a = matrix(20, 5, &vals);
        let single = combine_one_step(std::slice::from_ref(&a), DepthMeasure::Erl, 0.05).unwrap();
        let double = combine_one_step(&[a.clone(), a.clone()], DepthMeasure::Erl, 0.05).unwrap();
        assert_eq!(single.p_value, double.p_value);
        assert_eq!(double.details.envelope.unwrap().r.len(), 10);
        let b = matrix(20, 4, &vals[..80]);
        assert!(matches!(combine_one_step(&[a, b], DepthMeasure::Erl, 0.05), Err(Error::MismatchedShapes(_))));
        let c = matrix(19, 5, &vals[..95]);
        let d = matrix(20, 5, &vals);
        assert!(matches!(combine_one_step(&[c, d], DepthMeasure::Erl, 0.05), Err(Error::MismatchedShapes(_))));
    }

    #[test]
    fn two_step_directions() {
        let dclf = ScalarColumn::large_is_extreme(vec![5.0, 1.0, 2.0, 3.0]);
        let erl = invert_depths(&[0.25, 1.0, 0.75, 0.5]);
        assert!(combine_two_step(&[dclf.clone(), erl], 0.05).is_ok());
        let int = ScalarColumn { values: vec![0.0, 1.0, -1.0, 2.0], tag: Extremeness::TwoSided };
        assert!(matches!(combine_two_step(&[dclf, int], 0.05), Err(Error::MixedDirections)));
    }

    proptest! {
        #[test]
        fn two_step_single_column_is_scalar_test(vals in prop::collection::vec(0u8..20, 5..40)) {
            let values: Vec<f64> = vals.iter().map(|&v| v as f64).collect();
            let r = combine_two_step(&[ScalarColumn::large_is_extreme(values.clone())], 0.05).unwrap();
            let expected = mc_p_value(&pointwise_ranks(&values, Sidedness::LargeOnly));
            prop_assert_eq!(r.p_value, expected);
        }
    }
}
