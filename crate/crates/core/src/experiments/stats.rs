//! Welch's unequal-variance t-test.

use statrs::function::beta::checked_beta_reg;

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `df`
/// degrees of freedom, `I_x(df/2, 1/2)` with `x = df / (df + t^2)`.
pub fn student_t_sf(t: f64, df: f64) -> Result<f64, ExperimentError> {
    if df.is_nan() || df <= 0.0 || t.is_nan() {
        return Err(ExperimentError::InvalidInput(format!(
            "student t tail needs df > 0 and a numeric t, got t = {t}, df = {df}"
        )));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let x = df / (df + t * t);
    let p = checked_beta_reg(df / 2.0, 0.5, x)
        .map_err(|e| ExperimentError::InvalidInput(format!("incomplete beta failed: {e}")))?;
    Ok(p.clamp(0.0, 1.0))
}

/// Welch's t-test of `a` against `b`.
///
/// When both samples have zero variance the statistic is undefined; the
/// result is then `t = ±inf, p = 0` for different means and `t = 0, p = 1`
/// for equal means, with `df = n_a + n_b - 2`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, ExperimentError> {
    let shortest = a.len().min(b.len());
    if shortest < 2 {
        return Err(ExperimentError::InsufficientSample(shortest));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(ExperimentError::InvalidInput("samples must be finite".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (sa, sb) = (sample_variance(a) / na, sample_variance(b) / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if ma == mb {
            TTestResult { t: 0.0, df, p: 1.0 }
        } else {
            let t = if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY };
            TTestResult { t, df, p: 0.0 }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TTestResult {
        t,
        df,
        p: student_t_sf(t, df)?,
    })
}
