use crate::error::{Error, Result};

/// Ordinary least squares of `y` on `x` with intercept.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub n: usize,
}

pub(crate) fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewPoints { found: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::NoRegressorSpread);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let e = yi - intercept - slope * xi;
            e * e
        })
        .sum();
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 - 0.75 * v).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope + 0.75).abs() < 1e-12);
        assert!((fit.intercept - 2.5).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stderr_matches_textbook_case() {
        // x = 1..5, y = (1, 3, 2, 5, 4): slope 0.8, SSE 3.6, Sxx 10
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope - 0.8).abs() < 1e-12);
        assert!((fit.intercept - 0.6).abs() < 1e-12);
        assert!((fit.slope_stderr - (3.6f64 / 3.0 / 10.0).sqrt()).abs() < 1e-12);
        assert!((fit.r_squared - 0.64).abs() < 1e-12);
    }

    #[test]
    fn constant_regressor_rejected() {
        assert!(matches!(
            ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::NoRegressorSpread)
        ));
        assert!(matches!(
            ols(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::TooFewPoints { found: 2 })
        ));
    }
}
