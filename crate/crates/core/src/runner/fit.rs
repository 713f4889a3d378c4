use crate::error::{Error, Result};

/// Power law `value = prefactor · N^exponent` fitted in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ln value` against `ln N`. Needs at least three
/// positive points with at least two distinct `N`.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} points (need at least 3)", points.len())));
    }
    if let Some((n, v)) = points
        .iter()
        .find(|(n, v)| !(*n > 0.0 && *v > 0.0 && n.is_finite() && v.is_finite()))
    {
        return Err(Error::DegenerateFit(format!("non-positive or non-finite point ({n}, {v})")));
    }
    let k = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(n, v)| (n.ln(), v.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateFit("all N values coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ScalingFit {
        exponent: slope,
        prefactor: (my - slope * mx).exp(),
        r_squared,
    })
}

/// Least-squares line `y = intercept + slope·x` with its `r²`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} points (need at least 3)", points.len())));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0 && sxx.is_finite() && syy.is_finite()) {
        return Err(Error::DegenerateFit("abscissae coincide or are not finite".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, my - slope * mx, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [10.0, 100.0, 1000.0, 5000.0].iter().map(|&n: &f64| (n, 7.0 * n.powf(-0.25))).collect();
        let f = scaling_fit(&pts).unwrap();
        assert!((f.exponent + 0.25).abs() < 1e-12);
        assert!((f.prefactor - 7.0).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(scaling_fit(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(scaling_fit(&[(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)]).is_err());
        assert!(scaling_fit(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn line_fit() {
        let (s, c, r2) = linear_fit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
