//! Least-squares slope estimation on (log τ, log error) pairs.
//!
//! Coarse grids sit outside the asymptotic regime and pollute the slope,
//! so when the full fit's R² drops below 0.95 the coarsest point is
//! dropped and the reduced fit is used if it explains the data better.

const R_SQUARED_GATE: f64 = 0.95;

#[derive(Clone, Debug)]
pub struct RateFit {
    /// (log τ, log error) pairs actually used by the fit.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub dropped_coarsest: bool,
}

fn ols(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r_squared)
}

impl RateFit {
    /// Fit error ≈ C·τ^p from matched (τ, error) samples. Needs at least
    /// three points with positive values.
    pub fn fit(taus: &[f64], errors: &[f64]) -> Option<RateFit> {
        if taus.len() != errors.len() || taus.len() < 3 {
            return None;
        }
        if taus.iter().any(|&t| t <= 0.0) || errors.iter().any(|&e| e <= 0.0) {
            return None;
        }
        let mut points: Vec<(f64, f64)> = taus
            .iter()
            .zip(errors.iter())
            .map(|(&t, &e)| (t.ln(), e.ln()))
            .collect();
        // Coarsest (largest τ) first, so dropping it is a slice.
        points.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite logs"));

        let (slope, intercept, r_squared) = ols(&points);
        let mut fit = RateFit {
            points: points.clone(),
            slope,
            intercept,
            r_squared,
            dropped_coarsest: false,
        };
        if r_squared < R_SQUARED_GATE && points.len() >= 4 {
            let reduced = &points[1..];
            let (slope_r, intercept_r, r2_r) = ols(reduced);
            if r2_r > r_squared {
                fit = RateFit {
                    points: reduced.to_vec(),
                    slope: slope_r,
                    intercept: intercept_r,
                    r_squared: r2_r,
                    dropped_coarsest: true,
                };
            }
        }
        if !fit.slope.is_finite() {
            return None;
        }
        Some(fit)
    }
}
