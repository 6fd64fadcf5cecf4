//! Residual reports shared by the algebra, operator and structure checks.

use serde::{Deserialize, Serialize};

/// Residual of one identity, optionally across several resolutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_name: String,
    /// Residual at the finest resolution (or the single exact residual).
    pub max_residual: f64,
    pub samples: usize,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resolutions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spacings: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<f64>,
    /// Least-squares slope of log residual against log h.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_order: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairwise_orders: Vec<f64>,
    pub threshold: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    /// Set when every residual lies below the rounding floor given to
    /// [`IdentityReport::convergence_with_floor`]: the identity holds exactly on the lattice.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exact_on_lattice: bool,
}

/// Tolerance of the exact-algebra identities.
pub const EXACT_TOLERANCE: f64 = 1e-13;

impl IdentityReport {
    pub fn exact(name: &str, residual: f64, samples: usize, seed: Option<u64>) -> Self {
        IdentityReport {
            identity_name: name.to_string(),
            max_residual: residual,
            samples,
            seed,
            resolutions: Vec::new(),
            spacings: Vec::new(),
            residuals: Vec::new(),
            observed_order: None,
            pairwise_orders: Vec::new(),
            threshold: EXACT_TOLERANCE,
            passed: residual.is_finite() && residual <= EXACT_TOLERANCE,
            mask: None,
            exact_on_lattice: false,
        }
    }

    /// Convergence report; passes when the observed order reaches `min_order`.
    pub fn convergence(name: &str, resolutions: &[usize], spacings: &[f64], residuals: &[f64], min_order: f64) -> Self {
        assert_eq!(spacings.len(), residuals.len());
        let order = if residuals.len() >= 2 {
            Some(observed_order(spacings, residuals))
        } else {
            None
        };
        let pairwise = pairwise_orders(spacings, residuals);
        let finite = residuals.iter().all(|r| r.is_finite());
        IdentityReport {
            identity_name: name.to_string(),
            max_residual: residuals.last().copied().unwrap_or(f64::NAN),
            samples: residuals.len(),
            seed: None,
            resolutions: resolutions.to_vec(),
            spacings: spacings.to_vec(),
            residuals: residuals.to_vec(),
            observed_order: order,
            pairwise_orders: pairwise,
            threshold: min_order,
            passed: finite && order.is_some_and(|p| p >= min_order),
            mask: None,
            exact_on_lattice: false,
        }
    }

    /// As [`IdentityReport::convergence`], but also passes when every residual is at most `floor`.
    pub fn convergence_with_floor(name: &str, resolutions: &[usize], spacings: &[f64], residuals: &[f64], min_order: f64, floor: f64) -> Self {
        let mut r = Self::convergence(name, resolutions, spacings, residuals, min_order);
        if residuals.iter().all(|v| v.is_finite() && *v <= floor) {
            r.exact_on_lattice = true;
            r.passed = true;
        }
        r
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_mask(mut self, mask: impl Into<String>) -> Self {
        self.mask = Some(mask.into());
        self
    }
}

/// Least-squares slope of `log e` against `log h`.
pub fn observed_order(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    least_squares_slope(&x, &y).0
}

/// Orders between consecutive resolutions.
pub fn pairwise_orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(hh, ee)| (ee[0] / ee[1]).ln() / (hh[0] / hh[1]).ln())
        .collect()
}

/// Returns `(slope, intercept, rms residual)` of the line fit `y = a x + b`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_floor() {
        let r = IdentityReport::convergence_with_floor("x", &[16, 32], &[0.2, 0.1], &[1e-15, 1e-14], 1.8, 1e-10);
        assert!(r.passed && r.exact_on_lattice);
        let r = IdentityReport::convergence_with_floor("x", &[16, 32], &[0.2, 0.1], &[1e-3, 1e-14], 1.8, 1e-10);
        assert!(r.passed && !r.exact_on_lattice);
        let r = IdentityReport::convergence_with_floor("x", &[16, 32], &[0.2, 0.1], &[1e-3, 9e-4], 1.8, 1e-10);
        assert!(!r.passed);
    }

    #[test]
    fn order_of_planted_power_law() {
        let h = [0.4, 0.2, 0.1];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(4)).collect();
        assert!((observed_order(&h, &e) - 4.0).abs() < 1e-12);
        for p in pairwise_orders(&h, &e) {
            assert!((p - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn convergence_report_pass_flag() {
        let r = IdentityReport::convergence("x", &[16, 32], &[0.2, 0.1], &[1e-3, 1e-4], 1.8);
        assert!(r.passed);
        let r = IdentityReport::convergence("x", &[16, 32], &[0.2, 0.1], &[1e-3, 9e-4], 1.8);
        assert!(!r.passed);
    }
}
