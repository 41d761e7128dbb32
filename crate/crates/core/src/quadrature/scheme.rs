use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization parameters shared by every radial integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnulusScheme {
    /// Inner radius reached before the adaptive stopping rule is consulted.
    pub eps_min: f64,
    /// Compensator radius: ∇u(x)·z is subtracted on |z| ≤ r_break.
    pub r_break: f64,
    /// Far radius of numerical integration when the kernel tail is not
    /// known in closed form.
    pub r_max: f64,
    /// Ratio of consecutive shell radii.
    pub growth: f64,
    pub nodes_per_annulus: usize,
    /// Number of directions in two dimensions (rounded up to even).
    pub angular_nodes: usize,
    /// Acceptance of principal-value and vague limits: two successive
    /// partials within tol_abs + tol_rel·|value|.
    pub tol_abs: f64,
    pub tol_rel: f64,
    /// Stopping rule of the inner shells: extrapolated remainder below
    /// inner_tol times the absolute mass integrated so far. Relative only, so
    /// scaling the function does not move the stopping shell.
    pub inner_tol: f64,
    /// Shells are never refined below this radius.
    pub inner_floor: f64,
    /// |integrand| above this aborts the integral.
    pub magnitude_cap: f64,
    /// Upper limit on radial panels per direction.
    pub max_panels: usize,
}

impl Default for AnnulusScheme {
    fn default() -> Self {
        Self {
            eps_min: 1e-3,
            r_break: 1.0,
            r_max: 1e8,
            growth: 2.0,
            nodes_per_annulus: 10,
            angular_nodes: 32,
            tol_abs: 1e-8,
            tol_rel: 1e-6,
            inner_tol: 1e-10,
            inner_floor: 1e-30,
            magnitude_cap: 1e300,
            max_panels: 20_000,
        }
    }
}

impl AnnulusScheme {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.eps_min > 0.0 && self.eps_min < self.r_break && self.r_break <= self.r_max) {
            return bad(format!(
                "need 0 < eps_min < r_break <= r_max, got eps_min={}, r_break={}, r_max={}",
                self.eps_min, self.r_break, self.r_max
            ));
        }
        if !(self.growth > 1.0) || !self.growth.is_finite() {
            return bad(format!("growth must exceed 1, got {}", self.growth));
        }
        if self.nodes_per_annulus < 2 || self.angular_nodes < 2 {
            return bad("node counts must be at least 2".into());
        }
        if !(self.tol_abs >= 0.0 && self.tol_rel >= 0.0) || self.tol_abs + self.tol_rel == 0.0 {
            return bad("tolerances must be nonnegative and not both zero".into());
        }
        if !(self.inner_tol > 0.0 && self.inner_tol < 1.0) {
            return bad(format!("inner_tol must lie in (0, 1), got {}", self.inner_tol));
        }
        if !(self.inner_floor > 0.0 && self.inner_floor < self.eps_min) {
            return bad(format!("inner_floor must lie in (0, eps_min), got {}", self.inner_floor));
        }
        if !(self.magnitude_cap > 0.0) || self.max_panels == 0 {
            return bad("magnitude_cap and max_panels must be positive".into());
        }
        Ok(())
    }

    pub fn tolerance(&self, value: f64) -> f64 {
        self.tol_abs + self.tol_rel * value.abs()
    }

    pub fn inner_tolerance(&self, mass: f64) -> f64 {
        self.inner_tol * mass
    }

    pub(crate) fn directions(&self) -> usize {
        self.angular_nodes + self.angular_nodes % 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        AnnulusScheme::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let base = AnnulusScheme::default();
        for s in [
            AnnulusScheme { eps_min: 2.0, ..base },
            AnnulusScheme { growth: 1.0, ..base },
            AnnulusScheme { nodes_per_annulus: 1, ..base },
            AnnulusScheme { r_max: 0.5, ..base },
            AnnulusScheme { tol_abs: 0.0, tol_rel: 0.0, ..base },
            AnnulusScheme { inner_tol: 0.0, ..base },
        ] {
            assert!(s.validate().is_err(), "{s:?}");
        }
    }
}
