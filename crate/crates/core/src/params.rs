use crate::error::{Error, Result};

/// Descriptor and walk parameters.
///
/// Defaults: a 36° sampling angle on 5 disks (a 5 x 10 grid of 50 vertices),
/// density from the 10 nearest neighbors, 30 walks of up to 100 accepted steps,
/// edges kept when traversed in at least a third of the walks, and a path
/// tolerance of 0.1 x the sampling density.
#[derive(Debug, Clone, PartialEq)]
pub struct DsnParams {
    pub phi_deg: f64,
    pub n_disks: usize,
    pub k_density: usize,
    pub walk_repeats: usize,
    pub walk_steps: usize,
    pub connect_fraction: f64,
    pub path_tol_factor: f64,
}

impl Default for DsnParams {
    fn default() -> Self {
        DsnParams {
            phi_deg: 36.0,
            n_disks: 5,
            k_density: 10,
            walk_repeats: 30,
            walk_steps: 100,
            connect_fraction: 1.0 / 3.0,
            path_tol_factor: 0.1,
        }
    }
}

impl DsnParams {
    /// Default parameters for a given angle and disk count, with the step
    /// budget set to twice the vertex count.
    pub fn with_grid(phi_deg: f64, n_disks: usize) -> Self {
        let mut p = DsnParams {
            phi_deg,
            n_disks,
            ..DsnParams::default()
        };
        if let Ok(c) = p.columns() {
            p.walk_steps = 2 * n_disks * c;
        }
        p
    }

    /// Number of angular sectors per disk, 360 / phi.
    pub fn columns(&self) -> Result<usize> {
        if !(self.phi_deg > 0.0) || !self.phi_deg.is_finite() {
            return Err(Error::param(format!("phi must be positive, got {}", self.phi_deg)));
        }
        let c = 360.0 / self.phi_deg;
        let rounded = c.round();
        if (c - rounded).abs() > 1e-9 {
            return Err(Error::param(format!("phi = {} does not divide 360", self.phi_deg)));
        }
        if rounded < 3.0 {
            return Err(Error::param(format!(
                "phi = {} gives fewer than 3 sectors",
                self.phi_deg
            )));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.columns()?;
        if self.n_disks < 2 {
            return Err(Error::param("need at least 2 disks"));
        }
        if self.k_density < 1 {
            return Err(Error::param("k_density must be at least 1"));
        }
        if self.walk_repeats < 1 || self.walk_steps < 1 {
            return Err(Error::param("walk repeats and steps must be at least 1"));
        }
        if !(self.connect_fraction > 0.0 && self.connect_fraction <= 1.0) {
            return Err(Error::param(format!(
                "connect_fraction must lie in (0, 1], got {}",
                self.connect_fraction
            )));
        }
        if !(self.path_tol_factor > 0.0) || !self.path_tol_factor.is_finite() {
            return Err(Error::param(format!(
                "path_tol_factor must be positive, got {}",
                self.path_tol_factor
            )));
        }
        Ok(())
    }

    /// Minimum visit count for an edge to survive into the derived graph.
    pub fn connect_threshold(&self) -> u32 {
        let raw = self.walk_repeats as f64 * self.connect_fraction;
        // 30 * (1/3) must stay 10, not 11
        (raw - 1e-9).ceil().max(1.0) as u32
    }
}
