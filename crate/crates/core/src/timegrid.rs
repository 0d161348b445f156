//! Graded temporal partitions `t_j = (j/J)^σ T` of `(0, T)`.

use crate::error::{ensure_arg, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    final_time: f64,
    sigma: f64,
    t: Vec<f64>,
    tau: Vec<f64>,
}

impl TimeGrid {
    /// Grid with `slabs` intervals and grading exponent `sigma >= 1`.
    pub fn graded(slabs: usize, sigma: f64, final_time: f64) -> Result<Self> {
        ensure_arg!(slabs >= 1, "a time grid needs at least one slab");
        ensure_arg!(sigma >= 1.0 && sigma.is_finite(), "grading exponent must be >= 1, got {sigma}");
        ensure_arg!(final_time > 0.0 && final_time.is_finite(), "final time must be positive, got {final_time}");
        let jf = slabs as f64;
        let mut t: Vec<f64> = (0..=slabs)
            .map(|j| {
                if j == 0 {
                    0.0
                } else {
                    final_time * (sigma * (j as f64 / jf).ln()).exp()
                }
            })
            .collect();
        t[slabs] = final_time;
        let tau = t.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self { final_time, sigma, t, tau })
    }

    pub fn uniform(slabs: usize, final_time: f64) -> Result<Self> {
        Self::graded(slabs, 1.0, final_time)
    }

    /// Number of slabs `J`.
    pub fn slabs(&self) -> usize {
        self.tau.len()
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_uniform(&self) -> bool {
        self.sigma == 1.0
    }

    /// Breakpoints `t_0 .. t_J`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.t
    }

    /// Slab lengths; `lengths()[j-1]` is `τ_j`.
    pub fn lengths(&self) -> &[f64] {
        &self.tau
    }

    /// Left endpoint of slab `j` (1-based).
    pub fn left(&self, j: usize) -> f64 {
        self.t[j - 1]
    }

    /// Right endpoint of slab `j` (1-based).
    pub fn right(&self, j: usize) -> f64 {
        self.t[j]
    }

    /// Length of slab `j` (1-based).
    pub fn tau(&self, j: usize) -> f64 {
        self.tau[j - 1]
    }

    /// Slab whose closure contains `t`, preferring the slab to the left at
    /// breakpoints. Returns `None` outside `(0, T]`.
    pub fn slab_of(&self, t: f64) -> Option<usize> {
        if !(t > 0.0 && t <= self.final_time) {
            return None;
        }
        let idx = self.t.partition_point(|&x| x < t);
        Some(idx.clamp(1, self.slabs()))
    }

    /// Whether `t` coincides with a breakpoint up to rounding.
    pub fn is_breakpoint(&self, t: f64) -> bool {
        let tol = 1e-13 * self.final_time;
        self.t.iter().any(|&x| (x - t).abs() <= tol)
    }
}

/// Critical grading exponent `(2m + 1 - γ) / (2r - γ)`.
///
/// A result within a few ulps of a 12-digit decimal is returned as that
/// decimal, so decimal inputs such as `r = 1.6`, `γ = 1.4` give exactly 2.
pub fn sigma_star(m: usize, r: f64, gamma: f64) -> Result<f64> {
    ensure_arg!(m >= 1, "temporal degree must be positive");
    ensure_arg!(gamma > 1.0 && gamma < 2.0, "gamma must lie in (1, 2), got {gamma}");
    ensure_arg!(2.0 * r > gamma, "sigma_star requires 2r > gamma (r = {r}, gamma = {gamma})");
    let raw = (2.0 * m as f64 + 1.0 - gamma) / (2.0 * r - gamma);
    let scale = 10f64.powi(11 - raw.abs().log10().floor() as i32);
    let snapped = (raw * scale).round() / scale;
    Ok(if (snapped - raw).abs() <= 8.0 * f64::EPSILON * raw.abs() { snapped } else { raw })
}
