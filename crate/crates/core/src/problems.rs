//! Manufactured solutions and a scalar reference solver.

use crate::error::{ensure_arg, Result};
use crate::quadrature::gamma as gamma_fn;
use crate::spacefem::{load_vector, FeSpace};
use crate::stepper::{Forcing, TimeProfile};

/// `φ(x, y) = x y (1 − x)(1 − y)`.
pub fn phi(x: f64, y: f64) -> f64 {
    x * y * (1.0 - x) * (1.0 - y)
}

pub fn grad_phi(x: f64, y: f64) -> [f64; 2] {
    [(1.0 - 2.0 * x) * y * (1.0 - y), (1.0 - 2.0 * y) * x * (1.0 - x)]
}

pub fn laplacian_phi(x: f64, y: f64) -> f64 {
    -2.0 * (x * (1.0 - x) + y * (1.0 - y))
}

/// `u(x, t) = t^r φ(x)` with `u₀ = u₁ = 0` and the matching forcing
/// `f = Γ(r+1)/Γ(r+1−γ) t^{r−γ} φ − t^r Δφ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem {
    pub gamma: f64,
    pub r: f64,
    pub final_time: f64,
}

pub fn manufactured_problem(gamma: f64, r: f64, final_time: f64) -> Result<ManufacturedProblem> {
    ensure_arg!(gamma > 1.0 && gamma < 2.0, "γ must lie in (1, 2), got {gamma}");
    ensure_arg!(r > 1.0, "temporal exponent r must exceed 1, got {r}");
    ensure_arg!(r + 1.0 - gamma > 0.0, "r + 1 − γ must be positive");
    ensure_arg!(final_time > 0.0 && final_time.is_finite(), "final time must be positive");
    Ok(ManufacturedProblem { gamma, r, final_time })
}

impl ManufacturedProblem {
    /// `Γ(r+1)/Γ(r+1−γ)`, so that `D^γ t^r` equals this times `t^{r−γ}`.
    pub fn forcing_coefficient(&self) -> f64 {
        gamma_fn(self.r + 1.0) / gamma_fn(self.r + 1.0 - self.gamma)
    }

    pub fn u(&self, x: f64, y: f64, t: f64) -> f64 {
        t.powf(self.r) * phi(x, y)
    }

    pub fn grad_u(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let s = t.powf(self.r);
        grad_phi(x, y).map(|g| s * g)
    }

    pub fn u_t(&self, x: f64, y: f64, t: f64) -> f64 {
        self.r * t.powf(self.r - 1.0) * phi(x, y)
    }

    pub fn u0(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }

    pub fn u1(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }

    /// Defined for `t > 0`.
    pub fn f(&self, x: f64, y: f64, t: f64) -> f64 {
        self.forcing_coefficient() * t.powf(self.r - self.gamma) * phi(x, y) - t.powf(self.r) * laplacian_phi(x, y)
    }

    /// Temporal factors multiplying `φ` and `Δφ` in `f`.
    pub fn time_profiles(&self) -> (TimeProfile, TimeProfile) {
        let p1 = TimeProfile::power(self.forcing_coefficient(), self.r - self.gamma).expect("r − γ > −1");
        let p2 = TimeProfile::power(-1.0, self.r).expect("r > 0");
        (p1, p2)
    }

    /// Forcing in separated form with load vectors assembled on `space`.
    pub fn forcing(&self, space: &FeSpace) -> Forcing {
        let (p1, p2) = self.time_profiles();
        Forcing::none()
            .with_term(p1, load_vector(space, phi))
            .with_term(p2, load_vector(space, laplacian_phi))
    }
}

/// Values of the solution of
/// `y(t) = c₀ + c₁ t + (1/Γ(γ)) ∫_0^t (t − s)^{γ−1} (g(s) − λ y(s)) ds`
/// at `t_eval`.
///
/// Product trapezoidal integration on `steps` uniform intervals of
/// `[0, max t_eval]`; values between nodes are interpolated linearly. `g`
/// is sampled at the nodes, including `t = 0`.
pub fn scalar_ode_reference(
    gamma: f64,
    lambda: f64,
    c0: f64,
    c1: f64,
    g: impl Fn(f64) -> f64,
    t_eval: &[f64],
    steps: usize,
) -> Result<Vec<f64>> {
    ensure_arg!(gamma > 0.0 && gamma < 2.0, "γ must lie in (0, 2), got {gamma}");
    ensure_arg!(steps >= 16, "at least 16 steps are required, got {steps}");
    ensure_arg!(t_eval.iter().all(|&t| t >= 0.0 && t.is_finite()), "evaluation times must be nonnegative");
    let t_max = t_eval.iter().cloned().fold(0.0, f64::max);
    if t_max == 0.0 {
        return Ok(vec![c0; t_eval.len()]);
    }
    let h = t_max / steps as f64;
    let scale = h.powf(gamma) / gamma_fn(gamma + 2.0);
    let gp1 = gamma + 1.0;
    // weight of the interior node at distance d = n - k ≥ 1
    let inner: Vec<f64> = (0..=steps)
        .map(|d| {
            if d == 0 {
                1.0
            } else {
                let d = d as f64;
                (d + 1.0).powf(gp1) - 2.0 * d.powf(gp1) + (d - 1.0).powf(gp1)
            }
        })
        .collect();
    let mut y = vec![c0; steps + 1];
    let mut rhs = vec![0.0; steps + 1];
    for (k, r) in rhs.iter_mut().enumerate() {
        *r = g(k as f64 * h);
    }
    for n in 1..=steps {
        let nf = n as f64;
        let w0 = (nf - 1.0).powf(gp1) - (nf - 1.0 - gamma) * nf.powf(gamma);
        let mut s = w0 * (rhs[0] - lambda * y[0]);
        for k in 1..n {
            s += inner[n - k] * (rhs[k] - lambda * y[k]);
        }
        let known = c0 + c1 * nf * h + scale * (s + rhs[n]);
        y[n] = known / (1.0 + scale * lambda);
    }
    Ok(t_eval
        .iter()
        .map(|&t| {
            let pos = (t / h).min(steps as f64);
            let k = (pos.floor() as usize).min(steps - 1);
            let frac = pos - k as f64;
            (1.0 - frac) * y[k] + frac * y[k + 1]
        })
        .collect())
}
