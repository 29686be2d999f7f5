//! Numerical tolerances and discriminator bands. Every field can be
//! overridden from a flat `key = value` file; the effective values are echoed
//! into reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Backward residual |phi(w_{n+1}) - w_n| accepted, relative to max(1, |w_n|).
    pub residual_tol: f64,
    pub newton_max_iter: usize,
    /// Default bound on backward pseudo-hyperbolic steps.
    pub step_bound: f64,
    /// Levels the backward search may back up before declaring failure.
    pub backtrack_levels: usize,
    /// Points stored in full; beyond this orbits are thinned.
    pub full_storage: usize,
    /// Contiguous tail kept after thinning.
    pub tail_window: usize,

    /// Forward iterations used by the classifier (rounded down to a power of two).
    pub forward_budget: usize,
    /// Backward steps per BISBS attempt.
    pub backward_budget: usize,
    /// Step limit above which s_inf counts as positive.
    pub step_positive: f64,
    /// s_N below which s_inf counts as zero.
    pub step_zero: f64,
    /// Dyadic ratio separating a settled sequence (above) from a decaying one.
    pub dyadic_ratio: f64,
    /// Relative growth of the height over a doubling treated as finite.
    pub height_growth_finite: f64,
    /// Looser growth band accepted when the increments are also shrinking.
    pub height_growth_loose: f64,
    /// Relative growth at both last doublings that marks an unbounded height.
    pub height_growth_infinite: f64,
    /// Relative backward height decrease treated as a positive limit.
    pub height_decay_positive: f64,
    /// Relative backward height decrease at both doublings that marks a zero limit.
    pub height_decay_zero: f64,
    /// Distance of the boundary multiplier from 1 accepted as parabolic.
    pub parabolic_tol: f64,
    /// |1 - cayley(z)| below which a half-plane orbit is taken to tend to infinity.
    pub infinity_cutoff: f64,
    /// Disk gap 1 - |z| at which a boundary-bound orbit is stopped.
    pub boundary_stop: f64,
    /// Interior fixed point: |z_N - z_{N-1}| below this counts as converged.
    pub interior_convergence: f64,
    /// Distance between orbit limits above which they disagree.
    pub limit_agreement: f64,

    pub nontangential_delta: f64,
    pub angle_oscillation: f64,
    /// Slack on the multiplier bound (1 + a) / (1 - a).
    pub multiplier_slack: f64,

    /// Intermediate modulus above which a renormalized sample is dropped.
    pub overflow: f64,
    pub grid_pitch: f64,
    pub grid_re_min: f64,
    pub grid_re_max: f64,
    pub grid_im_min: f64,
    pub grid_im_max: f64,
    pub lateral_oscillation: f64,
    pub lateral_epsilon: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            newton_max_iter: 100,
            step_bound: 0.999,
            backtrack_levels: 3,
            full_storage: 1_000_000,
            tail_window: 4096,
            forward_budget: 1 << 18,
            backward_budget: 1 << 16,
            step_positive: 1e-3,
            step_zero: 1e-3,
            dyadic_ratio: 0.9,
            height_growth_finite: 1e-3,
            height_growth_loose: 1e-2,
            height_growth_infinite: 1e-2,
            height_decay_positive: 1e-3,
            height_decay_zero: 0.1,
            parabolic_tol: 1e-2,
            infinity_cutoff: 0.05,
            boundary_stop: 1e-9,
            interior_convergence: 1e-12,
            limit_agreement: 1e-6,
            nontangential_delta: 1e-3,
            angle_oscillation: 1e-2,
            multiplier_slack: 1e-3,
            overflow: 1e15,
            grid_pitch: 1.0 / 32.0,
            grid_re_min: -1.0,
            grid_re_max: 1.0,
            grid_im_min: 0.5,
            grid_im_max: 1.5,
            lateral_oscillation: 1e-3,
            lateral_epsilon: 0.5,
        }
    }
}

impl Tolerances {
    /// Applies `key = value` lines (blank lines and `#` comments ignored).
    pub fn with_overrides(&self, text: &str) -> Result<Self> {
        let mut value = serde_json::to_value(self).expect("tolerances serialize");
        let map = value.as_object_mut().expect("tolerances are a struct");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line.split_once('=').ok_or_else(|| {
                Error::usage(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let (key, val) = (key.trim(), val.trim());
            let slot = map.get_mut(key).ok_or_else(|| {
                Error::usage(format!("config line {}: unknown key '{key}'", lineno + 1))
            })?;
            let bad = || {
                Error::usage(format!(
                    "config line {}: bad value '{val}' for {key}",
                    lineno + 1
                ))
            };
            *slot = if slot.is_u64() {
                serde_json::Value::from(val.parse::<u64>().map_err(|_| bad())?)
            } else {
                let x: f64 = val.parse().map_err(|_| bad())?;
                serde_json::Number::from_f64(x).ok_or_else(bad)?.into()
            };
        }
        let out: Tolerances =
            serde_json::from_value(value).map_err(|e| Error::usage(e.to_string()))?;
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_bound > 0.0 && self.step_bound < 1.0) {
            return Err(Error::domain(format!(
                "step_bound {} not in (0, 1)",
                self.step_bound
            )));
        }
        if self.grid_pitch <= 0.0
            || self.grid_re_max < self.grid_re_min
            || self.grid_im_max < self.grid_im_min
        {
            return Err(Error::domain("empty conjugation grid"));
        }
        if self.grid_im_min <= 0.0 {
            return Err(Error::domain(
                "conjugation grid must lie in the upper half-plane",
            ));
        }
        if self.forward_budget < 16 || self.backward_budget < 16 {
            return Err(Error::domain("iteration budgets must be at least 16"));
        }
        if self.tail_window < 16 {
            return Err(Error::domain("tail_window must be at least 16"));
        }
        Ok(())
    }
}
