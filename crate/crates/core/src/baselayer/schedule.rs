use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-beta diffusion schedule with cumulative signal retention.
///
/// Steps are 1-based: `alpha_bar(t)` for `t` in `1..=num_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    beta_start: f64,
    beta_end: f64,
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

/// On-disk form; the betas are re-derived on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(rename = "T")]
    pub num_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            num_steps: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
        }
    }
}

pub fn build_schedule(num_steps: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if num_steps == 0 {
        return Err(Error::param("schedule needs at least one step"));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::param(format!(
            "schedule betas must satisfy 0 < start <= end < 1, got {beta_start}..{beta_end}"
        )));
    }
    let betas: Vec<f64> = if num_steps == 1 {
        vec![beta_start]
    } else {
        let span = (num_steps - 1) as f64;
        (0..num_steps)
            .map(|i| beta_start + (beta_end - beta_start) * i as f64 / span)
            .collect()
    };
    let mut alpha_bars = Vec::with_capacity(num_steps);
    let mut prod = 1.0;
    for beta in &betas {
        prod *= 1.0 - beta;
        alpha_bars.push(prod);
    }
    let schedule = NoiseSchedule {
        beta_start,
        beta_end,
        betas,
        alpha_bars,
    };
    schedule.validate()?;
    Ok(schedule)
}

impl NoiseSchedule {
    pub fn from_spec(spec: &ScheduleSpec) -> Result<Self> {
        build_schedule(spec.num_steps, spec.beta_start, spec.beta_end)
    }

    pub fn spec(&self) -> ScheduleSpec {
        ScheduleSpec {
            num_steps: self.betas.len(),
            beta_start: self.beta_start,
            beta_end: self.beta_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(Error::param("schedule beta outside (0, 1)"));
        }
        if self.alpha_bars.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::param("schedule alpha_bar outside (0, 1)"));
        }
        if self.alpha_bars.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("schedule alpha_bar not strictly decreasing"));
        }
        Ok(())
    }

    pub fn num_steps(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.num_steps() {
            return Err(Error::param(format!("timestep {t} outside 1..={}", self.num_steps())));
        }
        Ok(self.alpha_bars[t - 1])
    }
}
