//! Open-loop actuation signals, one per muscle group, each valued in `[0, 1]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Affine map from the unit box coordinate `x in [-1, 1]` (clamped).
    #[inline]
    pub fn from_unit(&self, x: f64) -> f64 {
        let x = crate::encoding::box_clamp(x);
        self.lo + 0.5 * (x + 1.0) * (self.hi - self.lo)
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuationKind {
    /// `u_k(t) = sin^2(pi f_k t + phase_k)`; parameters are the group
    /// frequencies followed by the phase offsets of groups 2.. relative to group 1.
    SquaredPeriodic,
    /// `u_k(t) = A_k exp(-(t - t_k)^2 / (2 w_k^2))`; parameters `(t_k, A_k, w_k)` per group.
    GaussianPulse,
    /// Piecewise-constant knot values over `[0, schedule_duration)`.
    Schedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationSpec {
    pub kind: ActuationKind,
    pub groups: usize,
    #[serde(default = "defaults::frequency")]
    pub frequency: Bounds,
    #[serde(default = "defaults::phase")]
    pub phase: Bounds,
    #[serde(default = "defaults::peak_time")]
    pub peak_time: Bounds,
    #[serde(default = "defaults::amplitude")]
    pub amplitude: Bounds,
    #[serde(default = "defaults::width")]
    pub width: Bounds,
    #[serde(default = "defaults::knots")]
    pub knots: usize,
    #[serde(default = "defaults::schedule_duration")]
    pub schedule_duration: f64,
}

mod defaults {
    use super::Bounds;

    pub fn frequency() -> Bounds {
        Bounds::new(0.5, 4.0)
    }
    pub fn phase() -> Bounds {
        Bounds::new(0.0, std::f64::consts::PI)
    }
    pub fn peak_time() -> Bounds {
        Bounds::new(0.02, 0.3)
    }
    pub fn amplitude() -> Bounds {
        Bounds::new(0.0, 1.0)
    }
    pub fn width() -> Bounds {
        Bounds::new(0.005, 0.08)
    }
    pub fn knots() -> usize {
        4
    }
    pub fn schedule_duration() -> f64 {
        1.0
    }
}

impl ActuationSpec {
    pub fn new(kind: ActuationKind, groups: usize) -> Self {
        Self {
            kind,
            groups,
            frequency: defaults::frequency(),
            phase: defaults::phase(),
            peak_time: defaults::peak_time(),
            amplitude: defaults::amplitude(),
            width: defaults::width(),
            knots: defaults::knots(),
            schedule_duration: defaults::schedule_duration(),
        }
    }

    /// No muscle groups, no parameters.
    pub fn none() -> Self {
        Self::new(ActuationKind::GaussianPulse, 0)
    }

    pub fn param_count(&self) -> usize {
        if self.groups == 0 {
            return 0;
        }
        match self.kind {
            ActuationKind::SquaredPeriodic => 2 * self.groups - 1,
            ActuationKind::GaussianPulse => 3 * self.groups,
            ActuationKind::Schedule => self.knots * self.groups,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [
            ("frequency", self.frequency),
            ("phase", self.phase),
            ("peak_time", self.peak_time),
            ("amplitude", self.amplitude),
            ("width", self.width),
        ] {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo <= b.hi) {
                return Err(invalid_arg(format!("actuation {name} bounds are invalid")));
            }
        }
        if self.width.lo <= 0.0 {
            return Err(invalid_arg("pulse width lower bound must be positive"));
        }
        if self.amplitude.lo < 0.0 || self.amplitude.hi > 1.0 {
            return Err(invalid_arg("amplitude bounds must lie in [0, 1]"));
        }
        if self.kind == ActuationKind::Schedule && (self.knots == 0 || !(self.schedule_duration > 0.0)) {
            return Err(invalid_arg("schedules need at least one knot and a positive duration"));
        }
        Ok(())
    }

    /// Maps unit-box coordinates to physical parameters.
    pub fn decode(&self, raw: &[f64]) -> Actuation {
        assert_eq!(raw.len(), self.param_count(), "actuation block length mismatch");
        let g = self.groups;
        let params = match self.kind {
            ActuationKind::SquaredPeriodic => raw
                .iter()
                .enumerate()
                .map(|(i, &x)| if i < g { self.frequency.from_unit(x) } else { self.phase.from_unit(x) })
                .collect(),
            ActuationKind::GaussianPulse => raw
                .chunks_exact(3)
                .flat_map(|p| {
                    [self.peak_time.from_unit(p[0]), self.amplitude.from_unit(p[1]), self.width.from_unit(p[2])]
                })
                .collect(),
            ActuationKind::Schedule => raw.iter().map(|&x| self.amplitude.from_unit(x)).collect(),
        };
        Actuation {
            kind: self.kind,
            groups: g,
            params,
            schedule_duration: self.schedule_duration,
        }
    }
}

/// Physical actuation parameters ready for evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Actuation {
    pub kind: ActuationKind,
    pub groups: usize,
    pub params: Vec<f64>,
    pub schedule_duration: f64,
}

impl Actuation {
    pub fn none() -> Self {
        Self { kind: ActuationKind::GaussianPulse, groups: 0, params: Vec::new(), schedule_duration: 1.0 }
    }

    pub fn new(kind: ActuationKind, groups: usize, params: Vec<f64>) -> Result<Self> {
        let spec = ActuationSpec::new(kind, groups);
        if kind != ActuationKind::Schedule && params.len() != spec.param_count() {
            return Err(invalid_arg("actuation parameter count mismatch"));
        }
        if kind == ActuationKind::Schedule && groups > 0 && !params.len().is_multiple_of(groups) {
            return Err(invalid_arg("schedule knots must divide evenly among groups"));
        }
        Ok(Self { kind, groups, params, schedule_duration: 1.0 })
    }

    /// Per-group parameter tuples, in the layout order of `params`.
    pub fn group_params(&self) -> Vec<Vec<f64>> {
        match self.kind {
            ActuationKind::SquaredPeriodic => (0..self.groups)
                .map(|k| {
                    let phase = if k == 0 { 0.0 } else { self.params[self.groups + k - 1] };
                    vec![self.params[k], phase]
                })
                .collect(),
            ActuationKind::GaussianPulse => self.params.chunks_exact(3).map(|c| c.to_vec()).collect(),
            ActuationKind::Schedule => {
                let n = self.params.len() / self.groups.max(1);
                self.params.chunks_exact(n.max(1)).map(|c| c.to_vec()).collect()
            }
        }
    }

    /// Writes `u_k(t)` for every group into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.groups);
        match self.kind {
            ActuationKind::SquaredPeriodic => {
                for (k, u) in out.iter_mut().enumerate() {
                    let f = self.params[k];
                    let phase = if k == 0 { 0.0 } else { self.params[self.groups + k - 1] };
                    let s = (PI * f * t + phase).sin();
                    *u = s * s;
                }
            }
            ActuationKind::GaussianPulse => {
                for (k, u) in out.iter_mut().enumerate() {
                    let (peak, amp, width) = (self.params[3 * k], self.params[3 * k + 1], self.params[3 * k + 2]);
                    let z = (t - peak) / width;
                    *u = (amp * (-0.5 * z * z).exp()).clamp(0.0, 1.0);
                }
            }
            ActuationKind::Schedule => {
                let knots = self.params.len() / self.groups.max(1);
                let slot = ((t / self.schedule_duration) * knots as f64).floor();
                let slot = if slot.is_finite() { (slot.max(0.0) as usize).min(knots - 1) } else { 0 };
                for (k, u) in out.iter_mut().enumerate() {
                    *u = self.params[k * knots + slot].clamp(0.0, 1.0);
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.groups];
        self.eval_into(t, &mut out);
        out
    }
}

/// Evaluates the per-group signals for physical parameters `params` at time `t`.
pub fn eval_actuation(spec: &ActuationSpec, params: &[f64], t: f64) -> Result<Vec<f64>> {
    if params.len() != spec.param_count() {
        return Err(invalid_arg("actuation parameter count mismatch"));
    }
    if !(t >= 0.0) {
        return Err(invalid_arg("actuation time must be non-negative"));
    }
    let act = Actuation {
        kind: spec.kind,
        groups: spec.groups,
        params: params.to_vec(),
        schedule_duration: spec.schedule_duration,
    };
    Ok(act.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn param_counts() {
        assert_eq!(ActuationSpec::new(ActuationKind::SquaredPeriodic, 2).param_count(), 3);
        assert_eq!(ActuationSpec::new(ActuationKind::GaussianPulse, 1).param_count(), 3);
        let mut s = ActuationSpec::new(ActuationKind::Schedule, 2);
        s.knots = 5;
        assert_eq!(s.param_count(), 10);
        assert_eq!(ActuationSpec::none().param_count(), 0);
    }

    #[test]
    fn pulse_values() {
        let spec = ActuationSpec::new(ActuationKind::GaussianPulse, 1);
        let p = [0.1, 0.8, 0.02];
        assert_abs_diff_eq!(eval_actuation(&spec, &p, 0.1).unwrap()[0], 0.8, epsilon = 1e-15);
        for t in [0.08, 0.12] {
            assert_abs_diff_eq!(
                eval_actuation(&spec, &p, t).unwrap()[0],
                0.8 * (-0.5f64).exp(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn squared_periodic_values() {
        let spec = ActuationSpec::new(ActuationKind::SquaredPeriodic, 2);
        let u = eval_actuation(&spec, &[1.0, 2.0, 0.0], 0.0).unwrap();
        assert_eq!(u, vec![0.0, 0.0]);
        // Quarter of a sin^2 period at f = 1 Hz.
        let u = eval_actuation(&spec, &[1.0, 1.0, PI / 2.0], 0.5).unwrap();
        assert_abs_diff_eq!(u[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn signals_stay_in_unit_interval() {
        let spec = ActuationSpec::new(ActuationKind::SquaredPeriodic, 2);
        for i in 0..200 {
            let t = i as f64 * 0.013;
            for u in eval_actuation(&spec, &[3.3, 0.7, 1.1], t).unwrap() {
                assert!((0.0..=1.0).contains(&u));
            }
        }
    }

    #[test]
    fn decode_maps_box_to_bounds() {
        let spec = ActuationSpec::new(ActuationKind::GaussianPulse, 1);
        let mid = spec.decode(&[0.0, 0.0, 0.0]);
        let want = [spec.peak_time.midpoint(), spec.amplitude.midpoint(), spec.width.midpoint()];
        for (got, want) in mid.params.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        let lo = spec.decode(&[-5.0, -1.0, f64::NAN]);
        assert_eq!(lo.params[0], spec.peak_time.lo);
        assert_eq!(lo.params[1], 0.0);
        assert!((lo.params[2] - spec.width.midpoint()).abs() < 1e-15);
    }

    #[test]
    fn schedule_is_piecewise_constant() {
        let mut spec = ActuationSpec::new(ActuationKind::Schedule, 1);
        spec.knots = 2;
        let act = spec.decode(&[-1.0, 1.0]);
        assert_eq!(act.eval(0.1), vec![0.0]);
        assert_eq!(act.eval(0.6), vec![1.0]);
        assert_eq!(act.eval(10.0), vec![1.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = ActuationSpec::new(ActuationKind::GaussianPulse, 1);
        assert!(eval_actuation(&spec, &[0.1, 0.5], 0.0).is_err());
        assert!(eval_actuation(&spec, &[0.1, 0.5, 0.01], -1.0).is_err());
    }
}
