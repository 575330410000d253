use crate::error::{Error, Result};

/// Fields below this magnitude are treated as zero in exponential schedules.
pub const EXP_CUTOFF: f64 = 1e-4;
/// Longest slice used for analytic schedules.
pub const MAX_SLICE: f64 = 0.01;
/// Largest change of an analytic field across one slice.
pub const MAX_FIELD_STEP: f64 = 0.01;

/// Control field `f(t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum PulseSchedule {
    /// `f0 (1 − t/t_f)` on `[0, t_f]`, zero afterwards.
    Linear { f0: f64, t_f: f64 },
    /// `f0 e^{−μt}`, zero once it drops below [`EXP_CUTOFF`].
    Exponential { f0: f64, mu: f64 },
    /// `amplitudes[k]` on `[kΔt, (k+1)Δt)`, zero after the last slice.
    Piecewise { amplitudes: Vec<f64>, dt: f64 },
}

impl PulseSchedule {
    pub fn linear(f0: f64, t_f: f64) -> Result<Self> {
        if !(t_f > 0.0) || !t_f.is_finite() || !f0.is_finite() {
            return Err(Error::invalid(format!("linear schedule needs finite f0 and t_f > 0 (got f0 = {f0}, t_f = {t_f})")));
        }
        Ok(PulseSchedule::Linear { f0, t_f })
    }

    pub fn exponential(f0: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() || !f0.is_finite() {
            return Err(Error::invalid(format!("exponential schedule needs finite f0 and mu > 0 (got f0 = {f0}, mu = {mu})")));
        }
        Ok(PulseSchedule::Exponential { f0, mu })
    }

    pub fn piecewise(amplitudes: Vec<f64>, dt: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("piecewise schedule needs at least one amplitude"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("piecewise slice width must be positive, got {dt}")));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("piecewise amplitudes must be finite"));
        }
        Ok(PulseSchedule::Piecewise { amplitudes, dt })
    }

    /// Constant field `f` for `duration`.
    pub fn constant(f: f64, duration: f64) -> Result<Self> {
        PulseSchedule::piecewise(vec![f], duration)
    }

    pub fn amplitudes(&self) -> Option<&[f64]> {
        match self {
            PulseSchedule::Piecewise { amplitudes, .. } => Some(amplitudes),
            _ => None,
        }
    }

    pub fn initial_value(&self) -> f64 {
        self.raw(0.0)
    }

    /// Time after which the field is identically zero.
    pub fn duration(&self) -> f64 {
        match self {
            PulseSchedule::Linear { t_f, .. } => *t_f,
            PulseSchedule::Exponential { f0, mu } => {
                if f0.abs() <= EXP_CUTOFF {
                    0.0
                } else {
                    (f0.abs() / EXP_CUTOFF).ln() / mu
                }
            }
            PulseSchedule::Piecewise { amplitudes, dt } => amplitudes.len() as f64 * dt,
        }
    }

    fn raw(&self, t: f64) -> f64 {
        match self {
            PulseSchedule::Linear { f0, t_f } => f0 * (1.0 - t / t_f),
            PulseSchedule::Exponential { f0, mu } => f0 * (-mu * t).exp(),
            PulseSchedule::Piecewise { amplitudes, dt } => {
                let k = ((t / dt).floor().max(0.0) as usize).min(amplitudes.len() - 1);
                amplitudes[k]
            }
        }
    }

    /// `f(t)`; the last piecewise amplitude is kept at exactly `t = KΔt`.
    pub fn value(&self, t: f64) -> f64 {
        let end = self.duration();
        if t > end * (1.0 + 1e-12) || (t >= end && !matches!(self, PulseSchedule::Piecewise { .. })) {
            return 0.0;
        }
        self.raw(t.max(0.0))
    }

    /// Constant-field slices `(width, f)` covering `[t0, t1]`; analytic
    /// schedules use midpoint sampling with width ≤ [`MAX_SLICE`] and field
    /// change ≤ [`MAX_FIELD_STEP`] per slice.
    pub fn slices(&self, t0: f64, t1: f64) -> Vec<(f64, f64)> {
        self.slices_capped(t0, t1, MAX_SLICE)
    }

    /// [`slices`](Self::slices) with a custom maximum analytic slice width.
    pub fn slices_capped(&self, t0: f64, t1: f64, max_slice: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if t1 <= t0 {
            return out;
        }
        let end = self.duration();
        match self {
            PulseSchedule::Piecewise { amplitudes, dt } => {
                let mut t = t0;
                while t < t1 && t < end {
                    let k = ((t / dt + 1e-9).floor() as usize).min(amplitudes.len() - 1);
                    let next = ((k + 1) as f64 * dt).min(t1);
                    if next > t {
                        out.push((next - t, amplitudes[k]));
                    }
                    t = next;
                }
                if t1 > t.max(end) {
                    out.push((t1 - t.max(end), 0.0));
                }
            }
            _ => {
                let a = t0;
                let b = t1.min(end);
                if b > a {
                    let df = self.rate_bound(a) * (b - a);
                    let m = ((b - a) / max_slice).ceil().max((df / MAX_FIELD_STEP).ceil()).max(1.0) as usize;
                    let w = (b - a) / m as f64;
                    for i in 0..m {
                        out.push((w, self.raw(a + (i as f64 + 0.5) * w)));
                    }
                }
                if t1 > b.max(t0) {
                    out.push((t1 - b.max(t0), 0.0));
                }
            }
        }
        out
    }

    /// Largest `|f'(t)|` on `[a, ∞)` for analytic schedules.
    fn rate_bound(&self, a: f64) -> f64 {
        match self {
            PulseSchedule::Linear { f0, t_f } => (f0 / t_f).abs(),
            PulseSchedule::Exponential { f0, mu } => (mu * f0).abs() * (-mu * a.max(0.0)).exp(),
            PulseSchedule::Piecewise { .. } => 0.0,
        }
    }

    /// Piecewise pulse played backwards.
    pub fn reversed(&self) -> Result<PulseSchedule> {
        match self {
            PulseSchedule::Piecewise { amplitudes, dt } => {
                PulseSchedule::piecewise(amplitudes.iter().rev().copied().collect(), *dt)
            }
            _ => Err(Error::invalid("only piecewise schedules can be reversed")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PulseSchedule::linear(10.0, 0.0).is_err());
        assert!(PulseSchedule::exponential(10.0, -0.1).is_err());
        assert!(PulseSchedule::piecewise(vec![], 0.1).is_err());
        assert!(PulseSchedule::piecewise(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn values() {
        let lin = PulseSchedule::linear(10.0, 100.0).unwrap();
        assert_eq!(lin.value(50.0), 5.0);
        assert_eq!(lin.value(150.0), 0.0);
        let exp = PulseSchedule::exponential(10.0, 0.1).unwrap();
        assert!((exp.value(10.0) - 10.0 * (-1.0f64).exp()).abs() < 1e-14);
        assert_eq!(exp.value(200.0), 0.0);
        assert!((exp.duration() - 10.0 * 1e5f64.ln()).abs() < 1e-9);
        let pw = PulseSchedule::piecewise(vec![1.0, 2.0, 3.0], 0.5).unwrap();
        assert_eq!(pw.value(0.75), 2.0);
        assert_eq!(pw.value(1.5), 3.0);
        assert_eq!(pw.value(2.0), 0.0);
    }

    #[test]
    fn analytic_slices_respect_limits() {
        let exp = PulseSchedule::exponential(10.0, 0.5).unwrap();
        let s = exp.slices(0.0, 3.0);
        let total: f64 = s.iter().map(|x| x.0).sum();
        assert!((total - 3.0).abs() < 1e-12);
        assert!(s.iter().all(|x| x.0 <= MAX_SLICE + 1e-15));
        let mut t = 0.0;
        for (w, _) in &s {
            assert!((exp.value(t) - exp.value(t + w)).abs() <= MAX_FIELD_STEP + 1e-12);
            t += w;
        }
        assert!((s[0].1 - exp.value(s[0].0 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn piecewise_slices_split_at_boundaries() {
        let pw = PulseSchedule::piecewise(vec![1.0, 2.0], 0.5).unwrap();
        let s = pw.slices(0.25, 1.5);
        assert_eq!(s.len(), 3);
        assert!((s[0].0 - 0.25).abs() < 1e-15 && s[0].1 == 1.0);
        assert!((s[1].0 - 0.5).abs() < 1e-15 && s[1].1 == 2.0);
        assert!((s[2].0 - 0.5).abs() < 1e-15 && s[2].1 == 0.0);
        assert_eq!(pw.reversed().unwrap().amplitudes().unwrap(), &[2.0, 1.0]);
    }
}
