//! Dormand–Prince 5(4) with adaptive step control over complex state vectors
//! and a real independent variable.

use crate::error::{Error, Result};
use crate::scalar::C64;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last stage row, FSAL).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Smallest admissible step relative to the span.
    pub min_step: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { rtol: 1e-10, atol: 1e-12, max_steps: 200_000, min_step: 1e-13 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Dopri5 {
    fn error_norm(&self, y: &[C64], y_new: &[C64], err: &[C64]) -> f64 {
        let sum: f64 = y
            .iter()
            .zip(y_new)
            .zip(err)
            .map(|((a, b), e)| {
                let sc = self.atol + self.rtol * a.norm().max(b.norm());
                (e.norm() / sc).powi(2)
            })
            .sum();
        (sum / y.len().max(1) as f64).sqrt()
    }

    /// Integrates `y' = f(t, y)` from `t0` and returns the state at each of
    /// `times`, which must be monotone and on one side of `t0`.
    pub fn integrate<F>(&self, mut f: F, t0: f64, y0: &[C64], times: &[f64]) -> Result<(Vec<Vec<C64>>, OdeStats)>
    where
        F: FnMut(f64, &[C64]) -> Result<Vec<C64>>,
    {
        let mut stats = OdeStats::default();
        let Some(&t_last) = times.last() else {
            return Ok((Vec::new(), stats));
        };
        let dir = if t_last >= t0 { 1.0 } else { -1.0 };
        if times.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) || (times[0] - t0) * dir < 0.0 {
            return Err(Error::InvalidArgument("output times must be monotone away from the start".into()));
        }
        let span = (t_last - t0).abs();
        let h_min = self.min_step * span.max(1.0);
        let n = y0.len();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k1 = f(t, &y)?;
        stats.evaluations += 1;
        let mut h = (0.01 * span).max(h_min);
        let mut out = Vec::with_capacity(times.len());
        let mut stages: Vec<Vec<C64>> = vec![Vec::new(); 7];
        let mut scratch = vec![C64::default(); n];
        for &target in times {
            while (target - t) * dir > 0.0 {
                if stats.accepted + stats.rejected >= self.max_steps {
                    return Err(Error::StepFailure { s: t, reason: "step budget exhausted".into() });
                }
                let remaining = (target - t).abs();
                let step = h.min(remaining);
                let hs = step * dir;
                stages[0] = k1.clone();
                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = y[i];
                        for (j, stage) in stages.iter().enumerate().take(s) {
                            if A[s][j] != 0.0 {
                                acc += stage[i] * (hs * A[s][j]);
                            }
                        }
                        scratch[i] = acc;
                    }
                    stages[s] = f(t + C[s] * hs, &scratch)?;
                    stats.evaluations += 1;
                }
                // Stage 6 was evaluated at the fifth-order solution.
                let y_new: Vec<C64> = (0..n)
                    .map(|i| y[i] + (0..7).map(|s| stages[s][i] * (hs * B5[s])).sum::<C64>())
                    .collect();
                let err: Vec<C64> =
                    (0..n).map(|i| (0..7).map(|s| stages[s][i] * (hs * (B5[s] - B4[s]))).sum::<C64>()).collect();
                let e = self.error_norm(&y, &y_new, &err);
                if !e.is_finite() {
                    return Err(Error::StepFailure { s: t, reason: "non-finite state".into() });
                }
                if e <= 1.0 {
                    stats.accepted += 1;
                    t = if step == remaining { target } else { t + hs };
                    y = y_new;
                    k1 = stages[6].clone();
                    let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                    // Only grow from a full step, not one clipped to an output time.
                    if step == h || fac < 1.0 {
                        h = step * fac;
                    }
                } else {
                    stats.rejected += 1;
                    h = step * (0.9 * e.powf(-0.2)).clamp(0.1, 1.0);
                }
                if h < h_min {
                    return Err(Error::StepFailure { s: t, reason: format!("step size {h:e} below minimum") });
                }
            }
            out.push(y.clone());
        }
        Ok((out, stats))
    }
}
