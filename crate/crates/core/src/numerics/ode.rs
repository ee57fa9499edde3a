//! Adaptive Dormand–Prince 5(4) integration for small fixed-size systems.

use crate::error::{PhcError, Result};

// Butcher tableau of the Dormand–Prince pair.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-11,
            h_init: 1e-3,
            h_max: 0.05,
            max_steps: 5_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..N {
            out[i] += coef * k[i];
        }
    }
    out
}

/// One explicit Dormand–Prince step. Returns the 5th-order update and the
/// embedded error vector.
pub fn dp_step<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = rhs(t, y);
    let k2 = rhs(t + C2 * h, &axpy(y, &[(h * A21, &k1)]));
    let k3 = rhs(t + C3 * h, &axpy(y, &[(h * A31, &k1), (h * A32, &k2)]));
    let k4 = rhs(
        t + C4 * h,
        &axpy(y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]),
    );
    let k5 = rhs(
        t + C5 * h,
        &axpy(
            y,
            &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)],
        ),
    );
    let k6 = rhs(
        t + h,
        &axpy(
            y,
            &[
                (h * A61, &k1),
                (h * A62, &k2),
                (h * A63, &k3),
                (h * A64, &k4),
                (h * A65, &k5),
            ],
        ),
    );
    let y_new = axpy(
        y,
        &[
            (h * A71, &k1),
            (h * A73, &k3),
            (h * A74, &k4),
            (h * A75, &k5),
            (h * A76, &k6),
        ],
    );
    let k7 = rhs(t + h, &y_new);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y_new, err)
}

fn error_norm<const N: usize>(y: &[f64; N], y_new: &[f64; N], err: &[f64; N], o: &OdeOptions) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..N {
        let scale = o.atol + o.rtol * y[i].abs().max(y_new[i].abs());
        worst = worst.max((err[i] / scale).abs());
    }
    worst
}

/// Adaptive integrator bound to a right-hand side.
pub struct Solver<F, const N: usize> {
    rhs: F,
    opts: OdeOptions,
}

/// Result of an event search: the state at the located root.
#[derive(Debug, Clone, Copy)]
pub struct EventHit<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
}

impl<F, const N: usize> Solver<F, N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, opts: OdeOptions) -> Self {
        Self { rhs, opts }
    }

    pub fn rhs(&self) -> &F {
        &self.rhs
    }

    pub fn options(&self) -> &OdeOptions {
        &self.opts
    }

    fn check_state(&self, t: f64, y: &[f64; N]) -> Result<()> {
        if y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(PhcError::BlowUp { t })
        }
    }

    /// Attempts one controlled step of at most `h`, shrinking until accepted.
    /// Returns `(h_used, y_new, h_next)`.
    fn controlled_step(&self, t: f64, y: &[f64; N], mut h: f64) -> Result<(f64, [f64; N], f64)> {
        let o = &self.opts;
        for _ in 0..200 {
            let (y_new, err) = dp_step(&self.rhs, t, y, h);
            let en = error_norm(y, &y_new, &err, o);
            if en.is_finite() && en <= 1.0 {
                let fac = if en == 0.0 {
                    5.0
                } else {
                    (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
                };
                return Ok((h, y_new, (h * fac).min(o.h_max)));
            }
            let fac = if en.is_finite() {
                (0.9 * en.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= fac;
            if h.abs() < 1e-15 * t.abs().max(1.0) {
                return Err(PhcError::BlowUp { t });
            }
        }
        Err(PhcError::BlowUp { t })
    }

    /// Integrates from `t0` to `t1`, returning every accepted step (including
    /// the initial state). Steps are clamped so `t1` is hit exactly.
    pub fn integrate(&self, t0: f64, y0: [f64; N], t1: f64) -> Result<Vec<(f64, [f64; N])>> {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let mut out = vec![(t0, y0)];
        let mut t = t0;
        let mut y = y0;
        let mut h = self.opts.h_init.min(self.opts.h_max) * dir;
        let mut steps = 0;
        while (t1 - t) * dir > 0.0 {
            if (t + h - t1) * dir > 0.0 {
                h = t1 - t;
            }
            let (used, y_new, next) = self.controlled_step(t, &y, h)?;
            t = if ((t + used) - t1).abs() <= 1e-15 * t1.abs().max(1.0) {
                t1
            } else {
                t + used
            };
            y = y_new;
            self.check_state(t, &y)?;
            out.push((t, y));
            h = next.abs().max(1e-14) * dir;
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(PhcError::BlowUp { t });
            }
        }
        Ok(out)
    }

    /// Final state only.
    pub fn advance(&self, t0: f64, y0: [f64; N], t1: f64) -> Result<[f64; N]> {
        if t0 == t1 {
            return Ok(y0);
        }
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut y = y0;
        let mut h = (t1 - t0).abs().min(self.opts.h_max) * dir;
        while (t1 - t) * dir > 0.0 {
            if (t + h - t1) * dir > 0.0 {
                h = t1 - t;
            }
            let (used, y_new, next) = self.controlled_step(t, &y, h)?;
            t = if ((t + used) - t1).abs() <= 1e-15 * t1.abs().max(1.0) {
                t1
            } else {
                t + used
            };
            y = y_new;
            self.check_state(t, &y)?;
            h = next.abs().max(1e-14) * dir;
        }
        Ok(y)
    }

    /// Integrates forward until `event(t, y)` changes sign in the requested
    /// direction (`+1`: negative to positive, `-1`: positive to negative),
    /// skipping `skip` such crossings. The crossing is polished by bisection
    /// on the step length of a single uncontrolled step.
    pub fn find_event<G>(
        &self,
        t0: f64,
        y0: [f64; N],
        t_max: f64,
        direction: i32,
        skip: usize,
        event: G,
    ) -> Result<Option<EventHit<N>>>
    where
        G: Fn(f64, &[f64; N]) -> f64,
    {
        let mut t = t0;
        let mut y = y0;
        let mut g = event(t, &y);
        let mut h = self.opts.h_init.min(self.opts.h_max);
        let mut seen = 0;
        let mut steps = 0;
        while t < t_max {
            if t + h > t_max {
                h = t_max - t;
            }
            let (used, y_new, next) = self.controlled_step(t, &y, h)?;
            let t_new = t + used;
            self.check_state(t_new, &y_new)?;
            let g_new = event(t_new, &y_new);
            let crossed = match direction {
                d if d > 0 => g < 0.0 && g_new >= 0.0,
                d if d < 0 => g > 0.0 && g_new <= 0.0,
                _ => (g < 0.0) != (g_new < 0.0),
            };
            if crossed {
                if seen == skip {
                    let (mut lo, mut hi) = (0.0, used);
                    let g_lo = g;
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        let (ym, _) = dp_step(&self.rhs, t, &y, mid);
                        let gm = event(t + mid, &ym);
                        if (gm < 0.0) == (g_lo < 0.0) && gm != 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let root = 0.5 * (lo + hi);
                    let (yr, _) = dp_step(&self.rhs, t, &y, root);
                    return Ok(Some(EventHit { t: t + root, y: yr }));
                }
                seen += 1;
            }
            t = t_new;
            y = y_new;
            g = g_new;
            h = next.max(1e-14);
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(PhcError::BlowUp { t });
            }
        }
        Ok(None)
    }
}

/// A trajectory that can be evaluated at any time inside its span by
/// re-integrating from the nearest stored knot.
pub struct DenseTrajectory<F, const N: usize> {
    solver: Solver<F, N>,
    knots: Vec<(f64, [f64; N])>,
}

impl<F, const N: usize> DenseTrajectory<F, N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    pub fn build(rhs: F, opts: OdeOptions, t0: f64, y0: [f64; N], t1: f64) -> Result<Self> {
        let solver = Solver::new(rhs, opts);
        let knots = solver.integrate(t0, y0, t1)?;
        Ok(Self { solver, knots })
    }

    pub fn knots(&self) -> &[(f64, [f64; N])] {
        &self.knots
    }

    pub fn span(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    pub fn rhs(&self) -> &F {
        self.solver.rhs()
    }

    /// State at `t`; `t` outside the span is integrated from the closest end.
    pub fn eval(&self, t: f64) -> Result<[f64; N]> {
        let forward = self.knots[0].0 <= self.knots[self.knots.len() - 1].0;
        let idx = match self.knots.binary_search_by(|(tk, _)| {
            let o = tk.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less);
            if forward {
                o
            } else {
                o.reverse()
            }
        }) {
            Ok(i) => return Ok(self.knots[i].1),
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let (tk, yk) = self.knots[idx];
        self.solver.advance(tk, yk, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_one_period() {
        let s = Solver::new(|_t, y: &[f64; 2]| [y[1], -y[0]], OdeOptions::with_tol(1e-12));
        let y = s.advance(0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn dense_backward_trajectory() {
        let d = DenseTrajectory::build(|_t, y: &[f64; 1]| [y[0]], OdeOptions::with_tol(1e-12), 1.0, [1.0], 0.0).unwrap();
        let y = d.eval(0.3).unwrap();
        assert!((y[0] - (-0.7f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn exponential_growth_backwards() {
        let s = Solver::new(|_t, y: &[f64; 1]| [y[0]], OdeOptions::with_tol(1e-12));
        let y = s.advance(1.0, [1.0f64.exp()], 0.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn event_finds_quarter_period() {
        let s = Solver::new(|_t, y: &[f64; 2]| [y[1], -y[0]], OdeOptions::with_tol(1e-12));
        // cos crosses zero downward at pi/2
        let hit = s
            .find_event(0.0, [1.0, 0.0], 10.0, -1, 0, |_t, y| y[0])
            .unwrap()
            .unwrap();
        assert!((hit.t - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn dense_eval_matches_closed_form() {
        let d = DenseTrajectory::build(
            |_t, y: &[f64; 2]| [y[1], -y[0]],
            OdeOptions::with_tol(1e-12),
            0.0,
            [0.0, 1.0],
            5.0,
        )
        .unwrap();
        for &t in &[0.0, 0.37, 1.9, 4.999, 5.0] {
            let y = d.eval(t).unwrap();
            assert!((y[0] - f64::sin(t)).abs() < 1e-10, "t={t}");
        }
    }
}
