//! Dormand–Prince 5(4) integrator with fourth-order dense output.
//!
//! Small fixed-size systems only; the state is a `[f64; N]`. Step-size
//! control uses the mixed error norm `|e| / (tol + tol·|y|)` averaged in the
//! root-mean-square sense, and a step is accepted when that norm is ≤ 1.
//! With `per_unit_step` the bound on a step of length `h` is scaled by
//! `h / (t_end − t0)`, so the local errors summed over the run stay below `tol`.

use crate::error::{Error, Result};

/// How the integrator advances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping {
    /// Error-controlled steps bounded by `max_step`.
    Adaptive {
        tolerance: f64,
        max_step: f64,
        per_unit_step: bool,
    },
    /// Constant step (the final step is shortened to land on the end time).
    Fixed { step: f64 },
}

/// Which times appear in the solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    /// The initial time and every accepted step.
    Steps,
    /// Interpolated values at the given increasing times inside `[t0, t_end]`.
    Grid(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

const MAX_STEPS: usize = 50_000_000;

// Butcher tableau.
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
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

struct Step<const N: usize> {
    y_new: [f64; N],
    k7: [f64; N],
    err: [f64; N],
    /// Dense-output coefficients.
    cont: [[f64; N]; 5],
}

fn dp_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Step<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new);

    let mut err = [0.0; N];
    let mut cont = [[0.0; N]; 5];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let dy = y_new[i] - y[i];
        let bspl = h * k1[i] - dy;
        cont[0][i] = y[i];
        cont[1][i] = dy;
        cont[2][i] = bspl;
        cont[3][i] = dy - h * k7[i] - bspl;
        cont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Step { y_new, k7, err, cont }
}

fn interpolate<const N: usize>(cont: &[[f64; N]; 5], theta: f64) -> [f64; N] {
    let theta1 = 1.0 - theta;
    let mut out = [0.0; N];
    for (i, o) in out.iter_mut().enumerate() {
        *o = cont[0][i] + theta * (cont[1][i] + theta1 * (cont[2][i] + theta * (cont[3][i] + theta1 * cont[4][i])));
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], tol: f64) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = tol + tol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: &[f64; N],
    k1: &[f64; N],
    tol: f64,
    span: f64,
    max_step: f64,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let norm = |v: &[f64; N]| -> f64 {
        let s: f64 = (0..N).map(|i| (v[i] / (tol + tol * y0[i].abs())).powi(2)).sum();
        (s / N as f64).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(max_step).min(span);
    let y1 = axpy(y0, h0, &[(1.0, k1)]);
    let k2 = f(t0 + h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| k2[i] - k1[i]);
    let d2 = norm(&diff) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6 * span)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(max_step).min(span)
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t_end`.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    stepping: Stepping,
    output: &Output,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let span = t_end - t0;
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::domain(format!("integration interval [{t0}, {t_end}] is empty")));
    }
    match stepping {
        Stepping::Adaptive {
            tolerance, max_step, ..
        } => {
            if !(tolerance > 0.0) || !(max_step > 0.0) {
                return Err(Error::domain("tolerance and max_step must be positive"));
            }
        }
        Stepping::Fixed { step } => {
            if !(step > 0.0) {
                return Err(Error::domain("fixed step must be positive"));
            }
        }
    }
    let grid = match output {
        Output::Steps => None,
        Output::Grid(g) => {
            if g.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::domain("output grid must be strictly increasing"));
            }
            if g.first().is_some_and(|&t| t < t0) || g.last().is_some_and(|&t| t > t_end) {
                return Err(Error::domain("output grid leaves the integration interval"));
            }
            Some(g.as_slice())
        }
    };

    let mut sol = Solution {
        t: Vec::new(),
        y: Vec::new(),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut next_out = 0usize;
    match grid {
        None => {
            sol.t.push(t0);
            sol.y.push(y0);
        }
        Some(g) => {
            while next_out < g.len() && g[next_out] <= t0 {
                sol.t.push(g[next_out]);
                sol.y.push(y0);
                next_out += 1;
            }
        }
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = match stepping {
        Stepping::Adaptive {
            tolerance, max_step, ..
        } => initial_step(&f, t0, &y0, &k1, tolerance, span, max_step),
        Stepping::Fixed { step } => step,
    };
    let mut last_rejected = false;

    while t < t_end {
        if sol.accepted_steps + sol.rejected_steps >= MAX_STEPS {
            return Err(Error::Integration {
                t,
                reason: format!("exceeded {MAX_STEPS} steps"),
            });
        }
        let remaining = t_end - t;
        let final_step = h >= remaining || remaining - h < 1e-12 * span;
        let h_try = if final_step { remaining } else { h };
        if h_try <= 1e-14 * t.abs().max(span) {
            return Err(Error::Integration {
                t,
                reason: format!("step size underflow (h = {h_try:.3e} s)"),
            });
        }
        let step = dp_step(&f, t, &y, &k1, h_try);

        let accept = match stepping {
            Stepping::Fixed { .. } => true,
            Stepping::Adaptive {
                tolerance,
                max_step,
                per_unit_step,
            } => {
                let mut err = error_norm(&step.err, &y, &step.y_new, tolerance);
                let mut order = 5.0;
                if per_unit_step {
                    err *= span / h_try;
                    order = 4.0;
                }
                if !err.is_finite() {
                    return Err(Error::Integration {
                        t,
                        reason: "non-finite error estimate".into(),
                    });
                }
                let mut fac = if err == 0.0 {
                    10.0
                } else {
                    (0.9 * err.powf(-1.0 / order)).clamp(0.2, 10.0)
                };
                if err <= 1.0 {
                    if last_rejected {
                        fac = fac.min(1.0);
                    }
                    last_rejected = false;
                    h = (h_try * fac).min(max_step);
                    true
                } else {
                    last_rejected = true;
                    sol.rejected_steps += 1;
                    h = h_try * fac;
                    false
                }
            }
        };
        if !accept {
            continue;
        }

        let t_new = if final_step { t_end } else { t + h_try };
        match grid {
            None => {
                sol.t.push(t_new);
                sol.y.push(step.y_new);
            }
            Some(g) => {
                while next_out < g.len() && g[next_out] <= t_new {
                    let theta = (g[next_out] - t) / h_try;
                    sol.t.push(g[next_out]);
                    sol.y.push(interpolate(&step.cont, theta));
                    next_out += 1;
                }
            }
        }
        t = t_new;
        y = step.y_new;
        k1 = step.k7;
        sol.accepted_steps += 1;
    }
    Ok(sol)
}
