//! Adaptive Dormand–Prince 5(4) integration with dense output.
//!
//! The solver stores every accepted step together with its derivative so
//! the trajectory can be evaluated at arbitrary interior points by cubic
//! Hermite interpolation. A modest `h_max` keeps the interpolation error
//! comfortably below the step-control tolerance.

use crate::error::{Error, Result};

/// Dormand–Prince 5(4) Butcher tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

/// 4th-order embedded weights.
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Integration aborts when any state component exceeds this bound.
    pub blow_up: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            h_max: 0.01,
            max_steps: 2_000_000,
            blow_up: 1e12,
        }
    }
}

/// Dense trajectory of an `N`-dimensional first-order system.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    pub ts: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    pub fs: Vec<[f64; N]>,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_end(&self) -> f64 {
        *self.ts.last().expect("non-empty trajectory")
    }

    /// Cubic Hermite interpolation between the bracketing accepted steps.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let ts = &self.ts;
        let idx = match ts.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => i.min(ts.len() - 2),
            Err(i) => i.saturating_sub(1).min(ts.len() - 2),
        };
        let h = ts[idx + 1] - ts[idx];
        let u = ((t - ts[idx]) / h).clamp(0.0, 1.0);
        let u2 = u * u;
        let u3 = u2 * u;
        let (h00, h10, h01, h11) = (
            2.0 * u3 - 3.0 * u2 + 1.0,
            u3 - 2.0 * u2 + u,
            -2.0 * u3 + 3.0 * u2,
            u3 - u2,
        );
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = h00 * self.ys[idx][k]
                + h10 * h * self.fs[idx][k]
                + h01 * self.ys[idx + 1][k]
                + h11 * h * self.fs[idx + 1][k];
        }
        out
    }
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` (t1 > t0).
pub fn solve<const N: usize, F>(
    rhs: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &SolverOptions,
) -> Result<DenseSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    assert!(t1 > t0, "integration interval must be forward");
    let mut t = t0;
    let mut y = y0;
    let mut f = rhs(t, &y);

    let mut ts = vec![t];
    let mut ys = vec![y];
    let mut fs = vec![f];

    let mut h = opts.h_max.min(t1 - t0);
    let mut steps = 0usize;

    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::SolverFailure {
                detail: format!("step budget exhausted at t = {t:.6}"),
            });
        }
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(Error::SolverFailure {
                detail: format!("step size underflow at t = {t:.6}"),
            });
        }
        let h_cur = h.min(t1 - t);

        // stages
        let mut k = [[0.0; N]; 7];
        k[0] = f;
        for s in 0..6 {
            let mut ys_stage = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let a = A[s][j];
                if a != 0.0 {
                    for q in 0..N {
                        ys_stage[q] += h_cur * a * kj[q];
                    }
                }
            }
            k[s + 1] = rhs(t + C[s] * h_cur, &ys_stage);
        }

        // 5th-order solution is the last stage combination (FSAL form)
        let mut y5 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[5][j];
            if a != 0.0 {
                for q in 0..N {
                    y5[q] += h_cur * a * kj[q];
                }
            }
        }
        // embedded 4th-order estimate
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            let b = B_LOW[j];
            if b != 0.0 {
                for q in 0..N {
                    y4[q] += h_cur * b * kj[q];
                }
            }
        }

        let mut err_norm = 0.0f64;
        for q in 0..N {
            let scale = opts.abs_tol + opts.rel_tol * y[q].abs().max(y5[q].abs());
            err_norm = err_norm.max(((y5[q] - y4[q]) / scale).abs());
        }

        if err_norm <= 1.0 {
            t += h_cur;
            y = y5;
            f = k[6]; // FSAL: last stage is rhs(t + h, y5)
            if y.iter().any(|v| !v.is_finite() || v.abs() > opts.blow_up) {
                return Err(Error::BlowUp { t });
            }
            ts.push(t);
            ys.push(y);
            fs.push(f);
        }

        let scale = (0.9 * err_norm.max(1e-12).powf(-0.2)).clamp(0.2, 5.0);
        h = (h_cur * scale).min(opts.h_max);
    }

    Ok(DenseSolution { ts, ys, fs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_decay() {
        let sol = solve(|_t, y: &[f64; 1]| [-y[0]], 0.0, 2.0, [1.0], &SolverOptions::default())
            .unwrap();
        for &t in &[0.3, 1.0, 1.77, 2.0] {
            assert_abs_diff_eq!(sol.eval(t)[0], (-t).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn harmonic_motion_dense_output() {
        let sol = solve(
            |_t, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            6.0,
            [0.0, 1.0],
            &SolverOptions::default(),
        )
        .unwrap();
        let mut t = 0.0;
        while t <= 6.0 {
            let y = sol.eval(t);
            assert_abs_diff_eq!(y[0], t.sin(), epsilon = 1e-9);
            assert_abs_diff_eq!(y[1], t.cos(), epsilon = 1e-9);
            t += 0.173;
        }
    }

    #[test]
    fn finite_time_blow_up_is_reported() {
        // y' = 1 + y^2 blows up at t = π/2
        let res = solve(
            |_t, y: &[f64; 1]| [1.0 + y[0] * y[0]],
            0.0,
            2.0,
            [0.0],
            &SolverOptions::default(),
        );
        assert!(res.is_err());
    }
}
