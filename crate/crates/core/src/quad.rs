//! Quadrature primitives: adaptive Gauss–Kronrod integration, cumulative
//! Simpson antiderivative tables with Hermite interpolation, composite
//! Simpson weights on uniform grids, and a damped brute-force integrator
//! for oscillatory verification oracles.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// 15-point Kronrod nodes on [0, 1] (positive half; symmetric rule).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Embedded 7-point Gauss weights (for the odd-indexed Kronrod nodes).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 15(7) panel; returns (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod quadrature to an absolute tolerance.
///
/// Bisects the worst panel until the summed error estimate is below
/// `abs_tol` or the panel budget is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    struct Panel {
        a: f64,
        b: f64,
        val: f64,
        err: f64,
    }
    let (val, err) = gk15(&f, a, b);
    let mut panels = vec![Panel { a, b, val, err }];
    let max_panels = 4096;

    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= abs_tol {
            return Ok(panels.iter().map(|p| p.val).sum());
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureFailure {
                detail: format!(
                    "adaptive quadrature stalled on [{a}, {b}]: error {total_err:.3e} > tol {abs_tol:.3e} with {} panels",
                    panels.len()
                ),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("non-empty panel list");
        let Panel { a: pa, b: pb, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid == pa || mid == pb {
            return Err(Error::QuadratureFailure {
                detail: format!("panel [{pa}, {pb}] cannot be bisected further"),
            });
        }
        let (v1, e1) = gk15(&f, pa, mid);
        let (v2, e2) = gk15(&f, mid, pb);
        panels.push(Panel { a: pa, b: mid, val: v1, err: e1 });
        panels.push(Panel { a: mid, b: pb, val: v2, err: e2 });
    }
}

/// Cumulative antiderivative of a smooth integrand on a uniform dense grid,
/// built with cumulative Simpson and evaluated anywhere by cubic Hermite
/// interpolation (the exact integrand supplies the slopes).
#[derive(Debug, Clone)]
pub struct CumTable {
    pub t0: f64,
    pub h: f64,
    /// antiderivative values at the nodes, starting at 0
    pub vals: Vec<f64>,
    /// integrand samples at the nodes (exact slopes for interpolation)
    pub slopes: Vec<f64>,
}

impl CumTable {
    /// Tabulate `∫_{t0}^{τ} f` on `n` nodes (n odd, ≥ 3) covering `[t0, t1]`.
    pub fn build<F: Fn(f64) -> f64>(f: F, t0: f64, t1: f64, n: usize) -> Self {
        assert!(n >= 3 && n % 2 == 1, "dense table needs an odd node count");
        let h = (t1 - t0) / (n - 1) as f64;
        let slopes: Vec<f64> = (0..n).map(|i| f(t0 + i as f64 * h)).collect();
        let mut vals = vec![0.0; n];
        // Simpson across node pairs, local quadratic for the midpoints:
        // ∫_{x0}^{x1} ≈ h/12 (5 f0 + 8 f1 − f2).
        for i in (0..n - 2).step_by(2) {
            let (f0, f1, f2) = (slopes[i], slopes[i + 1], slopes[i + 2]);
            vals[i + 1] = vals[i] + h / 12.0 * (5.0 * f0 + 8.0 * f1 - f2);
            vals[i + 2] = vals[i] + h / 3.0 * (f0 + 4.0 * f1 + f2);
        }
        CumTable { t0, h, vals, slopes }
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h * (self.vals.len() - 1) as f64
    }

    /// Cubic Hermite evaluation of the antiderivative.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.vals.len();
        let s = (t - self.t0) / self.h;
        let i = (s.floor() as isize).clamp(0, n as isize - 2) as usize;
        let u = s - i as f64;
        let (v0, v1) = (self.vals[i], self.vals[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.h, self.slopes[i + 1] * self.h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * v0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * v1
            + (u3 - u2) * m1
    }
}

/// Composite Simpson weights for a uniform grid with an odd number of nodes.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd node count");
    let mut w = vec![0.0; n];
    w[0] = h / 3.0;
    w[n - 1] = h / 3.0;
    for (k, wk) in w.iter_mut().enumerate().take(n - 1).skip(1) {
        *wk = if k % 2 == 1 { 4.0 * h / 3.0 } else { 2.0 * h / 3.0 };
    }
    w
}

/// Prefix-integral weights against a shared uniform node set: row `i`
/// holds weights reproducing `∫_{x0}^{x_i}` using only samples `0..=i`.
///
/// Even rows are plain composite Simpson; an odd row is its predecessor
/// plus a trapezoid over the final panel, so no row ever references a
/// node beyond its own endpoint (the integrand may be undefined there).
pub fn cumulative_weights(n: usize, h: f64) -> Vec<Vec<f64>> {
    assert!(n >= 3 && n % 2 == 1);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    rows.push(vec![0.0]);
    let mut even = vec![0.0; n]; // running composite-Simpson weights
    for i in (2..n).step_by(2) {
        // odd row i−1: composite Simpson to i−2, trapezoid on the last panel
        let mut odd = even.clone();
        odd[i - 2] += h / 2.0;
        odd[i - 1] += h / 2.0;
        odd.truncate(i);
        rows.push(odd);

        even[i - 2] += h / 3.0;
        even[i - 1] += 4.0 * h / 3.0;
        even[i] += h / 3.0;
        let mut row = even.clone();
        row.truncate(i + 1);
        rows.push(row);
    }
    rows
}

/// Brute-force oscillatory quadrature: composite Simpson over `[a, b]` with
/// `n` nodes and a raised-cosine taper over the outer `taper_frac` of each
/// end to suppress the truncation ringing of non-decaying integrands.
pub fn damped_oscillatory_integral<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    n: usize,
    taper_frac: f64,
) -> Complex64 {
    let n = if n % 2 == 0 { n + 1 } else { n };
    let h = (b - a) / (n - 1) as f64;
    let ramp = taper_frac * (b - a);
    let weights_taper = |z: f64| -> f64 {
        let d = (z - a).min(b - z);
        if d >= ramp {
            1.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * d / ramp).cos())
        }
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let z = a + k as f64 * h;
        let w = if k == 0 || k == n - 1 {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += f(z) * (w * weights_taper(z));
    }
    acc * (h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn gk_integrates_smooth_functions() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        let v = integrate(|x| (-x * x).exp(), -8.0, 8.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn gk_handles_endpoint_growth() {
        // ∫_0^{1.4} tan^2 τ dτ = tan(1.4) − 1.4
        let v = integrate(|x| x.tan().powi(2), 0.0, 1.4, 1e-11).unwrap();
        assert_abs_diff_eq!(v, 1.4f64.tan() - 1.4, epsilon = 1e-9);
    }

    #[test]
    fn cum_table_matches_closed_antiderivative() {
        let table = CumTable::build(|t| t.cos(), 0.0, 3.0, 2001);
        for &t in &[0.0, 0.31, 1.0, 1.5707, 2.9, 3.0] {
            assert_abs_diff_eq!(table.eval(t), t.sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn cumulative_weight_rows_reproduce_prefix_integrals() {
        let n = 9;
        let h = 0.25;
        let rows = cumulative_weights(n, h);
        let cubic = |x: f64| x * x * x - 0.5 * x;
        let cubic_exact = |x: f64| 0.25 * x.powi(4) - 0.25 * x * x;
        let linear = |x: f64| 2.0 * x + 1.0;
        let linear_exact = |x: f64| x * x + x;
        for (i, row) in rows.iter().enumerate() {
            assert!(row.len() <= i.max(1) + 1, "row {i} looks ahead");
            let xi = i as f64 * h;
            let approx_lin: f64 = row
                .iter()
                .enumerate()
                .map(|(k, w)| w * linear(k as f64 * h))
                .sum();
            assert_abs_diff_eq!(approx_lin, linear_exact(xi), epsilon = 1e-13);
            if i % 2 == 0 {
                // even rows are composite Simpson: exact on cubics
                let approx: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * cubic(k as f64 * h))
                    .sum();
                assert_abs_diff_eq!(approx, cubic_exact(xi), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn damped_integral_of_decaying_oscillation() {
        // ∫ e^{-z^2/2} e^{iz} dz = sqrt(2π) e^{-1/2}
        let v = damped_oscillatory_integral(
            |z| Complex64::new(0.0, z).exp() * (-0.5 * z * z).exp(),
            -40.0,
            40.0,
            40_001,
            0.2,
        );
        let exact = (2.0 * std::f64::consts::PI).sqrt() * (-0.5f64).exp();
        assert_abs_diff_eq!(v.re, exact, epsilon = 1e-10);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-10);
    }

    proptest! {
        // Composite Simpson weights are exact for cubics.
        #[test]
        fn simpson_exact_on_cubics(c0 in -2.0..2.0f64, c1 in -2.0..2.0f64,
                                   c2 in -2.0..2.0f64, c3 in -2.0..2.0f64) {
            let n = 41;
            let h = 2.0 / (n - 1) as f64;
            let w = simpson_weights(n, h);
            let f = |x: f64| c0 + c1 * x + c2 * x * x + c3 * x * x * x;
            let num: f64 = (0..n).map(|k| w[k] * f(-1.0 + k as f64 * h)).sum();
            let exact = 2.0 * c0 + 2.0 / 3.0 * c2;
            prop_assert!((num - exact).abs() < 1e-12);
        }
    }
}
