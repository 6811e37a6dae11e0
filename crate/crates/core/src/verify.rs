//! Executable verification of the identities that only make sense at the
//! operator or limit level: kernel orthogonality (tested as operator
//! round trips on Gaussian test functions), the small-time asymptotic
//! kernel, the amplitude addition property, and the χ functional
//! constraint tied to γ′ = −a W²/μ².

use num_complex::Complex64;
use serde::Serialize;

use crate::coefficients::CoefficientSet;
use crate::error::Result;
use crate::evolution::{
    apply_forward_with, apply_inverse_with, hamiltonian_fd, addition_property_check, ExecMode,
};
use crate::kernels::{asymptotic_kernel, green_forward, QuadraticKernel};
use crate::propagator::Propagator;
use crate::wavefunction::{Grid, WaveFunction};

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub model: String,
    pub parameters: serde_json::Value,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(
        check: &str,
        model: &str,
        parameters: serde_json::Value,
        measured: f64,
        threshold: f64,
    ) -> Self {
        CheckReport {
            check: check.to_string(),
            model: model.to_string(),
            parameters,
            measured,
            threshold,
            pass: measured <= threshold,
        }
    }
}

/// Render reports as an aligned text table.
pub fn format_table(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<28} {:<24} {:>12} {:>12}  {}\n",
        "check", "model", "measured", "threshold", "pass"
    ));
    for r in reports {
        out.push_str(&format!(
            "{:<28} {:<24} {:>12.3e} {:>12.3e}  {}\n",
            r.check,
            r.model,
            r.measured,
            r.threshold,
            if r.pass { "ok" } else { "FAIL" }
        ));
    }
    out
}

/// Pick a grid on [−l, l] that resolves the forward and inverse kernels
/// at time t for data of the given widths, using whichever of the two
/// guard criteria (pointwise resolution or ghost exit) is cheaper.
fn round_trip_grid(prop: &Propagator, t: f64, l: f64, wmax: f64) -> Result<Grid> {
    let specs = [prop.forward_spec(t)?, prop.inverse_spec(t)?];
    let mut h_needed = f64::INFINITY;
    for spec in &specs {
        let qk = QuadraticKernel::from_spec(spec);
        let rate = qk.max_dphase_dy(-l, l, -l, l);
        let h_strict = std::f64::consts::FRAC_PI_4 / rate;
        let gy = qk.syy.abs();
        let h_alias = if gy > 1e-12 {
            let ystar = (qk.sxy.abs() * l + qk.sy.abs()) / (2.0 * gy);
            let reach = ystar + l + 1.5;
            (std::f64::consts::PI / (2.0 * gy * reach))
                .min((std::f64::consts::PI / (8.0 * gy)).sqrt())
        } else {
            0.0
        };
        h_needed = h_needed.min(h_strict.max(h_alias));
    }
    // sampling of the data itself
    h_needed = h_needed.min(wmax.min(1.0) / 8.0);
    let mut n = (2.0 * l / h_needed).ceil() as usize + 1;
    n = n.clamp(301, 40_001);
    if n % 2 == 0 {
        n += 1;
    }
    Grid::new(-l, l, n)
}

/// Operator-level test of the kernel orthogonality relations:
/// ‖U⁻¹(t)U(t)φ − φ‖∞ and ‖U(t)U⁻¹(t)φ − φ‖∞ over Gaussian test
/// functions. Widths {0.5, 1, 2} at ordinary times; narrower set near
/// t = 0 where wide packets would need an enormous resolving grid.
pub fn check_orthogonality(prop: &Propagator, t: f64, threshold: f64) -> Result<CheckReport> {
    let widths: &[f64] = if t >= 0.05 { &[0.5, 1.0, 2.0] } else { &[0.3, 0.4, 0.5] };
    let wmax = widths.iter().cloned().fold(0.0, f64::max);
    let l = (4.0 * wmax + 3.0 * t).min(30.0);
    let grid = round_trip_grid(prop, t, l, wmax)?;
    let mode = ExecMode::default();

    let mut worst: f64 = 0.0;
    for &w in widths {
        let phi = WaveFunction::gaussian(grid, 0.0, w, 0.0);
        let fwd = apply_forward_with(prop, &phi, t, mode)?;
        let back = apply_inverse_with(prop, &fwd, t, mode)?;
        worst = worst.max(back.sup_distance(&phi));

        let inv = apply_inverse_with(prop, &phi, t, mode)?;
        let again = apply_forward_with(prop, &inv, t, mode)?;
        worst = worst.max(again.sup_distance(&phi));
    }
    Ok(CheckReport::new(
        "orthogonality_round_trip",
        &prop.coeffs().name,
        serde_json::json!({ "t": t, "widths": widths, "grid_n": grid.n, "grid_l": l }),
        worst,
        threshold,
    ))
}

/// Small-time behavior: the exact kernel must approach the asymptotic
/// reference kernel as t → 0⁺, and U(t)φ must approach φ. Measured value
/// is the worst ratio between successive deviations (< 1 means decay).
pub fn check_asymptotics(prop: &Propagator) -> Result<CheckReport> {
    let times = [1e-1, 1e-2, 1e-3];
    let mut kernel_dev = Vec::new();
    for &t in &times {
        let spec = prop.forward_spec(t)?;
        let mut worst: f64 = 0.0;
        for i in 0..=40 {
            let x = -2.0 + 0.1 * i as f64;
            for j in 0..=20 {
                let y = x - 0.5 + 0.05 * j as f64;
                let d = (green_forward(&spec, x, y)
                    - asymptotic_kernel(prop.coeffs(), x, y, t))
                .norm();
                worst = worst.max(d);
            }
        }
        kernel_dev.push(worst);
    }

    // operator continuity at the two resolvable times
    let mut op_dev = Vec::new();
    for &t in &times[..2] {
        let grid = round_trip_grid(prop, t, 6.0, 1.0)?;
        let phi = WaveFunction::gaussian(grid, 0.0, 1.0, 0.0);
        let out = apply_forward_with(prop, &phi, t, ExecMode::default())?;
        op_dev.push(out.sup_distance(&phi));
    }

    // deviations below the round-off floor of the t^{-1/2} kernel
    // amplitudes carry no signal (the free particle is exact)
    let floor = 1e-10;
    let mut worst_ratio: f64 = 0.0;
    for k in 1..kernel_dev.len() {
        if kernel_dev[k - 1] > floor && kernel_dev[k] > floor {
            worst_ratio = worst_ratio.max(kernel_dev[k] / kernel_dev[k - 1]);
        }
    }
    if op_dev[0] > floor {
        worst_ratio = worst_ratio.max(op_dev[1] / op_dev[0]);
    }

    Ok(CheckReport::new(
        "asymptotic_kernel_decay",
        &prop.coeffs().name,
        serde_json::json!({
            "times": times,
            "kernel_deviation": kernel_dev,
            "operator_deviation_times": [times[0], times[1]],
            "operator_deviation": op_dev,
        }),
        worst_ratio,
        1.0,
    ))
}

/// |lhs − rhs| of the amplitude addition identity over the given pairs.
/// Pass `threshold = f64::INFINITY` for models where the identity is not
/// asserted (diagnostic-only reporting).
pub fn check_addition(
    prop: &Propagator,
    pairs: &[(f64, f64)],
    threshold: f64,
) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for &(t, s) in pairs {
        let (lhs, rhs) = addition_property_check(prop, t, s)?;
        worst = worst.max((lhs - rhs).abs());
        detail.push(serde_json::json!({ "t": t, "s": s, "lhs": lhs, "rhs": rhs }));
    }
    Ok(CheckReport::new(
        "amplitude_addition",
        &prop.coeffs().name,
        serde_json::json!({ "pairs": detail }),
        worst,
        threshold,
    ))
}

/// Residual of γ′ + W²(t) a(t)/μ²(t) = 0 (numerically differentiated γ)
/// and of the equivalent form γ′ + 2a(0) χ(t)/μ²(t) = 0 with
/// χ = (1/2) W² a/a(0).
pub fn check_chi_formula(prop: &Propagator, t: f64) -> Result<CheckReport> {
    let h = 1e-4;
    let gm = prop.phases(t - h)?.gamma;
    let gp = prop.phases(t + h)?.gamma;
    let dgamma = (gp - gm) / (2.0 * h);
    let w = prop.weight(t)?;
    let a = prop.coeffs().a.value(t);
    let a0 = prop.coeffs().a.value(0.0);
    let mu = prop.mu(t);
    let chi = 0.5 * w * w * a / a0;
    let r1 = dgamma + w * w * a / (mu * mu);
    let r2 = dgamma + 2.0 * a0 * chi / (mu * mu);
    Ok(CheckReport::new(
        "chi_functional_constraint",
        &prop.coeffs().name,
        serde_json::json!({ "t": t, "chi": chi }),
        r1.abs().max(r2.abs()),
        1e-5,
    ))
}

/// Whether the amplitude addition identity is exact for this model family
/// (free particle, uniform fields, and the driven oscillator family).
pub fn addition_holds_for(name: &str) -> bool {
    matches!(
        name,
        "free_particle" | "uniform_field" | "uniform_field_general" | "forced_oscillator"
            | "forced_oscillator_general"
    )
}

/// The full battery for one model: round trips at a moderate time and
/// near t = 0, asymptotics, addition property, and the χ constraint.
pub fn run_battery(prop: &Propagator) -> Result<Vec<CheckReport>> {
    let tv = prop.validity_end();
    let t_mid = 0.4 * tv.min(2.5);
    let mut reports = vec![
        check_orthogonality(prop, t_mid, 1e-4)?,
        check_orthogonality(prop, 1e-3, 1e-3)?,
        check_asymptotics(prop)?,
    ];
    let pairs = [
        (0.8 * tv.min(2.5), 0.3 * tv.min(2.5)),
        (0.6 * tv.min(2.5), 0.25 * tv.min(2.5)),
        (0.5 * tv.min(2.5), 0.5 * tv.min(2.5)),
    ];
    let thr = if addition_holds_for(&prop.coeffs().name) { 1e-10 } else { f64::INFINITY };
    reports.push(check_addition(prop, &pairs, thr)?);
    for &frac in &[0.25, 0.5, 0.8] {
        reports.push(check_chi_formula(prop, frac * t_mid.max(1.0).min(tv * 0.9))?);
    }
    Ok(reports)
}

/// Sup norm over the interior grid of |i ∂_t ψ − H(t) ψ − F|, with the
/// time derivative by central differences of the supplied neighbors and H
/// by finite-difference stencils.
pub fn pde_residual_sup(
    coeffs: &CoefficientSet,
    t: f64,
    dt: f64,
    minus: &WaveFunction,
    mid: &WaveFunction,
    plus: &WaveFunction,
    source: Option<&WaveFunction>,
) -> f64 {
    let h_mid = hamiltonian_fd(coeffs, t, mid);
    let n = mid.grid.n;
    let mut worst: f64 = 0.0;
    for j in 2..n - 2 {
        let dpsi = (plus.values[j] - minus.values[j]) / (2.0 * dt);
        let mut r = Complex64::i() * dpsi - h_mid.values[j];
        if let Some(src) = source {
            r -= src.values[j];
        }
        worst = worst.max(r.norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{
        forced_oscillator, free_particle, get_model, modified_oscillator,
    };

    #[test]
    fn orthogonality_free_particle() {
        let prop = Propagator::new(free_particle()).unwrap();
        let r = check_orthogonality(&prop, 0.5, 1e-4).unwrap();
        assert!(r.pass, "measured {:.3e}", r.measured);
    }

    #[test]
    fn orthogonality_modified_oscillator() {
        let prop = Propagator::new(modified_oscillator()).unwrap();
        let r = check_orthogonality(&prop, 0.4, 1e-4).unwrap();
        assert!(r.pass, "measured {:.3e}", r.measured);
    }

    #[test]
    fn orthogonality_near_identity() {
        // both operators are close to the identity at t = 1e-3
        let prop = Propagator::new(free_particle()).unwrap();
        let r = check_orthogonality(&prop, 1e-3, 1e-3).unwrap();
        assert!(r.pass, "measured {:.3e}", r.measured);
    }

    #[test]
    fn asymptotics_all_models() {
        for name in crate::coefficients::MODEL_NAMES {
            let prop = Propagator::new(get_model(name).unwrap()).unwrap();
            let r = check_asymptotics(&prop).unwrap();
            assert!(r.pass, "{name}: worst ratio {:.3}", r.measured);
        }
    }

    #[test]
    fn oscillator_small_time_operator_continuity() {
        let prop = Propagator::new(forced_oscillator()).unwrap();
        let r = check_asymptotics(&prop).unwrap();
        let devs = r.parameters["operator_deviation"].as_array().unwrap();
        let at_1e2 = devs[1].as_f64().unwrap();
        assert!(at_1e2 < 0.05, "‖U(0.01)φ − φ‖∞ = {at_1e2:.3e}");
    }

    #[test]
    fn addition_reports() {
        let prop = Propagator::new(forced_oscillator()).unwrap();
        let r = check_addition(&prop, &[(1.0, 0.4), (0.7, 0.7)], 1e-12).unwrap();
        assert!(r.pass, "measured {:.3e}", r.measured);

        let prop = Propagator::new(modified_oscillator()).unwrap();
        let r = check_addition(&prop, &[(0.8, 0.3)], f64::INFINITY).unwrap();
        assert!(r.pass); // diagnostic only
        assert!(r.measured.is_finite());
    }

    #[test]
    fn chi_constraint_and_closed_chi_values() {
        let prop = Propagator::new(free_particle()).unwrap();
        let r = check_chi_formula(&prop, 0.8).unwrap();
        assert!(r.pass, "measured {:.3e}", r.measured);
        // χ = 1/2 for the free particle
        let chi = r.parameters["chi"].as_f64().unwrap();
        assert!((chi - 0.5).abs() < 1e-12);

        let prop = Propagator::new(modified_oscillator()).unwrap();
        let t = 0.7;
        let r = check_chi_formula(&prop, t).unwrap();
        assert!(r.pass, "measured {:.3e}", r.measured);
        // χ = cos²t / 2 (W ≡ 1, a = cos²t, a(0) = 1)
        let chi = r.parameters["chi"].as_f64().unwrap();
        assert!((chi - 0.5 * t.cos().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn reports_are_reproducible() {
        let prop = Propagator::new(forced_oscillator()).unwrap();
        let a = check_orthogonality(&prop, 0.6, 1e-4).unwrap();
        let b = check_orthogonality(&prop, 0.6, 1e-4).unwrap();
        assert_eq!(a.measured, b.measured);
    }

    #[test]
    fn table_mentions_every_check() {
        let prop = Propagator::new(free_particle()).unwrap();
        let reports = vec![check_chi_formula(&prop, 0.5).unwrap()];
        let table = format_table(&reports);
        assert!(table.contains("chi_functional_constraint"));
        assert!(table.contains("free_particle"));
    }
}

