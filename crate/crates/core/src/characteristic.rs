//! The characteristic equation μ″ − τ(t) μ′ + 4σ(t) μ = 0 with
//! μ(0) = 0, μ′(0) = 2a(0), and the companion Riccati system for the six
//! phase coefficients. The two provide independent routes to the same
//! phase data and are cross-validated in the test suite.

use crate::coefficients::{first_root, ClosedMu, CoefficientSet, Model};
use crate::error::{Error, Result};
use crate::ode::{solve, DenseSolution, SolverOptions};
use crate::phases::PhaseCoefficients;

/// τ(t) = a′/a − 2c + 4d and
/// σ(t) = ab − cd + d² + (d·a′/a − d′)/2 (the d ≡ 0 safe expansion).
pub fn tau_sigma(coeffs: &CoefficientSet, t: f64) -> Result<(f64, f64)> {
    let a = coeffs.a.value(t);
    if a.abs() < 1e-12 {
        return Err(Error::SingularCoefficient { t });
    }
    let ap = coeffs.a.derivative(t);
    let b = coeffs.b.value(t);
    let c = coeffs.c.value(t);
    let d = coeffs.d.value(t);
    let dp = coeffs.d.derivative(t);
    let tau = ap / a - 2.0 * c + 4.0 * d;
    let sigma = a * b - c * d + d * d + 0.5 * (d * ap / a - dp);
    Ok((tau, sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Numeric,
}

/// The characteristic function μ with its derivative, evaluable on
/// [0, t_end], either from a registry closed form or from a dense
/// numerical trajectory.
#[derive(Debug, Clone)]
pub struct CharacteristicSolution {
    source: Source,
    pub t_end: f64,
}

#[derive(Debug, Clone)]
enum Source {
    Closed(ClosedMu),
    Numeric(DenseSolution<2>),
}

impl CharacteristicSolution {
    pub fn provenance(&self) -> Provenance {
        match self.source {
            Source::Closed(_) => Provenance::ClosedForm,
            Source::Numeric(_) => Provenance::Numeric,
        }
    }

    pub fn mu(&self, t: f64) -> f64 {
        match &self.source {
            Source::Closed(cm) => cm.mu.eval1(t),
            Source::Numeric(sol) => sol.eval(t)[0],
        }
    }

    pub fn mu_prime(&self, t: f64) -> f64 {
        match &self.source {
            Source::Closed(cm) => cm.mu_prime.eval1(t),
            Source::Numeric(sol) => sol.eval(t)[1],
        }
    }

    /// First positive zero of μ, if one exists below `t_end`.
    pub fn mu_first_zero(&self) -> Option<f64> {
        let lo = 1e-6 * self.t_end.max(1.0);
        first_root(|t| self.mu(t), |t| self.mu_prime(t), lo, self.t_end)
    }

    /// First positive zero of μ′ (a turning point of μ), if any.
    pub fn mu_prime_first_zero(&self) -> Option<f64> {
        let fd = |t: f64| {
            let h = 1e-6;
            (self.mu_prime(t + h) - self.mu_prime(t - h)) / (2.0 * h)
        };
        first_root(|t| self.mu_prime(t), fd, 1e-6 * self.t_end.max(1.0), self.t_end)
    }
}

/// Solve for μ on [0, t_max], preferring a registered closed form.
pub fn solve_characteristic(model: &Model, t_max: f64) -> Result<CharacteristicSolution> {
    if let Some(cm) = &model.closed_mu {
        return Ok(CharacteristicSolution {
            source: Source::Closed(cm.clone()),
            t_end: t_max,
        });
    }
    solve_characteristic_numeric(&model.coeffs, t_max)
}

/// Numerical route: adaptive Runge–Kutta on (μ, μ′) with dense output.
pub fn solve_characteristic_numeric(
    coeffs: &CoefficientSet,
    t_max: f64,
) -> Result<CharacteristicSolution> {
    if let Some(z) = coeffs.a_first_zero() {
        if z <= t_max {
            return Err(Error::SingularCoefficient { t: z });
        }
    }
    let rhs = |t: f64, y: &[f64; 2]| {
        let (tau, sigma) = tau_sigma_unchecked(coeffs, t);
        [y[1], tau * y[1] - 4.0 * sigma * y[0]]
    };
    let y0 = [0.0, 2.0 * coeffs.a.value(0.0)];
    let sol = solve(rhs, 0.0, t_max, y0, &SolverOptions::default())?;
    Ok(CharacteristicSolution {
        source: Source::Numeric(sol),
        t_end: t_max,
    })
}

fn tau_sigma_unchecked(coeffs: &CoefficientSet, t: f64) -> (f64, f64) {
    let a = coeffs.a.value(t);
    let ap = coeffs.a.derivative(t);
    let b = coeffs.b.value(t);
    let c = coeffs.c.value(t);
    let d = coeffs.d.value(t);
    let dp = coeffs.d.derivative(t);
    (
        ap / a - 2.0 * c + 4.0 * d,
        a * b - c * d + d * d + 0.5 * (d * ap / a - dp),
    )
}

/// Dense trajectory of the phase sextet obtained by direct integration of
/// its coupled equations
///
///   α′ = −b − 2cα − 4aα²      β′ = −(c + 4aα)β       γ′ = −aβ²
///   δ′ = −(c + 4aα)δ + f + 2αg  ε′ = (g − 2aδ)β      κ′ = gδ − aδ²
///
/// seeded at a strictly positive t₀ where α, β, γ are finite.
#[derive(Debug, Clone)]
pub struct RiccatiState {
    pub t0: f64,
    pub t_end: f64,
    sol: DenseSolution<6>,
}

impl RiccatiState {
    pub fn sextet_at(&self, t: f64) -> PhaseCoefficients {
        let y = self.sol.eval(t);
        PhaseCoefficients {
            t,
            alpha: y[0],
            beta: y[1],
            gamma: y[2],
            delta: y[3],
            epsilon: y[4],
            kappa: y[5],
        }
    }
}

pub fn solve_riccati_system(
    coeffs: &CoefficientSet,
    phases_at_t0: &PhaseCoefficients,
    t0: f64,
    t_max: f64,
) -> Result<RiccatiState> {
    if !(t0 > 0.0 && t0 < t_max) {
        return Err(Error::Validation(format!(
            "riccati seeding requires 0 < t0 < t_max, got t0 = {t0}, t_max = {t_max}"
        )));
    }
    let y0 = [
        phases_at_t0.alpha,
        phases_at_t0.beta,
        phases_at_t0.gamma,
        phases_at_t0.delta,
        phases_at_t0.epsilon,
        phases_at_t0.kappa,
    ];
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("riccati seed must be finite".into()));
    }
    let rhs = |t: f64, y: &[f64; 6]| {
        let a = coeffs.a.value(t);
        let b = coeffs.b.value(t);
        let c = coeffs.c.value(t);
        let f = coeffs.f.value(t);
        let g = coeffs.g.value(t);
        let [al, be, ga, de, ep, ka] = *y;
        let _ = (ga, ep, ka);
        let lin = c + 4.0 * a * al;
        [
            -b - 2.0 * c * al - 4.0 * a * al * al,
            -lin * be,
            -a * be * be,
            -lin * de + f + 2.0 * al * g,
            (g - 2.0 * a * de) * be,
            g * de - a * de * de,
        ]
    };
    let sol = solve(rhs, t0, t_max, y0, &SolverOptions::default())?;
    Ok(RiccatiState { t0, t_end: t_max, sol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{
        forced_oscillator, free_particle, get_model, modified_oscillator, MODEL_NAMES,
    };
    use approx::assert_abs_diff_eq;

    #[test]
    fn tau_sigma_free_particle() {
        let m = free_particle();
        for &t in &[0.0, 0.5, 2.0] {
            let (tau, sigma) = tau_sigma(&m.coeffs, t).unwrap();
            assert_abs_diff_eq!(tau, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(sigma, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn tau_sigma_harmonic_oscillator() {
        let m = forced_oscillator();
        for &t in &[0.1, 1.0, 2.5] {
            let (tau, sigma) = tau_sigma(&m.coeffs, t).unwrap();
            assert_abs_diff_eq!(tau, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(sigma, 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn tau_sigma_modified_oscillator() {
        // μ″ + 2 tan t μ′ − 2μ = 0, i.e. τ = −2 tan t and 4σ = −2.
        let m = modified_oscillator();
        for &t in &[0.1, 0.6, 1.2] {
            let (tau, sigma) = tau_sigma(&m.coeffs, t).unwrap();
            assert_abs_diff_eq!(tau, -2.0 * t.tan(), epsilon = 1e-12);
            assert_abs_diff_eq!(sigma, -0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn tau_sigma_rejects_vanishing_a() {
        let m = modified_oscillator();
        assert!(tau_sigma(&m.coeffs, std::f64::consts::FRAC_PI_2).is_err());
    }

    #[test]
    fn closed_mu_satisfies_characteristic_equation() {
        // residual μ″ − τ μ′ + 4 σ μ at 100 points, symbolic derivatives
        for name in MODEL_NAMES {
            let m = get_model(name).unwrap();
            let cm = m.closed_mu.as_ref().unwrap();
            let hi = if name == "modified_oscillator" { 1.5 } else { 3.0 };
            for i in 1..=100 {
                let t = hi * i as f64 / 100.0;
                let (tau, sigma) = tau_sigma(&m.coeffs, t).unwrap();
                let r = cm.mu_second.eval1(t) - tau * cm.mu_prime.eval1(t)
                    + 4.0 * sigma * cm.mu.eval1(t);
                assert!(r.abs() < 1e-10, "{name}: residual {r:.3e} at t = {t}");
            }
        }
    }

    #[test]
    fn numeric_mu_free_particle_is_linear() {
        let m = free_particle();
        let sol = solve_characteristic_numeric(&m.coeffs, 5.0).unwrap();
        assert_eq!(sol.provenance(), Provenance::Numeric);
        for &t in &[0.0, 0.7, 2.4, 5.0] {
            assert_abs_diff_eq!(sol.mu(t), t, epsilon = 1e-10);
            assert_abs_diff_eq!(sol.mu_prime(t), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn numeric_mu_matches_sine() {
        let m = forced_oscillator();
        let sol = solve_characteristic_numeric(&m.coeffs, 3.0).unwrap();
        let mut t = 0.0;
        while t <= 3.0 {
            assert_abs_diff_eq!(sol.mu(t), t.sin(), epsilon = 1e-9);
            t += 0.0917;
        }
    }

    #[test]
    fn numeric_mu_modified_oscillator_matches_closed_form() {
        let m = modified_oscillator();
        let sol = solve_characteristic_numeric(&m.coeffs, 1.0).unwrap();
        let mut max_err: f64 = 0.0;
        let mut t: f64 = 0.0;
        while t <= 1.0 {
            let closed = t.cos() * t.sinh() + t.sin() * t.cosh();
            max_err = max_err.max((sol.mu(t) - closed).abs());
            t += 0.01;
        }
        assert!(max_err < 1e-8, "max error {max_err:.3e}");
    }

    #[test]
    fn numeric_solve_refuses_singular_a() {
        let m = modified_oscillator();
        let err = solve_characteristic_numeric(&m.coeffs, 3.0).unwrap_err();
        assert!(matches!(err, Error::SingularCoefficient { .. }));
    }

    #[test]
    fn mu_zero_detection() {
        let m = forced_oscillator();
        let sol = solve_characteristic(&m, 10.0).unwrap();
        let z = sol.mu_first_zero().unwrap();
        assert_abs_diff_eq!(z, std::f64::consts::PI, epsilon = 1e-9);
        let tp = sol.mu_prime_first_zero().unwrap();
        assert_abs_diff_eq!(tp, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
    }

    #[test]
    fn riccati_free_particle_reaches_closed_form() {
        let m = free_particle();
        let t0 = 0.1;
        let seed = (m.closed_phases.as_ref().unwrap())(t0);
        let st = solve_riccati_system(&m.coeffs, &seed, t0, 1.5).unwrap();
        let p = st.sextet_at(1.0);
        assert_abs_diff_eq!(p.alpha, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(p.beta, -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.gamma, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(p.delta, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.epsilon, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.kappa, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn riccati_zero_beta_freezes_beta_and_gamma() {
        let m = forced_oscillator();
        let seed = PhaseCoefficients {
            t: 0.2,
            alpha: 0.3,
            beta: 0.0,
            gamma: 0.7,
            delta: 0.1,
            epsilon: 0.0,
            kappa: 0.0,
        };
        let st = solve_riccati_system(&m.coeffs, &seed, 0.2, 2.0).unwrap();
        for &t in &[0.5, 1.0, 2.0] {
            let p = st.sextet_at(t);
            assert_abs_diff_eq!(p.beta, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p.gamma, 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn riccati_unforced_oscillator_keeps_linear_phases_zero() {
        let m = forced_oscillator();
        let t0 = 0.1;
        let seed = (m.closed_phases.as_ref().unwrap())(t0);
        let st = solve_riccati_system(&m.coeffs, &seed, t0, 1.0).unwrap();
        for &t in &[0.3, 0.6, 1.0] {
            let p = st.sextet_at(t);
            assert_abs_diff_eq!(p.delta, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p.epsilon, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p.kappa, 0.0, epsilon = 1e-12);
        }
    }
}
