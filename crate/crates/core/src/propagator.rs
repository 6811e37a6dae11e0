//! The central solver context: a model together with its characteristic
//! solution, validity interval, and phase engine. Construct one per model
//! and reuse it; all phase and kernel queries are cached inside.

use crate::characteristic::{solve_characteristic, CharacteristicSolution};
use crate::coefficients::Model;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::phases::{PhaseCoefficients, PhaseData, PhaseEngine};
use crate::quad::integrate;

pub struct Propagator {
    model: Model,
    charsol: CharacteristicSolution,
    engine: PhaseEngine,
    t_valid: f64,
}

impl Propagator {
    /// Solve the characteristic equation, locate the validity interval
    /// [0, t_valid) on which a(t) ≠ 0 and μ(t) ≠ 0 for t > 0, and build
    /// the phase tables.
    pub fn new(model: Model) -> Result<Self> {
        let t_cap = model.coeffs.t_cap;
        let t_hard = match model.coeffs.a_first_zero() {
            Some(z) => t_cap.min(z * (1.0 - 1e-6)),
            None => t_cap,
        };
        let charsol = solve_characteristic(&model, t_hard)?;
        let t_valid = match charsol.mu_first_zero() {
            Some(z) => t_hard.min(z),
            None => t_hard,
        };
        let engine = PhaseEngine::new(&model.coeffs, &charsol, t_valid)?;
        Ok(Propagator { model, charsol, engine, t_valid })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn coeffs(&self) -> &crate::coefficients::CoefficientSet {
        &self.model.coeffs
    }

    pub fn characteristic(&self) -> &CharacteristicSolution {
        &self.charsol
    }

    /// Right end of the validity interval [0, t_valid).
    pub fn validity_end(&self) -> f64 {
        self.t_valid
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t < self.t_valid) {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: self.t_valid });
        }
        Ok(())
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.charsol.mu(t)
    }

    /// Phase sextet by the general quadrature route (cached).
    pub fn phases(&self, t: f64) -> Result<PhaseCoefficients> {
        self.check_time(t)?;
        Ok(self.engine.phase_data(t)?.phases)
    }

    pub fn phase_data(&self, t: f64) -> Result<PhaseData> {
        self.check_time(t)?;
        self.engine.phase_data(t)
    }

    pub fn phase_engine(&self) -> &PhaseEngine {
        &self.engine
    }

    /// Phase data from the registry closed forms, when the model has them.
    /// W is still integrated numerically (exactly 1 for the registry
    /// models, whose c ≡ 2d).
    pub fn closed_phase_data(&self, t: f64) -> Option<Result<PhaseData>> {
        let phase_fn = self.model.closed_phases.as_ref()?;
        let cm = self.model.closed_mu.as_ref()?;
        Some((|| {
            self.check_time(t)?;
            let w = (-integrate(|tau| self.model.coeffs.c_minus_2d(tau), 0.0, t, 1e-12)?).exp();
            Ok(PhaseData {
                phases: phase_fn(t),
                w,
                mu: cm.mu.eval1(t),
                mu_prime: cm.mu_prime.eval1(t),
            })
        })())
    }

    /// γ(t) preferring an exact closed form; falls back to quadrature.
    pub fn gamma(&self, t: f64) -> Result<f64> {
        if let Some(cg) = &self.model.closed_gamma {
            self.check_time(t)?;
            return Ok(cg(t));
        }
        Ok(self.phase_data(t)?.phases.gamma)
    }

    /// W(t) = exp(−∫₀ᵗ (c − 2d)).
    pub fn weight(&self, t: f64) -> Result<f64> {
        Ok((-integrate(|tau| self.model.coeffs.c_minus_2d(tau), 0.0, t, 1e-12)?).exp())
    }

    pub fn forward_spec(&self, t: f64) -> Result<KernelSpec> {
        KernelSpec::forward(self.phase_data(t)?)
    }

    pub fn inverse_spec(&self, t: f64) -> Result<KernelSpec> {
        KernelSpec::inverse(self.phase_data(t)?)
    }

    pub fn composed_spec(&self, t: f64, s: f64) -> Result<KernelSpec> {
        if !(s > 0.0 && s < t) {
            return Err(Error::Validation(format!(
                "two-time kernel needs 0 < s < t, got t = {t}, s = {s}"
            )));
        }
        KernelSpec::composed(self.phase_data(t)?, self.phase_data(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{
        forced_oscillator, free_particle, get_model, modified_oscillator,
    };
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn validity_intervals_of_registry_models() {
        let free = Propagator::new(free_particle()).unwrap();
        assert_abs_diff_eq!(free.validity_end(), 10.0); // capped

        let ho = Propagator::new(forced_oscillator()).unwrap();
        assert_abs_diff_eq!(ho.validity_end(), PI, epsilon = 1e-8);

        let modi = Propagator::new(modified_oscillator()).unwrap();
        assert_abs_diff_eq!(modi.validity_end(), FRAC_PI_2, epsilon = 1e-4);
    }

    #[test]
    fn time_checks() {
        let p = Propagator::new(forced_oscillator()).unwrap();
        assert!(p.check_time(1.0).is_ok());
        assert!(p.check_time(0.0).is_err());
        assert!(p.check_time(3.2).is_err());
        assert!(p.check_time(-1.0).is_err());
    }

    #[test]
    fn closed_and_quadrature_phases_agree() {
        for name in ["free_particle", "uniform_field", "forced_oscillator"] {
            let p = Propagator::new(get_model(name).unwrap()).unwrap();
            let t = 0.8;
            let q = p.phase_data(t).unwrap();
            let c = p.closed_phase_data(t).unwrap().unwrap();
            assert_abs_diff_eq!(q.phases.alpha, c.phases.alpha, epsilon = 1e-9);
            assert_abs_diff_eq!(q.phases.beta, c.phases.beta, epsilon = 1e-9);
            assert_abs_diff_eq!(q.phases.gamma, c.phases.gamma, epsilon = 1e-9);
            assert_abs_diff_eq!(q.phases.delta, c.phases.delta, epsilon = 1e-9);
            assert_abs_diff_eq!(q.phases.epsilon, c.phases.epsilon, epsilon = 1e-9);
            assert_abs_diff_eq!(q.phases.kappa, c.phases.kappa, epsilon = 1e-9);
            assert_abs_diff_eq!(q.w, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn composed_spec_orders_times() {
        let p = Propagator::new(free_particle()).unwrap();
        assert!(p.composed_spec(1.0, 0.4).is_ok());
        assert!(p.composed_spec(0.4, 1.0).is_err());
        assert!(p.composed_spec(1.0, 0.0).is_err());
    }
}
