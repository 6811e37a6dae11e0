//! The six phase coefficients (α, β, γ, δ, ε, κ) of the quadratic phase
//!
//!   S(x, y, t) = α x² + β x y + γ y² + δ x + ε y + κ
//!
//! computed from the characteristic function by explicit integral
//! formulas:
//!
//!   α = μ′/(4aμ) − d/(2a)
//!   β = −W/μ,                W(t) = exp(−∫₀ᵗ (c − 2d))
//!   γ = a W²/(μ μ′) − 4 ∫₀ᵗ (aσ/μ′²) W² dτ
//!   δ = (W/μ) ∫₀ᵗ W⁻¹ [(f − (d/a) g) μ + (g/(2a)) μ′] dτ
//!   ε = −(2a/μ′) δ W + 8 ∫₀ᵗ (aσ/μ′²) W (μδ) dτ + 2 ∫₀ᵗ (a/μ′) W (f − (d/a) g) dτ
//!   κ = (aμ/μ′) δ² − 4 ∫₀ᵗ (aσ/μ′²) (μδ)² dτ − 2 ∫₀ᵗ (a/μ′) (μδ) (f − (d/a) g) dτ
//!
//! with δ(0⁺) = g(0)/(2a(0)), ε(0⁺) = −δ(0⁺), κ(0⁺) = 0.
//!
//! The integral representations carry spurious μ′ denominators (they were
//! arranged to absorb the t → 0 singularity), so past a turning point of μ
//! they degenerate even though γ, ε, κ themselves stay smooth. There the
//! engine continues each trajectory from an anchor point with the exact
//! first-order identities γ′ = −aW²/μ², ε′ = (g − 2aδ)β, κ′ = gδ − aδ².

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::characteristic::{tau_sigma, CharacteristicSolution};
use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{integrate, CumTable};

/// The phase sextet at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCoefficients {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: f64,
}

impl PhaseCoefficients {
    /// S(x, y) = α x² + β x y + γ y² + δ x + ε y + κ.
    pub fn eval_s(&self, x: f64, y: f64) -> f64 {
        self.alpha * x * x
            + self.beta * x * y
            + self.gamma * y * y
            + self.delta * x
            + self.epsilon * y
            + self.kappa
    }
}

/// Convenience alias for the spec-level operation name.
pub fn eval_s(phases: &PhaseCoefficients, x: f64, y: f64) -> f64 {
    phases.eval_s(x, y)
}

/// Phase sextet plus the kernel ingredients that travel with it.
#[derive(Debug, Clone, Copy)]
pub struct PhaseData {
    pub phases: PhaseCoefficients,
    /// W(t) = exp(−∫₀ᵗ (c − 2d) dτ)
    pub w: f64,
    pub mu: f64,
    pub mu_prime: f64,
}

const CACHE_QUANTUM: f64 = 1e-12;
/// Fraction of the first μ′ zero beyond which the anchored continuation
/// replaces the direct integral representations.
const ANCHOR_SWITCH: f64 = 0.85;
const ANCHOR_POINT: f64 = 0.7;

pub struct PhaseEngine {
    coeffs: CoefficientSet,
    charsol: CharacteristicSolution,
    t_build: f64,
    /// cumulative ∫₀^τ (c − 2d)
    cum_cd: CumTable,
    /// cumulative inner integral of the δ formula
    j_table: CumTable,
    delta0: f64,
    mu_prime_zero: Option<f64>,
    anchor: Option<Anchor>,
    cache: Mutex<HashMap<i64, PhaseData>>,
}

#[derive(Debug, Clone, Copy)]
struct Anchor {
    t: f64,
    gamma: f64,
    epsilon: f64,
    kappa: f64,
}

impl PhaseEngine {
    /// Build dense inner-antiderivative tables covering [0, t_build].
    pub fn new(
        coeffs: &CoefficientSet,
        charsol: &CharacteristicSolution,
        t_build: f64,
    ) -> Result<Self> {
        let n = dense_nodes(t_build);
        let cum_cd = CumTable::build(|tau| coeffs.c_minus_2d(tau), 0.0, t_build, n);

        let a0 = coeffs.a.value(0.0);
        let g0 = coeffs.g.value(0.0);
        let delta0 = g0 / (2.0 * a0);

        let j_integrand = |tau: f64| {
            let a = coeffs.a.value(tau);
            let d = coeffs.d.value(tau);
            let f = coeffs.f.value(tau);
            let g = coeffs.g.value(tau);
            let inv_w = cum_cd.eval(tau).exp();
            inv_w * ((f - d / a * g) * charsol.mu(tau) + g / (2.0 * a) * charsol.mu_prime(tau))
        };
        let j_table = CumTable::build(j_integrand, 0.0, t_build, n);

        let mu_prime_zero = charsol.mu_prime_first_zero().filter(|z| *z < t_build);

        let mut engine = PhaseEngine {
            coeffs: coeffs.clone(),
            charsol: charsol.clone(),
            t_build,
            cum_cd,
            j_table,
            delta0,
            mu_prime_zero,
            anchor: None,
            cache: Mutex::new(HashMap::new()),
        };

        if let Some(tz) = mu_prime_zero {
            let ta = ANCHOR_POINT * tz;
            let gamma = engine.direct_gamma(ta)?;
            let epsilon = engine.direct_epsilon(ta)?;
            let kappa = engine.direct_kappa(ta)?;
            engine.anchor = Some(Anchor { t: ta, gamma, epsilon, kappa });
        }
        Ok(engine)
    }

    pub fn t_build(&self) -> f64 {
        self.t_build
    }

    /// W at interior quadrature points, from the dense table.
    fn w_at(&self, tau: f64) -> f64 {
        (-self.cum_cd.eval(tau)).exp()
    }

    /// δ at interior quadrature points, from the dense tables.
    pub fn delta_at(&self, tau: f64) -> f64 {
        if tau < 1e-9 {
            return self.delta0;
        }
        self.w_at(tau) * self.j_table.eval(tau) / self.charsol.mu(tau)
    }

    fn beta_at(&self, tau: f64) -> f64 {
        -self.w_at(tau) / self.charsol.mu(tau)
    }

    /// f − (d/a) g, the effective driving term.
    fn drive(&self, tau: f64) -> f64 {
        let a = self.coeffs.a.value(tau);
        self.coeffs.f.value(tau) - self.coeffs.d.value(tau) / a * self.coeffs.g.value(tau)
    }

    /// a σ / μ′², the weight shared by the γ, ε, κ integrals.
    fn asig_over_mup2(&self, tau: f64) -> f64 {
        let (_, sigma) = tau_sigma_quiet(&self.coeffs, tau);
        let a = self.coeffs.a.value(tau);
        let mup = self.charsol.mu_prime(tau);
        a * sigma / (mup * mup)
    }

    fn direct_gamma(&self, t: f64) -> Result<f64> {
        let a = self.coeffs.a.value(t);
        let w = self.w_at(t);
        let mu = self.charsol.mu(t);
        let mup = self.charsol.mu_prime(t);
        let tail = integrate(
            |tau| {
                let w2 = (-2.0 * self.cum_cd.eval(tau)).exp();
                self.asig_over_mup2(tau) * w2
            },
            0.0,
            t,
            1e-10,
        )?;
        Ok(a * w * w / (mu * mup) - 4.0 * tail)
    }

    fn direct_epsilon(&self, t: f64) -> Result<f64> {
        let a = self.coeffs.a.value(t);
        let mup = self.charsol.mu_prime(t);
        let w = self.w_at(t);
        let delta_t = self.delta_at(t);
        let i1 = integrate(
            |tau| {
                self.asig_over_mup2(tau)
                    * self.w_at(tau)
                    * self.charsol.mu(tau)
                    * self.delta_at(tau)
            },
            0.0,
            t,
            1e-10,
        )?;
        let i2 = integrate(
            |tau| {
                let a_tau = self.coeffs.a.value(tau);
                a_tau / self.charsol.mu_prime(tau) * self.w_at(tau) * self.drive(tau)
            },
            0.0,
            t,
            1e-10,
        )?;
        Ok(-2.0 * a / mup * delta_t * w + 8.0 * i1 + 2.0 * i2)
    }

    fn direct_kappa(&self, t: f64) -> Result<f64> {
        let a = self.coeffs.a.value(t);
        let mu = self.charsol.mu(t);
        let mup = self.charsol.mu_prime(t);
        let delta_t = self.delta_at(t);
        let i1 = integrate(
            |tau| {
                let md = self.charsol.mu(tau) * self.delta_at(tau);
                self.asig_over_mup2(tau) * md * md
            },
            0.0,
            t,
            1e-10,
        )?;
        let i2 = integrate(
            |tau| {
                let a_tau = self.coeffs.a.value(tau);
                let md = self.charsol.mu(tau) * self.delta_at(tau);
                a_tau / self.charsol.mu_prime(tau) * md * self.drive(tau)
            },
            0.0,
            t,
            1e-10,
        )?;
        Ok(a * mu / mup * delta_t * delta_t - 4.0 * i1 - 2.0 * i2)
    }

    fn anchored(&self) -> Anchor {
        self.anchor.expect("anchor exists when mu_prime_zero is set")
    }

    fn gamma_at(&self, t: f64) -> Result<f64> {
        match self.mu_prime_zero {
            Some(tz) if t > ANCHOR_SWITCH * tz => {
                let anc = self.anchored();
                let tail = integrate(
                    |tau| {
                        let w = self.w_at(tau);
                        let mu = self.charsol.mu(tau);
                        self.coeffs.a.value(tau) * w * w / (mu * mu)
                    },
                    anc.t,
                    t,
                    1e-10,
                )?;
                Ok(anc.gamma - tail)
            }
            _ => self.direct_gamma(t),
        }
    }

    fn epsilon_at(&self, t: f64) -> Result<f64> {
        match self.mu_prime_zero {
            Some(tz) if t > ANCHOR_SWITCH * tz => {
                let anc = self.anchored();
                let tail = integrate(
                    |tau| {
                        let g = self.coeffs.g.value(tau);
                        let a = self.coeffs.a.value(tau);
                        (g - 2.0 * a * self.delta_at(tau)) * self.beta_at(tau)
                    },
                    anc.t,
                    t,
                    1e-10,
                )?;
                Ok(anc.epsilon + tail)
            }
            _ => self.direct_epsilon(t),
        }
    }

    fn kappa_at(&self, t: f64) -> Result<f64> {
        match self.mu_prime_zero {
            Some(tz) if t > ANCHOR_SWITCH * tz => {
                let anc = self.anchored();
                let tail = integrate(
                    |tau| {
                        let g = self.coeffs.g.value(tau);
                        let a = self.coeffs.a.value(tau);
                        let de = self.delta_at(tau);
                        g * de - a * de * de
                    },
                    anc.t,
                    t,
                    1e-10,
                )?;
                Ok(anc.kappa + tail)
            }
            _ => self.direct_kappa(t),
        }
    }

    /// Full sextet with W, μ, μ′ at time t; results are cached.
    pub fn phase_data(&self, t: f64) -> Result<PhaseData> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: self.t_build });
        }
        if t > self.t_build * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: self.t_build });
        }
        let key = (t / CACHE_QUANTUM).round() as i64;
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(*hit);
        }

        let mu = self.charsol.mu(t);
        if mu.abs() < 1e-12 {
            return Err(Error::SingularMu { t });
        }
        let mu_prime = self.charsol.mu_prime(t);
        let a = self.coeffs.a.value(t);
        if a.abs() < 1e-12 {
            return Err(Error::SingularCoefficient { t });
        }
        let d = self.coeffs.d.value(t);

        // W once per time by adaptive quadrature
        let w = (-integrate(|tau| self.coeffs.c_minus_2d(tau), 0.0, t, 1e-12)?).exp();

        let alpha = mu_prime / (4.0 * a * mu) - d / (2.0 * a);
        let beta = -w / mu;
        let gamma = self.gamma_at(t)?;
        let delta = w / mu * integrate(|tau| self.j_integrand(tau), 0.0, t, 1e-10)?;
        let epsilon = self.epsilon_at(t)?;
        let kappa = self.kappa_at(t)?;

        let data = PhaseData {
            phases: PhaseCoefficients { t, alpha, beta, gamma, delta, epsilon, kappa },
            w,
            mu,
            mu_prime,
        };
        self.cache.lock().unwrap().insert(key, data);
        Ok(data)
    }

    fn j_integrand(&self, tau: f64) -> f64 {
        let a = self.coeffs.a.value(tau);
        let d = self.coeffs.d.value(tau);
        let f = self.coeffs.f.value(tau);
        let g = self.coeffs.g.value(tau);
        self.cum_cd.eval(tau).exp()
            * ((f - d / a * g) * self.charsol.mu(tau)
                + g / (2.0 * a) * self.charsol.mu_prime(tau))
    }
}

fn tau_sigma_quiet(coeffs: &CoefficientSet, t: f64) -> (f64, f64) {
    tau_sigma(coeffs, t).unwrap_or((f64::NAN, f64::NAN))
}

fn dense_nodes(t_build: f64) -> usize {
    let n = (t_build * 400.0).ceil() as usize;
    let n = n.max(2000);
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// The quadrature route to the sextet (builds a throwaway engine; prefer
/// holding a [`PhaseEngine`] when evaluating many times).
pub fn compute_phases(
    coeffs: &CoefficientSet,
    charsol: &CharacteristicSolution,
    t: f64,
) -> Result<PhaseCoefficients> {
    let engine = PhaseEngine::new(coeffs, charsol, charsol.t_end)?;
    Ok(engine.phase_data(t)?.phases)
}

/// Models with published closed phase integrals, used as independent
/// oracles against the general quadrature route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialModel {
    /// a = 1/2, b = c = d = 0, arbitrary f(t), g(t); μ = t.
    UniformFieldGeneral,
    /// a = b = 1/2, c = d = 0, arbitrary f(t), g(t); μ = sin t.
    ForcedOscillator,
}

/// Closed-form phase integrals for the two special model families.
///
/// Everything is evaluated by nested adaptive quadrature straight from the
/// printed formulas; no machinery from [`PhaseEngine`] is reused.
pub fn special_phases(
    model: SpecialModel,
    t: f64,
    f: &Expr,
    g: &Expr,
) -> Result<PhaseCoefficients> {
    if !(t > 0.0) {
        return Err(Error::OutOfRange { t, lo: 0.0, hi: f64::INFINITY });
    }
    match model {
        SpecialModel::UniformFieldGeneral => {
            let delta_of = |s: f64| -> Result<f64> {
                Ok(integrate(|tau| f.eval1(tau) * tau + g.eval1(tau), 0.0, s, 1e-12)? / s)
            };
            let delta = delta_of(t)?;
            let epsilon = -delta + integrate(|tau| f.eval1(tau), 0.0, t, 1e-12)?;
            // the τ-integral uses δ(τ), matching the κ equation it solves
            let kappa = 0.5 * t * delta * delta
                - integrate(
                    |tau| {
                        if tau == 0.0 {
                            0.0
                        } else {
                            tau * delta_of(tau).unwrap_or(f64::NAN) * f.eval1(tau)
                        }
                    },
                    0.0,
                    t,
                    1e-10,
                )?;
            Ok(PhaseCoefficients {
                t,
                alpha: 0.5 / t,
                beta: -1.0 / t,
                gamma: 0.5 / t,
                delta,
                epsilon,
                kappa,
            })
        }
        SpecialModel::ForcedOscillator => {
            let half_pi = std::f64::consts::FRAC_PI_2;
            if t >= half_pi - 1e-9 {
                // 1/cos τ in the ε integral blows up at π/2
                return Err(Error::OutOfRange { t, lo: 0.0, hi: half_pi });
            }
            let delta_of = |s: f64| -> Result<f64> {
                Ok(integrate(
                    |tau| f.eval1(tau) * tau.sin() + g.eval1(tau) * tau.cos(),
                    0.0,
                    s,
                    1e-12,
                )? / s.sin())
            };
            let delta = delta_of(t)?;
            let epsilon = -delta / t.cos()
                + integrate(
                    |tau| {
                        if tau == 0.0 {
                            0.0
                        } else {
                            tau.sin() * delta_of(tau).unwrap_or(f64::NAN) / tau.cos().powi(2)
                        }
                    },
                    0.0,
                    t,
                    1e-10,
                )?
                + integrate(|tau| f.eval1(tau) / tau.cos(), 0.0, t, 1e-10)?;
            let kappa = 0.5 * t.tan() * delta * delta
                - 0.5
                    * integrate(
                        |tau| {
                            if tau == 0.0 {
                                0.0
                            } else {
                                let d = delta_of(tau).unwrap_or(f64::NAN);
                                tau.tan().powi(2) * d * d
                            }
                        },
                        0.0,
                        t,
                        1e-10,
                    )?
                - integrate(
                    |tau| {
                        if tau == 0.0 {
                            0.0
                        } else {
                            tau.tan() * delta_of(tau).unwrap_or(f64::NAN) * f.eval1(tau)
                        }
                    },
                    0.0,
                    t,
                    1e-10,
                )?;
            Ok(PhaseCoefficients {
                t,
                alpha: 0.5 * t.cos() / t.sin(),
                beta: -1.0 / t.sin(),
                gamma: 0.5 * t.cos() / t.sin(),
                delta,
                epsilon,
                kappa,
            })
        }
    }
}
