//! The integral kernels of the theory.
//!
//! Forward propagator      G(x,y,t)   = e^{iS(x,y,t)} / √(2πiμ(t))
//! Inverse kernel          H(x,y,t)   = G*(y,x,t) · W(t)
//! Two-time kernel         G(x,y,t,s) = ∫ G(x,z,t) H(z,y,s) dz, in closed form
//!
//! with W(t) = exp(−∫₀ᵗ (c − 2d) dτ). Square roots take the principal
//! branch, so √(2πiμ) = √(2π|μ|) e^{iπ/4·sign μ}; all registry models are
//! used on their first μ > 0 interval where the branch never wraps.

use num_complex::Complex64;

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::phases::PhaseData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Forward,
    Inverse,
    Composed,
}

/// Everything needed to evaluate one kernel: the phase data at its time
/// (and, for the two-time kernel, at the second time s < t).
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub at_t: PhaseData,
    pub at_s: Option<PhaseData>,
}

impl KernelSpec {
    pub fn forward(at_t: PhaseData) -> Result<Self> {
        check_mu(&at_t)?;
        Ok(KernelSpec { kind: KernelKind::Forward, at_t, at_s: None })
    }

    pub fn inverse(at_t: PhaseData) -> Result<Self> {
        check_mu(&at_t)?;
        Ok(KernelSpec { kind: KernelKind::Inverse, at_t, at_s: None })
    }

    pub fn composed(at_t: PhaseData, at_s: PhaseData) -> Result<Self> {
        check_mu(&at_t)?;
        check_mu(&at_s)?;
        if (at_t.phases.gamma - at_s.phases.gamma).abs() < 1e-12 {
            return Err(Error::CoincidentGamma { t: at_t.phases.t, s: at_s.phases.t });
        }
        Ok(KernelSpec { kind: KernelKind::Composed, at_t, at_s: Some(at_s) })
    }
}

fn check_mu(data: &PhaseData) -> Result<()> {
    if data.mu.abs() < 1e-12 {
        Err(Error::SingularMu { t: data.phases.t })
    } else {
        Ok(())
    }
}

/// 1/√(2πiμ), principal branch.
pub fn forward_amplitude(mu: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * std::f64::consts::PI * mu).sqrt().inv()
}

/// G(x,y,t) = e^{iS(x,y,t)} / √(2πiμ(t)).
pub fn green_forward(spec: &KernelSpec, x: f64, y: f64) -> Complex64 {
    let p = &spec.at_t.phases;
    forward_amplitude(spec.at_t.mu) * (Complex64::i() * p.eval_s(x, y)).exp()
}

/// H(x,y,t) = G*(y,x,t) · W(t): the forward kernel is evaluated at swapped
/// arguments, conjugated, and weighted.
pub fn green_inverse(spec: &KernelSpec, x: f64, y: f64) -> Complex64 {
    green_forward(spec, y, x).conj() * spec.at_t.w
}

/// The two-time kernel in its grouped closed form: amplitude
/// 1/√(4πi μ(t)μ(s)(γ(s)−γ(t))) times W(s) times three exponential factors
/// whose arguments are rational in the phase differences.
pub fn green_composed(spec: &KernelSpec, x: f64, y: f64) -> Complex64 {
    let pt = &spec.at_t.phases;
    let data_s = spec.at_s.as_ref().expect("composed spec carries s data");
    let ps = &data_s.phases;

    let dg = pt.gamma - ps.gamma;
    let e = pt.epsilon - ps.epsilon;
    let b = pt.beta * x - ps.beta * y;
    let dd = pt.delta * x - ps.delta * y;
    let aa = pt.alpha * x * x - ps.alpha * y * y;
    let k = pt.kappa - ps.kappa;

    let amp = composed_amplitude(spec.at_t.mu, data_s.mu, -dg) * data_s.w;
    // exp(z / (4i dg)) = exp(−i z / (4 dg))
    let f1 = Complex64::new(0.0, -(e * e - 4.0 * dg * k) / (4.0 * dg)).exp();
    let f2 = Complex64::new(0.0, -(e * b - 2.0 * dg * dd) / (2.0 * dg)).exp();
    let f3 = Complex64::new(0.0, -(b * b - 4.0 * dg * aa) / (4.0 * dg)).exp();
    amp * f1 * f2 * f3
}

/// The same kernel with its exponentials grouped the way the Gaussian
/// z-integration produces them; algebraically identical to
/// [`green_composed`] and kept for cross-checking.
pub fn green_composed_alt(spec: &KernelSpec, x: f64, y: f64) -> Complex64 {
    let pt = &spec.at_t.phases;
    let data_s = spec.at_s.as_ref().expect("composed spec carries s data");
    let ps = &data_s.phases;

    let dg = pt.gamma - ps.gamma;
    let e = pt.epsilon - ps.epsilon;
    let b = pt.beta * x - ps.beta * y;
    let quad = pt.alpha * x * x - ps.alpha * y * y + pt.delta * x - ps.delta * y + pt.kappa
        - ps.kappa;

    let amp = composed_amplitude(spec.at_t.mu, data_s.mu, -dg) * data_s.w;
    let be = b + e;
    amp * (Complex64::i() * quad).exp() * Complex64::new(0.0, -be * be / (4.0 * dg)).exp()
}

/// 1/√(4πi m), principal branch, with m = μ(t)μ(s)(γ(s)−γ(t)).
pub fn composed_amplitude(mu_t: f64, mu_s: f64, gamma_s_minus_t: f64) -> Complex64 {
    let m = mu_t * mu_s * gamma_s_minus_t;
    Complex64::new(0.0, 4.0 * std::f64::consts::PI * m).sqrt().inv()
}

/// ∫ e^{i(az² + 2bz)} dz = √(πi/a) · e^{−ib²/a}, principal branch.
pub fn gaussian_integral(a_coef: f64, b_coef: f64) -> Result<Complex64> {
    if a_coef == 0.0 {
        return Err(Error::ZeroQuadraticCoefficient);
    }
    let root = (Complex64::i() * std::f64::consts::PI / a_coef).sqrt();
    Ok(root * Complex64::new(0.0, -b_coef * b_coef / a_coef).exp())
}

/// Small-time reference kernel
/// (4πia(0)t)^{−1/2} · exp(i(x−y)²/(4a(0)t)) · exp(i g(0)(x−y)/(2a(0))).
pub fn asymptotic_kernel(coeffs: &CoefficientSet, x: f64, y: f64, t: f64) -> Complex64 {
    let a0 = coeffs.a.value(0.0);
    let g0 = coeffs.g.value(0.0);
    let amp = Complex64::new(0.0, 4.0 * std::f64::consts::PI * a0 * t).sqrt().inv();
    let dxy = x - y;
    amp * (Complex64::i() * (dxy * dxy / (4.0 * a0 * t) + g0 / (2.0 * a0) * dxy)).exp()
}

/// Quadratic-phase reduction of a kernel: value(x, y) = amp · e^{iS̃(x,y)}
/// with S̃ = sxx x² + sxy xy + syy y² + sx x + sy y + s0. The grid
/// application machinery exploits this common shape for all three kernels.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticKernel {
    pub amp: Complex64,
    pub sxx: f64,
    pub sxy: f64,
    pub syy: f64,
    pub sx: f64,
    pub sy: f64,
    pub s0: f64,
}

impl QuadraticKernel {
    pub fn from_spec(spec: &KernelSpec) -> Self {
        match spec.kind {
            KernelKind::Forward => {
                let p = &spec.at_t.phases;
                QuadraticKernel {
                    amp: forward_amplitude(spec.at_t.mu),
                    sxx: p.alpha,
                    sxy: p.beta,
                    syy: p.gamma,
                    sx: p.delta,
                    sy: p.epsilon,
                    s0: p.kappa,
                }
            }
            KernelKind::Inverse => {
                let p = &spec.at_t.phases;
                QuadraticKernel {
                    amp: forward_amplitude(spec.at_t.mu).conj() * spec.at_t.w,
                    sxx: -p.gamma,
                    sxy: -p.beta,
                    syy: -p.alpha,
                    sx: -p.epsilon,
                    sy: -p.delta,
                    s0: -p.kappa,
                }
            }
            KernelKind::Composed => {
                let pt = &spec.at_t.phases;
                let data_s = spec.at_s.as_ref().expect("composed spec carries s data");
                let ps = &data_s.phases;
                let dg = pt.gamma - ps.gamma;
                let e = pt.epsilon - ps.epsilon;
                QuadraticKernel {
                    amp: composed_amplitude(spec.at_t.mu, data_s.mu, -dg) * data_s.w,
                    sxx: pt.alpha - pt.beta * pt.beta / (4.0 * dg),
                    sxy: pt.beta * ps.beta / (2.0 * dg),
                    syy: -ps.alpha - ps.beta * ps.beta / (4.0 * dg),
                    sx: pt.delta - e * pt.beta / (2.0 * dg),
                    sy: -ps.delta + e * ps.beta / (2.0 * dg),
                    s0: pt.kappa - ps.kappa - e * e / (4.0 * dg),
                }
            }
        }
    }

    pub fn value(&self, x: f64, y: f64) -> Complex64 {
        let s = self.sxx * x * x
            + self.sxy * x * y
            + self.syy * y * y
            + self.sx * x
            + self.sy * y
            + self.s0;
        self.amp * (Complex64::i() * s).exp()
    }

    /// |∂S̃/∂y| maximized over the corners of [x0,x1]×[y0,y1]; the phase is
    /// affine in both variables so corners dominate.
    pub fn max_dphase_dy(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let mut m: f64 = 0.0;
        for &x in &[x0, x1] {
            for &y in &[y0, y1] {
                m = m.max((self.sxy * x + 2.0 * self.syy * y + self.sy).abs());
            }
        }
        m
    }
}
