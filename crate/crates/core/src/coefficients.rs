//! Time-dependent coefficient functions of the quadratic Hamiltonian
//!
//! i ψ_t = −a(t) ψ_xx + b(t) x² ψ − i (c(t) x ψ_x + d(t) ψ) − f(t) x ψ + i g(t) ψ_x
//!
//! and a registry of named models with known closed-form characteristic
//! functions and phase data.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::phases::PhaseCoefficients;

/// One coefficient function with its symbolic derivative.
#[derive(Debug, Clone)]
pub struct Coefficient {
    expr: Expr,
    deriv: Expr,
}

impl Coefficient {
    pub fn new(expr: Expr) -> Self {
        let deriv = expr.deriv("t");
        Coefficient { expr, deriv }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Coefficient::new(Expr::parse(src)?))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.expr.eval1(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.deriv.eval1(t)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

/// The six real coefficient functions a, b, c, d, f, g.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub name: String,
    pub a: Coefficient,
    pub b: Coefficient,
    pub c: Coefficient,
    pub d: Coefficient,
    pub f: Coefficient,
    pub g: Coefficient,
    /// Hard cap on the usable time range for models whose characteristic
    /// function never vanishes.
    pub t_cap: f64,
}

pub const DEFAULT_T_CAP: f64 = 10.0;

impl CoefficientSet {
    pub fn new(
        name: &str,
        a: Expr,
        b: Expr,
        c: Expr,
        d: Expr,
        f: Expr,
        g: Expr,
    ) -> Result<Self> {
        let set = CoefficientSet {
            name: name.to_string(),
            a: Coefficient::new(a),
            b: Coefficient::new(b),
            c: Coefficient::new(c),
            d: Coefficient::new(d),
            f: Coefficient::new(f),
            g: Coefficient::new(g),
            t_cap: DEFAULT_T_CAP,
        };
        if set.a.value(0.0).abs() < 1e-12 {
            return Err(Error::Validation(format!(
                "model `{name}`: a(0) must be nonzero"
            )));
        }
        Ok(set)
    }

    pub fn from_strs(
        name: &str,
        a: &str,
        b: &str,
        c: &str,
        d: &str,
        f: &str,
        g: &str,
    ) -> Result<Self> {
        CoefficientSet::new(
            name,
            Expr::parse(a)?,
            Expr::parse(b)?,
            Expr::parse(c)?,
            Expr::parse(d)?,
            Expr::parse(f)?,
            Expr::parse(g)?,
        )
    }

    /// c(t) − 2 d(t), the integrand of the kernel weight W(t).
    pub fn c_minus_2d(&self, t: f64) -> f64 {
        self.c.value(t) - 2.0 * self.d.value(t)
    }

    /// First zero-like point of a(t) in (0, t_cap], if any. Detects both
    /// sign changes and touching zeros (via the derivative of a).
    pub fn a_first_zero(&self) -> Option<f64> {
        first_root(
            |t| self.a.value(t),
            |t| self.a.derivative(t),
            0.0,
            self.t_cap,
        )
    }
}

/// Locate the first root of `f` on (lo, hi] by dense scanning, resolving
/// sign changes with bisection and touching zeros through `df`.
pub fn first_root(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Option<f64> {
    let steps = 20_000usize;
    let h = (hi - lo) / steps as f64;
    let mut prev_t = lo + 0.5 * h;
    let mut prev_v = f(prev_t);
    for i in 1..steps {
        let t = lo + (0.5 + i as f64) * h;
        let v = f(t);
        if prev_v == 0.0 {
            return Some(prev_t);
        }
        if v * prev_v < 0.0 {
            return Some(bisect(&f, prev_t, t));
        }
        // touching zero: |f| dips without a sign change
        if v.abs() < 1e-5 && (df(prev_t) * df(t) < 0.0) {
            let tm = bisect(&df, prev_t, t);
            if f(tm).abs() < 1e-8 {
                return Some(tm);
            }
        }
        prev_t = t;
        prev_v = v;
    }
    None
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) * flo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form characteristic function with its first two derivatives.
#[derive(Debug, Clone)]
pub struct ClosedMu {
    pub mu: Expr,
    pub mu_prime: Expr,
    pub mu_second: Expr,
}

impl ClosedMu {
    pub fn new(mu: Expr) -> Self {
        let mu_prime = mu.deriv("t");
        let mu_second = mu_prime.deriv("t");
        ClosedMu { mu, mu_prime, mu_second }
    }
}

pub type PhaseFn = Arc<dyn Fn(f64) -> PhaseCoefficients + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A coefficient set plus whatever closed-form solution data is known.
#[derive(Clone)]
pub struct Model {
    pub coeffs: CoefficientSet,
    pub closed_mu: Option<ClosedMu>,
    /// Full closed-form phase sextet (only for the fixed registry models).
    pub closed_phases: Option<PhaseFn>,
    /// Closed-form γ alone; also available for the parameterized variants,
    /// whose γ does not depend on the forcing terms.
    pub closed_gamma: Option<ScalarFn>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.coeffs.name)
            .field("closed_mu", &self.closed_mu.is_some())
            .field("closed_phases", &self.closed_phases.is_some())
            .finish()
    }
}

pub const MODEL_NAMES: [&str; 4] = [
    "free_particle",
    "uniform_field",
    "forced_oscillator",
    "modified_oscillator",
];

/// Look up a named registry model.
pub fn get_model(name: &str) -> Result<Model> {
    match name {
        "free_particle" => Ok(free_particle()),
        "uniform_field" => Ok(uniform_field(1.0)),
        "forced_oscillator" => Ok(forced_oscillator()),
        "modified_oscillator" => Ok(modified_oscillator()),
        _ => Err(Error::UnknownModel {
            name: name.to_string(),
            available: MODEL_NAMES.join(", "),
        }),
    }
}

fn e(src: &str) -> Expr {
    Expr::parse(src).expect("registry expression")
}

/// a = 1/2, everything else zero; μ = t.
pub fn free_particle() -> Model {
    let coeffs = CoefficientSet::from_strs("free_particle", "0.5", "0", "0", "0", "0", "0")
        .expect("registry model");
    Model {
        coeffs,
        closed_mu: Some(ClosedMu::new(e("t"))),
        closed_phases: Some(Arc::new(|t| PhaseCoefficients {
            t,
            alpha: 0.5 / t,
            beta: -1.0 / t,
            gamma: 0.5 / t,
            delta: 0.0,
            epsilon: 0.0,
            kappa: 0.0,
        })),
        closed_gamma: Some(Arc::new(|t| 0.5 / t)),
    }
}

/// Constant external field f₀; μ = t, δ = ε = f₀ t / 2, κ = −f₀² t³ / 24.
pub fn uniform_field(f0: f64) -> Model {
    let coeffs = CoefficientSet::new(
        "uniform_field",
        e("0.5"),
        e("0"),
        e("0"),
        e("0"),
        Expr::constant(f0),
        e("0"),
    )
    .expect("registry model");
    Model {
        coeffs,
        closed_mu: Some(ClosedMu::new(e("t"))),
        closed_phases: Some(Arc::new(move |t| PhaseCoefficients {
            t,
            alpha: 0.5 / t,
            beta: -1.0 / t,
            gamma: 0.5 / t,
            delta: 0.5 * f0 * t,
            epsilon: 0.5 * f0 * t,
            kappa: -f0 * f0 * t * t * t / 24.0,
        })),
        closed_gamma: Some(Arc::new(|t| 0.5 / t)),
    }
}

/// Uniform field with time-dependent f(t) and velocity term g(t); the
/// sextet is no longer elementary but μ and γ stay those of the free case.
pub fn uniform_field_general(f: Expr, g: Expr) -> Result<Model> {
    let coeffs = CoefficientSet::new("uniform_field_general", e("0.5"), e("0"), e("0"), e("0"), f, g)?;
    Ok(Model {
        coeffs,
        closed_mu: Some(ClosedMu::new(e("t"))),
        closed_phases: None,
        closed_gamma: Some(Arc::new(|t| 0.5 / t)),
    })
}

/// Simple harmonic oscillator (a = b = 1/2); μ = sin t.
pub fn forced_oscillator() -> Model {
    let coeffs = CoefficientSet::from_strs("forced_oscillator", "0.5", "0.5", "0", "0", "0", "0")
        .expect("registry model");
    Model {
        coeffs,
        closed_mu: Some(ClosedMu::new(e("sin(t)"))),
        closed_phases: Some(Arc::new(|t| PhaseCoefficients {
            t,
            alpha: 0.5 * t.cos() / t.sin(),
            beta: -1.0 / t.sin(),
            gamma: 0.5 * t.cos() / t.sin(),
            delta: 0.0,
            epsilon: 0.0,
            kappa: 0.0,
        })),
        closed_gamma: Some(Arc::new(|t| 0.5 * t.cos() / t.sin())),
    }
}

/// Harmonic oscillator with driving f(t) and velocity term g(t).
pub fn forced_oscillator_with(f: Expr, g: Expr) -> Result<Model> {
    let coeffs =
        CoefficientSet::new("forced_oscillator_general", e("0.5"), e("0.5"), e("0"), e("0"), f, g)?;
    Ok(Model {
        coeffs,
        closed_mu: Some(ClosedMu::new(e("sin(t)"))),
        closed_phases: None,
        closed_gamma: Some(Arc::new(|t| 0.5 * t.cos() / t.sin())),
    })
}

/// a = cos²t, b = sin²t, c = 2d = sin 2t; μ = cos t sinh t + sin t cosh t.
pub fn modified_oscillator() -> Model {
    let coeffs = CoefficientSet::from_strs(
        "modified_oscillator",
        "cos(t)^2",
        "sin(t)^2",
        "sin(2*t)",
        "sin(2*t)/2",
        "0",
        "0",
    )
    .expect("registry model");
    let mu = |t: f64| t.cos() * t.sinh() + t.sin() * t.cosh();
    Model {
        coeffs,
        closed_mu: Some(ClosedMu::new(e("cos(t)*sinh(t) + sin(t)*cosh(t)"))),
        closed_phases: Some(Arc::new(move |t| {
            let m = mu(t);
            let cc = t.cos() * t.cosh();
            let ss = t.sin() * t.sinh();
            PhaseCoefficients {
                t,
                alpha: (cc - ss) / (2.0 * m),
                beta: -1.0 / m,
                gamma: (cc + ss) / (2.0 * m),
                delta: 0.0,
                epsilon: 0.0,
                kappa: 0.0,
            }
        })),
        closed_gamma: Some(Arc::new(move |t| {
            (t.cos() * t.cosh() + t.sin() * t.sinh()) / (2.0 * mu(t))
        })),
    }
}

/// A fully custom model from coefficient expressions; no closed forms.
pub fn custom_model(
    name: &str,
    a: &str,
    b: &str,
    c: &str,
    d: &str,
    f: &str,
    g: &str,
) -> Result<Model> {
    Ok(Model {
        coeffs: CoefficientSet::from_strs(name, a, b, c, d, f, g)?,
        closed_mu: None,
        closed_phases: None,
        closed_gamma: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn registry_models_have_nonzero_a0() {
        for name in MODEL_NAMES {
            let m = get_model(name).unwrap();
            assert!(m.coeffs.a.value(0.0).abs() > 1e-12, "{name}");
        }
    }

    #[test]
    fn unknown_model_lists_choices() {
        let err = get_model("bogus").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("free_particle") && msg.contains("modified_oscillator"));
    }

    #[test]
    fn closed_mu_satisfies_initial_data() {
        for name in MODEL_NAMES {
            let m = get_model(name).unwrap();
            let cm = m.closed_mu.as_ref().unwrap();
            assert_abs_diff_eq!(cm.mu.eval1(0.0), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(
                cm.mu_prime.eval1(0.0),
                2.0 * m.coeffs.a.value(0.0),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn modified_oscillator_a_touches_zero_at_half_pi() {
        let m = modified_oscillator();
        let z = m.coeffs.a_first_zero().expect("cos^2 t vanishes");
        assert_abs_diff_eq!(z, std::f64::consts::FRAC_PI_2, epsilon = 1e-6);
    }

    #[test]
    fn free_particle_a_never_vanishes() {
        let m = free_particle();
        assert!(m.coeffs.a_first_zero().is_none());
    }

    #[test]
    fn zero_a0_is_rejected() {
        let err = CoefficientSet::from_strs("bad", "t", "0", "0", "0", "0", "0");
        assert!(err.is_err());
    }
}
