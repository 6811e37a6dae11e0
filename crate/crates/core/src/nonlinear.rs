//! Picard iteration of the Duhamel integral form
//!
//!   ψ(·,t) = U(t) χ − i ∫₀ᵗ U(t,s) F(s, ·, ψ(·,s)) ds
//!
//! for the nonlinear problem (i ∂_t − H(t)) ψ = F, together with the
//! nonhomogeneous linear special case (F independent of ψ) and the
//! inverse-consistency residual
//!
//!   χ ≈ U⁻¹(t) ψ(·,t) + i ∫₀ᵗ U⁻¹(s) F(s, ·, ψ(·,s)) ds.
//!
//! The s-integral runs over uniform Simpson nodes. At s = 0 the integrand
//! is exactly U(t) F(0,·,χ) (the two-time operator degenerates there
//! because μ(0) = 0, but its limit is the plain forward operator), and at
//! s = t it is exactly F(t,·,ψ(·,t)). Near-identity interior applications
//! whose kernels the grid cannot resolve are replaced by the first-order
//! expansion U(t,s) ≈ I − i(t−s) H((t+s)/2), accurate to O((t−s)²).

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{
    apply_composed_with, apply_forward_with, apply_inverse_with, hamiltonian_fd, ExecMode,
};
use crate::expr::Expr;
use crate::propagator::Propagator;
use crate::quad::{cumulative_weights, simpson_weights};
use crate::wavefunction::WaveFunction;

pub type SourceFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// Right-hand side F(t, x, ψ).
#[derive(Clone)]
pub enum NonlinearTerm {
    /// λ |ψ|^{2ν} ψ, optionally with a time-dependent coefficient h(t)
    /// in place of the constant λ.
    PowerLaw {
        lambda: f64,
        nu: f64,
        coeff: Option<Expr>,
    },
    /// An explicit ψ-independent source F(t, x).
    Forced { source: SourceFn },
}

impl std::fmt::Debug for NonlinearTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NonlinearTerm::PowerLaw { lambda, nu, coeff } => f
                .debug_struct("PowerLaw")
                .field("lambda", lambda)
                .field("nu", nu)
                .field("coeff", &coeff.as_ref().map(|e| e.to_string()))
                .finish(),
            NonlinearTerm::Forced { .. } => f.write_str("Forced"),
        }
    }
}

impl NonlinearTerm {
    pub fn power_law(lambda: f64, nu: f64) -> Result<Self> {
        check_nu(nu)?;
        Ok(NonlinearTerm::PowerLaw { lambda, nu, coeff: None })
    }

    /// h(t) |ψ|^{2ν} ψ.
    pub fn power_law_with_coeff(h: Expr, nu: f64) -> Result<Self> {
        check_nu(nu)?;
        Ok(NonlinearTerm::PowerLaw { lambda: 1.0, nu, coeff: Some(h) })
    }

    pub fn forced(source: SourceFn) -> Self {
        NonlinearTerm::Forced { source }
    }

    pub fn eval(&self, t: f64, x: f64, psi: Complex64) -> Complex64 {
        match self {
            NonlinearTerm::PowerLaw { lambda, nu, coeff } => {
                let c = coeff.as_ref().map_or(*lambda, |h| h.eval1(t));
                let p = psi.norm_sqr();
                // |ψ|^{2ν} with the continuous extension 0 at ψ = 0
                let amp = if p == 0.0 {
                    0.0
                } else if *nu == 1.0 {
                    p
                } else {
                    p.powf(*nu)
                };
                c * amp * psi
            }
            NonlinearTerm::Forced { source } => source(t, x),
        }
    }

    pub fn apply(&self, t: f64, psi: &WaveFunction) -> WaveFunction {
        let values = psi
            .values
            .iter()
            .enumerate()
            .map(|(j, &v)| self.eval(t, psi.grid.node(j), v))
            .collect();
        WaveFunction { grid: psi.grid, values }
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::Validation(format!(
            "power-law exponent must satisfy 0 < nu <= 1, got {nu}"
        )));
    }
    Ok(())
}

/// States at the time-quadrature nodes of a Duhamel integral.
#[derive(Debug, Clone)]
pub struct TimeHistory {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
}

impl TimeHistory {
    pub fn state_at(&self, s: f64) -> Result<&WaveFunction> {
        self.times
            .iter()
            .position(|&ts| (ts - s).abs() <= 1e-12 * (1.0 + s.abs()))
            .map(|i| &self.states[i])
            .ok_or(Error::HistoryGap { s })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PicardOptions {
    /// Number of Simpson nodes on [0, t]; odd.
    pub n_time_nodes: usize,
    pub mode: ExecMode,
    /// Largest |t − s| admissible for the first-order near-identity
    /// replacement of an under-resolved two-time application.
    pub taylor_max: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            n_time_nodes: 33,
            mode: ExecMode::default(),
            taylor_max: 0.12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    /// ψ(·, t) at the final time.
    pub psi: WaveFunction,
    pub iterations: usize,
    /// Sup-norm change of the final-time state per iteration.
    pub differences: Vec<f64>,
    pub converged: bool,
    /// Converged states at all time-quadrature nodes.
    pub history: TimeHistory,
}

#[derive(Serialize)]
struct IterationEntry {
    iteration: usize,
    sup_difference: f64,
    contraction_ratio: Option<f64>,
}

impl PicardResult {
    /// JSON array of per-iteration diagnostics.
    pub fn iteration_log(&self) -> serde_json::Value {
        let entries: Vec<IterationEntry> = self
            .differences
            .iter()
            .enumerate()
            .map(|(k, &d)| IterationEntry {
                iteration: k + 1,
                sup_difference: d,
                contraction_ratio: if k > 0 && self.differences[k - 1] > 0.0 {
                    Some(d / self.differences[k - 1])
                } else {
                    None
                },
            })
            .collect();
        serde_json::to_value(entries).expect("serializable")
    }
}

/// U(t,s)·f with exact endpoint limits and the Taylor fallback.
fn propagate_term(
    prop: &Propagator,
    f: &WaveFunction,
    t: f64,
    s: f64,
    opts: &PicardOptions,
) -> Result<WaveFunction> {
    if f.norm_sup() == 0.0 {
        return Ok(WaveFunction::zero(f.grid));
    }
    if (t - s).abs() <= 1e-14 {
        return Ok(f.clone());
    }
    let attempt = if s <= 1e-14 {
        apply_forward_with(prop, f, t, opts.mode)
    } else {
        apply_composed_with(prop, f, t, s, opts.mode)
    };
    match attempt {
        Ok(out) => Ok(out),
        Err(Error::UnderResolvedPhase { .. }) if t - s <= opts.taylor_max => {
            Ok(taylor_step(prop, f, s, t))
        }
        Err(e) => Err(e),
    }
}

/// U⁻¹(s)·f with the mirrored fallback U⁻¹(s) ≈ I + i s H(s/2).
fn inverse_term(
    prop: &Propagator,
    f: &WaveFunction,
    s: f64,
    opts: &PicardOptions,
) -> Result<WaveFunction> {
    if f.norm_sup() == 0.0 || s <= 1e-14 {
        return Ok(f.clone());
    }
    match apply_inverse_with(prop, f, s, opts.mode) {
        Ok(out) => Ok(out),
        Err(Error::UnderResolvedPhase { .. }) if s <= opts.taylor_max => {
            Ok(taylor_step(prop, f, s, 0.0))
        }
        Err(e) => Err(e),
    }
}

/// f − i (t − s) H((t+s)/2) f, the first-order evolution from s to t.
fn taylor_step(prop: &Propagator, f: &WaveFunction, s: f64, t: f64) -> WaveFunction {
    let mid = 0.5 * (t + s);
    let hf = hamiltonian_fd(prop.coeffs(), mid, f);
    let dt = Complex64::new(0.0, -(t - s));
    let values = f
        .values
        .iter()
        .zip(hf.values.iter())
        .map(|(&fv, &hv)| fv + dt * hv)
        .collect();
    WaveFunction { grid: f.grid, values }
}

fn simpson_nodes(t: f64, n: usize) -> Vec<f64> {
    let dt = t / (n - 1) as f64;
    (0..n).map(|k| k as f64 * dt).collect()
}

/// U(t)χ − i ∫₀ᵗ U(t,s) F(s,·,ψ(·,s)) ds with the history supplying
/// ψ(·,s) at the interior Simpson nodes (χ itself stands in at s = 0).
pub fn duhamel_rhs(
    prop: &Propagator,
    chi: &WaveFunction,
    history: &TimeHistory,
    nl: &NonlinearTerm,
    t: f64,
    opts: &PicardOptions,
) -> Result<WaveFunction> {
    prop.check_time(t)?;
    let n = validated_nodes(opts)?;
    let nodes = simpson_nodes(t, n);
    let w = simpson_weights(n, nodes[1]);

    let u_chi = propagate_term(prop, chi, t, 0.0, opts)?;
    let mut acc = WaveFunction::zero(chi.grid);
    for (k, &s) in nodes.iter().enumerate() {
        let state = if k == 0 { chi } else { history.state_at(s)? };
        let f_s = nl.apply(s, state);
        let term = propagate_term(prop, &f_s, t, s, opts)?;
        axpy(&mut acc, w[k], &term);
    }
    let minus_i = Complex64::new(0.0, -1.0);
    let values = u_chi
        .values
        .iter()
        .zip(acc.values.iter())
        .map(|(&u, &a)| u + minus_i * a)
        .collect();
    Ok(WaveFunction { grid: chi.grid, values })
}

fn axpy(acc: &mut WaveFunction, w: f64, term: &WaveFunction) {
    for (a, &v) in acc.values.iter_mut().zip(term.values.iter()) {
        *a += w * v;
    }
}

fn validated_nodes(opts: &PicardOptions) -> Result<usize> {
    let n = opts.n_time_nodes;
    if n < 5 || n % 2 == 0 {
        return Err(Error::Validation(format!(
            "time-quadrature node count must be odd and at least 5, got {n}"
        )));
    }
    Ok(n)
}

/// Successive substitution into the Duhamel form: ψ⁽⁰⁾(·,s) = U(s)χ at
/// every node, then each sweep rebuilds the whole trajectory from the
/// previous one. Iteration stops when the final-time state changes by
/// less than `tol` in sup norm. Non-convergence is reported through the
/// `converged` flag, not as an error.
pub fn picard_solve(
    prop: &Propagator,
    chi: &WaveFunction,
    nl: &NonlinearTerm,
    t: f64,
    tol: f64,
    max_iter: usize,
    opts: &PicardOptions,
) -> Result<PicardResult> {
    prop.check_time(t)?;
    if !(tol > 0.0) {
        return Err(Error::Validation("tolerance must be positive".into()));
    }
    if max_iter == 0 {
        return Err(Error::Validation("max_iter must be at least 1".into()));
    }
    let n = validated_nodes(opts)?;
    let nodes = simpson_nodes(t, n);
    let rows = cumulative_weights(n, nodes[1]);

    // U(s_i)χ and U(s_i)F(0,·,χ) never change across sweeps
    let mut u_chi: Vec<WaveFunction> = Vec::with_capacity(n);
    let mut u_f0: Vec<WaveFunction> = Vec::with_capacity(n);
    let f0 = nl.apply(0.0, chi);
    for &s in &nodes {
        u_chi.push(propagate_term(prop, chi, s, 0.0, opts)?);
        u_f0.push(propagate_term(prop, &f0, s, 0.0, opts)?);
    }

    let mut states = u_chi.clone();
    let mut differences = Vec::new();
    let mut converged = false;
    let minus_i = Complex64::new(0.0, -1.0);

    for iter in 1..=max_iter {
        // integrands from the previous sweep
        let f_nodes: Vec<WaveFunction> = nodes
            .iter()
            .zip(states.iter())
            .map(|(&s, st)| nl.apply(s, st))
            .collect();

        let mut next: Vec<WaveFunction> = Vec::with_capacity(n);
        next.push(chi.clone());
        for i in 1..n {
            let row = &rows[i];
            let mut acc = WaveFunction::zero(chi.grid);
            for (j, &wj) in row.iter().enumerate() {
                if wj == 0.0 {
                    continue;
                }
                let term = if j == 0 {
                    u_f0[i].clone()
                } else if j == i {
                    f_nodes[i].clone()
                } else {
                    propagate_term(prop, &f_nodes[j], nodes[i], nodes[j], opts)?
                };
                axpy(&mut acc, wj, &term);
            }
            let values = u_chi[i]
                .values
                .iter()
                .zip(acc.values.iter())
                .map(|(&u, &a)| u + minus_i * a)
                .collect();
            next.push(WaveFunction { grid: chi.grid, values });
        }

        let last = &next[n - 1];
        if !last.norm_sup().is_finite() {
            return Err(Error::NanDetected { iter });
        }
        let diff = last.sup_distance(&states[n - 1]);
        differences.push(diff);
        states = next;
        if diff < tol {
            converged = true;
            break;
        }
    }

    Ok(PicardResult {
        psi: states[n - 1].clone(),
        iterations: differences.len(),
        differences,
        converged,
        history: TimeHistory { times: nodes, states },
    })
}

/// Sup-norm residual of the inverse integral form:
/// ‖U⁻¹(t)ψ(·,t) + i ∫₀ᵗ U⁻¹(s) F(s,·,ψ(·,s)) ds − χ‖∞.
pub fn inverse_nonlinear_check(
    prop: &Propagator,
    result: &PicardResult,
    chi: &WaveFunction,
    nl: &NonlinearTerm,
    t: f64,
    opts: &PicardOptions,
) -> Result<f64> {
    let nodes = &result.history.times;
    let n = nodes.len();
    if (nodes[n - 1] - t).abs() > 1e-12 * (1.0 + t) {
        return Err(Error::HistoryGap { s: t });
    }
    let w = simpson_weights(n, nodes[1]);
    let mut acc = WaveFunction::zero(chi.grid);
    for (k, &s) in nodes.iter().enumerate() {
        let f_s = nl.apply(s, &result.history.states[k]);
        let term = inverse_term(prop, &f_s, s, opts)?;
        axpy(&mut acc, w[k], &term);
    }
    let back = apply_inverse_with(prop, &result.psi, t, opts.mode)?;
    let i_unit = Complex64::i();
    let values: Vec<Complex64> = back
        .values
        .iter()
        .zip(acc.values.iter())
        .map(|(&b, &a)| b + i_unit * a)
        .collect();
    let recovered = WaveFunction { grid: chi.grid, values };
    Ok(recovered.sup_distance(chi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::free_particle;
    use crate::evolution::apply_forward;
    use crate::wavefunction::Grid;

    fn small_opts() -> PicardOptions {
        PicardOptions { n_time_nodes: 17, ..Default::default() }
    }

    fn gaussian_setup(x_half: f64, n: usize) -> (Propagator, WaveFunction) {
        let prop = Propagator::new(free_particle()).unwrap();
        let grid = Grid::new(-x_half, x_half, n).unwrap();
        let chi = WaveFunction::gaussian(grid, 0.0, 1.0, 0.0);
        (prop, chi)
    }

    #[test]
    fn nu_range_is_enforced() {
        assert!(NonlinearTerm::power_law(0.1, 0.0).is_err());
        assert!(NonlinearTerm::power_law(0.1, 1.5).is_err());
        assert!(NonlinearTerm::power_law(0.1, 0.5).is_ok());
    }

    #[test]
    fn power_law_is_continuous_at_zero() {
        let nl = NonlinearTerm::power_law(2.0, 0.5).unwrap();
        let v = nl.eval(0.0, 0.0, Complex64::new(0.0, 0.0));
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_coupling_converges_in_one_sweep() {
        let (prop, chi) = gaussian_setup(8.0, 801);
        let nl = NonlinearTerm::power_law(0.0, 1.0).unwrap();
        let t = 0.3;
        let res = picard_solve(&prop, &chi, &nl, t, 1e-8, 20, &small_opts()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        let linear = apply_forward(&prop, &chi, t).unwrap();
        assert!(res.psi.sup_distance(&linear) < 1e-12);
    }

    #[test]
    fn duhamel_with_zero_source_is_linear_evolution() {
        let (prop, chi) = gaussian_setup(8.0, 801);
        let t = 0.3;
        let opts = small_opts();
        let nodes = simpson_nodes(t, opts.n_time_nodes);
        let history = TimeHistory {
            times: nodes.clone(),
            states: vec![chi.clone(); nodes.len()],
        };
        let nl = NonlinearTerm::power_law(0.0, 1.0).unwrap();
        let rhs = duhamel_rhs(&prop, &chi, &history, &nl, t, &opts).unwrap();
        let linear = apply_forward(&prop, &chi, t).unwrap();
        assert!(rhs.sup_distance(&linear) < 1e-13);
    }

    #[test]
    fn coupling_scales_linearly_at_small_lambda() {
        let (prop, chi) = gaussian_setup(7.0, 1401);
        let t = 0.25;
        let opts = PicardOptions { n_time_nodes: 9, ..Default::default() };
        let linear = apply_forward(&prop, &chi, t).unwrap();
        let mut deviations = Vec::new();
        for &lambda in &[1e-2, 1e-3] {
            let nl = NonlinearTerm::power_law(lambda, 1.0).unwrap();
            let res = picard_solve(&prop, &chi, &nl, t, 1e-10, 20, &opts).unwrap();
            assert!(res.converged);
            deviations.push(res.psi.sup_distance(&linear));
        }
        let ratio = deviations[0] / deviations[1];
        assert!(
            (ratio - 10.0).abs() < 2.0,
            "deviation ratio {ratio} should be ~10 (linear in lambda)"
        );
    }

    #[test]
    fn cubic_nls_fixed_point_verification() {
        let (prop, chi) = gaussian_setup(7.0, 1401);
        let nl = NonlinearTerm::power_law(0.1, 1.0).unwrap();
        let t = 0.3;
        let tol = 1e-8;
        let opts = small_opts();
        let res = picard_solve(&prop, &chi, &nl, t, tol, 20, &opts).unwrap();
        assert!(res.converged, "differences: {:?}", res.differences);
        // substituting the fixed point back changes it by < 2 tol
        let back = duhamel_rhs(&prop, &chi, &res.history, &nl, t, &opts).unwrap();
        let change = back.sup_distance(&res.psi);
        assert!(change < 2.0 * tol, "fixed-point residual {change:.3e}");
        // cubic NLS preserves the L2 norm for real coupling
        let drift = (res.psi.norm_l2() - chi.norm_l2()).abs();
        assert!(drift < 1e-3, "mass drift {drift:.3e}");
    }

    #[test]
    fn contraction_improves_with_smaller_coupling() {
        let (prop, chi) = gaussian_setup(6.0, 801);
        let t = 0.25;
        let opts = PicardOptions { n_time_nodes: 9, ..Default::default() };
        let mut ratios = Vec::new();
        for &lambda in &[0.2, 0.05] {
            let nl = NonlinearTerm::power_law(lambda, 1.0).unwrap();
            let res = picard_solve(&prop, &chi, &nl, t, 1e-12, 12, &opts).unwrap();
            let d = &res.differences;
            let mut rs = Vec::new();
            for k in 1..d.len().min(5) {
                if d[k - 1] > 1e-14 {
                    rs.push(d[k] / d[k - 1]);
                }
            }
            ratios.push(rs.iter().sum::<f64>() / rs.len() as f64);
        }
        assert!(
            ratios[1] < ratios[0],
            "contraction ratios {ratios:?} should drop with lambda"
        );
    }

    #[test]
    fn history_gap_is_reported() {
        let (prop, chi) = gaussian_setup(6.0, 401);
        let t = 0.3;
        let opts = small_opts();
        let history = TimeHistory { times: vec![0.0, t], states: vec![chi.clone(), chi.clone()] };
        let nl = NonlinearTerm::power_law(0.1, 1.0).unwrap();
        let err = duhamel_rhs(&prop, &chi, &history, &nl, t, &opts).unwrap_err();
        assert!(matches!(err, Error::HistoryGap { .. }));
    }

    #[test]
    fn forced_source_solves_nonhomogeneous_equation() {
        use crate::verify::pde_residual_sup;
        let (prop, chi) = gaussian_setup(6.0, 801);
        let source: SourceFn =
            Arc::new(|t: f64, x: f64| (-x * x).exp() * Complex64::new(0.0, t).exp());
        let nl = NonlinearTerm::forced(source);
        let t = 0.4;
        let opts = PicardOptions::default();
        let nodes = simpson_nodes(t, opts.n_time_nodes);
        // ψ-independent source: the history states are never consulted by F
        let history =
            TimeHistory { times: nodes.clone(), states: vec![chi.clone(); nodes.len()] };

        let dt = 1e-4;
        let eval = |tt: f64| {
            let nodes = simpson_nodes(tt, opts.n_time_nodes);
            let history =
                TimeHistory { times: nodes.clone(), states: vec![chi.clone(); nodes.len()] };
            duhamel_rhs(&prop, &chi, &history, &nl, tt, &opts).unwrap()
        };
        let minus = eval(t - dt);
        let mid = duhamel_rhs(&prop, &chi, &history, &nl, t, &opts).unwrap();
        let plus = eval(t + dt);
        let f_mid = nl.apply(t, &mid);
        let res = pde_residual_sup(prop.coeffs(), t, dt, &minus, &mid, &plus, Some(&f_mid));
        assert!(res < 1e-3, "nonhomogeneous PDE residual {res:.3e}");
    }

    #[test]
    fn inverse_consistency_linear_case() {
        let (prop, chi) = gaussian_setup(8.0, 801);
        let nl = NonlinearTerm::power_law(0.0, 1.0).unwrap();
        let t = 0.5;
        let opts = small_opts();
        let res = picard_solve(&prop, &chi, &nl, t, 1e-10, 5, &opts).unwrap();
        let dev = inverse_nonlinear_check(&prop, &res, &chi, &nl, t, &opts).unwrap();
        assert!(dev < 1e-4, "linear inverse round trip {dev:.3e}");
    }

    #[test]
    fn iteration_log_shape() {
        let (prop, chi) = gaussian_setup(6.0, 801);
        let nl = NonlinearTerm::power_law(0.05, 1.0).unwrap();
        let res = picard_solve(&prop, &chi, &nl, 0.2, 1e-9, 10,
            &PicardOptions { n_time_nodes: 9, ..Default::default() }).unwrap();
        let log = res.iteration_log();
        let arr = log.as_array().unwrap();
        assert_eq!(arr.len(), res.iterations);
        assert!(arr[0]["sup_difference"].as_f64().unwrap() > 0.0);
    }
}
