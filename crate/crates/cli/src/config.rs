//! JSON run configuration: model selection, grid, initial data, task,
//! times, nonlinear parameters, and output location.

use serde::{Deserialize, Serialize};

use quadprop::coefficients::{
    custom_model, forced_oscillator_with, get_model, uniform_field_general, Model,
};
use quadprop::expr::Expr;
use quadprop::nonlinear::NonlinearTerm;
use quadprop::wavefunction::{Grid, WaveFunction};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    pub task: Task,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub nonlinear: Option<NonlinearConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    "out".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelConfig {
    /// A registry name: free_particle, uniform_field, forced_oscillator,
    /// modified_oscillator.
    Named(String),
    /// One of the two parameterized families with forcing expressions.
    Parameterized { family: String, f: String, g: String },
    /// Fully custom coefficient expressions in t.
    Custom {
        name: String,
        a: String,
        b: String,
        c: String,
        d: String,
        f: String,
        g: String,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConfig {
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        momentum: f64,
    },
    /// A real-valued expression in x.
    Expression(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Evolve,
    Invert,
    Nonlinear,
    Verify,
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "evolve" => Ok(Task::Evolve),
            "invert" => Ok(Task::Invert),
            "nonlinear" => Ok(Task::Nonlinear),
            "verify" => Ok(Task::Verify),
            other => Err(format!(
                "unknown task `{other}` (expected evolve | invert | nonlinear | verify)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonlinearConfig {
    #[serde(default)]
    pub lambda: f64,
    pub nu: f64,
    /// Optional time-dependent coefficient h(t) replacing lambda.
    #[serde(default)]
    pub h: Option<String>,
    /// Explicit source re/im expressions in t and x (forced kind).
    #[serde(default)]
    pub source_re: Option<String>,
    #[serde(default)]
    pub source_im: Option<String>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_time_nodes")]
    pub time_nodes: usize,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    20
}
fn default_time_nodes() -> usize {
    33
}

pub fn build_model(cfg: &ModelConfig) -> quadprop::Result<Model> {
    match cfg {
        ModelConfig::Named(name) => get_model(name),
        ModelConfig::Parameterized { family, f, g } => {
            let f = Expr::parse(f)?;
            let g = Expr::parse(g)?;
            match family.as_str() {
                "uniform_field_general" => uniform_field_general(f, g),
                "forced_oscillator_general" => forced_oscillator_with(f, g),
                other => Err(quadprop::Error::UnknownModel {
                    name: other.to_string(),
                    available: "uniform_field_general, forced_oscillator_general".to_string(),
                }),
            }
        }
        ModelConfig::Custom { name, a, b, c, d, f, g } => custom_model(name, a, b, c, d, f, g),
    }
}

pub fn build_grid(cfg: &GridConfig) -> quadprop::Result<Grid> {
    Grid::new(cfg.x_min, cfg.x_max, cfg.n)
}

pub fn build_initial(cfg: &InitialConfig, grid: Grid) -> quadprop::Result<WaveFunction> {
    match cfg {
        InitialConfig::Gaussian { center, width, momentum } => {
            if !(*width > 0.0) {
                return Err(quadprop::Error::Validation(
                    "gaussian width must be positive".into(),
                ));
            }
            Ok(WaveFunction::gaussian(grid, *center, *width, *momentum))
        }
        InitialConfig::Expression(src) => {
            let e = Expr::parse(src)?;
            let wf = WaveFunction::from_fn(grid, |x| {
                quadprop::num_complex::Complex64::new(e.eval(&[("x", x)]), 0.0)
            });
            WaveFunction::new(grid, wf.values)
        }
    }
}

pub fn build_nonlinear(cfg: &NonlinearConfig) -> quadprop::Result<NonlinearTerm> {
    if let (Some(re), im) = (&cfg.source_re, &cfg.source_im) {
        let re = Expr::parse(re)?;
        let im = match im {
            Some(src) => Some(Expr::parse(src)?),
            None => None,
        };
        let source: quadprop::nonlinear::SourceFn = std::sync::Arc::new(move |t, x| {
            let scope = [("t", t), ("x", x)];
            quadprop::num_complex::Complex64::new(
                re.eval(&scope),
                im.as_ref().map_or(0.0, |e| e.eval(&scope)),
            )
        });
        return Ok(NonlinearTerm::forced(source));
    }
    match &cfg.h {
        Some(src) => NonlinearTerm::power_law_with_coeff(Expr::parse(src)?, cfg.nu),
        None => NonlinearTerm::power_law(cfg.lambda, cfg.nu),
    }
}
