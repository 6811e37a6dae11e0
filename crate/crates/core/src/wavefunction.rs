//! Gridded complex wavefunctions with Simpson-consistent norms and
//! bit-faithful CSV / JSON snapshots.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::simpson_weights;

/// Uniform spatial grid with an odd number of nodes (Simpson-compatible).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min < x_max) {
            return Err(Error::Validation(format!(
                "grid needs x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < 3 || n % 2 == 0 {
            return Err(Error::Validation(format!(
                "grid size must be odd and at least 3, got {n}"
            )));
        }
        Ok(Grid { x_min, x_max, n })
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.h()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.node(j))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Validation(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Validation("wavefunction values must be finite".into()));
        }
        Ok(WaveFunction { grid, values })
    }

    pub fn zero(grid: Grid) -> Self {
        WaveFunction { grid, values: vec![Complex64::new(0.0, 0.0); grid.n] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().map(f).collect();
        WaveFunction { grid, values }
    }

    /// L²-normalized Gaussian packet
    /// (π w²)^{−1/4} exp(−(x−c)²/(2w²)) exp(i p (x−c)).
    pub fn gaussian(grid: Grid, center: f64, width: f64, momentum: f64) -> Self {
        let norm = (std::f64::consts::PI * width * width).powf(-0.25);
        WaveFunction::from_fn(grid, |x| {
            let dx = x - center;
            Complex64::from_polar((-dx * dx / (2.0 * width * width)).exp() * norm, momentum * dx)
        })
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// ∫|ψ| by composite Simpson on the grid.
    pub fn norm_l1(&self) -> f64 {
        let w = simpson_weights(self.grid.n, self.grid.h());
        self.values
            .iter()
            .zip(w.iter())
            .map(|(v, wk)| wk * v.norm())
            .sum()
    }

    /// (∫|ψ|²)^{1/2} by composite Simpson on the grid.
    pub fn norm_l2(&self) -> f64 {
        let w = simpson_weights(self.grid.n, self.grid.h());
        self.values
            .iter()
            .zip(w.iter())
            .map(|(v, wk)| wk * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// The largest end-point magnitude relative to the peak; used to warn
    /// about domain truncation before operator application.
    pub fn boundary_relative_magnitude(&self) -> f64 {
        let peak = self.norm_sup();
        if peak == 0.0 {
            return 0.0;
        }
        let ends = self.values[0]
            .norm()
            .max(self.values[self.grid.n - 1].norm());
        ends / peak
    }

    /// Sup-norm distance to another wavefunction on the same grid.
    pub fn sup_distance(&self, other: &WaveFunction) -> f64 {
        assert_eq!(self.grid, other.grid, "grids must match");
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// CSV snapshot with columns `x,re,im`, decimal values printed with 17
    /// significant digits so a reload reproduces the same bits.
    pub fn to_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,re,im")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{},{}", fmt17(self.grid.node(j)), fmt17(v.re), fmt17(v.im))?;
        }
        Ok(())
    }

    pub fn from_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut xs: Vec<f64> = Vec::new();
        let mut values: Vec<Complex64> = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let mut parts = line.split(',');
            let mut take = || -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| Error::Validation(format!("short CSV row {lineno}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Validation(format!("bad CSV number at row {lineno}: {e}")))
            };
            let x = take()?;
            let re = take()?;
            let im = take()?;
            xs.push(x);
            values.push(Complex64::new(re, im));
        }
        if xs.len() < 3 {
            return Err(Error::Validation("CSV snapshot has fewer than 3 rows".into()));
        }
        let n = xs.len();
        let grid = Grid::new(xs[0], xs[n - 1], n)?;
        let h = grid.h();
        for (j, &x) in xs.iter().enumerate() {
            if (x - grid.node(j)).abs() > 1e-9 * (1.0 + h) {
                return Err(Error::Validation(format!("non-uniform grid at row {j}")));
            }
        }
        WaveFunction::new(grid, values)
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            x_min: self.grid.x_min,
            x_max: self.grid.x_max,
            n: self.grid.n,
            re: self.values.iter().map(|v| v.re).collect(),
            im: self.values.iter().map(|v| v.im).collect(),
        }
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Self> {
        let grid = Grid::new(s.x_min, s.x_max, s.n)?;
        if s.re.len() != s.n || s.im.len() != s.n {
            return Err(Error::Validation("snapshot length mismatch".into()));
        }
        let values = s
            .re
            .iter()
            .zip(s.im.iter())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        WaveFunction::new(grid, values)
    }
}

/// JSON-serializable snapshot with grid metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
