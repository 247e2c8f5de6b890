//! Uniformly sampled functions on a 1D interval or 2D box, the carrier for
//! the weighted operators and the monotonicity checks. Each sample owns a
//! cell of side `h`, so integrals are midpoint sums.

use crate::error::{Error, Result};
use crate::measure::StepFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples on a uniform grid, row-major with x fastest: `samples[iy*nx+ix]`
/// is the value at (origin.0 + ix h, origin.1 + iy h). `ny == 1` is the 1D
/// case. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    samples: Vec<f64>,
    nx: usize,
    ny: usize,
    h: f64,
    origin: (f64, f64),
}

impl GridFunction {
    pub fn new_1d(samples: Vec<f64>, h: f64, origin: f64) -> Result<Self> {
        Self::build(samples, 0, 0, h, (origin, 0.0))
    }

    pub fn new_2d(samples: Vec<f64>, nx: usize, ny: usize, h: f64, origin: (f64, f64)) -> Result<Self> {
        if samples.len() != nx * ny {
            return Err(Error::InvalidGridFunction(format!(
                "{} samples for a {nx} x {ny} grid",
                samples.len()
            )));
        }
        if ny < 4 {
            return Err(Error::InvalidGridFunction(format!(
                "2D grids need at least 4 points per axis, got ny = {ny}"
            )));
        }
        Self::build(samples, nx, ny, h, origin)
    }

    fn build(samples: Vec<f64>, nx: usize, ny: usize, h: f64, origin: (f64, f64)) -> Result<Self> {
        let (nx, ny) = if ny == 0 { (samples.len(), 1) } else { (nx, ny) };
        if nx < 4 {
            return Err(Error::InvalidGridFunction(format!(
                "grids need at least 4 points per axis, got nx = {nx}"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGridFunction(format!(
                "spacing h must be finite and > 0, got {h}"
            )));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::InvalidGridFunction("origin must be finite".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGridFunction(format!(
                "sample {i} is not finite: {}",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            nx,
            ny,
            h,
            origin,
        })
    }

    pub fn dim(&self) -> usize {
        if self.ny == 1 {
            1
        } else {
            2
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.origin.0 + ix as f64 * self.h
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.origin.1 + iy as f64 * self.h
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.samples[iy * self.nx + ix]
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Cell volume h^dim.
    pub fn cell_volume(&self) -> f64 {
        if self.dim() == 1 {
            self.h
        } else {
            self.h * self.h
        }
    }

    /// Same lattice: shape, spacing and origin agree (spacing/origin to
    /// within 1e-9 relative).
    pub fn same_lattice(&self, other: &Self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        self.nx == other.nx
            && self.ny == other.ny
            && close(self.h, other.h)
            && close(self.origin.0, other.origin.0)
            && close(self.origin.1, other.origin.1)
    }

    /// Derived grid with the same lattice and mapped samples.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::build(
            self.samples.iter().map(|&v| f(v)).collect(),
            self.nx,
            if self.ny == 1 { 0 } else { self.ny },
            self.h,
            self.origin,
        )
    }

    /// View the samples as a step function with every cell weighted h^dim.
    pub fn to_step_function(&self) -> StepFunction {
        let vol = self.cell_volume();
        StepFunction::from_pairs(self.samples.iter().map(|&v| (v, vol)))
            .expect("grid cells are valid atoms")
    }

    /// Parses `x,value` (1D) or `x,y,value` (2D row-major, x fastest) CSV.
    /// Spacing must be uniform to 1e-9; violations carry line numbers.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut width = 0usize;
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let row = raw.trim_start_matches('\u{feff}').trim();
            if row.is_empty() {
                continue;
            }
            if !saw_header {
                width = match row.to_ascii_lowercase().as_str() {
                    "x,value" => 2,
                    "x,y,value" => 3,
                    other => {
                        return Err(Error::Csv {
                            line,
                            msg: format!(
                                "expected header `x,value` or `x,y,value`, got `{other}`"
                            ),
                        })
                    }
                };
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = row.split(',').map(str::trim).collect();
            if fields.len() != width {
                return Err(Error::Csv {
                    line,
                    msg: format!("expected {width} fields, got {}", fields.len()),
                });
            }
            let mut vals = Vec::with_capacity(width);
            for f in fields {
                vals.push(f.parse::<f64>().map_err(|_| Error::Csv {
                    line,
                    msg: format!("cannot parse `{f}`"),
                })?);
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Csv {
                    line,
                    msg: "non-finite entry".into(),
                });
            }
            rows.push((line, vals));
        }
        if rows.len() < 4 {
            return Err(Error::Csv {
                line: rows.last().map(|r| r.0).unwrap_or(1),
                msg: format!("need at least 4 samples, got {}", rows.len()),
            });
        }

        let tol = 1e-9;
        if width == 2 {
            let h = rows[1].1[0] - rows[0].1[0];
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Csv {
                    line: rows[1].0,
                    msg: format!("x must be strictly increasing, step {h}"),
                });
            }
            for w in rows.windows(2) {
                let dx = w[1].1[0] - w[0].1[0];
                if (dx - h).abs() > tol * h.abs().max(1.0) {
                    return Err(Error::Csv {
                        line: w[1].0,
                        msg: format!("non-uniform spacing: {dx} vs {h}"),
                    });
                }
            }
            let samples = rows.iter().map(|r| r.1[1]).collect();
            Self::build(samples, 0, 0, h, (rows[0].1[0], 0.0))
        } else {
            // 2D: x fastest. Infer nx from the first return to the initial x.
            let x0 = rows[0].1[0];
            let y0 = rows[0].1[1];
            let nx = rows
                .iter()
                .skip(1)
                .position(|r| r.1[1] != y0)
                .map(|p| p + 1)
                .unwrap_or(rows.len());
            if nx < 2 || rows.len() % nx != 0 {
                return Err(Error::Csv {
                    line: rows[0].0,
                    msg: format!("cannot infer a rectangular grid (nx = {nx}, rows = {})", rows.len()),
                });
            }
            let ny = rows.len() / nx;
            let h = rows[1].1[0] - x0;
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Csv {
                    line: rows[1].0,
                    msg: "x must be strictly increasing within a row".into(),
                });
            }
            for iy in 0..ny {
                for ix in 0..nx {
                    let (line, vals) = &rows[iy * nx + ix];
                    let ex = x0 + ix as f64 * h;
                    let ey = y0 + iy as f64 * h;
                    if (vals[0] - ex).abs() > tol * ex.abs().max(1.0)
                        || (vals[1] - ey).abs() > tol * ey.abs().max(1.0)
                    {
                        return Err(Error::Csv {
                            line: *line,
                            msg: format!(
                                "expected lattice point ({ex}, {ey}), got ({}, {})",
                                vals[0], vals[1]
                            ),
                        });
                    }
                }
            }
            let samples = rows.iter().map(|r| r.1[2]).collect();
            Self::build(samples, nx, ny, h, (x0, y0))
        }
    }

    pub fn from_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        if self.dim() == 1 {
            out.push_str("x,value\n");
            for ix in 0..self.nx {
                out.push_str(&format!("{},{}\n", self.x(ix), self.samples[ix]));
            }
        } else {
            out.push_str("x,y,value\n");
            for iy in 0..self.ny {
                for ix in 0..self.nx {
                    out.push_str(&format!(
                        "{},{},{}\n",
                        self.x(ix),
                        self.y(iy),
                        self.at(ix, iy)
                    ));
                }
            }
        }
        out
    }

    pub fn write_csv_path(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// A strictly positive grid function, the measure density w(x) dx.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight(GridFunction);

impl Weight {
    pub fn new(grid: GridFunction) -> Result<Self> {
        if let Some(i) = grid.samples().iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveWeight {
                index: i,
                value: grid.samples()[i],
            });
        }
        Ok(Self(grid))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::new(GridFunction::from_csv_str(text)?)
    }

    pub fn from_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::new(GridFunction::from_csv_path(path)?)
    }

    pub fn grid(&self) -> &GridFunction {
        &self.0
    }

    /// w = 1 on the lattice of `like`.
    pub fn unit(like: &GridFunction) -> Self {
        Self(like.map(|_| 1.0).expect("unit weight is valid"))
    }
}

/// Midpoint-sample a function on n cells of (lo, hi): the nodes are cell
/// midpoints, so singular endpoints are never evaluated.
pub fn sample_midpoints_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<GridFunction> {
    assert!(hi > lo && n >= 4);
    let h = (hi - lo) / n as f64;
    let samples: Vec<f64> = (0..n).map(|k| f(lo + (k as f64 + 0.5) * h)).collect();
    GridFunction::build(samples, 0, 0, h, (lo + 0.5 * h, 0.0))
}

/// Node-sample a function at n points lo, lo+h, ..., hi inclusive.
pub fn sample_nodes_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<GridFunction> {
    assert!(hi > lo && n >= 4);
    let h = (hi - lo) / (n - 1) as f64;
    let samples: Vec<f64> = (0..n).map(|k| f(lo + k as f64 * h)).collect();
    GridFunction::build(samples, 0, 0, h, (lo, 0.0))
}

/// Smooth random 1D function: a short random sine series on midpoint cells.
pub fn random_smooth_1d(seed: u64, n: usize, lo: f64, hi: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64)> = (1..=8)
        .map(|k| {
            (
                rng.gen_range(-1.0..1.0),
                k as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let len = hi - lo;
    sample_midpoints_1d(
        |x| {
            modes
                .iter()
                .map(|&(a, k, phi)| a * (k * std::f64::consts::PI * (x - lo) / len + phi).sin())
                .sum()
        },
        lo,
        hi,
        n,
    )
    .expect("random smooth grid is valid")
}
