//! Weighted machinery on grids: doubling and Muckenhoupt constants over
//! dyadic cube families, weighted grand norms, the weighted
//! Hardy-Littlewood maximal operator, a discrete principal-value
//! Calderon-Zygmund convolution, and empirical operator-norm sweeps.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Weight};
use crate::measure::StepFunction;
use crate::norms::{lp_mean_curve, report_from_curve, NormReport, PGrid, EXACT_REL_SLACK};
use crate::numeric::logsumexp;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A dyadic cube as index ranges: `side` samples per axis starting at
/// (ix, iy). 1D cubes have iy = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub level: u32,
    pub ix: usize,
    pub iy: usize,
    pub side: usize,
}

/// Direct sum over ix in [x0, x0+sx), iy in [y0, y0+sy). Weights can span
/// dozens of decades (e^(1/x) does), where prefix-sum differences cancel
/// to zero; summing each region's own nonnegative samples cannot.
fn region_sum(values: &[f64], nx: usize, x0: usize, y0: usize, sx: usize, sy: usize) -> f64 {
    let mut acc = 0.0;
    for iy in y0..y0 + sy {
        let row = iy * nx;
        for v in &values[row + x0..row + x0 + sx] {
            acc += v;
        }
    }
    acc
}

fn cubes_at_level(nx: usize, ny: usize, dim: usize, level: u32) -> (usize, Vec<(usize, usize)>) {
    let min_axis = if dim == 1 { nx } else { nx.min(ny) };
    let side = min_axis >> level;
    if side == 0 {
        return (0, Vec::new());
    }
    let mut cubes = Vec::new();
    let kx = nx / side;
    let ky = if dim == 1 { 1 } else { ny / side };
    for jy in 0..ky {
        for jx in 0..kx {
            cubes.push((jx * side, jy * side));
        }
    }
    (side, cubes)
}

/// Per-level maximum record for cube scans.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelMax {
    pub level: u32,
    pub max: f64,
    pub cubes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingReport {
    pub constant: f64,
    pub witness: Cube,
    pub per_level: Vec<LevelMax>,
    pub cubes_scanned: usize,
}

/// max over admissible dyadic cubes Q of w(2Q)/w(Q), where 2Q doubles the
/// side about the same center (index arithmetic, floor on odd halves).
/// Cubes whose double pokes outside the grid are skipped, never
/// extrapolated; cell volumes cancel in the ratio.
pub fn doubling_constant(w: &Weight, levels: &[u32]) -> Result<DoublingReport> {
    let g = w.grid();
    let samples = g.samples();
    let dim = g.dim();
    let mut best = f64::NEG_INFINITY;
    let mut witness = None;
    let mut per_level = Vec::new();
    let mut scanned = 0usize;

    for &level in levels {
        let (side, cubes) = cubes_at_level(g.nx(), g.ny(), dim, level);
        let mut level_best = f64::NEG_INFINITY;
        let mut level_cubes = 0usize;
        for (ix, iy) in cubes {
            let back = side / 2;
            let front = side - back;
            // doubled range per axis: [start - back, start + side + front)
            if ix < back || ix + side + front > g.nx() {
                continue;
            }
            let (y0, sy, dy0, dsy) = if dim == 1 {
                (0, 1, 0, 1)
            } else {
                if iy < back || iy + side + front > g.ny() {
                    continue;
                }
                (iy, side, iy - back, 2 * side)
            };
            let wq = region_sum(samples, g.nx(), ix, y0, side, sy);
            let w2q = region_sum(samples, g.nx(), ix - back, dy0, 2 * side, dsy);
            let ratio = w2q / wq;
            scanned += 1;
            level_cubes += 1;
            if ratio > level_best {
                level_best = ratio;
            }
            if ratio > best {
                best = ratio;
                witness = Some(Cube {
                    level,
                    ix,
                    iy: if dim == 1 { 0 } else { iy },
                    side,
                });
            }
        }
        if level_cubes > 0 {
            per_level.push(LevelMax {
                level,
                max: level_best,
                cubes: level_cubes,
            });
        }
    }
    let witness = witness.ok_or(Error::NoAdmissibleCubes)?;
    Ok(DoublingReport {
        constant: best,
        witness,
        per_level,
        cubes_scanned: scanned,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementMax {
    pub stride: usize,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub constant: f64,
    pub diverging: bool,
    pub witness: Cube,
    pub per_level: Vec<LevelMax>,
    /// Cube-family maxima at coarsened samplings (largest stride first);
    /// the divergence flag compares the last two.
    pub refinement_maxima: Vec<RefinementMax>,
}

/// Cube-family max of (mean_Q w) * (mean_Q w^(1-p'))^(p-1) on one sampling.
fn ap_scan(
    samples: &[f64],
    nx: usize,
    ny: usize,
    dim: usize,
    p: f64,
    levels: &[u32],
) -> Option<(f64, Cube, Vec<LevelMax>)> {
    let p_prime = p / (p - 1.0);
    let dual_exp = 1.0 - p_prime;
    let ln_w: Vec<f64> = samples.iter().map(|v| v.ln()).collect();

    let mut best = f64::NEG_INFINITY;
    let mut witness = None;
    let mut per_level = Vec::new();
    for &level in levels {
        let (side, cubes) = cubes_at_level(nx, ny, dim, level);
        let mut level_best = f64::NEG_INFINITY;
        let mut level_cubes = 0usize;
        for (ix, iy) in cubes {
            let (y0, sy) = if dim == 1 { (0, 1) } else { (iy, side) };
            let count = side * sy;
            let mean_w = region_sum(samples, nx, ix, y0, side, sy) / count as f64;
            // mean of w^(1-p') in the log domain: a cube hugging a zero of
            // an |x|^alpha weight overflows the plain sum long before the
            // constant itself is large.
            let ln_count = (count as f64).ln();
            let lse = logsumexp(
                (0..sy).flat_map(|dy| {
                    let row = (y0 + dy) * nx;
                    ln_w[row + ix..row + ix + side]
                        .iter()
                        .map(|&lw| dual_exp * lw)
                        .collect::<Vec<_>>()
                }),
            );
            let ln_mean_dual = lse - ln_count;
            let constant = (mean_w.ln() + (p - 1.0) * ln_mean_dual).exp();
            level_cubes += 1;
            if constant > level_best {
                level_best = constant;
            }
            if constant > best {
                best = constant;
                witness = Some(Cube {
                    level,
                    ix,
                    iy: if dim == 1 { 0 } else { iy },
                    side,
                });
            }
        }
        if level_cubes > 0 {
            per_level.push(LevelMax {
                level,
                max: level_best,
                cubes: level_cubes,
            });
        }
    }
    witness.map(|w| (best, w, per_level))
}

/// Emulates a grid coarsened by `factor`: each coarse sample is the mean
/// of a factor^dim block of fine samples (trailing partial blocks are
/// dropped). Plain stride subsampling would keep the fine grid's
/// nearest-to-singularity sample and invert resolution trends.
fn coarsen(g: &GridFunction, factor: usize) -> (Vec<f64>, usize, usize) {
    let nx = g.nx() / factor;
    let ny = if g.dim() == 1 { 1 } else { g.ny() / factor };
    let by = if g.dim() == 1 { 1 } else { factor };
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let mut acc = 0.0;
            for dy in 0..by {
                for dx in 0..factor {
                    acc += g.at(ix * factor + dx, iy * by + dy);
                }
            }
            out.push(acc / (factor * by) as f64);
        }
    }
    (out, nx, ny)
}

/// Muckenhoupt constant `sup_Q (mean_Q w)(mean_Q w^(1-p'))^(p-1)` over the
/// dyadic family, with a divergence flag.
///
/// Scale-invariant non-A_p weights (|x|^alpha with alpha >= p-1) produce
/// cube estimates that grow like a power of the sampling resolution rather
/// than of the cube depth, so the flag compares the family max across
/// coarsened samplings (strides k^2, k, 1): diverging when the last
/// refinement step still grows the max by 2x or more.
pub fn ap_constant(w: &Weight, p: f64, levels: &[u32]) -> Result<ApReport> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::ExponentNotAboveOne(p));
    }
    let g = w.grid();
    let dim = g.dim();
    let min_axis = if dim == 1 { g.nx() } else { g.nx().min(g.ny()) };
    let k: usize = if min_axis >= 512 {
        8
    } else if min_axis >= 128 {
        4
    } else {
        2
    };

    let mut refinement_maxima = Vec::new();
    let mut full: Option<(f64, Cube, Vec<LevelMax>)> = None;
    for stride in [k * k, k, 1] {
        let (samples, nx, ny) = coarsen(g, stride);
        match ap_scan(&samples, nx, ny, dim, p, levels) {
            Some((max, cube, per_level)) => {
                refinement_maxima.push(RefinementMax { stride, max });
                if stride == 1 {
                    full = Some((max, cube, per_level));
                }
            }
            None => {
                if stride == 1 {
                    return Err(Error::NoAdmissibleCubes);
                }
            }
        }
    }
    let (constant, witness, per_level) = full.ok_or(Error::NoAdmissibleCubes)?;
    let diverging = refinement_maxima
        .windows(2)
        .last()
        .map(|w| w[1].max >= 2.0 * w[0].max)
        .unwrap_or(false);
    Ok(ApReport {
        p,
        constant,
        diverging,
        witness,
        per_level,
        refinement_maxima,
    })
}

/// The step function whose atoms are (f_i, w_i h^dim): the measure-space
/// view of f under w(x) dx. The weighted L^p machinery reduces to the
/// unweighted step-function machinery through this view.
pub fn weighted_step(f: &GridFunction, w: &Weight) -> Result<StepFunction> {
    if !f.same_lattice(w.grid()) {
        return Err(Error::GridMismatch(
            "function and weight live on different lattices".into(),
        ));
    }
    let vol = f.cell_volume();
    StepFunction::from_pairs(
        f.samples()
            .iter()
            .zip(w.grid().samples())
            .map(|(&v, &wi)| (v, wi * vol)),
    )
}

/// ((1/w(Omega)) sum |f_i|^p w_i h^dim)^(1/p).
pub fn weighted_lp_norm(f: &GridFunction, w: &Weight, p: f64) -> Result<f64> {
    Ok(weighted_step(f, w)?.lp_mean(p))
}

/// sup_p p^(-theta) * weighted p-mean over the grid, with the tail bound
/// p_max^(-theta) max|f|.
pub fn weighted_grand_norm(
    f: &GridFunction,
    w: &Weight,
    theta: f64,
    grid: &PGrid,
) -> Result<NormReport> {
    crate::norms::grand_theta_infty_norm(&weighted_step(f, w)?, theta, grid)
}

/// Weighted Hardy-Littlewood maximal operator on a 1D grid:
/// `(M_w f)_i = max over index intervals Q containing i of
/// (sum_Q |f| w) / (sum_Q w)`, the exact max over all O(n^2) intervals via
/// prefix sums. Output sample i is initialized with |f_i| (the singleton
/// interval), so M_w f >= |f| holds exactly.
pub fn maximal_operator(f: &GridFunction, w: &Weight) -> Result<GridFunction> {
    if f.dim() != 1 {
        return Err(Error::UnsupportedKind {
            op: "maximal_operator",
            kind: "2D grid (1D only)".into(),
        });
    }
    if !f.same_lattice(w.grid()) {
        return Err(Error::GridMismatch(
            "function and weight live on different lattices".into(),
        ));
    }
    let n = f.len();
    let ws = w.grid().samples();
    let mut pw = vec![0.0; n + 1];
    let mut pfw = vec![0.0; n + 1];
    for i in 0..n {
        pw[i + 1] = pw[i] + ws[i];
        pfw[i + 1] = pfw[i] + f.samples()[i].abs() * ws[i];
    }
    let mut out: Vec<f64> = f.samples().iter().map(|v| v.abs()).collect();
    for a in 0..n {
        let mut best = f64::NEG_INFINITY;
        for i in (a..n).rev() {
            let avg = (pfw[i + 1] - pfw[a]) / (pw[i + 1] - pw[a]);
            if avg > best {
                best = avg;
            }
            if best > out[i] {
                out[i] = best;
            }
        }
    }
    GridFunction::new_1d(out, f.h(), f.origin().0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
enum KernelKind {
    /// K(x) = 1/(pi x).
    Hilbert,
    /// K(x) = coeff * |x|^(-exponent), odd variants carry sign(x).
    CustomPower {
        coeff: f64,
        exponent: f64,
        parity: Parity,
    },
}

/// A convolution kernel with verified size and gradient decay bounds
/// |K(x)| <= C_K/|x| and |K'(x)| <= C_K/|x|^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    kind: KernelKind,
    c_k: f64,
}

impl KernelSpec {
    pub fn hilbert() -> Self {
        Self {
            kind: KernelKind::Hilbert,
            c_k: 1.0 / PI,
        }
    }

    /// coeff * |x|^(-exponent) with the given parity, exponent in (0, 1].
    /// C_K is fitted over the validation range and the decay bounds are
    /// then sample-checked.
    pub fn custom_power(coeff: f64, exponent: f64, parity: Parity) -> Result<Self> {
        if !(coeff.is_finite() && coeff != 0.0) {
            return Err(Error::InvalidKernel(format!(
                "coeff must be finite and nonzero, got {coeff}"
            )));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::InvalidKernel(format!(
                "exponent must lie in (0, 1], got {exponent}"
            )));
        }
        let mut c_k = 0.0f64;
        for x in Self::validation_points() {
            let k = coeff.abs() * x.powf(-exponent);
            let kp = coeff.abs() * exponent * x.powf(-exponent - 1.0);
            c_k = c_k.max(k * x).max(kp * x * x);
        }
        let spec = Self {
            kind: KernelKind::CustomPower {
                coeff,
                exponent,
                parity,
            },
            c_k: c_k * (1.0 + 1e-9),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validation_points() -> impl Iterator<Item = f64> {
        // 1e-9 .. 1e3 in log space
        (0..=240).map(|k| 10f64.powf(-9.0 + 12.0 * k as f64 / 240.0))
    }

    /// Sample check of the decay bounds. Construction paths already enforce
    /// this; exposed so externally deserialized specs can be re-verified.
    pub fn validate(&self) -> Result<()> {
        for x in Self::validation_points() {
            let k = self.eval(x).abs();
            let kp = self.eval_derivative(x).abs();
            if k > self.c_k / x * (1.0 + 1e-9) {
                return Err(Error::InvalidKernel(format!(
                    "size bound fails at x = {x}: |K| = {k}, C_K/|x| = {}",
                    self.c_k / x
                )));
            }
            if kp > self.c_k / (x * x) * (1.0 + 1e-9) {
                return Err(Error::InvalidKernel(format!(
                    "gradient bound fails at x = {x}"
                )));
            }
        }
        Ok(())
    }

    pub fn c_k(&self) -> f64 {
        self.c_k
    }

    fn eval(&self, x: f64) -> f64 {
        match self.kind {
            KernelKind::Hilbert => 1.0 / (PI * x),
            KernelKind::CustomPower {
                coeff,
                exponent,
                parity,
            } => {
                let mag = coeff * x.abs().powf(-exponent);
                match parity {
                    Parity::Odd => mag * x.signum(),
                    Parity::Even => mag,
                }
            }
        }
    }

    fn eval_derivative(&self, x: f64) -> f64 {
        match self.kind {
            KernelKind::Hilbert => -1.0 / (PI * x * x),
            KernelKind::CustomPower {
                coeff, exponent, ..
            } => -coeff * exponent * x.abs().powf(-exponent - 1.0),
        }
    }

    /// Whether the symmetric diagonal exclusion defines the principal
    /// value: always for odd kernels, and for even ones only when the
    /// singularity is integrable.
    fn pv_defined(&self) -> bool {
        match self.kind {
            KernelKind::Hilbert => true,
            KernelKind::CustomPower {
                exponent, parity, ..
            } => parity == Parity::Odd || exponent < 1.0,
        }
    }
}

/// Discrete principal-value convolution
/// `(Tf)_i = sum_{j != i} K(x_i - x_j) f_j h`.
///
/// Excluding the diagonal symmetrically realizes the p.v. cancellation for
/// odd kernels; even kernels are admitted only with integrable
/// singularities, where no cancellation is needed.
pub fn cz_apply(f: &GridFunction, kernel: &KernelSpec) -> Result<GridFunction> {
    if f.dim() != 1 {
        return Err(Error::UnsupportedKind {
            op: "cz_apply",
            kind: "2D grid (1D only)".into(),
        });
    }
    if !kernel.pv_defined() {
        return Err(Error::InvalidKernel(
            "even kernel with non-integrable singularity: principal value undefined".into(),
        ));
    }
    let n = f.len();
    let h = f.h();
    let sign = match kernel.kind {
        KernelKind::Hilbert => -1.0,
        KernelKind::CustomPower { parity, .. } => match parity {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        },
    };
    // K(d h) h for d = 1..n-1; K(-d h) = sign * K(d h)
    let ktab: Vec<f64> = (1..n).map(|d| kernel.eval(d as f64 * h) * h).collect();
    let fs = f.samples();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for d in 1..n {
            let left = if i >= d { fs[i - d] } else { 0.0 };
            let right = if i + d < n { fs[i + d] } else { 0.0 };
            if left != 0.0 || right != 0.0 {
                acc += ktab[d - 1] * (left + sign * right);
            }
        }
        out[i] = acc;
    }
    GridFunction::new_1d(out, h, f.origin().0)
}

/// Which operator an empirical norm sweep exercises.
#[derive(Debug, Clone, Copy)]
pub enum OperatorKind<'a> {
    Maximal,
    CalderonZygmund(&'a KernelSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerPRatio {
    pub p: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorNormReport {
    pub operator: String,
    pub theta: f64,
    /// max over the corpus of grand-norm(op f) / grand-norm(f).
    pub max_ratio: f64,
    /// max over the corpus of the weighted p-mean ratio, per grid p.
    pub per_p: Vec<PerPRatio>,
    /// For Calderon-Zygmund sweeps: whether every p-mean curve of Tf was
    /// nondecreasing in p (the interpolation step that extends a single
    /// strong bound down the scale).
    pub holder_monotone: Option<bool>,
    pub corpus_size: usize,
    pub skipped_zero_norm: usize,
}

/// max over the corpus of `||op f|| / ||f||` in the weighted grand norm,
/// with the per-p ratio curve. Zero-norm entries are skipped and counted.
pub fn operator_norm_estimate(
    op: OperatorKind,
    w: &Weight,
    theta: f64,
    corpus: &[GridFunction],
    grid: &PGrid,
) -> Result<OperatorNormReport> {
    if theta < 0.0 {
        return Err(Error::NegativeTheta(theta));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let points = grid.points();
    let mut per_p: Vec<f64> = vec![0.0; points.len()];
    let mut max_ratio = 0.0f64;
    let mut skipped = 0usize;
    let mut holder_ok = true;
    let mut used = 0usize;

    for f in corpus {
        let step_f = weighted_step(f, w)?;
        if step_f.is_zero() {
            skipped += 1;
            continue;
        }
        let opf = match op {
            OperatorKind::Maximal => maximal_operator(f, w)?,
            OperatorKind::CalderonZygmund(k) => cz_apply(f, k)?,
        };
        let step_op = weighted_step(&opf, w)?;
        let curve_f = lp_mean_curve(&step_f, grid);
        let curve_op = lp_mean_curve(&step_op, grid);
        for ((r, cf), co) in per_p.iter_mut().zip(&curve_f).zip(&curve_op) {
            if *cf > 0.0 {
                *r = r.max(co / cf);
            }
        }
        if matches!(op, OperatorKind::CalderonZygmund(_)) {
            holder_ok &= curve_op
                .windows(2)
                .all(|w| w[0] <= w[1] * (1.0 + EXACT_REL_SLACK));
        }
        let nf = report_from_curve(&curve_f, theta, grid, step_f.max_abs_value());
        let nop = report_from_curve(&curve_op, theta, grid, step_op.max_abs_value());
        if nf.value > 0.0 {
            max_ratio = max_ratio.max(nop.value / nf.value);
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(OperatorNormReport {
        operator: match op {
            OperatorKind::Maximal => "maximal".into(),
            OperatorKind::CalderonZygmund(_) => "calderon_zygmund".into(),
        },
        theta,
        max_ratio,
        per_p: points
            .iter()
            .zip(per_p)
            .map(|(&p, max_ratio)| PerPRatio { p, max_ratio })
            .collect(),
        holder_monotone: if matches!(op, OperatorKind::CalderonZygmund(_)) {
            Some(holder_ok)
        } else {
            None
        },
        corpus_size: corpus.len(),
        skipped_zero_norm: skipped,
    })
}
