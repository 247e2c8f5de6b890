//! Oscillation and max/min-principle (weak monotonicity) checks for 2D
//! grid functions, a Gauss-Seidel relaxer for the discrete p-Laplacian to
//! generate p-harmonic test functions, and discrete-gradient grand Sobolev
//! norms.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::norms::{grand_theta_infty_norm, NormReport, PGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Tolerance of the interior-vs-boundary comparison in the monotonicity
/// check; violations smaller than this are relaxation residue, not failures
/// of the maximum principle.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Offsets (di, dj) with (r-1)^2 <= di^2+dj^2 <= r^2 form the boundary
/// ring; strictly inside (r-1)^2 is the interior. Integer arithmetic keeps
/// ball membership exact and reproducible.
fn ball_offsets(radius: usize) -> (Vec<(i64, i64)>, Vec<(i64, i64)>) {
    let r = radius as i64;
    let inner = (r - 1) * (r - 1);
    let outer = r * r;
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for di in -r..=r {
        for dj in -r..=r {
            let d2 = di * di + dj * dj;
            if d2 < inner {
                interior.push((di, dj));
            } else if d2 <= outer {
                boundary.push((di, dj));
            }
        }
    }
    (interior, boundary)
}

/// A discrete ball under Euclidean index distance: interior plus a
/// one-cell boundary ring, all inside the grid.
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: (usize, usize),
    pub radius: usize,
    /// Flat row-major indices.
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

impl Ball {
    pub fn new(u: &GridFunction, center: (usize, usize), radius: usize) -> Result<Self> {
        if u.dim() != 2 {
            return Err(Error::UnsupportedKind {
                op: "ball",
                kind: "1D grid".into(),
            });
        }
        if radius < 2 {
            return Err(Error::EmptyRegion);
        }
        let (cx, cy) = (center.0 as i64, center.1 as i64);
        let r = radius as i64;
        if cx - r < 0 || cy - r < 0 || cx + r >= u.nx() as i64 || cy + r >= u.ny() as i64 {
            return Err(Error::InvalidGridFunction(format!(
                "ball at {center:?} radius {radius} leaves the {}x{} grid",
                u.nx(),
                u.ny()
            )));
        }
        let (ioff, boff) = ball_offsets(radius);
        let to_idx = |offs: &[(i64, i64)]| {
            offs.iter()
                .map(|&(di, dj)| u.index((cx + di) as usize, (cy + dj) as usize))
                .collect()
        };
        Ok(Self {
            center,
            radius,
            interior: to_idx(&ioff),
            boundary: to_idx(&boff),
        })
    }
}

/// max - min of u over the region (flat indices).
pub fn oscillation(u: &GridFunction, region: &[usize]) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in region {
        let v = u.samples()[i];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneViolation {
    pub center: (usize, usize),
    pub radius: usize,
    pub point: (usize, usize),
    pub value: f64,
    pub boundary_min: f64,
    pub boundary_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub passed: bool,
    pub balls_checked: usize,
    pub violation: Option<MonotoneViolation>,
}

/// The max/min principle over every discrete ball in the grid: with
/// m = min and M = max of u on the boundary ring, PASS means
/// m - tol <= u <= M + tol throughout the interior. Returns the first
/// violating (ball, point) otherwise.
pub fn weak_monotone_check(u: &GridFunction) -> Result<MonotoneReport> {
    if u.dim() != 2 {
        return Err(Error::UnsupportedKind {
            op: "weak_monotone_check",
            kind: "1D grid".into(),
        });
    }
    let (nx, ny) = (u.nx(), u.ny());
    let max_radius = (nx.min(ny) - 1) / 2;
    let mut balls = 0usize;
    for radius in 2..=max_radius {
        let (ioff, boff) = ball_offsets(radius);
        let r = radius;
        for cy in r..ny - r {
            for cx in r..nx - r {
                let mut bmin = f64::INFINITY;
                let mut bmax = f64::NEG_INFINITY;
                for &(di, dj) in &boff {
                    let v = u.at((cx as i64 + di) as usize, (cy as i64 + dj) as usize);
                    bmin = bmin.min(v);
                    bmax = bmax.max(v);
                }
                balls += 1;
                for &(di, dj) in &ioff {
                    let (ix, iy) = ((cx as i64 + di) as usize, (cy as i64 + dj) as usize);
                    let v = u.at(ix, iy);
                    if v < bmin - MONOTONE_TOL || v > bmax + MONOTONE_TOL {
                        return Ok(MonotoneReport {
                            passed: false,
                            balls_checked: balls,
                            violation: Some(MonotoneViolation {
                                center: (cx, cy),
                                radius,
                                point: (ix, iy),
                                value: v,
                                boundary_min: bmin,
                                boundary_max: bmax,
                            }),
                        });
                    }
                }
            }
        }
    }
    Ok(MonotoneReport {
        passed: true,
        balls_checked: balls,
        violation: None,
    })
}

/// Discrete p-energy: sum of |u_i - u_j|^p over adjacent (horizontal and
/// vertical) grid pairs.
pub fn p_energy(u: &GridFunction, p: f64) -> f64 {
    let (nx, ny) = (u.nx(), u.ny());
    let mut acc = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            let v = u.at(ix, iy);
            if ix + 1 < nx {
                acc += (v - u.at(ix + 1, iy)).abs().powf(p);
            }
            if iy + 1 < ny {
                acc += (v - u.at(ix, iy + 1)).abs().powf(p);
            }
        }
    }
    acc
}

/// phi(v) = sum_k |v - a_k|^p over the four neighbor values.
fn local_energy(p: f64, a: &[f64; 4], v: f64) -> f64 {
    a.iter().map(|&ak| (v - ak).abs().powf(p)).sum()
}

/// Exact minimizer for p = 3: phi'(v)/3 = sum sign(v-a_k)(v-a_k)^2 is an
/// increasing piecewise quadratic with breakpoints at the sorted neighbor
/// values; locate the sign change and solve that quadratic.
fn minimize_p3(a: &[f64; 4]) -> f64 {
    let mut s = *a;
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    if s[0] == s[3] {
        return s[0];
    }
    let dphi = |v: f64| -> f64 {
        s.iter()
            .map(|&ak| {
                let d = v - ak;
                d.abs() * d
            })
            .sum()
    };
    // the root lies in [s[j-1], s[j]] for the first j with dphi(s[j]) >= 0
    let mut j = 3;
    for cand in 1..=3 {
        if dphi(s[cand]) >= 0.0 {
            j = cand;
            break;
        }
    }
    let (lo, hi) = (s[j - 1], s[j]);
    let below: f64 = s[..j].iter().sum();
    let above: f64 = s[j..].iter().sum();
    let qbelow: f64 = s[..j].iter().map(|x| x * x).sum();
    let qabove: f64 = s[j..].iter().map(|x| x * x).sum();
    let a2 = 2.0 * j as f64 - 4.0;
    let b = -2.0 * (below - above);
    let c = qbelow - qabove;
    if a2 == 0.0 {
        if b == 0.0 {
            return 0.5 * (lo + hi);
        }
        return (-c / b).clamp(lo, hi);
    }
    let disc = (b * b - 4.0 * a2 * c).max(0.0);
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let r1 = q / a2;
    let r2 = if q != 0.0 { c / q } else { f64::NAN };
    let in_range = |v: f64| v.is_finite() && v >= lo - 1e-12 && v <= hi + 1e-12;
    if in_range(r1) {
        r1.clamp(lo, hi)
    } else if in_range(r2) {
        r2.clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    }
}

/// Safeguarded Newton on phi'(v) = 0 for general p in (1, 8], warm-started
/// from the current node value.
fn minimize_generic(p: f64, a: &[f64; 4], start: f64) -> f64 {
    let lo0 = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi0 = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo0 == hi0 {
        return lo0;
    }
    let grad = |v: f64| -> f64 {
        a.iter()
            .map(|&ak| {
                let d = v - ak;
                d.signum() * d.abs().powf(p - 1.0)
            })
            .sum()
    };
    let curv = |v: f64| -> f64 {
        a.iter()
            .map(|&ak| {
                let d = (v - ak).abs();
                if d == 0.0 {
                    0.0
                } else {
                    d.powf(p - 2.0)
                }
            })
            .sum::<f64>()
            * (p - 1.0)
    };
    let (mut lo, mut hi) = (lo0, hi0);
    let mut v = start.clamp(lo, hi);
    for _ in 0..80 {
        let g = grad(v);
        if g == 0.0 {
            break;
        }
        if g > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let c = curv(v);
        let newton = v - g / c;
        let next = if c.is_finite() && c > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - v).abs() <= 1e-15 * (1.0 + v.abs()) {
            v = next;
            break;
        }
        v = next;
    }
    v
}

fn minimize_local(p: f64, a: &[f64; 4], start: f64) -> f64 {
    if p == 2.0 {
        0.25 * (a[0] + a[1] + a[2] + a[3])
    } else if p == 3.0 {
        minimize_p3(a)
    } else {
        minimize_generic(p, a, start)
    }
}

#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub u: GridFunction,
    pub converged: bool,
    pub sweeps: usize,
    pub max_update: f64,
    /// p-energy after each sweep (nonincreasing for exact node minimization).
    pub energies: Vec<f64>,
}

/// Gauss-Seidel relaxation of the discrete p-Laplacian: each interior node
/// is moved to the minimizer of sum over its 4 neighbors of |u - u_j|^p
/// until the largest per-sweep update drops below `tol`. The outer ring of
/// `init` is held fixed as boundary data; the interior of `init` seeds the
/// iteration. A node update is kept only if it does not increase the local
/// energy, so the per-sweep energies are nonincreasing by construction.
pub fn relax_p(init: &GridFunction, p: f64, tol: f64, max_iters: usize) -> Result<RelaxOutcome> {
    if init.dim() != 2 {
        return Err(Error::UnsupportedKind {
            op: "relax_p",
            kind: "1D grid".into(),
        });
    }
    if !(p > 1.0 && p <= 8.0) {
        return Err(Error::ExponentNotAboveOne(p));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidGrid(format!("tol must be > 0, got {tol}")));
    }
    let (nx, ny) = (init.nx(), init.ny());
    let mut vals = init.samples().to_vec();
    let mut energies = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut max_update = f64::INFINITY;
    while sweeps < max_iters {
        sweeps += 1;
        max_update = 0.0;
        for iy in 1..ny - 1 {
            for ix in 1..nx - 1 {
                let idx = iy * nx + ix;
                let a = [
                    vals[idx - 1],
                    vals[idx + 1],
                    vals[idx - nx],
                    vals[idx + nx],
                ];
                let old = vals[idx];
                let mut new = minimize_local(p, &a, old);
                if local_energy(p, &a, new) > local_energy(p, &a, old) {
                    new = old;
                }
                let delta = (new - old).abs();
                if delta > max_update {
                    max_update = delta;
                }
                vals[idx] = new;
            }
        }
        let u_now = GridFunction::new_2d(vals.clone(), nx, ny, init.h(), init.origin())?;
        energies.push(p_energy(&u_now, p));
        if max_update < tol {
            converged = true;
            break;
        }
    }
    Ok(RelaxOutcome {
        u: GridFunction::new_2d(vals, nx, ny, init.h(), init.origin())?,
        converged,
        sweeps,
        max_update,
        energies,
    })
}

/// Random boundary data U(0,1) on the outer ring; the interior starts at
/// the boundary mean.
pub fn random_boundary_grid(seed: u64, nx: usize, ny: usize, h: f64, origin: (f64, f64)) -> GridFunction {
    assert!(nx >= 4 && ny >= 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = vec![0.0; nx * ny];
    let mut bsum = 0.0;
    let mut bcount = 0usize;
    for iy in 0..ny {
        for ix in 0..nx {
            if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
                let v = rng.gen_range(0.0..1.0);
                vals[iy * nx + ix] = v;
                bsum += v;
                bcount += 1;
            }
        }
    }
    let mean = bsum / bcount as f64;
    for iy in 1..ny - 1 {
        for ix in 1..nx - 1 {
            vals[iy * nx + ix] = mean;
        }
    }
    GridFunction::new_2d(vals, nx, ny, h, origin).expect("boundary grid is valid")
}

/// Grand norm of the discrete gradient magnitude: central differences
/// inside, one-sided at the boundary, each node owning a cell of h^2.
pub fn grand_sobolev_norm(u: &GridFunction, theta: f64, grid: &PGrid) -> Result<NormReport> {
    if u.dim() != 2 {
        return Err(Error::UnsupportedKind {
            op: "grand_sobolev_norm",
            kind: "1D grid".into(),
        });
    }
    let (nx, ny) = (u.nx(), u.ny());
    let h = u.h();
    let mut mags = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let gx = if ix == 0 {
                (u.at(1, iy) - u.at(0, iy)) / h
            } else if ix == nx - 1 {
                (u.at(nx - 1, iy) - u.at(nx - 2, iy)) / h
            } else {
                (u.at(ix + 1, iy) - u.at(ix - 1, iy)) / (2.0 * h)
            };
            let gy = if iy == 0 {
                (u.at(ix, 1) - u.at(ix, 0)) / h
            } else if iy == ny - 1 {
                (u.at(ix, ny - 1) - u.at(ix, ny - 2)) / h
            } else {
                (u.at(ix, iy + 1) - u.at(ix, iy - 1)) / (2.0 * h)
            };
            mags.push(gx.hypot(gy));
        }
    }
    let f = crate::measure::StepFunction::from_pairs(mags.into_iter().map(|m| (m, h * h)))
        .expect("gradient atoms are valid");
    grand_theta_infty_norm(&f, theta, grid)
}
