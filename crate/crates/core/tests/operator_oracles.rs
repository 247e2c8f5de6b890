//! Oracle-backed checks of the weighted-operator machinery: dyadic
//! doubling / Muckenhoupt scans against exact power-weight integrals, the
//! maximal operator against the calculus optimum, and the discrete Hilbert
//! transform against closed forms and the Fourier isometry.

use grandexp::grid::{random_smooth_1d, sample_midpoints_1d, sample_nodes_1d, GridFunction, Weight};
use grandexp::norms::{PGrid, TailPolicy};
use grandexp::weighted::{
    ap_constant, cz_apply, doubling_constant, maximal_operator, operator_norm_estimate,
    KernelSpec, OperatorKind,
};

fn abs_pow_weight(alpha: f64, n: usize) -> Weight {
    // midpoint cells on (-1, 1] keep samples off the zero of |x|^alpha
    Weight::new(sample_midpoints_1d(|x| x.abs().powf(alpha), -1.0, 1.0, n).unwrap()).unwrap()
}

/// Exact mean of |x|^alpha over [a, b], alpha > -1.
fn exact_abs_pow_mean(a: f64, b: f64, alpha: f64) -> f64 {
    let prim = |x: f64| x.signum() * x.abs().powf(alpha + 1.0) / (alpha + 1.0);
    (prim(b) - prim(a)) / (b - a)
}

/// Re-enumerates the implementation's dyadic cube family (side = n >> level,
/// tiles at multiples of the side) in physical coordinates.
fn dyadic_ranges(n: usize, h: f64, lo: f64, level: u32) -> Vec<(f64, f64)> {
    let side = n >> level;
    if side == 0 {
        return Vec::new();
    }
    (0..n / side)
        .map(|k| {
            let a = lo + (k * side) as f64 * h;
            (a, a + side as f64 * h)
        })
        .collect()
}

#[test]
fn doubling_of_sqrt_weight_matches_exact_integrals_and_is_stable() {
    let alpha = 0.5;
    let levels = [1u32, 2, 3, 4];
    let mut constants = Vec::new();
    for n in [1024usize, 2048] {
        let w = abs_pow_weight(alpha, n);
        let rep = doubling_constant(&w, &levels).unwrap();
        constants.push(rep.constant);
    }
    // refinement-stable
    assert!(
        (constants[1] - constants[0]).abs() <= 0.02 * constants[0],
        "{constants:?}"
    );

    // oracle: the same cube family with exact integrals
    let n = 2048;
    let h = 2.0 / n as f64;
    let mut oracle = 0.0f64;
    for &level in &levels {
        for (a, b) in dyadic_ranges(n, h, -1.0, level) {
            let half = 0.5 * (b - a);
            let (da, db) = (a - half, b + half);
            if da < -1.0 || db > 1.0 {
                continue;
            }
            let ratio = exact_abs_pow_mean(da, db, alpha) * (db - da)
                / (exact_abs_pow_mean(a, b, alpha) * (b - a));
            oracle = oracle.max(ratio);
        }
    }
    assert!(
        (constants[1] - oracle).abs() <= 0.03 * oracle,
        "impl {} vs oracle {oracle}",
        constants[1]
    );
}

#[test]
fn exponential_weight_signals_non_doubling() {
    // e^(1/x) truncated away from 0: ratios blow up as the cube family
    // refines toward the singular end
    let mk = |n: usize| {
        Weight::new(sample_midpoints_1d(|x| (1.0 / x).exp(), 0.01, 1.0, n).unwrap()).unwrap()
    };
    let w = mk(1024);
    let rep = doubling_constant(&w, &[1, 2, 3, 4, 5]).unwrap();
    let per_level: Vec<f64> = rep.per_level.iter().map(|l| l.max).collect();
    assert!(
        per_level.windows(2).all(|x| x[1] > x[0]),
        "per-level maxima not increasing: {per_level:?}"
    );
    assert!(per_level.last().unwrap() / per_level.first().unwrap() > 10.0);

    // deepening the family keeps growing the constant without bound
    let deeper = doubling_constant(&w, &[1, 2, 3, 4, 5, 6, 7]).unwrap();
    assert!(deeper.constant > 10.0 * rep.constant);

    // quadrature oracle at the witness cube: integrate e^(1/x) over Q and
    // 2Q. The weight is stiff enough that midpoint cells only resolve it
    // at finer spacing, so the comparison runs at n = 8192.
    let fine = mk(8192);
    let rep_fine = doubling_constant(&fine, &[1, 2, 3, 4, 5]).unwrap();
    let h = fine.grid().h();
    let cube = rep_fine.witness;
    let a = 0.01 + cube.ix as f64 * h;
    let b = a + cube.side as f64 * h;
    let half = 0.5 * (b - a);
    let f = |x: f64| (1.0 / x).exp();
    let oracle = adaptive_simpson(&f, a - half, b + half, 1e-12, 24)
        / adaptive_simpson(&f, a, b, 1e-12, 24);
    assert!(
        (rep_fine.constant - oracle).abs() <= 0.05 * oracle,
        "witness ratio {} vs quadrature {oracle}",
        rep_fine.constant
    );
}

/// Adaptive Simpson, the quadrature oracle for weight integrals.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // tol is relative to the local subintegral and stays fixed down the
        // recursion; halving it would chase below float noise and never stop
        if depth == 0 || delta.abs() <= 15.0 * tol * whole.abs().max(1e-300) {
            left + right + delta / 15.0
        } else {
            step(f, a, fa, m, fm, left, lm, flm, tol, depth - 1)
                + step(f, m, fm, b, fb, right, rm, frm, tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, fa, b, fb, whole, m, fm, tol, depth)
}

#[test]
fn ap_constant_of_sqrt_weight_matches_exact_integrals() {
    let alpha = 0.5;
    let p = 2.0;
    let levels = [1u32, 2, 3];
    let n = 4096;
    let rep = ap_constant(&abs_pow_weight(alpha, n), p, &levels).unwrap();
    assert!(!rep.diverging, "{:?}", rep.refinement_maxima);

    let h = 2.0 / n as f64;
    let mut oracle = 0.0f64;
    for &level in &levels {
        for (a, b) in dyadic_ranges(n, h, -1.0, level) {
            let c = exact_abs_pow_mean(a, b, alpha) * exact_abs_pow_mean(a, b, -alpha);
            oracle = oracle.max(c);
        }
    }
    assert!(
        (rep.constant - oracle).abs() <= 0.05 * oracle,
        "impl {} vs oracle {oracle}",
        rep.constant
    );

    // refinement-stable
    let rep2 = ap_constant(&abs_pow_weight(alpha, 2 * n), p, &levels).unwrap();
    assert!((rep2.constant - rep.constant).abs() <= 0.03 * rep.constant);
}

#[test]
fn ap_constant_flags_supercritical_power() {
    // |x|^(3/2) at p = 2: the dual exponent makes w^(1-p') non-integrable
    let rep = ap_constant(&abs_pow_weight(1.5, 4096), 2.0, &[1, 2, 3]).unwrap();
    assert!(rep.diverging, "{:?}", rep.refinement_maxima);
    let growth: Vec<f64> = rep
        .refinement_maxima
        .windows(2)
        .map(|w| w[1].max / w[0].max)
        .collect();
    assert!(growth.iter().all(|&g| g > 2.0), "{growth:?}");
}

#[test]
fn maximal_of_half_indicator_matches_calculus_oracle() {
    let n = 512;
    let f = sample_midpoints_1d(|x| if x < 0.5 { 1.0 } else { 0.0 }, 0.0, 1.0, n).unwrap();
    let w = Weight::unit(&f);
    let m = maximal_operator(&f, &w).unwrap();
    for i in 0..n {
        let x = f.x(i);
        if x <= 0.5 {
            assert!((m.samples()[i] - 1.0).abs() < 1e-12);
        } else if x >= 0.6 {
            let oracle = 1.0 / (2.0 * x);
            let got = m.samples()[i];
            assert!(
                (got - oracle).abs() <= 0.02 * oracle,
                "x = {x}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn hilbert_of_indicator_matches_log_closed_form() {
    // H(chi_[-1,1])(x) = (1/pi) ln|(x+1)/(x-1)|
    let h = 1.0 / 256.0;
    let n = (8.0 / h) as usize + 1;
    let f = sample_nodes_1d(|x| if x.abs() <= 1.0 { 1.0 } else { 0.0 }, -4.0, 4.0, n).unwrap();
    let t = cz_apply(&f, &KernelSpec::hilbert()).unwrap();
    let idx = ((2.0f64 - (-4.0)) / h).round() as usize;
    assert!((t.x(idx) - 2.0).abs() < 1e-12);
    let oracle = (3.0f64).ln() / std::f64::consts::PI;
    let got = t.samples()[idx];
    assert!(
        (got - oracle).abs() <= 0.02 * oracle,
        "{got} vs {oracle} at x = 2"
    );
}

#[test]
fn hilbert_preserves_l2_norm_of_smooth_bump() {
    let h = 1.0 / 128.0;
    let n = (48.0 / h) as usize + 1;
    let f = sample_nodes_1d(|x| x * (-x * x).exp(), -24.0, 24.0, n).unwrap();
    let t = cz_apply(&f, &KernelSpec::hilbert()).unwrap();
    let l2 = |g: &GridFunction| {
        (g.samples().iter().map(|v| v * v).sum::<f64>() * g.h()).sqrt()
    };
    let (nf, nt) = (l2(&f), l2(&t));
    assert!(
        (nt / nf - 1.0).abs() <= 0.01,
        "||Tf||_2 / ||f||_2 = {}",
        nt / nf
    );
}

#[test]
fn maximal_opnorm_is_finite_and_refinement_stable() {
    let grid = PGrid::new(256.0, 1.15, TailPolicy::AnalyticBound).unwrap();
    let mut ratios = Vec::new();
    for n in [256usize, 512] {
        let corpus: Vec<GridFunction> = (0..20)
            .map(|k| random_smooth_1d(100 + k, n, 0.0, 1.0))
            .collect();
        let w = Weight::new(sample_midpoints_1d(|x| 1.0 + 0.5 * x, 0.0, 1.0, n).unwrap())
            .unwrap();
        let rep = operator_norm_estimate(OperatorKind::Maximal, &w, 1.0, &corpus, &grid).unwrap();
        assert!(rep.max_ratio.is_finite() && rep.max_ratio >= 1.0 - 1e-12);
        assert!(rep.max_ratio < 10.0, "ratio {}", rep.max_ratio);
        ratios.push(rep.max_ratio);
    }
    assert!(
        (ratios[1] - ratios[0]).abs() <= 0.10 * ratios[0],
        "{ratios:?}"
    );
}

#[test]
fn cz_opnorm_bounded_with_flat_mid_range_curve() {
    let n = 512;
    let corpus: Vec<GridFunction> = (0..10)
        .map(|k| random_smooth_1d(300 + k, n, -10.0, 10.0))
        .collect();
    let w = Weight::unit(&corpus[0]);
    let grid = PGrid::new(256.0, 1.15, TailPolicy::AnalyticBound).unwrap();
    let kernel = KernelSpec::hilbert();
    for theta in [0.0, 1.0, 2.0] {
        let rep = operator_norm_estimate(
            OperatorKind::CalderonZygmund(&kernel),
            &w,
            theta,
            &corpus,
            &grid,
        )
        .unwrap();
        assert!(rep.max_ratio.is_finite() && rep.max_ratio < 10.0);
        assert_eq!(rep.holder_monotone, Some(true));
        let mid: Vec<f64> = rep
            .per_p
            .iter()
            .filter(|r| r.p >= 2.0 && r.p <= 16.0)
            .map(|r| r.max_ratio)
            .collect();
        let lo = mid.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mid.iter().cloned().fold(0.0f64, f64::max);
        assert!(
            hi / lo < 1.5,
            "theta {theta}: mid-range ratio curve not flat: [{lo}, {hi}]"
        );
    }
}
