//! Small numerical kernels shared by the engines: stable log-sum-exp,
//! trapezoid rules, adaptive Gauss-Kronrod quadrature and weighted medians.

use crate::error::{Error, Result};

/// `log(sum(exp(v)))` computed by shifting with the running maximum.
///
/// Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            (0..points)
                .map(|k| if k == points - 1 { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}

/// Trapezoid quadrature weights for a sorted (possibly non-uniform) grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let h = 0.5 * (grid[k] - grid[k - 1]);
        w[k - 1] += h;
        w[k] += h;
    }
    w
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(grid.len(), values.len());
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(z, v)| 0.5 * (z[1] - z[0]) * (v[0] + v[1]))
        .sum()
}

/// Log of the trapezoid integral of `exp(log_values)` over `grid`.
pub fn log_trapezoid(grid: &[f64], log_values: &[f64]) -> f64 {
    let w = trapezoid_weights(grid);
    let terms: Vec<f64> = w
        .iter()
        .zip(log_values)
        .map(|(w, lv)| if *w > 0.0 { w.ln() + lv } else { f64::NEG_INFINITY })
        .collect();
    log_sum_exp(&terms)
}

/// Step of a uniform grid, or `None` if the spacing is not constant.
pub fn uniform_step(grid: &[f64]) -> Option<f64> {
    if grid.len() < 2 {
        return None;
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if step <= 0.0 {
        return None;
    }
    let ok = grid
        .iter()
        .enumerate()
        .all(|(k, z)| (z - (grid[0] + step * k as f64)).abs() <= 1e-9 * step.max(z.abs()));
    ok.then_some(step)
}

pub fn is_sorted(grid: &[f64]) -> bool {
    grid.windows(2).all(|w| w[0] <= w[1])
}

/// Lower weighted median: the smallest value whose cumulative weight reaches
/// half of the total weight. Ties resolve to the smaller value.
///
/// Panics if `values` and `weights` differ in length; returns `None` for
/// empty input or zero total weight.
pub fn weighted_lower_median(values: &[f64], weights: &[f64]) -> Option<f64> {
    assert_eq!(values.len(), weights.len());
    let total: f64 = weights.iter().sum();
    if values.is_empty() || total <= 0.0 {
        return None;
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let half = 0.5 * total;
    let mut cum = 0.0;
    for &j in &order {
        cum += weights[j];
        // relative slack absorbs summation rounding at an exact 0.5 boundary
        if cum >= half * (1.0 - 1e-12) {
            return Some(values[j]);
        }
    }
    order.last().map(|&j| values[j])
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Result of an adaptive quadrature call.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// The interval is first split into `panels` equal pieces so that narrow
/// features in a wide range are not missed by the first estimate; the panel
/// with the largest error estimate is then bisected until the total error is
/// below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Numeric(format!("bad quadrature range [{a}, {b}]")));
    }
    integrate_breaks(f, &linspace(a, b, panels.max(1) + 1), abs_tol, rel_tol)
}

/// Like [`integrate`], with the initial panels given by sorted breakpoints
/// (the first and last breakpoints are the integration limits).
pub fn integrate_breaks<F: Fn(f64) -> f64>(
    f: F,
    edges: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    if edges.len() < 2 || !is_sorted(edges) || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numeric("quadrature breakpoints must be finite and sorted".into()));
    }
    const MAX_INTERVALS: usize = 4000;
    let (a, b) = (edges[0], edges[edges.len() - 1]);
    let mut pieces: Vec<(f64, f64, f64, f64)> = edges
        .windows(2)
        .map(|e| {
            let (v, err) = gk15(&f, e[0], e[1]);
            (e[0], e[1], v, err)
        })
        .collect();
    loop {
        let value: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::Numeric(format!(
                "quadrature over [{a}, {b}] produced non-finite value"
            )));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature { value, error, intervals: pieces.len() });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature over [{a}, {b}] did not converge: value {value:e}, error estimate {error:e} after {} intervals",
                pieces.len()
            )));
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = log_sum_exp(&[-1000.0, 0.0]);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let g = vec![0.0, 0.3, 1.0, 2.5];
        let v: Vec<f64> = g.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((trapezoid(&g, &v) - (2.5 * 2.5 + 2.5)).abs() < 1e-12);
        let w = trapezoid_weights(&g);
        let s: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((s - trapezoid(&g, &v)).abs() < 1e-12);
    }

    #[test]
    fn uniform_step_detection() {
        assert!(uniform_step(&linspace(-5.0, 15.0, 4001)).is_some());
        assert!(uniform_step(&[0.0, 1.0, 3.0]).is_none());
        assert!(uniform_step(&[1.0]).is_none());
    }

    #[test]
    fn gauss_kronrod_integrates_gaussian() {
        let q = integrate(|x: f64| (-0.5 * x * x).exp(), -40.0, 40.0, 16, 1e-14, 1e-13).unwrap();
        assert!((q.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gauss_kronrod_reports_nonconvergence() {
        let r = integrate(|x: f64| 1.0 / (x * x), 0.0, 1.0, 1, 0.0, 1e-10);
        assert!(r.is_err());
    }

    #[test]
    fn weighted_median_conventions() {
        // cumulative 0.2, 0.5, 1.0: lower median is the middle value
        assert_eq!(weighted_lower_median(&[3.0, 1.0, 2.0], &[0.5, 0.2, 0.3]), Some(2.0));
        assert_eq!(weighted_lower_median(&[7.0, 7.0], &[0.5, 0.5]), Some(7.0));
        assert_eq!(weighted_lower_median(&[1.0, 2.0], &[0.5, 0.5]), Some(1.0));
        assert_eq!(weighted_lower_median(&[], &[]), None);
    }
}
