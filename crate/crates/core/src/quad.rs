//! Quadrature rules: adaptive Gauss–Kronrod, Gauss–Legendre nodes, and
//! trapezoid/Simpson sums on sampled data.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel; returns (integral, |K15 − G7|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

/// Globally adaptive Gauss–Kronrod (7/15) integration over a finite interval.
///
/// The panel with the largest error estimate is bisected until the total estimate
/// falls below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Quadrature> {
    let (v0, e0) = gk15(&f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64)> = vec![(a, b, v0, e0)];
    let mut total = v0;
    let mut err = e0;
    let mut splits = 0;
    loop {
        let target = abs_tol.max(rel_tol * total.abs()).max(50.0 * f64::EPSILON * total.abs());
        if err <= target {
            return Ok(Quadrature { value: total, error_estimate: err, subdivisions: splits });
        }
        if splits >= max_subdivisions {
            return Err(Error::QuadratureFailure { subdivisions: splits, error_estimate: err });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, pv, pe) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        let (lv, le) = gk15(&f, pa, mid);
        let (rv, re) = gk15(&f, mid, pb);
        total += lv + rv - pv;
        err += le + re - pe;
        panels.push((pa, mid, lv, le));
        panels.push((mid, pb, rv, re));
        splits += 1;
        if err < 0.0 {
            // accumulated cancellation; recompute from scratch
            total = panels.iter().map(|p| p.2).sum();
            err = panels.iter().map(|p| p.3).sum();
        }
    }
}

/// Gauss–Legendre rule with `n` points on [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(c + h * x)).sum::<f64>() * h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Composite trapezoid rule over uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Composite Simpson rule over uniformly spaced samples. An even sample count
/// closes the last panel with a trapezoid.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 3 {
        return trapezoid(values, h);
    }
    let m = if n % 2 == 1 { n } else { n - 1 };
    let mut s = values[0] + values[m - 1];
    for (j, v) in values[1..m - 1].iter().enumerate() {
        s += if j % 2 == 0 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = s * h / 3.0;
    if m < n {
        total += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    total
}

/// Running trapezoid integral of samples on a (possibly nonuniform) grid; starts at 0.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(t.len(), y.len());
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    for k in 0..t.len() {
        if k > 0 {
            acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// Derivative of samples on a nonuniform grid: three-point centered formula in
/// the interior, one-sided three-point formulas at the ends.
pub fn nonuniform_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    assert_eq!(n, y.len());
    if n < 3 {
        return match n {
            2 => {
                let d = (y[1] - y[0]) / (t[1] - t[0]);
                vec![d, d]
            }
            _ => vec![0.0; n],
        };
    }
    let three = |i0: usize, at: usize| {
        let (x0, x1, x2) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let x = t[at];
        let l0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let l1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let l2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        l0 * y[i0] + l1 * y[i0 + 1] + l2 * y[i0 + 2]
    };
    let mut d = Vec::with_capacity(n);
    d.push(three(0, 0));
    for k in 1..n - 1 {
        d.push(three(k - 1, k));
    }
    d.push(three(n - 3, n - 1));
    d
}
