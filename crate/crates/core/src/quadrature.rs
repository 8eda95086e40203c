//! Adaptive Gauss–Kronrod integration and Gauss–Legendre rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae (non-negative half); the odd-indexed nodes and 0 carry the 7-point Gauss rule.
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

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-13,
            rel: 1e-12,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive G7/K15 integration over `[a, b]`.
///
/// On failure the error carries the best estimate reached.
pub(crate) fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&mut f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);

    loop {
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Accuracy {
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Accuracy {
                estimate: value,
                error,
            });
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // re-sum in a fixed order to shed the running-update rounding
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    Ok(Estimate { value, error })
}

/// Iterated integral `∫_{y0}^{y1} ∫_{x0}^{x1} f(x, y) dx dy`, inner variable first.
pub(crate) fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    x: (f64, f64),
    y: (f64, f64),
    tol: Tolerance,
) -> Result<Estimate> {
    let inner_tol = Tolerance {
        abs: tol.abs * 1e-2 / (y.1 - y.0).abs().max(1.0),
        rel: tol.rel * 1e-1,
        ..tol
    };
    let mut inner_error = 0.0_f64;
    let mut inner_failure: Option<Error> = None;
    let outer = integrate(
        |yy| match integrate(|xx| f(xx, yy), x.0, x.1, inner_tol) {
            Ok(e) => {
                inner_error = inner_error.max(e.error);
                e.value
            }
            Err(err) => {
                if let Error::Accuracy { estimate, error } = err {
                    inner_error = inner_error.max(error);
                    inner_failure.get_or_insert(err);
                    estimate
                } else {
                    inner_failure.get_or_insert(err);
                    f64::NAN
                }
            }
        },
        y.0,
        y.1,
        tol,
    );
    let total_inner = inner_error * (y.1 - y.0).abs();
    match (outer, inner_failure) {
        (Ok(e), None) => Ok(Estimate {
            value: e.value,
            error: e.error + total_inner,
        }),
        (Ok(e), Some(_)) => Err(Error::Accuracy {
            estimate: e.value,
            error: e.error + total_inner,
        }),
        (Err(Error::Accuracy { estimate, error }), _) => Err(Error::Accuracy {
            estimate,
            error: error + total_inner,
        }),
        (Err(other), _) => Err(other),
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
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
    let p = if n == 0 { 1.0 } else { p1 };
    let pm1 = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let e = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert_relative_eq!(e.value, 8.0, max_relative = 1e-15);
    }

    #[test]
    fn peaked_integrand_converges() {
        // ∫ dx / (1e-4 + x²) on [-1, 1] = 2·atan(100)/1e-2
        let e = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::default()).unwrap();
        assert_relative_eq!(e.value, 200.0 * 100f64.atan(), max_relative = 1e-12);
    }

    #[test]
    fn exhausted_budget_reports_best_estimate() {
        let tol = Tolerance {
            abs: 1e-300,
            rel: 0.0,
            max_intervals: 4,
        };
        match integrate(|x| x.abs().sqrt(), -1.0, 1.0, tol) {
            Err(Error::Accuracy { estimate, .. }) => assert!((estimate - 4.0 / 3.0).abs() < 1e-2),
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn two_dimensional_product() {
        let e = integrate_2d(
            |x, y| x * y * y,
            (0.0, 1.0),
            (1.0, 2.0),
            Tolerance::default(),
        )
        .unwrap();
        assert_relative_eq!(e.value, 0.5 * 7.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn gauss_legendre_rules() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
            // exact through degree 2n − 1
            let deg = 2 * n - 2;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert_relative_eq!(q, 2.0 / (deg as f64 + 1.0), max_relative = 1e-12);
        }
    }
}
