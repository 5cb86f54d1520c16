//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands on finite intervals.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const M: usize> {
    pub value: [f64; M],
    /// Sum of the per-panel |Kronrod − Gauss| estimates, max over components.
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct Panel<const M: usize> {
    a: f64,
    b: f64,
    value: [f64; M],
    error: f64,
}

impl<const M: usize> PartialEq for Panel<M> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const M: usize> Eq for Panel<M> {}
impl<const M: usize> PartialOrd for Panel<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const M: usize> Ord for Panel<M> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<const M: usize>(f: &impl Fn(f64) -> [f64; M], a: f64, b: f64) -> Panel<M> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut k = [0.0; M];
    let mut g = [0.0; M];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let pts: &[f64] = if x == 0.0 { &[0.0] } else { &[x, -x] };
        for &sx in pts {
            let fx = f(center + half * sx);
            for m in 0..M {
                k[m] += w * fx[m];
                if j % 2 == 1 {
                    g[m] += WG[j / 2] * fx[m];
                }
            }
        }
    }
    let mut error = 0.0f64;
    let mut value = [0.0; M];
    for m in 0..M {
        value[m] = k[m] * half;
        error = error.max(((k[m] - g[m]) * half).abs());
    }
    Panel { a, b, value, error }
}

/// Integrates `f` over `[a, b]` until the summed error estimate drops below
/// `max(abs_tol, rel_tol·max_m |I_m|)` or the panel budget is spent.
pub fn integrate<const M: usize>(
    f: impl Fn(f64) -> [f64; M],
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> QuadResult<M> {
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut evaluations = 15;
    let tolerance = |v: &[f64; M]| {
        let mag = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        opts.abs_tol.max(opts.rel_tol * mag)
    };
    while error > tolerance(&value) && heap.len() < opts.max_intervals {
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        evaluations += 30;
        for m in 0..M {
            value[m] += left.value[m] + right.value[m] - worst.value[m];
        }
        heap.push(left);
        heap.push(right);
        // Re-sum rather than update to keep cancellation from drifting.
        error = heap.iter().map(|p| p.error).sum();
    }
    // Final value from a clean sum over panels.
    let mut clean = [0.0; M];
    for p in heap.iter() {
        for m in 0..M {
            clean[m] += p.value[m];
        }
    }
    let converged = error <= tolerance(&clean);
    QuadResult {
        value: clean,
        error,
        converged,
        evaluations,
    }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> QuadResult<1> {
    integrate(|x| [f(x)], a, b, opts)
}
