//! Adaptive Gauss-Kronrod quadrature and compensated summation.
//!
//! The integrator is a global-adaptive 21-point Kronrod scheme in the style of
//! QUADPACK's QAG: the interval with the largest error estimate is bisected
//! until the summed error drops below the requested tolerance. Semi-infinite
//! ranges are mapped onto `[0, 1)` with `x = a + u / (1 - u)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{CpError, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes (10-point rule).
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and limits for [`integrate`] and friends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 0.0, max_subdivisions: 10_000 }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

/// Neumaier-compensated running sum. Summation order is the insertion order,
/// so identical input sequences give bit-identical totals.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // Ties broken on position so that the refinement order is deterministic.
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, seeding the adaptive
/// refinement with the given breakpoints.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Err(CpError::QuadratureFailure("need at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (value, error) = gk21(&mut f, w[0], w[1]);
        evaluations += 21;
        heap.push(Segment { a: w[0], b: w[1], value, error });
    }
    if heap.is_empty() {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0 });
    }

    let totals = |heap: &BinaryHeap<Segment>| -> (f64, f64) {
        // Sum in position order, independent of heap layout.
        let mut segs: Vec<&Segment> = heap.iter().collect();
        segs.sort_by(|x, y| x.a.total_cmp(&y.a));
        let v: CompensatedSum = segs.iter().map(|s| s.value).collect();
        let e: CompensatedSum = segs.iter().map(|s| s.error).collect();
        (v.value(), e.value())
    };

    let mut value_sum: f64 = heap.iter().map(|s| s.value).sum();
    let mut error_sum: f64 = heap.iter().map(|s| s.error).sum();
    let mut subdivisions = heap.len();
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * value_sum.abs());
        if error_sum <= tol {
            break;
        }
        if !value_sum.is_finite() || !error_sum.is_finite() {
            return Err(CpError::QuadratureFailure("non-finite integrand".into()));
        }
        if subdivisions >= opts.max_subdivisions {
            let (v, e) = totals(&heap);
            // Accept results limited by rounding rather than by resolution.
            if e <= tol.max(1e3 * f64::EPSILON * v.abs()) {
                return Ok(QuadResult { value: v, abs_error: e, evaluations });
            }
            return Err(CpError::QuadratureFailure(format!(
                "subdivision limit {} reached, error {:.3e} vs tolerance {:.3e}",
                opts.max_subdivisions, e, tol
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(Segment { error: 0.0, ..worst });
            error_sum -= worst.error;
            continue;
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        evaluations += 42;
        value_sum += v1 + v2 - worst.value;
        error_sum += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
        // Running sums drift; refresh them periodically.
        if subdivisions % 64 == 0 {
            let (v, e) = totals(&heap);
            value_sum = v;
            error_sum = e;
        }
    }
    let (value, abs_error) = totals(&heap);
    Ok(QuadResult { value, abs_error, evaluations })
}

/// Integrates `f` over `[a, ∞)` using `x = a + scale · u / (1 - u)`.
///
/// `scale` should be of the order of the integrand's decay length.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    integrate_semi_infinite_with_breaks(&mut f, a, scale, &[], opts)
}

/// Like [`integrate_semi_infinite`], with extra breakpoints given in the
/// original variable (each must exceed `a`).
pub fn integrate_semi_infinite_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    let mut ubreaks = vec![0.0];
    for &x in breaks {
        let r = (x - a) / scale;
        if r > 0.0 && r.is_finite() {
            ubreaks.push(r / (1.0 + r));
        }
    }
    ubreaks.push(1.0);
    ubreaks.sort_by(f64::total_cmp);
    ubreaks.dedup();
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - u;
        let x = a + scale * u / one_minus;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (one_minus * one_minus)
        }
    };
    integrate_with_breaks(g, &ubreaks, opts)
}
