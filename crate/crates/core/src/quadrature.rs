//! One-dimensional quadrature rules shared by the grid weights and the
//! enclosed-volume integrals.

use crate::error::{Error, Result};

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre8(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
        sum += w * (f(mid - half * x) + f(mid + half * x));
    }
    sum * half
}

#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Returns (Kronrod estimate, |Kronrod - Gauss|).
fn gauss_kronrod15(a: f64, b: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

const MAX_SEGMENTS: usize = 400;

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Bisects the segment with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_adaptive(a: f64, b: f64, abs_tol: f64, rel_tol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let (value, err) = gauss_kronrod15(a, b, &f);
    let mut segments = vec![(a, b, value, err)];
    loop {
        let total: f64 = segments.iter().map(|s| s.2).sum();
        let total_err: f64 = segments.iter().map(|s| s.3).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if total_err <= tol {
            return Ok(total);
        }
        if segments.len() >= MAX_SEGMENTS || !total.is_finite() {
            return Err(Error::QuadratureFailure {
                tolerance: tol,
                estimate: total_err,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gauss_kronrod15(lo, mid, &f);
        let (v2, e2) = gauss_kronrod15(mid, hi, &f);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}
