//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands.
//!
//! Used as an independent check on the series antiderivatives; nothing in the
//! sum pipeline depends on it.

#![allow(clippy::excessive_precision)] // tabulated nodes and weights at published precision

use num_complex::Complex64;

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

// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], ...).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    ((kronrod * half), ((kronrod - gauss) * half).norm())
}

/// `integral_a^b f(x) dx` to roughly `tol` absolute error.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    fn recurse<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        b: f64,
        whole: Complex64,
        err: f64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        if err <= tol || depth >= MAX_DEPTH {
            return whole;
        }
        let mid = 0.5 * (a + b);
        let (left, el) = gk15(f, a, mid);
        let (right, er) = gk15(f, mid, b);
        recurse(f, a, mid, left, el, 0.5 * tol, depth + 1)
            + recurse(f, mid, b, right, er, 0.5 * tol, depth + 1)
    }
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let (whole, err) = gk15(&f, a, b);
    recurse(&f, a, b, whole, err, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_integrals() {
        let v = integrate(|x| Complex64::new(x * x, 0.0), 0.0, 1.0, 1e-14);
        assert!((v.re - 1.0 / 3.0).abs() < 1e-15);
        let v = integrate(|x| Complex64::new(0.0, x).exp(), 0.0, 40.0, 1e-13);
        let exact = (Complex64::new(0.0, 40.0).exp() - 1.0) / Complex64::new(0.0, 1.0);
        assert!((v - exact).norm() < 1e-12);
        let v = integrate(|x| Complex64::new(x.sqrt(), 0.0), 0.0, 1.0, 1e-13);
        assert!((v.re - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(
            integrate(|x| Complex64::new(x, 0.0), 0.3, 0.3, 1e-12).norm(),
            0.0
        );
    }
}
