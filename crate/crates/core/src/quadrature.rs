//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

// QUADPACK qk15 abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
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
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 48;

// relative to the initial estimate of ∫|f|
const ROUNDOFF_FLOOR: f64 = 50.0 * f64::EPSILON;

/// Integrates a vector-valued `f` over `[a, b]` by adaptive bisection until
/// the Kronrod–Gauss difference of every component is below `abs_tol`
/// (distributed over subintervals by length). Subintervals whose error is at
/// the round-off level of their own `∫|f|` are accepted as well, so requests
/// finer than double precision still terminate. Returns the integral and the summed error estimate.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, abs_tol: f64) -> (Vec<f64>, f64)
where
    F: FnMut(f64, &mut [f64]),
{
    let mut total = vec![0.0; dim];
    let mut err_total = 0.0;
    if a == b || dim == 0 {
        return (total, 0.0);
    }
    let width = (b - a).abs();
    let mut scratch = Scratch::new(dim);
    scratch.kronrod(&mut f, a, b);
    let tol = abs_tol.max(ROUNDOFF_FLOOR * scratch.abs_sum);
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let err = scratch.kronrod(&mut f, lo, hi);
        let allowed = tol * (hi - lo).abs() / width;
        let roundoff = err <= ROUNDOFF_FLOOR * scratch.abs_sum;
        if err <= allowed || roundoff || depth >= MAX_DEPTH {
            for (t, k) in total.iter_mut().zip(&scratch.kronrod_sum) {
                *t += k;
            }
            err_total += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    (total, err_total)
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, abs_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (v, e) = integrate(|x, out| out[0] = f(x), a, b, 1, abs_tol);
    (v[0], e)
}

struct Scratch {
    fx: Vec<f64>,
    kronrod_sum: Vec<f64>,
    gauss_sum: Vec<f64>,
    // largest component of Σ w |f| over the last rule application
    abs_sum: f64,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            fx: vec![0.0; dim],
            kronrod_sum: vec![0.0; dim],
            gauss_sum: vec![0.0; dim],
            abs_sum: 0.0,
        }
    }

    fn kronrod<F: FnMut(f64, &mut [f64])>(&mut self, f: &mut F, a: f64, b: f64) -> f64 {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.kronrod_sum.iter_mut().for_each(|x| *x = 0.0);
        self.gauss_sum.iter_mut().for_each(|x| *x = 0.0);
        let mut abs_sum = 0.0f64;

        f(center, &mut self.fx);
        for ((k, g), &v) in self.kronrod_sum.iter_mut().zip(&mut self.gauss_sum).zip(&self.fx) {
            *k += WGK[7] * v;
            *g += WG[3] * v;
        }
        abs_sum += WGK[7] * self.fx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 0..7 {
            let dx = half * XGK[j];
            for x in [center - dx, center + dx] {
                f(x, &mut self.fx);
                for ((k, g), &v) in self
                    .kronrod_sum
                    .iter_mut()
                    .zip(&mut self.gauss_sum)
                    .zip(&self.fx)
                {
                    *k += WGK[j] * v;
                    if j % 2 == 1 {
                        *g += WG[j / 2] * v;
                    }
                }
                abs_sum += WGK[j] * self.fx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            }
        }
        self.abs_sum = abs_sum * half.abs();
        let mut err = 0.0f64;
        for (k, g) in self.kronrod_sum.iter_mut().zip(&mut self.gauss_sum) {
            *k *= half;
            *g *= half;
            err = err.max((*k - *g).abs());
        }
        err
    }
}
