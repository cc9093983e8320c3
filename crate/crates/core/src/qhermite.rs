//! q-numbers, q-Hermite polynomials and the q-normal distribution.
//!
//! The q-Hermite polynomials obey `x H_n = H_{n+1} + [n]_q H_{n-1}` and are
//! orthogonal with respect to the q-normal density `f_qN(x|q)`, which has
//! zero mean, unit variance and fourth moment `q + 2`. The density
//! interpolates between the semicircle (q = 0) and the standard Gaussian
//! (q = 1); for q < 1 it lives on `(-x0, x0)` with `x0 = 2/sqrt(1-q)`.
//!
//! Integrals against the density use the substitution `x = x0 sin θ`, which
//! cancels the `1/sqrt(x0² - x²)` edge factor and leaves a smooth integrand
//! on `(-π/2, π/2)`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Infinite-product factors are kept up to the first index with `q^(i+1)` below this.
pub const PRODUCT_TRUNCATION: f64 = 1e-16;

/// Absolute tolerance handed to the adaptive quadrature.
pub const QUAD_TOL: f64 = 1e-12;

/// A deformation parameter in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QParameter(f64);

impl QParameter {
    pub fn new(q: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&q) {
            Ok(Self(q))
        } else {
            Err(Error::Domain(format!("q={q} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Half-width `2/sqrt(1-q)` of the support, infinite at q = 1.
    pub fn support_edge(self) -> f64 {
        if self.0 >= 1.0 {
            f64::INFINITY
        } else {
            2.0 / (1.0 - self.0).sqrt()
        }
    }
}

impl TryFrom<f64> for QParameter {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        Self::new(q)
    }
}

impl From<QParameter> for f64 {
    fn from(q: QParameter) -> f64 {
        q.0
    }
}

/// `[n]_q = 1 + q + … + q^(n-1)`; equals `n` at q = 1.
pub fn qnumber(n: usize, q: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for _ in 0..n {
        sum += power;
        power *= q;
    }
    sum
}

/// `[n]_q! = Π_{j=1}^{n} [j]_q`, with `[0]_q! = 1`.
pub fn qfactorial(n: usize, q: f64) -> f64 {
    (1..=n).map(|j| qnumber(j, q)).product()
}

/// `H_n(x|q)` by the three-term recurrence.
pub fn hermite_q(n: usize, x: f64, q: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut qn = 0.0; // [j]_q
    let mut power = 1.0; // q^j
    for _ in 0..n {
        let next = x * cur - qn * prev;
        prev = cur;
        cur = next;
        qn += power;
        power *= q;
    }
    cur
}

/// Fills `out[j] = H_j(x|q)` for `j < out.len()`.
pub fn hermite_q_all(x: f64, q: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    let mut qn = 1.0; // [1]_q
    let mut power = q; // q^1
    for j in 1..out.len().saturating_sub(1) {
        out[j + 1] = x * out[j] - qn * out[j - 1];
        qn += power;
        power *= q;
    }
}

/// `Π_i (c_i - e_i s²)` with exponent tracking so intermediate partial
/// products cannot under- or overflow.
fn product(c: &[f64], e: &[f64], s2: f64) -> f64 {
    let mut p = 1.0;
    let mut exp2 = 0i32;
    for (c, e) in c.iter().zip(e) {
        p *= c - e * s2;
        if p < TWO_POW_M500 {
            if p <= 0.0 {
                return 0.0;
            }
            p *= TWO_POW_500;
            exp2 -= 500;
        } else if p > TWO_POW_500 {
            p *= TWO_POW_M500;
            exp2 += 500;
        }
    }
    if exp2 == 0 {
        p
    } else {
        p * 2f64.powi(exp2)
    }
}

const TWO_POW_500: f64 = 3.273_390_607_896_142e150;
const TWO_POW_M500: f64 = 3.054_936_363_499_605e-151;

/// Above this q the density kernel is evaluated from the modular-transformed
/// theta series instead of the infinite product.
pub const THETA_SERIES_ABOVE: f64 = 0.5;

/// The q-normal density with a precomputed kernel.
///
/// In the angle variable `x = x0 sin θ` the density is
/// `f dx = K(θ)/(2π) dθ` with `K(θ) = Π_{i≥0} (1 - q^(i+1)) [(1 + q^i)² - 4 q^i sin²θ]`.
/// For small q the product is taken directly. For larger q it needs
/// thousands of factors and underflows by hundreds of decades, so the Jacobi
/// triple product and the theta modular transformation are used instead:
/// `K(θ) = 2 cos θ q^(-1/8) sqrt(π/t) Σ_n (-1)^n exp(-(θ + nπ)²/t)`, `t = -ln(q)/2`,
/// where a handful of terms suffice.
#[derive(Clone, Debug)]
pub struct QNormal {
    q: QParameter,
    x0: f64,
    kernel: Kernel,
}

#[derive(Clone, Debug)]
enum Kernel {
    Gaussian,
    // factor_i(s²) = c_i - e_i s², s = sin θ
    Product { c: Vec<f64>, e: Vec<f64> },
    Theta { t: f64, scale: f64, terms: i32 },
}

/// Number of product factors kept under the `PRODUCT_TRUNCATION` rule.
pub fn product_factors(q: f64) -> usize {
    if q <= 0.0 {
        return 1;
    }
    let mut qi1 = q;
    let mut n = 1;
    while qi1 >= PRODUCT_TRUNCATION {
        qi1 *= q;
        n += 1;
    }
    n
}

impl QNormal {
    pub fn new(q: f64) -> Result<Self> {
        let q = QParameter::new(q)?;
        let x0 = q.support_edge();
        let kernel = if q.0 >= 1.0 {
            Kernel::Gaussian
        } else if q.0 <= THETA_SERIES_ABOVE {
            let (mut c, mut e) = (Vec::new(), Vec::new());
            let mut qi = 1.0; // q^i
            loop {
                let qi1 = qi * q.0;
                c.push((1.0 - qi1) * (1.0 + qi) * (1.0 + qi));
                e.push((1.0 - qi1) * 4.0 * qi);
                if qi1 < PRODUCT_TRUNCATION {
                    break;
                }
                qi = qi1;
            }
            Kernel::Product { c, e }
        } else {
            let t = -0.5 * q.0.ln();
            // terms beyond |n| = N are below exp(-40) relative to the leading one
            let terms = (0.5 + (40.0 * t).sqrt() / PI).ceil() as i32 + 1;
            let scale = 2.0 * q.0.powf(-0.125) * (PI / t).sqrt();
            Kernel::Theta { t, scale, terms }
        };
        Ok(Self { q, x0, kernel })
    }

    pub fn q(&self) -> f64 {
        self.q.0
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.kernel, Kernel::Gaussian)
    }

    /// Support half-width `x0` (infinite in the Gaussian case).
    pub fn edge(&self) -> f64 {
        self.x0
    }

    /// `K(θ)` from `s = sin θ`.
    fn kernel(&self, s: f64) -> f64 {
        match &self.kernel {
            Kernel::Gaussian => f64::NAN,
            Kernel::Product { c, e } => product(c, e, s * s),
            Kernel::Theta { t, scale, terms } => {
                let s = s.clamp(-1.0, 1.0);
                let theta = s.asin();
                let cos = (1.0 - s * s).max(0.0).sqrt();
                let mut sum = 0.0;
                for n in -terms..=*terms {
                    let u = theta + f64::from(n) * PI;
                    let term = (-u * u / t).exp();
                    sum += if n % 2 == 0 { term } else { -term };
                }
                (scale * cos * sum).max(0.0)
            }
        }
    }

    /// `f_qN(x|q)`; zero outside the support.
    pub fn density(&self, x: f64) -> f64 {
        if self.is_gaussian() {
            return (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        }
        if x.abs() >= self.x0 {
            return 0.0;
        }
        let s = x / self.x0;
        self.kernel(s) / (2.0 * PI * self.x0 * (1.0 - s * s).sqrt())
    }

    /// Density in the angle variable: `f(x0 sin θ) · x0 cos θ`.
    fn angular_weight(&self, theta: f64) -> f64 {
        self.kernel(theta.sin()) / (2.0 * PI)
    }

    fn theta_of(&self, x: f64) -> f64 {
        (x / self.x0).clamp(-1.0, 1.0).asin()
    }

    /// Distribution function `∫_{-x0}^{x} f_qN`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_gaussian() {
            return 0.5 * libm::erfc(-x / SQRT_2);
        }
        if x <= -self.x0 {
            return 0.0;
        }
        if x >= self.x0 {
            return 1.0;
        }
        let theta = self.theta_of(x);
        let (v, _) =
            quadrature::integrate_scalar(|t| self.angular_weight(t), -FRAC_PI_2, theta, QUAD_TOL);
        v.clamp(0.0, 1.0)
    }

    /// `∫ g(x) f_qN(x) dx` over the whole support, `g` vector valued with `dim` components.
    pub fn expectation<G>(&self, mut g: G, dim: usize) -> Vec<f64>
    where
        G: FnMut(f64, &mut [f64]),
    {
        if self.is_gaussian() {
            // the standard normal is negligible beyond |x| = 40
            let (v, _) = quadrature::integrate(
                |x, out| {
                    g(x, out);
                    let w = self.density(x);
                    out.iter_mut().for_each(|o| *o *= w);
                },
                -40.0,
                40.0,
                dim,
                QUAD_TOL,
            );
            return v;
        }
        let (v, _) = quadrature::integrate(
            |t, out| {
                g(self.x0 * t.sin(), out);
                let w = self.angular_weight(t);
                out.iter_mut().for_each(|o| *o *= w);
            },
            -FRAC_PI_2,
            FRAC_PI_2,
            dim,
            QUAD_TOL,
        );
        v
    }

    /// `[∫_{lower}^{x} f_qN H_n dx for n = 0..=nmax]`.
    pub fn partial_moments(&self, x: f64, nmax: usize) -> Vec<f64> {
        self.cumulative_moments(&[x], nmax).pop().unwrap_or_default()
    }

    /// Partial weighted integrals `∫_{lower}^{x_i} f_qN(t) H_n(t|q) dt`,
    /// n = 0..=nmax, for every point. Points outside the support are clamped
    /// to its edges. Integration proceeds between consecutive sorted points
    /// so the total work is one pass over the support.
    pub fn cumulative_moments(&self, xs: &[f64], nmax: usize) -> Vec<Vec<f64>> {
        let dim = nmax + 1;
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let mut out = vec![Vec::new(); xs.len()];

        if self.is_gaussian() {
            // ∫_{-∞}^{x} φ He_n = -φ(x) He_{n-1}(x) for n >= 1
            let mut h = vec![0.0; dim.max(1)];
            for (i, &x) in xs.iter().enumerate() {
                hermite_q_all(x, 1.0, &mut h);
                let phi = self.density(x);
                let mut row = vec![0.0; dim];
                row[0] = self.cdf(x);
                for n in 1..dim {
                    row[n] = -phi * h[n - 1];
                }
                out[i] = row;
            }
            return out;
        }

        let mut acc = vec![0.0; dim];
        let mut theta_prev = -FRAC_PI_2;
        let mut h = vec![0.0; dim];
        for &i in &order {
            if xs[i] >= self.x0 {
                // full-support values: normalization and orthogonality to H_0
                let mut full = vec![0.0; dim];
                full[0] = 1.0;
                out[i] = full;
                continue;
            }
            let theta = self.theta_of(xs[i]);
            if theta > theta_prev {
                let (piece, _) = quadrature::integrate(
                    |t, o| {
                        hermite_q_all(self.x0 * t.sin(), self.q.0, &mut h);
                        let w = self.angular_weight(t);
                        for (o, hn) in o.iter_mut().zip(&h) {
                            *o = w * hn;
                        }
                    },
                    theta_prev,
                    theta,
                    dim,
                    QUAD_TOL * (theta - theta_prev) / PI,
                );
                for (a, p) in acc.iter_mut().zip(piece) {
                    *a += p;
                }
                theta_prev = theta;
            }
            out[i] = acc.clone();
        }
        out
    }
}

/// `f_qN(x|q)`.
pub fn fqn_density(x: f64, q: f64) -> Result<f64> {
    Ok(QNormal::new(q)?.density(x))
}

/// `∫_{lower}^{x} f_qN(t|q) dt`.
pub fn fqn_cdf(x: f64, q: f64) -> Result<f64> {
    Ok(QNormal::new(q)?.cdf(x))
}

/// `∫_{s(q)} H_n H_m f_qN dx`, which equals `[n]_q! δ_nm`.
pub fn orthogonality_integral(n: usize, m: usize, q: f64) -> Result<f64> {
    if !(0.0..=1.0 - 1e-3).contains(&q) {
        return Err(Error::Domain(format!(
            "orthogonality quadrature needs q in [0, 0.999], got {q}"
        )));
    }
    let dist = QNormal::new(q)?;
    Ok(dist.expectation(
        |x, out| out[0] = hermite_q(n, x, q) * hermite_q(m, x, q),
        1,
    )[0])
}
