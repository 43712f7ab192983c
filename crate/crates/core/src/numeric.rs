//! Small numerical kernels shared by the solvers: bracketed bisection,
//! adaptive Gauss–Kronrod quadrature and the `(e^z - 1)/z` family used by
//! the exponential integrators and the characteristic function.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Bisection on a sign change of `f` in `[lo, hi]`.
///
/// Stops when the bracket is narrower than `xtol` (absolute) or after 200
/// halvings. Returns the midpoint of the final bracket.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::NoBracket(format!(
            "f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = K15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for (i, &node) in GK_NODES.iter().take(7).enumerate() {
        let f1 = f(c - h * node);
        let f2 = f(c + h * node);
        kronrod += K15_WEIGHTS[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Converges when the summed error estimate is below
/// `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let mut intervals = vec![{
        let (v, e) = gk15(&mut f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..4000 {
        let total: f64 = intervals.iter().map(|s| s.2).sum();
        let err: f64 = intervals.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty interval list");
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    Err(Error::QuadratureFailure(format!(
        "subdivision limit reached on [{a}, {b}]"
    )))
}

/// `(e^z - 1) / z`, continuous through `z = 0`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

/// Complex `(e^z - 1) / z`.
pub fn phi1_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // Horner form of sum_{k>=0} z^k / (k+1)!
        let mut acc = Complex64::new(1.0 / 5040.0, 0.0);
        for d in [720.0, 120.0, 24.0, 6.0, 2.0, 1.0] {
            acc = acc * z + 1.0 / d;
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Derivative of [`phi1_c`]: `(z e^z - e^z + 1) / z^2`.
pub fn phi1_prime_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // sum_{k>=1} k z^(k-1) / (k+1)!
        let coeffs = [
            1.0 / 2.0,
            1.0 / 3.0,
            1.0 / 8.0,
            1.0 / 30.0,
            1.0 / 144.0,
            1.0 / 840.0,
            1.0 / 5760.0,
        ];
        coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    } else {
        let e = z.exp();
        (z * e - e + 1.0) / (z * z)
    }
}

/// Chebyshev points of the second kind mapped to `[a, b]`.
pub fn chebyshev_points(n: usize, a: f64, b: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = (std::f64::consts::PI * k as f64 / (n - 1).max(1) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::NoBracket(_))
        ));
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let v = integrate(|x| x.exp(), 0.0, 1.0, 1e-13, 0.0).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        let v = integrate(|x| (50.0 * x).sin().powi(2), 0.0, 1.0, 1e-12, 0.0).unwrap();
        let exact = 0.5 - (100f64).sin() / 200.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn phi1_is_smooth_across_branch() {
        for &z in &[1e-6, 9.9e-6, 1.01e-5, 1e-3] {
            let direct = f64::exp_m1(z) / z;
            assert!((phi1(z) - direct).abs() < 1e-12);
        }
        assert_eq!(phi1(0.0), 1.0);
        let z = Complex64::new(0.3, -0.2);
        let h = 1e-6;
        let fd = (phi1_c(z + h) - phi1_c(z - h)) / (2.0 * h);
        assert!((fd - phi1_prime_c(z)).norm() < 1e-9);
        let small = Complex64::new(2e-3, 1e-3);
        let direct = (small.exp() - 1.0) / small;
        assert!((phi1_c(small) - direct).norm() < 1e-11);
    }
}
