//! Nonzero steady states of Approximations 3 and 4.
//!
//! Everything hinges on `F(z) = z exp(-z / rho_d)`, which increases up to
//! `z = rho_d` and decreases afterwards. For a growth rate `b` its companion
//! `b*` is the other solution of `F(b*) = F(b)`. A nonzero steady state of
//! Approximation 4 exists iff the return rate at zero population exceeds
//! `b*`; for Approximation 3 the analogous condition compares
//!
//! ```text
//! H(A) = int_0^1 exp( int_x^1 (alpha(y, A) - b) / rho_d dy ) dx
//! ```
//!
//! with `rho_d / b` at `A = 0`.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::{bisect, integrate, phi1};
use crate::params::RescaledParameters;
use crate::pde_reduced::ReducedVariant;

/// Maturity at which Approximation 4 evaluates the return rate by default.
pub const DEFAULT_MIDPOINT: f64 = 0.5;

const QUAD_TOL: f64 = 1e-13;
const POPULATION_CAP: f64 = 1e12;

/// The companion growth rate `b*` with `F(b*) = F(b)`, `F(z) = z e^{-z/rho_d}`.
///
/// Solved as `ln z - z / rho_d = ln b - b / rho_d` by bisection on the
/// branch opposite to `b`.
pub fn b_star(b: f64, rho_d: f64) -> f64 {
    assert!(b > 0.0 && rho_d > 0.0, "b_star needs positive arguments");
    if b == rho_d {
        return b;
    }
    let target = b.ln() - b / rho_d;
    let g = |z: f64| z.ln() - z / rho_d - target;
    let (lo, hi) = if b > rho_d {
        // g -> -inf as z -> 0.
        let mut lo = rho_d;
        while g(lo) >= 0.0 {
            lo *= 0.5;
        }
        (lo, rho_d)
    } else {
        let mut hi = 2.0 * rho_d;
        while g(hi) >= 0.0 {
            hi *= 2.0;
        }
        (rho_d, hi)
    };
    bisect(g, lo, hi, 0.0).expect("bracket established above")
}

/// `F(z) = z exp(-z / rho_d)`.
pub fn growth_balance(z: f64, rho_d: f64) -> f64 {
    z * (-z / rho_d).exp()
}

/// Return rate of Approximation 4 at pool size `a_star`.
pub fn midpoint_alpha(p: &RescaledParameters, midpoint: f64, a_star: f64) -> f64 {
    p.kappa * p.alpha_at(midpoint, a_star)
}

/// Whether Approximation 4 (return rate evaluated at `midpoint`) has a
/// nonzero steady state.
pub fn exists_nonzero_approx4(p: &RescaledParameters, midpoint: f64) -> bool {
    midpoint_alpha(p, midpoint, 0.0) > b_star(p.b, p.rho_d)
}

/// `H(A)` of Approximation 3.
pub fn h_function(p: &RescaledParameters, a_star: f64) -> Result<f64> {
    let amp = p.kappa * p.f_alpha(a_star);
    let (g, b, rho) = (p.gamma, p.b, p.rho_d);
    let tail = (-g).exp();
    integrate(
        |x| ((amp * ((-g * x).exp() - tail) / g - b * (1.0 - x)) / rho).exp(),
        0.0,
        1.0,
        QUAD_TOL,
        0.0,
    )
}

/// Whether Approximation 3 has a nonzero steady state: `H(0) > rho_d / b`.
pub fn exists_nonzero_approx3(p: &RescaledParameters) -> Result<bool> {
    Ok(h_function(p, 0.0)? > p.rho_d / p.b)
}

/// A nonzero steady state of Approximation 3 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub variant: ReducedVariant,
    pub a_tilde: f64,
    pub omega_bar: f64,
    /// `Omega~(0)`.
    pub omega0: f64,
    /// Companion rate `b*` (the steady return rate of Approximation 4).
    pub b_star: f64,
    /// Return rate at the steady state: the constant `alpha(A~)` of
    /// Approximation 4, or the amplitude `kappa f_alpha(A~)` of
    /// `alpha(x) = amplitude * exp(-gamma x)` in Approximation 3.
    pub alpha: f64,
    /// Maturity used for the Approximation 4 return rate.
    pub midpoint: f64,
    b: f64,
    rho_d: f64,
    gamma: f64,
}

impl SteadyState {
    /// `Omega~(x)`.
    pub fn profile_at(&self, x: f64) -> f64 {
        self.omega0 * (self.log_shape(x) / self.rho_d).exp()
    }

    /// `rho_d * ln(Omega~(x) / Omega~(0))`.
    fn log_shape(&self, x: f64) -> f64 {
        match self.variant {
            ReducedVariant::Approx3 => {
                self.b * x - self.alpha * -(-self.gamma * x).exp_m1() / self.gamma
            }
            _ => (self.b - self.alpha) * x,
        }
    }

    /// Cell averages of the profile on `grid`.
    pub fn profile(&self, grid: &Grid) -> Vec<f64> {
        grid.project(|x| self.profile_at(x))
    }

    /// Return rate `alpha(x)` at the steady state.
    pub fn alpha_at(&self, x: f64) -> f64 {
        match self.variant {
            ReducedVariant::Approx3 => self.alpha * (-self.gamma * x).exp(),
            _ => self.alpha,
        }
    }
}

/// Solves for the nonzero steady state of Approximation 3 or 4 (with the
/// default midpoint).
pub fn solve_steady(p: &RescaledParameters, variant: ReducedVariant) -> Result<SteadyState> {
    solve_steady_at(p, variant, DEFAULT_MIDPOINT)
}

/// [`solve_steady`] with an explicit Approximation 4 midpoint.
pub fn solve_steady_at(p: &RescaledParameters, variant: ReducedVariant, midpoint: f64) -> Result<SteadyState> {
    match variant {
        ReducedVariant::Approx4 => solve_approx4(p, midpoint),
        ReducedVariant::Approx3 => solve_approx3(p),
        other => Err(Error::Config(format!("no steady-state analysis for {other}"))),
    }
}

/// Smallest power-of-two bracket `[0, hi]` on which `decreasing` changes
/// sign, starting from 1.
fn grow_bracket<F: Fn(f64) -> f64>(decreasing: F) -> Result<f64> {
    let mut hi = 1.0;
    while decreasing(hi) > 0.0 {
        hi *= 2.0;
        if hi > POPULATION_CAP {
            return Err(Error::NoNonzeroSteadyState);
        }
    }
    Ok(hi)
}

/// `Omega_bar` with `a_tilde * omega(Omega_bar) = rate * Omega_bar`.
fn balance_omega(p: &RescaledParameters, a_tilde: f64, rate: f64) -> Result<f64> {
    let excess = |o: f64| a_tilde * p.a_min * p.f_omega(o) - rate * o;
    let hi = grow_bracket(excess)?;
    bisect(excess, 0.0, hi, 0.0)
}

fn solve_approx4(p: &RescaledParameters, midpoint: f64) -> Result<SteadyState> {
    let bs = b_star(p.b, p.rho_d);
    let alpha = |a: f64| midpoint_alpha(p, midpoint, a);
    if !(alpha(0.0) > bs) {
        return Err(Error::NoNonzeroSteadyState);
    }
    let excess = |a: f64| alpha(a) - bs;
    let a_tilde = bisect(excess, 0.0, grow_bracket(excess)?, 0.0)?;
    let omega_bar = balance_omega(p, a_tilde, bs)?;
    let ratio = phi1((p.b - bs) / p.rho_d);
    Ok(SteadyState {
        variant: ReducedVariant::Approx4,
        a_tilde,
        omega_bar,
        omega0: omega_bar / ratio,
        b_star: bs,
        alpha: bs,
        midpoint,
        b: p.b,
        rho_d: p.rho_d,
        gamma: p.gamma,
    })
}

fn solve_approx3(p: &RescaledParameters) -> Result<SteadyState> {
    let threshold = p.rho_d / p.b;
    // H is decreasing in A; errors inside the closure surface as NaN.
    let excess = |a: f64| h_function(p, a).map_or(f64::NAN, |h| h - threshold);
    let at_zero = excess(0.0);
    if at_zero.is_nan() {
        h_function(p, 0.0)?;
    }
    if !(at_zero > 0.0) {
        return Err(Error::NoNonzeroSteadyState);
    }
    let a_tilde = bisect(excess, 0.0, grow_bracket(excess)?, 0.0)?;
    let amp = p.kappa * p.f_alpha(a_tilde);
    let mut state = SteadyState {
        variant: ReducedVariant::Approx3,
        a_tilde,
        omega_bar: 0.0,
        omega0: 1.0,
        b_star: b_star(p.b, p.rho_d),
        alpha: amp,
        midpoint: DEFAULT_MIDPOINT,
        b: p.b,
        rho_d: p.rho_d,
        gamma: p.gamma,
    };
    // With Omega~(0) = 1 the mass is int_0^1 shape; the boundary condition
    // rho_d Omega~(0) = omega(Omega_bar) A~ fixes the scale.
    let mass = integrate(|x| state.profile_at(x), 0.0, 1.0, QUAD_TOL, 0.0)?;
    let omega_bar = balance_omega(p, a_tilde, p.rho_d / mass)?;
    state.omega_bar = omega_bar;
    state.omega0 = omega_bar / mass;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RawParameters;

    fn params() -> RescaledParameters {
        RawParameters::default().rescale().unwrap()
    }

    #[test]
    fn b_star_at_the_fold_is_b() {
        assert_eq!(b_star(0.1884, 0.1884), 0.1884);
    }

    #[test]
    fn b_star_for_the_default_preset() {
        let p = params();
        let bs = b_star(0.42, p.rho_d);
        assert!((bs - 0.0632).abs() < 1e-3, "{bs}");
        let r = growth_balance(bs, p.rho_d) - growth_balance(0.42, p.rho_d);
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn approx4_exists_for_default_preset() {
        let p = params();
        let a0 = midpoint_alpha(&p, 0.5, 0.0);
        assert!((a0 - 0.2898).abs() < 1e-4, "{a0}");
        assert!(exists_nonzero_approx4(&p, 0.5));
    }

    #[test]
    fn approx4_closed_form_relations() {
        let p = params();
        let s = solve_steady(&p, ReducedVariant::Approx4).unwrap();
        let alpha = midpoint_alpha(&p, 0.5, s.a_tilde);
        assert!((alpha - s.b_star).abs() < 1e-12);
        let omega = p.a_min * p.f_omega(s.omega_bar);
        assert!((s.a_tilde * omega - alpha * s.omega_bar).abs() < 1e-10 * s.omega_bar);
        assert!((p.rho_d * s.omega0 - omega * s.a_tilde).abs() < 1e-10 * s.omega0);
        let mass = integrate(|x| s.profile_at(x), 0.0, 1.0, 1e-14, 0.0).unwrap();
        assert!((mass - s.omega_bar).abs() < 1e-10 * s.omega_bar);
    }

    #[test]
    fn approx3_relations() {
        let p = params();
        assert!(exists_nonzero_approx3(&p).unwrap());
        let s = solve_steady(&p, ReducedVariant::Approx3).unwrap();
        let h = h_function(&p, s.a_tilde).unwrap();
        assert!((h - p.rho_d / p.b).abs() < 1e-10);
        // A* balance: omega A~ = int alpha(x, A~) Omega~(x) dx.
        let omega = p.a_min * p.f_omega(s.omega_bar);
        let gain = integrate(
            |x| p.kappa * p.alpha_at(x, s.a_tilde) * s.profile_at(x),
            0.0,
            1.0,
            1e-14,
            0.0,
        )
        .unwrap();
        assert!((gain - omega * s.a_tilde).abs() < 1e-10 * gain);
    }

    #[test]
    fn b_equal_rho_gives_flat_profile() {
        let p = params().with_b(params().rho_d);
        let s = solve_steady(&p, ReducedVariant::Approx4).unwrap();
        assert_eq!(s.b_star, p.b);
        assert!((s.profile_at(1.0) - s.omega0).abs() < 1e-14);
        assert!((s.omega_bar - s.omega0).abs() < 1e-14);
    }

    #[test]
    fn missing_state_is_an_error() {
        let p = RawParameters::default().with_d(1.2).rescale().unwrap();
        assert!(!exists_nonzero_approx4(&p, 0.5));
        assert_eq!(
            solve_steady(&p, ReducedVariant::Approx4).unwrap_err(),
            Error::NoNonzeroSteadyState
        );
        assert!(solve_steady(&params(), ReducedVariant::Approx2).is_err());
    }
}
