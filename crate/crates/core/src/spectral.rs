//! Spectral analysis of Approximations 3 and 4.
//!
//! Two problems are treated here.
//!
//! The frozen-coefficient eigenproblem: with the populations inside `alpha`
//! and `omega` held fixed the system is linear,
//!
//! ```text
//! lambda Omega + rho_d Omega' = (b - alpha(x)) Omega
//! lambda A = -omega A + int alpha Omega dx,    rho_d Omega(0) = omega A
//! ```
//!
//! and has a unique real eigenvalue, the crossing of the increasing line
//! `G(lambda) = rho_d (lambda / omega + 1)` with the decreasing
//! `L(lambda) = int alpha(x) exp(int_0^x (b - alpha - lambda) / rho_d) dx`.
//! Its adjoint `(phi, Psi)` gives the Lyapunov functional
//! `v = int phi Omega dx + phi(0) A`.
//!
//! The characteristic equation `f(lambda) = 1` of the linearisation of
//! Approximation 4 about its nonzero steady state, whose rightmost root
//! decides local stability.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{bisect, integrate, phi1_c, phi1_prime_c};
use crate::params::RescaledParameters;
use crate::pde_reduced::{ReducedModel, ReducedState, ReducedVariant};
use crate::steady::{SteadyState, DEFAULT_MIDPOINT};

const QUAD_TOL: f64 = 1e-12;

/// A return-rate profile `x -> alpha(x)` on `[0, 1]`.
pub trait AlphaProfile {
    fn value(&self, x: f64) -> f64;

    /// `int_0^x alpha(s) ds`. Profiles with a closed form should override
    /// the quadrature.
    fn integral(&self, x: f64) -> f64 {
        integrate(|s| self.value(s), 0.0, x, 1e-14, 1e-300).unwrap_or(f64::NAN)
    }
}

/// The profiles arising in the model: `amplitude * exp(-gamma x)`
/// (Approximation 3) and constants (Approximation 4).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaShape {
    Constant(f64),
    Exponential { amplitude: f64, gamma: f64 },
}

impl AlphaProfile for AlphaShape {
    fn value(&self, x: f64) -> f64 {
        match *self {
            AlphaShape::Constant(a) => a,
            AlphaShape::Exponential { amplitude, gamma } => amplitude * (-gamma * x).exp(),
        }
    }

    fn integral(&self, x: f64) -> f64 {
        match *self {
            AlphaShape::Constant(a) => a * x,
            AlphaShape::Exponential { amplitude, gamma } => amplitude * -(-gamma * x).exp_m1() / gamma,
        }
    }
}

/// An arbitrary profile given by a function.
#[derive(Clone, Copy)]
pub struct FnAlpha<F>(pub F);

impl<F: Fn(f64) -> f64> AlphaProfile for FnAlpha<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

impl<F> std::fmt::Debug for FnAlpha<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("FnAlpha(..)")
    }
}

/// Rates with the population arguments frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenRates<P> {
    pub alpha: P,
    /// Per-day transfer rate out of the pool.
    pub omega: f64,
    pub b: f64,
    pub rho_d: f64,
}

impl FrozenRates<AlphaShape> {
    /// Rates of Approximation 3 or 4 at zero population.
    pub fn zero_state(p: &RescaledParameters, variant: ReducedVariant) -> Result<Self> {
        let alpha = match variant {
            ReducedVariant::Approx3 => AlphaShape::Exponential {
                amplitude: p.kappa * p.f_alpha(0.0),
                gamma: p.gamma,
            },
            ReducedVariant::Approx4 => {
                AlphaShape::Constant(p.kappa * p.alpha_at(DEFAULT_MIDPOINT, 0.0))
            }
            other => return Err(Error::Config(format!("no zero-state analysis for {other}"))),
        };
        Ok(Self {
            alpha,
            omega: p.a_min * p.f_omega(0.0),
            b: p.b,
            rho_d: p.rho_d,
        })
    }
}

impl<P: AlphaProfile> FrozenRates<P> {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("frozen rates: {what}")));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad("omega must be positive");
        }
        if !(self.rho_d > 0.0 && self.b.is_finite()) {
            return bad("rho_d must be positive and b finite");
        }
        Ok(())
    }

    /// `int_0^x (b - alpha - lambda) ds`.
    fn exponent(&self, x: f64, lambda: f64) -> f64 {
        (self.b - lambda) * x - self.alpha.integral(x)
    }

    /// `L(lambda)`.
    pub fn l_value(&self, lambda: f64) -> Result<f64> {
        let rho = self.rho_d;
        integrate(
            |x| self.alpha.value(x) * (self.exponent(x, lambda) / rho).exp(),
            0.0,
            1.0,
            QUAD_TOL,
            1e-300,
        )
    }

    /// `G(lambda)`.
    pub fn g_value(&self, lambda: f64) -> f64 {
        self.rho_d * (lambda / self.omega + 1.0)
    }
}

/// Sign of the real eigenvalue predicted by `L(0)` versus `rho_d`: positive
/// iff `int alpha e^{int (b - alpha) / rho_d} dx > rho_d`.
pub fn growth_condition<P: AlphaProfile>(rates: &FrozenRates<P>) -> Result<f64> {
    Ok(rates.l_value(0.0)? - rates.rho_d)
}

/// Real eigenvalue with direct and adjoint eigenfunctions.
#[derive(Debug, Clone)]
pub struct EigenSolution<P> {
    pub lambda: f64,
    /// `Omega(0)` for the normalisation `int Omega dx = 1`.
    pub omega0: f64,
    pub a: f64,
    /// Adjoint pool component, with `phi(0) = 1`.
    pub psi: f64,
    /// `L(lambda)`.
    pub l_value: f64,
    pub rates: FrozenRates<P>,
}

impl<P: AlphaProfile> EigenSolution<P> {
    pub fn omega_at(&self, x: f64) -> f64 {
        self.omega0 * (self.rates.exponent(x, self.lambda) / self.rates.rho_d).exp()
    }

    /// `phi(x) = (1 / L) int_x^1 alpha(y) e^{(I(y) - I(x)) / rho_d} dy`.
    pub fn phi_at(&self, x: f64) -> Result<f64> {
        if x >= 1.0 {
            return Ok(0.0);
        }
        let r = &self.rates;
        let ix = r.exponent(x, self.lambda);
        let tail = integrate(
            |y| r.alpha.value(y) * ((r.exponent(y, self.lambda) - ix) / r.rho_d).exp(),
            x,
            1.0,
            QUAD_TOL,
            1e-300,
        )?;
        Ok(tail / self.l_value)
    }

    /// `phi'(x)` from the adjoint equation.
    pub fn phi_derivative(&self, x: f64, phi: f64) -> f64 {
        let r = &self.rates;
        ((self.lambda - r.b + r.alpha.value(x)) * phi - r.alpha.value(x) * self.psi) / r.rho_d
    }
}

/// Solves the frozen-coefficient eigenproblem.
pub fn real_eigenvalue<P: AlphaProfile + Clone>(rates: &FrozenRates<P>) -> Result<EigenSolution<P>> {
    rates.validate()?;
    // G - L is increasing, negative at -omega (G = 0 <= L) and positive for
    // large lambda.
    let gap = |l: f64| rates.l_value(l).map_or(f64::NAN, |v| rates.g_value(l) - v);
    let lo = -rates.omega;
    let at_lo = gap(lo);
    if at_lo.is_nan() {
        rates.l_value(lo)?;
    }
    let lambda = if at_lo >= 0.0 {
        lo
    } else {
        let mut hi = rates.b.abs().max(1.0);
        while !(gap(hi) > 0.0) {
            hi *= 2.0;
            if hi > 1e3 {
                return Err(Error::NoBracket("real eigenvalue above 1e3 per day".into()));
            }
        }
        bisect(gap, lo, hi, 1e-15)?
    };
    let l_value = rates.l_value(lambda)?;
    let rho = rates.rho_d;
    let mass = integrate(
        |x| (rates.exponent(x, lambda) / rho).exp(),
        0.0,
        1.0,
        QUAD_TOL,
        1e-300,
    )?;
    let omega0 = 1.0 / mass;
    Ok(EigenSolution {
        lambda,
        omega0,
        a: rho * omega0 / rates.omega,
        psi: rho / l_value,
        l_value,
        rates: rates.clone(),
    })
}

/// Stability of the zero steady state of Approximation 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroStability {
    Attractive,
    Unstable,
    Marginal,
}

impl ZeroStability {
    pub fn label(&self) -> &'static str {
        match self {
            ZeroStability::Attractive => "attractive",
            ZeroStability::Unstable => "unstable",
            ZeroStability::Marginal => "marginal",
        }
    }
}

/// Compares `int alpha(x, 0) e^{int_0^x (b - alpha(s, 0)) / rho_d} dx` with
/// `rho_d` for Approximation 3.
pub fn zero_state_condition(p: &RescaledParameters) -> Result<ZeroStability> {
    let rates = FrozenRates::zero_state(p, ReducedVariant::Approx3)?;
    let gap = growth_condition(&rates)?;
    Ok(if gap.abs() <= 1e-10 {
        ZeroStability::Marginal
    } else if gap > 0.0 {
        ZeroStability::Unstable
    } else {
        ZeroStability::Attractive
    })
}

/// The characteristic function of the linearisation of Approximation 4
/// about its nonzero steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicEquation {
    pub b: f64,
    pub rho_d: f64,
    pub b_star: f64,
    pub a_tilde: f64,
    pub omega0: f64,
    /// `d alpha / d A` at `A~`.
    pub alpha_prime: f64,
    /// `d omega / d Omega_bar` at the steady total.
    pub omega_prime: f64,
}

const POLE_TOL: f64 = 1e-14;
const SERIES_RADIUS: f64 = 1e-6;

impl CharacteristicEquation {
    pub fn new(steady: &SteadyState, p: &RescaledParameters) -> Result<Self> {
        if steady.variant != ReducedVariant::Approx4 {
            return Err(Error::Config(
                "the characteristic equation is derived for approx4".into(),
            ));
        }
        let factor = p.kappa * (-p.gamma * steady.midpoint).exp();
        Ok(Self {
            b: p.b,
            rho_d: p.rho_d,
            b_star: steady.b_star,
            a_tilde: steady.a_tilde,
            omega0: steady.omega0,
            alpha_prime: factor * p.sigmoid_alpha.derivative(steady.a_tilde),
            omega_prime: p.a_min * p.sigmoid_omega.derivative(steady.omega_bar),
        })
    }

    /// `D(lambda)`, the denominator shared by both terms.
    fn denominator(&self, lambda: Complex64) -> Complex64 {
        lambda - self.alpha_prime * self.omega0 * self.rho_d / self.b_star
            + self.omega0 * self.rho_d / self.a_tilde
    }

    /// The real pole of `f`.
    pub fn pole(&self) -> f64 {
        self.alpha_prime * self.omega0 * self.rho_d / self.b_star - self.omega0 * self.rho_d / self.a_tilde
    }

    /// `(b (1 - e^{-lambda/rho_d}) - lambda) / (lambda (b - b* - lambda))`,
    /// through both removable singularities.
    fn second_factor(&self, lambda: Complex64) -> Complex64 {
        let rho = self.rho_d;
        let mu = (self.b - self.b_star - lambda) / rho;
        if lambda.norm() < SERIES_RADIUS {
            // g(mu) = 1 - (b*/rho) phi1(mu) vanishes at lambda = 0.
            let mid = (mu + (self.b - self.b_star) / rho) * 0.5;
            return phi1_prime_c(mid) * (self.b_star / (rho * rho * rho));
        }
        (Complex64::new(1.0, 0.0) - phi1_c(mu) * (self.b_star / rho)) / (lambda * rho)
    }

    /// `D(lambda) (f(lambda) - 1)`, an entire function with the same roots
    /// as `f(lambda) = 1`.
    pub fn entire(&self, lambda: Complex64) -> Complex64 {
        let d = self.denominator(lambda);
        let n = self.b_star - self.omega_prime * self.a_tilde;
        let mu = (self.b - self.b_star - lambda) / self.rho_d;
        let k = self.alpha_prime * self.omega0 * self.rho_d / self.b_star;
        phi1_c(mu) * (d * (self.omega_prime * self.a_tilde / self.rho_d) + n * (self.omega0 / self.a_tilde))
            - self.second_factor(lambda) * (k * self.rho_d * n)
            - d
    }

    /// `f(lambda)`; fails next to the pole.
    pub fn f(&self, lambda: Complex64) -> Result<Complex64> {
        let d = self.denominator(lambda);
        if d.norm() < POLE_TOL {
            return Err(Error::PoleProximity {
                re: lambda.re,
                im: lambda.im,
            });
        }
        Ok(self.entire(lambda) / d + 1.0)
    }

    /// `f(lambda)` term by term as usually written, without the treatment
    /// of the removable singularities at `lambda = 0` and `b - b*`.
    pub fn f_printed(&self, lambda: Complex64) -> Complex64 {
        let (b, bs, rho) = (self.b, self.b_star, self.rho_d);
        let d = self.denominator(lambda);
        let e = (-lambda / rho).exp();
        let n = bs - self.omega_prime * self.a_tilde;
        let first = rho / (b - bs - lambda)
            * (e * (b / bs) - 1.0)
            * (self.omega_prime * self.a_tilde / rho + n * (self.omega0 / self.a_tilde) / d);
        let second = self.alpha_prime * self.omega0 * rho / (lambda * bs)
            * ((1.0 - e) * b - lambda)
            / (b - bs - lambda)
            * n
            / d;
        first - second
    }
}

/// A root of `f(lambda) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicRoot {
    pub lambda: Complex64,
    /// `|f(lambda) - 1|`.
    pub residual: f64,
    /// Number of zeros of the entire form inside a small circle.
    pub multiplicity_hint: usize,
}

/// Search rectangle and start grid of [`rightmost_roots`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSearch {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub starts_re: usize,
    pub starts_im: usize,
}

impl Default for RootSearch {
    fn default() -> Self {
        Self {
            re: (-5.0, 5.0),
            im: (0.0, 40.0),
            starts_re: 21,
            starts_im: 21,
        }
    }
}

impl RootSearch {
    fn contains(&self, z: Complex64) -> bool {
        let eps = 1e-9;
        z.re >= self.re.0 - eps && z.re <= self.re.1 + eps && z.im >= self.im.0 - eps && z.im <= self.im.1 + eps
    }

    fn starts(&self) -> Vec<Complex64> {
        let lin = |(a, b): (f64, f64), n: usize, k: usize| {
            if n <= 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.starts_re * self.starts_im);
        for i in 0..self.starts_re {
            for j in 0..self.starts_im {
                out.push(Complex64::new(
                    lin(self.re, self.starts_re, i),
                    lin(self.im, self.starts_im, j),
                ));
            }
        }
        out
    }
}

const RESIDUAL_TOL: f64 = 1e-10;
const DEDUP_RADIUS: f64 = 1e-6;

fn derivative(eq: &CharacteristicEquation, z: Complex64) -> Complex64 {
    let h = 1e-6 * (1.0 + z.norm());
    (eq.entire(z + h) - eq.entire(z - h)) / (2.0 * h)
}

/// Damped Newton on the entire form from `start`.
pub fn newton_root(eq: &CharacteristicEquation, start: Complex64) -> Option<CharacteristicRoot> {
    let mut z = start;
    let mut hz = eq.entire(z);
    for _ in 0..100 {
        if !(hz.re.is_finite() && hz.im.is_finite()) {
            return None;
        }
        let dz = derivative(eq, z);
        if dz.norm() == 0.0 {
            return None;
        }
        let step = hz / dz;
        let mut t = 1.0;
        let (mut z_new, mut h_new) = (z - step, eq.entire(z - step));
        while !(h_new.norm() < hz.norm()) && t > 1e-3 {
            t *= 0.5;
            z_new = z - step * t;
            h_new = eq.entire(z_new);
        }
        let moved = (z_new - z).norm();
        z = z_new;
        hz = h_new;
        if z.norm() > 1e4 {
            return None;
        }
        if moved <= 1e-14 * (1.0 + z.norm()) {
            break;
        }
    }
    let residual = (eq.f(z).ok()? - 1.0).norm();
    (residual < RESIDUAL_TOL).then(|| CharacteristicRoot {
        lambda: if z.im.abs() < 1e-12 { Complex64::new(z.re, 0.0) } else { z },
        residual,
        multiplicity_hint: 1,
    })
}

/// Number of zeros of the entire form inside the rectangle, by the
/// argument principle. Fails if a zero lies on (or very near) the contour.
pub fn count_zeros(eq: &CharacteristicEquation, re: (f64, f64), im: (f64, f64)) -> Result<usize> {
    let corners = [
        Complex64::new(re.0, im.0),
        Complex64::new(re.1, im.0),
        Complex64::new(re.1, im.1),
        Complex64::new(re.0, im.1),
    ];
    let mut turn = 0.0;
    for k in 0..4 {
        turn += arg_change(eq, corners[k], corners[(k + 1) % 4], 0)?;
    }
    let winding = turn / std::f64::consts::TAU;
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.1 || rounded < 0.0 {
        return Err(Error::NumericalFailure(format!(
            "argument principle gave winding {winding}"
        )));
    }
    Ok(rounded as usize)
}

fn arg_change(eq: &CharacteristicEquation, a: Complex64, b: Complex64, depth: u32) -> Result<f64> {
    let pieces = if depth == 0 { 64 } else { 2 };
    let mut total = 0.0;
    let mut prev = eq.entire(a);
    for k in 1..=pieces {
        let z0 = a + (b - a) * ((k - 1) as f64 / pieces as f64);
        let z1 = a + (b - a) * (k as f64 / pieces as f64);
        let next = eq.entire(z1);
        if prev.norm() == 0.0 || next.norm() == 0.0 || !next.norm().is_finite() {
            return Err(Error::NumericalFailure("zero on the contour".into()));
        }
        let delta = (next / prev).arg();
        if delta.abs() > 0.3 {
            if depth > 40 {
                return Err(Error::NumericalFailure("contour refinement limit".into()));
            }
            total += arg_change(eq, z0, z1, depth + 1)?;
        } else {
            total += delta;
        }
        prev = next;
    }
    Ok(total)
}

fn multiplicity(eq: &CharacteristicEquation, z: Complex64) -> usize {
    let r = 1e-5 * (1.0 + z.norm());
    count_zeros(eq, (z.re - r, z.re + r), (z.im - r, z.im + r)).unwrap_or(1).max(1)
}

fn dedup(mut roots: Vec<CharacteristicRoot>) -> Vec<CharacteristicRoot> {
    roots.sort_by(|a, b| b.lambda.re.total_cmp(&a.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    let mut out: Vec<CharacteristicRoot> = Vec::new();
    for r in roots {
        if !out.iter().any(|o| (o.lambda - r.lambda).norm() < DEDUP_RADIUS) {
            out.push(r);
        }
    }
    out
}

fn run_starts(eq: &CharacteristicEquation, starts: &[Complex64]) -> Vec<Option<CharacteristicRoot>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        starts.par_iter().map(|&s| newton_root(eq, s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        starts.iter().map(|&s| newton_root(eq, s)).collect()
    }
}

/// Roots of `f(lambda) = 1` in the upper half of the search box (conjugates
/// are implied), sorted by decreasing real part.
///
/// After the multistart pass the argument principle checks that no zero
/// lies to the right of the rightmost one found; missed zeros trigger
/// denser starts in that strip.
pub fn rightmost_roots(eq: &CharacteristicEquation, search: &RootSearch) -> Result<Vec<CharacteristicRoot>> {
    let starts = search.starts();
    let found = run_starts(eq, &starts);
    if found.iter().all(Option::is_none) {
        return Err(Error::NumericalFailure(
            "no Newton start converged to a characteristic root".into(),
        ));
    }
    let mut roots: Vec<CharacteristicRoot> = found
        .into_iter()
        .flatten()
        .filter(|r| search.contains(r.lambda))
        .collect();
    roots = dedup(roots);
    for attempt in 0..4 {
        let right = roots.first().map_or(search.re.0, |r| r.lambda.re) + 1e-7;
        if right >= search.re.1 {
            break;
        }
        // The strip to the right of the best root, mirrored below the real
        // axis so real roots do not sit on the contour.
        let lower = -search.im.1.max(1.0) * 0.5 - 0.123;
        let missing = count_zeros(eq, (right, search.re.1), (lower, search.im.1))?;
        if missing == 0 {
            break;
        }
        if attempt == 3 {
            return Err(Error::NumericalFailure(format!(
                "{missing} characteristic roots right of Re = {right} were not located"
            )));
        }
        let dense = RootSearch {
            re: (right, search.re.1),
            im: search.im,
            starts_re: 8 << attempt,
            starts_im: (4 * search.starts_im) << attempt,
        };
        let extra = run_starts(eq, &dense.starts());
        roots.extend(extra.into_iter().flatten().filter(|r| search.contains(r.lambda)));
        roots = dedup(roots);
    }
    for r in &mut roots {
        r.multiplicity_hint = multiplicity(eq, r.lambda);
    }
    Ok(roots)
}

/// Values of the Lyapunov functional along a simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LyapunovTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest increase between consecutive steps.
    pub max_increment: f64,
}

/// Simulates Approximation 3 or 4 from `state` for `days` and evaluates
/// `v(t) = int phi Omega* dx + phi(0) A*` after every step, with `phi` the
/// adjoint eigenfunction of the zero-state rates.
pub fn lyapunov_trace(model: &mut ReducedModel, state: &mut ReducedState, days: f64) -> Result<LyapunovTrace> {
    let rates = match model.variant {
        ReducedVariant::Approx3 => FrozenRates::zero_state(&model.params, ReducedVariant::Approx3)?,
        ReducedVariant::Approx4 => FrozenRates {
            alpha: AlphaShape::Constant(model.midpoint_alpha(0.0)),
            ..FrozenRates::zero_state(&model.params, ReducedVariant::Approx4)?
        },
        other => return Err(Error::Config(format!("no Lyapunov functional for {other}"))),
    };
    let eigen = real_eigenvalue(&rates)?;
    if eigen.lambda > 0.0 {
        return Err(Error::Config(format!(
            "zero state is unstable (lambda = {}); the functional need not decrease",
            eigen.lambda
        )));
    }
    let failure = std::cell::RefCell::new(None);
    let phi = model.grid.project(|x| {
        eigen.phi_at(x).unwrap_or_else(|e| {
            failure.replace(Some(e));
            0.0
        })
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let value = |m: &ReducedModel, s: &ReducedState| m.grid.integrate_weighted(&s.omega, &phi) + s.a_star;
    let mut out = LyapunovTrace::default();
    out.times.push(state.t);
    out.values.push(value(model, state));
    for _ in 0..model.grid.steps_for(days) {
        model.step(state)?;
        let v = value(model, state);
        let last = *out.values.last().expect("seeded above");
        out.max_increment = out.max_increment.max(v - last);
        out.times.push(state.t);
        out.values.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RawParameters;
    use crate::steady::{b_star, solve_steady};

    fn params() -> RescaledParameters {
        RawParameters::default().rescale().unwrap()
    }

    fn constant(alpha: f64, b: f64, rho: f64) -> FrozenRates<AlphaShape> {
        FrozenRates {
            alpha: AlphaShape::Constant(alpha),
            omega: 0.05,
            b,
            rho_d: rho,
        }
    }

    #[test]
    fn eigenvalue_vanishes_at_b_star() {
        let bs = b_star(0.42, 0.1884);
        let e = real_eigenvalue(&constant(bs, 0.42, 0.1884)).unwrap();
        assert!(e.lambda.abs() < 1e-8, "{}", e.lambda);
        assert!(real_eigenvalue(&constant(bs * 1.1, 0.42, 0.1884)).unwrap().lambda > 0.0);
        assert!(real_eigenvalue(&constant(bs * 0.9, 0.42, 0.1884)).unwrap().lambda < 0.0);
    }

    #[test]
    fn eigenfunctions_satisfy_their_equations() {
        let p = params();
        let rates = FrozenRates::zero_state(&p, ReducedVariant::Approx3).unwrap();
        let e = real_eigenvalue(&rates).unwrap();
        let mass = integrate(|x| e.omega_at(x), 0.0, 1.0, 1e-14, 0.0).unwrap();
        assert!((mass - 1.0).abs() < 1e-10);
        let gain = integrate(|x| rates.alpha.value(x) * e.omega_at(x), 0.0, 1.0, 1e-14, 0.0).unwrap();
        assert!(((e.lambda + rates.omega) * e.a - gain).abs() < 1e-8);
        assert!((p.rho_d * e.omega0 - rates.omega * e.a).abs() < 1e-12);
        assert_eq!(e.phi_at(1.0).unwrap(), 0.0);
        assert!((e.phi_at(0.0).unwrap() - 1.0).abs() < 1e-10);
        assert!(((e.lambda + rates.omega) * e.psi - rates.omega).abs() < 1e-10);
    }

    #[test]
    fn default_preset_zero_state_is_unstable() {
        assert_eq!(zero_state_condition(&params()).unwrap(), ZeroStability::Unstable);
        let p = RawParameters::default().with_d(1.2).rescale().unwrap();
        assert_eq!(zero_state_condition(&p).unwrap(), ZeroStability::Attractive);
    }

    #[test]
    fn zero_alpha_is_attractive() {
        let mut p = params();
        p.sigmoid_alpha = crate::SigmoidCoefficients::constant(0.0);
        assert_eq!(zero_state_condition(&p).unwrap(), ZeroStability::Attractive);
    }

    fn equation(b: f64, rho: f64) -> CharacteristicEquation {
        let p = params().with_b(b).with_rho_d(rho);
        let s = solve_steady(&p, ReducedVariant::Approx4).unwrap();
        CharacteristicEquation::new(&s, &p).unwrap()
    }

    #[test]
    fn stable_forms_match_the_printed_function() {
        let eq = equation(0.42, 0.1884);
        for z in [
            Complex64::new(0.3, 0.7),
            Complex64::new(-1.2, 3.0),
            Complex64::new(2.0, -0.4),
            Complex64::new(-0.05, 0.0),
        ] {
            let a = eq.f(z).unwrap();
            let b = eq.f_printed(z);
            assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()), "{z}: {a} vs {b}");
        }
        // Continuity through the removable points.
        for z0 in [Complex64::new(0.0, 0.0), Complex64::new(eq.b - eq.b_star, 0.0)] {
            let near = eq.f_printed(z0 + Complex64::new(1e-4, 1e-4));
            let at = eq.f(z0).unwrap();
            assert!((near - at).norm() < 1e-3 * (1.0 + at.norm()));
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let eq = equation(0.6, 0.12);
        let z = Complex64::new(0.17, 2.3);
        let diff = eq.f(z.conj()).unwrap() - eq.f(z).unwrap().conj();
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn pole_is_reported() {
        let eq = equation(0.42, 0.1884);
        let err = eq.f(Complex64::new(eq.pole(), 0.0)).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { .. }));
    }

    #[test]
    fn rightmost_root_signs() {
        let stable = rightmost_roots(&equation(0.2, 0.1884), &RootSearch::default()).unwrap();
        assert!(stable[0].lambda.re < 0.0);
        let unstable = rightmost_roots(&equation(1.5, 0.1884), &RootSearch::default()).unwrap();
        assert!(unstable[0].lambda.re > 0.0 && unstable[0].lambda.im > 0.0);
        for r in stable.iter().chain(&unstable) {
            assert!(r.residual < 1e-10);
        }
    }
}
