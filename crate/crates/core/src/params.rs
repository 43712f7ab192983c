//! Model parameters.
//!
//! [`RawParameters`] holds the agent-based model's values (hourly rates,
//! affinities, cycle durations in hours). [`RawParameters::rescale`] turns
//! them into the continuum description used by the transport equations:
//! the affinity `a` is replaced by the maturity coordinate `x` through
//! `a = exp(-gamma x)` with `gamma = -ln a_min`, time is measured in days and
//! populations in units of the sigmoid scale `N~` (so `N~ = 1`).
//!
//! The transition characteristics `f_alpha`, `f_omega` are the four-knot
//! sigmoids
//!
//! ```text
//! f(N) = 24 * ( 1 / (nu1 + nu2 exp(nu3 N / N~)) + nu4 )      [per day]
//! ```
//!
//! whose coefficients are fixed by the knot values `f(0)`, `f(N~/2)`,
//! `f(N~)` and `f(inf)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Hours per day; the agent-based model advances one hour per step.
pub const HOURS_PER_DAY: f64 = 24.0;

/// Average Omega growth rate used by the reduced systems (per day).
pub const DEFAULT_EXPANSION_RATE: f64 = 0.42;

/// Fraction of the cycle spent in G1, used by the cycle-averaged systems.
pub const DEFAULT_G1_FRACTION: f64 = 0.54;

/// Knot values of a transition characteristic, in per-hour rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnotSet {
    pub at_zero: f64,
    pub at_half_scale: f64,
    pub at_scale: f64,
    pub at_infinity: f64,
}

impl KnotSet {
    pub const fn new(at_zero: f64, at_half_scale: f64, at_scale: f64, at_infinity: f64) -> Self {
        Self {
            at_zero,
            at_half_scale,
            at_scale,
            at_infinity,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.at_zero,
            self.at_half_scale,
            self.at_scale,
            self.at_infinity,
        ]
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let k = self.as_array();
        if k.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid(name, format!("knots must be finite and >= 0, got {k:?}")));
        }
        if k.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid(name, format!("knots must be nonincreasing, got {k:?}")));
        }
        Ok(())
    }
}

/// Coefficients of a four-knot transition sigmoid.
///
/// `shape = None` is the degenerate constant characteristic `f = 24 nu4`,
/// which cannot be built from knots (all `h` would be infinite) but is useful
/// for switching transitions off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidCoefficients {
    pub shape: Option<[f64; 3]>,
    pub nu4: f64,
    pub scale: f64,
}

impl SigmoidCoefficients {
    /// Builds the sigmoid through the knots of `knots` with population scale
    /// `scale` (the value of `N~`).
    pub fn from_knots(knots: &KnotSet, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("N_tilde", format!("scale must be positive, got {scale}")));
        }
        let floor = knots.at_infinity;
        let h = |v: f64| 1.0 / (v - floor);
        let (h1, h2, h3) = (h(knots.at_zero), h(knots.at_half_scale), h(knots.at_scale));
        if !(h1.is_finite() && h2.is_finite() && h3.is_finite()) || h1 <= 0.0 {
            return Err(Error::IllConditionedSigmoid(format!(
                "finite knots must lie strictly above f(inf) = {floor}: {:?}",
                knots.as_array()
            )));
        }
        let denom = h1 + h3 - 2.0 * h2;
        if denom.abs() < 1e-12 * h1 {
            return Err(Error::IllConditionedSigmoid(format!(
                "h1 + h3 - 2 h2 = {denom:e} (h = {h1}, {h2}, {h3})"
            )));
        }
        let nu1 = (h1 * h3 - h2 * h2) / denom;
        let nu2 = h1 - nu1;
        let ratio = (h3 - nu1) / nu2;
        if !(nu2 > 0.0 && ratio > 1.0 && ratio.is_finite()) {
            return Err(Error::IllConditionedSigmoid(format!(
                "knots {:?} are not those of a decreasing sigmoid (nu2 = {nu2}, e^nu3 = {ratio})",
                knots.as_array()
            )));
        }
        Ok(Self {
            shape: Some([nu1, nu2, ratio.ln()]),
            nu4: floor,
            scale,
        })
    }

    /// A characteristic that is constant at `hourly_rate` for every population.
    pub fn constant(hourly_rate: f64) -> Self {
        Self {
            shape: None,
            nu4: hourly_rate,
            scale: 1.0,
        }
    }

    /// The characteristic in per-hour units (the bracket without the factor 24).
    pub fn hourly(&self, population: f64) -> f64 {
        match self.shape {
            None => self.nu4,
            Some([nu1, nu2, nu3]) => {
                let arg = nu3 * population / self.scale;
                let core = if arg > 0.0 {
                    let u = (-arg).exp();
                    u / (nu1 * u + nu2)
                } else {
                    1.0 / (nu1 + nu2 * arg.exp())
                };
                core + self.nu4
            }
        }
    }

    /// The characteristic in per-day units, `24 (...)`.
    pub fn eval(&self, population: f64) -> f64 {
        HOURS_PER_DAY * self.hourly(population)
    }

    /// Derivative of [`Self::eval`] with respect to the population.
    pub fn derivative(&self, population: f64) -> f64 {
        match self.shape {
            None => 0.0,
            Some([nu1, nu2, nu3]) => {
                let arg = nu3 * population / self.scale;
                let core = if arg > 0.0 {
                    let u = (-arg).exp();
                    let den = nu1 * u + nu2;
                    -nu2 * nu3 * u / (den * den)
                } else {
                    let e = arg.exp();
                    let den = nu1 + nu2 * e;
                    -nu2 * nu3 * e / (den * den)
                };
                HOURS_PER_DAY * core / self.scale
            }
        }
    }
}

/// Which published knot set to use for a cell population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    PhMinus,
    PhPlus,
    ImatinibAffected,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::PhMinus, Preset::PhPlus, Preset::ImatinibAffected];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::PhMinus => "ph-minus",
            Preset::PhPlus => "ph-plus",
            Preset::ImatinibAffected => "imatinib-affected",
        }
    }

    /// The shipped parameter file for this preset.
    pub fn file_contents(&self) -> &'static str {
        match self {
            Preset::PhMinus => include_str!("../presets/ph-minus.params"),
            Preset::PhPlus => include_str!("../presets/ph-plus.params"),
            Preset::ImatinibAffected => include_str!("../presets/imatinib-affected.params"),
        }
    }

    pub fn parameters(&self) -> RawParameters {
        crate::config::parse_parameters(self.file_contents())
            .expect("shipped presets are valid parameter files")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

/// Parameters of the agent-based model, in its native units.
#[derive(Debug, Clone, PartialEq)]
pub struct RawParameters {
    pub a_min: f64,
    pub a_max: f64,
    /// Per-hour affinity decrease factor in Omega.
    pub d: f64,
    /// Per-hour affinity increase factor in Alpha.
    pub r: f64,
    /// Duration of S/G2/M (hours).
    pub c1: f64,
    /// Full cycle duration (hours).
    pub c2: f64,
    /// Precursor lifespan (days).
    pub lambda_p: f64,
    /// Mature-cell lifespan (days).
    pub lambda_m: f64,
    /// Precursor division period (hours).
    pub tau_c: f64,
    pub f_alpha: KnotSet,
    pub f_omega: KnotSet,
    pub n_tilde_alpha: f64,
    pub n_tilde_omega: f64,
    /// Hourly probability that a proliferating Ph+ cell becomes imatinib-affected.
    pub r_inh: f64,
    /// Hourly probability that an affected proliferating cell dies.
    pub r_deg: f64,
    /// Omega expansion rate of the cycle-averaged systems (per day).
    pub b: f64,
    /// Fraction of time in G1 for the cycle-averaged systems.
    pub kappa: f64,
}

impl Default for RawParameters {
    fn default() -> Self {
        Preset::PhMinus.parameters()
    }
}

impl RawParameters {
    /// Checks every invariant of the raw parameter set.
    pub fn validate(&self) -> Result<()> {
        self.check(false)
    }

    /// Like [`Self::validate`] but accepts `d = 1` and `r = 1`, which the
    /// agent-based model can run with (no affinity drift) although they have
    /// no continuum rescaling.
    pub fn validate_for_agents(&self) -> Result<()> {
        self.check(true)
    }

    fn check(&self, allow_unit_factors: bool) -> Result<()> {
        let factor_ok = |v: f64| v.is_finite() && (v > 1.0 || (allow_unit_factors && v == 1.0));
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("a_min", self.a_min)?;
        if !(self.a_min < self.a_max) || !self.a_max.is_finite() {
            return Err(invalid("a_max", format!("need a_min < a_max, got {} >= {}", self.a_min, self.a_max)));
        }
        if !factor_ok(self.d) {
            return Err(invalid("d", format!("must exceed 1, got {}", self.d)));
        }
        if !factor_ok(self.r) {
            return Err(invalid("r", format!("must exceed 1, got {}", self.r)));
        }
        positive("c1", self.c1)?;
        if !(self.c1 < self.c2) || !self.c2.is_finite() {
            return Err(invalid("c2", format!("need 0 < c1 < c2, got c1 = {}, c2 = {}", self.c1, self.c2)));
        }
        positive("lambda_p", self.lambda_p)?;
        positive("lambda_m", self.lambda_m)?;
        positive("tau_c", self.tau_c)?;
        positive("N_tilde_A", self.n_tilde_alpha)?;
        positive("N_tilde_Omega", self.n_tilde_omega)?;
        self.f_alpha.validate("f_alpha")?;
        self.f_omega.validate("f_omega")?;
        for (name, p) in [("r_inh", self.r_inh), ("r_deg", self.r_deg)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(name, format!("must be a probability, got {p}")));
            }
        }
        positive("b", self.b)?;
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(invalid("kappa", format!("must lie in (0, 1), got {}", self.kappa)));
        }
        Ok(())
    }

    /// Converts to the continuum parameters (days, maturity coordinate,
    /// populations in units of `N~`).
    pub fn rescale(&self) -> Result<RescaledParameters> {
        self.validate()?;
        let gamma = -self.a_min.ln();
        Ok(RescaledParameters {
            a_min: self.a_min,
            gamma,
            rho_r: HOURS_PER_DAY * self.r.ln() / gamma,
            rho_d: HOURS_PER_DAY * self.d.ln() / gamma,
            b: self.b,
            kappa: self.kappa,
            c1_days: self.c1 / HOURS_PER_DAY,
            c2_days: self.c2 / HOURS_PER_DAY,
            sigmoid_alpha: SigmoidCoefficients::from_knots(&self.f_alpha, 1.0)?,
            sigmoid_omega: SigmoidCoefficients::from_knots(&self.f_omega, 1.0)?,
        })
    }

    /// Same parameters with a different differentiation factor.
    pub fn with_d(mut self, d: f64) -> Self {
        self.d = d;
        self
    }
}

/// Continuum parameters of the transport systems.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledParameters {
    pub a_min: f64,
    pub gamma: f64,
    /// Regeneration advection speed of Alpha cells (per day).
    pub rho_r: f64,
    /// Differentiation advection speed of Omega cells (per day).
    pub rho_d: f64,
    /// Omega growth rate of the cycle-averaged systems (per day).
    pub b: f64,
    pub kappa: f64,
    pub c1_days: f64,
    pub c2_days: f64,
    pub sigmoid_alpha: SigmoidCoefficients,
    pub sigmoid_omega: SigmoidCoefficients,
}

impl RescaledParameters {
    /// `f_alpha(A)` in per-day units.
    pub fn f_alpha(&self, alpha_total: f64) -> f64 {
        self.sigmoid_alpha.eval(alpha_total)
    }

    /// `f_omega(Omega)` in per-day units.
    pub fn f_omega(&self, omega_total: f64) -> f64 {
        self.sigmoid_omega.eval(omega_total)
    }

    /// Omega -> Alpha transition rate `exp(-gamma x) f_alpha(A)`.
    pub fn alpha(&self, x: f64, alpha_total: f64) -> Result<f64> {
        check_maturity(x)?;
        Ok(self.alpha_at(x, alpha_total))
    }

    /// Alpha -> Omega transition rate `a_min exp(gamma x) f_omega(Omega)`.
    pub fn omega(&self, x: f64, omega_total: f64) -> Result<f64> {
        check_maturity(x)?;
        Ok(self.omega_at(x, omega_total))
    }

    #[inline]
    pub(crate) fn alpha_at(&self, x: f64, alpha_total: f64) -> f64 {
        (-self.gamma * x).exp() * self.f_alpha(alpha_total)
    }

    #[inline]
    pub(crate) fn omega_at(&self, x: f64, omega_total: f64) -> f64 {
        self.a_min * (self.gamma * x).exp() * self.f_omega(omega_total)
    }

    /// Affinity corresponding to maturity `x`.
    pub fn affinity(&self, x: f64) -> f64 {
        (-self.gamma * x).exp()
    }

    /// Copy with a different `rho_d`, used by the parameter scans.
    pub fn with_rho_d(&self, rho_d: f64) -> Self {
        Self {
            rho_d,
            ..self.clone()
        }
    }

    /// Copy with a different `b`.
    pub fn with_b(&self, b: f64) -> Self {
        Self { b, ..self.clone() }
    }
}

fn check_maturity(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::MaturityOutOfRange(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round4(v: f64) -> f64 {
        (v * 1e4).round() / 1e4
    }

    #[test]
    fn published_rescaled_values() {
        let p = RawParameters::default().rescale().unwrap();
        assert_eq!(round4(p.gamma), 6.2146);
        assert_eq!(round4(p.rho_d), 0.1884);
        assert_eq!(round4(p.rho_r), 0.3681);
        for (d, expected) in [(1.02, 0.0765), (1.2, 0.7041)] {
            let p = RawParameters::default().with_d(d).rescale().unwrap();
            assert_eq!(round4(p.rho_d), expected);
        }
    }

    #[test]
    fn rescale_rejects_nonpositive_logs() {
        let base = RawParameters::default();
        let mut p = base.clone();
        p.a_min = 0.0;
        assert!(p.rescale().is_err());
        assert!(base.clone().with_d(1.0).rescale().is_err());
        let mut p = base;
        p.r = 0.9;
        assert!(p.rescale().is_err());
    }

    #[test]
    fn published_rate_endpoints() {
        let p = RawParameters::default().rescale().unwrap();
        assert!((p.f_alpha(0.0) - 12.0).abs() < 1e-12);
        assert!((p.f_alpha(1.0) - 1.2).abs() < 1e-12);
        assert!(p.f_alpha(1e6).abs() < 1e-12);
        assert!((p.omega(1.0, 0.3).unwrap() - p.f_omega(0.3)).abs() < 1e-12);
        assert_eq!(p.alpha(0.0, 0.7).unwrap(), p.f_alpha(0.7));
        let mid = p.alpha(0.5, 0.2).unwrap() / p.f_alpha(0.2);
        assert!((mid - (-p.gamma / 2.0).exp()).abs() < 1e-15);
        assert!((mid - 0.04472).abs() < 5e-6);
    }

    #[test]
    fn maturity_outside_unit_interval_is_rejected() {
        let p = RawParameters::default().rescale().unwrap();
        assert_eq!(p.alpha(1.5, 0.0), Err(Error::MaturityOutOfRange(1.5)));
        assert!(p.omega(-0.1, 0.0).is_err());
    }

    #[test]
    fn degenerate_knots_are_rejected() {
        let flat = KnotSet::new(0.5, 0.5, 0.5, 0.0);
        assert!(matches!(
            SigmoidCoefficients::from_knots(&flat, 1.0),
            Err(Error::IllConditionedSigmoid(_))
        ));
    }

    #[test]
    fn knots_round_trip_for_every_preset() {
        for preset in Preset::ALL {
            let raw = preset.parameters();
            for knots in [raw.f_alpha, raw.f_omega] {
                let s = SigmoidCoefficients::from_knots(&knots, 1.0).unwrap();
                for (n, want) in [
                    (0.0, knots.at_zero),
                    (0.5, knots.at_half_scale),
                    (1.0, knots.at_scale),
                ] {
                    let got = s.hourly(n);
                    assert!((got - want).abs() <= 1e-10 * want, "{preset}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn omega_characteristic_is_monotone() {
        let s = SigmoidCoefficients::from_knots(&KnotSet::new(0.5, 0.3, 0.1, 0.0), 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..10_000 {
            let v = s.eval(i as f64 * 1e-3);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = RawParameters::default().rescale().unwrap();
        for n in [0.0, 0.3, 0.9, 2.0, 50.0] {
            let h = 1e-6;
            let fd = (p.f_alpha(n + h) - p.f_alpha((n - h).max(0.0))) / (n + h - (n - h).max(0.0));
            let an = p.sigmoid_alpha.derivative(n);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-12), "{n}: {fd} vs {an}");
        }
    }
}
