//! The reduced transport systems.
//!
//! * Approximation 1 averages over the cell cycle: Omega grows at the mean
//!   rate `b` and returns to Alpha at rate `kappa * alpha(x)`.
//! * Approximation 2 keeps the cycle-resolved Omega* but drops the Alpha
//!   cells of intermediate maturity: returning cells go straight to `A*`.
//! * Approximation 3 combines both: `A*` and a cycle-averaged `Omega*` with
//!   net growth `b - kappa * alpha(x, A*)`.
//! * Approximation 4 replaces `alpha(x, A*)` in Approximation 3 by its value
//!   at a single maturity (the midpoint by default), so the net growth rate
//!   no longer depends on `x`.
//!
//! The schemes share the lattice and transport routines of the full model.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{transport_left, Grid, GridSpec, RightTransport};
use crate::params::RescaledParameters;
use crate::trace::PopulationTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReducedVariant {
    Approx1,
    Approx2,
    Approx3,
    Approx4,
}

impl ReducedVariant {
    pub const ALL: [ReducedVariant; 4] = [
        ReducedVariant::Approx1,
        ReducedVariant::Approx2,
        ReducedVariant::Approx3,
        ReducedVariant::Approx4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ReducedVariant::Approx1 => "approx1",
            ReducedVariant::Approx2 => "approx2",
            ReducedVariant::Approx3 => "approx3",
            ReducedVariant::Approx4 => "approx4",
        }
    }

    pub fn level(&self) -> u8 {
        match self {
            ReducedVariant::Approx1 => 1,
            ReducedVariant::Approx2 => 2,
            ReducedVariant::Approx3 => 3,
            ReducedVariant::Approx4 => 4,
        }
    }

    pub fn from_level(level: u8) -> Option<Self> {
        Self::ALL.get(level.checked_sub(1)? as usize).copied()
    }
}

impl fmt::Display for ReducedVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReducedVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s || v.level().to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown reduced model `{s}`")))
    }
}

/// Discretised state of a reduced system.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub variant: ReducedVariant,
    /// Alpha cells of intermediate maturity; present only in Approximation 1.
    pub a: Option<Vec<f64>>,
    pub a_star: f64,
    /// `Omega` in Approximation 1, `Omega*` otherwise.
    pub omega: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReducedStepReport {
    pub alpha_total: f64,
    pub omega_total: f64,
    /// Amount that left through `x = 1` during the step.
    pub outflow: f64,
}

/// Solver for one of the reduced systems.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub params: RescaledParameters,
    pub grid: Grid,
    pub variant: ReducedVariant,
    /// Maturity at which Approximation 4 evaluates `alpha`.
    pub midpoint: f64,
    return_rate: Vec<f64>,
    net_rate: Vec<f64>,
    moved: Vec<f64>,
    scratch: Vec<f64>,
}

impl ReducedModel {
    pub fn new(params: RescaledParameters, spec: GridSpec, variant: ReducedVariant) -> Result<Self> {
        let grid = Grid::new(spec, &params)?;
        let nx = grid.nx;
        Ok(Self {
            params,
            grid,
            variant,
            midpoint: 0.5,
            return_rate: vec![0.0; nx],
            net_rate: vec![0.0; nx],
            moved: vec![0.0; nx],
            scratch: Vec::with_capacity(nx),
        })
    }

    /// Sets the maturity used by Approximation 4.
    pub fn with_midpoint(mut self, midpoint: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&midpoint) {
            return Err(Error::MaturityOutOfRange(midpoint));
        }
        self.midpoint = midpoint;
        Ok(self)
    }

    /// Everything zero except the immature pool.
    pub fn initial_state(&self, a_star: f64) -> ReducedState {
        let nx = self.grid.nx;
        ReducedState {
            variant: self.variant,
            a: (self.variant == ReducedVariant::Approx1).then(|| vec![0.0; nx]),
            a_star,
            omega: vec![0.0; nx],
            t: 0.0,
        }
    }

    /// A state with the Omega field given by its cell averages.
    pub fn state_from_profile(&self, a_star: f64, omega: Vec<f64>) -> Result<ReducedState> {
        if omega.len() != self.grid.nx {
            return Err(Error::Config(format!(
                "profile has {} cells, the grid {}",
                omega.len(),
                self.grid.nx
            )));
        }
        Ok(ReducedState {
            omega,
            ..self.initial_state(a_star)
        })
    }

    /// `(A_bar, Omega_bar)`. In Approximations 2 to 4 the Alpha total is `A*`.
    pub fn totals(&self, s: &ReducedState) -> (f64, f64) {
        let a = s.a.as_ref().map_or(0.0, |a| self.grid.integrate(a));
        (a + s.a_star, self.grid.integrate(&s.omega))
    }

    /// The x-independent return rate of Approximation 4 at pool size `a_star`.
    pub fn midpoint_alpha(&self, a_star: f64) -> f64 {
        self.params.kappa * self.params.alpha_at(self.midpoint, a_star)
    }

    pub fn step(&mut self, s: &mut ReducedState) -> Result<ReducedStepReport> {
        if s.variant != self.variant {
            return Err(Error::Config(format!(
                "state of {} passed to the {} solver",
                s.variant, self.variant
            )));
        }
        let report = match self.variant {
            ReducedVariant::Approx1 => self.step_approx1(s),
            ReducedVariant::Approx2 => self.step_approx2(s),
            ReducedVariant::Approx3 | ReducedVariant::Approx4 => self.step_combined(s),
        };
        s.t += self.grid.dt;
        check_nonnegative(s)?;
        Ok(report)
    }

    fn step_approx1(&mut self, s: &mut ReducedState) -> ReducedStepReport {
        let (alpha_total, omega_total) = self.totals(s);
        let p = &self.params;
        let g = &self.grid;
        let dt = g.dt;
        let fa = p.kappa * p.f_alpha(alpha_total);
        let fo = p.a_min * p.f_omega(omega_total);
        let a = s.a.as_mut().expect("Approximation 1 carries A");
        for (i, &x) in g.x_centers.iter().enumerate() {
            let to_omega = a[i] * -(-fo * (p.gamma * x).exp() * dt).exp_m1();
            let to_alpha = s.omega[i] * -(-fa * (-p.gamma * x).exp() * dt).exp_m1();
            a[i] += to_alpha - to_omega;
            s.omega[i] += to_omega - to_alpha;
        }
        let leaving = s.a_star * fo * dt;
        s.a_star -= leaving;
        s.a_star += transport_left(g, a, p.rho_r);

        self.net_rate.iter_mut().for_each(|r| *r = p.b);
        let outflow = RightTransport {
            grid: g,
            nu: g.cfl_d,
            division: None,
        }
        .apply(&mut s.omega, Some(&self.net_rate), leaving, &mut self.scratch);
        ReducedStepReport {
            alpha_total,
            omega_total,
            outflow,
        }
    }

    fn step_approx2(&mut self, s: &mut ReducedState) -> ReducedStepReport {
        let (alpha_total, omega_total) = self.totals(s);
        let p = &self.params;
        let g = &self.grid;
        let dt = g.dt;
        let fa = p.f_alpha(alpha_total);
        for (i, &x) in g.x_centers.iter().enumerate() {
            self.moved[i] = if g.g1[i] {
                let m = s.omega[i] * -(-fa * (-p.gamma * x).exp() * dt).exp_m1();
                s.omega[i] -= m;
                m
            } else {
                0.0
            };
        }
        let returned = g.integrate(&self.moved);
        let leaving = s.a_star * p.a_min * p.f_omega(omega_total) * dt;
        s.a_star += returned - leaving;
        let outflow = RightTransport {
            grid: g,
            nu: g.cfl_d,
            division: Some(&g.x_division),
        }
        .apply(&mut s.omega, None, leaving, &mut self.scratch);
        ReducedStepReport {
            alpha_total,
            omega_total,
            outflow,
        }
    }

    /// Approximations 3 and 4: cycle-averaged growth `b - kappa alpha`.
    fn step_combined(&mut self, s: &mut ReducedState) -> ReducedStepReport {
        let (alpha_total, omega_total) = self.totals(s);
        let p = &self.params;
        let g = &self.grid;
        if self.variant == ReducedVariant::Approx4 {
            let a = p.kappa * p.alpha_at(self.midpoint, alpha_total);
            self.return_rate.iter_mut().for_each(|r| *r = a);
        } else {
            let fa = p.kappa * p.f_alpha(alpha_total);
            for (r, &x) in self.return_rate.iter_mut().zip(&g.x_centers) {
                *r = fa * (-p.gamma * x).exp();
            }
        }
        for (n, r) in self.net_rate.iter_mut().zip(&self.return_rate) {
            *n = p.b - r;
        }
        let returned_before = g.integrate_weighted(&s.omega, &self.return_rate);
        let leaving = s.a_star * p.a_min * p.f_omega(omega_total) * g.dt;
        let outflow = RightTransport {
            grid: g,
            nu: g.cfl_d,
            division: None,
        }
        .apply(&mut s.omega, Some(&self.net_rate), leaving, &mut self.scratch);
        let returned_after = g.integrate_weighted(&s.omega, &self.return_rate);
        s.a_star += 0.5 * (returned_before + returned_after) * g.dt - leaving;
        ReducedStepReport {
            alpha_total,
            omega_total,
            outflow,
        }
    }

    /// Runs for `days`, recording totals every `record_every` days (and at
    /// the start).
    pub fn simulate(&mut self, state: &mut ReducedState, days: f64, record_every: f64) -> Result<PopulationTrace> {
        let mut trace = PopulationTrace::new(self.variant.name());
        let steps = self.grid.steps_for(days);
        let stride = ((record_every / self.grid.dt).round() as usize).max(1);
        let (a, o) = self.totals(state);
        trace.push(state.t, a, o);
        for n in 1..=steps {
            self.step(state)?;
            if n % stride == 0 || n == steps {
                let (a, o) = self.totals(state);
                trace.push(state.t, a, o);
            }
        }
        Ok(trace)
    }
}

fn check_nonnegative(s: &ReducedState) -> Result<()> {
    let worst = s
        .omega
        .iter()
        .chain(s.a.iter().flatten())
        .chain(std::iter::once(&s.a_star))
        .fold(0.0_f64, |m, &v| m.min(v));
    if worst < -1e-12 || !worst.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "negative density {worst:e} at t = {} ({})",
            s.t, s.variant
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{RawParameters, SigmoidCoefficients};

    fn params(d: f64) -> RescaledParameters {
        RawParameters::default().with_d(d).rescale().unwrap()
    }

    fn frozen(mut p: RescaledParameters, alpha: f64, omega: f64) -> RescaledParameters {
        p.sigmoid_alpha = SigmoidCoefficients::constant(alpha / 24.0);
        p.sigmoid_omega = SigmoidCoefficients::constant(omega / 24.0);
        p
    }

    #[test]
    fn variant_names_parse() {
        for v in ReducedVariant::ALL {
            assert_eq!(v.name().parse::<ReducedVariant>().unwrap(), v);
            assert_eq!(ReducedVariant::from_level(v.level()), Some(v));
        }
        assert!("approx5".parse::<ReducedVariant>().is_err());
        assert_eq!(ReducedVariant::from_level(0), None);
    }

    #[test]
    fn only_approx1_carries_alpha_field() {
        for v in ReducedVariant::ALL {
            let m = ReducedModel::new(params(1.05), GridSpec::default(), v).unwrap();
            let s = m.initial_state(1.0);
            assert_eq!(s.a.is_some(), v == ReducedVariant::Approx1);
        }
    }

    #[test]
    fn approx1_pulse_grows_exponentially() {
        let mut p = frozen(params(1.05), 0.0, 0.0);
        p.b = 0.42;
        let mut m = ReducedModel::new(p, GridSpec::default(), ReducedVariant::Approx1).unwrap();
        let mut s = m.initial_state(0.0);
        s.omega[5] = 1.0;
        let start = m.totals(&s).1;
        // The pulse needs about 5 days to reach x = 1.
        for _ in 0..m.grid.steps_for(4.0) {
            m.step(&mut s).unwrap();
        }
        let expected = start * (0.42 * s.t).exp();
        assert!((m.totals(&s).1 / expected - 1.0).abs() < 1e-3);
    }

    #[test]
    fn approx2_without_return_drains_pool() {
        let p = frozen(params(1.05), 0.0, 0.5);
        let mut m = ReducedModel::new(p, GridSpec::default(), ReducedVariant::Approx2).unwrap();
        let mut s = m.initial_state(1.0);
        let mut prev = s.a_star;
        for _ in 0..200 {
            m.step(&mut s).unwrap();
            assert!(s.a_star < prev);
            prev = s.a_star;
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        for v in ReducedVariant::ALL {
            let mut m = ReducedModel::new(params(1.05), GridSpec::default(), v).unwrap();
            let mut s = m.initial_state(0.0);
            m.simulate(&mut s, 5.0, 1.0).unwrap();
            assert_eq!(m.totals(&s), (0.0, 0.0));
        }
    }

    #[test]
    fn approx4_budget_identity() {
        let mut m = ReducedModel::new(params(1.05), GridSpec::default(), ReducedVariant::Approx4).unwrap();
        let mut s = m.initial_state(1.0);
        for _ in 0..m.grid.steps_for(20.0) {
            let (a0, o0) = m.totals(&s);
            let r = m.step(&mut s).unwrap();
            let (a1, o1) = m.totals(&s);
            let predicted = m.params.b * 0.5 * (o0 + o1) * m.grid.dt - r.outflow;
            let change = a1 + o1 - a0 - o0;
            assert!((change - predicted).abs() < 1e-3 * m.grid.dt * (a0 + o0), "{change} {predicted}");
        }
    }

    #[test]
    fn midpoint_is_validated() {
        let m = ReducedModel::new(params(1.05), GridSpec::default(), ReducedVariant::Approx4).unwrap();
        assert!(m.clone().with_midpoint(1.5).is_err());
        let m = m.with_midpoint(0.0).unwrap();
        let expected = m.params.kappa * m.params.f_alpha(0.3);
        assert!((m.midpoint_alpha(0.3) - expected).abs() < 1e-14);
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let m3 = ReducedModel::new(params(1.05), GridSpec::default(), ReducedVariant::Approx3).unwrap();
        let mut m4 = ReducedModel::new(params(1.05), GridSpec::default(), ReducedVariant::Approx4).unwrap();
        let mut s = m3.initial_state(1.0);
        assert!(m4.step(&mut s).is_err());
    }
}
