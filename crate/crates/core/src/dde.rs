//! Approximation 4 as a delay system.
//!
//! Along characteristics the Omega* field is determined by the pool history,
//! and integrating over maturity gives, with `tau = 1 / rho_d`,
//!
//! ```text
//! dOmega/dt = omega(t) A*(t) - omega(t - tau) e^{b tau - C(t)} A*(t - tau) + (b - alpha(t)) Omega
//! dA*/dt    = -omega(t) A*(t) + alpha(t) Omega
//! dC/dt     = alpha(t) - alpha(t - tau)
//! ```
//!
//! where `C(t)` is the integral of `alpha` over the last delay window. The
//! cells leaving at `x = 1` entered at `t - tau`, so the outflow carries the
//! transfer rate of that time. [`OmegaTiming::Current`] uses `omega(t)`
//! instead.
//!
//! The system is integrated by the method of steps with classical RK4 on a
//! lattice whose spacing divides the delay, so delayed values at whole steps
//! are stored exactly and half steps use cubic interpolation.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::params::RescaledParameters;
use crate::pde_reduced::{ReducedModel, ReducedVariant};
use crate::steady::{SteadyState, DEFAULT_MIDPOINT};
use crate::trace::{format_f64, PopulationTrace};

/// Which transfer rate multiplies the delayed outflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaTiming {
    /// `omega(t - tau)`, exact for the transport system.
    #[default]
    Delayed,
    /// `omega(t)`.
    Current,
}

impl std::str::FromStr for OmegaTiming {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delayed" => Ok(OmegaTiming::Delayed),
            "current" => Ok(OmegaTiming::Current),
            other => Err(Error::Config(format!(
                "omega timing must be `delayed` or `current`, got `{other}`"
            ))),
        }
    }
}

/// How `Omega_bar` is advanced.
///
/// Written as a delay system, `Omega_bar` is a free state variable: adding
/// any solution of `y' = (b - alpha) y` to it still satisfies the equations,
/// which is a spurious mode growing wherever `b > alpha`. The transport
/// system has no such mode because `Omega_bar` is the integral of the
/// characteristic solution
/// `Omega_bar(t) = int_0^tau omega A*(t - s) e^{b s - int_{t-s}^t alpha} ds`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaClosure {
    /// RK4 on the delay system, after which `Omega_bar` is reset to the
    /// characteristic integral. Identical solutions for consistent data,
    /// without the drift.
    #[default]
    Projected,
    /// RK4 on the delay system alone.
    Differential,
}

impl std::str::FromStr for OmegaClosure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projected" => Ok(OmegaClosure::Projected),
            "differential" => Ok(OmegaClosure::Differential),
            other => Err(Error::Config(format!(
                "omega closure must be `projected` or `differential`, got `{other}`"
            ))),
        }
    }
}

/// Initial data on `[t0 - tau, t0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayHistory {
    Constant { a_star: f64, omega_bar: f64 },
    /// Samples at increasing times covering the window; resampled by cubic
    /// interpolation.
    Sampled {
        times: Vec<f64>,
        a_star: Vec<f64>,
        omega_bar: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayConfig {
    /// Lattice steps per delay; the step is `1 / (rho_d * n)`.
    pub steps_per_delay: usize,
    pub omega_timing: OmegaTiming,
    pub closure: OmegaClosure,
    /// Maturity at which `alpha` is evaluated.
    pub midpoint: f64,
    /// Start of the integration; the history ends here.
    pub t0: f64,
    /// Overrides `C(t0)`, which is otherwise integrated from the history.
    pub c0: Option<f64>,
}

impl Default for DelayConfig {
    fn default() -> Self {
        Self {
            steps_per_delay: 256,
            omega_timing: OmegaTiming::Delayed,
            closure: OmegaClosure::Projected,
            midpoint: DEFAULT_MIDPOINT,
            t0: 0.0,
            c0: None,
        }
    }
}

/// Current values of the delay system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayState {
    pub t: f64,
    pub omega_bar: f64,
    pub a_star: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayPoint {
    pub t: f64,
    pub omega_bar: f64,
    pub a_star: f64,
    pub c: f64,
    /// `alpha(A*(t))`.
    pub alpha: f64,
    /// Within one delay of the start, where the history still shows.
    pub transient: bool,
}

/// Lattice output including the resampled history.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTrace {
    pub tau: f64,
    pub step: f64,
    /// Lattice index of `t0`; earlier points are history.
    pub start: usize,
    pub points: Vec<DelayPoint>,
}

impl DelayTrace {
    /// Points from `t0` on.
    pub fn solution(&self) -> &[DelayPoint] {
        &self.points[self.start..]
    }

    /// `int_{t - tau}^{t} alpha` by composite Simpson (trapezoid for odd
    /// step counts) over the stored lattice values ending at index `n`.
    pub fn c_from_history(&self, n: usize) -> Option<f64> {
        let window = (self.tau / self.step).round() as usize;
        let first = n.checked_sub(window)?;
        let values: Vec<f64> = self.points.get(first..=n)?.iter().map(|p| p.alpha).collect();
        Some(window_integral(&values, self.step))
    }

    /// Cubic interpolation of `(Omega_bar, A*)` at time `t`.
    pub fn value_at(&self, t: f64) -> Option<(f64, f64)> {
        let t_first = self.points.first()?.t;
        let s = (t - t_first) / self.step;
        if s < -1e-9 || s > (self.points.len() - 1) as f64 + 1e-9 {
            return None;
        }
        let o: Vec<f64> = self.points.iter().map(|p| p.omega_bar).collect();
        let a: Vec<f64> = self.points.iter().map(|p| p.a_star).collect();
        Some((cubic_at(&o, s), cubic_at(&a, s)))
    }

    pub fn population_trace(&self) -> PopulationTrace {
        let mut trace = PopulationTrace::new("dde");
        for p in self.solution() {
            trace.push(p.t, p.a_star, p.omega_bar);
        }
        trace
    }

    /// CSV with columns `t, Omega_bar, A_star, C, transient`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        writeln!(out, "t,Omega_bar,A_star,C,transient").map_err(io)?;
        for p in self.solution() {
            writeln!(
                out,
                "{},{},{},{},{}",
                format_f64(p.t),
                format_f64(p.omega_bar),
                format_f64(p.a_star),
                format_f64(p.c),
                u8::from(p.transient)
            )
            .map_err(io)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn window_integral(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        let inner: f64 = values[1..n].iter().sum();
        return h * (0.5 * (values[0] + values[n]) + inner);
    }
    let mut sum = values[0] + values[n];
    for (k, v) in values.iter().enumerate().take(n).skip(1) {
        sum += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    sum * h / 3.0
}

/// Four-point Lagrange interpolation of lattice values at fractional index
/// `s`, using the stencil nearest to `s` that fits in the array.
fn cubic_at(values: &[f64], s: f64) -> f64 {
    let n = values.len();
    if n < 4 {
        let k = (s.floor().max(0.0) as usize).min(n.saturating_sub(2));
        let f = s - k as f64;
        return values[k] + f * (values.get(k + 1).copied().unwrap_or(values[k]) - values[k]);
    }
    let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = s - base as f64;
    let mut out = 0.0;
    for j in 0..4 {
        let mut w = 1.0;
        for m in 0..4 {
            if m != j {
                w *= (u - m as f64) / (j as f64 - m as f64);
            }
        }
        out += w * values[base + j];
    }
    out
}

fn interpolate_samples(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1) - 1;
    let h = times[k + 1] - times[k];
    if times.len() < 4 || (times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs())) {
        let f = (t - times[k]) / h;
        return values[k] + f * (values[k + 1] - values[k]);
    }
    cubic_at(values, k as f64 + (t - times[k]) / h)
}

struct Rates<'a> {
    p: &'a RescaledParameters,
    midpoint: f64,
}

impl Rates<'_> {
    fn alpha(&self, a_star: f64) -> f64 {
        self.p.kappa * self.p.alpha_at(self.midpoint, a_star)
    }

    fn omega(&self, omega_bar: f64) -> f64 {
        self.p.a_min * self.p.f_omega(omega_bar)
    }
}

/// Integrates the delay system for `horizon` days after `config.t0`.
pub fn integrate_dde(
    history: &DelayHistory,
    p: &RescaledParameters,
    horizon: f64,
    config: &DelayConfig,
) -> Result<DelayTrace> {
    let n = config.steps_per_delay;
    if n < 4 {
        return Err(Error::Config(format!(
            "{n} steps per delay: the step must not exceed a quarter of the delay"
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::Config("horizon must be positive".into()));
    }
    if !(0.0..=1.0).contains(&config.midpoint) {
        return Err(Error::MaturityOutOfRange(config.midpoint));
    }
    let projected = config.closure == OmegaClosure::Projected;
    if projected && config.omega_timing == OmegaTiming::Current {
        return Err(Error::Config(
            "current omega timing has no characteristic representation; use the differential closure".into(),
        ));
    }
    let tau = 1.0 / p.rho_d;
    let h = tau / n as f64;
    let t_hist = config.t0 - tau;
    let rates = Rates {
        p,
        midpoint: config.midpoint,
    };

    let mut points: Vec<DelayPoint> = Vec::with_capacity(n + 1 + (horizon / h).ceil() as usize);
    for j in 0..=n {
        let t = t_hist + j as f64 * h;
        let (a_star, omega_bar) = match history {
            DelayHistory::Constant { a_star, omega_bar } => (*a_star, *omega_bar),
            DelayHistory::Sampled {
                times,
                a_star,
                omega_bar,
            } => {
                if times.len() < 2 || times.len() != a_star.len() || times.len() != omega_bar.len() {
                    return Err(Error::Config("history samples are inconsistent".into()));
                }
                let tol = 1e-9 * tau;
                if times[0] > t_hist + tol || times[times.len() - 1] < config.t0 - tol {
                    return Err(Error::Config(format!(
                        "history covers [{}, {}], need [{t_hist}, {}]",
                        times[0],
                        times[times.len() - 1],
                        config.t0
                    )));
                }
                (
                    interpolate_samples(times, a_star, t),
                    interpolate_samples(times, omega_bar, t),
                )
            }
        };
        if !(a_star >= 0.0 && omega_bar >= 0.0) {
            return Err(Error::Config("history must be nonnegative".into()));
        }
        points.push(DelayPoint {
            t,
            omega_bar,
            a_star,
            c: f64::NAN,
            alpha: rates.alpha(a_star),
            transient: true,
        });
    }
    let history_alpha: Vec<f64> = points.iter().map(|q| q.alpha).collect();
    let c0 = config.c0.unwrap_or_else(|| window_integral(&history_alpha, h));
    let last = points.len() - 1;
    points[last].c = c0;

    let growth = (p.b * tau).exp();
    let steps = (horizon / h).round().max(1.0) as usize;
    // Delayed outflow flux and return rate per lattice point.
    let flux_of = |q: &DelayPoint| rates.omega(q.omega_bar) * q.a_star;
    let mut flux: Vec<f64> = points.iter().map(flux_of).collect();
    let mut a_hist: Vec<f64> = points.iter().map(|q| q.a_star).collect();
    // Running integral of alpha, used by the projection.
    let mut cumulative = vec![0.0; n + 1];
    for j in 0..n {
        let v = |i: usize| history_alpha[i];
        let w = if j == 0 {
            9.0 * v(0) + 19.0 * v(1) - 5.0 * v(2) + v(3)
        } else if j == n - 1 {
            v(j - 2) - 5.0 * v(j - 1) + 19.0 * v(j) + 9.0 * v(j + 1)
        } else {
            -v(j - 1) + 13.0 * v(j) + 13.0 * v(j + 1) - v(j + 2)
        };
        cumulative[j + 1] = cumulative[j] + h * w / 24.0;
    }
    let mut alpha_hist = history_alpha;
    let decay: Vec<f64> = (0..=n).map(|j| (p.b * h * j as f64).exp()).collect();
    let mut window = vec![0.0; n + 1];

    let mut state = DelayState {
        t: config.t0,
        omega_bar: points[last].omega_bar,
        a_star: points[last].a_star,
        c: c0,
    };
    let project = |state: &mut DelayState, m: usize, flux: &[f64], cumulative: &[f64], window: &mut [f64]| {
        // Index n - j of the window holds lag j.
        for j in 1..=n {
            window[n - j] = flux[m - j] * decay[j] * (cumulative[m - j] - cumulative[m]).exp();
        }
        for _ in 0..3 {
            window[n] = rates.omega(state.omega_bar) * state.a_star;
            state.omega_bar = window_integral(window, h);
        }
    };
    if projected {
        // The history determines Omega_bar(t0); the sampled value only
        // enters through the transfer rate.
        project(&mut state, n, &flux, &cumulative, &mut window);
        points[last].omega_bar = state.omega_bar;
        flux[last] = flux_of(&points[last]);
    }
    for k in 0..steps {
        // Lattice index of t - tau is k.
        // Solutions have a derivative jump at t0 (index n), so stencils stay
        // on one side of it.
        let half = |v: &[f64]| {
            let stencil = if k < n {
                k.saturating_sub(1).min(n - 3)
            } else {
                (k - 1).max(n)
            };
            cubic_at(&v[stencil..stencil + 4], k as f64 + 0.5 - stencil as f64)
        };
        let delayed = [
            (flux[k], a_hist[k], alpha_hist[k]),
            (half(&flux), half(&a_hist), half(&alpha_hist)),
            (flux[k + 1], a_hist[k + 1], alpha_hist[k + 1]),
        ];
        let rhs = |s: &DelayState, d: (f64, f64, f64)| -> [f64; 4] {
            let alpha = rates.alpha(s.a_star);
            let omega = rates.omega(s.omega_bar);
            let out = match config.omega_timing {
                OmegaTiming::Delayed => d.0,
                OmegaTiming::Current => omega * d.1,
            };
            [
                omega * s.a_star - out * growth * (-s.c).exp() + (p.b - alpha) * s.omega_bar,
                -omega * s.a_star + alpha * s.omega_bar,
                alpha - d.2,
                alpha,
            ]
        };
        let shifted = |s: &DelayState, k: &[f64; 4], f: f64| DelayState {
            t: s.t + f * h,
            omega_bar: s.omega_bar + f * h * k[0],
            a_star: s.a_star + f * h * k[1],
            c: s.c + f * h * k[2],
        };
        let k1 = rhs(&state, delayed[0]);
        let k2 = rhs(&shifted(&state, &k1, 0.5), delayed[1]);
        let k3 = rhs(&shifted(&state, &k2, 0.5), delayed[1]);
        let k4 = rhs(&shifted(&state, &k3, 1.0), delayed[2]);
        let inc = |i: usize| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        state = DelayState {
            t: config.t0 + (k + 1) as f64 * h,
            omega_bar: state.omega_bar + inc(0),
            a_star: state.a_star + inc(1),
            c: state.c + inc(2),
        };
        let m = n + k + 1;
        cumulative.push(cumulative[m - 1] + inc(3));
        if projected {
            project(&mut state, m, &flux, &cumulative, &mut window);
        }
        if !(state.omega_bar.is_finite() && state.a_star.is_finite()) {
            return Err(Error::NumericalFailure(format!("delay system diverged at t = {}", state.t)));
        }
        let point = DelayPoint {
            t: state.t,
            omega_bar: state.omega_bar,
            a_star: state.a_star,
            c: state.c,
            alpha: rates.alpha(state.a_star),
            transient: k + 1 < n,
        };
        flux.push(flux_of(&point));
        a_hist.push(point.a_star);
        alpha_hist.push(point.alpha);
        points.push(point);
    }
    Ok(DelayTrace {
        tau,
        step: h,
        start: n,
        points,
    })
}

/// Outcome of running Approximation 4 and the delay system side by side.
#[derive(Debug, Clone)]
pub struct PdeComparison {
    pub pde: PopulationTrace,
    pub dde: DelayTrace,
    /// `sup |Omega_dde - Omega_pde| / sup |Omega_pde|` over `t > tau`.
    pub sup_relative_gap: f64,
}

/// Runs Approximation 4 from `A* = a0`, `Omega = 0` and the delay system
/// seeded with the transport solution over `[0, tau]`, and compares the
/// Omega totals after one delay (where the delay form becomes exact).
pub fn compare_with_pde(
    p: &RescaledParameters,
    spec: GridSpec,
    steps_per_delay: usize,
    a0: f64,
    days: f64,
) -> Result<PdeComparison> {
    let tau = 1.0 / p.rho_d;
    if days <= tau {
        return Err(Error::Config(format!("horizon must exceed the delay {tau}")));
    }
    let mut model = ReducedModel::new(p.clone(), spec, ReducedVariant::Approx4)?;
    let mut state = model.initial_state(a0);
    let pde = model.simulate(&mut state, days, model.grid.dt)?;
    let window: Vec<&crate::TracePoint> = pde.points.iter().filter(|q| q.t <= tau + 4.0 * model.grid.dt).collect();
    let history = DelayHistory::Sampled {
        times: window.iter().map(|q| q.t).collect(),
        a_star: window.iter().map(|q| q.alpha).collect(),
        omega_bar: window.iter().map(|q| q.omega).collect(),
    };
    let config = DelayConfig {
        steps_per_delay,
        midpoint: model.midpoint,
        t0: tau,
        ..DelayConfig::default()
    };
    let dde = integrate_dde(&history, p, days - tau, &config)?;
    let mut gap: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for q in pde.points.iter().filter(|q| q.t > tau) {
        let Some((omega, _)) = dde.value_at(q.t) else { continue };
        gap = gap.max((omega - q.omega).abs());
        scale = scale.max(q.omega.abs());
    }
    Ok(PdeComparison {
        pde,
        dde,
        sup_relative_gap: if scale > 0.0 { gap / scale } else { gap },
    })
}

/// Fitted growth rate and angular frequency, both per day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub rate: f64,
    pub frequency: f64,
    /// False when fewer than three sign changes were seen; the rate then
    /// comes from `log |y|` directly and the frequency is zero.
    pub oscillatory: bool,
}

fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Fits `y(t) ~ e^{rate t} cos(frequency t + phase)` to a deviation signal
/// restricted to `window`: the frequency from the spacing of sign changes,
/// the rate from a log-linear fit of the extrema of `|y|` between them.
pub fn linearized_growth_fit(times: &[f64], deviation: &[f64], window: (f64, f64)) -> Result<GrowthFit> {
    if times.len() != deviation.len() {
        return Err(Error::Config("times and values differ in length".into()));
    }
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= window.0 && times[i] <= window.1)
        .collect();
    if idx.len() < 8 {
        return Err(Error::Config("too few samples in the fit window".into()));
    }
    let t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| deviation[i]).collect();

    let mut crossings = Vec::new();
    let mut crossing_index = Vec::new();
    for i in 1..y.len() {
        if y[i - 1] != 0.0 && (y[i - 1] < 0.0) != (y[i] < 0.0) {
            let f = y[i - 1] / (y[i - 1] - y[i]);
            crossings.push(t[i - 1] + f * (t[i] - t[i - 1]));
            crossing_index.push(i);
        }
    }
    if crossings.len() < 3 {
        let (tt, ly): (Vec<f64>, Vec<f64>) = t
            .iter()
            .zip(&y)
            .filter(|(_, v)| **v != 0.0)
            .map(|(a, v)| (*a, v.abs().ln()))
            .unzip();
        let (rate, _) = linear_fit(&tt, &ly).ok_or_else(|| Error::NumericalFailure("degenerate fit".into()))?;
        return Ok(GrowthFit {
            rate,
            frequency: 0.0,
            oscillatory: false,
        });
    }
    let half_period = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    let frequency = std::f64::consts::PI / half_period;

    let mut ext_t = Vec::new();
    let mut ext_log = Vec::new();
    for w in crossing_index.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let m = (lo..hi).max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs())).expect("nonempty");
        let (mut tm, mut ym) = (t[m], y[m].abs());
        if m > 0 && m + 1 < y.len() {
            // Parabola through the three samples around the extremum.
            let (a, b, c) = (y[m - 1].abs(), y[m].abs(), y[m + 1].abs());
            let denom = a - 2.0 * b + c;
            if denom < 0.0 {
                let off = 0.5 * (a - c) / denom;
                tm += off * (t[m + 1] - t[m - 1]) * 0.5;
                ym = b - 0.25 * (a - c) * off;
            }
        }
        ext_t.push(tm);
        ext_log.push(ym.ln());
    }
    let rate = if ext_t.len() >= 2 {
        linear_fit(&ext_t, &ext_log).map(|f| f.0).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    if !rate.is_finite() {
        return Err(Error::NumericalFailure("envelope fit failed".into()));
    }
    Ok(GrowthFit {
        rate,
        frequency,
        oscillatory: true,
    })
}

/// Growth of a small perturbation of the nonzero steady state: the delay
/// system is run from steady history and from history with the pool scaled
/// by `1 + amplitude`, and the `Omega_bar` difference is fitted over the
/// last `1 - skip` fraction of `days`.
pub fn perturbation_growth(
    p: &RescaledParameters,
    steady: &SteadyState,
    amplitude: f64,
    days: f64,
    skip: f64,
) -> Result<GrowthFit> {
    let config = DelayConfig {
        midpoint: steady.midpoint,
        ..DelayConfig::default()
    };
    let run = |scale: f64| {
        let history = DelayHistory::Constant {
            a_star: steady.a_tilde * scale,
            omega_bar: steady.omega_bar,
        };
        integrate_dde(&history, p, days, &config)
    };
    let base = run(1.0)?;
    let moved = run(1.0 + amplitude)?;
    let times: Vec<f64> = base.solution().iter().map(|q| q.t).collect();
    let deviation: Vec<f64> = base
        .solution()
        .iter()
        .zip(moved.solution())
        .map(|(a, b)| b.omega_bar - a.omega_bar)
        .collect();
    linearized_growth_fit(&times, &deviation, (skip * days, days))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RawParameters;
    use crate::steady::solve_steady;
    use approx::assert_relative_eq;

    fn params() -> RescaledParameters {
        RawParameters::default().rescale().unwrap()
    }

    #[test]
    fn steady_history_stays_put() {
        let p = params();
        let s = solve_steady(&p, ReducedVariant::Approx4).unwrap();
        let hist = DelayHistory::Constant {
            a_star: s.a_tilde,
            omega_bar: s.omega_bar,
        };
        let trace = integrate_dde(&hist, &p, 50.0, &DelayConfig::default()).unwrap();
        let last = trace.points.last().unwrap();
        let drift = (last.omega_bar - s.omega_bar).abs().max((last.a_star - s.a_tilde).abs());
        assert!(drift / 50.0 < 1e-8, "drift {drift}");
    }

    #[test]
    fn differential_closure_carries_the_spurious_mode() {
        // Omega_bar off the steady value with a steady pool history: the
        // projection snaps back, the literal delay form drifts at b - alpha.
        let p = params();
        let s = solve_steady(&p, ReducedVariant::Approx4).unwrap();
        let hist = DelayHistory::Constant {
            a_star: s.a_tilde,
            omega_bar: s.omega_bar,
        };
        let c0 = s.b_star / p.rho_d;
        let run = |closure| {
            let cfg = DelayConfig {
                closure,
                c0: Some(c0),
                ..DelayConfig::default()
            };
            let mut h = hist.clone();
            if let DelayHistory::Constant { omega_bar, .. } = &mut h {
                *omega_bar *= 1.0 + 1e-9;
            }
            integrate_dde(&h, &p, 5.0, &cfg).unwrap()
        };
        let gap = |t: &DelayTrace| (t.points.last().unwrap().omega_bar - s.omega_bar).abs();
        assert!(gap(&run(OmegaClosure::Projected)) < 1e-10);
        let literal = gap(&run(OmegaClosure::Differential));
        assert!(literal > 1e-9 * s.omega_bar, "{literal}");
    }

    #[test]
    fn zero_alpha_keeps_c_at_zero() {
        let mut p = params();
        p.sigmoid_alpha = crate::SigmoidCoefficients::constant(0.0);
        let hist = DelayHistory::Constant {
            a_star: 1.0,
            omega_bar: 0.0,
        };
        let trace = integrate_dde(&hist, &p, 20.0, &DelayConfig::default()).unwrap();
        assert!(trace.points[trace.start..].iter().all(|q| q.c == 0.0));
    }

    #[test]
    fn c_matches_history_quadrature() {
        let p = params();
        let hist = DelayHistory::Constant {
            a_star: 1.0,
            omega_bar: 0.0,
        };
        let trace = integrate_dde(&hist, &p, 40.0, &DelayConfig::default()).unwrap();
        // alpha has a kink at t0 where history meets solution, which costs
        // the quadrature about 2e-8 until it is a few windows back.
        for n in (3 * trace.start..trace.points.len()).step_by(97) {
            let direct = trace.c_from_history(n).unwrap();
            assert!((direct - trace.points[n].c).abs() < 1e-8, "{n}: {direct} vs {}", trace.points[n].c);
        }
    }

    #[test]
    fn coarse_steps_are_rejected() {
        let cfg = DelayConfig {
            steps_per_delay: 3,
            ..DelayConfig::default()
        };
        let hist = DelayHistory::Constant {
            a_star: 1.0,
            omega_bar: 0.0,
        };
        assert!(integrate_dde(&hist, &params(), 10.0, &cfg).is_err());
    }

    #[test]
    fn transient_flag_covers_one_delay() {
        let p = params();
        let hist = DelayHistory::Constant {
            a_star: 1.0,
            omega_bar: 0.0,
        };
        let trace = integrate_dde(&hist, &p, 20.0, &DelayConfig::default()).unwrap();
        let tau = 1.0 / p.rho_d;
        for q in trace.solution() {
            assert_eq!(q.transient, q.t < tau - 1e-9, "t = {}", q.t);
        }
    }

    #[test]
    fn fit_recovers_manufactured_signal() {
        let t: Vec<f64> = (0..4000).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|&s| (0.1 * s).exp() * (2.0 * s + 0.3).cos()).collect();
        let fit = linearized_growth_fit(&t, &y, (0.0, 40.0)).unwrap();
        assert!(fit.oscillatory);
        assert_relative_eq!(fit.rate, 0.1, max_relative = 0.01);
        assert_relative_eq!(fit.frequency, 2.0, max_relative = 0.01);
    }

    #[test]
    fn monotone_signal_is_flagged() {
        let t: Vec<f64> = (0..500).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|&s| (-0.2 * s).exp()).collect();
        let fit = linearized_growth_fit(&t, &y, (0.0, 50.0)).unwrap();
        assert!(!fit.oscillatory);
        assert_eq!(fit.frequency, 0.0);
        assert_relative_eq!(fit.rate, -0.2, max_relative = 1e-6);
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let v: Vec<f64> = (0..10).map(|i| (i as f64).powi(3) - 2.0 * i as f64).collect();
        for s in [0.3, 4.5, 8.7] {
            assert_relative_eq!(cubic_at(&v, s), s.powi(3) - 2.0 * s, epsilon = 1e-10);
        }
    }
}
