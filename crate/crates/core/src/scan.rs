//! Regime classification: of simulated traces, of single parameter points
//! through the characteristic equation, over a `(rho_d, b)` window, and
//! along one-parameter sweeps of the rightmost root.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::RescaledParameters;
use crate::pde_reduced::ReducedVariant;
use crate::spectral::{count_zeros, newton_root, rightmost_roots, CharacteristicEquation, RootSearch};
use crate::steady::{exists_nonzero_approx4, solve_steady, DEFAULT_MIDPOINT};
use crate::trace::{format_f64, PopulationTrace};

/// Long-time behaviour read off a simulated trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceRegime {
    Periodic,
    NonzeroPlateau,
    Extinct,
    Indeterminate,
}

impl TraceRegime {
    pub fn label(&self) -> &'static str {
        match self {
            TraceRegime::Periodic => "periodic",
            TraceRegime::NonzeroPlateau => "nonzero-plateau",
            TraceRegime::Extinct => "extinct",
            TraceRegime::Indeterminate => "indeterminate",
        }
    }
}

impl fmt::Display for TraceRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Thresholds of [`classify_trace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceCriteria {
    /// Traces shorter than this are indeterminate.
    pub min_days: f64,
    /// The tail starts at this fraction of the duration.
    pub tail_start: f64,
    /// Extinct when the final total is below this fraction of the peak...
    pub extinct_fraction: f64,
    /// ...or when the tail decays log-linearly faster than this (per day)
    /// with a fit of at least `decay_r2`.
    pub decay_rate: f64,
    pub decay_r2: f64,
    /// Half peak-to-peak amplitude over mean that counts as oscillating.
    pub periodic_amplitude: f64,
    pub min_cycles: usize,
    /// Hysteresis band around the mean for counting cycles.
    pub hysteresis: f64,
    /// Largest coefficient of variation of a plateau.
    pub plateau_cv: f64,
}

impl Default for TraceCriteria {
    fn default() -> Self {
        Self {
            min_days: 60.0,
            tail_start: 0.3,
            extinct_fraction: 1e-3,
            decay_rate: 5e-3,
            decay_r2: 0.95,
            periodic_amplitude: 0.1,
            min_cycles: 3,
            hysteresis: 0.05,
            plateau_cv: 0.02,
        }
    }
}

pub fn classify_trace(trace: &PopulationTrace) -> TraceRegime {
    classify_trace_with(trace, &TraceCriteria::default())
}

pub fn classify_trace_with(trace: &PopulationTrace, c: &TraceCriteria) -> TraceRegime {
    let (Some(first), Some(last)) = (trace.points.first(), trace.points.last()) else {
        return TraceRegime::Indeterminate;
    };
    let duration = last.t - first.t;
    if duration < c.min_days {
        return TraceRegime::Indeterminate;
    }
    let totals = trace.totals();
    let peak = totals.iter().copied().fold(0.0, f64::max);
    let final_total = last.total();
    if peak <= 0.0 || final_total < c.extinct_fraction * peak {
        return TraceRegime::Extinct;
    }
    let cut = first.t + c.tail_start * duration;
    let (t, y): (Vec<f64>, Vec<f64>) = trace
        .points
        .iter()
        .filter(|q| q.t >= cut)
        .map(|q| (q.t, q.total()))
        .unzip();
    if y.len() < 4 {
        return TraceRegime::Indeterminate;
    }
    if let Some((slope, r2)) = log_linear_fit(&t, &y) {
        if slope < -c.decay_rate && r2 >= c.decay_r2 {
            return TraceRegime::Extinct;
        }
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if 0.5 * (hi - lo) > c.periodic_amplitude * mean && upward_crossings(&y, mean, c.hysteresis * mean) >= c.min_cycles {
        return TraceRegime::Periodic;
    }
    if sd < c.plateau_cv * mean {
        return TraceRegime::NonzeroPlateau;
    }
    TraceRegime::Indeterminate
}

/// Slope and `R^2` of `ln y` against `t`.
fn log_linear_fit(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if y.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|v| (v - mt).powi(2)).sum();
    let syy: f64 = ly.iter().map(|v| (v - my).powi(2)).sum();
    let sty: f64 = t.iter().zip(&ly).map(|(a, b)| (a - mt) * (b - my)).sum();
    if stt == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sty / stt, sty * sty / (stt * syy)))
}

/// Passes from below `level - band` to above `level + band`.
fn upward_crossings(y: &[f64], level: f64, band: f64) -> usize {
    let mut below = None;
    let mut count = 0;
    for &v in y {
        if v < level - band {
            below = Some(true);
        } else if v > level + band {
            if below == Some(true) {
                count += 1;
            }
            below = Some(false);
        }
    }
    count
}

/// Stability regime of a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    UnstablePeriodic,
    StableNonzero,
    StableZero,
    /// A solver failed; the message is kept in the verdict.
    Indeterminate,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::UnstablePeriodic,
        Regime::StableNonzero,
        Regime::StableZero,
        Regime::Indeterminate,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Regime::UnstablePeriodic => "unstable-periodic",
            Regime::StableNonzero => "stable-nonzero",
            Regime::StableZero => "stable-zero",
            Regime::Indeterminate => "indeterminate",
        }
    }

    fn color(&self) -> &'static str {
        match self {
            Regime::UnstablePeriodic => "#c8553d",
            Regime::StableNonzero => "#f2d0a4",
            Regime::StableZero => "#588b8b",
            Regime::Indeterminate => "#999999",
        }
    }

    /// Position in the expected order along increasing `rho_d`.
    fn rank(&self) -> Option<u8> {
        match self {
            Regime::UnstablePeriodic => Some(0),
            Regime::StableNonzero => Some(1),
            Regime::StableZero => Some(2),
            Regime::Indeterminate => None,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown regime `{s}`")))
    }
}

/// Real parts within this distance of zero are marginal.
pub const MARGINAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub rho_d: f64,
    pub b: f64,
    pub regime: Regime,
    pub nonzero_exists: bool,
    pub rightmost: Option<Complex64>,
    /// The rightmost real part is within [`MARGINAL_TOL`] of zero; the
    /// regime is then reported as stable.
    pub marginal: bool,
    pub error: Option<String>,
}

/// Classifies `(rho_d, b)` through the nonzero steady state of
/// Approximation 4 and the rightmost root of its characteristic equation.
pub fn classify_point(rho_d: f64, b: f64, params: &RescaledParameters, search: &RootSearch) -> StabilityVerdict {
    let mut verdict = StabilityVerdict {
        rho_d,
        b,
        regime: Regime::Indeterminate,
        nonzero_exists: false,
        rightmost: None,
        marginal: false,
        error: None,
    };
    if !(rho_d > 0.0 && b > 0.0) {
        verdict.error = Some("rho_d and b must be positive".into());
        return verdict;
    }
    let p = params.with_rho_d(rho_d).with_b(b);
    if !exists_nonzero_approx4(&p, DEFAULT_MIDPOINT) {
        verdict.regime = Regime::StableZero;
        return verdict;
    }
    verdict.nonzero_exists = true;
    let root = solve_steady(&p, ReducedVariant::Approx4)
        .and_then(|s| CharacteristicEquation::new(&s, &p))
        .and_then(|eq| rightmost_roots(&eq, search));
    match root {
        Ok(roots) => match roots.first() {
            Some(r) => {
                verdict.rightmost = Some(r.lambda);
                verdict.marginal = r.lambda.re.abs() <= MARGINAL_TOL;
                verdict.regime = if r.lambda.re > MARGINAL_TOL {
                    Regime::UnstablePeriodic
                } else {
                    Regime::StableNonzero
                };
            }
            None => verdict.error = Some("no characteristic root in the search box".into()),
        },
        Err(e) => verdict.error = Some(e.to_string()),
    }
    verdict
}

/// An axis of `n` pixels over `[lo, hi]`, sampled at pixel centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) || n == 0 {
            return Err(Error::Config(format!("bad axis [{lo}, {hi}] with {n} pixels")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * (self.hi - self.lo) / self.n as f64
    }
}

/// Default window of the region map.
pub fn default_axes() -> (Axis, Axis) {
    (
        Axis {
            lo: 0.04,
            hi: 0.75,
            n: 40,
        },
        Axis { lo: 0.2, hi: 1.5, n: 40 },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub rho_axis: Axis,
    pub b_axis: Axis,
    /// Row-major with `b` as the row: index `j * rho_axis.n + i`.
    pub cells: Vec<StabilityVerdict>,
}

/// Worker count from `STEMFLOW_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("STEMFLOW_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

/// Classifies every pixel centre. `threads` caps the worker count when the
/// `parallel` feature is on; results do not depend on it.
pub fn region_map(
    rho_axis: Axis,
    b_axis: Axis,
    params: &RescaledParameters,
    search: &RootSearch,
    threads: Option<usize>,
) -> Result<RegionMap> {
    let points: Vec<(f64, f64)> = (0..b_axis.n)
        .flat_map(|j| (0..rho_axis.n).map(move |i| (rho_axis.center(i), b_axis.center(j))))
        .collect();
    let cells = classify_all(&points, params, search, threads)?;
    Ok(RegionMap {
        rho_axis,
        b_axis,
        cells,
    })
}

#[cfg(feature = "parallel")]
fn classify_all(
    points: &[(f64, f64)],
    params: &RescaledParameters,
    search: &RootSearch,
    threads: Option<usize>,
) -> Result<Vec<StabilityVerdict>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::ResourceLimit(e.to_string()))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|&(rho, b)| classify_point(rho, b, params, search))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn classify_all(
    points: &[(f64, f64)],
    params: &RescaledParameters,
    search: &RootSearch,
    _threads: Option<usize>,
) -> Result<Vec<StabilityVerdict>> {
    Ok(points
        .iter()
        .map(|&(rho, b)| classify_point(rho, b, params, search))
        .collect())
}

impl RegionMap {
    pub fn cell(&self, i_rho: usize, j_b: usize) -> &StabilityVerdict {
        &self.cells[j_b * self.rho_axis.n + i_rho]
    }

    /// Regimes along increasing `rho_d` at the `j`-th `b`.
    pub fn row(&self, j_b: usize) -> Vec<Regime> {
        (0..self.rho_axis.n).map(|i| self.cell(i, j_b).regime).collect()
    }

    /// Whether the regimes at fixed `b` follow unstable, stable nonzero,
    /// stable zero without interleaving.
    pub fn is_monotone_in_rho(&self, j_b: usize) -> bool {
        let ranks: Option<Vec<u8>> = self.row(j_b).iter().map(Regime::rank).collect();
        ranks.is_some_and(|r| r.windows(2).all(|w| w[0] <= w[1]))
    }

    pub fn count(&self, regime: Regime) -> usize {
        self.cells.iter().filter(|c| c.regime == regime).count()
    }

    /// Whether the cells of `regime` form one 4-connected component.
    pub fn is_connected(&self, regime: Regime) -> bool {
        let (nx, ny) = (self.rho_axis.n, self.b_axis.n);
        let Some(start) = self.cells.iter().position(|c| c.regime == regime) else {
            return true;
        };
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut reached = 0;
        while let Some(k) = stack.pop() {
            reached += 1;
            let (i, j) = (k % nx, k / nx);
            let mut push = |ii: usize, jj: usize| {
                let kk = jj * nx + ii;
                if !seen[kk] && self.cells[kk].regime == regime {
                    seen[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < nx {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < ny {
                push(i, j + 1);
            }
        }
        reached == self.count(regime)
    }

    /// CSV with columns `rho_d, b, regime, rightmost_re, rightmost_im,
    /// nonzero_exists`. Missing roots are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        writeln!(out, "rho_d,b,regime,rightmost_re,rightmost_im,nonzero_exists").map_err(io)?;
        for c in &self.cells {
            let (re, im) = c
                .rightmost
                .map_or((String::new(), String::new()), |z| (format_f64(z.re), format_f64(z.im)));
            writeln!(
                out,
                "{},{},{},{re},{im},{}",
                format_f64(c.rho_d),
                format_f64(c.b),
                c.regime,
                c.nonzero_exists
            )
            .map_err(io)?;
        }
        Ok(())
    }

    /// Heat map with `rho_d` across and `b` upwards.
    pub fn write_svg<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        let (px, margin) = (12.0, 60.0);
        let (nx, ny) = (self.rho_axis.n, self.b_axis.n);
        let (w, h) = (nx as f64 * px, ny as f64 * px);
        let legend = 170.0;
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
            w + 2.0 * margin + legend,
            h + 2.0 * margin
        )
        .map_err(io)?;
        for j in 0..ny {
            for i in 0..nx {
                let c = self.cell(i, j);
                writeln!(
                    out,
                    r#"<rect x="{:.1}" y="{:.1}" width="{px}" height="{px}" fill="{}"/>"#,
                    margin + i as f64 * px,
                    margin + h - (j + 1) as f64 * px,
                    c.regime.color()
                )
                .map_err(io)?;
            }
        }
        writeln!(
            out,
            r#"<rect x="{margin}" y="{margin}" width="{w}" height="{h}" fill="none" stroke="black"/>"#
        )
        .map_err(io)?;
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let rho = self.rho_axis.lo + f * (self.rho_axis.hi - self.rho_axis.lo);
            let b = self.b_axis.lo + f * (self.b_axis.hi - self.b_axis.lo);
            let x = margin + f * w;
            let y = margin + h - f * h;
            writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{rho:.3}</text>"#,
                margin + h,
                margin + h + 5.0,
                margin + h + 18.0
            )
            .map_err(io)?;
            writeln!(
                out,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{margin}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{b:.2}</text>"#,
                margin - 5.0,
                margin - 8.0,
                y + 4.0
            )
            .map_err(io)?;
        }
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">rho_d (1/day)</text>"#,
            margin + w / 2.0,
            margin + h + 40.0
        )
        .map_err(io)?;
        writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">b (1/day)</text>"#,
            margin + h / 2.0,
            margin + h / 2.0
        )
        .map_err(io)?;
        for (k, r) in Regime::ALL.iter().enumerate() {
            let y = margin + 20.0 * k as f64;
            let x = margin + w + 20.0;
            writeln!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{r}</text>"#,
                r.color(),
                x + 18.0,
                y + 10.0
            )
            .map_err(io)?;
        }
        writeln!(out, "</svg>").map_err(io)
    }
}

/// Swept parameter of a root trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    RhoD,
    B,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::RhoD => "rho_d",
            SweepParameter::B => "b",
        }
    }

    fn apply(&self, p: &RescaledParameters, v: f64) -> RescaledParameters {
        match self {
            SweepParameter::RhoD => p.with_rho_d(v),
            SweepParameter::B => p.with_b(v),
        }
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho_d" | "rho" => Ok(SweepParameter::RhoD),
            "b" => Ok(SweepParameter::B),
            other => Err(Error::Config(format!("sweep parameter must be rho_d or b, got `{other}`"))),
        }
    }
}

/// A sign change of the rightmost real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub value: f64,
    pub root: Complex64,
    /// True when the real part goes from negative to positive.
    pub destabilising: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootTrajectory {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub roots: Vec<Complex64>,
    /// Set where the rightmost root is not the continuation of the
    /// previous one.
    pub branch_switch: Vec<bool>,
    pub crossings: Vec<Crossing>,
    /// Sweep value at which the computation stopped, with the reason.
    pub lost: Option<(f64, String)>,
}

impl RootTrajectory {
    /// CSV with columns `<parameter>, re, im, branch_switch`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        writeln!(out, "{},re,im,branch_switch", self.parameter.name()).map_err(io)?;
        for ((v, z), s) in self.values.iter().zip(&self.roots).zip(&self.branch_switch) {
            writeln!(out, "{},{},{},{}", format_f64(*v), format_f64(z.re), format_f64(z.im), s).map_err(io)?;
        }
        Ok(())
    }
}

fn equation_at(p: &RescaledParameters) -> Result<CharacteristicEquation> {
    let s = solve_steady(p, ReducedVariant::Approx4)?;
    CharacteristicEquation::new(&s, p)
}

/// Whether no zero lies right of `z` (with conjugates mirrored in).
fn is_rightmost(eq: &CharacteristicEquation, z: Complex64, search: &RootSearch) -> Result<bool> {
    let right = z.re + 1e-7;
    if right >= search.re.1 {
        return Ok(true);
    }
    let lower = -search.im.1.max(1.0) * 0.5 - 0.123;
    Ok(count_zeros(eq, (right, search.re.1), (lower, search.im.1))? == 0)
}

/// Rightmost root at `p`, continued from `seed` when possible.
fn rightmost_from(
    p: &RescaledParameters,
    seed: Option<Complex64>,
    search: &RootSearch,
    max_jump: f64,
) -> Result<(Complex64, bool)> {
    let eq = equation_at(p)?;
    if let Some(z0) = seed {
        if let Some(r) = newton_root(&eq, z0) {
            let z = if r.lambda.im < 0.0 { r.lambda.conj() } else { r.lambda };
            if (z - z0).norm() <= max_jump && is_rightmost(&eq, z, search)? {
                return Ok((z, false));
            }
        }
    }
    let roots = rightmost_roots(&eq, search)?;
    let z = roots
        .first()
        .ok_or_else(|| Error::NumericalFailure("no characteristic root in the search box".into()))?
        .lambda;
    Ok((z, seed.is_some()))
}

/// Follows the rightmost root over `n` evenly spaced values of `parameter`
/// in `range`, and locates sign changes of its real part by bisection to
/// `1e-6` in the real part (or in the parameter).
pub fn root_trajectory(
    parameter: SweepParameter,
    range: (f64, f64),
    n: usize,
    params: &RescaledParameters,
    search: &RootSearch,
) -> Result<RootTrajectory> {
    if n < 2 {
        return Err(Error::Config("a sweep needs at least two values".into()));
    }
    let max_jump = 0.05 * (search.re.1 - search.re.0).max(search.im.1 - search.im.0);
    let mut out = RootTrajectory {
        parameter,
        values: Vec::with_capacity(n),
        roots: Vec::with_capacity(n),
        branch_switch: Vec::with_capacity(n),
        crossings: Vec::new(),
        lost: None,
    };
    let mut seed = None;
    for k in 0..n {
        let v = range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64;
        let p = parameter.apply(params, v);
        match rightmost_from(&p, seed, search, max_jump) {
            Ok((z, switched)) => {
                if let (Some(&v_prev), Some(&z_prev)) = (out.values.last(), out.roots.last()) {
                    if (z_prev.re > 0.0) != (z.re > 0.0) {
                        out.crossings
                            .push(bisect_crossing(parameter, (v_prev, z_prev), (v, z), params, search, max_jump)?);
                    }
                }
                out.values.push(v);
                out.roots.push(z);
                out.branch_switch.push(switched);
                seed = Some(z);
            }
            Err(e) => {
                out.lost = Some((v, e.to_string()));
                break;
            }
        }
    }
    Ok(out)
}

fn bisect_crossing(
    parameter: SweepParameter,
    mut a: (f64, Complex64),
    mut b: (f64, Complex64),
    params: &RescaledParameters,
    search: &RootSearch,
    max_jump: f64,
) -> Result<Crossing> {
    let destabilising = a.1.re < b.1.re;
    for _ in 0..100 {
        let v = 0.5 * (a.0 + b.0);
        let near = if (v - a.0).abs() < (v - b.0).abs() { a.1 } else { b.1 };
        let (z, _) = rightmost_from(&parameter.apply(params, v), Some(near), search, max_jump)?;
        if z.re.abs() <= MARGINAL_TOL || (b.0 - a.0).abs() <= 1e-12 * (1.0 + v.abs()) {
            return Ok(Crossing {
                value: v,
                root: z,
                destabilising,
            });
        }
        if (z.re > 0.0) == (a.1.re > 0.0) {
            a = (v, z);
        } else {
            b = (v, z);
        }
    }
    Err(Error::NumericalFailure("crossing bisection did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RawParameters;

    fn trace_of(f: impl Fn(f64) -> f64, days: f64) -> PopulationTrace {
        let mut t = PopulationTrace::new("synthetic");
        for k in 0..=(days as usize * 4) {
            let s = k as f64 / 4.0;
            t.push(s, f(s), 0.0);
        }
        t
    }

    #[test]
    fn synthetic_regimes() {
        assert_eq!(classify_trace(&trace_of(|t| 1.0 + 0.5 * (t / 3.0).sin(), 100.0)), TraceRegime::Periodic);
        assert_eq!(
            classify_trace(&trace_of(|t| 0.9 + 0.3 * (-t / 5.0).exp(), 100.0)),
            TraceRegime::NonzeroPlateau
        );
        assert_eq!(classify_trace(&trace_of(|t| (-t / 5.0).exp(), 100.0)), TraceRegime::Extinct);
        assert_eq!(classify_trace(&trace_of(|t| (-0.02 * t).exp(), 100.0)), TraceRegime::Extinct);
        assert_eq!(classify_trace(&trace_of(|_| 1.0, 30.0)), TraceRegime::Indeterminate);
    }

    #[test]
    fn hysteresis_ignores_jitter() {
        let y: Vec<f64> = (0..200).map(|k| 1.0 + 0.01 * ((k % 2) as f64 - 0.5)).collect();
        assert_eq!(upward_crossings(&y, 1.0, 0.05), 0);
    }

    #[test]
    fn axis_uses_pixel_centres() {
        let a = Axis::new(0.0, 1.0, 4).unwrap();
        assert_eq!(a.center(0), 0.125);
        assert_eq!(a.center(3), 0.875);
        assert!(Axis::new(1.0, 0.0, 4).is_err());
    }

    #[test]
    fn default_point_is_stable_and_large_rho_is_zero() {
        let p = RawParameters::default().rescale().unwrap();
        let s = RootSearch::default();
        let v = classify_point(p.rho_d, 0.42, &p, &s);
        assert_eq!(v.regime, Regime::StableNonzero);
        assert!(v.nonzero_exists);
        let z = classify_point(0.7, 0.42, &p, &s);
        assert_eq!(z.regime, Regime::StableZero);
        assert!(!z.nonzero_exists && z.rightmost.is_none());
    }

    #[test]
    fn small_map_is_monotone() {
        let p = RawParameters::default().rescale().unwrap();
        let map = region_map(
            Axis::new(0.04, 0.75, 6).unwrap(),
            Axis::new(0.2, 1.5, 3).unwrap(),
            &p,
            &RootSearch::default(),
            Some(2),
        )
        .unwrap();
        for j in 0..3 {
            assert!(map.is_monotone_in_rho(j), "{:?}", map.row(j));
        }
        let mut csv = Vec::new();
        map.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 19);
    }
}
