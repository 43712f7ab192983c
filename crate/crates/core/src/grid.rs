//! Characteristic-aligned lattice shared by the transport solvers.
//!
//! Time advances in steps of `1/m` hours. Omega cells mature at speed
//! `rho_d`, so the maturity step is chosen as `dx = rho_d * (1/q hours)` and
//! the cell-cycle step as `dc = 1/qc hours`. With the default `q = qc = m`
//! both Courant numbers equal one and the upwind update is an exact shift
//! along characteristics. Division lines (`c = c1` and
//! `x = rho_d (k c2 + c1)`) then fall on cell boundaries for every `rho_d`.
//!
//! `1/dx` is in general not an integer, so the last maturity cell is only
//! partly inside `[0, 1]`. Fields store densities; the last cell contributes
//! with weight `last_weight * dx` to integrals.

use crate::error::{invalid, Error, Result};
use crate::numeric::phi1;
use crate::params::{RescaledParameters, HOURS_PER_DAY};

/// Refinement knobs of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    /// Time steps per hour (`m`).
    pub steps_per_hour: usize,
    /// Maturity cells per hour of Omega transit (`q`).
    pub x_cells_per_hour: usize,
    /// Cell-cycle cells per hour (`qc`).
    pub c_cells_per_hour: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::uniform(2)
    }
}

impl GridSpec {
    /// The Courant-one lattice with `n` subdivisions of an hour.
    pub const fn uniform(n: usize) -> Self {
        Self {
            steps_per_hour: n,
            x_cells_per_hour: n,
            c_cells_per_hour: n,
        }
    }

    /// Halves every step size.
    pub fn refined(&self) -> Self {
        Self {
            steps_per_hour: 2 * self.steps_per_hour,
            x_cells_per_hour: 2 * self.x_cells_per_hour,
            c_cells_per_hour: 2 * self.c_cells_per_hour,
        }
    }
}

/// A lattice instantiated for one parameter set.
#[derive(Debug, Clone)]
pub struct Grid {
    pub spec: GridSpec,
    /// Time step (days).
    pub dt: f64,
    /// Maturity step.
    pub dx: f64,
    /// Cell-cycle step (days).
    pub dc: f64,
    pub nx: usize,
    pub nc: usize,
    /// Fraction of the last maturity cell lying inside `[0, 1]`.
    pub last_weight: f64,
    /// Courant number of Omega transport in `x`.
    pub cfl_d: f64,
    /// Courant number of the cell-cycle transport.
    pub cfl_c: f64,
    /// Courant number of Alpha transport over one full step (before substepping).
    pub cfl_r: f64,
    /// Substeps used for the Alpha transport so that each has Courant <= 1.
    pub r_substeps: usize,
    /// First cycle cell of G1 (`c = c1`).
    pub c1_index: usize,
    /// Cells of maturity.
    pub x_centers: Vec<f64>,
    /// `x_division[i]`: content entering cell `i` from cell `i - 1` doubles.
    pub x_division: Vec<bool>,
    /// `g1[i]`: a cohort that entered at `x = 0` is in G1 in cell `i`.
    pub g1: Vec<bool>,
}

fn whole_hours(name: &'static str, days: f64) -> Result<usize> {
    let hours = days * HOURS_PER_DAY;
    let rounded = hours.round();
    if (hours - rounded).abs() > 1e-9 || rounded < 1.0 {
        return Err(invalid(name, format!("must be a whole number of hours, got {hours}")));
    }
    Ok(rounded as usize)
}

impl Grid {
    pub fn new(spec: GridSpec, params: &RescaledParameters) -> Result<Self> {
        let GridSpec {
            steps_per_hour: m,
            x_cells_per_hour: q,
            c_cells_per_hour: qc,
        } = spec;
        if m == 0 || q == 0 || qc == 0 {
            return Err(Error::CflViolation("all refinement factors must be positive".into()));
        }
        let cfl_d = q as f64 / m as f64;
        let cfl_c = qc as f64 / m as f64;
        if cfl_d > 1.0 || cfl_c > 1.0 {
            return Err(Error::CflViolation(format!(
                "maturity Courant {cfl_d}, cycle Courant {cfl_c}: both must be <= 1"
            )));
        }
        if !(params.rho_d > 0.0 && params.rho_r > 0.0) {
            return Err(invalid("rho_d", "advection speeds must be positive"));
        }
        let c1_hours = whole_hours("c1", params.c1_days)?;
        let c2_hours = whole_hours("c2", params.c2_days)?;
        let hour = 1.0 / HOURS_PER_DAY;
        let dt = hour / m as f64;
        let dx = params.rho_d * hour / q as f64;
        let dc = hour / qc as f64;
        let cells = 1.0 / dx;
        let nx = (cells - 1e-9).ceil().max(1.0) as usize;
        let last_weight = (1.0 - (nx - 1) as f64 * dx) / dx;
        let cfl_r = params.rho_r * dt / dx;
        let r_substeps = (cfl_r - 1e-12).ceil().max(1.0) as usize;
        let nc = c2_hours * qc;
        let c1_index = c1_hours * qc;
        let x_centers = (0..nx)
            .map(|i| {
                if i + 1 == nx {
                    (i as f64 * dx + 1.0) / 2.0
                } else {
                    (i as f64 + 0.5) * dx
                }
            })
            .collect();
        let cycle = c2_hours * q;
        let x_division = (0..nx).map(|i| i > 0 && i % cycle == c1_hours * q).collect();
        let g1 = (0..nx).map(|i| i % cycle >= c1_hours * q).collect();
        Ok(Self {
            spec,
            dt,
            dx,
            dc,
            nx,
            nc,
            last_weight,
            cfl_d,
            cfl_c,
            cfl_r,
            r_substeps,
            c1_index,
            x_centers,
            x_division,
            g1,
        })
    }

    /// Steps needed to cover `days`.
    pub fn steps_for(&self, days: f64) -> usize {
        (days / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Quadrature weight of maturity cell `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.last_weight * self.dx
        } else {
            self.dx
        }
    }

    /// `int_0^1 field dx` by the midpoint rule on the lattice.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        debug_assert_eq!(field.len(), self.nx);
        let n = field.len();
        let interior: f64 = field[..n - 1].iter().sum();
        self.dx * (interior + self.last_weight * field[n - 1])
    }

    /// `int_0^1 weight(x) field(x) dx`.
    pub fn integrate_weighted(&self, field: &[f64], weight: &[f64]) -> f64 {
        let n = field.len();
        let interior: f64 = field[..n - 1]
            .iter()
            .zip(&weight[..n - 1])
            .map(|(f, w)| f * w)
            .sum();
        self.dx * (interior + self.last_weight * field[n - 1] * weight[n - 1])
    }

    /// Cell averages of `f` over the maturity cells (Gauss-Legendre, 5 points).
    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        const NODES: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        (0..self.nx)
            .map(|i| {
                let a = i as f64 * self.dx;
                let b = if i + 1 == self.nx { 1.0 } else { a + self.dx };
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                NODES
                    .iter()
                    .zip(WEIGHTS)
                    .map(|(n, w)| w * f(c + h * n))
                    .sum::<f64>()
                    * 0.5
            })
            .collect()
    }
}

/// Upwind transport to the right with exponential growth and doubling.
///
/// `rate[i]` is the net per-day growth rate in cell `i`; content that moves
/// from `i - 1` to `i` grows at the average of the two rates. `inflow` is the
/// amount (integral over `x`) entering through `x = 0` during the step; it
/// experiences the growth of cell 0 for on average half the step.
///
/// [`RightTransport::apply`] returns the amount that left through `x = 1`.
pub(crate) struct RightTransport<'a> {
    pub grid: &'a Grid,
    pub nu: f64,
    pub division: Option<&'a [bool]>,
}

impl RightTransport<'_> {
    pub fn apply(&self, field: &mut [f64], rate: Option<&[f64]>, inflow: f64, scratch: &mut Vec<f64>) -> f64 {
        let g = self.grid;
        let n = field.len();
        let dt = g.dt;
        scratch.clear();
        scratch.extend_from_slice(field);
        let old = &scratch[..];
        let r = |i: usize| rate.map_or(0.0, |r| r[i]);
        let grow_stay = |i: usize| if rate.is_some() { (r(i) * dt).exp() } else { 1.0 };
        let grow_move = |i: usize| {
            if rate.is_some() {
                (0.5 * (r(i - 1) + r(i)) * dt).exp()
            } else {
                1.0
            }
        };
        let mut out = 0.0;
        for i in (1..n).rev() {
            let nu = if i + 1 == n {
                (self.nu / g.last_weight).min(1.0)
            } else {
                self.nu
            };
            let doubling = match self.division {
                Some(d) if d[i] => 2.0,
                _ => 1.0,
            };
            let moved = nu * old[i - 1] * grow_move(i) * doubling;
            if i + 1 == n {
                // The partial cell passes on what it held, and with a capped
                // Courant number part of the upstream content crosses it too.
                out += nu * g.last_weight * g.dx * old[i] * grow_stay(i);
                out += (self.nu - nu * g.last_weight).max(0.0)
                    * g.dx
                    * old[i - 1]
                    * grow_move(i)
                    * doubling;
            }
            field[i] = (1.0 - nu) * old[i] * grow_stay(i) + moved;
        }
        let entering = inflow * phi1(r(0) * dt) / g.dx;
        field[0] = (1.0 - self.nu) * old[0] * grow_stay(0) + entering;
        if n == 1 {
            out += self.nu * g.last_weight * g.dx * old[0] * grow_stay(0);
        }
        out
    }
}

/// Upwind transport to the left (towards `x = 0`) with zero inflow at
/// `x = 1`. Splits into `grid.r_substeps` substeps. Returns the amount that
/// left through `x = 0`.
pub(crate) fn transport_left(grid: &Grid, field: &mut [f64], speed: f64) -> f64 {
    let n = field.len();
    let steps = grid.r_substeps;
    let nu = speed * grid.dt / grid.dx / steps as f64;
    let mut out = 0.0;
    for _ in 0..steps {
        // Amounts rather than densities keep the partial last cell conservative.
        let mut carry = 0.0;
        for i in (0..n).rev() {
            let w = grid.weight(i);
            let content = field[i] * w;
            let leaving = (nu * grid.dx * field[i]).min(content);
            field[i] = (content - leaving + carry) / w;
            carry = leaving;
        }
        out += carry;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RawParameters;

    fn grid(d: f64, spec: GridSpec) -> Grid {
        let p = RawParameters::default().with_d(d).rescale().unwrap();
        Grid::new(spec, &p).unwrap()
    }

    #[test]
    fn default_grid_dimensions() {
        let g = grid(1.05, GridSpec::default());
        assert_eq!(g.nx, 255);
        assert_eq!(g.nc, 98);
        assert_eq!(g.c1_index, 34);
        assert!((g.cfl_d - 1.0).abs() < 1e-15);
        assert!(g.last_weight > 0.0 && g.last_weight <= 1.0);
        let total = (g.nx - 1) as f64 * g.dx + g.last_weight * g.dx;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn courant_above_one_is_rejected() {
        let p = RawParameters::default().rescale().unwrap();
        let spec = GridSpec {
            steps_per_hour: 1,
            x_cells_per_hour: 2,
            c_cells_per_hour: 1,
        };
        assert!(matches!(Grid::new(spec, &p), Err(Error::CflViolation(_))));
    }

    #[test]
    fn g1_membership_matches_cycle_phase() {
        let g = grid(1.05, GridSpec::uniform(3));
        let p = RawParameters::default().rescale().unwrap();
        for i in 0..g.nx - 1 {
            let hours = (i as f64 + 0.5) * g.dx / p.rho_d * HOURS_PER_DAY;
            let phase = hours % 49.0;
            assert_eq!(g.g1[i], (17.0..49.0).contains(&phase), "cell {i}");
        }
        let boundaries: Vec<usize> = (0..g.nx).filter(|&i| g.x_division[i]).collect();
        assert_eq!(boundaries[0], 17 * 3);
        assert_eq!(boundaries[1], 66 * 3);
    }

    #[test]
    fn exact_shift_moves_a_pulse() {
        let g = grid(1.05, GridSpec::default());
        let mut f = vec![0.0; g.nx];
        f[10] = 1.0;
        let mut scratch = Vec::new();
        let t = RightTransport {
            grid: &g,
            nu: g.cfl_d,
            division: None,
        };
        for _ in 0..5 {
            t.apply(&mut f, None, 0.0, &mut scratch);
        }
        assert_eq!(f[15], 1.0);
        assert_eq!(f.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn outflow_balances_mass() {
        let g = grid(1.05, GridSpec::default());
        let mut f = vec![1.0; g.nx];
        let rate = vec![0.3; g.nx];
        let mut scratch = Vec::new();
        let t = RightTransport {
            grid: &g,
            nu: 1.0,
            division: None,
        };
        let before = g.integrate(&f);
        let out = t.apply(&mut f, Some(&rate), 0.0, &mut scratch);
        let after = g.integrate(&f);
        let growth = before * ((0.3 * g.dt).exp() - 1.0);
        assert!((before + growth - out - after).abs() < 1e-14);
        assert!((out - g.dx * (0.3 * g.dt).exp()).abs() < 1e-12);
    }

    #[test]
    fn left_transport_is_conservative() {
        let g = grid(1.05, GridSpec::default());
        let mut f = vec![0.0; g.nx];
        for v in f.iter_mut().take(200).skip(100) {
            *v = 1.0;
        }
        let mut total = g.integrate(&f);
        let mut drained = 0.0;
        for _ in 0..500 {
            drained += transport_left(&g, &mut f, 0.3681);
            let now = g.integrate(&f) + drained;
            assert!((now - total).abs() < 1e-12);
            total = now;
        }
        assert!(f.iter().all(|v| *v >= 0.0));
    }
}
