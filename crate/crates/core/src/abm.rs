//! Agent-based model of stem-cell organisation.
//!
//! Every hour each stem cell either switches compartment (Alpha, quiescent,
//! or Omega, proliferating) with a probability set by its affinity and the
//! size of the other compartment, or drifts in affinity: up by a factor `r`
//! in Alpha, down by `d` in Omega. Omega cells advance a cycle clock and
//! divide once per cycle; an Omega cell whose affinity has reached `a_min`
//! leaves the stem-cell pool and becomes a differentiated cell, which
//! divides daily as a precursor and dies after four weeks.
//!
//! With imatinib switched on, proliferating Ph+ cells become drug-affected
//! with hourly probability `r_inh`, and affected proliferating cells die with
//! probability `r_deg`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::params::{KnotSet, Preset, RawParameters, SigmoidCoefficients};
use crate::trace::{format_f64, PopulationTrace};

/// Genetic and treatment status of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum PhStatus {
    PhMinus = 0,
    PhPlus = 1,
    PhPlusImatinibAffected = 2,
}

impl PhStatus {
    pub const ALL: [PhStatus; 3] = [
        PhStatus::PhMinus,
        PhStatus::PhPlus,
        PhStatus::PhPlusImatinibAffected,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            PhStatus::PhMinus => "ph_minus",
            PhStatus::PhPlus => "ph_plus",
            PhStatus::PhPlusImatinibAffected => "ph_plus_affected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compartment {
    Alpha,
    Omega,
}

/// A stem cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StemAgent {
    pub compartment: Compartment,
    pub affinity: f64,
    /// Hours into the current cycle; only meaningful in Omega.
    pub cycle_counter: u32,
    pub status: PhStatus,
}

/// A differentiated (precursor or mature) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferentiatedAgent {
    pub age: u32,
    pub status: PhStatus,
}

/// Where in the cycle clock transfers, division and entry happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleConvention {
    /// Cells enter Omega at counter 0, may return to Alpha while the counter
    /// lies in `[c1, c2)` and divide when it reaches `c2`.
    EntryAtZero,
    /// Cells enter Omega at counter `c2 - c1`, may return while the counter
    /// lies in `[0, c2 - c1)` and divide when it reaches `c2`. Cells then
    /// spend `c1` hours before their first division and are in G1 right
    /// after it, matching the transport models.
    DivisionAfterC1,
}

/// How differentiated cells are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferentiatedStorage {
    /// Counts per status and age in hours.
    Histogram,
    /// One record per cell, limited by `AbmConfig::max_agents`.
    Agents,
}

/// Initial cell counts per status.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialPopulation {
    pub alpha: [u64; 3],
    pub omega: [u64; 3],
}

/// Full configuration of an agent-based run.
#[derive(Debug, Clone, PartialEq)]
pub struct AbmConfig {
    pub raw: RawParameters,
    /// Transition characteristics (`f_alpha`, `f_omega`) per status. The
    /// Ph- entry defaults to the knots of `raw`.
    pub knots: [(KnotSet, KnotSet); 3],
    pub initial_population: InitialPopulation,
    pub horizon_days: f64,
    pub seed: u64,
    pub imatinib_enabled: bool,
    pub record_cadence_hours: u32,
    pub convention: CycleConvention,
    pub differentiated_storage: DifferentiatedStorage,
    /// Hard cap on the number of stored agents.
    pub max_agents: usize,
}

/// Hours after which a differentiated cell dies.
pub const DIFFERENTIATED_LIFESPAN_HOURS: u32 = 672;
/// Age from which differentiated cells count as mature.
pub const MATURE_AGE_HOURS: u32 = 480;
const PRECURSOR_DIVISION_HOURS: u32 = 24;

impl AbmConfig {
    /// The standard run: `N~_A` Ph- cells in Alpha at maximal affinity.
    pub fn new(raw: RawParameters, horizon_days: f64, seed: u64) -> Self {
        let plus = Preset::PhPlus.parameters();
        let affected = Preset::ImatinibAffected.parameters();
        let n0 = raw.n_tilde_alpha.round() as u64;
        Self {
            knots: [
                (raw.f_alpha, raw.f_omega),
                (plus.f_alpha, plus.f_omega),
                (affected.f_alpha, affected.f_omega),
            ],
            raw,
            initial_population: InitialPopulation {
                alpha: [n0, 0, 0],
                omega: [0; 3],
            },
            horizon_days,
            seed,
            imatinib_enabled: false,
            record_cadence_hours: 24,
            convention: CycleConvention::DivisionAfterC1,
            differentiated_storage: DifferentiatedStorage::Histogram,
            max_agents: 20_000_000,
        }
    }

    /// Sets one ABM option from the parameter-file syntax, falling back to
    /// the model parameters.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("`{key}`: `{value}` is not {what}"));
        match key {
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "horizon_days" => self.horizon_days = value.parse().map_err(|_| bad("a number"))?,
            "cadence_hours" => {
                self.record_cadence_hours = value.parse().map_err(|_| bad("an unsigned integer"))?
            }
            "imatinib" => {
                self.imatinib_enabled = match value {
                    "true" | "on" | "1" => true,
                    "false" | "off" | "0" => false,
                    _ => return Err(bad("a boolean")),
                }
            }
            "cycle_convention" => {
                self.convention = match value {
                    "entry-at-zero" => CycleConvention::EntryAtZero,
                    "division-after-c1" => CycleConvention::DivisionAfterC1,
                    _ => return Err(bad("`entry-at-zero` or `division-after-c1`")),
                }
            }
            "initial_ph_plus_fraction" => {
                let frac: f64 = value.parse().map_err(|_| bad("a number"))?;
                if !(0.0..=1.0).contains(&frac) {
                    return Err(bad("a fraction"));
                }
                let total: u64 = self.initial_population.alpha.iter().sum();
                let plus = (total as f64 * frac).round() as u64;
                self.initial_population.alpha = [total - plus, plus, 0];
            }
            _ => {
                self.raw.set(key, value)?;
                if key == "f_alpha" {
                    self.knots[0].0 = self.raw.f_alpha;
                } else if key == "f_omega" {
                    self.knots[0].1 = self.raw.f_omega;
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.raw.validate_for_agents()?;
        if !(self.horizon_days > 0.0 && self.horizon_days.is_finite()) {
            return Err(invalid("horizon_days", "must be positive"));
        }
        if self.record_cadence_hours == 0 {
            return Err(invalid("cadence_hours", "must be positive"));
        }
        let hours = self.horizon_hours();
        if hours % self.record_cadence_hours as u64 != 0 {
            return Err(invalid(
                "cadence_hours",
                format!("must divide the horizon ({hours} hours)"),
            ));
        }
        if self.raw.c1.fract() != 0.0 || self.raw.c2.fract() != 0.0 {
            return Err(invalid("c1", "cycle phases must be whole hours"));
        }
        Ok(())
    }

    fn horizon_hours(&self) -> u64 {
        (self.horizon_days * 24.0).round() as u64
    }
}

/// Population totals at one recording time, in units of `N~`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbmRecord {
    pub t: f64,
    pub alpha: [f64; 3],
    pub omega: [f64; 3],
    pub precursor: [f64; 3],
    pub mature: [f64; 3],
}

impl AbmRecord {
    pub fn alpha_total(&self) -> f64 {
        self.alpha.iter().sum()
    }
    pub fn omega_total(&self) -> f64 {
        self.omega.iter().sum()
    }
}

/// Recorded output of an agent-based run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AbmTrace {
    pub records: Vec<AbmRecord>,
}

impl AbmTrace {
    /// Stem-cell totals only, for comparison with the transport models.
    pub fn population_trace(&self) -> PopulationTrace {
        let mut t = PopulationTrace::new("abm");
        for r in &self.records {
            t.push(r.t, r.alpha_total(), r.omega_total());
        }
        t
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![
            "t_days".to_string(),
            "A_total".into(),
            "Omega_total".into(),
            "precursor".into(),
            "mature".into(),
        ];
        for s in PhStatus::ALL {
            for col in ["A", "Omega", "precursor", "mature"] {
                header.push(format!("{col}_{}", s.label()));
            }
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                format_f64(r.t),
                format_f64(r.alpha_total()),
                format_f64(r.omega_total()),
                format_f64(r.precursor.iter().sum()),
                format_f64(r.mature.iter().sum()),
            ];
            for k in 0..3 {
                row.extend([r.alpha[k], r.omega[k], r.precursor[k], r.mature[k]].map(format_f64));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Differentiated {
    Histogram(Vec<[u64; DIFFERENTIATED_LIFESPAN_HOURS as usize]>),
    Agents(Vec<DifferentiatedAgent>),
}

/// The whole simulated population.
#[derive(Debug, Clone)]
pub struct AgentPopulation {
    pub alpha: Vec<StemAgent>,
    pub omega: Vec<StemAgent>,
    differentiated: Differentiated,
    /// Hours simulated so far.
    pub hour: u64,
}

impl AgentPopulation {
    /// Differentiated cell counts `(precursor, mature)` per status.
    pub fn differentiated_counts(&self) -> ([u64; 3], [u64; 3]) {
        let mut pre = [0u64; 3];
        let mut mat = [0u64; 3];
        match &self.differentiated {
            Differentiated::Histogram(h) => {
                for (k, ages) in h.iter().enumerate() {
                    for (age, &n) in ages.iter().enumerate() {
                        if (age as u32) < MATURE_AGE_HOURS {
                            pre[k] += n;
                        } else {
                            mat[k] += n;
                        }
                    }
                }
            }
            Differentiated::Agents(v) => {
                for c in v {
                    if c.age < MATURE_AGE_HOURS {
                        pre[c.status as usize] += 1;
                    } else {
                        mat[c.status as usize] += 1;
                    }
                }
            }
        }
        (pre, mat)
    }

    /// Number of differentiated cells of `status` and exact `age`.
    pub fn differentiated_at_age(&self, status: PhStatus, age: u32) -> u64 {
        match &self.differentiated {
            Differentiated::Histogram(h) => h[status as usize].get(age as usize).copied().unwrap_or(0),
            Differentiated::Agents(v) => v
                .iter()
                .filter(|c| c.status == status && c.age == age)
                .count() as u64,
        }
    }

    /// Adds differentiated cells (for tests and custom initial states).
    pub fn add_differentiated(&mut self, status: PhStatus, age: u32, count: u64) {
        match &mut self.differentiated {
            Differentiated::Histogram(h) => h[status as usize][age as usize] += count,
            Differentiated::Agents(v) => {
                v.extend((0..count).map(|_| DifferentiatedAgent { age, status }))
            }
        }
    }
}

/// The agent-based simulator: configuration plus random stream.
#[derive(Debug, Clone)]
pub struct Abm {
    pub config: AbmConfig,
    sigmoids: [(SigmoidCoefficients, SigmoidCoefficients); 3],
    rng: ChaCha8Rng,
    pending_alpha: Vec<StemAgent>,
    pending_omega: Vec<StemAgent>,
    new_differentiated: [u64; 3],
}

impl Abm {
    pub fn new(config: AbmConfig) -> Result<Self> {
        config.validate()?;
        let mut sigmoids = [(SigmoidCoefficients::constant(0.0), SigmoidCoefficients::constant(0.0)); 3];
        for (k, (fa, fo)) in config.knots.iter().enumerate() {
            sigmoids[k] = (
                sigmoid_or_constant(fa, config.raw.n_tilde_alpha)?,
                sigmoid_or_constant(fo, config.raw.n_tilde_omega)?,
            );
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            sigmoids,
            pending_alpha: Vec::new(),
            pending_omega: Vec::new(),
            new_differentiated: [0; 3],
        })
    }

    /// Replaces the transition characteristics of one status, e.g. by
    /// constants that switch transfers off.
    pub fn with_sigmoids(mut self, status: PhStatus, f_alpha: SigmoidCoefficients, f_omega: SigmoidCoefficients) -> Self {
        self.sigmoids[status as usize] = (f_alpha, f_omega);
        self
    }

    pub fn initial_population(&self) -> AgentPopulation {
        let c = &self.config;
        let mut alpha = Vec::new();
        let mut omega = Vec::new();
        for s in PhStatus::ALL {
            let k = s as usize;
            alpha.extend((0..c.initial_population.alpha[k]).map(|_| StemAgent {
                compartment: Compartment::Alpha,
                affinity: c.raw.a_max,
                cycle_counter: 0,
                status: s,
            }));
            omega.extend((0..c.initial_population.omega[k]).map(|_| StemAgent {
                compartment: Compartment::Omega,
                affinity: c.raw.a_max,
                cycle_counter: self.entry_counter(),
                status: s,
            }));
        }
        let differentiated = match c.differentiated_storage {
            DifferentiatedStorage::Histogram => {
                Differentiated::Histogram(vec![[0; DIFFERENTIATED_LIFESPAN_HOURS as usize]; 3])
            }
            DifferentiatedStorage::Agents => Differentiated::Agents(Vec::new()),
        };
        AgentPopulation {
            alpha,
            omega,
            differentiated,
            hour: 0,
        }
    }

    fn c1(&self) -> u32 {
        self.config.raw.c1 as u32
    }

    fn c2(&self) -> u32 {
        self.config.raw.c2 as u32
    }

    fn entry_counter(&self) -> u32 {
        match self.config.convention {
            CycleConvention::EntryAtZero => 0,
            CycleConvention::DivisionAfterC1 => self.c2() - self.c1(),
        }
    }

    fn in_g1(&self, counter: u32) -> bool {
        match self.config.convention {
            CycleConvention::EntryAtZero => counter >= self.c1() && counter < self.c2(),
            CycleConvention::DivisionAfterC1 => counter < self.c2() - self.c1(),
        }
    }

    /// Advances the population by one hour.
    pub fn step(&mut self, pop: &mut AgentPopulation) -> Result<()> {
        let raw = &self.config.raw;
        let (a_min, a_max, r, d) = (raw.a_min, raw.a_max, raw.r, raw.d);
        let (c2, entry) = (self.c2(), self.entry_counter());
        // A1: totals used by every transfer decision of this hour.
        let alpha_total = pop.alpha.len() as f64;
        let omega_total = pop.omega.len() as f64;
        let mut p_alpha = [0.0; 3];
        let mut p_omega = [0.0; 3];
        for k in 0..3 {
            p_alpha[k] = self.sigmoids[k].0.hourly(alpha_total);
            p_omega[k] = self.sigmoids[k].1.hourly(omega_total);
        }

        // A2: treatment acts on proliferating Ph+ cells.
        if self.config.imatinib_enabled {
            let (r_inh, r_deg) = (raw.r_inh, raw.r_deg);
            let rng = &mut self.rng;
            pop.omega.retain_mut(|cell| match cell.status {
                PhStatus::PhMinus => true,
                PhStatus::PhPlusImatinibAffected => rng.gen::<f64>() >= r_deg,
                PhStatus::PhPlus => {
                    if rng.gen::<f64>() < r_inh {
                        cell.status = PhStatus::PhPlusImatinibAffected;
                    }
                    true
                }
            });
        }

        // B1: Alpha cells.
        let mut keep = 0;
        for i in 0..pop.alpha.len() {
            let mut cell = pop.alpha[i];
            let p = (a_min / cell.affinity * p_omega[cell.status as usize]).clamp(0.0, 1.0);
            if self.rng.gen::<f64>() < p {
                cell.compartment = Compartment::Omega;
                cell.cycle_counter = entry;
                self.pending_omega.push(cell);
            } else {
                cell.affinity = (cell.affinity * r).min(a_max);
                pop.alpha[keep] = cell;
                keep += 1;
            }
        }
        pop.alpha.truncate(keep);

        // B2: Omega cells.
        let mut keep = 0;
        for i in 0..pop.omega.len() {
            let mut cell = pop.omega[i];
            if self.in_g1(cell.cycle_counter) {
                let p = (cell.affinity * p_alpha[cell.status as usize]).clamp(0.0, 1.0);
                if self.rng.gen::<f64>() < p {
                    cell.compartment = Compartment::Alpha;
                    self.pending_alpha.push(cell);
                    continue;
                }
            }
            if cell.affinity <= a_min {
                self.new_differentiated[cell.status as usize] += 1;
                continue;
            }
            cell.affinity = (cell.affinity / d).max(a_min);
            cell.cycle_counter += 1;
            if cell.cycle_counter >= c2 {
                cell.cycle_counter = 0;
                self.pending_omega.push(cell);
            }
            pop.omega[keep] = cell;
            keep += 1;
        }
        pop.omega.truncate(keep);

        // B3: differentiated cells age, divide daily as precursors, then die.
        age_differentiated(&mut pop.differentiated, self.config.max_agents)?;
        for (k, n) in self.new_differentiated.iter_mut().enumerate() {
            if *n > 0 {
                pop.add_differentiated(PhStatus::ALL[k], 0, *n);
                *n = 0;
            }
        }

        pop.alpha.append(&mut self.pending_alpha);
        pop.omega.append(&mut self.pending_omega);
        pop.hour += 1;
        let stored = pop.alpha.len()
            + pop.omega.len()
            + match &pop.differentiated {
                Differentiated::Agents(v) => v.len(),
                Differentiated::Histogram(_) => 0,
            };
        if stored > self.config.max_agents {
            return Err(Error::ResourceLimit(format!(
                "{stored} agents after {} hours exceed the cap of {}",
                pop.hour, self.config.max_agents
            )));
        }
        Ok(())
    }

    fn record(&self, pop: &AgentPopulation) -> AbmRecord {
        let raw = &self.config.raw;
        let mut alpha = [0.0; 3];
        let mut omega = [0.0; 3];
        for c in &pop.alpha {
            alpha[c.status as usize] += 1.0;
        }
        for c in &pop.omega {
            omega[c.status as usize] += 1.0;
        }
        let (pre, mat) = pop.differentiated_counts();
        AbmRecord {
            t: pop.hour as f64 / 24.0,
            alpha: alpha.map(|v| v / raw.n_tilde_alpha),
            omega: omega.map(|v| v / raw.n_tilde_omega),
            precursor: pre.map(|v| v as f64 / raw.n_tilde_omega),
            mature: mat.map(|v| v as f64 / raw.n_tilde_omega),
        }
    }

    /// Runs the configured horizon from the configured initial population.
    pub fn simulate(&mut self) -> Result<AbmTrace> {
        let mut pop = self.initial_population();
        self.run(&mut pop)
    }

    /// Runs the configured horizon from `pop`.
    pub fn run(&mut self, pop: &mut AgentPopulation) -> Result<AbmTrace> {
        let hours = self.config.horizon_hours();
        let cadence = self.config.record_cadence_hours as u64;
        let mut trace = AbmTrace::default();
        trace.records.push(self.record(pop));
        for h in 1..=hours {
            self.step(pop)?;
            if h % cadence == 0 {
                trace.records.push(self.record(pop));
            }
        }
        Ok(trace)
    }
}

/// Convenience wrapper: builds the simulator and runs it.
pub fn simulate(config: AbmConfig) -> Result<AbmTrace> {
    Abm::new(config)?.simulate()
}

fn sigmoid_or_constant(knots: &KnotSet, scale: f64) -> Result<SigmoidCoefficients> {
    let k = knots.as_array();
    if k.iter().all(|v| *v == k[0]) {
        Ok(SigmoidCoefficients::constant(k[0]))
    } else {
        SigmoidCoefficients::from_knots(knots, scale)
    }
}

fn precursor_divides(age: u32) -> bool {
    age % PRECURSOR_DIVISION_HOURS == 0 && (PRECURSOR_DIVISION_HOURS..=MATURE_AGE_HOURS).contains(&age)
}

fn age_differentiated(store: &mut Differentiated, cap: usize) -> Result<()> {
    match store {
        Differentiated::Histogram(h) => {
            for ages in h.iter_mut() {
                // Shift by one hour; the last slot (age 671) dies on reaching 672.
                for age in (1..ages.len()).rev() {
                    let mut n = ages[age - 1];
                    if precursor_divides(age as u32) {
                        n = n.checked_mul(2).ok_or_else(|| {
                            Error::ResourceLimit("differentiated cell count overflow".into())
                        })?;
                    }
                    ages[age] = n;
                }
                ages[0] = 0;
            }
        }
        Differentiated::Agents(v) => {
            let mut born = Vec::new();
            v.retain_mut(|c| {
                c.age += 1;
                if precursor_divides(c.age) {
                    born.push(*c);
                }
                c.age < DIFFERENTIATED_LIFESPAN_HOURS
            });
            v.extend(born);
            if v.len() > cap {
                return Err(Error::ResourceLimit(format!(
                    "{} differentiated agents exceed the cap of {cap}",
                    v.len()
                )));
            }
        }
    }
    Ok(())
}
