//! Population time series and their CSV form.
//!
//! Every simulator reports `(t, A_total, Omega_total)` in units of `N~`
//! (1e5 cells). Traces of several models can be written into one file with a
//! leading `model` column for overlay plots.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// One sample of a population trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// Time (days).
    pub t: f64,
    /// Total Alpha population.
    pub alpha: f64,
    /// Total Omega population.
    pub omega: f64,
}

impl TracePoint {
    pub fn total(&self) -> f64 {
        self.alpha + self.omega
    }
}

/// A labelled time series of population totals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PopulationTrace {
    pub model: String,
    pub points: Vec<TracePoint>,
}

/// Formats a float with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const TRACE_HEADER: [&str; 3] = ["t_days", "A_total", "Omega_total"];

impl PopulationTrace {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, alpha: f64, omega: f64) {
        self.points.push(TracePoint { t, alpha, omega });
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.points.iter().map(TracePoint::total).collect()
    }

    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }

    /// Linear interpolation of the sample at time `t` (clamped to the ends).
    pub fn at(&self, t: f64) -> Option<TracePoint> {
        let pts = &self.points;
        let first = pts.first()?;
        if t <= first.t {
            return Some(*first);
        }
        let idx = pts.partition_point(|p| p.t < t);
        if idx >= pts.len() {
            return pts.last().copied();
        }
        let (a, b) = (pts[idx - 1], pts[idx]);
        let s = (t - a.t) / (b.t - a.t);
        Some(TracePoint {
            t,
            alpha: a.alpha + s * (b.alpha - a.alpha),
            omega: a.omega + s * (b.omega - a.omega),
        })
    }

    /// Largest relative gap of `value` between two traces over the samples of
    /// `self` with `t >= after`, relative to the larger of the two values.
    pub fn sup_relative_gap<F>(&self, other: &Self, after: f64, value: F) -> f64
    where
        F: Fn(&TracePoint) -> f64,
    {
        self.points
            .iter()
            .filter(|p| p.t >= after)
            .filter_map(|p| other.at(p.t).map(|q| (value(p), value(&q))))
            .map(|(a, b)| {
                let scale = a.abs().max(b.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }

    /// Writes `t_days,A_total,Omega_total` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(TRACE_HEADER)?;
        for p in &self.points {
            w.write_record([format_f64(p.t), format_f64(p.alpha), format_f64(p.omega)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, model: impl Into<String>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        check_header(r.headers()?, &TRACE_HEADER)?;
        let mut trace = Self::new(model);
        for record in r.records() {
            let record = record?;
            trace.push(field(&record, 0)?, field(&record, 1)?, field(&record, 2)?);
        }
        Ok(trace)
    }
}

/// Writes several traces into one file with a leading `model` column.
pub fn write_overlay_csv<W: Write>(traces: &[&PopulationTrace], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", TRACE_HEADER[0], TRACE_HEADER[1], TRACE_HEADER[2]])?;
    for trace in traces {
        for p in &trace.points {
            w.write_record([
                trace.model.clone(),
                format_f64(p.t),
                format_f64(p.alpha),
                format_f64(p.omega),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_overlay_csv`], preserving model order.
pub fn read_overlay_csv<R: Read>(reader: R) -> Result<Vec<PopulationTrace>> {
    let mut r = csv::Reader::from_reader(reader);
    check_header(
        r.headers()?,
        &["model", TRACE_HEADER[0], TRACE_HEADER[1], TRACE_HEADER[2]],
    )?;
    let mut out: Vec<PopulationTrace> = Vec::new();
    for record in r.records() {
        let record = record?;
        let model = record.get(0).unwrap_or_default();
        let idx = match out.iter().position(|t| t.model == model) {
            Some(i) => i,
            None => {
                out.push(PopulationTrace::new(model));
                out.len() - 1
            }
        };
        out[idx].push(field(&record, 1)?, field(&record, 2)?, field(&record, 3)?);
    }
    Ok(out)
}

pub(crate) fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Io(format!(
            "unexpected CSV header {:?}, expected {expected:?}",
            found.iter().collect::<Vec<_>>()
        )))
    }
}

pub(crate) fn field(record: &csv::StringRecord, idx: usize) -> Result<f64> {
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::Io(format!("missing column {idx}")))?;
    raw.parse()
        .map_err(|_| Error::Io(format!("column {idx}: `{raw}` is not a number")))
}
