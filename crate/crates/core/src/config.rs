//! Flat `key = value` parameter files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Knot sets are written as four comma-separated numbers. Parsing is strict:
//! unknown or repeated keys are errors.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::params::{KnotSet, RawParameters};

/// Keys understood by [`RawParameters`], in file order.
pub const PARAMETER_KEYS: [&str; 17] = [
    "a_min",
    "a_max",
    "d",
    "r",
    "c1",
    "c2",
    "lambda_p",
    "lambda_m",
    "tau_c",
    "f_alpha",
    "f_omega",
    "N_tilde_A",
    "N_tilde_Omega",
    "r_inh",
    "r_deg",
    "b",
    "kappa",
];

/// Splits a parameter file into `(line number, key, value)` triples.
pub fn tokenize(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line_no}: expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!("line {line_no}: empty key or value")));
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!("line {line_no}: key `{key}` given twice")));
        }
        out.push((line_no, key.to_string(), value.to_string()));
    }
    Ok(out)
}

fn parse_number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("`{key}`: `{value}` is not a number")))
}

fn parse_knots(key: &str, value: &str) -> Result<KnotSet> {
    let parts = value
        .split(',')
        .map(|p| parse_number(key, p.trim()))
        .collect::<Result<Vec<_>>>()?;
    match parts[..] {
        [a, b, c, d] => Ok(KnotSet::new(a, b, c, d)),
        _ => Err(Error::Config(format!(
            "`{key}`: expected 4 comma-separated knots, got {}",
            parts.len()
        ))),
    }
}

impl RawParameters {
    /// Sets one parameter from its textual form. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "f_alpha" => self.f_alpha = parse_knots(key, value)?,
            "f_omega" => self.f_omega = parse_knots(key, value)?,
            _ => {
                let slot = match key {
                    "a_min" => &mut self.a_min,
                    "a_max" => &mut self.a_max,
                    "d" => &mut self.d,
                    "r" => &mut self.r,
                    "c1" => &mut self.c1,
                    "c2" => &mut self.c2,
                    "lambda_p" => &mut self.lambda_p,
                    "lambda_m" => &mut self.lambda_m,
                    "tau_c" => &mut self.tau_c,
                    "N_tilde_A" => &mut self.n_tilde_alpha,
                    "N_tilde_Omega" => &mut self.n_tilde_omega,
                    "r_inh" => &mut self.r_inh,
                    "r_deg" => &mut self.r_deg,
                    "b" => &mut self.b,
                    "kappa" => &mut self.kappa,
                    _ => return Err(Error::Config(format!("unknown parameter key `{key}`"))),
                };
                *slot = parse_number(key, value)?;
            }
        }
        Ok(())
    }

    /// Renders the parameters in the file format read by [`parse_parameters`].
    pub fn to_file_string(&self) -> String {
        let knots = |k: &KnotSet| {
            k.as_array()
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut s = String::new();
        for key in PARAMETER_KEYS {
            let value = match key {
                "f_alpha" => knots(&self.f_alpha),
                "f_omega" => knots(&self.f_omega),
                _ => format!("{:?}", self.scalar(key).expect("listed key")),
            };
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    fn scalar(&self, key: &str) -> Option<f64> {
        Some(match key {
            "a_min" => self.a_min,
            "a_max" => self.a_max,
            "d" => self.d,
            "r" => self.r,
            "c1" => self.c1,
            "c2" => self.c2,
            "lambda_p" => self.lambda_p,
            "lambda_m" => self.lambda_m,
            "tau_c" => self.tau_c,
            "N_tilde_A" => self.n_tilde_alpha,
            "N_tilde_Omega" => self.n_tilde_omega,
            "r_inh" => self.r_inh,
            "r_deg" => self.r_deg,
            "b" => self.b,
            "kappa" => self.kappa,
            _ => return None,
        })
    }
}

/// Parses a complete parameter file. Every key must be present exactly once.
pub fn parse_parameters(text: &str) -> Result<RawParameters> {
    let entries = tokenize(text)?;
    let mut raw = RawParameters {
        a_min: f64::NAN,
        a_max: f64::NAN,
        d: f64::NAN,
        r: f64::NAN,
        c1: f64::NAN,
        c2: f64::NAN,
        lambda_p: f64::NAN,
        lambda_m: f64::NAN,
        tau_c: f64::NAN,
        f_alpha: KnotSet::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        f_omega: KnotSet::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        n_tilde_alpha: f64::NAN,
        n_tilde_omega: f64::NAN,
        r_inh: f64::NAN,
        r_deg: f64::NAN,
        b: f64::NAN,
        kappa: f64::NAN,
    };
    for (line, key, value) in &entries {
        raw.set(key, value)
            .map_err(|e| Error::Config(format!("line {line}: {e}")))?;
    }
    let given: HashSet<&str> = entries.iter().map(|(_, k, _)| k.as_str()).collect();
    let missing: Vec<&str> = PARAMETER_KEYS
        .iter()
        .copied()
        .filter(|k| !given.contains(k))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!("missing keys: {}", missing.join(", "))));
    }
    raw.validate()?;
    Ok(raw)
}

/// Applies `key=value` overrides on top of a loaded parameter set.
pub fn apply_overrides<'a, I>(raw: &mut RawParameters, overrides: I) -> Result<()>
where
    I: IntoIterator<Item = &'a str>,
{
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{item}` is not `key=value`")))?;
        raw.set(key.trim(), value.trim())?;
    }
    raw.validate()
}
