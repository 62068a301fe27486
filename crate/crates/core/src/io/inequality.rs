//! Line-oriented inequality definitions.
//!
//! ```text
//! # comment
//! scenario 2 2 2 2          # settings_a settings_b outcomes_a outcomes_b
//! bound 0.75
//! settings 0.25 0.25 0.25 0.25   # optional, row-major in (x, y); default uniform
//! entry 0 0 0 0 0.25        # x y a b value; coefficients may be negative
//! ```
//!
//! Unlisted coefficients are zero. The inequality is canonicalized on load.

use std::fmt::Write as _;

use crate::bell::{canonicalize, BellInequality, EventTable, Scenario, SettingsDistribution};
use crate::error::{Error, Result};

/// An inequality as written, before canonicalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInequality {
    pub alpha: EventTable,
    pub bound: f64,
    pub settings: SettingsDistribution,
}

impl RawInequality {
    pub fn canonicalize(&self) -> Result<BellInequality> {
        canonicalize(&self.alpha, self.bound, self.settings.clone())
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn numbers<T: std::str::FromStr>(line: usize, fields: &[&str]) -> Result<Vec<T>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<T>()
                .map_err(|_| perr(line, format!("bad number {f:?}")))
        })
        .collect()
}

pub fn parse_inequality(text: &str) -> Result<RawInequality> {
    let mut scenario: Option<Scenario> = None;
    let mut bound: Option<f64> = None;
    let mut settings: Option<(usize, Vec<f64>)> = None;
    let mut entries: Vec<(usize, [usize; 4], f64)> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields[0] {
            "scenario" => {
                if scenario.is_some() {
                    return Err(perr(line, "duplicate scenario"));
                }
                let v: Vec<usize> = numbers(line, &fields[1..])?;
                if v.len() != 4 {
                    return Err(perr(line, "scenario needs 4 sizes"));
                }
                scenario = Some(
                    Scenario::new(v[0], v[1], v[2], v[3]).map_err(|e| perr(line, e.to_string()))?,
                );
            }
            "bound" => {
                let v: Vec<f64> = numbers(line, &fields[1..])?;
                if v.len() != 1 || bound.is_some() {
                    return Err(perr(line, "bound needs exactly one value, once"));
                }
                bound = Some(v[0]);
            }
            "settings" => {
                if settings.is_some() {
                    return Err(perr(line, "duplicate settings"));
                }
                settings = Some((line, numbers(line, &fields[1..])?));
            }
            "entry" => {
                if fields.len() != 6 {
                    return Err(perr(line, "entry needs x y a b value"));
                }
                let idx: Vec<usize> = numbers(line, &fields[1..5])?;
                let value: f64 = fields[5]
                    .parse()
                    .map_err(|_| perr(line, format!("bad value {:?}", fields[5])))?;
                entries.push((line, [idx[0], idx[1], idx[2], idx[3]], value));
            }
            other => return Err(perr(line, format!("unknown directive {other:?}"))),
        }
    }

    let scenario = scenario.ok_or_else(|| perr(0, "missing scenario line"))?;
    let bound = bound.ok_or_else(|| perr(0, "missing bound line"))?;
    let settings = match settings {
        None => SettingsDistribution::uniform(&scenario),
        Some((line, p)) => {
            SettingsDistribution::new(&scenario, p).map_err(|e| perr(line, e.to_string()))?
        }
    };
    let mut alpha = EventTable::zeros(scenario);
    let mut seen = std::collections::HashSet::new();
    for (line, [x, y, a, b], value) in entries {
        let r = crate::bell::RoundRecord { x, y, a, b };
        if !scenario.contains(&r) {
            return Err(perr(line, "entry index outside the scenario"));
        }
        if !seen.insert((x, y, a, b)) {
            return Err(perr(line, "duplicate entry"));
        }
        alpha.set(x, y, a, b, value);
    }
    Ok(RawInequality {
        alpha,
        bound,
        settings,
    })
}

/// Serializes an inequality in the format read by [`parse_inequality`],
/// listing only nonzero coefficients.
pub fn format_inequality(
    alpha: &EventTable,
    bound: f64,
    settings: &SettingsDistribution,
) -> String {
    let s = alpha.scenario();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {} {} {} {}",
        s.num_settings_a, s.num_settings_b, s.num_outcomes_a, s.num_outcomes_b
    );
    let _ = writeln!(out, "bound {bound}");
    let probs: Vec<String> = settings.probs().iter().map(|p| p.to_string()).collect();
    let _ = writeln!(out, "settings {}", probs.join(" "));
    for (x, y, a, b) in s.events() {
        let v = alpha.get(x, y, a, b);
        if v != 0.0 {
            let _ = writeln!(out, "entry {x} {y} {a} {b} {v}");
        }
    }
    out
}
