//! Empirical check that a program's output carries no information about
//! the settings.
//!
//! Paired samples `(d, settings)` from repeated runs are compared round
//! position by round position: the plug-in mutual information between the
//! bit `d_i` and the setting pair `(x_i, y_i)` is estimated with the
//! Miller-Madow bias correction and clamped at zero.

use std::collections::BTreeMap;

use crate::bell::{GDecomposition, SettingsDistribution};
use crate::error::{Error, Result};
use crate::quantum::{sample_block, SettingsSampler, SourceModel};
use crate::seed::{derive_seed, STREAM_SETTINGS, STREAM_SOURCE};

use super::{FilterProgram, SelectionString};

/// Bits of per-round mutual information tolerated by the audit.
pub const DEFAULT_MI_THRESHOLD: f64 = 0.01;
pub const MIN_AUDIT_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub samples: usize,
    pub per_round_mi: Vec<f64>,
    pub max_mi: f64,
    pub threshold: f64,
    /// Program output is a function of `N` only.
    pub structurally_independent: bool,
    pub passed: bool,
}

/// Bias-corrected plug-in mutual information (bits) between a binary and a
/// categorical variable given as paired observations.
fn mutual_information(pairs: impl Iterator<Item = (bool, (usize, usize))>) -> f64 {
    let mut joint: BTreeMap<(bool, (usize, usize)), usize> = BTreeMap::new();
    let mut n = 0usize;
    for p in pairs {
        *joint.entry(p).or_default() += 1;
        n += 1;
    }
    let mut d_marg: BTreeMap<bool, usize> = BTreeMap::new();
    let mut s_marg: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&(d, s), &c) in &joint {
        *d_marg.entry(d).or_default() += c;
        *s_marg.entry(s).or_default() += c;
    }
    if d_marg.len() < 2 || s_marg.len() < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for (&(d, s), &c) in &joint {
        let pj = c as f64 / nf;
        let pd = d_marg[&d] as f64 / nf;
        let ps = s_marg[&s] as f64 / nf;
        mi += pj * (pj / (pd * ps)).log2();
    }
    let bias =
        ((d_marg.len() - 1) * (s_marg.len() - 1)) as f64 / (2.0 * nf * std::f64::consts::LN_2);
    (mi - bias).max(0.0)
}

/// Audits paired `(d, settings)` samples; `settings_samples[j][i]` is the
/// setting pair of round `i` in run `j`.
pub fn independence_audit(
    d_samples: &[SelectionString],
    settings_samples: &[Vec<(usize, usize)>],
    threshold: f64,
) -> Result<AuditReport> {
    if d_samples.len() != settings_samples.len() {
        return Err(Error::LengthMismatch {
            expected: d_samples.len(),
            actual: settings_samples.len(),
        });
    }
    if d_samples.len() < MIN_AUDIT_SAMPLES {
        return Err(Error::TooFewSamples {
            got: d_samples.len(),
            min: MIN_AUDIT_SAMPLES,
        });
    }
    let n = d_samples[0].len();
    for (d, s) in d_samples.iter().zip(settings_samples) {
        if d.len() != n || s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: d.len().max(s.len()),
            });
        }
    }
    let per_round_mi: Vec<f64> = (0..n)
        .map(|i| {
            mutual_information(
                d_samples
                    .iter()
                    .zip(settings_samples)
                    .map(|(d, s)| (d.bits()[i], s[i])),
            )
        })
        .collect();
    let max_mi = per_round_mi.iter().copied().fold(0.0, f64::max);
    Ok(AuditReport {
        samples: d_samples.len(),
        per_round_mi,
        max_mi,
        threshold,
        structurally_independent: false,
        passed: max_mi <= threshold,
    })
}

/// Runs `runs` independent blocks of length `n` from `model`, applies
/// `prog` to each, and audits the resulting pairs.
#[allow(clippy::too_many_arguments)]
pub fn audit_program(
    prog: &FilterProgram,
    model: &SourceModel,
    settings: &SettingsDistribution,
    decomposition: &GDecomposition,
    n: usize,
    runs: usize,
    seed: u64,
    threshold: f64,
) -> Result<AuditReport> {
    let mut d_samples = Vec::with_capacity(runs);
    let mut settings_samples = Vec::with_capacity(runs);
    for run in 0..runs as u64 {
        let sampler =
            SettingsSampler::new(settings.clone(), derive_seed(seed, STREAM_SETTINGS, run));
        let block = sample_block(
            model,
            &sampler,
            decomposition,
            0,
            n,
            derive_seed(seed, STREAM_SOURCE, run),
        )?;
        d_samples.push(prog.apply(block.g_string())?);
        settings_samples.push(block.rounds().iter().map(|r| (r.x, r.y)).collect());
    }
    let mut report = independence_audit(&d_samples, &settings_samples, threshold)?;
    if prog.declared_settings_blind() {
        report.structurally_independent = true;
        report.passed = true;
    }
    Ok(report)
}
