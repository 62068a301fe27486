//! Block-sampling certification of a source filtered by a program.
//!
//! 1. An initial block of `N` rounds is filtered by the program; the run is
//!    aborted unless the kept rounds reach `(R + r0) N'`.
//! 2. `K` further blocks are produced and `k` of them are chosen uniformly
//!    without replacement.
//! 3. The run is accepted when the fraction `k_good / k` of chosen blocks
//!    that reach `(R + r0) N'` is at least `R / (R + r0) + eps`.
//!
//! Acceptance guarantees, via the sampling bound, that the untested blocks
//! taken together still exceed the local bound once filtered.

use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::bell::{decompose, subset_lhs, BellInequality, GDecomposition, RunBlock};
use crate::bounds::corrected_bound;
use crate::error::{Error, Result};
use crate::programs::{description_length, FilterProgram};
use crate::quantum::{sample_block, SettingsSampler, SourceModel};
use crate::seed::{derive_seed, rng_from_seed, STREAM_SAMPLING, STREAM_SETTINGS, STREAM_SOURCE};

/// Tolerance on the fraction `k_good / k` when comparing with the threshold.
pub const FRACTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificationConfig {
    pub block_length: usize,
    pub total_blocks: usize,
    pub sampled_blocks: usize,
    pub r0: f64,
    pub epsilon: f64,
    pub master_seed: u64,
}

impl CertificationConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.block_length == 0 {
            return fail("block length must be at least 1");
        }
        if self.sampled_blocks == 0 || self.sampled_blocks >= self.total_blocks {
            return fail("need 1 <= k < K (at least one untested block)");
        }
        if !self.r0.is_finite() || self.r0 <= 0.0 {
            return fail("r0 must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail("epsilon must lie in (0, 1)");
        }
        Ok(())
    }
}

/// `ceil(sqrt(K))`.
pub fn recommended_sample_size(total_blocks: usize) -> usize {
    (total_blocks as f64).sqrt().ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockVerdict {
    /// 0 is the initial block; sampled blocks are numbered from 1.
    pub index: usize,
    pub lhs: f64,
    pub n_prime: usize,
    /// `lhs >= (R + r0) N'`.
    pub violated: bool,
    /// The program selected no rounds.
    pub degenerate: bool,
}

/// Filters `block` with `prog` and checks `sum_{i in I} C_i G_i >= (R + r0) N'`.
pub fn test_block(
    block: &RunBlock,
    prog: &FilterProgram,
    ineq: &BellInequality,
    r0: f64,
) -> Result<BlockVerdict> {
    let d = prog.apply(block.g_string())?;
    match subset_lhs(block, &d) {
        Ok((lhs, n_prime)) => {
            let target = (ineq.bound() + r0) * n_prime as f64;
            Ok(BlockVerdict {
                index: 0,
                lhs,
                n_prime,
                violated: lhs >= target - crate::bell::VIOLATION_SLACK,
                degenerate: false,
            })
        }
        Err(Error::EmptySelection) => Ok(BlockVerdict {
            index: 0,
            lhs: 0.0,
            n_prime: 0,
            violated: false,
            degenerate: true,
        }),
        Err(e) => Err(e),
    }
}

/// `R / (R + r0) + eps`; an error when it reaches 1.
pub fn acceptance_threshold(bound: f64, r0: f64, epsilon: f64) -> Result<f64> {
    if bound.is_nan() || bound <= 0.0 || r0.is_nan() || r0 <= 0.0 {
        return Err(Error::InvalidConfig(
            "threshold needs R > 0 and r0 > 0".into(),
        ));
    }
    let t = bound / (bound + r0) + epsilon;
    if t >= 1.0 {
        return Err(Error::InfeasibleThreshold(t));
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UntestedBound {
    /// `(k_good/k - eps)(K - k)(R + r0) N'`.
    pub lower_bound_lhs: f64,
    /// `(K - k) N' R`.
    pub required_lhs: f64,
    pub holds: bool,
}

/// Lower bound on the filtered LHS of the `K - k` untested blocks, counting
/// non-good blocks as contributing zero.
pub fn untested_bound(
    k_good: usize,
    k: usize,
    epsilon: f64,
    total_blocks: usize,
    bound: f64,
    r0: f64,
    n_prime: usize,
) -> Result<UntestedBound> {
    if k == 0 || k_good > k || k > total_blocks {
        return Err(Error::InvalidConfig(format!(
            "need 0 <= k_good <= k <= K, got k_good = {k_good}, k = {k}, K = {total_blocks}"
        )));
    }
    let untested = (total_blocks - k) as f64;
    let n = n_prime as f64;
    let fraction = k_good as f64 / k as f64;
    let lower_bound_lhs = (fraction - epsilon) * untested * (bound + r0) * n;
    let required_lhs = untested * n * bound;
    // lower - required = untested (R + r0) N' (fraction - threshold)
    let scale = untested * (bound + r0) * n;
    Ok(UntestedBound {
        lower_bound_lhs,
        required_lhs,
        holds: lower_bound_lhs - required_lhs >= -FRACTION_TOL * scale,
    })
}

/// `1 - exp(-2 k eps^2)`.
pub fn confidence(k: usize, epsilon: f64) -> f64 {
    1.0 - (-2.0 * k as f64 * epsilon * epsilon).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub config: CertificationConfig,
    pub program: String,
    pub local_bound: f64,
    pub initial: BlockVerdict,
    /// Initial block failed; no further blocks were examined.
    pub aborted: bool,
    pub sampled: Vec<BlockVerdict>,
    pub k_good: usize,
    pub threshold: f64,
    pub untested: Option<UntestedBound>,
    /// Observed filtered LHS and `N'` summed over the untested blocks.
    pub untested_observed: Option<(f64, usize)>,
    pub accepted: bool,
    pub confidence: f64,
    /// Fixed-codec description length `M` of the initial block's selection.
    pub description_bits: u64,
    /// `B(M / N') N'` for the CHSH game; absent for other inequalities or
    /// an empty selection.
    pub complexity_bound: Option<f64>,
}

impl CertificationReport {
    pub fn exit_code(&self) -> i32 {
        if self.accepted {
            0
        } else {
            2
        }
    }
}

impl fmt::Display for CertificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(f, "#nonloc-report v1")?;
        writeln!(f, "block_length={}", c.block_length)?;
        writeln!(f, "total_blocks={}", c.total_blocks)?;
        writeln!(f, "sampled_blocks={}", c.sampled_blocks)?;
        writeln!(f, "r0={}", c.r0)?;
        writeln!(f, "epsilon={}", c.epsilon)?;
        writeln!(f, "master_seed={}", c.master_seed)?;
        writeln!(f, "program={}", self.program)?;
        writeln!(f, "local_bound={}", self.local_bound)?;
        write_verdict(f, "initial", &self.initial)?;
        writeln!(f, "aborted={}", self.aborted)?;
        for v in &self.sampled {
            write_verdict(f, "sampled", v)?;
        }
        writeln!(f, "k_good={}", self.k_good)?;
        writeln!(f, "threshold={:.12}", self.threshold)?;
        if let Some(u) = &self.untested {
            writeln!(f, "untested_lower_bound={:.6}", u.lower_bound_lhs)?;
            writeln!(f, "untested_required={:.6}", u.required_lhs)?;
            writeln!(f, "untested_bound_holds={}", u.holds)?;
        }
        if let Some((lhs, n)) = self.untested_observed {
            writeln!(f, "untested_observed_lhs={lhs:.6}")?;
            writeln!(f, "untested_observed_n_prime={n}")?;
        }
        writeln!(f, "confidence={:.12}", self.confidence)?;
        writeln!(
            f,
            "# M is a fixed-codec description length, an upper bound on the algorithmic complexity of d"
        )?;
        writeln!(f, "description_bits={}", self.description_bits)?;
        if let Some(b) = self.complexity_bound {
            writeln!(f, "complexity_corrected_bound={b:.6}")?;
        }
        writeln!(
            f,
            "verdict={}",
            if self.accepted { "accept" } else { "reject" }
        )
    }
}

fn write_verdict(f: &mut fmt::Formatter<'_>, key: &str, v: &BlockVerdict) -> fmt::Result {
    writeln!(
        f,
        "{key}=index:{} lhs:{:.6} n_prime:{} violated:{} degenerate:{}",
        v.index, v.lhs, v.n_prime, v.violated, v.degenerate
    )
}

fn certify_with<F>(
    block: F,
    prog: &FilterProgram,
    ineq: &BellInequality,
    config: &CertificationConfig,
) -> Result<CertificationReport>
where
    F: Fn(usize) -> Result<RunBlock> + Sync,
{
    config.validate()?;
    if !prog.declared_settings_blind() {
        return Err(Error::NotSettingsBlind);
    }
    let threshold = acceptance_threshold(ineq.bound(), config.r0, config.epsilon)?;
    let k = config.sampled_blocks;
    let total = config.total_blocks;

    let first = block(0)?;
    let initial = test_block(&first, prog, ineq, config.r0)?;
    let description_bits = description_length(&prog.apply(first.g_string())?).bits;
    let complexity_bound = if initial.n_prime > 0 && *ineq == BellInequality::chsh_game() {
        Some(corrected_bound(description_bits, initial.n_prime)?)
    } else {
        None
    };
    let mut report = CertificationReport {
        config: *config,
        program: prog.to_string(),
        local_bound: ineq.bound(),
        initial,
        aborted: !initial.violated,
        sampled: Vec::new(),
        k_good: 0,
        threshold,
        untested: None,
        untested_observed: None,
        accepted: false,
        confidence: confidence(k, config.epsilon),
        description_bits,
        complexity_bound,
    };
    if report.aborted {
        return Ok(report);
    }

    let verdicts: Vec<BlockVerdict> = (1..=total)
        .into_par_iter()
        .map(|j| {
            let mut v = test_block(&block(j)?, prog, ineq, config.r0)?;
            v.index = j;
            Ok(v)
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (1..=total).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(
        config.master_seed,
        STREAM_SAMPLING,
        0,
    )));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();

    report.sampled = chosen.iter().map(|j| verdicts[j - 1]).collect();
    report.k_good = report.sampled.iter().filter(|v| v.violated).count();
    let mut observed = (0.0, 0usize);
    for v in &verdicts {
        if chosen.binary_search(&v.index).is_err() {
            observed.0 += v.lhs;
            observed.1 += v.n_prime;
        }
    }
    report.untested_observed = Some(observed);
    report.untested = Some(untested_bound(
        report.k_good,
        k,
        config.epsilon,
        total,
        ineq.bound(),
        config.r0,
        initial.n_prime,
    )?);
    report.accepted = report.k_good as f64 / k as f64 >= threshold - FRACTION_TOL;
    Ok(report)
}

/// Block `j` of a certification run: rounds `[j N, (j + 1) N)`, with
/// settings and source seeds split from the master seed by block index.
pub fn generate_block(
    source: &SourceModel,
    ineq: &BellInequality,
    decomposition: &GDecomposition,
    config: &CertificationConfig,
    j: usize,
) -> Result<RunBlock> {
    let n = config.block_length;
    let sampler = SettingsSampler::new(
        ineq.settings().clone(),
        derive_seed(config.master_seed, STREAM_SETTINGS, j as u64),
    );
    sample_block(
        source,
        &sampler,
        decomposition,
        (j * n) as u64,
        n,
        derive_seed(config.master_seed, STREAM_SOURCE, j as u64),
    )
}

/// Simulates the source and runs the full procedure.
///
/// Blocks beyond the initial one are only generated when it passes.
pub fn run_certification(
    source: &SourceModel,
    prog: &FilterProgram,
    ineq: &BellInequality,
    config: &CertificationConfig,
) -> Result<CertificationReport> {
    config.validate()?;
    source.validate(&ineq.scenario(), ineq.settings())?;
    let decomposition = decompose(ineq)?;
    certify_with(
        |j| generate_block(source, ineq, &decomposition, config, j),
        prog,
        ineq,
        config,
    )
}

/// Runs the procedure on recorded blocks: `blocks[0]` is the initial block
/// and `blocks[1..=K]` the rest.
pub fn certify_blocks(
    blocks: &[RunBlock],
    prog: &FilterProgram,
    ineq: &BellInequality,
    config: &CertificationConfig,
) -> Result<CertificationReport> {
    if blocks.len() != config.total_blocks + 1 {
        return Err(Error::LengthMismatch {
            expected: config.total_blocks + 1,
            actual: blocks.len(),
        });
    }
    if let Some(b) = blocks.iter().find(|b| b.len() != config.block_length) {
        return Err(Error::LengthMismatch {
            expected: config.block_length,
            actual: b.len(),
        });
    }
    certify_with(|j| Ok(blocks[j].clone()), prog, ineq, config)
}
