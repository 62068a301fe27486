//! Sources that emit round records.
//!
//! Each round runs in a fixed order: the source commits to its state for the
//! round (which quantum state, which memory state, which hidden variable),
//! then the settings are drawn from a separate random stream, then the
//! outcomes are produced. The source never sees the settings before it has
//! committed.
//!
//! Blocks are generated independently from `(start_round, seed)`: periodic
//! and memory schedules are positioned by the global round index, and a
//! Markov chain is started from its exact marginal at `start_round`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::bell::{
    chsh_wins, deterministic_strategies, validate_probability_vector, GDecomposition,
    LocalStrategy, RoundRecord, RunBlock, Scenario, SettingsDistribution,
};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

use super::state::{born_probability, DensityMatrix, LocalMeasurements};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Which quantum state is emitted in which round.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSchedule {
    Iid(DensityMatrix),
    /// Round `i` (0-based) emits `states[i % len]`.
    Periodic(Vec<DensityMatrix>),
    Markov {
        states: Vec<DensityMatrix>,
        /// Row-stochastic.
        transition: Vec<Vec<f64>>,
        initial: Vec<f64>,
    },
}

impl StateSchedule {
    fn states(&self) -> &[DensityMatrix] {
        match self {
            Self::Iid(s) => std::slice::from_ref(s),
            Self::Periodic(states) | Self::Markov { states, .. } => states,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSource {
    pub schedule: StateSchedule,
    pub measurements: LocalMeasurements,
}

/// Deterministic local strategy with a settings-independent internal state.
///
/// In internal state `s`, Alice answers `alice[s][x]`, Bob answers
/// `bob[s][y]`, and the state moves to `next[s]` after the round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryStrategy {
    pub alice: Vec<Vec<usize>>,
    pub bob: Vec<Vec<usize>>,
    pub next: Vec<usize>,
    pub initial: usize,
}

impl MemoryStrategy {
    /// Memoryless: one deterministic strategy every round.
    pub fn iid(strategy: &LocalStrategy) -> Self {
        Self {
            alice: vec![strategy.alice.clone()],
            bob: vec![strategy.bob.clone()],
            next: vec![0],
            initial: 0,
        }
    }

    pub fn num_states(&self) -> usize {
        self.next.len()
    }

    /// Internal state in force at global round `round`.
    pub fn state_at(&self, round: u64) -> usize {
        // Walk until a repeat, then jump around the cycle.
        let mut first_seen = vec![u64::MAX; self.num_states()];
        let mut s = self.initial;
        let mut t = 0u64;
        while t < round {
            if first_seen[s] != u64::MAX {
                let cycle = t - first_seen[s];
                let remaining = (round - t) % cycle;
                for _ in 0..remaining {
                    s = self.next[s];
                }
                return s;
            }
            first_seen[s] = t;
            s = self.next[s];
            t += 1;
        }
        s
    }
}

/// Hidden variable `lambda` correlated with the settings: draw `lambda`,
/// then `(x, y)` from `settings_given_lambda[lambda]`, then answer with
/// `strategies[lambda]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedLhv {
    pub lambda_dist: Vec<f64>,
    /// Row-major in `(x, y)` for each `lambda`.
    pub settings_given_lambda: Vec<Vec<f64>>,
    pub strategies: Vec<LocalStrategy>,
}

impl CorrelatedLhv {
    /// Four equiprobable hidden variables over CHSH settings; variable `k`
    /// gives probability `r` to setting pair `k` and `(1 - r)/3` to the
    /// others, so the settings marginal stays uniform. Strategies are the
    /// enumerated optimum for each variable.
    pub fn tilted_chsh(r: f64) -> Result<Self> {
        if !(0.0..=0.25).contains(&r) {
            return Err(Error::Domain {
                value: r,
                domain: "[0, 1/4]",
            });
        }
        let other = (1.0 - r) / 3.0;
        let settings_given_lambda: Vec<Vec<f64>> = (0..4)
            .map(|k| (0..4).map(|j| if j == k { r } else { other }).collect())
            .collect();
        let strategies = optimal_correlated_strategy(&settings_given_lambda)?;
        Ok(Self {
            lambda_dist: vec![0.25; 4],
            settings_given_lambda,
            strategies,
        })
    }

    /// `sum_lambda Pr(lambda) P(x, y | lambda)`.
    pub fn settings_marginal(&self) -> Vec<f64> {
        let n = self.settings_given_lambda.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for (w, row) in self.lambda_dist.iter().zip(&self.settings_given_lambda) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += w * p;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum SourceModel {
    Quantum(QuantumSource),
    LhvMemory(MemoryStrategy),
    CorrelatedSettingsLhv(CorrelatedLhv),
}

impl SourceModel {
    pub fn iid_quantum(state: DensityMatrix, measurements: LocalMeasurements) -> Self {
        Self::Quantum(QuantumSource {
            schedule: StateSchedule::Iid(state),
            measurements,
        })
    }

    pub fn periodic_quantum(states: Vec<DensityMatrix>, measurements: LocalMeasurements) -> Self {
        Self::Quantum(QuantumSource {
            schedule: StateSchedule::Periodic(states),
            measurements,
        })
    }

    /// Even 0-based rounds emit `psi+`, odd ones `(I - |psi+><psi+|)/3`,
    /// measured with the Tsirelson settings.
    pub fn alternating_example() -> Self {
        Self::periodic_quantum(
            vec![
                DensityMatrix::psi_plus(),
                DensityMatrix::psi_plus_complement(),
            ],
            LocalMeasurements::tsirelson(),
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Quantum(q) => match q.schedule {
                StateSchedule::Iid(_) => "iid-quantum",
                StateSchedule::Periodic(_) => "periodic-quantum",
                StateSchedule::Markov { .. } => "markov-quantum",
            },
            Self::LhvMemory(_) => "lhv-memory",
            Self::CorrelatedSettingsLhv(_) => "correlated-settings-lhv",
        }
    }

    /// Checks the model against a scenario and the settings distribution it
    /// will be sampled with.
    pub fn validate(&self, scenario: &Scenario, settings: &SettingsDistribution) -> Result<()> {
        match self {
            Self::Quantum(q) => validate_quantum(q, scenario),
            Self::LhvMemory(m) => validate_memory(m, scenario),
            Self::CorrelatedSettingsLhv(c) => validate_correlated(c, scenario, settings),
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidSource(msg.into())
}

fn validate_quantum(q: &QuantumSource, s: &Scenario) -> Result<()> {
    let m = &q.measurements;
    if m.alice.len() != s.num_settings_a || m.bob.len() != s.num_settings_b {
        return Err(bad(
            "measurement count does not match the scenario settings",
        ));
    }
    if m.alice.iter().any(|p| p.num_outcomes() != s.num_outcomes_a)
        || m.bob.iter().any(|p| p.num_outcomes() != s.num_outcomes_b)
    {
        return Err(bad("measurement outcome count does not match the scenario"));
    }
    match &q.schedule {
        StateSchedule::Iid(_) => {}
        StateSchedule::Periodic(states) => {
            if states.is_empty() {
                return Err(bad("periodic schedule has no states"));
            }
        }
        StateSchedule::Markov {
            states,
            transition,
            initial,
        } => {
            if states.is_empty() {
                return Err(bad("Markov schedule has no states"));
            }
            if transition.len() != states.len() || initial.len() != states.len() {
                return Err(bad("Markov tables do not match the number of states"));
            }
            for (i, row) in transition.iter().enumerate() {
                if row.len() != states.len() {
                    return Err(bad(format!("transition row {i} has wrong length")));
                }
                validate_probability_vector(row)
                    .map_err(|e| bad(format!("transition row {i}: {e}")))?;
            }
            validate_probability_vector(initial).map_err(|e| bad(format!("initial: {e}")))?;
        }
    }
    Ok(())
}

fn validate_strategy_table(
    table: &[Vec<usize>],
    settings: usize,
    outcomes: usize,
    who: &str,
) -> Result<()> {
    for row in table {
        if row.len() != settings || row.iter().any(|o| *o >= outcomes) {
            return Err(bad(format!("{who} table does not fit the scenario")));
        }
    }
    Ok(())
}

fn validate_memory(m: &MemoryStrategy, s: &Scenario) -> Result<()> {
    let n = m.num_states();
    if n == 0 || m.alice.len() != n || m.bob.len() != n {
        return Err(bad(
            "memory strategy tables disagree on the number of states",
        ));
    }
    if m.initial >= n || m.next.iter().any(|t| *t >= n) {
        return Err(bad("memory state index out of range"));
    }
    validate_strategy_table(&m.alice, s.num_settings_a, s.num_outcomes_a, "alice")?;
    validate_strategy_table(&m.bob, s.num_settings_b, s.num_outcomes_b, "bob")
}

fn validate_correlated(
    c: &CorrelatedLhv,
    s: &Scenario,
    settings: &SettingsDistribution,
) -> Result<()> {
    let n = c.lambda_dist.len();
    if n == 0 || c.settings_given_lambda.len() != n || c.strategies.len() != n {
        return Err(bad("hidden-variable tables disagree in length"));
    }
    validate_probability_vector(&c.lambda_dist).map_err(|e| bad(format!("lambda: {e}")))?;
    for (k, row) in c.settings_given_lambda.iter().enumerate() {
        if row.len() != s.num_setting_pairs() {
            return Err(bad(format!("settings row for lambda {k} has wrong length")));
        }
        validate_probability_vector(row).map_err(|e| bad(format!("lambda {k}: {e}")))?;
    }
    for st in &c.strategies {
        validate_strategy_table(
            std::slice::from_ref(&st.alice),
            s.num_settings_a,
            s.num_outcomes_a,
            "alice",
        )?;
        validate_strategy_table(
            std::slice::from_ref(&st.bob),
            s.num_settings_b,
            s.num_outcomes_b,
            "bob",
        )?;
    }
    for (m, p) in c.settings_marginal().iter().zip(settings.probs()) {
        if (m - p).abs() > STOCHASTIC_TOL {
            return Err(bad(format!(
                "settings marginal {m} differs from the inequality's P(x,y) = {p}"
            )));
        }
    }
    Ok(())
}

/// I.i.d. settings distribution with the seed of its random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingsSampler {
    pub distribution: SettingsDistribution,
    pub seed: u64,
}

impl SettingsSampler {
    pub fn new(distribution: SettingsDistribution, seed: u64) -> Self {
        Self { distribution, seed }
    }
}

fn weighted(p: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p).map_err(|e| bad(format!("invalid weights: {e}")))
}

/// Generates `n` rounds starting at global round `start_round`.
///
/// Settings come from `sampler.seed`; the source's own randomness from `seed`.
pub fn sample_rounds(
    model: &SourceModel,
    sampler: &SettingsSampler,
    start_round: u64,
    n: usize,
    seed: u64,
) -> Result<Vec<RoundRecord>> {
    let dist = &sampler.distribution;
    let nb = dist.num_settings_b();
    let settings = weighted(dist.probs())?;
    let mut settings_rng = rng_from_seed(sampler.seed);
    let mut source_rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n);

    match model {
        SourceModel::Quantum(q) => {
            let m = &q.measurements;
            let nob = m.bob.first().map_or(1, |b| b.num_outcomes());
            // outcome distributions per (state, x, y)
            let tables: Vec<Vec<Option<WeightedIndex<f64>>>> = q
                .schedule
                .states()
                .iter()
                .map(|rho| {
                    (0..dist.probs().len())
                        .map(|xy| {
                            let (x, y) = (xy / nb, xy % nb);
                            (dist.probs()[xy] > 0.0)
                                .then(|| weighted(&born_probability(rho, &m.alice[x], &m.bob[y])))
                                .transpose()
                        })
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;

            let mut markov = match &q.schedule {
                StateSchedule::Markov {
                    transition,
                    initial,
                    ..
                } => {
                    let start = markov_marginal(initial, transition, start_round);
                    let rows = transition
                        .iter()
                        .map(|r| weighted(r))
                        .collect::<Result<Vec<_>>>()?;
                    Some((weighted(&start)?.sample(&mut source_rng), rows))
                }
                _ => None,
            };
            for i in 0..n {
                let state = match &q.schedule {
                    StateSchedule::Iid(_) => 0,
                    StateSchedule::Periodic(states) => {
                        ((start_round + i as u64) % states.len() as u64) as usize
                    }
                    StateSchedule::Markov { .. } => {
                        let (current, rows) = markov.as_mut().expect("Markov state");
                        let s = *current;
                        *current = rows[s].sample(&mut source_rng);
                        s
                    }
                };
                let xy = settings.sample(&mut settings_rng);
                let ab = tables[state][xy]
                    .as_ref()
                    .expect("sampled settings have positive probability")
                    .sample(&mut source_rng);
                out.push(RoundRecord {
                    x: xy / nb,
                    y: xy % nb,
                    a: ab / nob,
                    b: ab % nob,
                });
            }
        }
        SourceModel::LhvMemory(mem) => {
            let mut state = mem.state_at(start_round);
            for _ in 0..n {
                let xy = settings.sample(&mut settings_rng);
                let (x, y) = (xy / nb, xy % nb);
                out.push(RoundRecord {
                    x,
                    y,
                    a: mem.alice[state][x],
                    b: mem.bob[state][y],
                });
                state = mem.next[state];
            }
        }
        SourceModel::CorrelatedSettingsLhv(c) => {
            let lambda = weighted(&c.lambda_dist)?;
            let per_lambda = c
                .settings_given_lambda
                .iter()
                .map(|row| weighted(row))
                .collect::<Result<Vec<_>>>()?;
            for _ in 0..n {
                let l = lambda.sample(&mut source_rng);
                let xy = per_lambda[l].sample(&mut settings_rng);
                let (x, y) = (xy / nb, xy % nb);
                let st = &c.strategies[l];
                out.push(RoundRecord {
                    x,
                    y,
                    a: st.alice[x],
                    b: st.bob[y],
                });
            }
        }
    }
    Ok(out)
}

/// [`sample_rounds`] followed by the G-string evaluation of each round.
pub fn sample_block(
    model: &SourceModel,
    sampler: &SettingsSampler,
    decomposition: &GDecomposition,
    start_round: u64,
    n: usize,
    seed: u64,
) -> Result<RunBlock> {
    RunBlock::new(
        sample_rounds(model, sampler, start_round, n, seed)?,
        decomposition,
    )
}

fn markov_marginal(initial: &[f64], transition: &[Vec<f64>], steps: u64) -> Vec<f64> {
    let mut p = initial.to_vec();
    for _ in 0..steps {
        let mut q = vec![0.0; p.len()];
        for (i, pi) in p.iter().enumerate() {
            for (j, t) in transition[i].iter().enumerate() {
                q[j] += pi * t;
            }
        }
        if q.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15) {
            return q;
        }
        p = q;
    }
    p
}

/// CHSH-L value `sum_{x,y} P(x,y|lambda) [strategy wins at (x,y)]`.
pub fn chsh_l_value(strategy: &LocalStrategy, settings: &[f64]) -> f64 {
    let mut total = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            if chsh_wins(x, y, strategy.alice[x], strategy.bob[y]) {
                total += settings[2 * x + y];
            }
        }
    }
    total
}

/// For each hidden variable, the deterministic CHSH strategy maximizing
/// the CHSH-L value, found by enumerating all 16 strategies.
///
/// The optimum loses only at the least likely setting pair, giving
/// `1 - min P(x, y | lambda)`.
pub fn optimal_correlated_strategy(per_lambda: &[Vec<f64>]) -> Result<Vec<LocalStrategy>> {
    let all = deterministic_strategies(&Scenario::chsh());
    per_lambda
        .iter()
        .enumerate()
        .map(|(k, p)| {
            if p.len() != 4 {
                return Err(bad(format!("lambda {k}: expected 4 setting pairs")));
            }
            validate_probability_vector(p).map_err(|e| bad(format!("lambda {k}: {e}")))?;
            let mut best = &all[0];
            let mut best_value = f64::NEG_INFINITY;
            for st in &all {
                let v = chsh_l_value(st, p);
                if v > best_value {
                    best_value = v;
                    best = st;
                }
            }
            Ok(best.clone())
        })
        .collect()
}

/// Fraction of rounds won in the CHSH game.
pub fn chsh_success_rate(rounds: &[RoundRecord]) -> f64 {
    let wins = rounds
        .iter()
        .filter(|r| chsh_wins(r.x, r.y, r.a, r.b))
        .count();
    wins as f64 / rounds.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::BellInequality;
    use rand::Rng;

    fn uniform_sampler(seed: u64) -> SettingsSampler {
        SettingsSampler::new(SettingsDistribution::uniform(&Scenario::chsh()), seed)
    }

    #[test]
    fn alternating_source_rates() {
        let model = SourceModel::alternating_example();
        let rounds = sample_rounds(&model, &uniform_sampler(1), 0, 10_000, 2).unwrap();
        let full = chsh_success_rate(&rounds);
        let entangled: Vec<_> = rounds.iter().step_by(2).copied().collect();
        let odd = chsh_success_rate(&entangled);
        assert!((full - (0.5 + 2f64.sqrt() / 12.0)).abs() < 0.02, "{full}");
        assert!(
            (odd - (0.5 + 1.0 / (2.0 * 2f64.sqrt()))).abs() < 0.02,
            "{odd}"
        );
    }

    #[test]
    fn maximally_mixed_is_coin_flip() {
        let model = SourceModel::iid_quantum(
            DensityMatrix::maximally_mixed(),
            LocalMeasurements::tsirelson(),
        );
        let rounds = sample_rounds(&model, &uniform_sampler(5), 0, 10_000, 6).unwrap();
        assert!((chsh_success_rate(&rounds) - 0.5).abs() < 0.02);
    }

    #[test]
    fn identical_seeds_identical_blocks() {
        let model = SourceModel::alternating_example();
        let a = sample_rounds(&model, &uniform_sampler(9), 17, 500, 10).unwrap();
        let b = sample_rounds(&model, &uniform_sampler(9), 17, 500, 10).unwrap();
        assert_eq!(a, b);
        let c = sample_rounds(&model, &uniform_sampler(9), 17, 500, 11).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn settings_do_not_depend_on_the_source() {
        let a = sample_rounds(
            &SourceModel::alternating_example(),
            &uniform_sampler(3),
            0,
            300,
            1,
        )
        .unwrap();
        let mem = MemoryStrategy::iid(&LocalStrategy {
            alice: vec![0, 0],
            bob: vec![0, 0],
        });
        let b = sample_rounds(
            &SourceModel::LhvMemory(mem),
            &uniform_sampler(3),
            0,
            300,
            99,
        )
        .unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| (p.x, p.y) == (q.x, q.y)));
    }

    #[test]
    fn memory_state_positioning() {
        let mem = MemoryStrategy {
            alice: vec![vec![0, 0]; 4],
            bob: vec![vec![0, 0]; 4],
            next: vec![1, 2, 3, 1],
            initial: 0,
        };
        let mut s = 0;
        for t in 0..50u64 {
            assert_eq!(mem.state_at(t), s, "t = {t}");
            s = mem.next[s];
        }
        assert_eq!(
            mem.state_at(1_000_000_000),
            mem.state_at(1_000_000_000 % 3 + 3)
        );
    }

    #[test]
    fn memory_blocks_continue_the_stream() {
        let mem = MemoryStrategy {
            alice: vec![vec![0, 1], vec![1, 1], vec![0, 0]],
            bob: vec![vec![0, 1], vec![1, 0], vec![1, 1]],
            next: vec![1, 2, 0],
            initial: 0,
        };
        let model = SourceModel::LhvMemory(mem.clone());
        let rounds = sample_rounds(&model, &uniform_sampler(4), 7, 30, 0).unwrap();
        for (i, r) in rounds.iter().enumerate() {
            let s = mem.state_at(7 + i as u64);
            assert_eq!((r.a, r.b), (mem.alice[s][r.x], mem.bob[s][r.y]));
        }
    }

    #[test]
    fn markov_source_runs_and_validates() {
        let model = SourceModel::Quantum(QuantumSource {
            schedule: StateSchedule::Markov {
                states: vec![DensityMatrix::psi_plus(), DensityMatrix::maximally_mixed()],
                transition: vec![vec![0.9, 0.1], vec![0.2, 0.8]],
                initial: vec![1.0, 0.0],
            },
            measurements: LocalMeasurements::tsirelson(),
        });
        let s = Scenario::chsh();
        model
            .validate(&s, &SettingsDistribution::uniform(&s))
            .unwrap();
        let rounds = sample_rounds(&model, &uniform_sampler(1), 1000, 20_000, 2).unwrap();
        // stationary weight of psi+ is 2/3
        let expected = (2.0 / 3.0) * 0.853_553 + (1.0 / 3.0) * 0.5;
        assert!((chsh_success_rate(&rounds) - expected).abs() < 0.02);

        let broken = SourceModel::Quantum(QuantumSource {
            schedule: StateSchedule::Markov {
                states: vec![DensityMatrix::psi_plus()],
                transition: vec![vec![0.9]],
                initial: vec![1.0],
            },
            measurements: LocalMeasurements::tsirelson(),
        });
        assert!(broken
            .validate(&s, &SettingsDistribution::uniform(&s))
            .is_err());
    }

    #[test]
    fn markov_marginal_converges() {
        let p = markov_marginal(&[1.0, 0.0], &[vec![0.9, 0.1], vec![0.2, 0.8]], 10_000);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_strategy_examples() {
        let st = optimal_correlated_strategy(&[vec![0.1, 0.3, 0.3, 0.3]]).unwrap();
        assert!((chsh_l_value(&st[0], &[0.1, 0.3, 0.3, 0.3]) - 0.9).abs() < 1e-12);
        assert!(!chsh_wins(0, 0, st[0].alice[0], st[0].bob[0]));
        let st = optimal_correlated_strategy(&[vec![0.25; 4]]).unwrap();
        assert!((chsh_l_value(&st[0], &[0.25; 4]) - 0.75).abs() < 1e-12);
        let p = vec![0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let st = optimal_correlated_strategy(std::slice::from_ref(&p)).unwrap();
        assert!((chsh_l_value(&st[0], &p) - 1.0).abs() < 1e-12);
        assert!(optimal_correlated_strategy(&[vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn no_strategy_beats_one_minus_min() {
        let mut rng = rng_from_seed(21);
        for _ in 0..200 {
            let w: Vec<f64> = (0..4).map(|_| -rng.random::<f64>().ln()).collect();
            let z: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|v| v / z).collect();
            let bound = 1.0 - p.iter().copied().fold(f64::INFINITY, f64::min);
            for st in deterministic_strategies(&Scenario::chsh()) {
                assert!(chsh_l_value(&st, &p) <= bound + 1e-12);
            }
            let best = &optimal_correlated_strategy(std::slice::from_ref(&p)).unwrap()[0];
            assert!((chsh_l_value(best, &p) - bound).abs() < 1e-12);
        }
    }

    #[test]
    fn correlated_marginal_is_enforced() {
        let c = CorrelatedLhv::tilted_chsh(0.15).unwrap();
        let s = Scenario::chsh();
        let u = SettingsDistribution::uniform(&s);
        SourceModel::CorrelatedSettingsLhv(c.clone())
            .validate(&s, &u)
            .unwrap();
        let mut skewed = c;
        skewed.lambda_dist = vec![0.4, 0.2, 0.2, 0.2];
        assert!(SourceModel::CorrelatedSettingsLhv(skewed)
            .validate(&s, &u)
            .is_err());
    }

    #[test]
    fn correlated_settings_marginal_matches() {
        let c = CorrelatedLhv::tilted_chsh(0.15).unwrap();
        let model = SourceModel::CorrelatedSettingsLhv(c);
        let n = 100_000;
        let rounds = sample_rounds(&model, &uniform_sampler(8), 0, n, 9).unwrap();
        let mut counts = [0usize; 4];
        for r in &rounds {
            counts[2 * r.x + r.y] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!(
                (c as f64 - n as f64 * 0.25).abs() <= 3.0 * sigma,
                "{counts:?}"
            );
        }
        assert!((chsh_success_rate(&rounds) - 0.85).abs() < 0.01);
    }

    #[test]
    fn sample_block_evaluates_g() {
        let game = BellInequality::chsh_game();
        let d = crate::bell::decompose(&game).unwrap();
        let block = sample_block(
            &SourceModel::alternating_example(),
            &uniform_sampler(1),
            &d,
            0,
            200,
            2,
        )
        .unwrap();
        for (r, g) in block.rounds().iter().zip(block.g_string()) {
            assert_eq!(*g, chsh_wins(r.x, r.y, r.a, r.b));
        }
    }
}
