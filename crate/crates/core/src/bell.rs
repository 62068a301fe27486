//! Linear bipartite Bell inequalities in G-string form.
//!
//! An inequality is a table `alpha(x, y, a, b)` over settings `x, y` and
//! outcomes `a, b`, a local bound `R` and a settings distribution `P(x, y)`:
//!
//! ```text
//! sum_{x,y,a,b} alpha(x,y,a,b) P(a,b|x,y) <= R
//! ```
//!
//! Once every coefficient is nonnegative it factors as
//! `alpha = P(x,y) * C(x,y,a,b) * G(x,y,a,b)` with `G` binary, and a run of
//! `N` rounds turns the inequality into `sum_i C_i G_i <= R N`.

use crate::error::{Error, Result};
use crate::programs::SelectionString;

/// Slack used by every "exceeds the local bound" comparison.
pub const VIOLATION_SLACK: f64 = 1e-9;

/// Largest number of combined deterministic strategies the brute-force oracle enumerates.
pub const MAX_ENUMERATED_STRATEGIES: u128 = 10_000_000;

const DISTRIBUTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub num_settings_a: usize,
    pub num_settings_b: usize,
    pub num_outcomes_a: usize,
    pub num_outcomes_b: usize,
}

impl Scenario {
    pub fn new(
        num_settings_a: usize,
        num_settings_b: usize,
        num_outcomes_a: usize,
        num_outcomes_b: usize,
    ) -> Result<Self> {
        if [
            num_settings_a,
            num_settings_b,
            num_outcomes_a,
            num_outcomes_b,
        ]
        .contains(&0)
        {
            return Err(Error::DimensionMismatch(
                "scenario sizes must all be at least 1".into(),
            ));
        }
        Ok(Self {
            num_settings_a,
            num_settings_b,
            num_outcomes_a,
            num_outcomes_b,
        })
    }

    /// Two settings and two outcomes per party.
    pub const fn chsh() -> Self {
        Self {
            num_settings_a: 2,
            num_settings_b: 2,
            num_outcomes_a: 2,
            num_outcomes_b: 2,
        }
    }

    /// Whether every count is at least 2.
    pub fn is_nontrivial(&self) -> bool {
        self.num_settings_a >= 2
            && self.num_settings_b >= 2
            && self.num_outcomes_a >= 2
            && self.num_outcomes_b >= 2
    }

    pub fn num_setting_pairs(&self) -> usize {
        self.num_settings_a * self.num_settings_b
    }

    pub fn num_outcome_pairs(&self) -> usize {
        self.num_outcomes_a * self.num_outcomes_b
    }

    pub fn num_events(&self) -> usize {
        self.num_setting_pairs() * self.num_outcome_pairs()
    }

    pub fn setting_index(&self, x: usize, y: usize) -> usize {
        x * self.num_settings_b + y
    }

    pub fn event_index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        (self.setting_index(x, y) * self.num_outcomes_a + a) * self.num_outcomes_b + b
    }

    pub fn contains(&self, r: &RoundRecord) -> bool {
        r.x < self.num_settings_a
            && r.y < self.num_settings_b
            && r.a < self.num_outcomes_a
            && r.b < self.num_outcomes_b
    }

    /// All `(x, y, a, b)` tuples in table order.
    pub fn events(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        let s = *self;
        (0..s.num_settings_a).flat_map(move |x| {
            (0..s.num_settings_b).flat_map(move |y| {
                (0..s.num_outcomes_a)
                    .flat_map(move |a| (0..s.num_outcomes_b).map(move |b| (x, y, a, b)))
            })
        })
    }
}

/// A real table indexed by `(x, y, a, b)`.
///
/// Used for coefficient tables as well as behaviors `P(a,b|x,y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTable {
    scenario: Scenario,
    values: Vec<f64>,
}

impl EventTable {
    pub fn zeros(scenario: Scenario) -> Self {
        Self {
            scenario,
            values: vec![0.0; scenario.num_events()],
        }
    }

    pub fn from_values(scenario: Scenario, values: Vec<f64>) -> Result<Self> {
        if values.len() != scenario.num_events() {
            return Err(Error::DimensionMismatch(format!(
                "table has {} entries, scenario needs {}",
                values.len(),
                scenario.num_events()
            )));
        }
        Ok(Self { scenario, values })
    }

    pub fn from_fn(
        scenario: Scenario,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let values = scenario
            .events()
            .map(|(x, y, a, b)| f(x, y, a, b))
            .collect();
        Self { scenario, values }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.values[self.scenario.event_index(x, y, a, b)]
    }

    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, value: f64) {
        let i = self.scenario.event_index(x, y, a, b);
        self.values[i] = value;
    }

    pub fn add(&mut self, x: usize, y: usize, a: usize, b: usize, value: f64) {
        let i = self.scenario.event_index(x, y, a, b);
        self.values[i] += value;
    }
}

/// Settings distribution `P(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingsDistribution {
    num_settings_a: usize,
    num_settings_b: usize,
    probs: Vec<f64>,
}

impl SettingsDistribution {
    pub fn uniform(scenario: &Scenario) -> Self {
        let n = scenario.num_setting_pairs();
        Self {
            num_settings_a: scenario.num_settings_a,
            num_settings_b: scenario.num_settings_b,
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Row-major in `(x, y)`.
    pub fn new(scenario: &Scenario, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != scenario.num_setting_pairs() {
            return Err(Error::DimensionMismatch(format!(
                "settings table has {} entries, scenario needs {}",
                probs.len(),
                scenario.num_setting_pairs()
            )));
        }
        validate_probability_vector(&probs).map_err(Error::InvalidDistribution)?;
        Ok(Self {
            num_settings_a: scenario.num_settings_a,
            num_settings_b: scenario.num_settings_b,
            probs,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.num_settings_b + y]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_settings_a(&self) -> usize {
        self.num_settings_a
    }

    pub fn num_settings_b(&self) -> usize {
        self.num_settings_b
    }

    fn matches(&self, scenario: &Scenario) -> bool {
        self.num_settings_a == scenario.num_settings_a
            && self.num_settings_b == scenario.num_settings_b
    }
}

pub(crate) fn validate_probability_vector(p: &[f64]) -> std::result::Result<(), String> {
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(format!("entry {v} is not a probability"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(format!("entries sum to {total}, expected 1"));
    }
    Ok(())
}

/// A Bell inequality with nonnegative coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BellInequality {
    alpha: EventTable,
    bound: f64,
    settings: SettingsDistribution,
}

impl BellInequality {
    /// Builds an inequality that is already in canonical form.
    pub fn new(alpha: EventTable, bound: f64, settings: SettingsDistribution) -> Result<Self> {
        if !settings.matches(&alpha.scenario) {
            return Err(Error::DimensionMismatch(
                "settings distribution does not match the scenario".into(),
            ));
        }
        if let Some(v) = alpha.values.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient {v} is negative; canonicalize first"
            )));
        }
        Ok(Self {
            alpha,
            bound,
            settings,
        })
    }

    /// CHSH as a game: win when `a XOR b = x AND y`, uniform settings,
    /// `alpha = 1/4` on winning events and local bound `3/4`.
    pub fn chsh_game() -> Self {
        let s = Scenario::chsh();
        let alpha = EventTable::from_fn(
            s,
            |x, y, a, b| {
                if chsh_wins(x, y, a, b) {
                    0.25
                } else {
                    0.0
                }
            },
        );
        Self {
            alpha,
            bound: 0.75,
            settings: SettingsDistribution::uniform(&s),
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.alpha.scenario
    }

    pub fn alpha(&self) -> &EventTable {
        &self.alpha
    }

    /// The local realistic bound `R`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn settings(&self) -> &SettingsDistribution {
        &self.settings
    }

    /// `sum alpha(x,y,a,b) P(a,b|x,y)` for a behavior table.
    pub fn lhs(&self, behavior: &EventTable) -> f64 {
        table_dot(&self.alpha, behavior)
    }
}

/// Winning condition of the CHSH game.
pub fn chsh_wins(x: usize, y: usize, a: usize, b: usize) -> bool {
    (a ^ b) == (x & y)
}

fn table_dot(lhs: &EventTable, rhs: &EventTable) -> f64 {
    lhs.values.iter().zip(&rhs.values).map(|(p, q)| p * q).sum()
}

/// LHS of an inequality with arbitrary-sign coefficients.
pub fn raw_lhs(raw_alpha: &EventTable, behavior: &EventTable) -> f64 {
    table_dot(raw_alpha, behavior)
}

/// Rewrites an arbitrary-sign inequality into nonnegative form.
///
/// A negative term `-|c| P(a,b|x,y)` becomes `|c| (sum over the other outcome
/// pairs at (x,y)) - |c|`, and `|c|` is added to the bound. The gap
/// `LHS - R` is unchanged for every behavior.
pub fn canonicalize(
    raw_alpha: &EventTable,
    raw_bound: f64,
    settings: SettingsDistribution,
) -> Result<BellInequality> {
    let s = raw_alpha.scenario;
    if !settings.matches(&s) {
        return Err(Error::DimensionMismatch(
            "settings distribution does not match the scenario".into(),
        ));
    }
    if let Some(v) = raw_alpha.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::DimensionMismatch(format!(
            "coefficient {v} is not finite"
        )));
    }
    let mut alpha = EventTable::zeros(s);
    let mut bound = raw_bound;
    for (x, y, a, b) in s.events() {
        let c = raw_alpha.get(x, y, a, b);
        if c >= 0.0 {
            alpha.add(x, y, a, b, c);
            continue;
        }
        let m = -c;
        bound += m;
        for a2 in 0..s.num_outcomes_a {
            for b2 in 0..s.num_outcomes_b {
                if (a2, b2) != (a, b) {
                    alpha.add(x, y, a2, b2, m);
                }
            }
        }
    }
    Ok(BellInequality {
        alpha,
        bound,
        settings,
    })
}

/// The `(C, G)` factor pair with `alpha = P(x,y) C G`.
#[derive(Debug, Clone, PartialEq)]
pub struct GDecomposition {
    c: EventTable,
    g: Vec<bool>,
}

impl GDecomposition {
    pub fn scenario(&self) -> Scenario {
        self.c.scenario
    }

    pub fn c_table(&self) -> &EventTable {
        &self.c
    }

    pub fn c(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.c.get(x, y, a, b)
    }

    pub fn g(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        self.g[self.c.scenario.event_index(x, y, a, b)]
    }

    /// `P(x,y) C G` for every event.
    pub fn recombine(&self, settings: &SettingsDistribution) -> EventTable {
        EventTable::from_fn(self.scenario(), |x, y, a, b| {
            if self.g(x, y, a, b) {
                settings.get(x, y) * self.c(x, y, a, b)
            } else {
                0.0
            }
        })
    }
}

/// Factors a canonical inequality: `G = [alpha > 0]`, `C = alpha / P(x,y)`
/// where `G = 1` and `C = 0` elsewhere.
pub fn decompose(ineq: &BellInequality) -> Result<GDecomposition> {
    let s = ineq.scenario();
    let mut c = EventTable::zeros(s);
    let mut g = vec![false; s.num_events()];
    for (x, y, a, b) in s.events() {
        let alpha = ineq.alpha.get(x, y, a, b);
        if alpha <= 0.0 {
            continue;
        }
        let p = ineq.settings.get(x, y);
        if p <= 0.0 {
            return Err(Error::ZeroProbabilitySetting { x, y });
        }
        c.set(x, y, a, b, alpha / p);
        g[s.event_index(x, y, a, b)] = true;
    }
    Ok(GDecomposition { c, g })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoundRecord {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
}

/// An ordered run of rounds together with its `g` and `c` strings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunBlock {
    rounds: Vec<RoundRecord>,
    g: Vec<bool>,
    c: Vec<f64>,
}

impl RunBlock {
    pub fn new(rounds: Vec<RoundRecord>, decomposition: &GDecomposition) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::LengthMismatch {
                expected: 1,
                actual: 0,
            });
        }
        let s = decomposition.scenario();
        let mut g = Vec::with_capacity(rounds.len());
        let mut c = Vec::with_capacity(rounds.len());
        for (i, r) in rounds.iter().enumerate() {
            if !s.contains(r) {
                return Err(Error::RoundOutOfRange(format!("round {i}: {r:?}")));
            }
            let gi = decomposition.g(r.x, r.y, r.a, r.b);
            g.push(gi);
            c.push(if gi {
                decomposition.c(r.x, r.y, r.a, r.b)
            } else {
                0.0
            });
        }
        Ok(Self { rounds, g, c })
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn g_string(&self) -> &[bool] {
        &self.g
    }

    pub fn c_string(&self) -> &[f64] {
        &self.c
    }

    /// Appends `other` after `self`.
    pub fn concat(&self, other: &RunBlock) -> RunBlock {
        let mut out = self.clone();
        out.rounds.extend_from_slice(&other.rounds);
        out.g.extend_from_slice(&other.g);
        out.c.extend_from_slice(&other.c);
        out
    }
}

/// `sum_i C_i G_i` over the whole block.
pub fn empirical_lhs(block: &RunBlock) -> f64 {
    block
        .g
        .iter()
        .zip(&block.c)
        .filter(|(g, _)| **g)
        .map(|(_, c)| c)
        .sum()
}

/// `sum_{i in I} C_i G_i` over the rounds where `d` is 1, with `N' = |I|`.
pub fn subset_lhs(block: &RunBlock, d: &SelectionString) -> Result<(f64, usize)> {
    if d.len() != block.len() {
        return Err(Error::LengthMismatch {
            expected: block.len(),
            actual: d.len(),
        });
    }
    let mut lhs = 0.0;
    let mut selected = 0;
    for (i, keep) in d.bits().iter().enumerate() {
        if *keep {
            selected += 1;
            if block.g[i] {
                lhs += block.c[i];
            }
        }
    }
    if selected == 0 {
        return Err(Error::EmptySelection);
    }
    Ok((lhs, selected))
}

/// `lhs > R n` with a small slack against float-equality verdicts.
pub fn exceeds_local_bound(lhs: f64, bound: f64, n: usize) -> bool {
    lhs > bound * n as f64 + VIOLATION_SLACK
}

/// A deterministic local strategy: outcome `alice[x]` and `bob[y]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl LocalStrategy {
    /// LHS of `ineq` on the deterministic behavior of this strategy.
    pub fn value(&self, ineq: &BellInequality) -> f64 {
        let s = ineq.scenario();
        let mut total = 0.0;
        for x in 0..s.num_settings_a {
            for y in 0..s.num_settings_b {
                total += ineq.alpha.get(x, y, self.alice[x], self.bob[y]);
            }
        }
        total
    }

    /// The behavior table `[a = alice[x]] [b = bob[y]]`.
    pub fn behavior(&self, scenario: Scenario) -> EventTable {
        EventTable::from_fn(scenario, |x, y, a, b| {
            if self.alice[x] == a && self.bob[y] == b {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Every function `settings -> outcomes`, as outcome vectors in odometer order.
pub fn single_party_strategies(num_settings: usize, num_outcomes: usize) -> Vec<Vec<usize>> {
    let count = num_outcomes.pow(num_settings as u32);
    (0..count)
        .map(|mut code| {
            (0..num_settings)
                .map(|_| {
                    let o = code % num_outcomes;
                    code /= num_outcomes;
                    o
                })
                .collect()
        })
        .collect()
}

/// All deterministic strategies of the scenario.
pub fn deterministic_strategies(scenario: &Scenario) -> Vec<LocalStrategy> {
    let alice = single_party_strategies(scenario.num_settings_a, scenario.num_outcomes_a);
    let bob = single_party_strategies(scenario.num_settings_b, scenario.num_outcomes_b);
    alice
        .iter()
        .flat_map(|a| {
            bob.iter().map(move |b| LocalStrategy {
                alice: a.clone(),
                bob: b.clone(),
            })
        })
        .collect()
}

fn combined_strategy_count(s: &Scenario) -> u128 {
    let a = (s.num_outcomes_a as u128).checked_pow(s.num_settings_a as u32);
    let b = (s.num_outcomes_b as u128).checked_pow(s.num_settings_b as u32);
    match (a, b) {
        (Some(a), Some(b)) => a.saturating_mul(b),
        _ => u128::MAX,
    }
}

/// Tight local bound: the maximum LHS over deterministic local strategies.
///
/// Alice's strategies are enumerated; for each, Bob's best response is
/// taken setting by setting, which attains the same maximum as the full
/// product enumeration.
pub fn lhv_bound_bruteforce(ineq: &BellInequality) -> Result<f64> {
    let s = ineq.scenario();
    let count = combined_strategy_count(&s);
    if count > MAX_ENUMERATED_STRATEGIES {
        return Err(Error::ScenarioTooLarge(count));
    }
    let mut best = f64::NEG_INFINITY;
    for alice in single_party_strategies(s.num_settings_a, s.num_outcomes_a) {
        let mut total = 0.0;
        for y in 0..s.num_settings_b {
            let best_b = (0..s.num_outcomes_b)
                .map(|b| {
                    (0..s.num_settings_a)
                        .map(|x| ineq.alpha.get(x, y, alice[x], b))
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            total += best_b;
        }
        best = best.max(total);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chsh_correlator_form() -> EventTable {
        // E00 + E01 + E10 - E11 with E = P(a = b) - P(a != b).
        EventTable::from_fn(Scenario::chsh(), |x, y, a, b| {
            let parity = if a == b { 1.0 } else { -1.0 };
            let sign = if x == 1 && y == 1 { -1.0 } else { 1.0 };
            parity * sign
        })
    }

    fn random_behavior(s: Scenario, rng: &mut ChaCha8Rng) -> EventTable {
        let mut t = EventTable::zeros(s);
        for x in 0..s.num_settings_a {
            for y in 0..s.num_settings_b {
                let w: Vec<f64> = (0..s.num_outcome_pairs())
                    .map(|_| -rng.random::<f64>().ln())
                    .collect();
                let z: f64 = w.iter().sum();
                for a in 0..s.num_outcomes_a {
                    for b in 0..s.num_outcomes_b {
                        t.set(x, y, a, b, w[a * s.num_outcomes_b + b] / z);
                    }
                }
            }
        }
        t
    }

    #[test]
    fn canonical_chsh_preserves_gap() {
        let raw = chsh_correlator_form();
        let s = Scenario::chsh();
        let ineq = canonicalize(&raw, 2.0, SettingsDistribution::uniform(&s)).unwrap();
        assert!(ineq.alpha().values().iter().all(|v| *v >= 0.0));
        assert_eq!(ineq.bound(), 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = random_behavior(s, &mut rng);
            let raw_gap = raw_lhs(&raw, &p) - 2.0;
            let gap = ineq.lhs(&p) - ineq.bound();
            assert!((raw_gap - gap).abs() <= 1e-10);
            assert_eq!(raw_gap > 0.0, gap > 0.0);
        }
    }

    #[test]
    fn canonicalize_is_identity_on_nonnegative() {
        let game = BellInequality::chsh_game();
        let out = canonicalize(game.alpha(), 0.75, game.settings().clone()).unwrap();
        assert_eq!(out, game);
    }

    #[test]
    fn canonicalize_zero_table() {
        let s = Scenario::chsh();
        let out = canonicalize(
            &EventTable::zeros(s),
            0.0,
            SettingsDistribution::uniform(&s),
        )
        .unwrap();
        assert!(out.alpha().values().iter().all(|v| *v == 0.0));
        assert_eq!(out.bound(), 0.0);
    }

    #[test]
    fn canonicalize_rejects_bad_inputs() {
        let s = Scenario::chsh();
        assert!(EventTable::from_values(s, vec![0.0; 3]).is_err());
        assert!(SettingsDistribution::new(&s, vec![0.5, 0.5, 0.5, 0.5]).is_err());
        assert!(SettingsDistribution::new(&s, vec![1.5, -0.5, 0.0, 0.0]).is_err());
        let other = Scenario::new(3, 2, 2, 2).unwrap();
        let err = canonicalize(
            &EventTable::zeros(s),
            0.0,
            SettingsDistribution::uniform(&other),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn chsh_game_decomposition() {
        let game = BellInequality::chsh_game();
        let d = decompose(&game).unwrap();
        for (x, y, a, b) in Scenario::chsh().events() {
            let win = chsh_wins(x, y, a, b);
            assert_eq!(d.g(x, y, a, b), win);
            assert_eq!(d.c(x, y, a, b), if win { 1.0 } else { 0.0 });
        }
        let back = d.recombine(game.settings());
        for (u, v) in back.values().iter().zip(game.alpha().values()) {
            assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn decompose_edge_cases() {
        let s = Scenario::chsh();
        let u = SettingsDistribution::uniform(&s);
        let zero = BellInequality::new(EventTable::zeros(s), 0.0, u.clone()).unwrap();
        let d = decompose(&zero).unwrap();
        assert!(s
            .events()
            .all(|(x, y, a, b)| !d.g(x, y, a, b) && d.c(x, y, a, b) == 0.0));

        let full = BellInequality::new(EventTable::from_fn(s, |_, _, _, _| 0.25), 1.0, u).unwrap();
        let d = decompose(&full).unwrap();
        assert!(s
            .events()
            .all(|(x, y, a, b)| d.g(x, y, a, b) && d.c(x, y, a, b) == 1.0));

        let skew = SettingsDistribution::new(&s, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let bad = BellInequality::new(EventTable::from_fn(s, |_, _, _, _| 0.1), 1.0, skew).unwrap();
        assert!(matches!(
            decompose(&bad),
            Err(Error::ZeroProbabilitySetting { x: 1, y: 0 })
        ));
    }

    fn chsh_block(wins: impl Fn(usize) -> bool, n: usize) -> RunBlock {
        let d = decompose(&BellInequality::chsh_game()).unwrap();
        let rounds = (0..n)
            .map(|i| {
                let (x, y) = (i % 2, (i / 2) % 2);
                let a = 0;
                let b = if wins(i) { x & y } else { 1 - (x & y) };
                RoundRecord { x, y, a, b }
            })
            .collect();
        RunBlock::new(rounds, &d).unwrap()
    }

    #[test]
    fn empirical_lhs_examples() {
        let all = chsh_block(|_| true, 100);
        assert_eq!(empirical_lhs(&all), 100.0);
        assert!(exceeds_local_bound(100.0, 0.75, 100));
        let none = chsh_block(|_| false, 100);
        assert_eq!(empirical_lhs(&none), 0.0);
        let alt = chsh_block(|i| i % 2 == 0, 100);
        assert_eq!(empirical_lhs(&alt), 50.0);
        assert!(!exceeds_local_bound(50.0, 0.75, 100));
        assert!(!exceeds_local_bound(75.0, 0.75, 100));
    }

    #[test]
    fn subset_lhs_examples() {
        // wins at 1-based odd positions = 0-based even indices
        let block = chsh_block(|i| i % 2 == 0, 100);
        let d = SelectionString::from_bits((0..100).map(|i| i % 2 == 0).collect());
        let (lhs, n) = subset_lhs(&block, &d).unwrap();
        assert_eq!((lhs, n), (50.0, 50));
        assert!(exceeds_local_bound(lhs, 0.75, n));

        let ones = SelectionString::from_bits(vec![true; 100]);
        assert_eq!(
            subset_lhs(&block, &ones).unwrap(),
            (empirical_lhs(&block), 100)
        );

        let zeros = SelectionString::from_bits(vec![false; 100]);
        assert!(matches!(
            subset_lhs(&block, &zeros),
            Err(Error::EmptySelection)
        ));
        let short = SelectionString::from_bits(vec![true; 3]);
        assert!(matches!(
            subset_lhs(&block, &short),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn run_block_rejects_out_of_range_rounds() {
        let d = decompose(&BellInequality::chsh_game()).unwrap();
        let r = RoundRecord {
            x: 2,
            y: 0,
            a: 0,
            b: 0,
        };
        assert!(RunBlock::new(vec![r], &d).is_err());
        assert!(RunBlock::new(vec![], &d).is_err());
    }

    #[test]
    fn empirical_lhs_is_additive() {
        let a = chsh_block(|i| i % 3 == 0, 37);
        let b = chsh_block(|i| i % 5 != 0, 61);
        let joined = a.concat(&b);
        assert_eq!(joined.len(), 98);
        assert!((empirical_lhs(&joined) - empirical_lhs(&a) - empirical_lhs(&b)).abs() < 1e-12);
    }

    #[test]
    fn oracle_examples() {
        assert!((lhv_bound_bruteforce(&BellInequality::chsh_game()).unwrap() - 0.75).abs() < 1e-12);
        let s = Scenario::chsh();
        let zero =
            BellInequality::new(EventTable::zeros(s), 0.0, SettingsDistribution::uniform(&s))
                .unwrap();
        assert_eq!(lhv_bound_bruteforce(&zero).unwrap(), 0.0);
        let one = Scenario::new(1, 1, 1, 1).unwrap();
        let trivial = BellInequality::new(
            EventTable::from_values(one, vec![1.0]).unwrap(),
            1.0,
            SettingsDistribution::uniform(&one),
        )
        .unwrap();
        assert_eq!(lhv_bound_bruteforce(&trivial).unwrap(), 1.0);
    }

    #[test]
    fn oracle_refuses_huge_scenarios() {
        let s = Scenario::new(12, 12, 4, 4).unwrap();
        let ineq =
            BellInequality::new(EventTable::zeros(s), 0.0, SettingsDistribution::uniform(&s))
                .unwrap();
        assert!(matches!(
            lhv_bound_bruteforce(&ineq),
            Err(Error::ScenarioTooLarge(_))
        ));
    }

    #[test]
    fn oracle_matches_full_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Scenario::new(3, 2, 2, 3).unwrap();
        for _ in 0..20 {
            let alpha = EventTable::from_fn(s, |_, _, _, _| rng.random::<f64>());
            let ineq = BellInequality::new(alpha, 0.0, SettingsDistribution::uniform(&s)).unwrap();
            let full = deterministic_strategies(&s)
                .iter()
                .map(|st| st.value(&ineq))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((lhv_bound_bruteforce(&ineq).unwrap() - full).abs() < 1e-12);
        }
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn decompose_then_recombine_reproduces_alpha(
            dims in (1usize..4, 1usize..4, 1usize..4, 1usize..4),
            seed in any::<u64>(),
        ) {
            let s = Scenario::new(dims.0, dims.1, dims.2, dims.3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..s.num_setting_pairs()).map(|_| rng.random::<f64>() + 0.01).collect();
            let z: f64 = w.iter().sum();
            let settings = SettingsDistribution::new(&s, w.iter().map(|v| v / z).collect()).unwrap();
            let alpha = EventTable::from_fn(s, |_, _, _, _| {
                if rng.random::<bool>() { 10.0 * rng.random::<f64>() } else { 0.0 }
            });
            let ineq = BellInequality::new(alpha, 1.0, settings).unwrap();
            let back = decompose(&ineq).unwrap().recombine(ineq.settings());
            for (u, v) in back.values().iter().zip(ineq.alpha().values()) {
                prop_assert!((u - v).abs() <= 1e-12);
            }
        }
    }
}
