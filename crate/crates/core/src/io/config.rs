//! TOML scenario configuration.
//!
//! ```toml
//! seed = 2024                       # mandatory unless --seed is given
//!
//! [inequality]
//! preset = "chsh-game"              # or: file = "chsh_game.bell"
//!
//! [source]
//! kind = "periodic-quantum"         # iid-quantum | periodic-quantum | markov-quantum
//!                                   # | lhv-memory | correlated-settings-lhv
//! states = ["psi-plus", "psi-plus-complement"]
//! measurements = "tsirelson"        # tsirelson | pauli-zx | { alice = [[x,y,z], ...], bob = [...] }
//! # or: file = "source.toml" holding the same keys
//!
//! [program]
//! kind = "periodic"                 # simple-fixed | periodic | cheating-echo
//! period = 2
//! phase = 1
//!
//! [certification]
//! block_length = 1000
//! total_blocks = 100
//! sampled_blocks = 10               # default ceil(sqrt(total_blocks))
//! r0 = 0.05
//! epsilon = 0.02
//!
//! [output]
//! records = "records.txt"
//! report = "report.txt"
//! ```
//!
//! Relative paths are resolved against the directory of the file that
//! names them. Quantum states are given as a preset name (`psi-plus`,
//! `psi-plus-complement`, `maximally-mixed`), as `{ werner = w }`, or as
//! `{ entries = [[re, im], ...] }` with 16 row-major entries.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Deserialize;

use crate::bell::{BellInequality, LocalStrategy};
use crate::certification::{recommended_sample_size, CertificationConfig};
use crate::error::{Error, Result};
use crate::programs::{FilterProgram, SelectionString};
use crate::quantum::{
    optimal_correlated_strategy, CorrelatedLhv, DensityMatrix, LocalMeasurements,
    MeasurementSetting, MemoryStrategy, QuantumSource, SourceModel, StateSchedule, C64,
};
use crate::seed::rng_from_seed;

use super::inequality::{parse_inequality, RawInequality};

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    inequality: Option<InequalitySpec>,
    source: Option<toml::Table>,
    program: Option<toml::Table>,
    certification: Option<CertificationSpec>,
    output: Option<OutputSpec>,
    audit: Option<AuditSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InequalitySpec {
    preset: Option<String>,
    file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificationSpec {
    block_length: usize,
    total_blocks: Option<usize>,
    sampled_blocks: Option<usize>,
    r0: Option<f64>,
    epsilon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSpec {
    records: Option<PathBuf>,
    report: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditSpec {
    runs: Option<usize>,
    block_length: Option<usize>,
    threshold: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StateSpec {
    Preset(String),
    Werner { werner: f64 },
    Entries { entries: Vec<[f64; 2]> },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MeasurementSpec {
    Preset(String),
    Directions {
        alice: Vec<[f64; 3]>,
        bob: Vec<[f64; 3]>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum SourceSpec {
    IidQuantum {
        state: StateSpec,
        measurements: Option<MeasurementSpec>,
    },
    PeriodicQuantum {
        states: Vec<StateSpec>,
        measurements: Option<MeasurementSpec>,
    },
    MarkovQuantum {
        states: Vec<StateSpec>,
        transition: Vec<Vec<f64>>,
        initial: Vec<f64>,
        measurements: Option<MeasurementSpec>,
    },
    LhvMemory {
        alice: Vec<Vec<usize>>,
        bob: Vec<Vec<usize>>,
        next: Option<Vec<usize>>,
        initial_state: Option<usize>,
    },
    CorrelatedSettingsLhv {
        tilt: Option<f64>,
        lambda: Option<Vec<f64>>,
        settings_given_lambda: Option<Vec<Vec<f64>>>,
        alice: Option<Vec<Vec<usize>>>,
        bob: Option<Vec<Vec<usize>>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ProgramSpec {
    SimpleFixed {
        d: Option<String>,
        d_file: Option<PathBuf>,
        random_seed: Option<u64>,
    },
    Periodic {
        period: usize,
        phase: usize,
    },
    CheatingEcho {
        #[serde(rename = "unsafe", default)]
        unsafe_opt_in: bool,
    },
}

/// Parameters of the independence audit run by `certify` for programs
/// that are not declared settings-blind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditSettings {
    pub runs: usize,
    pub block_length: usize,
    pub threshold: f64,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            runs: 10_000,
            block_length: 8,
            threshold: crate::programs::DEFAULT_MI_THRESHOLD,
        }
    }
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub inequality: BellInequality,
    pub source: SourceModel,
    pub program: Option<FilterProgram>,
    pub block_length: usize,
    pub total_blocks: usize,
    pub sampled_blocks: Option<usize>,
    pub r0: Option<f64>,
    pub epsilon: Option<f64>,
    pub records_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    pub audit: AuditSettings,
}

impl ScenarioConfig {
    /// The certification parameters; `r0` and `epsilon` must be present.
    pub fn certification(&self) -> Result<CertificationConfig> {
        let c = CertificationConfig {
            block_length: self.block_length,
            total_blocks: self.total_blocks,
            sampled_blocks: self
                .sampled_blocks
                .unwrap_or_else(|| recommended_sample_size(self.total_blocks)),
            r0: self
                .r0
                .ok_or_else(|| cfg_err("certification.r0 is required"))?,
            epsilon: self
                .epsilon
                .ok_or_else(|| cfg_err("certification.epsilon is required"))?,
            master_seed: self.seed,
        };
        c.validate()?;
        Ok(c)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| cfg_err(format!("{what}: {e}")))
}

/// Follows a `file = "..."` indirection and deserializes the table.
fn load_table<T: serde::de::DeserializeOwned>(
    mut table: toml::Table,
    base: &Path,
    what: &str,
) -> Result<(T, PathBuf)> {
    let mut dir = base.to_path_buf();
    if let Some(file) = table.remove("file") {
        let file = file
            .as_str()
            .ok_or_else(|| cfg_err(format!("{what}.file must be a string")))?;
        if !table.is_empty() {
            return Err(cfg_err(format!(
                "{what}: `file` cannot be combined with inline keys"
            )));
        }
        let path = resolve(base, Path::new(file));
        table = parse_toml(&read_to_string(&path)?, &path.display().to_string())?;
        dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    }
    let value = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| cfg_err(format!("{what}: {e}")))?;
    Ok((value, dir))
}

pub fn load_inequality_file(path: &Path) -> Result<RawInequality> {
    parse_inequality(&read_to_string(path)?)
}

fn inequality_from(spec: Option<InequalitySpec>, base: &Path) -> Result<BellInequality> {
    match spec {
        None => Ok(BellInequality::chsh_game()),
        Some(InequalitySpec {
            preset: Some(p),
            file: None,
        }) => match p.as_str() {
            "chsh-game" => Ok(BellInequality::chsh_game()),
            other => Err(cfg_err(format!("unknown inequality preset {other:?}"))),
        },
        Some(InequalitySpec {
            preset: None,
            file: Some(f),
        }) => load_inequality_file(&resolve(base, &f))?.canonicalize(),
        Some(_) => Err(cfg_err(
            "inequality needs exactly one of `preset` or `file`",
        )),
    }
}

fn state_from(spec: StateSpec) -> Result<DensityMatrix> {
    match spec {
        StateSpec::Preset(name) => match name.as_str() {
            "psi-plus" => Ok(DensityMatrix::psi_plus()),
            "psi-plus-complement" => Ok(DensityMatrix::psi_plus_complement()),
            "maximally-mixed" => Ok(DensityMatrix::maximally_mixed()),
            other => Err(cfg_err(format!("unknown state preset {other:?}"))),
        },
        StateSpec::Werner { werner } => DensityMatrix::werner(werner),
        StateSpec::Entries { entries } => {
            let e: Vec<C64> = entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            DensityMatrix::from_entries(&e)
        }
    }
}

fn states_from(specs: Vec<StateSpec>) -> Result<Vec<DensityMatrix>> {
    specs.into_iter().map(state_from).collect()
}

fn measurements_from(spec: Option<MeasurementSpec>) -> Result<LocalMeasurements> {
    match spec {
        None => Ok(LocalMeasurements::tsirelson()),
        Some(MeasurementSpec::Preset(name)) => match name.as_str() {
            "tsirelson" => Ok(LocalMeasurements::tsirelson()),
            "pauli-zx" => Ok(LocalMeasurements::pauli_zx()),
            other => Err(cfg_err(format!("unknown measurement preset {other:?}"))),
        },
        Some(MeasurementSpec::Directions { alice, bob }) => Ok(LocalMeasurements {
            alice: alice
                .into_iter()
                .map(MeasurementSetting::along)
                .collect::<Result<_>>()?,
            bob: bob
                .into_iter()
                .map(MeasurementSetting::along)
                .collect::<Result<_>>()?,
        }),
    }
}

fn source_from(spec: SourceSpec) -> Result<SourceModel> {
    Ok(match spec {
        SourceSpec::IidQuantum {
            state,
            measurements,
        } => SourceModel::iid_quantum(state_from(state)?, measurements_from(measurements)?),
        SourceSpec::PeriodicQuantum {
            states,
            measurements,
        } => SourceModel::periodic_quantum(states_from(states)?, measurements_from(measurements)?),
        SourceSpec::MarkovQuantum {
            states,
            transition,
            initial,
            measurements,
        } => SourceModel::Quantum(QuantumSource {
            schedule: StateSchedule::Markov {
                states: states_from(states)?,
                transition,
                initial,
            },
            measurements: measurements_from(measurements)?,
        }),
        SourceSpec::LhvMemory {
            alice,
            bob,
            next,
            initial_state,
        } => {
            let n = alice.len();
            SourceModel::LhvMemory(MemoryStrategy {
                alice,
                bob,
                next: next.unwrap_or_else(|| (0..n).map(|s| (s + 1) % n.max(1)).collect()),
                initial: initial_state.unwrap_or(0),
            })
        }
        SourceSpec::CorrelatedSettingsLhv {
            tilt,
            lambda,
            settings_given_lambda,
            alice,
            bob,
        } => match (tilt, lambda, settings_given_lambda) {
            (Some(r), None, None) if alice.is_none() && bob.is_none() => {
                SourceModel::CorrelatedSettingsLhv(CorrelatedLhv::tilted_chsh(r)?)
            }
            (None, Some(lambda_dist), Some(settings_given_lambda)) => {
                let strategies = match (alice, bob) {
                    (Some(a), Some(b)) => {
                        if a.len() != b.len() {
                            return Err(cfg_err("alice and bob strategy lists differ in length"));
                        }
                        a.into_iter()
                            .zip(b)
                            .map(|(alice, bob)| LocalStrategy { alice, bob })
                            .collect()
                    }
                    (None, None) => optimal_correlated_strategy(&settings_given_lambda)?,
                    _ => return Err(cfg_err("give both alice and bob strategies or neither")),
                };
                SourceModel::CorrelatedSettingsLhv(CorrelatedLhv {
                    lambda_dist,
                    settings_given_lambda,
                    strategies,
                })
            }
            _ => return Err(cfg_err(
                "correlated-settings-lhv needs either `tilt` or `lambda` + `settings_given_lambda`",
            )),
        },
    })
}

fn program_from(spec: ProgramSpec, base: &Path, block_length: usize) -> Result<FilterProgram> {
    match spec {
        ProgramSpec::Periodic { period, phase } => FilterProgram::periodic(period, phase),
        ProgramSpec::CheatingEcho { unsafe_opt_in } => {
            Ok(FilterProgram::CheatingEcho { unsafe_opt_in })
        }
        ProgramSpec::SimpleFixed {
            d,
            d_file,
            random_seed,
        } => {
            let d = match (d, d_file, random_seed) {
                (Some(s), None, None) => SelectionString::parse_ascii(&s)?,
                (None, Some(f), None) => {
                    SelectionString::parse_ascii(&read_to_string(&resolve(base, &f))?)?
                }
                (None, None, Some(seed)) => random_selection(block_length, seed),
                _ => {
                    return Err(cfg_err(
                        "simple-fixed needs exactly one of `d`, `d_file`, `random_seed`",
                    ))
                }
            };
            Ok(FilterProgram::SimpleFixed(d))
        }
    }
}

/// A fair-coin selection string fixed before any round is produced.
pub fn random_selection(n: usize, seed: u64) -> SelectionString {
    let mut rng = rng_from_seed(seed);
    SelectionString::from_bits((0..n).map(|_| rng.random::<bool>()).collect())
}

/// Loads and resolves a scenario file. `seed_override` replaces the file's
/// seed; one of the two must be present.
pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ScenarioConfig> {
    let text = read_to_string(path)?;
    parse_config(
        &text,
        path.parent().unwrap_or(Path::new(".")),
        seed_override,
    )
}

pub fn parse_config(text: &str, base: &Path, seed_override: Option<u64>) -> Result<ScenarioConfig> {
    let file: ConfigFile = parse_toml(text, "config")?;
    let seed = seed_override
        .or(file.seed)
        .ok_or_else(|| cfg_err("a seed is mandatory (config `seed` or --seed)"))?;
    let inequality = inequality_from(file.inequality, base)?;
    let cert = file
        .certification
        .ok_or_else(|| cfg_err("missing [certification] section"))?;
    let (source_spec, _) = load_table::<SourceSpec>(
        file.source
            .ok_or_else(|| cfg_err("missing [source] section"))?,
        base,
        "source",
    )?;
    let source = source_from(source_spec)?;
    source.validate(&inequality.scenario(), inequality.settings())?;
    let program = match file.program {
        Some(t) => {
            let (spec, dir) = load_table::<ProgramSpec>(t, base, "program")?;
            Some(program_from(spec, &dir, cert.block_length)?)
        }
        None => None,
    };
    let output = file.output.unwrap_or_default();
    let mut audit = AuditSettings::default();
    if let Some(a) = file.audit {
        audit.runs = a.runs.unwrap_or(audit.runs);
        audit.block_length = a.block_length.unwrap_or(audit.block_length);
        audit.threshold = a.threshold.unwrap_or(audit.threshold);
    }
    if cert.block_length == 0 {
        return Err(cfg_err("certification.block_length must be at least 1"));
    }
    Ok(ScenarioConfig {
        seed,
        inequality,
        source,
        program,
        block_length: cert.block_length,
        total_blocks: cert.total_blocks.unwrap_or(0),
        sampled_blocks: cert.sampled_blocks,
        r0: cert.r0,
        epsilon: cert.epsilon,
        records_out: output.records.map(|p| resolve(base, &p)),
        report_out: output.report.map(|p| resolve(base, &p)),
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
seed = 7
[inequality]
preset = "chsh-game"
[source]
kind = "periodic-quantum"
states = ["psi-plus", "psi-plus-complement"]
measurements = "tsirelson"
[program]
kind = "periodic"
period = 2
phase = 1
[certification]
block_length = 1000
total_blocks = 100
r0 = 0.05
epsilon = 0.02
"#;

    #[test]
    fn parses_the_alternating_example() {
        let c = parse_config(EXAMPLE, Path::new("."), None).unwrap();
        assert_eq!(c.source, SourceModel::alternating_example());
        assert_eq!(c.program, Some(FilterProgram::periodic(2, 1).unwrap()));
        let cert = c.certification().unwrap();
        assert_eq!(cert.sampled_blocks, 10);
        assert_eq!(cert.master_seed, 7);
        assert_eq!(
            parse_config(EXAMPLE, Path::new("."), Some(9)).unwrap().seed,
            9
        );
    }

    #[test]
    fn seed_is_mandatory() {
        let text = EXAMPLE.replace("seed = 7", "");
        assert!(matches!(
            parse_config(&text, Path::new("."), None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = EXAMPLE.replace("phase = 1", "phase = 1\nphaze = 2");
        assert!(parse_config(&text, Path::new("."), None).is_err());
        let text = EXAMPLE.replace("kind = \"periodic\"", "kind = \"sometimes\"");
        assert!(parse_config(&text, Path::new("."), None).is_err());
    }

    #[test]
    fn explicit_states_and_directions() {
        let text = r#"
seed = 1
[source]
kind = "iid-quantum"
state = { entries = [[0.25,0],[0,0],[0,0],[0,0],[0,0],[0.25,0],[0,0],[0,0],[0,0],[0,0],[0.25,0],[0,0],[0,0],[0,0],[0,0],[0.25,0]] }
measurements = { alice = [[0,0,1],[1,0,0]], bob = [[1,0,-1],[-1,0,-1]] }
[certification]
block_length = 10
"#;
        let c = parse_config(text, Path::new("."), None).unwrap();
        assert_eq!(c.source.kind(), "iid-quantum");
        assert!(c.program.is_none());
        assert!(c.certification().is_err());
    }

    #[test]
    fn lhv_and_correlated_sources() {
        let text = r#"
seed = 1
[source]
kind = "lhv-memory"
alice = [[0, 0], [1, 0]]
bob = [[0, 1], [0, 0]]
[program]
kind = "simple-fixed"
random_seed = 5
[certification]
block_length = 12
"#;
        let c = parse_config(text, Path::new("."), None).unwrap();
        match &c.source {
            SourceModel::LhvMemory(m) => assert_eq!(m.next, vec![1, 0]),
            other => panic!("{other:?}"),
        }
        match c.program.unwrap() {
            FilterProgram::SimpleFixed(d) => assert_eq!(d, random_selection(12, 5)),
            other => panic!("{other:?}"),
        }
        let text = "seed = 1\n[source]\nkind = \"correlated-settings-lhv\"\ntilt = 0.15\n[certification]\nblock_length = 5\n";
        let c = parse_config(text, Path::new("."), None).unwrap();
        assert_eq!(c.source.kind(), "correlated-settings-lhv");
        let bad = "seed = 1\n[source]\nkind = \"correlated-settings-lhv\"\nlambda = [0.5, 0.5]\nsettings_given_lambda = [[1,0,0,0],[0,1,0,0]]\n[certification]\nblock_length = 5\n";
        assert!(parse_config(bad, Path::new("."), None).is_err());
    }

    #[test]
    fn source_file_indirection() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("src.toml"),
            "kind = \"iid-quantum\"\nstate = \"maximally-mixed\"\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("d.txt"), "1010\n").unwrap();
        let text = "seed = 3\n[source]\nfile = \"src.toml\"\n[program]\nkind = \"simple-fixed\"\nd_file = \"d.txt\"\n[certification]\nblock_length = 4\n";
        let c = parse_config(text, dir.path(), None).unwrap();
        assert_eq!(c.source.kind(), "iid-quantum");
        assert_eq!(
            c.program.unwrap(),
            FilterProgram::SimpleFixed(SelectionString::parse_ascii("1010").unwrap())
        );
        let missing =
            "seed = 3\n[source]\nfile = \"nope.toml\"\n[certification]\nblock_length = 4\n";
        assert!(parse_config(missing, dir.path(), None).is_err());
    }
}
