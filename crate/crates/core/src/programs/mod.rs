//! Filter programs: settings-blind selectors mapping a `g` string to a
//! selection string `d`, plus substring extraction, an empirical
//! independence audit and a description-length estimate for `d`.

mod audit;
mod codec;

pub use audit::{
    audit_program, independence_audit, AuditReport, DEFAULT_MI_THRESHOLD, MIN_AUDIT_SAMPLES,
};
pub use codec::{decode, description_length, encode, DescriptionLength, Encoding, TAG_BITS};

use std::fmt;

use crate::error::{Error, Result};

/// Binary string `d`; position `i` is kept when `d[i]` is set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionString {
    bits: Vec<bool>,
}

impl SelectionString {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parses an ASCII `0`/`1` line. Surrounding whitespace is ignored.
    pub fn parse_ascii(s: &str) -> Result<Self> {
        parse_bits(s).map(Self::from_bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `N'`, the number of selected positions.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

impl fmt::Display for SelectionString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bits_to_ascii(&self.bits))
    }
}

pub fn bits_to_ascii(bits: &[bool]) -> String {
    bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Parse {
                line: 1,
                msg: format!("unexpected character {other:?} in bit string"),
            }),
        })
        .collect()
}

/// A program that turns an `N`-bit input into an `N`-bit selection string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterProgram {
    /// Outputs the same string whatever the input.
    SimpleFixed(SelectionString),
    /// Keeps 1-based round `i` when `i mod period == phase mod period`.
    Periodic { period: usize, phase: usize },
    /// Outputs `d = g`. Only for demonstrating a settings-dependent selector;
    /// requires an explicit opt-in and is never certified.
    CheatingEcho { unsafe_opt_in: bool },
}

impl FilterProgram {
    pub fn periodic(period: usize, phase: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidProgram("period must be at least 1".into()));
        }
        Ok(Self::Periodic { period, phase })
    }

    /// True for programs whose output is a function of `N` alone.
    pub fn declared_settings_blind(&self) -> bool {
        !matches!(self, Self::CheatingEcho { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SimpleFixed(_) => "simple-fixed",
            Self::Periodic { .. } => "periodic",
            Self::CheatingEcho { .. } => "cheating-echo",
        }
    }

    pub fn apply(&self, g: &[bool]) -> Result<SelectionString> {
        apply_program(self, g)
    }
}

impl fmt::Display for FilterProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SimpleFixed(d) => write!(f, "simple-fixed(N={}, N'={})", d.len(), d.count_ones()),
            Self::Periodic { period, phase } => {
                write!(f, "periodic(period={period}, phase={phase})")
            }
            Self::CheatingEcho { .. } => write!(f, "cheating-echo"),
        }
    }
}

pub fn apply_program(prog: &FilterProgram, g: &[bool]) -> Result<SelectionString> {
    if g.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            actual: 0,
        });
    }
    match prog {
        FilterProgram::SimpleFixed(d) => {
            if d.len() != g.len() {
                return Err(Error::InvalidProgram(format!(
                    "fixed string has length {}, input has length {}",
                    d.len(),
                    g.len()
                )));
            }
            Ok(d.clone())
        }
        FilterProgram::Periodic { period, phase } => {
            let phase = phase % period;
            Ok(SelectionString::from_bits(
                (1..=g.len()).map(|i| i % period == phase).collect(),
            ))
        }
        FilterProgram::CheatingEcho { unsafe_opt_in } => {
            if !unsafe_opt_in {
                return Err(Error::NotSettingsBlind);
            }
            Ok(SelectionString::from_bits(g.to_vec()))
        }
    }
}

/// `g'`: the entries of `g` at positions where `d` is set, in order.
pub fn extract_substring(g: &[bool], d: &SelectionString) -> Result<Vec<bool>> {
    if g.len() != d.len() {
        return Err(Error::LengthMismatch {
            expected: g.len(),
            actual: d.len(),
        });
    }
    Ok(g.iter()
        .zip(d.bits())
        .filter(|(_, keep)| **keep)
        .map(|(v, _)| *v)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        parse_bits(s).unwrap()
    }

    #[test]
    fn periodic_odd_selector() {
        let p = FilterProgram::periodic(2, 1).unwrap();
        assert_eq!(p.apply(&bits("110010")).unwrap().to_string(), "101010");
        assert_eq!(p.apply(&bits("000000")).unwrap().to_string(), "101010");
        let p3 = FilterProgram::periodic(3, 1).unwrap();
        assert_eq!(p3.apply(&bits("0000000")).unwrap().to_string(), "1001001");
        let p3 = FilterProgram::periodic(3, 3).unwrap();
        assert_eq!(p3.apply(&bits("0000000")).unwrap().to_string(), "0010010");
        assert!(FilterProgram::periodic(0, 0).is_err());
    }

    #[test]
    fn simple_fixed_is_constant() {
        let d = SelectionString::from_bits(vec![true; 8]);
        let p = FilterProgram::SimpleFixed(d.clone());
        assert_eq!(p.apply(&bits("01101001")).unwrap(), d);
        assert_eq!(p.apply(&bits("11111111")).unwrap(), d);
        assert!(matches!(
            p.apply(&bits("0110")),
            Err(Error::InvalidProgram(_))
        ));
    }

    #[test]
    fn cheating_echo_requires_opt_in() {
        let p = FilterProgram::CheatingEcho {
            unsafe_opt_in: true,
        };
        assert_eq!(p.apply(&bits("0110")).unwrap().to_string(), "0110");
        assert!(!p.declared_settings_blind());
        let p = FilterProgram::CheatingEcho {
            unsafe_opt_in: false,
        };
        assert!(matches!(
            p.apply(&bits("0110")),
            Err(Error::NotSettingsBlind)
        ));
    }

    #[test]
    fn empty_input_is_rejected() {
        let p = FilterProgram::periodic(2, 1).unwrap();
        assert!(p.apply(&[]).is_err());
    }

    #[test]
    fn extract_examples() {
        let d = SelectionString::parse_ascii("01011").unwrap();
        assert_eq!(extract_substring(&bits("10110"), &d).unwrap(), bits("010"));
        let ones = SelectionString::parse_ascii("11111").unwrap();
        assert_eq!(
            extract_substring(&bits("10110"), &ones).unwrap(),
            bits("10110")
        );
        let zeros = SelectionString::parse_ascii("00000").unwrap();
        assert!(extract_substring(&bits("10110"), &zeros)
            .unwrap()
            .is_empty());
        assert!(extract_substring(&bits("101"), &zeros).is_err());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(SelectionString::parse_ascii("01x1").is_err());
        assert_eq!(
            SelectionString::parse_ascii(" 0101\n")
                .unwrap()
                .count_ones(),
            2
        );
    }

    use proptest::prelude::*;

    fn blind_program() -> impl Strategy<Value = FilterProgram> {
        prop_oneof![
            (1usize..6, 0usize..6).prop_map(|(p, f)| FilterProgram::periodic(p, f).unwrap()),
            any::<u64>().prop_map(|seed| {
                FilterProgram::SimpleFixed(SelectionString::from_bits(
                    (0..40).map(|i| (seed >> (i % 64)) & 1 == 1).collect(),
                ))
            }),
        ]
    }

    proptest! {
        #[test]
        fn blind_output_ignores_g(
            prog in blind_program(),
            g1 in proptest::collection::vec(any::<bool>(), 40),
            g2 in proptest::collection::vec(any::<bool>(), 40),
        ) {
            prop_assert_eq!(prog.apply(&g1).unwrap().to_string(), prog.apply(&g2).unwrap().to_string());
        }

        #[test]
        fn substring_length_is_popcount(prog in blind_program(), g in proptest::collection::vec(any::<bool>(), 40)) {
            let d = prog.apply(&g).unwrap();
            prop_assert_eq!(extract_substring(&g, &d).unwrap().len(), d.count_ones());
        }
    }
}
