//! Local-realistic CHSH bounds when the hidden variable may be correlated
//! with the settings.
//!
//! With `r = min_{x,y} P(x,y|lambda)` the best local strategy loses only on
//! the least likely setting pair, so the per-`lambda` bound is `B = 1 - r`.
//! The entropy of the settings given `lambda` is at most
//!
//! ```text
//! f(r) = -r log2 r - (1 - r) log2((1 - r) / 3)
//! ```
//!
//! so the source holds at least `I = 2 - f(r)` bits about the settings, and
//! conversely a source with `I` bits is held to `B(I) = 1 - f^{-1}(2 - I)`.
//! A selection string with description length `M` over `N'` kept rounds
//! gives `sum C_i G_i <= B(M / N') N'`.
//!
//! All logarithms are base 2.

use std::f64::consts::LN_2;

/// log2(3).
pub const LOG2_3: f64 = 1.584_962_500_721_156_2;

use crate::error::{Error, Result};

/// `2 - log2 3`: beyond this much information the bound is vacuous.
pub const MAX_INFORMATION: f64 = 2.0 - LOG2_3;

/// Quantum CHSH game value `1/2 + 1/(2 sqrt 2)`.
pub const QUANTUM_CHSH_VALUE: f64 = 0.5 + 0.5 * std::f64::consts::FRAC_1_SQRT_2;

/// Classical CHSH game value.
pub const CLASSICAL_CHSH_VALUE: f64 = 0.75;

const BISECTION_STEPS: usize = 60;

fn check_r(r: f64) -> Result<()> {
    if (0.0..=0.25).contains(&r) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: r,
            domain: "[0, 1/4]",
        })
    }
}

/// `f(r)` in bits, with `f(0) = log2 3`.
pub fn f_of_r(r: f64) -> Result<f64> {
    check_r(r)?;
    if r == 0.0 {
        return Ok(LOG2_3);
    }
    Ok(-r * r.log2() - (1.0 - r) * ((1.0 - r) / 3.0).log2())
}

/// `2 - f(r)`, the least information about the settings a hidden variable
/// needs to push the local bound up to `1 - r`.
///
/// Evaluated as the divergence from the uniform distribution so that it
/// stays accurate near `r = 1/4`, where `f` is flat.
pub fn mutual_info_lower_bound(r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(divergence(r))
}

fn divergence(r: f64) -> f64 {
    let u = 1.0 - 4.0 * r;
    let head = if r == 0.0 { 0.0 } else { r * (-u).ln_1p() };
    let tail = (1.0 - r) * (u / 3.0).ln_1p();
    ((head + tail) / LN_2).max(0.0)
}

/// Result of inverting `f`; `clamped` is set when `y` was outside
/// `[log2 3, 2]` and was moved to the nearest endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FInverse {
    pub r: f64,
    pub clamped: bool,
}

/// Bisection for `f(r) = y` on `[0, 1/4]`.
pub fn f_inverse(y: f64) -> FInverse {
    if y.is_nan() {
        return FInverse {
            r: f64::NAN,
            clamped: true,
        };
    }
    if y >= 2.0 {
        return FInverse {
            r: 0.25,
            clamped: y > 2.0,
        };
    }
    if y <= LOG2_3 {
        return FInverse {
            r: 0.0,
            clamped: y < LOG2_3,
        };
    }
    let r = bisect(0.0, 0.25, |r| f_of_r(r).expect("in domain") < y);
    FInverse { r, clamped: false }
}

/// Largest-precision bisection: `below(lo)` holds, `below(hi)` does not.
fn bisect(mut lo: f64, mut hi: f64, below: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `r` with `2 - f(r) = info`, for `0 <= info <= MAX_INFORMATION`.
fn information_inverse(info: f64) -> f64 {
    if info <= 0.0 {
        return 0.25;
    }
    if info >= MAX_INFORMATION {
        return 0.0;
    }
    // divergence decreases from MAX_INFORMATION at 0 to 0 at 1/4
    bisect(0.0, 0.25, |r| divergence(r) > info)
}

/// `B(I) = 1 - f^{-1}(2 - I)`, equal to 1 once `I >= 2 - log2 3`.
pub fn b_of_i(info: f64) -> Result<f64> {
    if info.is_nan() || info < 0.0 {
        return Err(Error::Domain {
            value: info,
            domain: "[0, inf)",
        });
    }
    Ok(1.0 - information_inverse(info))
}

/// Information about the settings at which the local bound reaches the
/// quantum CHSH value, about 0.046 bits.
pub fn i_crit() -> f64 {
    divergence(1.0 - QUANTUM_CHSH_VALUE)
}

/// `B(M / N') N'`: the local bound on `sum C_i G_i` over `N'` rounds kept by
/// a selection string of description length `M` bits.
pub fn corrected_bound(m_bits: u64, n_prime: usize) -> Result<f64> {
    if n_prime == 0 {
        return Err(Error::EmptySelection);
    }
    Ok(b_of_i(m_bits as f64 / n_prime as f64)? * n_prime as f64)
}

/// Midpoint concavity of `B` over adjacent pairs of a sorted grid in
/// `[0, 2 - log2 3]`.
pub fn concavity_check(grid: &[f64]) -> Result<bool> {
    if let Some(v) = grid.iter().find(|v| !(0.0..=MAX_INFORMATION).contains(*v)) {
        return Err(Error::Domain {
            value: *v,
            domain: "[0, 2 - log2 3]",
        });
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("concavity grid must be sorted".into()));
    }
    for w in grid.windows(2) {
        let mid = b_of_i(0.5 * (w[0] + w[1]))?;
        let chord = 0.5 * (b_of_i(w[0])? + b_of_i(w[1])?);
        if mid < chord - 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every quantity of the bound calculus for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationBoundLedger {
    /// Least setting-pair probability given the hidden variable.
    pub r: f64,
    pub f_of_r: f64,
    /// Bits of information about the settings.
    pub information: f64,
    pub b_of_i: f64,
    pub m_bits: Option<u64>,
    pub n_prime: Option<usize>,
    pub corrected_bound: Option<f64>,
    /// The information exceeded `2 - log2 3` and `r`, `f` sit at the endpoint.
    pub clamped: bool,
}

impl CorrelationBoundLedger {
    pub fn from_r(r: f64) -> Result<Self> {
        let information = mutual_info_lower_bound(r)?;
        Ok(Self {
            r,
            f_of_r: f_of_r(r)?,
            information,
            b_of_i: b_of_i(information)?,
            m_bits: None,
            n_prime: None,
            corrected_bound: None,
            clamped: false,
        })
    }

    pub fn from_information(info: f64) -> Result<Self> {
        let b = b_of_i(info)?;
        let clamped = info > MAX_INFORMATION;
        let r = information_inverse(info.min(MAX_INFORMATION));
        Ok(Self {
            r,
            f_of_r: if clamped { LOG2_3 } else { 2.0 - info },
            information: info,
            b_of_i: b,
            m_bits: None,
            n_prime: None,
            corrected_bound: None,
            clamped,
        })
    }

    pub fn from_complexity(m_bits: u64, n_prime: usize) -> Result<Self> {
        if n_prime == 0 {
            return Err(Error::EmptySelection);
        }
        let mut ledger = Self::from_information(m_bits as f64 / n_prime as f64)?;
        ledger.m_bits = Some(m_bits);
        ledger.n_prime = Some(n_prime);
        ledger.corrected_bound = Some(corrected_bound(m_bits, n_prime)?);
        Ok(ledger)
    }

    /// Ordered `(key, value)` pairs.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("r", format!("{:.12}", self.r)),
            ("f_of_r", format!("{:.12}", self.f_of_r)),
            ("I", format!("{:.12}", self.information)),
            ("B_of_I", format!("{:.12}", self.b_of_i)),
            ("I_crit", format!("{:.12}", i_crit())),
            ("clamped", self.clamped.to_string()),
        ];
        if let (Some(m), Some(n), Some(c)) = (self.m_bits, self.n_prime, self.corrected_bound) {
            out.push(("M", m.to_string()));
            out.push(("N_prime", n.to_string()));
            out.push(("corrected_bound", format!("{c:.6}")));
            out.push((
                "quantum_bound",
                format!("{:.6}", QUANTUM_CHSH_VALUE * n as f64),
            ));
        }
        out
    }
}
