//! Description length of a selection string.
//!
//! `M` is the length of the shortest of three self-delimiting encodings of
//! `d`, all conditional on the string length `N` (which the decoder knows):
//!
//! | tag  | body                                                        |
//! |------|-------------------------------------------------------------|
//! | `00` | the `N` bits verbatim                                       |
//! | `01` | first bit, then each run length as an Elias gamma code      |
//! | `10` | Elias gamma of the smallest period `p < N`, then `p` bits   |
//!
//! The result is an upper bound on the Kolmogorov complexity of `d` given
//! `N`, up to the codec constant. It never exceeds `N + TAG_BITS`.

use crate::error::{Error, Result};

use super::SelectionString;

pub const TAG_BITS: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Verbatim,
    RunLength,
    Periodic,
}

impl Encoding {
    fn tag(self) -> [bool; 2] {
        match self {
            Self::Verbatim => [false, false],
            Self::RunLength => [false, true],
            Self::Periodic => [true, false],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DescriptionLength {
    pub bits: u64,
    pub encoding: Encoding,
}

fn gamma_len(n: u64) -> u64 {
    debug_assert!(n >= 1);
    2 * u64::from(63 - n.leading_zeros()) + 1
}

fn push_gamma(out: &mut Vec<bool>, n: u64) {
    let width = 64 - n.leading_zeros();
    out.extend(std::iter::repeat_n(false, width as usize - 1));
    for i in (0..width).rev() {
        out.push((n >> i) & 1 == 1);
    }
}

struct Reader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl Reader<'_> {
    fn bit(&mut self) -> Result<bool> {
        let b = *self.bits.get(self.pos).ok_or_else(|| truncated(self.pos))?;
        self.pos += 1;
        Ok(b)
    }

    fn gamma(&mut self) -> Result<u64> {
        let mut zeros = 0;
        while !self.bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(truncated(self.pos));
            }
        }
        let mut n = 1u64;
        for _ in 0..zeros {
            n = (n << 1) | u64::from(self.bit()?);
        }
        Ok(n)
    }
}

fn truncated(pos: usize) -> Error {
    Error::Parse {
        line: 1,
        msg: format!("truncated or malformed code at bit {pos}"),
    }
}

fn runs(bits: &[bool]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut iter = bits.iter();
    let Some(mut current) = iter.next().copied() else {
        return out;
    };
    let mut len = 1u64;
    for &b in iter {
        if b == current {
            len += 1;
        } else {
            out.push(len);
            current = b;
            len = 1;
        }
    }
    out.push(len);
    out
}

/// Smallest `p` with `d[i] = d[i - p]` for all `i >= p`, via the prefix function.
fn smallest_period(bits: &[bool]) -> usize {
    let n = bits.len();
    if n == 0 {
        return 0;
    }
    let mut pi = vec![0usize; n];
    for i in 1..n {
        let mut k = pi[i - 1];
        while k > 0 && bits[i] != bits[k] {
            k = pi[k - 1];
        }
        if bits[i] == bits[k] {
            k += 1;
        }
        pi[i] = k;
    }
    n - pi[n - 1]
}

fn candidate_lengths(bits: &[bool]) -> Vec<(Encoding, u64)> {
    let n = bits.len() as u64;
    let mut out = vec![(Encoding::Verbatim, TAG_BITS + n)];
    if !bits.is_empty() {
        let rl = 1 + runs(bits).iter().map(|r| gamma_len(*r)).sum::<u64>();
        out.push((Encoding::RunLength, TAG_BITS + rl));
        let p = smallest_period(bits);
        if p < bits.len() {
            out.push((
                Encoding::Periodic,
                TAG_BITS + gamma_len(p as u64) + p as u64,
            ));
        }
    }
    out
}

pub fn description_length(d: &SelectionString) -> DescriptionLength {
    let (encoding, bits) = candidate_lengths(d.bits())
        .into_iter()
        .min_by_key(|(_, len)| *len)
        .expect("verbatim is always a candidate");
    DescriptionLength { bits, encoding }
}

/// The shortest encoding itself; its length equals `description_length`.
pub fn encode(d: &SelectionString) -> Vec<bool> {
    let bits = d.bits();
    let choice = description_length(d).encoding;
    let mut out = choice.tag().to_vec();
    match choice {
        Encoding::Verbatim => out.extend_from_slice(bits),
        Encoding::RunLength => {
            out.push(bits[0]);
            for r in runs(bits) {
                push_gamma(&mut out, r);
            }
        }
        Encoding::Periodic => {
            let p = smallest_period(bits);
            push_gamma(&mut out, p as u64);
            out.extend_from_slice(&bits[..p]);
        }
    }
    out
}

/// Inverse of [`encode`] given the string length `n`.
pub fn decode(code: &[bool], n: usize) -> Result<SelectionString> {
    let mut r = Reader { bits: code, pos: 0 };
    let tag = [r.bit()?, r.bit()?];
    let mut out = Vec::with_capacity(n);
    match tag {
        [false, false] => {
            for _ in 0..n {
                out.push(r.bit()?);
            }
        }
        [false, true] => {
            if n > 0 {
                let mut value = r.bit()?;
                while out.len() < n {
                    let len = r.gamma()? as usize;
                    if out.len() + len > n {
                        return Err(truncated(r.pos));
                    }
                    out.extend(std::iter::repeat_n(value, len));
                    value = !value;
                }
            }
        }
        [true, false] => {
            let p = r.gamma()? as usize;
            let mut pattern = Vec::with_capacity(p);
            for _ in 0..p {
                pattern.push(r.bit()?);
            }
            out.extend((0..n).map(|i| pattern[i % p]));
        }
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "unknown encoding tag".into(),
            })
        }
    }
    if r.pos != code.len() {
        return Err(truncated(r.pos));
    }
    Ok(SelectionString::from_bits(out))
}
