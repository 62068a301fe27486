//! Round records, one per line: `index x y a b`, after the header line
//! `#nonloc-records v1`.

use std::io::{BufRead, Write};

use crate::bell::RoundRecord;
use crate::error::{Error, Result};

pub const RECORDS_HEADER: &str = "#nonloc-records v1";

pub fn write_records<W: Write>(mut w: W, rounds: &[RoundRecord]) -> Result<()> {
    writeln!(w, "{RECORDS_HEADER}")?;
    for (i, r) in rounds.iter().enumerate() {
        writeln!(w, "{i} {} {} {} {}", r.x, r.y, r.a, r.b)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<RoundRecord>> {
    let mut lines = r.lines();
    match lines.next().transpose()? {
        Some(line) if line.trim_end() == RECORDS_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("missing header {RECORDS_HEADER:?}"),
            })
        }
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        let parsed: std::result::Result<Vec<usize>, _> = fields.iter().map(|f| f.parse()).collect();
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let v = parsed.map_err(|e| err(format!("{e}: {line:?}")))?;
        if v.len() != 5 {
            return Err(err(format!("expected 5 fields, got {}", v.len())));
        }
        if v[0] != out.len() {
            return Err(err(format!("expected index {}, got {}", out.len(), v[0])));
        }
        out.push(RoundRecord {
            x: v[1],
            y: v[2],
            a: v[3],
            b: v[4],
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(raw in proptest::collection::vec((0usize..3, 0usize..3, 0usize..2, 0usize..2), 0..50)) {
            let rounds: Vec<_> = raw.iter().map(|&(x, y, a, b)| RoundRecord { x, y, a, b }).collect();
            let mut buf = Vec::new();
            write_records(&mut buf, &rounds).unwrap();
            prop_assert_eq!(read_records(&buf[..]).unwrap(), rounds);
        }
    }

    #[test]
    fn exact_layout() {
        let mut buf = Vec::new();
        write_records(
            &mut buf,
            &[RoundRecord {
                x: 1,
                y: 0,
                a: 1,
                b: 1,
            }],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "#nonloc-records v1\n0 1 0 1 1\n"
        );
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_records(&b"0 0 0 0 0\n"[..]).is_err());
        assert!(read_records(&b"#nonloc-records v1\n1 0 0 0 0\n"[..]).is_err());
        assert!(read_records(&b"#nonloc-records v1\n0 0 0 0\n"[..]).is_err());
        assert!(read_records(&b"#nonloc-records v1\n0  0 0 0 0\n"[..]).is_err());
        assert!(read_records(&b"#nonloc-records v1\n0 0 -1 0 0\n"[..]).is_err());
    }
}
