//! CSV observations: one row per observation, one column per coordinate,
//! optional header line, blank lines ignored.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sample::Sample;

pub fn load_csv(path: &Path) -> Result<Sample> {
    let file = File::open(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_csv(file)
}

/// A first row with a non-empty, non-numeric field is taken as a header.
pub fn parse_csv<R: Read>(reader: R) -> Result<Sample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut width = None;
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, &str>> =
            record.iter().map(|f| f.parse::<f64>().map_err(|_| f)).collect();
        if first {
            first = false;
            if parsed.iter().any(|p| matches!(p, Err(t) if !t.is_empty())) {
                width = Some(record.len());
                continue;
            }
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse(format!(
                "line {line}: expected {w} fields, found {}",
                record.len()
            )));
        }
        for (col, p) in parsed.into_iter().enumerate() {
            match p {
                Ok(v) if v.is_finite() => data.push(v),
                Ok(v) => {
                    return Err(Error::Parse(format!(
                        "line {line}, column {}: non-finite value {v}",
                        col + 1
                    )))
                }
                Err(text) => {
                    return Err(Error::Parse(format!(
                        "line {line}, column {}: cannot parse '{text}' as a number",
                        col + 1
                    )))
                }
            }
        }
    }
    if data.is_empty() {
        return Err(Error::InvalidInput("no observations".into()));
    }
    Sample::from_flat(data, width.expect("set with the first data row"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_blank_lines() {
        let s = parse_csv("a, b\n\n1, 2\n3,4\n\n".as_bytes()).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.row(1), &[3.0, 4.0]);
        let s = parse_csv("0.5\n0.25\n".as_bytes()).unwrap();
        assert_eq!((s.n(), s.d()), (2, 1));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_csv("x\n1\n2\nabc\n".as_bytes()).unwrap_err().to_string();
        assert!(e.contains("line 4") && e.contains("abc"), "{e}");
        let e = parse_csv("1,2\n3\n".as_bytes()).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let e = parse_csv("1,\n".as_bytes()).unwrap_err().to_string();
        assert!(e.contains("column 2"), "{e}");
    }

    #[test]
    fn empty_input() {
        for src in ["", "\n\n", "x,y\n"] {
            assert_eq!(
                parse_csv(src.as_bytes()).unwrap_err().to_string(),
                "invalid input: no observations"
            );
        }
    }
}
