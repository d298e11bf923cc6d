//! Text exports of maps and masks.
//!
//! Matrix form: one line per grid row, comma-separated values, `NA` for
//! cells outside the municipality. Masks use `0`/`1`.
//!
//! Run-length form: a `# rle rows=R cols=C` header, then one line per grid
//! row of `value*count` runs, e.g. `120*38,80*2,NA*4`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::griddata::BitGrid;

const MISSING: &str = "NA";

fn format_value(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => MISSING.to_string(),
    }
}

fn parse_value(token: &str, line: u64) -> Result<Option<f64>> {
    let token = token.trim();
    if token == MISSING {
        return Ok(None);
    }
    token.parse::<f64>().map(Some).map_err(|_| Error::Ingest {
        line: Some(line),
        message: format!("invalid value `{token}`"),
    })
}

pub fn write_matrix(
    values: &[Option<f64>],
    rows: usize,
    cols: usize,
    mut w: impl Write,
) -> Result<()> {
    check_len(values.len(), rows, cols)?;
    for row in values.chunks(cols.max(1)).take(rows) {
        let line: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        writeln!(w, "{}", line.join(",")).map_err(io_error)?;
    }
    Ok(())
}

/// Reads a matrix; returns `(rows, cols, values)`.
pub fn read_matrix(reader: impl BufRead) -> Result<(usize, usize, Vec<Option<f64>>)> {
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_error)?;
        let line_no = i as u64 + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let before = values.len();
        for token in line.split(',') {
            values.push(parse_value(token, line_no)?);
        }
        let width = values.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Ingest {
                    line: Some(line_no),
                    message: format!("row has {width} values, expected {c}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    Ok((rows, cols.unwrap_or(0), values))
}

pub fn write_rle(values: &[Option<f64>], rows: usize, cols: usize, mut w: impl Write) -> Result<()> {
    check_len(values.len(), rows, cols)?;
    writeln!(w, "# rle rows={rows} cols={cols}").map_err(io_error)?;
    for row in values.chunks(cols.max(1)).take(rows) {
        let mut runs: Vec<String> = Vec::new();
        let mut iter = row.iter().peekable();
        while let Some(&v) = iter.next() {
            let mut count = 1;
            while iter.peek().is_some_and(|&&next| same(next, v)) {
                iter.next();
                count += 1;
            }
            runs.push(format!("{}*{count}", format_value(v)));
        }
        writeln!(w, "{}", runs.join(",")).map_err(io_error)?;
    }
    Ok(())
}

fn same(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a.to_bits() == b.to_bits(),
        (None, None) => true,
        _ => false,
    }
}

pub fn read_rle(reader: impl BufRead) -> Result<(usize, usize, Vec<Option<f64>>)> {
    let mut lines = reader.lines().enumerate();
    let (rows, cols) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::Ingest { line: None, message: "missing rle header".into() });
        };
        let line = line.map_err(io_error)?;
        if line.trim().is_empty() {
            continue;
        }
        break parse_rle_header(&line).ok_or_else(|| Error::Ingest {
            line: Some(i as u64 + 1),
            message: format!("expected `# rle rows=R cols=C`, got `{line}`"),
        })?;
    };
    let mut values = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (i, line) in lines {
        let line = line.map_err(io_error)?;
        let line_no = i as u64 + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let before = values.len();
        for run in line.split(',') {
            let (value, count) = run.rsplit_once('*').ok_or_else(|| Error::Ingest {
                line: Some(line_no),
                message: format!("invalid run `{run}`"),
            })?;
            let count: usize = count.trim().parse().map_err(|_| Error::Ingest {
                line: Some(line_no),
                message: format!("invalid run length in `{run}`"),
            })?;
            let value = parse_value(value, line_no)?;
            values.extend(std::iter::repeat_n(value, count));
        }
        if values.len() - before != cols {
            return Err(Error::Ingest {
                line: Some(line_no),
                message: format!("row expands to {} values, expected {cols}", values.len() - before),
            });
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::DimensionMismatch { expected: (rows, cols), actual: (seen_rows, cols) });
    }
    Ok((rows, cols, values))
}

fn parse_rle_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix('#')?.trim().strip_prefix("rle")?;
    let mut rows = None;
    let mut cols = None;
    for field in rest.split_whitespace() {
        match field.split_once('=')? {
            ("rows", v) => rows = v.parse().ok(),
            ("cols", v) => cols = v.parse().ok(),
            _ => {}
        }
    }
    Some((rows?, cols?))
}

pub fn mask_values(mask: &BitGrid) -> Vec<Option<f64>> {
    let (rows, cols) = mask.shape();
    (0..rows)
        .flat_map(|y| (0..cols).map(move |x| Some(if mask.get(y, x) { 1.0 } else { 0.0 })))
        .collect()
}

pub fn write_mask_matrix(mask: &BitGrid, w: impl Write) -> Result<()> {
    write_matrix(&mask_values(mask), mask.rows(), mask.cols(), w)
}

pub fn write_mask_rle(mask: &BitGrid, w: impl Write) -> Result<()> {
    write_rle(&mask_values(mask), mask.rows(), mask.cols(), w)
}

fn check_len(len: usize, rows: usize, cols: usize) -> Result<()> {
    if len != rows * cols {
        return Err(Error::InvalidParameter {
            name: "values",
            reason: format!("{len} values for a {rows}x{cols} grid"),
        });
    }
    Ok(())
}

fn io_error(e: std::io::Error) -> Error {
    Error::Ingest { line: None, message: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matrix_layout() {
        let values = vec![Some(120.0), None, Some(8.5), Some(0.0)];
        let mut out = Vec::new();
        write_matrix(&values, 2, 2, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "120,NA\n8.5,0\n");
        assert_eq!(read_matrix(&out[..]).unwrap(), (2, 2, values));
    }

    #[test]
    fn rle_layout() {
        let values = vec![Some(1.0), Some(1.0), None, None, None, Some(0.0)];
        let mut out = Vec::new();
        write_rle(&values, 2, 3, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out.clone()).unwrap(),
            "# rle rows=2 cols=3\n1*2,NA*1\nNA*2,0*1\n"
        );
        assert_eq!(read_rle(&out[..]).unwrap(), (2, 3, values));
    }

    #[test]
    fn rejects_ragged_input() {
        assert!(read_matrix(&b"1,2\n3\n"[..]).is_err());
        assert!(read_rle(&b"# rle rows=1 cols=3\n1*2\n"[..]).is_err());
        assert!(read_rle(&b"# rle rows=2 cols=1\n1*1\n"[..]).is_err());
        assert!(read_rle(&b"1*1\n"[..]).is_err());
    }

    #[test]
    fn mask_export() {
        let mask = BitGrid::from_fn(2, 3, |y, x| x == y);
        let mut out = Vec::new();
        write_mask_matrix(&mask, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1,0,0\n0,1,0\n");
    }

    proptest! {
        #[test]
        fn both_forms_roundtrip(
            rows in 1usize..8,
            cols in 1usize..8,
            seed in proptest::collection::vec(prop::option::of(0u8..4), 64),
        ) {
            let values: Vec<Option<f64>> =
                (0..rows * cols).map(|i| seed[i].map(|v| v as f64 * 8.0)).collect();
            let mut m = Vec::new();
            write_matrix(&values, rows, cols, &mut m).unwrap();
            prop_assert_eq!(read_matrix(&m[..]).unwrap(), (rows, cols, values.clone()));
            let mut r = Vec::new();
            write_rle(&values, rows, cols, &mut r).unwrap();
            prop_assert_eq!(read_rle(&r[..]).unwrap(), (rows, cols, values));
        }
    }
}
