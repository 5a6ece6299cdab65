//! Matrix Market reader and writer for dense real matrices.
//!
//! Accepts `coordinate` and `array` layouts with `real` or `integer` fields
//! and `general` or `symmetric` symmetry. Entries land in a dense matrix;
//! unlisted coordinate entries stay zero.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::MatrixMarket {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str, lineno: usize) -> Result<(Layout, Symmetry)> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(err(lineno, "header must start with %%MatrixMarket"));
    }
    if tokens.len() != 5 {
        return Err(err(
            lineno,
            "header must read `%%MatrixMarket matrix <format> <field> <symmetry>`",
        ));
    }
    if tokens[1] != "matrix" {
        return Err(err(lineno, format!("unsupported object `{}`", tokens[1])));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(err(lineno, format!("unknown format `{other}`"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        "complex" | "pattern" => {
            return Err(err(lineno, format!("field `{}` is not supported", tokens[3])))
        }
        other => return Err(err(lineno, format!("unknown field `{other}`"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(err(lineno, format!("symmetry `{other}` is not supported"))),
    };
    Ok((layout, symmetry))
}

fn parse_usize(tok: &str, lineno: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| err(lineno, format!("expected {what}, found `{tok}`")))
}

fn parse_value(tok: &str, lineno: usize) -> Result<f64> {
    let v = tok
        .parse::<f64>()
        .map_err(|_| err(lineno, format!("non-numeric token `{tok}`")))?;
    if !v.is_finite() {
        return Err(err(lineno, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

/// Parses a Matrix Market document into a dense matrix.
pub fn load_matrix_market(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty input, expected a %%MatrixMarket header"))?;
    let (layout, symmetry) = parse_header(header, hline)?;

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (sline, size) = body
        .next()
        .ok_or_else(|| err(hline + 1, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    let (rows, cols, declared) = match (layout, dims.as_slice()) {
        (Layout::Coordinate, [r, c, nnz]) => (
            parse_usize(r, sline, "row count")?,
            parse_usize(c, sline, "column count")?,
            parse_usize(nnz, sline, "entry count")?,
        ),
        (Layout::Array, [r, c]) => {
            let r = parse_usize(r, sline, "row count")?;
            let c = parse_usize(c, sline, "column count")?;
            let count = match symmetry {
                Symmetry::General => r * c,
                Symmetry::Symmetric => r * (r + 1) / 2,
            };
            (r, c, count)
        }
        (Layout::Coordinate, _) => return Err(err(sline, "size line must be `rows cols entries`")),
        (Layout::Array, _) => return Err(err(sline, "size line must be `rows cols`")),
    };
    if symmetry == Symmetry::Symmetric && rows != cols {
        return Err(err(sline, "symmetric matrix must be square"));
    }
    if layout == Layout::Coordinate && declared > rows.saturating_mul(cols) {
        return Err(err(
            sline,
            format!("{declared} entries cannot fit a {rows}x{cols} matrix"),
        ));
    }

    let mut m = DenseMatrix::zeros(rows, cols);
    let mut seen = 0usize;
    let mut last_line = sline;

    // Array entries run down columns; symmetric arrays list the lower triangle.
    let mut array_pos = (0usize, 0usize);

    for (lineno, line) in body {
        last_line = lineno;
        if seen == declared {
            return Err(err(
                lineno,
                format!("more entries than the {declared} declared"),
            ));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (i, j, v) = match layout {
            Layout::Coordinate => {
                let [ti, tj, tv] = toks.as_slice() else {
                    return Err(err(lineno, "entry must read `row col value`"));
                };
                let i = parse_usize(ti, lineno, "row index")?;
                let j = parse_usize(tj, lineno, "column index")?;
                if i == 0 || i > rows || j == 0 || j > cols {
                    return Err(err(
                        lineno,
                        format!("index ({i}, {j}) outside a {rows}x{cols} matrix"),
                    ));
                }
                (i - 1, j - 1, parse_value(tv, lineno)?)
            }
            Layout::Array => {
                let [tv] = toks.as_slice() else {
                    return Err(err(lineno, "array entry must be a single value"));
                };
                let (i, j) = array_pos;
                let next = if i + 1 < rows {
                    (i + 1, j)
                } else if symmetry == Symmetry::Symmetric {
                    (j + 1, j + 1)
                } else {
                    (0, j + 1)
                };
                array_pos = next;
                (i, j, parse_value(tv, lineno)?)
            }
        };
        m[(i, j)] = v;
        if symmetry == Symmetry::Symmetric && i != j {
            m[(j, i)] = v;
        }
        seen += 1;
    }

    if seen != declared {
        return Err(err(
            last_line,
            format!("expected {declared} entries, found {seen}"),
        ));
    }
    Ok(m)
}

/// Serializes `m` in `array real general` layout with shortest round-trip
/// decimals, so reading the output back reproduces `m` exactly.
pub fn to_matrix_market(m: &DenseMatrix) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            let _ = writeln!(out, "{}", m[(i, j)]);
        }
    }
    out
}

pub fn write_matrix_market<W: Write>(m: &DenseMatrix, mut w: W) -> io::Result<()> {
    w.write_all(to_matrix_market(m).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_general() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 3.5\n";
        let m = load_matrix_market(text).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[&[0.0, 3.5], &[0.0, 0.0]]));
    }

    #[test]
    fn coordinate_symmetric_mirrors() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 1\n2 1 3.5\n";
        let m = load_matrix_market(text).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[&[0.0, 3.5], &[3.5, 0.0]]));
    }

    #[test]
    fn too_many_entries() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 5\n1 1 1\n";
        assert!(load_matrix_market(text).is_err());
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 1\n";
        match load_matrix_market(text) {
            Err(Error::MatrixMarket { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_complex_pattern_and_bad_tokens() {
        for field in ["complex", "pattern"] {
            let text = format!("%%MatrixMarket matrix coordinate {field} general\n1 1 1\n1 1 1\n");
            assert!(matches!(
                load_matrix_market(&text),
                Err(Error::MatrixMarket { line: 1, .. })
            ));
        }
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n";
        assert!(matches!(
            load_matrix_market(text),
            Err(Error::MatrixMarket { line: 3, .. })
        ));
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(
            load_matrix_market(text),
            Err(Error::MatrixMarket { line: 3, .. })
        ));
    }

    #[test]
    fn integer_array_layouts() {
        let text = "%%MatrixMarket matrix array integer general\n2 2\n1\n2\n3\n4\n";
        let m = load_matrix_market(text).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]]));
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n4\n";
        let m = load_matrix_market(text).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = DenseMatrix::from_rows(&[&[0.1, -2.5e-17], &[1.0 / 3.0, 7.0]]);
        let back = load_matrix_market(&to_matrix_market(&m)).unwrap();
        assert_eq!(m, back);
        assert_eq!(to_matrix_market(&back), to_matrix_market(&m));
    }
}
