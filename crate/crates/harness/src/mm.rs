//! Matrix Market import/export (real and integer fields, array and
//! coordinate formats, general and symmetric storage), plus the harness's
//! own dense JSON layout.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use lowrank_core::Mat;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

/// Reads a Matrix Market file into a dense matrix.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_matrix_market(BufReader::new(file), &path.display().to_string())
}

/// Parses Matrix Market text. `name` labels error messages.
pub fn parse_matrix_market(reader: impl Read, name: &str) -> Result<Mat> {
    let err = |line: usize, msg: String| HarnessError::MatrixMarket {
        path: name.to_string(),
        line,
        msg,
    };
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));

    let (no, header) = match lines.next() {
        Some((no, l)) => (no, l.map_err(|e| err(no, e.to_string()))?),
        None => return Err(err(1, "empty file".into())),
    };
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(err(no, format!("expected '%%MatrixMarket matrix <format> <field> <symmetry>', got '{header}'")));
    }
    let format = match words[2].as_str() {
        "array" => Format::Array,
        "coordinate" => Format::Coordinate,
        f => return Err(err(no, format!("unsupported format '{f}'"))),
    };
    match words[3].as_str() {
        "real" | "integer" | "double" => {}
        f => return Err(err(no, format!("unsupported field '{f}' (need real or integer)"))),
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        s => return Err(err(no, format!("unsupported symmetry '{s}'"))),
    };

    // Data lines, skipping comments and blank lines.
    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('%') => None,
        Ok(l) => Some(Ok((no, l))),
        Err(e) => Some(Err(err(no, e.to_string()))),
    });
    let (size_no, size_line) = data.next().transpose()?.ok_or_else(|| err(no + 1, "missing size line".into()))?;
    let sizes = parse_usizes(&size_line).map_err(|m| err(size_no, m))?;
    let expected = match format {
        Format::Array => 2,
        Format::Coordinate => 3,
    };
    if sizes.len() != expected {
        return Err(err(size_no, format!("size line needs {expected} integers, found {}", sizes.len())));
    }
    let (m, n) = (sizes[0], sizes[1]);
    if symmetry == Symmetry::Symmetric && m != n {
        return Err(err(size_no, format!("symmetric storage needs a square matrix, got {m}x{n}")));
    }
    let mut a = Mat::zeros(m, n);

    match format {
        Format::Array => {
            // Column-major; symmetric files list the lower triangle only.
            let positions: Vec<(usize, usize)> = match symmetry {
                Symmetry::General => (0..n).flat_map(|j| (0..m).map(move |i| (i, j))).collect(),
                Symmetry::Symmetric => (0..n).flat_map(|j| (j..m).map(move |i| (i, j))).collect(),
            };
            let mut pos = positions.iter();
            let mut last = size_no;
            for item in data {
                let (no, line) = item?;
                last = no;
                for tok in line.split_whitespace() {
                    let &(i, j) = pos
                        .next()
                        .ok_or_else(|| err(no, format!("more than {} values", positions.len())))?;
                    let v = parse_value(tok).map_err(|m| err(no, m))?;
                    a[(i, j)] = v;
                    if symmetry == Symmetry::Symmetric {
                        a[(j, i)] = v;
                    }
                }
            }
            let left = pos.count();
            if left > 0 {
                return Err(err(last, format!("{left} values missing")));
            }
        }
        Format::Coordinate => {
            let nnz = sizes[2];
            let mut seen = 0usize;
            let mut last = size_no;
            for item in data {
                let (no, line) = item?;
                last = no;
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(err(no, format!("expected 'row col value', got '{}'", line.trim())));
                }
                let i = parse_index(toks[0], m).map_err(|msg| err(no, msg))?;
                let j = parse_index(toks[1], n).map_err(|msg| err(no, msg))?;
                let v = parse_value(toks[2]).map_err(|msg| err(no, msg))?;
                if symmetry == Symmetry::Symmetric && j > i {
                    return Err(err(no, "symmetric storage lists the lower triangle only".into()));
                }
                a[(i, j)] += v;
                if symmetry == Symmetry::Symmetric && i != j {
                    a[(j, i)] += v;
                }
                seen += 1;
                if seen > nnz {
                    return Err(err(no, format!("more than the declared {nnz} entries")));
                }
            }
            if seen < nnz {
                return Err(err(last, format!("declared {nnz} entries, found {seen}")));
            }
        }
    }
    Ok(a)
}

fn parse_usizes(line: &str) -> Result<Vec<usize>, String> {
    line.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| format!("'{t}' is not a nonnegative integer")))
        .collect()
}

fn parse_index(tok: &str, bound: usize) -> Result<usize, String> {
    match tok.parse::<usize>() {
        Ok(i) if (1..=bound).contains(&i) => Ok(i - 1),
        Ok(i) => Err(format!("index {i} outside 1..={bound}")),
        Err(_) => Err(format!("'{tok}' is not an index")),
    }
}

fn parse_value(tok: &str) -> Result<f64, String> {
    let v: f64 = tok.parse().map_err(|_| format!("'{tok}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite value '{tok}'"))
    }
}

/// Writes `a` as `array real general`. Values use the shortest representation
/// that parses back to the same `f64`, so a round trip is exact.
pub fn write_matrix_market(a: &Mat, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{:?}", a[(i, j)])?;
        }
    }
    Ok(())
}

pub fn save_matrix_market(a: &Mat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_matrix_market(a, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(path, e))
}

/// Dense row-major JSON layout used by `lowrank convert`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DenseMatrix {
    pub schema_version: u32,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_mat(a: &Mat) -> Self {
        DenseMatrix {
            schema_version: crate::SCHEMA_VERSION,
            rows: a.rows(),
            cols: a.cols(),
            data: a.as_slice().to_vec(),
        }
    }

    pub fn to_mat(&self) -> Result<Mat> {
        Ok(Mat::new(self.rows, self.cols, self.data.clone())?)
    }
}

/// Loads a matrix from `.json` (dense layout) or anything else as Matrix Market.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let d: DenseMatrix =
            serde_json::from_str(&text).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?;
        d.to_mat()
    } else {
        load_matrix_market(path)
    }
}

/// Saves as `.json` (dense layout) or Matrix Market, by extension.
pub fn save_matrix(a: &Mat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "json") {
        let text = serde_json::to_string_pretty(&DenseMatrix::from_mat(a))?;
        fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
    } else {
        save_matrix_market(a, path)
    }
}
