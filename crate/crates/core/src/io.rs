//! CSV ingestion and emission. Input schemas are small enough that parsing
//! is done by hand, which keeps error messages tied to line numbers.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::expansion::SampleSet;

fn parse_field(path: &str, line: usize, field: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        message: format!("`{}` is not a number", field.trim()),
    })
}

/// Read a two-column numeric CSV (optional header) into a sample set.
/// Errors name the offending line.
pub fn read_xy_csv(path: &Path) -> Result<SampleSet> {
    let file = File::open(path)?;
    read_xy(BufReader::new(file), &path.display().to_string())
}

pub fn read_xy<R: Read>(reader: R, path: &str) -> Result<SampleSet> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                message: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        // A non-numeric first row is treated as a header.
        if lineno == 1 && fields.iter().any(|f| f.trim().parse::<f64>().is_err()) {
            continue;
        }
        x.push(parse_field(path, lineno, fields[0])?);
        y.push(parse_field(path, lineno, fields[1])?);
    }
    SampleSet::new(x, y)
}

/// Read a numeric matrix CSV: one column per variable, one row per
/// observation, optional header row carrying variable names. Returns the
/// names (generated as `v1..vp` when absent) and per-variable columns.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = File::open(path)?;
    read_matrix(BufReader::new(file), &path.display().to_string())
}

pub fn read_matrix<R: Read>(reader: R, path: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if lineno == 1 {
            let headerish = fields.iter().any(|f| f.trim().parse::<f64>().is_err());
            if headerish {
                names = fields.iter().map(|f| f.trim().to_string()).collect();
                columns = vec![Vec::new(); fields.len()];
                continue;
            }
            names = (1..=fields.len()).map(|i| format!("v{i}")).collect();
            columns = vec![Vec::new(); fields.len()];
        }
        if fields.len() != columns.len() {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                message: format!("expected {} columns, found {}", columns.len(), fields.len()),
            });
        }
        for (col, field) in columns.iter_mut().zip(&fields) {
            col.push(parse_field(path, lineno, field)?);
        }
    }
    let n = columns.first().map_or(0, |c| c.len());
    if n == 0 {
        return Err(Error::Parse {
            path: path.to_string(),
            line: 1,
            message: "no observations".to_string(),
        });
    }
    Ok((names, columns))
}

/// Write samples as `x,y` CSV. `Display` formatting of `f64` round-trips,
/// so `simulate` output re-parses without loss.
pub fn write_xy_csv<W: Write>(mut w: W, s: &SampleSet) -> Result<()> {
    writeln!(w, "x,y")?;
    for i in 0..s.len() {
        writeln!(w, "{},{}", s.x()[i], s.y()[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let with = read_xy("x,y\n1,2\n3,4\n".as_bytes(), "t").unwrap();
        let without = read_xy("1,2\n3,4\n".as_bytes(), "t").unwrap();
        assert_eq!(with, without);
        assert_eq!(with.len(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match read_xy("1,2\nfoo,4\n".as_bytes(), "data.csv") {
            Err(Error::Parse { path, line, .. }) => {
                assert_eq!(path, "data.csv");
                assert_eq!(line, 2);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        match read_xy("1,2,3\n".as_bytes(), "data.csv") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("expected column-count error, got {other:?}"),
        }
    }

    #[test]
    fn xy_round_trip_is_lossless() {
        let s = SampleSet::new(
            vec![0.1, 2.0f64.sqrt(), 1.0 / 3.0],
            vec![-5.25, 1e-17, 0.30000000000000004],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_xy_csv(&mut buf, &s).unwrap();
        let back = read_xy(buf.as_slice(), "t").unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn matrix_reader_names_columns() {
        let (names, cols) = read_matrix("a,b,c\n1,2,3\n4,5,6\n".as_bytes(), "t").unwrap();
        assert_eq!(names, vec!["a", "b", "c"]);
        assert_eq!(cols[1], vec![2.0, 5.0]);
        let (names, _) = read_matrix("1,2\n3,4\n".as_bytes(), "t").unwrap();
        assert_eq!(names, vec!["v1", "v2"]);
    }
}
