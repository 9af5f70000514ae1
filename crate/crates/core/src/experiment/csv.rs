//! Minimal CSV for uniformly sampled signals and result tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const SIGNAL_HEADER: &str = "t,y";
pub const DIFF_HEADER: &str = "t,y,dhat,lambda,eigmaxP";
pub const TRACE_HEADER: &str = "k,t,r,y,ym,e,u,up,ui,ud";
pub const REPORT_HEADER: &str = "method,seed,rmse";

/// Relative tolerance on the sample spacing.
pub const SPACING_TOL: f64 = 1e-9;

/// Uniformly sampled `(t, y)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTable {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl SignalTable {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: t.len(),
                right: y.len(),
            });
        }
        let table = Self { t, y };
        // rows start at line 2, after the header
        if let Some(bad) = table.first_irregular_row() {
            return Err(Error::Csv {
                line: bad + 2,
                reason: "time column is not strictly increasing with constant spacing".into(),
            });
        }
        Ok(table)
    }

    /// `t_k = k ts` for the given samples.
    pub fn uniform(ts: f64, y: Vec<f64>) -> Result<Self> {
        let t = (0..y.len()).map(|k| k as f64 * ts).collect();
        Self::new(t, y)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Sample spacing; `None` below two rows.
    pub fn ts(&self) -> Option<f64> {
        (self.t.len() >= 2).then(|| (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() - 1) as f64)
    }

    fn first_irregular_row(&self) -> Option<usize> {
        if self.t.len() < 2 {
            return None;
        }
        let h = self.t[1] - self.t[0];
        if !(h > 0.0) {
            return Some(1);
        }
        (1..self.t.len()).find(|&i| {
            let d = self.t[i] - self.t[i - 1];
            (d - h).abs() > SPACING_TOL * h
        })
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self.t.iter().zip(&self.y).map(|(&t, &y)| vec![t, y]).collect();
        write_table(SIGNAL_HEADER, &rows)
    }
}

/// Lossless float text: shortest round-trip form.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_table(header: &str, rows: &[Vec<f64>]) -> String {
    let mut s = String::with_capacity(rows.len() * 24 * header.split(',').count());
    s.push_str(header);
    s.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

/// Numeric rows under an exact header.
pub fn parse_table(text: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = lines.next() else {
        return Err(Error::Csv {
            line: 1,
            reason: format!("empty file, expected header `{header}`"),
        });
    };
    if first.trim() != header {
        return Err(Error::Csv {
            line: 1,
            reason: format!("expected header `{header}`, found `{}`", first.trim()),
        });
    }
    let width = header.split(',').count();
    lines
        .map(|(idx, line)| {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != width {
                return Err(Error::Csv {
                    line: idx + 1,
                    reason: format!("expected {width} fields, found {}", cells.len()),
                });
            }
            cells
                .iter()
                .map(|c| {
                    c.parse::<f64>().map_err(|_| Error::Csv {
                        line: idx + 1,
                        reason: format!("`{c}` is not a number"),
                    })
                })
                .collect()
        })
        .collect()
}

pub fn parse_signal(text: &str) -> Result<SignalTable> {
    let rows = parse_table(text, SIGNAL_HEADER)?;
    let (t, y) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
    SignalTable::new(t, y)
}

pub fn load_signal_csv(path: &Path) -> Result<SignalTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signal(&text)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_signal_csv(path: &Path, table: &SignalTable) -> Result<()> {
    write_file(path, &table.to_csv())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows() {
        let t = parse_signal("t,y\n0,1.5\n0.01,2\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.y, vec![1.5, 2.0]);
        assert!((t.ts().unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn round_trip_is_exact() {
        let y = vec![0.1 + 0.2, -1.0 / 3.0, 1e-300, 6.02e23, 0.0, -0.0, f64::MIN_POSITIVE];
        let table = SignalTable::uniform(0.01, y).unwrap();
        let back = parse_signal(&table.to_csv()).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn malformed_rows_report_lines() {
        assert_eq!(
            parse_signal("t,y\n0,1\n0.1,x\n").unwrap_err(),
            Error::Csv {
                line: 3,
                reason: "`x` is not a number".into()
            }
        );
        assert!(matches!(parse_signal("t,y\n0,1,2\n"), Err(Error::Csv { line: 2, .. })));
        assert!(matches!(parse_signal("time,y\n0,1\n"), Err(Error::Csv { line: 1, .. })));
        assert!(matches!(parse_signal(""), Err(Error::Csv { line: 1, .. })));
    }

    #[test]
    fn non_uniform_sampling_rejected() {
        let e = parse_signal("t,y\n0,0\n0.1,0\n0.2,0\n0.35,0\n").unwrap_err();
        assert!(matches!(e, Error::Csv { line: 5, .. }), "{e}");
        assert!(parse_signal("t,y\n0,0\n0,1\n").is_err());
        assert!(parse_signal("t,y\n0.2,0\n0.1,1\n").is_err());
    }
}
