//! CSV dataset ingestion: header `x1,...,xN,y`, one sample per line.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spreading::Sample;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Input count; `None` for a completely empty file.
    pub n_inputs: Option<usize>,
    pub samples: Vec<Sample>,
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((hline, header)) = lines.next() else {
        return Ok(Dataset {
            n_inputs: None,
            samples: Vec::new(),
        });
    };
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let n = names.len().checked_sub(1).filter(|&n| n > 0).ok_or(Error::Parse {
        line: hline + 1,
        column: 1,
        msg: "header needs at least one input and the output".into(),
    })?;
    for (k, name) in names.iter().enumerate() {
        let want = if k < n { format!("x{}", k + 1) } else { "y".to_string() };
        if *name != want {
            return Err(Error::Parse {
                line: hline + 1,
                column: field_offset(header, k),
                msg: format!("expected header field `{want}`, found `{name}`"),
            });
        }
    }

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 1 {
            return Err(Error::Parse {
                line: idx + 1,
                column: 1,
                msg: format!("expected {} fields, found {}", n + 1, fields.len()),
            });
        }
        let mut vals = Vec::with_capacity(n + 1);
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                column: field_offset(line, k),
                msg: format!("`{}` is not a number", f.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: idx + 1,
                    column: field_offset(line, k),
                    msg: "value must be finite".into(),
                });
            }
            vals.push(v);
        }
        let y = vals.pop().unwrap();
        samples.push(Sample::new(vals, y));
    }
    Ok(Dataset {
        n_inputs: Some(n),
        samples,
    })
}

/// 1-based character column where field `k` starts.
fn field_offset(line: &str, k: usize) -> usize {
    line.split(',').take(k).map(|f| f.chars().count() + 1).sum::<usize>() + 1
}

pub fn to_csv(samples: &[Sample], n_inputs: usize) -> String {
    let mut s: String = (1..=n_inputs).map(|k| format!("x{k},")).collect();
    s.push_str("y\n");
    for smp in samples {
        for x in &smp.x {
            s.push_str(&format!("{x},"));
        }
        s.push_str(&format!("{}\n", smp.y));
    }
    s
}
