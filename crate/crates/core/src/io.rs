//! Flat-file formats: observation CSV, chains CSV, ACF dump and factor dump.
//!
//! Observation rows hold `y = vec(Y)` for a `d₂ × d₁` matrix `Y`, so column
//! `j·d₂ + i` (0-based) is `Y[i, j]`.

use crate::diagnostics::{SummaryRecord, SUMMARY_COLUMNS};
use crate::kron::vech;
use crate::model::SeparableState;
use crate::samplers::ChainSample;
use crate::{DenseVector, Error, Result};

/// First line of every chains CSV.
pub const CHAINS_SCHEMA: &str = "# kronsample-chains v1";
/// First line of every ACF dump.
pub const ACF_SCHEMA: &str = "# kronsample-acf v1";

/// Chains CSV columns in order.
pub const CHAINS_COLUMNS: [&str; 12] = [
    "iter", "accepted", "epsilon", "L_used", "tr1", "tr2", "tr_kron", "logdet1", "logdet2",
    "logdet_kron", "cond1", "cond2",
];

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse { line, msg: e.to_string() }
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let x: f64 = field
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("not a number: {field:?}") })?;
    if !x.is_finite() {
        return Err(Error::Parse { line, msg: format!("non-finite value: {field:?}") });
    }
    Ok(x)
}

fn is_blank(rec: &csv::StringRecord) -> bool {
    rec.iter().all(|f| f.is_empty())
}

/// Parses observations: one row per observation with `d₁·d₂` numeric
/// columns. Blank lines and `#` comments are skipped; a first row with no
/// numeric field is treated as a header.
pub fn parse_dataset_csv(text: &str, d1: usize, d2: usize) -> Result<Vec<DenseVector>> {
    let d = d1 * d2;
    if d == 0 {
        return Err(Error::InvalidParameter("factor dimensions must be positive".into()));
    }
    let mut out = Vec::new();
    let mut first = true;
    for rec in reader(text).records() {
        let rec = rec.map_err(csv_error)?;
        if is_blank(&rec) {
            continue;
        }
        let line = line_of(&rec);
        if first {
            first = false;
            if rec.iter().all(|f| f.parse::<f64>().is_err()) {
                if rec.len() != d {
                    return Err(Error::Parse {
                        line,
                        msg: format!("header has {} columns, expected {d}", rec.len()),
                    });
                }
                continue;
            }
        }
        if rec.len() != d {
            return Err(Error::Parse {
                line,
                msg: format!("row has {} columns, expected {d}", rec.len()),
            });
        }
        let vals = rec.iter().map(|f| parse_f64(f, line)).collect::<Result<Vec<_>>>()?;
        out.push(DenseVector::from_vec(vals));
    }
    if out.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(out)
}

/// Writes observations with a `y0,y1,…` header.
pub fn write_dataset_csv(ys: &[DenseVector]) -> String {
    let d = ys.first().map(|y| y.len()).unwrap_or(0);
    let mut s = (0..d).map(|i| format!("y{i}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for y in ys {
        s.push_str(&join_f64(y.iter().cloned()));
        s.push('\n');
    }
    s
}

fn join_f64(xs: impl Iterator<Item = f64>) -> String {
    xs.map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

/// One row of the chains CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainRow {
    pub iter: usize,
    pub accepted: bool,
    pub epsilon: f64,
    pub steps: usize,
    pub summary: SummaryRecord,
}

impl ChainRow {
    pub fn from_sample(iter: usize, s: &ChainSample) -> Result<Self> {
        Ok(Self {
            iter,
            accepted: s.accepted,
            epsilon: s.epsilon,
            steps: s.steps,
            summary: crate::diagnostics::summarize(&s.state)?,
        })
    }
}

pub fn write_chains_csv(rows: &[ChainRow]) -> String {
    let mut s = format!("{CHAINS_SCHEMA}\n{}\n", CHAINS_COLUMNS.join(","));
    for r in rows {
        s.push_str(&format!(
            "{},{},{:e},{},{}\n",
            r.iter,
            r.accepted as u8,
            r.epsilon,
            r.steps,
            join_f64(r.summary.values().into_iter())
        ));
    }
    s
}

/// Parses a chains CSV, requiring the schema comment and exact column header.
pub fn parse_chains_csv(text: &str) -> Result<Vec<ChainRow>> {
    let schema = text.lines().next().map(str::trim_end).unwrap_or("");
    if schema != CHAINS_SCHEMA {
        return Err(Error::Parse {
            line: 1,
            msg: format!("missing schema line {CHAINS_SCHEMA:?}"),
        });
    }
    let mut rows = Vec::new();
    let mut header_seen = false;
    for rec in reader(text).records() {
        let rec = rec.map_err(csv_error)?;
        if is_blank(&rec) {
            continue;
        }
        let line = line_of(&rec);
        if !header_seen {
            if rec.iter().ne(CHAINS_COLUMNS.iter().copied()) {
                return Err(Error::Parse { line, msg: "unexpected column header".into() });
            }
            header_seen = true;
            continue;
        }
        if rec.len() != CHAINS_COLUMNS.len() {
            return Err(Error::Parse {
                line,
                msg: format!("row has {} columns, expected {}", rec.len(), CHAINS_COLUMNS.len()),
            });
        }
        let int = |f: &str| -> Result<usize> {
            f.parse().map_err(|_| Error::Parse { line, msg: format!("not a count: {f:?}") })
        };
        let accepted = match &rec[1] {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse { line, msg: format!("bad accepted flag {other:?}") }),
        };
        let mut vals = [0.0; 8];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = parse_f64(&rec[4 + k], line)?;
        }
        rows.push(ChainRow {
            iter: int(&rec[0])?,
            accepted,
            epsilon: parse_f64(&rec[2], line)?,
            steps: int(&rec[3])?,
            summary: SummaryRecord::from_values(vals),
        });
    }
    if !header_seen {
        return Err(Error::Parse { line: 2, msg: "missing column header".into() });
    }
    Ok(rows)
}

/// Values of one summary column across rows.
pub fn column(rows: &[ChainRow], name: &str) -> Option<Vec<f64>> {
    let idx = SUMMARY_COLUMNS.iter().position(|c| *c == name)?;
    Some(rows.iter().map(|r| r.summary.values()[idx]).collect())
}

/// Autocorrelations per statistic, one row per lag.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfTable {
    pub names: Vec<String>,
    /// `values[k]` holds the lag-`k` autocorrelation of every statistic.
    pub values: Vec<Vec<f64>>,
}

pub fn write_acf_csv(table: &AcfTable) -> String {
    let mut s = format!("{ACF_SCHEMA}\nlag,{}\n", table.names.join(","));
    for (lag, row) in table.values.iter().enumerate() {
        s.push_str(&format!("{lag},{}\n", join_f64(row.iter().cloned())));
    }
    s
}

pub fn parse_acf_csv(text: &str) -> Result<AcfTable> {
    let mut names = None;
    let mut values = Vec::new();
    for rec in reader(text).records() {
        let rec = rec.map_err(csv_error)?;
        if is_blank(&rec) {
            continue;
        }
        let line = line_of(&rec);
        match &names {
            None => {
                if rec.get(0) != Some("lag") {
                    return Err(Error::Parse { line, msg: "expected 'lag' header".into() });
                }
                names = Some(rec.iter().skip(1).map(String::from).collect::<Vec<_>>());
            }
            Some(n) => {
                if rec.len() != n.len() + 1 {
                    return Err(Error::Parse { line, msg: "column count mismatch".into() });
                }
                if rec[0].parse::<usize>().ok() != Some(values.len()) {
                    return Err(Error::Parse { line, msg: "lags must count up from 0".into() });
                }
                values.push(
                    rec.iter().skip(1).map(|f| parse_f64(f, line)).collect::<Result<Vec<_>>>()?,
                );
            }
        }
    }
    let names = names.ok_or(Error::Parse { line: 1, msg: "empty ACF file".into() })?;
    Ok(AcfTable { names, values })
}

/// Raw factors as `iter, vech(Σ₁)…, vech(Σ₂)…` rows.
pub fn write_factors_csv(states: &[(usize, &SeparableState)]) -> Result<String> {
    let (d1, d2) = match states.first() {
        Some((_, s)) => (s.d1(), s.d2()),
        None => return Ok("iter\n".into()),
    };
    let mut head = vec!["iter".to_string()];
    for (tag, d) in [("s1", d1), ("s2", d2)] {
        for j in 0..d {
            for i in j..d {
                head.push(format!("{tag}_{i}_{j}"));
            }
        }
    }
    let mut s = head.join(",");
    s.push('\n');
    for (it, st) in states {
        let a = vech(st.sigma1.matrix())?;
        let b = vech(st.sigma2.matrix())?;
        s.push_str(&format!("{it},{}\n", join_f64(a.iter().chain(b.iter()).cloned())));
    }
    Ok(s)
}
