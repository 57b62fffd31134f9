//! External text formats. Everything user-facing is 1-based: preference
//! lists, matchings, and all column/row/iteration indices in serialized
//! traces. The in-memory structures stay 0-based; this module converts at
//! the boundary.
//!
//! Instance format: the first significant line holds k, followed by k lines
//! of men's preference lists and k lines of women's, best first. Lists may
//! be partial (missing partners are appended in index order). `#` starts a
//! comment; blank lines are skipped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marriage::{InstanceError, MarriageInstance, Matching, MatchingError};
use crate::trace::{OrdinalPivotRecord, Phase, PivotTrace, TraceIteration};

/// Schema identifier embedded in every serialized trace.
pub const TRACE_SCHEMA: &str = "scarf-trace/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("invalid instance: {0}")]
    Instance(#[from] InstanceError),
    #[error("invalid matching: {0}")]
    Matching(#[from] MatchingError),
    #[error("invalid trace json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported trace schema {found:?}, expected {TRACE_SCHEMA:?}")]
    SchemaMismatch { found: String },
    #[error("trace contains the 0 index, which is out of range in the 1-based format")]
    ZeroIndex,
}

/// Significant lines with their 1-based line numbers: comments stripped,
/// blanks dropped.
fn significant_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn parse_index_line(line_no: usize, line: &str, k: usize, what: &str) -> Result<Vec<usize>, IoError> {
    line.split_whitespace()
        .map(|tok| {
            let value: usize = tok.parse().map_err(|_| IoError::Parse {
                line: line_no,
                detail: format!("{what} entry {tok:?} is not a positive integer"),
            })?;
            if value == 0 || value > k {
                return Err(IoError::Parse {
                    line: line_no,
                    detail: format!("{what} entry {value} is out of range 1..={k}"),
                });
            }
            Ok(value - 1)
        })
        .collect()
}

pub fn parse_instance(text: &str) -> Result<MarriageInstance, IoError> {
    let mut lines = significant_lines(text);
    let (line_no, first) = lines.next().ok_or(IoError::Parse {
        line: 1,
        detail: "empty input, expected the instance size k".into(),
    })?;
    let k: usize = first.parse().map_err(|_| IoError::Parse {
        line: line_no,
        detail: format!("expected the instance size k, got {first:?}"),
    })?;
    if k == 0 {
        return Err(IoError::Parse { line: line_no, detail: "k must be positive".into() });
    }
    let mut sides = [Vec::with_capacity(k), Vec::with_capacity(k)];
    for (side, name) in [(0, "man"), (1, "woman")] {
        for agent in 0..k {
            let (line_no, line) = lines.next().ok_or_else(|| IoError::Parse {
                line: usize::MAX,
                detail: format!("unexpected end of input, missing the list of {name} {}", agent + 1),
            })?;
            sides[side].push(parse_index_line(line_no, line, k, "preference")?);
        }
    }
    if let Some((line_no, line)) = lines.next() {
        return Err(IoError::Parse {
            line: line_no,
            detail: format!("trailing content {line:?} after {} preference lists", 2 * k),
        });
    }
    let [men, women] = sides;
    Ok(MarriageInstance::new(men, women)?)
}

pub fn serialize_instance(inst: &MarriageInstance) -> String {
    let k = inst.k();
    let mut out = format!("{k}\n");
    let list = |prefs: &[usize]| {
        prefs.iter().map(|&p| (p + 1).to_string()).collect::<Vec<_>>().join(" ")
    };
    for m in 0..k {
        out.push_str(&list(inst.man_prefs(m)));
        out.push('\n');
    }
    for w in 0..k {
        out.push_str(&list(inst.woman_prefs(w)));
        out.push('\n');
    }
    out
}

/// Matching format: one `man woman` pair per significant line, 1-based.
pub fn parse_matching(text: &str, k: usize) -> Result<Matching, IoError> {
    let mut pairs = Vec::new();
    for (line_no, line) in significant_lines(text) {
        let fields = parse_index_line(line_no, line, k, "matching")?;
        match fields[..] {
            [man, woman] => pairs.push((man, woman)),
            _ => {
                return Err(IoError::Parse {
                    line: line_no,
                    detail: format!("expected a `man woman` pair, got {} fields", fields.len()),
                });
            }
        }
    }
    Ok(Matching::from_pairs(k, &pairs)?)
}

pub fn serialize_matching(matching: &Matching) -> String {
    let mut out = String::new();
    for (man, woman) in matching.pairs() {
        out.push_str(&format!("{} {}\n", man + 1, woman + 1));
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TraceDocument {
    schema: String,
    #[serde(flatten)]
    trace: PivotTrace,
}

fn shift_ordinal(rec: &OrdinalPivotRecord, delta: i64) -> Result<OrdinalPivotRecord, IoError> {
    Ok(OrdinalPivotRecord {
        leaving: shift(rec.leaving, delta)?,
        reference: shift(rec.reference, delta)?,
        entering: shift(rec.entering, delta)?,
        row_loser: shift(rec.row_loser, delta)?,
        row_gainer: shift(rec.row_gainer, delta)?,
    })
}

fn shift(index: usize, delta: i64) -> Result<usize, IoError> {
    index.checked_add_signed(delta as isize).ok_or(IoError::ZeroIndex)
}

fn shift_all(indices: &[usize], delta: i64) -> Result<Vec<usize>, IoError> {
    indices.iter().map(|&j| shift(j, delta)).collect()
}

/// Shifts every column, row, and iteration index of a trace by +1 or -1.
fn shift_trace(trace: &PivotTrace, delta: i64) -> Result<PivotTrace, IoError> {
    let iterations = trace
        .iterations
        .iter()
        .map(|it| {
            Ok(TraceIteration {
                index: shift(it.index, delta)?,
                b_columns: it.b_columns.as_deref().map(|c| shift_all(c, delta)).transpose()?,
                d_columns: it.d_columns.as_deref().map(|c| shift_all(c, delta)).transpose()?,
                entering: shift(it.entering, delta)?,
                candidates: shift_all(&it.candidates, delta)?,
                leaving: shift(it.leaving, delta)?,
                ordinal: it.ordinal.as_ref().map(|r| shift_ordinal(r, delta)).transpose()?,
                utility: it.utility.clone(),
                phase: it.phase,
                separator: it.separator,
                sum_women_utility: it.sum_women_utility,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(PivotTrace {
        n: trace.n,
        m: trace.m,
        k: trace.k,
        iterations,
        final_columns: shift_all(&trace.final_columns, delta)?,
    })
}

/// Serializes a trace as pretty-printed json, 1-based, with the schema id.
pub fn serialize_trace(trace: &PivotTrace) -> String {
    let doc = TraceDocument {
        schema: TRACE_SCHEMA.to_string(),
        trace: shift_trace(trace, 1).expect("shifting up never underflows"),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("trace serialization is infallible");
    out.push('\n');
    out
}

pub fn parse_trace(text: &str) -> Result<PivotTrace, IoError> {
    let doc: TraceDocument = serde_json::from_str(text)?;
    if doc.schema != TRACE_SCHEMA {
        return Err(IoError::SchemaMismatch { found: doc.schema });
    }
    shift_trace(&doc.trace, -1)
}

/// One csv row per iteration: iteration, separator, phase, women's total
/// utility, entering column, leaving column. Iterations and columns are
/// 1-based; fields a summary-level trace lacks are left empty.
pub fn trace_csv_summary(trace: &PivotTrace) -> String {
    let mut out = String::from("iteration,separator,phase,sum_women_utility,entering,leaving\n");
    let opt = |v: Option<String>| v.unwrap_or_default();
    for it in &trace.iterations {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            it.index + 1,
            opt(it.separator.map(|s| s.to_string())),
            opt(it.phase.map(|p| match p {
                Phase::L => "L".to_string(),
                Phase::M => "M".to_string(),
            })),
            opt(it.sum_women_utility.map(|s| s.to_string())),
            it.entering + 1,
            it.leaving + 1,
        ));
    }
    out
}
