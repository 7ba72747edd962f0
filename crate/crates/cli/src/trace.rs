//! Trace CSV: `iter,feas_norm,obj,h_dist_sq,xi_slack,block_move_1..block_move_p,y_move`.
//!
//! Numbers use the shortest decimal that parses back to the same `f64`, so a
//! written trace reads back bit-identically. Missing certificate values are
//! empty fields.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use lqpadmm::solver::TraceRecord;

pub fn header(blocks: usize) -> Vec<String> {
    let mut h: Vec<String> = ["iter", "feas_norm", "obj", "h_dist_sq", "xi_slack"].map(String::from).to_vec();
    h.extend((1..=blocks).map(|i| format!("block_move_{i}")));
    h.push("y_move".into());
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord], blocks: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(blocks))?;
    for row in trace {
        if row.block_moves.len() != blocks {
            bail!("trace row {} has {} block moves, expected {blocks}", row.iter, row.block_moves.len());
        }
        let mut rec = vec![
            row.iter.to_string(),
            row.feas_norm.to_string(),
            row.objective.to_string(),
            opt(row.h_dist_sq),
            opt(row.certificate_slack),
        ];
        rec.extend(row.block_moves.iter().map(|m| m.to_string()));
        rec.push(row.y_move.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_to_string(trace: &[TraceRecord], blocks: usize) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace, blocks)?;
    Ok(String::from_utf8(buf)?)
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let head = r.headers()?.clone();
    let width = head.len();
    if width < 6 {
        bail!("trace header has {width} columns, expected at least 6");
    }
    let blocks = width - 6;
    let expected = header(blocks);
    if head.iter().ne(expected.iter().map(String::as_str)) {
        bail!("unexpected trace header {:?}", head.iter().collect::<Vec<_>>());
    }
    let num = |s: &str, col: &str, line: usize| -> Result<f64> {
        s.parse().with_context(|| format!("trace row {line}, column `{col}`: {s:?}"))
    };
    let optional = |s: &str, col: &str, line: usize| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s, col, line).map(Some)
        }
    };
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        out.push(TraceRecord {
            iter: rec[0].parse().with_context(|| format!("trace row {line}, column `iter`"))?,
            feas_norm: num(&rec[1], "feas_norm", line)?,
            objective: num(&rec[2], "obj", line)?,
            h_dist_sq: optional(&rec[3], "h_dist_sq", line)?,
            certificate_slack: optional(&rec[4], "xi_slack", line)?,
            block_moves: (0..blocks)
                .map(|i| num(&rec[5 + i], &expected[5 + i], line))
                .collect::<Result<_>>()?,
            y_move: num(&rec[5 + blocks], "y_move", line)?,
        });
    }
    Ok(out)
}
