//! CSV trace files.
//!
//! A trace starts with `#` metadata lines, then a header row naming every
//! column, then one row per record. Values are written with 17 significant
//! digits so that reading a trace back reproduces every finite value exactly.
//! A run that aborted ends with a `# error` line.

use std::io::{self, Write};

use nalgebra::DVector;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::plant::TraceRecord;

const MAGIC: &str = "# collocated trace";

#[derive(Debug, Error, PartialEq)]
#[error("trace line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMeta {
    pub config_sha256: String,
    pub seed: u64,
    pub scenario: Option<String>,
    pub law: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceAbort {
    pub t: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
    pub abort: Option<TraceAbort>,
}

/// SHA-256 of the config text, hex encoded.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dims {
    n: usize,
    m: usize,
    p: usize,
}

impl Dims {
    fn of(rec: &TraceRecord) -> Self {
        Self {
            n: rec.q.len(),
            m: rec.e.len(),
            p: rec.pihat.len(),
        }
    }

    fn groups(&self) -> [(&'static str, usize); 7] {
        [
            ("q", self.n),
            ("qdot", self.n),
            ("e", self.m),
            ("s", self.n),
            ("xi", self.n),
            ("pihat", self.p),
            ("tau_bar", self.m),
        ]
    }

    fn width(&self) -> usize {
        1 + 4 * self.n + 2 * self.m + self.p + 5
    }
}

const SCALARS: [&str; 5] = ["det_Mn_hat", "eta", "V", "Vdot", "pihat_delta_identity"];

/// Column names in record order for the given dimensions.
pub fn header(n: usize, m: usize, p: usize) -> Vec<String> {
    let dims = Dims { n, m, p };
    let mut cols = vec!["t".to_string()];
    for (name, len) in dims.groups() {
        cols.extend((1..=len).map(|i| format!("{name}{i}")));
    }
    cols.extend(SCALARS.iter().map(|s| s.to_string()));
    cols
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

pub fn write_trace<W: Write>(mut w: W, trace: &TraceFile) -> io::Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "# config_sha256 = {}", trace.meta.config_sha256)?;
    writeln!(w, "# seed = {}", trace.meta.seed)?;
    if let Some(s) = &trace.meta.scenario {
        writeln!(w, "# scenario = {}", one_line(s))?;
    }
    if let Some(l) = &trace.meta.law {
        writeln!(w, "# law = {}", one_line(l))?;
    }
    if let Some(first) = trace.records.first() {
        let d = Dims::of(first);
        writeln!(w, "{}", header(d.n, d.m, d.p).join(","))?;
    }
    let mut row = String::new();
    for rec in &trace.records {
        row.clear();
        row.push_str(&fmt(rec.t));
        let vectors = [&rec.q, &rec.qdot, &rec.e, &rec.s, &rec.xi, &rec.pihat, &rec.tau_bar];
        for v in vectors {
            for x in v.iter() {
                row.push(',');
                row.push_str(&fmt(*x));
            }
        }
        for x in [rec.det_mn_hat, rec.eta, rec.v, rec.vdot, rec.pihat_delta_identity] {
            row.push(',');
            row.push_str(&fmt(x));
        }
        writeln!(w, "{row}")?;
    }
    if let Some(abort) = &trace.abort {
        match abort.t {
            Some(t) => writeln!(w, "# error t = {} : {}", fmt(t), one_line(&abort.reason))?,
            None => writeln!(w, "# error : {}", one_line(&abort.reason))?,
        }
    }
    Ok(())
}

/// Infers dimensions from a header row.
fn parse_header(cols: &[&str]) -> Option<Dims> {
    let count = |name: &str| {
        cols.iter()
            .filter(|c| {
                c.strip_prefix(name)
                    .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|ch| ch.is_ascii_digit()))
            })
            .count()
    };
    let dims = Dims {
        n: count("q"),
        m: count("e"),
        p: count("pihat"),
    };
    let expected = header(dims.n, dims.m, dims.p);
    (expected.len() == cols.len() && expected.iter().zip(cols).all(|(a, b)| a == b)).then_some(dims)
}

pub fn read_trace(text: &str) -> Result<TraceFile, TraceError> {
    let err = |line: usize, message: String| TraceError { line, message };
    let mut meta = TraceMeta::default();
    let mut dims: Option<Dims> = None;
    let mut records = Vec::new();
    let mut abort = None;
    let mut saw_magic = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if abort.is_some() {
            return Err(err(line, "content after the error record".into()));
        }
        if let Some(comment) = raw.strip_prefix('#') {
            let comment = comment.trim();
            if raw == MAGIC {
                saw_magic = true;
            } else if let Some(rest) = comment.strip_prefix("error") {
                abort = Some(parse_abort(rest).ok_or_else(|| err(line, "malformed error record".into()))?);
            } else if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim().to_string();
                match key.trim() {
                    "config_sha256" => meta.config_sha256 = value,
                    "seed" => {
                        meta.seed = value.parse().map_err(|_| err(line, format!("bad seed `{value}`")))?
                    }
                    "scenario" => meta.scenario = Some(value),
                    "law" => meta.law = Some(value),
                    _ => {}
                }
            }
            continue;
        }
        if !saw_magic {
            return Err(err(line, "missing trace preamble".into()));
        }
        let cols: Vec<&str> = raw.split(',').collect();
        let Some(d) = dims else {
            dims = Some(parse_header(&cols).ok_or_else(|| err(line, "unrecognised header row".into()))?);
            continue;
        };
        if cols.len() != d.width() {
            return Err(err(line, format!("expected {} columns, found {}", d.width(), cols.len())));
        }
        let values = cols
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(line, e.to_string()))?;
        records.push(record_from(&values, d));
    }
    if !saw_magic {
        return Err(err(1, "missing trace preamble".into()));
    }
    Ok(TraceFile {
        meta,
        records,
        abort,
    })
}

fn parse_abort(rest: &str) -> Option<TraceAbort> {
    let (head, reason) = rest.split_once(':')?;
    let head = head.trim();
    let t = if head.is_empty() {
        None
    } else {
        Some(head.strip_prefix("t")?.trim().strip_prefix('=')?.trim().parse().ok()?)
    };
    Some(TraceAbort {
        t,
        reason: reason.trim().to_string(),
    })
}

fn record_from(values: &[f64], d: Dims) -> TraceRecord {
    let mut at = 1;
    let mut take = |len: usize| {
        let v = DVector::from_column_slice(&values[at..at + len]);
        at += len;
        v
    };
    let q = take(d.n);
    let qdot = take(d.n);
    let e = take(d.m);
    let s = take(d.n);
    let xi = take(d.n);
    let pihat = take(d.p);
    let tau_bar = take(d.m);
    let tail = take(SCALARS.len());
    TraceRecord {
        t: values[0],
        q,
        qdot,
        e,
        s,
        xi,
        pihat,
        tau_bar,
        det_mn_hat: tail[0],
        eta: tail[1],
        v: tail[2],
        vdot: tail[3],
        pihat_delta_identity: tail[4],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn record(t: f64) -> TraceRecord {
        TraceRecord {
            t,
            q: dvector![0.1, -1.0 / 3.0],
            qdot: dvector![1e-300, -2.5],
            e: dvector![std::f64::consts::PI],
            s: dvector![0.0, -0.0],
            xi: dvector![1.0, 2.0],
            pihat: dvector![1.5, -0.11, 0.01, 2.0, -0.24, 0.05, 0.05],
            tau_bar: dvector![0.7],
            det_mn_hat: 5.000000000000001,
            eta: 0.0,
            v: 12.25,
            vdot: -0.125,
            pihat_delta_identity: 1e-17,
        }
    }

    fn file(records: Vec<TraceRecord>, abort: Option<TraceAbort>) -> TraceFile {
        TraceFile {
            meta: TraceMeta {
                config_sha256: config_hash("x"),
                seed: 42,
                scenario: Some("sim".into()),
                law: Some("theorem1".into()),
            },
            records,
            abort,
        }
    }

    fn roundtrip(f: &TraceFile) -> TraceFile {
        let mut buf = Vec::new();
        write_trace(&mut buf, f).unwrap();
        read_trace(std::str::from_utf8(&buf).unwrap()).unwrap()
    }

    #[test]
    fn header_follows_record_order() {
        let h = header(2, 1, 7);
        assert_eq!(&h[..6], &["t", "q1", "q2", "qdot1", "qdot2", "e1"]);
        assert_eq!(h.last().unwrap(), "pihat_delta_identity");
        assert_eq!(h.len(), Dims { n: 2, m: 1, p: 7 }.width());
    }

    #[test]
    fn roundtrip_is_exact() {
        let f = file(vec![record(0.0), record(0.01)], None);
        assert_eq!(roundtrip(&f), f);
    }

    #[test]
    fn error_record_survives_roundtrip() {
        let abort = TraceAbort {
            t: Some(3.25),
            reason: "singular estimated minor: det = 0".into(),
        };
        let f = file(vec![record(0.0)], Some(abort));
        assert_eq!(roundtrip(&f), f);
        let f = file(
            Vec::new(),
            Some(TraceAbort {
                t: None,
                reason: "bad".into(),
            }),
        );
        assert_eq!(roundtrip(&f), f);
    }

    #[test]
    fn rejects_malformed_rows() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &file(vec![record(0.0)], None)).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("1.0,2.0\n");
        let e = read_trace(&text).unwrap_err();
        assert!(e.message.contains("columns"), "{e}");
        assert!(read_trace("t,q1\n").is_err());
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(
            config_hash(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
