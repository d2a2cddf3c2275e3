//! Chain files (JSON) and curve outputs (CSV).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::{FiniteChain, TimeKind};
use crate::error::{Error, Result};
use crate::hpg::CurveRow;
use crate::hitting::SurvivalCurve;
use crate::montecarlo::EmpiricalSurvival;

/// On-disk chain: continuous chains list off-diagonal rates only, discrete chains list kernel
/// entries including self-loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub time: TimeKind,
    pub states: Vec<String>,
    pub entries: Vec<(usize, usize, f64)>,
}

impl ChainSpec {
    pub fn from_chain(chain: &FiniteChain) -> Self {
        let kind = chain.time_kind();
        let entries = chain
            .generator()
            .iter()
            .filter(|&(i, j, v)| v != 0.0 && (i != j || kind == TimeKind::Discrete))
            .collect();
        ChainSpec { time: kind, states: chain.labels().to_vec(), entries }
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n");
        s += &format!("  \"time\": {},\n", serde_json::to_string(&self.time).unwrap());
        s += &format!("  \"states\": {},\n", serde_json::to_string(&self.states).unwrap());
        s += "  \"entries\": [";
        for (k, (i, j, v)) in self.entries.iter().enumerate() {
            s += if k == 0 { "\n    " } else { ",\n    " };
            s += &serde_json::to_string(&(i, j, v)).unwrap();
        }
        s += if self.entries.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" };
        s
    }
}

pub fn chain_to_json(chain: &FiniteChain) -> String {
    ChainSpec::from_chain(chain).to_json()
}

/// Byte offsets of the elements of the top-level "entries" array.
fn entry_offsets(text: &str) -> Vec<usize> {
    let b = text.as_bytes();
    let mut depth = 0i32;
    let mut in_str = false;
    let mut escaped = false;
    let mut key_start = None;
    let mut pending_key: Option<&str> = None;
    let mut in_entries = false;
    let mut out = Vec::new();
    for (i, &c) in b.iter().enumerate() {
        if in_str {
            if escaped {
                escaped = false;
            } else if c == b'\\' {
                escaped = true;
            } else if c == b'"' {
                in_str = false;
                if depth == 1 {
                    pending_key = key_start.map(|s| &text[s..i]);
                }
            }
            continue;
        }
        match c {
            b'"' => {
                in_str = true;
                key_start = Some(i + 1);
            }
            b'[' | b'{' => {
                depth += 1;
                if depth == 2 && c == b'[' && pending_key == Some("entries") {
                    in_entries = true;
                } else if depth == 3 && in_entries {
                    out.push(i);
                }
            }
            b']' | b'}' => {
                if depth == 2 {
                    in_entries = false;
                }
                depth -= 1;
            }
            b',' if depth == 1 => pending_key = None,
            _ => {}
        }
    }
    out
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset].bytes().filter(|&c| c == b'\n').count() + 1
}

/// Parses and validates a chain file; errors name the line and field at fault.
pub fn chain_from_json(text: &str) -> Result<FiniteChain> {
    let spec: ChainSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let offsets = entry_offsets(text);
    let at = |k: usize| offsets.get(k).map(|&o| format!("line {}: ", line_of(text, o))).unwrap_or_default();
    let n = spec.states.len();
    if n == 0 {
        return Err(Error::Parse("field `states`: no states".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for (k, &(i, j, v)) in spec.entries.iter().enumerate() {
        if i >= n || j >= n {
            return Err(Error::Parse(format!("{}entries[{k}]: index out of range for {n} states", at(k))));
        }
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Parse(format!("{}entries[{k}]: rate {v} must be finite and nonnegative", at(k))));
        }
        if i == j && spec.time == TimeKind::Continuous {
            return Err(Error::Parse(format!("{}entries[{k}]: diagonal entries are derived, not stored", at(k))));
        }
        if !seen.insert((i, j)) {
            return Err(Error::Parse(format!("{}entries[{k}]: duplicate entry ({i}, {j})", at(k))));
        }
    }
    let built = match spec.time {
        TimeKind::Continuous => FiniteChain::continuous(spec.states, &spec.entries),
        TimeKind::Discrete => FiniteChain::discrete(spec.states, &spec.entries),
    };
    built.map_err(|e| match e {
        Error::InvalidChain(v) => {
            let msgs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            Error::Parse(format!("field `entries`: {}", msgs.join("; ")))
        }
        other => other,
    })
}

pub fn read_chain(path: &std::path::Path) -> Result<FiniteChain> {
    let text = std::fs::read_to_string(path)?;
    chain_from_json(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn csv_writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header).map_err(std::io::Error::from)?;
    Ok(wr)
}

fn finish<W: Write>(mut wr: csv::Writer<W>) -> Result<()> {
    wr.flush()?;
    Ok(())
}

fn put<W: Write>(wr: &mut csv::Writer<W>, fields: &[String]) -> Result<()> {
    wr.write_record(fields).map_err(std::io::Error::from)?;
    Ok(())
}

pub fn write_measure_csv<W: Write>(w: W, labels: &[String], weights: &[f64]) -> Result<()> {
    let mut wr = csv_writer(w, &["state_label", "weight"])?;
    for (l, v) in labels.iter().zip(weights) {
        put(&mut wr, &[l.clone(), v.to_string()])?;
    }
    finish(wr)
}

/// Rows (t, d(t), d̄(t)).
pub fn write_profile_csv<W: Write>(w: W, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut wr = csv_writer(w, &["t", "d", "d_bar"])?;
    for (t, d, db) in rows {
        put(&mut wr, &[t.to_string(), d.to_string(), db.to_string()])?;
    }
    finish(wr)
}

pub fn write_survival_csv<W: Write>(w: W, curve: &SurvivalCurve, t_star: f64) -> Result<()> {
    let mut wr = csv_writer(w, &["t", "survival", "exp_reference", "deviation"])?;
    for r in curve.against_exponential(t_star) {
        put(&mut wr, &r.map(|v| v.to_string()))?;
    }
    finish(wr)
}

pub fn write_report_csv<W: Write>(w: W, curves: &[(String, Vec<CurveRow>)]) -> Result<()> {
    let mut wr = csv_writer(w, &["start", "t", "survival", "exp", "weighted_deviation"])?;
    for (start, rows) in curves {
        for r in rows {
            put(
                &mut wr,
                &[start.clone(), r.t.to_string(), r.survival.to_string(), r.exp.to_string(), r.weighted_deviation.to_string()],
            )?;
        }
    }
    finish(wr)
}

pub fn write_samples_csv<W: Write>(w: W, emp: &EmpiricalSurvival) -> Result<()> {
    let mut wr = csv_writer(w, &["trajectory_index", "hitting_time", "censored_flag"])?;
    for r in &emp.records {
        put(&mut wr, &[r.trajectory_index.to_string(), r.hitting_time.to_string(), u8::from(r.censored).to_string()])?;
    }
    finish(wr)
}
