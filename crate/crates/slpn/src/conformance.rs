//! Event-log ingestion and the unit Earth Movers' stochastic conformance
//! measure between a log and a bounded LSP.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::analysis::AnalysisOptions;
use crate::automata::{product, silence, trace_dfa};
use crate::error::{Error, Result};
use crate::markov::{assemble_system, solve_linear};
use crate::net::{Label, Lsp};
use crate::reachability::build_reachability_graph;

/// A finite multiset of traces. Frequencies L(sigma) = count/total define a
/// probability distribution over the distinct traces.
#[derive(Debug, Clone, Default)]
pub struct StochasticLog {
    entries: BTreeMap<Vec<Label>, u64>,
    total: u64,
}

impl StochasticLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, trace: Vec<Label>, count: u64) -> Result<()> {
        if count == 0 {
            return Err(Error::Parse("trace count must be positive".into()));
        }
        *self.entries.entry(trace).or_insert(0) += count;
        self.total += count;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn num_distinct(&self) -> usize {
        self.entries.len()
    }

    /// Distinct traces with counts, in lexicographic trace order.
    pub fn entries(&self) -> impl Iterator<Item = (&Vec<Label>, u64)> {
        self.entries.iter().map(|(t, &c)| (t, c))
    }

    pub fn frequency(&self, trace: &[Label]) -> f64 {
        match self.entries.get(trace) {
            Some(&c) => c as f64 / self.total as f64,
            None => 0.0,
        }
    }
}

/// Splits a comma-separated label list into a trace. Labels containing
/// commas must be double-quoted; whitespace around separators is trimmed.
/// Empty input is the empty trace.
pub fn parse_trace(text: &str) -> Result<Vec<Label>> {
    let mut labels = Vec::new();
    let mut rest = text.trim();
    if rest.is_empty() {
        return Ok(labels);
    }
    loop {
        rest = rest.trim_start();
        let token;
        if let Some(inner) = rest.strip_prefix('"') {
            let end = inner
                .find('"')
                .ok_or_else(|| Error::Parse("unterminated quoted label".into()))?;
            token = inner[..end].to_string();
            rest = &inner[end + 1..];
        } else {
            let end = rest.find(',').unwrap_or(rest.len());
            token = rest[..end].trim_end().to_string();
            rest = &rest[end..];
        }
        if token.is_empty() {
            return Err(Error::Parse("empty label in trace".into()));
        }
        labels.push(Label::activity(token)?);
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        rest = rest
            .strip_prefix(',')
            .ok_or_else(|| Error::Parse("expected comma between labels".into()))?;
        if rest.trim().is_empty() {
            return Err(Error::Parse("empty label in trace".into()));
        }
    }
    Ok(labels)
}

pub fn format_trace(trace: &[Label]) -> String {
    trace
        .iter()
        .map(|l| {
            let a = l.as_activity().unwrap_or(crate::net::TAU);
            if a.contains(',') || a != a.trim() {
                format!("\"{a}\"")
            } else {
                a.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// Log CSV: one `<count> ; <label>,<label>,...` line per trace variant,
/// `<count> ;` for the empty trace, `#` comments. Duplicate variants merge.
pub fn parse_log_csv(text: &str) -> Result<StochasticLog> {
    let mut log = StochasticLog::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let err = |e: Error| Error::AtLine(lineno + 1, Box::new(e));
        let (count_part, trace_part) = line
            .split_once(';')
            .ok_or_else(|| err(Error::Parse("expected `<count> ; <trace>`".into())))?;
        let count: i64 = count_part
            .trim()
            .parse()
            .map_err(|_| err(Error::Parse(format!("bad count `{}`", count_part.trim()))))?;
        if count <= 0 {
            return Err(err(Error::Parse(format!("nonpositive count {count}"))));
        }
        let trace = parse_trace(trace_part).map_err(err)?;
        log.add(trace, count as u64).map_err(err)?;
    }
    Ok(log)
}

pub fn serialize_log_csv(log: &StochasticLog) -> String {
    let mut out = String::new();
    for (trace, count) in log.entries() {
        writeln!(out, "{count} ; {}", format_trace(trace)).unwrap();
    }
    out
}

/// Value of a `<string key="concept:name" value="..."/>` attribute pair.
fn concept_name(e: &quick_xml::events::BytesStart<'_>) -> Result<Option<String>> {
    let mut key = None;
    let mut value = None;
    for attr in e.attributes().flatten() {
        let text = attr
            .unescape_value()
            .map_err(|e| Error::Parse(format!("xml: {e}")))?
            .into_owned();
        match attr.key.as_ref() {
            b"key" => key = Some(text),
            b"value" => value = Some(text),
            _ => {}
        }
    }
    Ok(if key.as_deref() == Some("concept:name") { value } else { None })
}

/// Minimal XES read path: one log entry per `<trace>`, the activity of each
/// `<event>` taken from its `concept:name` string attribute. Everything
/// else is ignored. Events without an activity are skipped with a warning.
pub fn parse_xes(text: &str) -> Result<(StochasticLog, Vec<String>)> {
    let mut reader = Reader::from_str(text);
    reader.trim_text(true);
    let mut log = StochasticLog::new();
    let mut warnings = Vec::new();
    let mut trace_count = 0usize;
    let mut in_trace = false;
    let mut in_event = false;
    let mut current_trace: Vec<Label> = Vec::new();
    let mut current_activity: Option<String> = None;
    let mut skipped = 0usize;
    loop {
        match reader
            .read_event()
            .map_err(|e| Error::Parse(format!("xml: {e}")))?
        {
            Event::Start(e) => match e.name().as_ref() {
                b"trace" => {
                    in_trace = true;
                    trace_count += 1;
                    current_trace.clear();
                }
                b"event" if in_trace => {
                    in_event = true;
                    current_activity = None;
                }
                b"string" if in_event => {
                    if let Some(v) = concept_name(&e)? {
                        current_activity = Some(v);
                    }
                }
                _ => {}
            },
            Event::Empty(e) => match e.name().as_ref() {
                b"trace" => {
                    trace_count += 1;
                    log.add(Vec::new(), 1)?;
                }
                b"event" if in_trace => skipped += 1,
                b"string" if in_event => {
                    if let Some(v) = concept_name(&e)? {
                        current_activity = Some(v);
                    }
                }
                _ => {}
            },
            Event::End(e) => match e.name().as_ref() {
                b"trace" => {
                    in_trace = false;
                    log.add(std::mem::take(&mut current_trace), 1)?;
                }
                b"event" => {
                    if in_event {
                        match current_activity.take() {
                            Some(a) => current_trace.push(Label::activity(a)?),
                            None => skipped += 1,
                        }
                    }
                    in_event = false;
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if trace_count == 0 {
        return Err(Error::Parse("no traces found in XES input".into()));
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} event(s) without concept:name skipped"));
    }
    Ok((log, warnings))
}

#[derive(Debug, Clone)]
pub struct UemscRow {
    pub trace: Vec<Label>,
    pub log_frequency: f64,
    pub model_probability: f64,
    /// max(L(sigma) - P(sigma), 0)
    pub contribution: f64,
}

#[derive(Debug, Clone)]
pub struct UemscReport {
    pub value: f64,
    pub rows: Vec<UemscRow>,
    pub rg_states: usize,
}

/// uEMSC = 1 - sum over log traces of max(L(sigma) - P(sigma | lsp), 0).
/// The reachability graph is built once and shared by all per-trace
/// products; rows come out in lexicographic trace order.
pub fn uemsc(log: &StochasticLog, lsp: &Lsp) -> Result<UemscReport> {
    uemsc_with(log, lsp, &AnalysisOptions::default())
}

pub fn uemsc_with(
    log: &StochasticLog,
    lsp: &Lsp,
    opts: &AnalysisOptions,
) -> Result<UemscReport> {
    if log.total() == 0 {
        return Err(Error::Analysis("empty log".into()));
    }
    let rg = build_reachability_graph(lsp, opts.max_states)?;
    let mut rows = Vec::new();
    let mut deficit = 0.0f64;
    for (trace, count) in log.entries() {
        let sdfa = silence(&trace_dfa(trace)?)?;
        let prod = product(&rg.sts, &sdfa)?;
        let p = if prod.finals.is_empty() {
            0.0
        } else {
            let system = assemble_system(&prod, &prod.finals.clone())?;
            solve_linear(&system, opts.solver)?[prod.initial]
        };
        let freq = count as f64 / log.total() as f64;
        let contribution = (freq - p).max(0.0);
        deficit += contribution;
        rows.push(UemscRow {
            trace: trace.clone(),
            log_frequency: freq,
            model_probability: p,
            contribution,
        });
    }
    Ok(UemscReport {
        value: (1.0 - deficit).clamp(0.0, 1.0),
        rows,
        rg_states: rg.sts.num_states(),
    })
}
