use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::scheduler::ConfigId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    EpochReport,
    RungReport,
    Stop,
    Promote,
    Pause,
    Complete,
    /// The scheduler had no work for the worker (waiting for a rung quota).
    Idle,
    /// The job was still running when the time budget ran out.
    Timeout,
}

impl EventKind {
    /// Kinds after which a task holds no worker.
    pub fn releases_worker(self) -> bool {
        matches!(self, EventKind::Stop | EventKind::Pause | EventKind::Complete | EventKind::Timeout)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub worker: usize,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigId>,
    /// Epoch or rung level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<f64>,
    /// Duration of the epoch (epoch reports only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventTrace {
    pub events: Vec<TraceEvent>,
    /// `(time, best metric so far)` at every improvement.
    pub incumbent: Vec<(f64, f64)>,
    /// Sum of the durations of all executed epochs.
    pub busy_seconds: f64,
}

impl EventTrace {
    pub fn best_metric(&self) -> Option<f64> {
        self.incumbent.last().map(|&(_, y)| y)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Rebuilds a trace from its JSON-lines events. The incumbent series is
    /// recomputed from the epoch reports.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, TraceParseError> {
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| TraceParseError { line: i + 1, message: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let e: TraceEvent = serde_json::from_str(&line)
                .map_err(|e| TraceParseError { line: i + 1, message: e.to_string() })?;
            if !e.time.is_finite() || events.last().is_some_and(|p: &TraceEvent| e.time < p.time) {
                return Err(TraceParseError { line: i + 1, message: "event times must be finite and non-decreasing".into() });
            }
            if e.metric.is_some_and(|m| !m.is_finite()) {
                return Err(TraceParseError { line: i + 1, message: "metric must be finite".into() });
            }
            events.push(e);
        }
        let mut trace = EventTrace { events, ..Default::default() };
        for e in &trace.events {
            if e.kind == EventKind::EpochReport {
                trace.busy_seconds += e.seconds.unwrap_or(0.0);
                if let Some(y) = e.metric {
                    if trace.best_metric().is_none_or(|b| y < b) {
                        trace.incumbent.push((e.time, y));
                    }
                }
            }
        }
        Ok(trace)
    }

    /// Writes `time,incumbent,regret` rows for every incumbent change.
    pub fn write_series_csv<W: Write>(&self, out: W, y_star: f64) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "incumbent", "regret"])?;
        for ((t, y), (_, r)) in self.incumbent.iter().zip(regret_series(&self.incumbent, y_star)) {
            w.write_record([t.to_string(), y.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// Immediate regret `incumbent(t) - y_star` at every incumbent change.
pub fn regret_series(incumbent: &[(f64, f64)], y_star: f64) -> Vec<(f64, f64)> {
    incumbent.iter().map(|&(t, y)| (t, y - y_star)).collect()
}

/// Value of a step function given by sorted `(t, v)` breakpoints at time
/// `t`, or `None` before the first breakpoint.
pub fn step_value(series: &[(f64, f64)], t: f64) -> Option<f64> {
    let i = series.partition_point(|&(s, _)| s <= t);
    (i > 0).then(|| series[i - 1].1)
}
