//! Per-run metrics: one row per completed operation, the view-install
//! timeline, and an aggregate summary. The CSV and summary JSON renderings
//! are byte-stable for a fixed config and seed.

use crate::harness::config::Mode;
use crate::time::as_ms;
use crate::time::SimTime;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpRow {
    pub client: u64,
    pub kind: String,
    pub invoke_ms: f64,
    pub complete_ms: f64,
    /// Quorum latency: request broadcast to quorum completion, summed over
    /// the two phases (final attempts).
    pub latency_ms: f64,
    pub view: u64,
    pub restarts: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstallRow {
    pub time_ms: f64,
    pub server: usize,
    pub view: u64,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub mode: String,
    pub seed: u64,
    pub duration_ms: u64,
    pub ops_completed: u64,
    pub ops_incomplete: u64,
    pub restarts: u64,
    pub last_view: u64,
    pub mean_latency_ms: f64,
    pub p50_latency_ms: f64,
    pub p95_latency_ms: f64,
    pub max_latency_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub summary: Summary,
    pub ops: Vec<OpRow>,
    pub installs: Vec<InstallRow>,
}

impl MetricsReport {
    pub fn build(
        mode: Mode,
        seed: u64,
        duration_ms: u64,
        mut ops: Vec<OpRow>,
        installs: Vec<InstallRow>,
        ops_incomplete: u64,
    ) -> Self {
        ops.sort_by(|a, b| {
            a.invoke_ms
                .partial_cmp(&b.invoke_ms)
                .unwrap()
                .then(a.client.cmp(&b.client))
        });
        let mut latencies: Vec<f64> = ops.iter().map(|o| o.latency_ms).collect();
        latencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = if latencies.is_empty() {
            0.0
        } else {
            latencies.iter().sum::<f64>() / latencies.len() as f64
        };
        let pct = |p: f64| -> f64 {
            if latencies.is_empty() {
                return 0.0;
            }
            let idx = ((latencies.len() as f64 - 1.0) * p).round() as usize;
            latencies[idx]
        };
        let summary = Summary {
            mode: match mode {
                Mode::Weighted => "weighted".into(),
                Mode::Static => "static".into(),
            },
            seed,
            duration_ms,
            ops_completed: ops.len() as u64,
            ops_incomplete,
            restarts: ops.iter().map(|o| o.restarts as u64).sum(),
            last_view: installs.iter().map(|i| i.view).max().unwrap_or(0),
            mean_latency_ms: mean,
            p50_latency_ms: pct(0.5),
            p95_latency_ms: pct(0.95),
            max_latency_ms: latencies.last().copied().unwrap_or(0.0),
        };
        MetricsReport {
            summary,
            ops,
            installs,
        }
    }

    /// Mean quorum latency over operations completing at or after `cutoff`.
    pub fn mean_latency_completed_after(&self, cutoff: SimTime) -> Option<f64> {
        let cutoff_ms = as_ms(cutoff);
        let late: Vec<f64> = self
            .ops
            .iter()
            .filter(|o| o.complete_ms >= cutoff_ms)
            .map(|o| o.latency_ms)
            .collect();
        if late.is_empty() {
            None
        } else {
            Some(late.iter().sum::<f64>() / late.len() as f64)
        }
    }

    /// Renders the per-operation rows as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("client,kind,invoke_ms,complete_ms,latency_ms,view\n");
        for op in &self.ops {
            out.push_str(&format!(
                "{},{},{:.3},{:.3},{:.3},{}\n",
                op.client, op.kind, op.invoke_ms, op.complete_ms, op.latency_ms, op.view
            ));
        }
        out
    }

    pub fn to_summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }
}
