use std::time::Instant;

use serde::Serialize;

use crate::compile::CompiledProtocol;

use super::{run_regional, Endpoints, RunStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    /// Items delivered per repetition (reads performed).
    pub items: usize,
    /// Wall time per delivered item, one entry per repetition, sorted.
    pub ns_per_item: Vec<f64>,
}

impl BenchSummary {
    fn quantile(&self, q: f64) -> Option<f64> {
        if self.ns_per_item.is_empty() {
            return None;
        }
        let idx = ((self.ns_per_item.len() - 1) as f64 * q).round() as usize;
        Some(self.ns_per_item[idx])
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }

    pub fn p95(&self) -> Option<f64> {
        self.quantile(0.95)
    }
}

/// Times `repetitions` regional runs. Runs that do not complete are an error.
pub fn bench(
    cp: &CompiledProtocol,
    endpoints: &Endpoints,
    seed: u64,
    max_steps: usize,
    repetitions: usize,
) -> Result<BenchSummary, RunStatus> {
    let items: usize = endpoints.reads.values().sum();
    let mut ns = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let started = Instant::now();
        let run = run_regional(cp, endpoints, seed.wrapping_add(rep as u64), max_steps);
        let elapsed = started.elapsed();
        if run.outcome.status != RunStatus::Completed {
            return Err(run.outcome.status);
        }
        ns.push(elapsed.as_nanos() as f64 / items.max(1) as f64);
    }
    ns.sort_by(f64::total_cmp);
    Ok(BenchSummary { items, ns_per_item: ns })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub connector: String,
    pub k: Option<usize>,
    pub strategy: String,
    pub items: usize,
    pub ns_per_item_median: f64,
    pub ns_per_item_p95: f64,
    pub seed: u64,
}

impl BenchRow {
    /// `None` for an empty measurement set.
    pub fn new(cp: &CompiledProtocol, summary: &BenchSummary, seed: u64) -> Option<Self> {
        Some(BenchRow {
            connector: cp.connector.clone(),
            k: crate::connector::FamilySpec::from_connector_name(&cp.connector).map(|f| f.size),
            strategy: cp.strategy.to_string(),
            items: summary.items,
            ns_per_item_median: summary.median()?,
            ns_per_item_p95: summary.p95()?,
            seed,
        })
    }
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["connector", "k", "strategy", "items", "ns_per_item_median", "ns_per_item_p95", "seed"])
            .expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
