//! Communication-cost measurement and design comparison.
//!
//! The unit of time is the scheduler epoch: one pass of the cooperative
//! scheduler in which every runnable process takes at most one communication
//! step. Epochs are a stable, seed-independent proxy for pipeline cycles;
//! wall-clock throughput of the host is deliberately not measured.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::kasumi_net::{build_design, ciphertexts, DesignId};
use crate::runtime::{CostReport, RunConfig, RunError, Timeline};
use crate::words::{Word128, Word64};

/// Blocks processed per scheduler epoch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThroughputEstimate {
    pub workload_size: u64,
    pub blocks_per_epoch: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub design: DesignId,
    pub blocks: u64,
    pub report: CostReport,
    pub throughput: ThroughputEstimate,
    pub timeline: Timeline,
    pub ciphertexts: Vec<Word64>,
}

impl Measurement {
    /// The stable JSON form: `{design, blocks, epochs, channel_events,
    /// per_process, blocks_per_epoch}`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "design": self.design.name(),
            "blocks": self.blocks,
            "epochs": self.report.epochs,
            "channel_events": self.report.total_channel_events,
            "per_process": self.report.per_process_events,
            "blocks_per_epoch": self.throughput.blocks_per_epoch,
        })
    }
}

/// Deterministic workload derived from the seed.
pub fn workload(n_blocks: usize, seed: u64) -> Vec<Word64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_blocks).map(|_| rng.gen()).collect()
}

/// Run `n_blocks` through design `d` under instrumentation.
pub fn measure(
    d: DesignId,
    key: Word128,
    n_blocks: usize,
    seed: u64,
) -> Result<Measurement, RunError> {
    assert!(n_blocks >= 1, "measure requires at least one block");
    let blocks = workload(n_blocks, seed);
    let net = build_design(d)?;
    let outcome = net.run_blocks(key, &blocks, &RunConfig::cooperative(seed))?;
    let epochs = outcome.report.epochs.max(1);
    Ok(Measurement {
        design: d,
        blocks: n_blocks as u64,
        throughput: ThroughputEstimate {
            workload_size: n_blocks as u64,
            blocks_per_epoch: n_blocks as f64 / epochs as f64,
        },
        ciphertexts: ciphertexts(&outcome),
        report: outcome.report,
        timeline: outcome.timeline,
    })
}

/// Side-by-side comparison of several designs on the same workload.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub blocks: u64,
    pub seed: u64,
    pub rows: Vec<Measurement>,
}

/// Measure each design on an identical workload.
pub fn compare(
    designs: &[DesignId],
    key: Word128,
    n_blocks: usize,
    seed: u64,
) -> Result<Comparison, RunError> {
    assert!(designs.len() >= 2, "compare requires at least two designs");
    let rows = designs
        .iter()
        .map(|d| measure(*d, key, n_blocks, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Comparison {
        blocks: n_blocks as u64,
        seed,
        rows,
    })
}

impl Comparison {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "blocks": self.blocks,
            "seed": self.seed,
            "rows": self.rows.iter().map(Measurement::to_json).collect::<Vec<_>>(),
        })
    }

    /// Aligned text table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8} {:>14} {:>10} {:>16} {:>14}\n",
            "design", "channel_events", "epochs", "blocks_per_epoch", "max_in_flight"
        ));
        for m in &self.rows {
            out.push_str(&format!(
                "{:<8} {:>14} {:>10} {:>16.6} {:>14}\n",
                m.design.name(),
                m.report.total_channel_events,
                m.report.epochs,
                m.throughput.blocks_per_epoch,
                m.report.in_flight_max
            ));
        }
        out
    }
}
