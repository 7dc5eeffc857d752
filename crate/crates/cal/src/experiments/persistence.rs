//! Stability of representation up a three-level stack fed a character
//! stream: persistence (step-to-step Jaccard of the winning columns)
//! rises with the hierarchy level.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::Result;
use crate::experiments::data::SENTENCES;
use crate::experiments::metrics::SlidingWindow;
use crate::experiments::{ExperimentKind, Report};
use crate::network::{Network, SensorValue};
use crate::region::derive_seed;

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Params {
    pub presentations: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self { presentations: 15 }
    }
}

#[derive(Debug, Deserialize)]
struct Doc {
    #[serde(default)]
    experiment: Params,
    #[serde(flatten)]
    topology: crate::config::TopologyDoc,
}

pub fn run(config_text: &str, seed: u64, out_dir: &Path) -> Result<Report> {
    let doc: Doc = toml::from_str(config_text)
        .map_err(|e| crate::error::CalError::Config(format!("bad persistence config: {e}")))?;
    let params = doc.experiment.clone();
    let mut net = Network::build(doc.topology.into_spec()?, seed)?;
    let ids: Vec<String> = net.region_ids().iter().map(|s| s.to_string()).collect();
    let sensor_id = net.spec().sensors[0].id.clone();

    // sentences in seeded random order without immediate repeats
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 20));
    let mut order = Vec::with_capacity(params.presentations);
    let mut prev = usize::MAX;
    for _ in 0..params.presentations {
        let mut pick = order_rng.gen_range(0..SENTENCES.len());
        while pick == prev {
            pick = order_rng.gen_range(0..SENTENCES.len());
        }
        order.push(pick);
        prev = pick;
    }

    let mut csv = BufWriter::new(File::create(out_dir.join("metrics.csv"))?);
    let header: Vec<String> = ids
        .iter()
        .flat_map(|id| [format!("{id}_persistence"), format!("{id}_running_50")])
        .collect();
    writeln!(csv, "tick,presentation,char,{}", header.join(","))?;

    let mut windows: Vec<SlidingWindow> = ids.iter().map(|_| SlidingWindow::new(50)).collect();
    // raw persistence per region over the final epoch (last 3 sentences)
    let final_from = params.presentations.saturating_sub(3);
    let mut final_sums = vec![0.0; ids.len()];
    let mut final_count = 0usize;

    let mut tick = 0u64;
    for (pi, &sentence_idx) in order.iter().enumerate() {
        for ch in SENTENCES[sentence_idx].chars() {
            let mut frame = BTreeMap::new();
            frame.insert(sensor_id.clone(), SensorValue::Scalar(ch as u32 as f64));
            let outputs = net.tick(&frame)?;
            let mut row = format!("{tick},{pi},{}", ch as u32);
            for (ri, out) in outputs.iter().enumerate() {
                windows[ri].push(out.persistence);
                row.push_str(&format!(
                    ",{:.6},{}",
                    out.persistence,
                    crate::experiments::metrics::csv_opt(windows[ri].mean())
                ));
                if pi >= final_from {
                    final_sums[ri] += out.persistence;
                }
            }
            if pi >= final_from {
                final_count += 1;
            }
            writeln!(csv, "{row}")?;
            tick += 1;
        }
    }
    csv.flush()?;
    net.snapshot(BufWriter::new(File::create(out_dir.join("snapshot.bin"))?))?;

    let means: Vec<f64> = final_sums
        .iter()
        .map(|s| s / final_count.max(1) as f64)
        .collect();
    let mut report = Report::new(ExperimentKind::Persistence, seed);
    let detail = ids
        .iter()
        .zip(&means)
        .map(|(id, m)| format!("{id} = {m:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    let top = means.len() - 1;
    report.check(
        "top-level persistence at least 0.9 over the final epoch",
        means[top] >= 0.9,
        detail.clone(),
    );
    report.check(
        "persistence strictly increases with level",
        means.windows(2).all(|w| w[1] > w[0]),
        detail,
    );
    report.note(format!(
        "presentation order: {:?}",
        order.iter().map(|&i| i + 1).collect::<Vec<_>>()
    ));
    Ok(report)
}
