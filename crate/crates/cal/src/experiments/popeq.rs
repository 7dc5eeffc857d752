//! Sequence learning on the chaotic population equation: a single region
//! with a hard-wired correlator learns to predict the next input.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::Result;
use crate::experiments::data::population_step;
use crate::experiments::metrics::{csv_opt, SlidingWindow};
use crate::experiments::{ExperimentKind, Report};
use crate::network::{Network, SensorValue};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Params {
    pub iterations: usize,
    pub beta: f64,
    pub s0: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            iterations: 3000,
            beta: 3.89,
            s0: 0.5,
        }
    }
}

#[derive(Debug, Deserialize)]
struct Doc {
    #[serde(default)]
    experiment: Params,
    #[serde(flatten)]
    topology: crate::config::TopologyDoc,
}

/// Summary statistics the assertions are evaluated on.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub first_valid: Option<usize>,
    pub last_missing: Option<usize>,
    pub max_windowed_rms_tail: f64,
    pub final_connected_fraction: f64,
}

pub fn run(config_text: &str, seed: u64, out_dir: &Path) -> Result<Report> {
    let doc: toml::Value = toml::from_str(config_text)
        .map_err(|e| crate::error::CalError::Config(format!("bad popeq config: {e}")))?;
    let doc: Doc = doc
        .try_into()
        .map_err(|e| crate::error::CalError::Config(format!("bad popeq config: {e}")))?;
    let params = doc.experiment.clone();
    let mut net = Network::build(doc.topology.into_spec()?, seed)?;

    let mut csv = BufWriter::new(File::create(out_dir.join("metrics.csv"))?);
    writeln!(
        csv,
        "iteration,input,prediction,abs_error,rms_50,prediction_present,persistence,connected_fraction"
    )?;

    let region_id = net.region_ids()[0].to_string();
    let decoders: Vec<_> = net.decoders_for(&region_id)?.to_vec();
    let decoder_refs: Vec<&_> = decoders.iter().collect();

    let mut window = SlidingWindow::new(50);
    let mut first_valid = None;
    let mut last_missing = None;
    let mut max_windowed_rms_tail: f64 = 0.0;
    let tail = (params.iterations * 2 / 3)..params.iterations;

    let mut s = params.s0;
    for i in 1..=params.iterations {
        let prediction = net.region(&region_id)?.predict_scalar(&decoder_refs)?[0];
        match prediction {
            Some(p) => {
                if first_valid.is_none() {
                    first_valid = Some(i);
                }
                window.push((p - s).abs());
            }
            None => last_missing = Some(i),
        }

        let mut frame = BTreeMap::new();
        frame.insert("s".to_string(), SensorValue::Scalar(s));
        let outputs = net.tick(&frame)?;
        let out = &outputs[0];
        let rms = window.rms();
        let connected = net.region(&region_id)?.sequence_memory().connected_fraction();
        writeln!(
            csv,
            "{},{:.6},{},{},{},{},{:.6},{:.8}",
            i,
            s,
            csv_opt(prediction),
            csv_opt(prediction.map(|p| (p - s).abs())),
            csv_opt(rms),
            u8::from(prediction.is_some()),
            out.persistence,
            connected,
        )?;
        if tail.contains(&(i - 1)) {
            if let Some(r) = rms {
                max_windowed_rms_tail = max_windowed_rms_tail.max(r);
            }
        }
        s = population_step(s, params.beta);
    }
    csv.flush()?;

    let outcome = Outcome {
        first_valid,
        last_missing,
        max_windowed_rms_tail,
        final_connected_fraction: net
            .region(&region_id)?
            .sequence_memory()
            .connected_fraction(),
    };

    net.snapshot(BufWriter::new(File::create(out_dir.join("snapshot.bin"))?))?;

    let mut report = Report::new(ExperimentKind::Popeq, seed);
    report.check(
        "first valid prediction within 50 iterations",
        outcome.first_valid.is_some_and(|i| i <= 50),
        format!("first at {:?}", outcome.first_valid),
    );
    report.check(
        "predictions on every iteration from 150",
        outcome.last_missing.map_or(true, |i| i < 150),
        format!("last missing at {:?}", outcome.last_missing),
    );
    report.check(
        "50-window rms below 0.01 over the final third",
        outcome.max_windowed_rms_tail < 0.01,
        format!("max windowed rms {:.5}", outcome.max_windowed_rms_tail),
    );
    report.note(format!(
        "connected lateral synapses: {:.4}%",
        outcome.final_connected_fraction * 100.0
    ));
    Ok(report)
}
