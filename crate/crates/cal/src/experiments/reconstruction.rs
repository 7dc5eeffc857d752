//! Reconstruction accuracy of the correlator run in reverse: exact
//! integer round trips through a hard-wired array, the digitization
//! floor for real numbers, and online learning from an empty array with
//! two correlated channels.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::bitvec::concat;
use crate::codec::{EncoderSpec, ScalarKind};
use crate::correlator::Correlator;
use crate::error::Result;
use crate::experiments::{ExperimentKind, Report};
use crate::region::derive_seed;
use crate::synapses::{PlasticityParams, WeightBits};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Params {
    pub integer_max: usize,
    pub real_samples: usize,
    pub real_resolution: f64,
    pub learning_iterations: usize,
    pub learning_values: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            integer_max: 255,
            real_samples: 100_000,
            real_resolution: 0.01,
            learning_iterations: 1500,
            learning_values: 16,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct Doc {
    #[serde(default)]
    experiment: Params,
}

pub fn run(config_text: &str, seed: u64, out_dir: &Path) -> Result<Report> {
    let doc: Doc = toml::from_str(config_text)
        .map_err(|e| crate::error::CalError::Config(format!("bad reconstruction config: {e}")))?;
    let p = doc.experiment;
    let mut report = Report::new(ExperimentKind::Reconstruction, seed);

    // --- integers through a hard-wired array: exact for every value ---
    let enc = EncoderSpec::new(0.0, p.integer_max as f64, 1.0, 5, ScalarKind::Integer)?;
    let n_col = (enc.n_bits() * 2).next_power_of_two();
    let correlator = Correlator::hardwire(enc.n_bits(), n_col, 1, derive_seed(seed, 10))?;
    let mut max_err: f64 = 0.0;
    for v in 0..=p.integer_max {
        let x = enc.encode(v as f64)?;
        let y = correlator.forward_frozen(&x, None)?;
        let x_hat = correlator.reconstruct(&y, enc.active_bits())?;
        let decoded = enc.decode(&x_hat)?;
        max_err = max_err.max((decoded - v as f64).abs());
    }
    report.check(
        "integer sweep reconstructs exactly",
        max_err == 0.0,
        format!("max |error| = {max_err} over 0..={}", p.integer_max),
    );

    // --- uniform reals: error converges to the digitization floor ---
    let enc = EncoderSpec::new(-1.0, 1.0, p.real_resolution, 5, ScalarKind::Real)?;
    let correlator = Correlator::hardwire(enc.n_bits(), 1024, 1, derive_seed(seed, 11))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 12));
    let mut csv = BufWriter::new(File::create(out_dir.join("reconstruction_real.csv"))?);
    writeln!(csv, "sample,abs_error,running_rms")?;
    let mut sum_sq = 0.0;
    let mut early_rms = 0.0;
    for i in 1..=p.real_samples {
        let s = rng.gen_range(-1.0..=1.0);
        let x = enc.encode(s)?;
        let y = correlator.forward_frozen(&x, None)?;
        let x_hat = correlator.reconstruct(&y, enc.active_bits())?;
        let err = enc.decode(&x_hat)? - s;
        sum_sq += err * err;
        let running = (sum_sq / i as f64).sqrt();
        if i == 100 {
            early_rms = running;
        }
        if i % 100 == 0 {
            writeln!(csv, "{},{:.8},{:.8}", i, err.abs(), running)?;
        }
    }
    csv.flush()?;
    let rms = (sum_sq / p.real_samples as f64).sqrt();
    let floor = p.real_resolution / 12.0_f64.sqrt();
    report.check(
        "real-number rms sits on the digitization floor",
        (rms - floor).abs() <= 0.1 * floor,
        format!("rms {rms:.6} vs r/sqrt(12) = {floor:.6} (±10%)"),
    );
    report.note(format!(
        "running rms after 100 samples: {early_rms:.6} (floor {floor:.6})"
    ));

    // --- learning from empty with two correlated channels ---
    let max_v = (p.learning_values - 1) as f64;
    let enc_a = EncoderSpec::new(0.0, max_v, 1.0, 5, ScalarKind::Integer)?;
    let enc_b = EncoderSpec::new(0.0, max_v, 1.0, 5, ScalarKind::Integer)?;
    let width = enc_a.n_bits() + enc_b.n_bits();
    let mut correlator = Correlator::new_learning(
        width,
        512,
        None,
        WeightBits::Full,
        PlasticityParams {
            meta: false,
            ..Default::default()
        },
        Some(12),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 13));
    // one value is presented an order of magnitude more rarely
    let rare = p.learning_values / 2;
    let mut first_correct: Vec<Option<usize>> = vec![None; p.learning_values];
    let mut early_hits = 0usize;
    let mut late_hits = 0usize;
    let tenth = p.learning_iterations / 10;
    let mut csv = BufWriter::new(File::create(out_dir.join("reconstruction_learning.csv"))?);
    writeln!(csv, "iteration,value,correct")?;
    for i in 1..=p.learning_iterations {
        let v = loop {
            let candidate = rng.gen_range(0..p.learning_values);
            if candidate != rare || rng.gen_range(0..10) == 0 {
                break candidate;
            }
        };
        let pair = (v as f64, max_v - v as f64);
        let x = concat(&[enc_a.encode(pair.0)?, enc_b.encode(pair.1)?])?;
        // probe against the state before this presentation is learned,
        // so accuracy reflects what the array already knows
        let y_probe = correlator.forward_frozen(&x, None)?;
        let x_hat = correlator.reconstruct_channels(
            &y_probe,
            &[(enc_a.n_bits(), 5), (enc_b.n_bits(), 5)],
        )?;
        let parts = x_hat.split(&[enc_a.n_bits(), enc_b.n_bits()])?;
        let correct = enc_a.decode(&parts[0]).ok() == Some(pair.0)
            && enc_b.decode(&parts[1]).ok() == Some(pair.1);
        correlator.forward(&x, None)?;
        if correct && first_correct[v].is_none() {
            first_correct[v] = Some(i);
        }
        if i <= tenth && correct {
            early_hits += 1;
        }
        if i > p.learning_iterations - tenth && correct {
            late_hits += 1;
        }
        writeln!(csv, "{},{},{}", i, v, u8::from(correct))?;
    }
    csv.flush()?;
    let early_acc = early_hits as f64 / tenth as f64;
    let late_acc = late_hits as f64 / tenth as f64;
    report.check(
        "learning-mode accuracy rises with iterations",
        late_acc > early_acc && late_acc >= 0.95,
        format!("first tenth {early_acc:.3}, last tenth {late_acc:.3}"),
    );
    let mut frequent_first: Vec<usize> = first_correct
        .iter()
        .enumerate()
        .filter(|(v, f)| *v != rare && f.is_some())
        .map(|(_, f)| f.unwrap())
        .collect();
    frequent_first.sort_unstable();
    let median_frequent = frequent_first
        .get(frequent_first.len() / 2)
        .copied()
        .unwrap_or(usize::MAX);
    report.check(
        "rare value converges later than frequent values",
        first_correct[rare].is_some_and(|f| f > median_frequent),
        format!(
            "rare value {rare} first correct at {:?}, frequent median {median_frequent}",
            first_correct[rare]
        ),
    );
    Ok(report)
}
