//! Association through shared dendrites: after training the correlator
//! on concatenated pairs (a, b), presenting `a` alone reconstructs `b` —
//! and the wiring is direction-agnostic, so `b` alone recovers `a`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::bitvec::{concat, SparseBitVector};
use crate::correlator::Correlator;
use crate::error::Result;
use crate::experiments::{ExperimentKind, Report};
use crate::region::derive_seed;
use crate::synapses::{PlasticityParams, WeightBits};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Params {
    pub pairs: usize,
    pub word_bits: usize,
    pub active_bits: usize,
    pub cycles: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            pairs: 8,
            word_bits: 256,
            active_bits: 8,
            cycles: 300,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct Doc {
    #[serde(default)]
    experiment: Params,
}

fn random_word(width: usize, active: usize, rng: &mut ChaCha8Rng) -> SparseBitVector {
    let picks = rand::seq::index::sample(rng, width, active).into_vec();
    SparseBitVector::from_unsorted(width, picks).expect("sampled indices are in range")
}

pub fn run(config_text: &str, seed: u64, out_dir: &Path) -> Result<Report> {
    let doc: Doc = toml::from_str(config_text)
        .map_err(|e| crate::error::CalError::Config(format!("bad association config: {e}")))?;
    let p = doc.experiment;
    let w = p.word_bits;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 30));
    let pairs: Vec<(SparseBitVector, SparseBitVector)> = (0..p.pairs)
        .map(|_| {
            (
                random_word(w, p.active_bits, &mut rng),
                random_word(w, p.active_bits, &mut rng),
            )
        })
        .collect();
    // a pair the correlator never sees, as the chance-level control
    let control = (
        random_word(w, p.active_bits, &mut rng),
        random_word(w, p.active_bits, &mut rng),
    );

    let mut correlator = Correlator::new_learning(
        2 * w,
        1024,
        Some(32),
        WeightBits::Full,
        PlasticityParams {
            rng_seed: seed,
            meta: false,
            ..Default::default()
        },
        Some(3 * p.active_bits),
    )?;
    for _ in 0..p.cycles {
        for (a, b) in &pairs {
            let x = concat(&[a.clone(), b.clone()])?;
            correlator.forward(&x, None)?;
        }
    }

    let channels = [(w, p.active_bits), (w, p.active_bits)];
    let empty = SparseBitVector::empty(w);
    let recover_b = |c: &Correlator, a: &SparseBitVector| -> Result<SparseBitVector> {
        let y = c.forward_frozen(&concat(&[a.clone(), empty.clone()])?, None)?;
        Ok(c.reconstruct_channels(&y, &channels)?.window(w, w)?)
    };
    let recover_a = |c: &Correlator, b: &SparseBitVector| -> Result<SparseBitVector> {
        let y = c.forward_frozen(&concat(&[empty.clone(), b.clone()])?, None)?;
        c.reconstruct_channels(&y, &channels)?.window(0, w)
    };

    let mut csv = BufWriter::new(File::create(out_dir.join("recovery.csv"))?);
    writeln!(csv, "pair,forward_jaccard,backward_jaccard")?;
    let mut fwd = Vec::new();
    let mut back = Vec::new();
    for (i, (a, b)) in pairs.iter().enumerate() {
        let jb = recover_b(&correlator, a)?.jaccard(b)?;
        let ja = recover_a(&correlator, b)?.jaccard(a)?;
        writeln!(csv, "{i},{jb:.4},{ja:.4}")?;
        fwd.push(jb);
        back.push(ja);
    }
    csv.flush()?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let control_recovery = recover_b(&correlator, &control.0)?.jaccard(&control.1)?;

    let mut report = Report::new(ExperimentKind::Association, seed);
    report.check(
        "a alone recovers b",
        mean(&fwd) >= 0.8,
        format!("mean Jaccard {:.3} over {} pairs", mean(&fwd), p.pairs),
    );
    report.check(
        "b alone recovers a",
        mean(&back) >= 0.8,
        format!("mean Jaccard {:.3}", mean(&back)),
    );
    report.check(
        "untrained pair recovers at chance level",
        control_recovery < 0.2,
        format!("control Jaccard {control_recovery:.3}"),
    );
    Ok(report)
}
