//! Correlation of two related channels: a learning correlator fed the
//! Lissajous pair wires axons of the two channels onto common dendrites,
//! and its covariance matrix traces the 2:3 figure in bin space.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::bitvec::concat;
use crate::codec::{EncoderSpec, ScalarKind};
use crate::correlator::{Correlator, CountMatrix};
use crate::error::Result;
use crate::experiments::data::lissajous;
use crate::experiments::metrics::SlidingWindow;
use crate::experiments::{ExperimentKind, Report};
use crate::synapses::{PlasticityParams, WeightBits};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Params {
    pub iterations: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self { iterations: 20_000 }
    }
}

#[derive(Debug, Default, Deserialize)]
struct Doc {
    #[serde(default)]
    experiment: Params,
}

/// The ideal 2:3 curve in bit space, dilated by one encoder bin: pairs
/// of (channel-2 bit, channel-1 bit) that co-occur in some step of the
/// closed figure. Computed directly from the generator and the encoder
/// mapping, independent of the correlator.
pub fn ideal_curve_mask(enc: &EncoderSpec, tolerance_bins: usize) -> Result<Vec<Vec<bool>>> {
    let n = enc.n_bits();
    let mut mask = vec![vec![false; n]; n];
    let d = enc.displacement();
    let k = enc.active_bits();
    for t in 0..360 {
        let (s1, s2) = lissajous(t as f64);
        let b1 = enc.bin_of(s1)?;
        let b2 = enc.bin_of(s2)?;
        for i in b2 * d..b2 * d + k {
            for j in b1 * d..b1 * d + k {
                for di in i.saturating_sub(tolerance_bins * d)..=(i + tolerance_bins * d).min(n - 1)
                {
                    for dj in
                        j.saturating_sub(tolerance_bins * d)..=(j + tolerance_bins * d).min(n - 1)
                    {
                        mask[di][dj] = true;
                    }
                }
            }
        }
    }
    Ok(mask)
}

pub fn run(config_text: &str, seed: u64, out_dir: &Path) -> Result<Report> {
    let doc: Doc = toml::from_str(config_text)
        .map_err(|e| crate::error::CalError::Config(format!("bad lissajous config: {e}")))?;
    let p = doc.experiment;

    let enc = EncoderSpec::new(-1.0, 1.0, 0.01, 5, ScalarKind::Real)?;
    let n = enc.n_bits();
    let mut correlator = Correlator::new_learning(
        2 * n,
        1024,
        Some(32),
        WeightBits::Full,
        PlasticityParams {
            rng_seed: seed,
            meta: false,
            ..Default::default()
        },
        Some(12),
    )?;

    let mut csv = BufWriter::new(File::create(out_dir.join("metrics.csv"))?);
    writeln!(csv, "iteration,s1,s2,err1,err2,rms_1000")?;
    let mut window = SlidingWindow::new(1000);
    let mut early_rms = None;
    let mut final_rms = None;
    for i in 0..p.iterations {
        let (s1, s2) = lissajous(i as f64);
        let x = concat(&[enc.encode(s1)?, enc.encode(s2)?])?;
        let y = correlator.forward(&x, None)?;
        let x_hat = correlator.reconstruct_channels(&y, &[(n, 5), (n, 5)])?;
        let parts = x_hat.split(&[n, n])?;
        let err1 = enc.decode(&parts[0]).map_or(2.0, |v| (v - s1).abs());
        let err2 = enc.decode(&parts[1]).map_or(2.0, |v| (v - s2).abs());
        window.push(err1);
        window.push(err2);
        if i == 999 {
            early_rms = window.rms();
        }
        if i + 1 == p.iterations {
            final_rms = window.rms();
        }
        if i % 10 == 0 {
            writeln!(
                csv,
                "{},{:.6},{:.6},{:.6},{:.6},{}",
                i,
                s1,
                s2,
                err1,
                err2,
                crate::experiments::metrics::csv_opt(window.rms())
            )?;
        }
    }
    csv.flush()?;

    // covariance: the cross-channel quadrant (channel-2 axons against
    // channel-1 axons) compared against the generator-derived ideal curve
    let covariance = correlator.covariance();
    let quadrant = covariance.submatrix(n, 2 * n, 0, n);
    quadrant.write_csv(BufWriter::new(File::create(
        out_dir.join("covariance_quadrant.csv"),
    )?))?;
    quadrant.write_pgm(BufWriter::new(File::create(
        out_dir.join("covariance_quadrant.pgm"),
    )?))?;

    let mask = ideal_curve_mask(&enc, 1)?;
    let mut nonzero = 0usize;
    let mut on_curve = 0usize;
    let mut ideal = CountMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if mask[i][j] {
                ideal.set(i, j, 1);
            }
            if quadrant.at(i, j) > 0 {
                nonzero += 1;
                if mask[i][j] {
                    on_curve += 1;
                }
            }
        }
    }
    ideal.write_pgm(BufWriter::new(File::create(
        out_dir.join("ideal_curve.pgm"),
    )?))?;
    let coverage = if nonzero == 0 {
        0.0
    } else {
        on_curve as f64 / nonzero as f64
    };

    let mut report = Report::new(ExperimentKind::Lissajous, seed);
    report.check(
        "covariance support follows the 2:3 curve within one bin",
        coverage >= 0.95 && nonzero > 0,
        format!("{on_curve}/{nonzero} nonzero entries on the dilated ideal curve ({:.2}%)", coverage * 100.0),
    );
    report.check(
        "reconstruction rms within budget",
        final_rms.is_some_and(|r| r <= 0.012),
        format!("final 1000-sample rms {:?}", final_rms),
    );
    if let Some(e) = early_rms {
        report.note(format!("rms over the first 1000 errors: {e:.5}"));
    }
    Ok(report)
}
