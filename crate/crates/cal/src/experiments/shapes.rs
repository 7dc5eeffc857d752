//! Invariant representations of rotating shapes: 48x48 binary frames
//! split into nine receptive fields drive a 9 -> 4 -> 1 -> 1 pyramid;
//! after training, the top-level winning columns are nearly constant
//! while one shape rotates and differ between shapes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::bitvec::SparseBitVector;
use crate::codec::BinaryImage;
use crate::correlator::CountMatrix;
use crate::error::Result;
use crate::experiments::data::{shape_frame, ShapeKind, ShapeSpec, ALL_SHAPES};
use crate::experiments::{ExperimentKind, Report};
use crate::network::{Network, SensorValue};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Params {
    pub epochs: usize,
    pub frame: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            epochs: 200,
            frame: 48,
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

/// Propagation delay from the sensors to the top level: one tick per
/// feed-forward hop in a four-level pyramid.
const TOP_DELAY: usize = 3;

fn fields_of(frame: &BinaryImage) -> Result<Vec<BinaryImage>> {
    let side = frame.rows() / 3;
    let mut out = Vec::with_capacity(9);
    for fr in 0..3 {
        for fc in 0..3 {
            out.push(frame.crop(fr * side, fc * side, side, side)?);
        }
    }
    Ok(out)
}

pub struct Outcome {
    pub within: Vec<f64>,
    pub cross: Vec<Vec<f64>>,
}

impl Outcome {
    pub fn max_cross(&self, shape: usize) -> f64 {
        (0..self.cross.len())
            .filter(|&other| other != shape)
            .map(|other| self.cross[shape][other])
            .fold(0.0, f64::max)
    }

    pub fn largest_cross_pair(&self) -> (usize, usize) {
        let mut best = (0, 1, -1.0);
        for a in 0..self.cross.len() {
            for b in a + 1..self.cross.len() {
                if self.cross[a][b] > best.2 {
                    best = (a, b, self.cross[a][b]);
                }
            }
        }
        (best.0, best.1)
    }
}

pub fn run(config_text: &str, seed: u64, out_dir: &Path) -> Result<Report> {
    let doc: Doc = toml::from_str(config_text)
        .map_err(|e| crate::error::CalError::Config(format!("bad shapes config: {e}")))?;
    let params = doc.experiment.clone();
    let mut net = Network::build(doc.topology.into_spec()?, seed)?;
    let sensor_ids: Vec<String> = net.spec().sensors.iter().map(|s| s.id.clone()).collect();
    let top_id = net
        .region_ids()
        .last()
        .map(|s| s.to_string())
        .expect("topology has regions");

    let specs: Vec<ShapeSpec> = ALL_SHAPES
        .iter()
        .map(|&k| ShapeSpec::new(k, params.frame))
        .collect();
    let frames_per_shape = specs[0].frames_per_revolution();
    let epoch_len = ALL_SHAPES.len() * frames_per_shape;

    // pre-render every frame of every shape once
    let mut rendered: Vec<Vec<Vec<BinaryImage>>> = Vec::new();
    for spec in &specs {
        let mut frames = Vec::with_capacity(frames_per_shape);
        for f in 0..frames_per_shape {
            frames.push(fields_of(&shape_frame(spec, f as f64 * spec.rotation_step_deg))?);
        }
        rendered.push(frames);
    }

    // labels of recent sensor ticks so top-level outputs can be matched
    // to the shape that caused them, adjusting for propagation delay
    let total_ticks = params.epochs * epoch_len;
    let mut labels: Vec<usize> = Vec::with_capacity(total_ticks);
    let mut top_trace: Vec<(usize, SparseBitVector)> = Vec::new();
    let collect_from = total_ticks.saturating_sub(epoch_len);

    for tick in 0..total_ticks {
        let within_epoch = tick % epoch_len;
        let shape = within_epoch / frames_per_shape;
        let frame = within_epoch % frames_per_shape;
        labels.push(shape);
        let mut values = BTreeMap::new();
        for (i, id) in sensor_ids.iter().enumerate() {
            values.insert(id.clone(), SensorValue::Image(rendered[shape][frame][i].clone()));
        }
        let outputs = net.tick(&values)?;
        if tick >= collect_from && tick >= TOP_DELAY {
            let label = labels[tick - TOP_DELAY];
            let top = &outputs[net.region_ids().iter().position(|id| *id == top_id).unwrap()];
            top_trace.push((label, top.y.clone()));
        }
    }
    net.snapshot(BufWriter::new(File::create(out_dir.join("snapshot.bin"))?))?;

    // raster of the final epoch's top-level activity
    let top_cols = net.region(&top_id)?.config().geometry.n_col;
    let mut raster = CountMatrix::zeros(top_cols, top_trace.len());
    for (t, (_, y)) in top_trace.iter().enumerate() {
        for &c in y.active() {
            raster.set(c, t, 1);
        }
    }
    raster.write_pgm(BufWriter::new(File::create(out_dir.join("top_raster.pgm"))?))?;

    // pairwise similarity of the final epoch, grouped by shape
    let groups: Vec<Vec<&SparseBitVector>> = (0..ALL_SHAPES.len())
        .map(|s| {
            top_trace
                .iter()
                .filter(|(label, _)| *label == s)
                .map(|(_, y)| y)
                .collect()
        })
        .collect();
    let mut within = vec![0.0; ALL_SHAPES.len()];
    let mut cross = vec![vec![0.0; ALL_SHAPES.len()]; ALL_SHAPES.len()];
    for a in 0..ALL_SHAPES.len() {
        let ga = &groups[a];
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..ga.len() {
            for j in i + 1..ga.len() {
                sum += ga[i].jaccard(ga[j])?;
                count += 1;
            }
        }
        within[a] = sum / count.max(1) as f64;
        for b in 0..ALL_SHAPES.len() {
            if a == b {
                cross[a][b] = within[a];
                continue;
            }
            let gb = &groups[b];
            let mut sum = 0.0;
            let mut count = 0usize;
            for ya in ga {
                for yb in gb {
                    sum += ya.jaccard(yb)?;
                    count += 1;
                }
            }
            cross[a][b] = sum / count.max(1) as f64;
        }
    }

    let mut csv = BufWriter::new(File::create(out_dir.join("similarity.csv"))?);
    writeln!(
        csv,
        "shape,{}",
        ALL_SHAPES.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")
    )?;
    for a in 0..ALL_SHAPES.len() {
        let row: Vec<String> = (0..ALL_SHAPES.len())
            .map(|b| format!("{:.4}", cross[a][b]))
            .collect();
        writeln!(csv, "{},{}", ALL_SHAPES[a].name(), row.join(","))?;
    }
    csv.flush()?;
    // graymap of the full tick-by-tick similarity within the final epoch
    let mut sim = CountMatrix::zeros(top_trace.len(), top_trace.len());
    for i in 0..top_trace.len() {
        for j in 0..top_trace.len() {
            sim.set(i, j, (top_trace[i].1.jaccard(&top_trace[j].1)? * 255.0) as u32);
        }
    }
    sim.write_pgm(BufWriter::new(File::create(out_dir.join("similarity.pgm"))?))?;

    let outcome = Outcome { within, cross };
    let mut report = Report::new(ExperimentKind::Shapes, seed);
    let stable = outcome.within.iter().filter(|&&w| w >= 0.8).count();
    report.check(
        "at least six of seven shapes are invariant (within-shape mean >= 0.8)",
        stable >= 6,
        format!(
            "within-shape means: {}",
            ALL_SHAPES
                .iter()
                .zip(&outcome.within)
                .map(|(s, w)| format!("{} {:.3}", s.name(), w))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    let separated = (0..ALL_SHAPES.len()).all(|s| outcome.within[s] > outcome.max_cross(s));
    report.check(
        "every shape is closer to itself than to any other",
        separated,
        format!(
            "margins: {}",
            (0..ALL_SHAPES.len())
                .map(|s| format!(
                    "{} {:+.3}",
                    ALL_SHAPES[s].name(),
                    outcome.within[s] - outcome.max_cross(s)
                ))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    let (pa, pb) = outcome.largest_cross_pair();
    let expected = |k: ShapeKind| ALL_SHAPES.iter().position(|&s| s == k).unwrap();
    let is_triangle_star6 = (pa, pb) == (expected(ShapeKind::Triangle), expected(ShapeKind::Star6))
        || (pb, pa) == (expected(ShapeKind::Triangle), expected(ShapeKind::Star6));
    report.check(
        "triangle and six-point star are the closest cross-shape pair",
        is_triangle_star6,
        format!(
            "largest cross pair: {} / {} at {:.3}",
            ALL_SHAPES[pa].name(),
            ALL_SHAPES[pb].name(),
            outcome.cross[pa][pb]
        ),
    );
    Ok(report)
}
