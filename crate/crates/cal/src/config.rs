//! TOML topology schema.
//!
//! A topology file is a tree of sections: `[[sensor]]` tables declare the
//! input channels, `[[region]]` tables the regions, `[[feedforward]]` and
//! `[[feedback]]` the edges (listing order defines concatenation order):
//!
//! ```toml
//! [[sensor]]
//! id = "s"
//! kind = "real"          # "real" | "integer" | "image"
//! min = 0.0
//! max = 1.0
//! resolution = 0.005
//! active_bits = 5
//!
//! [[region]]
//! id = "R1"
//! level = 1
//! columns = 1024
//! cells = 8
//! segments = 4
//! k_out = 32             # optional, default round(sqrt(columns))
//! pool_window = 1        # optional
//! correlator = "hardwired"   # "hardwired" | "learning"
//! fanin = 1              # hardwired only
//! weight_bits = "full"   # "full" | "1" | "2" | "3" | "4" | "8"
//! learning_rate = 0.1    # optional
//! balance = true         # optional
//! meta = true            # optional
//!
//! [[feedforward]]
//! src = "s"              # sensor or region id
//! dst = "R1"
//!
//! [[feedback]]
//! src = "R2"
//! dst = "R1"
//! ```

use serde::{Deserialize, Serialize};

use crate::codec::{EncoderSpec, ScalarKind};
use crate::error::{CalError, Result};
use crate::network::{RegionSpec, SensorKind, SensorSpec, SourceRef, TopologySpec};
use crate::region::CorrelatorKind;
use crate::sequence::SmGeometry;
use crate::synapses::{PlasticityParams, WeightBits};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorDoc {
    pub id: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active_bits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub displacement: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionDoc {
    pub id: String,
    pub level: usize,
    pub columns: usize,
    pub cells: usize,
    pub segments: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_out: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_window: Option<usize>,
    pub correlator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fanin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_fanin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_threshold: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_bits: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub src: String,
    pub dst: String,
}

/// Serde image of a topology file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TopologyDoc {
    #[serde(default, rename = "sensor")]
    pub sensors: Vec<SensorDoc>,
    #[serde(default, rename = "region")]
    pub regions: Vec<RegionDoc>,
    #[serde(default, rename = "feedforward")]
    pub feedforward: Vec<EdgeDoc>,
    #[serde(default, rename = "feedback")]
    pub feedback: Vec<EdgeDoc>,
}

fn require<T: Copy>(v: Option<T>, what: &str, id: &str) -> Result<T> {
    v.ok_or_else(|| CalError::Config(format!("sensor/region `{id}` missing `{what}`")))
}

impl TopologyDoc {
    pub fn into_spec(self) -> Result<TopologySpec> {
        let mut sensors = Vec::with_capacity(self.sensors.len());
        for s in &self.sensors {
            let kind = match s.kind.as_str() {
                "real" | "integer" => {
                    let scalar_kind = if s.kind == "real" {
                        ScalarKind::Real
                    } else {
                        ScalarKind::Integer
                    };
                    let mut enc = EncoderSpec::new(
                        require(s.min, "min", &s.id)?,
                        require(s.max, "max", &s.id)?,
                        require(s.resolution, "resolution", &s.id)?,
                        require(s.active_bits, "active_bits", &s.id)?,
                        scalar_kind,
                    )?;
                    if let Some(d) = s.displacement {
                        enc = enc.with_displacement(d)?;
                    }
                    SensorKind::Scalar(enc)
                }
                "image" => SensorKind::Image {
                    rows: require(s.rows, "rows", &s.id)?,
                    cols: require(s.cols, "cols", &s.id)?,
                },
                other => {
                    return Err(CalError::Config(format!(
                        "sensor `{}` has unknown kind `{other}`",
                        s.id
                    )))
                }
            };
            sensors.push(SensorSpec {
                id: s.id.clone(),
                kind,
            });
        }

        let mut regions = Vec::with_capacity(self.regions.len());
        for r in &self.regions {
            let correlator = match r.correlator.as_str() {
                "hardwired" => CorrelatorKind::Hardwired {
                    fanin: require(r.fanin, "fanin", &r.id)?,
                },
                "learning" => CorrelatorKind::Learning,
                other => {
                    return Err(CalError::Config(format!(
                        "region `{}` has unknown correlator `{other}`",
                        r.id
                    )))
                }
            };
            let weight_bits = match r.weight_bits.as_deref() {
                None | Some("full") => WeightBits::Full,
                Some(text) => {
                    let bits: u8 = text.parse().map_err(|_| {
                        CalError::Config(format!(
                            "region `{}` has bad weight_bits `{text}`",
                            r.id
                        ))
                    })?;
                    WeightBits::Bits(bits).validate()?
                }
            };
            let mut plasticity = PlasticityParams::default();
            if let Some(rate) = r.learning_rate {
                plasticity.delta_aa = rate;
            }
            if let Some(balance) = r.balance {
                plasticity.balance = balance;
            }
            if let Some(meta) = r.meta {
                plasticity.meta = meta;
            }
            regions.push(RegionSpec {
                id: r.id.clone(),
                level: r.level,
                geometry: SmGeometry::new(r.columns, r.cells, r.segments)?,
                k_out: r.k_out,
                pool_window: r.pool_window.unwrap_or(1),
                correlator,
                correlator_max_fanin: r.max_fanin,
                segment_threshold: r.segment_threshold.unwrap_or(2),
                weight_bits,
                plasticity,
            });
        }

        let sensor_ids: Vec<&str> = self.sensors.iter().map(|s| s.id.as_str()).collect();
        let ff_edges = self
            .feedforward
            .iter()
            .map(|e| {
                let src = if sensor_ids.contains(&e.src.as_str()) {
                    SourceRef::Sensor(e.src.clone())
                } else {
                    SourceRef::Region(e.src.clone())
                };
                (src, e.dst.clone())
            })
            .collect();
        let fb_edges = self
            .feedback
            .iter()
            .map(|e| (e.src.clone(), e.dst.clone()))
            .collect();

        Ok(TopologySpec {
            sensors,
            regions,
            ff_edges,
            fb_edges,
        })
    }

    pub fn from_spec(spec: &TopologySpec) -> Self {
        let sensors = spec
            .sensors
            .iter()
            .map(|s| match &s.kind {
                SensorKind::Scalar(enc) => {
                    let (min, max) = enc.range();
                    SensorDoc {
                        id: s.id.clone(),
                        kind: match enc.kind() {
                            ScalarKind::Real => "real".into(),
                            ScalarKind::Integer => "integer".into(),
                        },
                        min: Some(min),
                        max: Some(max),
                        resolution: Some(enc.resolution()),
                        active_bits: Some(enc.active_bits()),
                        displacement: Some(enc.displacement()),
                        rows: None,
                        cols: None,
                    }
                }
                SensorKind::Image { rows, cols } => SensorDoc {
                    id: s.id.clone(),
                    kind: "image".into(),
                    min: None,
                    max: None,
                    resolution: None,
                    active_bits: None,
                    displacement: None,
                    rows: Some(*rows),
                    cols: Some(*cols),
                },
            })
            .collect();
        let regions = spec
            .regions
            .iter()
            .map(|r| RegionDoc {
                id: r.id.clone(),
                level: r.level,
                columns: r.geometry.n_col,
                cells: r.geometry.n_cell,
                segments: r.geometry.n_seg,
                k_out: r.k_out,
                pool_window: Some(r.pool_window),
                correlator: match r.correlator {
                    CorrelatorKind::Hardwired { .. } => "hardwired".into(),
                    CorrelatorKind::Learning => "learning".into(),
                },
                fanin: match r.correlator {
                    CorrelatorKind::Hardwired { fanin } => Some(fanin),
                    CorrelatorKind::Learning => None,
                },
                max_fanin: r.correlator_max_fanin,
                segment_threshold: Some(r.segment_threshold),
                weight_bits: Some(match r.weight_bits {
                    WeightBits::Full => "full".into(),
                    WeightBits::Bits(b) => b.to_string(),
                }),
                learning_rate: Some(r.plasticity.delta_aa),
                balance: Some(r.plasticity.balance),
                meta: Some(r.plasticity.meta),
            })
            .collect();
        let feedforward = spec
            .ff_edges
            .iter()
            .map(|(src, dst)| EdgeDoc {
                src: match src {
                    SourceRef::Sensor(id) | SourceRef::Region(id) => id.clone(),
                },
                dst: dst.clone(),
            })
            .collect();
        let feedback = spec
            .fb_edges
            .iter()
            .map(|(src, dst)| EdgeDoc {
                src: src.clone(),
                dst: dst.clone(),
            })
            .collect();
        TopologyDoc {
            sensors,
            regions,
            feedforward,
            feedback,
        }
    }
}

/// Parses a topology from TOML text.
pub fn topology_from_toml(text: &str) -> Result<TopologySpec> {
    let doc: TopologyDoc =
        toml::from_str(text).map_err(|e| CalError::Config(format!("bad topology TOML: {e}")))?;
    doc.into_spec()
}

/// Renders a topology as TOML text (stable field order).
pub fn topology_to_toml(spec: &TopologySpec) -> Result<String> {
    toml::to_string(&TopologyDoc::from_spec(spec))
        .map_err(|e| CalError::Config(format!("cannot serialize topology: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const STACK: &str = r#"
[[sensor]]
id = "chars"
kind = "integer"
min = 32.0
max = 122.0
resolution = 1.0
active_bits = 5

[[region]]
id = "R1"
level = 1
columns = 256
cells = 4
segments = 2
correlator = "hardwired"
fanin = 1

[[region]]
id = "R2"
level = 2
columns = 256
cells = 4
segments = 2
pool_window = 3
correlator = "learning"

[[feedforward]]
src = "chars"
dst = "R1"

[[feedforward]]
src = "R1"
dst = "R2"

[[feedback]]
src = "R2"
dst = "R1"
"#;

    #[test]
    fn parses_and_round_trips() {
        let spec = topology_from_toml(STACK).unwrap();
        assert_eq!(spec.sensors.len(), 1);
        assert_eq!(spec.regions.len(), 2);
        assert_eq!(spec.ff_edges.len(), 2);
        assert!(matches!(spec.ff_edges[0].0, SourceRef::Sensor(_)));
        assert!(matches!(spec.ff_edges[1].0, SourceRef::Region(_)));
        assert_eq!(spec.fb_edges, vec![("R2".to_string(), "R1".to_string())]);

        let text = topology_to_toml(&spec).unwrap();
        let again = topology_from_toml(&text).unwrap();
        assert_eq!(spec, again);
        // serialization is stable, snapshots depend on it
        assert_eq!(text, topology_to_toml(&again).unwrap());
    }

    #[test]
    fn missing_fields_are_reported() {
        let bad = "[[sensor]]\nid = \"x\"\nkind = \"real\"\n";
        assert!(matches!(topology_from_toml(bad), Err(CalError::Config(_))));
        let bad = "[[region]]\nid = \"r\"\nlevel = 1\ncolumns = 4\ncells = 1\nsegments = 1\ncorrelator = \"hardwired\"\n";
        assert!(matches!(topology_from_toml(bad), Err(CalError::Config(_))));
    }
}
