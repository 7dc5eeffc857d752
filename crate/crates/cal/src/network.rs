//! The hierarchy: topology construction, per-tick scheduling with
//! one-tick inter-level latency, feed-forward fan-in, feedback fan-out
//! and whole-network snapshots.
//!
//! Sensors feed level-1 regions directly on the tick they arrive;
//! every inter-region edge (feed-forward verified cells, feedback
//! winning columns) is delayed by exactly one tick through a buffer, so
//! a sensor change reaches level L after L-1 ticks. Within a tick every
//! region reads only buffered data, which makes region order irrelevant.

use std::collections::{BTreeMap, VecDeque};
use std::io::{Read, Write};

use crate::bitvec::SparseBitVector;
use crate::codec::{ingest_frame, BinaryImage, EncoderSpec};
use crate::error::{CalError, Result};
use crate::region::{derive_seed, ChannelSpec, CorrelatorKind, Region, RegionConfig, RegionOutput};
use crate::sequence::SmGeometry;
use crate::snapshot::{SnapshotReader, SnapshotWriter, MAGIC, VERSION};
use crate::synapses::{PlasticityParams, WeightBits};

/// One input channel of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    pub id: String,
    pub kind: SensorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensorKind {
    Scalar(EncoderSpec),
    Image { rows: usize, cols: usize },
}

impl SensorKind {
    pub fn width(&self) -> usize {
        match self {
            SensorKind::Scalar(enc) => enc.n_bits(),
            SensorKind::Image { rows, cols } => rows * cols,
        }
    }
}

/// One region of the hierarchy, before widths are derived.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub id: String,
    /// Hierarchy level, 1 at the sensors.
    pub level: usize,
    pub geometry: SmGeometry,
    pub k_out: Option<usize>,
    pub pool_window: usize,
    pub correlator: CorrelatorKind,
    /// Receptive-field cap per correlator dendrite (learning mode).
    pub correlator_max_fanin: Option<usize>,
    /// Minimum active synapses for a lateral segment to predict.
    pub segment_threshold: usize,
    pub weight_bits: WeightBits,
    /// Plasticity for sequence memory; the correlator and apical arrays
    /// use the same rates with meta-plasticity off.
    pub plasticity: PlasticityParams,
}

/// Source end of a feed-forward edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceRef {
    Sensor(String),
    Region(String),
}

/// The hierarchy graph. Feed-forward edges must climb exactly one level
/// (sensors count as level 0); feedback edges must descend, by any gap.
/// Edge listing order defines concatenation order.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySpec {
    pub sensors: Vec<SensorSpec>,
    pub regions: Vec<RegionSpec>,
    pub ff_edges: Vec<(SourceRef, String)>,
    pub fb_edges: Vec<(String, String)>,
}

/// A value presented to one sensor at one tick.
#[derive(Debug, Clone)]
pub enum SensorValue {
    Scalar(f64),
    Image(BinaryImage),
}

/// The running network.
#[derive(Debug, Clone)]
pub struct Network {
    spec: TopologySpec,
    master_seed: u64,
    regions: Vec<Region>,
    region_index: BTreeMap<String, usize>,
    sensor_index: BTreeMap<String, usize>,
    /// Per ff edge: pending payload for region sources, `None` slot for
    /// sensor sources (those are immediate).
    ff_buffers: Vec<Option<SparseBitVector>>,
    /// Per fb edge: pending winning-column vector of the source.
    fb_buffers: Vec<SparseBitVector>,
    /// Scalar decoders feeding each region, for prediction decoding.
    decoders: Vec<Vec<EncoderSpec>>,
    tick: u64,
}

impl Network {
    /// Validates the topology and allocates every region, deriving
    /// per-region seeds from the master seed by listing order.
    pub fn build(spec: TopologySpec, master_seed: u64) -> Result<Self> {
        let mut sensor_index = BTreeMap::new();
        for (i, s) in spec.sensors.iter().enumerate() {
            if sensor_index.insert(s.id.clone(), i).is_some() {
                return Err(CalError::Topology(format!("duplicate sensor id `{}`", s.id)));
            }
        }
        let mut region_index = BTreeMap::new();
        for (i, r) in spec.regions.iter().enumerate() {
            if r.level == 0 {
                return Err(CalError::Topology(format!(
                    "region `{}` at level 0; levels start at 1",
                    r.id
                )));
            }
            if sensor_index.contains_key(&r.id) || region_index.insert(r.id.clone(), i).is_some() {
                return Err(CalError::Topology(format!("duplicate id `{}`", r.id)));
            }
        }

        // derive widths from the edges
        let mut input_widths = vec![0usize; spec.regions.len()];
        let mut feedback_widths = vec![0usize; spec.regions.len()];
        let mut channels: Vec<Vec<ChannelSpec>> = vec![Vec::new(); spec.regions.len()];
        let mut decoders: Vec<Vec<EncoderSpec>> = vec![Vec::new(); spec.regions.len()];
        let mut scalar_only = vec![true; spec.regions.len()];

        for (src, dst) in &spec.ff_edges {
            let &di = region_index
                .get(dst)
                .ok_or_else(|| CalError::Topology(format!("unknown ff destination `{dst}`")))?;
            let dst_level = spec.regions[di].level;
            match src {
                SourceRef::Sensor(id) => {
                    let &si = sensor_index
                        .get(id)
                        .ok_or_else(|| CalError::Topology(format!("unknown sensor `{id}`")))?;
                    if dst_level != 1 {
                        return Err(CalError::Topology(format!(
                            "sensor `{id}` feeds `{dst}` at level {dst_level}; sensors only feed level 1"
                        )));
                    }
                    let kind = &spec.sensors[si].kind;
                    input_widths[di] += kind.width();
                    match kind {
                        SensorKind::Scalar(enc) => {
                            channels[di].push(ChannelSpec {
                                width: enc.n_bits(),
                                k: enc.active_bits(),
                            });
                            decoders[di].push(enc.clone());
                        }
                        SensorKind::Image { .. } => scalar_only[di] = false,
                    }
                }
                SourceRef::Region(id) => {
                    let &si = region_index
                        .get(id)
                        .ok_or_else(|| CalError::Topology(format!("unknown ff source `{id}`")))?;
                    let src_level = spec.regions[si].level;
                    if src_level + 1 != dst_level {
                        return Err(CalError::Topology(format!(
                            "ff edge `{id}` (level {src_level}) -> `{dst}` (level {dst_level}) must climb exactly one level"
                        )));
                    }
                    input_widths[di] += spec.regions[si].geometry.cells();
                    scalar_only[di] = false;
                }
            }
        }
        for (src, dst) in &spec.fb_edges {
            let &si = region_index
                .get(src)
                .ok_or_else(|| CalError::Topology(format!("unknown fb source `{src}`")))?;
            let &di = region_index
                .get(dst)
                .ok_or_else(|| CalError::Topology(format!("unknown fb destination `{dst}`")))?;
            if spec.regions[si].level <= spec.regions[di].level {
                return Err(CalError::Topology(format!(
                    "fb edge `{src}` -> `{dst}` must descend the hierarchy"
                )));
            }
            feedback_widths[di] += spec.regions[si].geometry.n_col;
        }

        let mut regions = Vec::with_capacity(spec.regions.len());
        for (i, r) in spec.regions.iter().enumerate() {
            if input_widths[i] == 0 {
                return Err(CalError::Topology(format!(
                    "region `{}` has no feed-forward source",
                    r.id
                )));
            }
            let mut cfg = RegionConfig::new(r.geometry, input_widths[i]);
            cfg.pool_window = r.pool_window;
            cfg.k_out = r.k_out;
            cfg.correlator = r.correlator;
            cfg.correlator_max_fanin = r.correlator_max_fanin;
            cfg.segment_threshold = r.segment_threshold;
            cfg.weight_bits = r.weight_bits;
            let co_occurrence = PlasticityParams {
                meta: false,
                ..r.plasticity.clone()
            };
            cfg.correlator_plasticity = co_occurrence.clone();
            cfg.sm_plasticity = r.plasticity.clone();
            cfg.apical_plasticity = co_occurrence;
            cfg.feedback_width = feedback_widths[i];
            if scalar_only[i] {
                cfg.channels = std::mem::take(&mut channels[i]);
            }
            cfg.seed = derive_seed(master_seed, 0x100 + i as u64);
            regions.push(
                Region::new(cfg).map_err(|e| {
                    CalError::Topology(format!("region `{}`: {e}", r.id))
                })?,
            );
        }

        let ff_buffers = spec
            .ff_edges
            .iter()
            .map(|(src, _)| match src {
                SourceRef::Sensor(_) => None,
                SourceRef::Region(id) => {
                    let cells = spec.regions[region_index[id]].geometry.cells();
                    Some(SparseBitVector::empty(cells))
                }
            })
            .collect();
        let fb_buffers = spec
            .fb_edges
            .iter()
            .map(|(src, _)| SparseBitVector::empty(spec.regions[region_index[src]].geometry.n_col))
            .collect();

        Ok(Self {
            spec,
            master_seed,
            regions,
            region_index,
            sensor_index,
            ff_buffers,
            fb_buffers,
            decoders,
            tick: 0,
        })
    }

    pub fn spec(&self) -> &TopologySpec {
        &self.spec
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn region_ids(&self) -> Vec<&str> {
        self.spec.regions.iter().map(|r| r.id.as_str()).collect()
    }

    pub fn region(&self, id: &str) -> Result<&Region> {
        let &i = self
            .region_index
            .get(id)
            .ok_or_else(|| CalError::Topology(format!("unknown region `{id}`")))?;
        Ok(&self.regions[i])
    }

    /// Mutable access for probes and hand-wired setups.
    pub fn region_mut(&mut self, id: &str) -> Result<&mut Region> {
        let &i = self
            .region_index
            .get(id)
            .ok_or_else(|| CalError::Topology(format!("unknown region `{id}`")))?;
        Ok(&mut self.regions[i])
    }

    /// Scalar decoders feeding a level-1 region, in channel order.
    pub fn decoders_for(&self, id: &str) -> Result<&[EncoderSpec]> {
        let &i = self
            .region_index
            .get(id)
            .ok_or_else(|| CalError::Topology(format!("unknown region `{id}`")))?;
        Ok(&self.decoders[i])
    }

    pub fn set_learning(&mut self, on: bool) {
        for r in &mut self.regions {
            r.set_learning(on);
        }
    }

    /// Advances the whole network one tick. Level-1 regions consume the
    /// sensor values directly; everything else reads last tick's buffered
    /// payloads. Returns one output per region in listing order.
    pub fn tick(&mut self, values: &BTreeMap<String, SensorValue>) -> Result<Vec<RegionOutput>> {
        // encode every sensor up front
        let mut encoded: Vec<SparseBitVector> = Vec::with_capacity(self.spec.sensors.len());
        for sensor in &self.spec.sensors {
            let value = values.get(&sensor.id).ok_or_else(|| {
                CalError::Topology(format!("missing value for sensor `{}`", sensor.id))
            })?;
            let bits = match (&sensor.kind, value) {
                (SensorKind::Scalar(enc), SensorValue::Scalar(s)) => enc.encode(*s)?,
                (SensorKind::Image { rows, cols }, SensorValue::Image(img)) => {
                    if img.rows() != *rows || img.cols() != *cols {
                        return Err(CalError::LengthMismatch {
                            context: "sensor image size",
                            expected: rows * cols,
                            got: img.rows() * img.cols(),
                        });
                    }
                    ingest_frame(img)
                }
                (SensorKind::Scalar(_), SensorValue::Image(_)) => {
                    return Err(CalError::Topology(format!(
                        "sensor `{}` expects a scalar",
                        sensor.id
                    )))
                }
                (SensorKind::Image { .. }, SensorValue::Scalar(_)) => {
                    return Err(CalError::Topology(format!(
                        "sensor `{}` expects an image",
                        sensor.id
                    )))
                }
            };
            encoded.push(bits);
        }

        // step every region from sensors and buffered edges
        let mut outputs: Vec<Option<RegionOutput>> = vec![None; self.regions.len()];
        for (ri, region_spec) in self.spec.regions.iter().enumerate() {
            let mut ff_inputs = Vec::new();
            for (ei, (src, dst)) in self.spec.ff_edges.iter().enumerate() {
                if dst != &region_spec.id {
                    continue;
                }
                match src {
                    SourceRef::Sensor(id) => {
                        ff_inputs.push(encoded[self.sensor_index[id]].clone())
                    }
                    SourceRef::Region(_) => {
                        ff_inputs.push(self.ff_buffers[ei].as_ref().unwrap().clone())
                    }
                }
            }
            let mut fb_parts = Vec::new();
            for (ei, (_, dst)) in self.spec.fb_edges.iter().enumerate() {
                if dst == &region_spec.id {
                    fb_parts.push(self.fb_buffers[ei].clone());
                }
            }
            let feedback = if fb_parts.is_empty() {
                None
            } else {
                Some(crate::bitvec::concat(&fb_parts)?)
            };
            let out = self.regions[ri].step(&ff_inputs, feedback.as_ref())?;
            outputs[ri] = Some(out);
        }
        let outputs: Vec<RegionOutput> = outputs.into_iter().map(Option::unwrap).collect();

        // rotate the delay buffers with this tick's products
        for (ei, (src, _)) in self.spec.ff_edges.iter().enumerate() {
            if let SourceRef::Region(id) = src {
                self.ff_buffers[ei] = Some(outputs[self.region_index[id]].v.clone());
            }
        }
        for (ei, (src, _)) in self.spec.fb_edges.iter().enumerate() {
            self.fb_buffers[ei] = outputs[self.region_index[src]].y.clone();
        }
        self.tick += 1;
        Ok(outputs)
    }

    /// Writes the complete network state; the topology rides along as
    /// TOML so a snapshot alone rebuilds the network.
    pub fn snapshot(&self, out: impl Write) -> Result<()> {
        let mut w = SnapshotWriter::new(out);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.string(&crate::config::topology_to_toml(&self.spec)?)?;
        w.u64(self.master_seed)?;
        w.u64(self.tick)?;
        w.u32(self.regions.len() as u32)?;
        for (spec, region) in self.spec.regions.iter().zip(&self.regions) {
            w.string(&spec.id)?;
            w.array(region.correlator().array())?;
            let sm = region.sm().state_for_snapshot();
            w.array(sm.array)?;
            w.bitvec(sm.z_prev)?;
            w.bitvec(sm.a_prev)?;
            w.bitvec(sm.s_prev)?;
            w.u64(sm.d_prev.len() as u64)?;
            for &d in sm.d_prev {
                w.f64(d)?;
            }
            w.u8(sm.stepped as u8)?;
            w.rng(sm.rng)?;
            match region.apical() {
                Some(ap) => {
                    w.u8(1)?;
                    w.array(ap)?;
                }
                None => w.u8(0)?,
            }
            let pool = region.pool_contents();
            w.u64(pool.len() as u64)?;
            for v in pool {
                w.bitvec(v)?;
            }
            w.bitvec(region.y_prev())?;
            match region.last_x_hat() {
                Some(x) => {
                    w.u8(1)?;
                    w.bitvec(x)?;
                }
                None => w.u8(0)?,
            }
        }
        w.u32(self.ff_buffers.len() as u32)?;
        for buf in &self.ff_buffers {
            match buf {
                Some(v) => {
                    w.u8(1)?;
                    w.bitvec(v)?;
                }
                None => w.u8(0)?,
            }
        }
        w.u32(self.fb_buffers.len() as u32)?;
        for v in &self.fb_buffers {
            w.bitvec(v)?;
        }
        w.bytes(b"CALEND\x00\x00")?;
        Ok(())
    }

    /// Rebuilds a network from a snapshot; the restored instance replays
    /// bit-identically to the one that was saved.
    pub fn restore(input: impl Read) -> Result<Self> {
        let mut r = SnapshotReader::new(input);
        r.expect_magic()?;
        let topology_toml = r.string()?;
        let spec = crate::config::topology_from_toml(&topology_toml)?;
        let master_seed = r.u64()?;
        let tick = r.u64()?;
        let mut net = Self::build(spec, master_seed)?;
        net.tick = tick;
        let region_count = r.u32()? as usize;
        if region_count != net.regions.len() {
            return Err(CalError::Snapshot(format!(
                "snapshot has {region_count} regions, topology has {}",
                net.regions.len()
            )));
        }
        for ri in 0..region_count {
            let id = r.string()?;
            if id != net.spec.regions[ri].id {
                return Err(CalError::Snapshot(format!(
                    "region order mismatch: `{id}` vs `{}`",
                    net.spec.regions[ri].id
                )));
            }
            let corr_array = r.array()?;
            let region = &mut net.regions[ri];
            region.correlator_mut().set_array(corr_array).map_err(|e| {
                CalError::Snapshot(format!("region `{id}` correlator: {e}"))
            })?;
            let sm_array = r.array()?;
            let z_prev = r.bitvec()?;
            let a_prev = r.bitvec()?;
            let s_prev = r.bitvec()?;
            let d_len = r.u64()? as usize;
            let geom = *region.sm().geometry();
            if d_len != geom.segments()
                || sm_array.axon_count() != geom.cells()
                || sm_array.dendrite_count() != geom.segments()
            {
                return Err(CalError::Snapshot(format!(
                    "region `{id}` sequence-memory geometry mismatch"
                )));
            }
            let mut d_prev = Vec::with_capacity(d_len);
            for _ in 0..d_len {
                d_prev.push(r.f64()?);
            }
            let stepped = r.u8()? != 0;
            let rng = r.rng()?;
            region
                .sm_mut()
                .restore_state(sm_array, z_prev, a_prev, s_prev, d_prev, stepped, rng);
            if r.u8()? != 0 {
                let ap = r.array()?;
                match region.apical_mut() {
                    Some(slot) => {
                        if ap.axon_count() != slot.axon_count()
                            || ap.dendrite_count() != slot.dendrite_count()
                        {
                            return Err(CalError::Snapshot(format!(
                                "region `{id}` apical geometry mismatch"
                            )));
                        }
                        *slot = ap;
                    }
                    None => {
                        return Err(CalError::Snapshot(format!(
                            "region `{id}` has apical state but no feedback edges"
                        )))
                    }
                }
            }
            let pool_len = r.u64()? as usize;
            let mut pool = VecDeque::with_capacity(pool_len);
            for _ in 0..pool_len {
                pool.push_back(r.bitvec()?);
            }
            let y_prev = r.bitvec()?;
            let last_x_hat = if r.u8()? != 0 { Some(r.bitvec()?) } else { None };
            region.restore_loop_state(pool, y_prev, last_x_hat);
        }
        let ff_count = r.u32()? as usize;
        if ff_count != net.ff_buffers.len() {
            return Err(CalError::Snapshot("feed-forward buffer count mismatch".into()));
        }
        for buf in net.ff_buffers.iter_mut() {
            let present = r.u8()? != 0;
            match (present, &mut *buf) {
                (true, Some(_)) => *buf = Some(r.bitvec()?),
                (false, None) => {}
                _ => return Err(CalError::Snapshot("buffer kind mismatch".into())),
            }
        }
        let fb_count = r.u32()? as usize;
        if fb_count != net.fb_buffers.len() {
            return Err(CalError::Snapshot("feedback buffer count mismatch".into()));
        }
        for buf in net.fb_buffers.iter_mut() {
            *buf = r.bitvec()?;
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::ScalarKind;

    fn scalar_sensor(id: &str) -> SensorSpec {
        SensorSpec {
            id: id.into(),
            kind: SensorKind::Scalar(
                EncoderSpec::new(0.0, 1.0, 0.05, 5, ScalarKind::Real).unwrap(),
            ),
        }
    }

    fn region_spec(id: &str, level: usize, n_col: usize) -> RegionSpec {
        RegionSpec {
            id: id.into(),
            level,
            geometry: SmGeometry::new(n_col, 2, 2).unwrap(),
            k_out: None,
            pool_window: 1,
            correlator: CorrelatorKind::Learning,
            correlator_max_fanin: None,
            segment_threshold: 2,
            weight_bits: WeightBits::Full,
            plasticity: PlasticityParams::default(),
        }
    }

    fn stack3() -> TopologySpec {
        let mut r1 = region_spec("R1", 1, 64);
        r1.correlator = CorrelatorKind::Hardwired { fanin: 1 };
        let mut r2 = region_spec("R2", 2, 64);
        r2.pool_window = 3;
        let mut r3 = region_spec("R3", 3, 64);
        r3.pool_window = 3;
        TopologySpec {
            sensors: vec![scalar_sensor("s")],
            regions: vec![r1, r2, r3],
            ff_edges: vec![
                (SourceRef::Sensor("s".into()), "R1".into()),
                (SourceRef::Region("R1".into()), "R2".into()),
                (SourceRef::Region("R2".into()), "R3".into()),
            ],
            fb_edges: vec![("R3".into(), "R1".into())],
        }
    }

    fn scalar_frame(v: f64) -> BTreeMap<String, SensorValue> {
        let mut m = BTreeMap::new();
        m.insert("s".to_string(), SensorValue::Scalar(v));
        m
    }

    #[test]
    fn builds_the_three_level_stack() {
        let net = Network::build(stack3(), 1).unwrap();
        assert_eq!(net.region_ids(), vec!["R1", "R2", "R3"]);
        // upper-level input width is the source's verified-cell width
        assert_eq!(net.region("R2").unwrap().config().input_width, 128);
        assert_eq!(net.region("R1").unwrap().config().feedback_width, 64);
        assert_eq!(net.decoders_for("R1").unwrap().len(), 1);
        assert!(net.decoders_for("R2").unwrap().is_empty());
    }

    #[test]
    fn builds_the_fifteen_region_pyramid() {
        // 9 -> 4 -> 1 -> 1, the four-level image hierarchy
        let mut regions = Vec::new();
        let mut ff = Vec::new();
        let mut sensors = Vec::new();
        for f in 0..9 {
            sensors.push(SensorSpec {
                id: format!("f{f}"),
                kind: SensorKind::Image { rows: 8, cols: 8 },
            });
            regions.push(region_spec(&format!("L1_{f}"), 1, 64));
            ff.push((SourceRef::Sensor(format!("f{f}")), format!("L1_{f}")));
        }
        let quads = [[0, 1, 3, 4], [1, 2, 4, 5], [3, 4, 6, 7], [4, 5, 7, 8]];
        for (q, fields) in quads.iter().enumerate() {
            let mut spec = region_spec(&format!("L2_{q}"), 2, 64);
            spec.pool_window = 3;
            regions.push(spec);
            for f in fields {
                ff.push((SourceRef::Region(format!("L1_{f}")), format!("L2_{q}")));
            }
        }
        regions.push(region_spec("L3", 3, 64));
        for q in 0..4 {
            ff.push((SourceRef::Region(format!("L2_{q}")), "L3".into()));
        }
        regions.push(region_spec("L4", 4, 64));
        ff.push((SourceRef::Region("L3".into()), "L4".into()));

        let spec = TopologySpec {
            sensors,
            regions,
            ff_edges: ff,
            fb_edges: vec![],
        };
        let net = Network::build(spec, 9).unwrap();
        assert_eq!(net.region_ids().len(), 15);
        // level-4 input width equals level-3 cell count
        assert_eq!(net.region("L4").unwrap().config().input_width, 64 * 2);
        assert_eq!(net.region("L3").unwrap().config().input_width, 4 * 64 * 2);
    }

    #[test]
    fn rejects_level_skips_and_dangling_edges() {
        let mut spec = stack3();
        spec.ff_edges.push((SourceRef::Region("R1".into()), "R3".into()));
        assert!(matches!(Network::build(spec, 0), Err(CalError::Topology(_))));

        let mut spec = stack3();
        spec.fb_edges.push(("R1".into(), "R3".into()));
        assert!(matches!(Network::build(spec, 0), Err(CalError::Topology(_))));

        let mut spec = stack3();
        spec.ff_edges[0].1 = "nope".into();
        assert!(matches!(Network::build(spec, 0), Err(CalError::Topology(_))));
    }

    #[test]
    fn payloads_climb_one_level_per_tick() {
        // constant input so verified cells appear as early as possible;
        // each level's first activity trails its source's first verified
        // output by exactly the one-tick edge delay
        let mut net = Network::build(stack3(), 7).unwrap();
        let mut first_y = [None::<u64>; 3];
        let mut first_v = [None::<u64>; 3];
        for t in 0..20u64 {
            let out = net.tick(&scalar_frame(0.5)).unwrap();
            for (i, o) in out.iter().enumerate() {
                if !o.y.is_empty() && first_y[i].is_none() {
                    first_y[i] = Some(t);
                }
                if !o.v.is_empty() && first_v[i].is_none() {
                    first_v[i] = Some(t);
                }
            }
        }
        assert_eq!(first_y[0], Some(0), "R1 sees the sensor immediately");
        assert_eq!(first_v[0], Some(1), "constant input verifies on tick 1");
        assert_eq!(
            first_y[1],
            Some(first_v[0].unwrap() + 1),
            "R2 activates one tick after R1 verifies"
        );
        assert_eq!(
            first_y[2],
            Some(first_v[1].unwrap() + 1),
            "R3 activates one tick after R2 verifies"
        );
    }

    #[test]
    fn single_region_network_equals_bare_region() {
        let spec = TopologySpec {
            sensors: vec![scalar_sensor("s")],
            regions: vec![{
                let mut r = region_spec("R", 1, 64);
                r.correlator = CorrelatorKind::Hardwired { fanin: 1 };
                r
            }],
            ff_edges: vec![(SourceRef::Sensor("s".into()), "R".into())],
            fb_edges: vec![],
        };
        let mut net = Network::build(spec.clone(), 11).unwrap();

        let enc = EncoderSpec::new(0.0, 1.0, 0.05, 5, ScalarKind::Real).unwrap();
        let mut cfg = RegionConfig::new(spec.regions[0].geometry, enc.n_bits());
        cfg.correlator = CorrelatorKind::Hardwired { fanin: 1 };
        cfg.channels = vec![ChannelSpec { width: enc.n_bits(), k: 5 }];
        cfg.seed = derive_seed(11, 0x100);
        let mut region = Region::new(cfg).unwrap();

        for i in 0..60 {
            let s = (i as f64 * 0.37) % 1.0;
            let from_net = net.tick(&scalar_frame(s)).unwrap();
            let direct = region.step(&[enc.encode(s).unwrap()], None).unwrap();
            assert_eq!(from_net[0].y, direct.y);
            assert_eq!(from_net[0].z, direct.z);
            assert_eq!(from_net[0].v, direct.v);
        }
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let run = |seed: u64| {
            let mut net = Network::build(stack3(), seed).unwrap();
            let mut trace = String::new();
            for i in 0..120 {
                let s = ((i * 7919) % 97) as f64 / 97.0;
                let out = net.tick(&scalar_frame(s)).unwrap();
                for o in &out {
                    trace.push_str(&format!("{}|{}|{:.6};", o.y, o.v, o.persistence));
                }
                trace.push('\n');
            }
            trace
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6), "different seeds explore differently");
    }

    #[test]
    fn snapshot_restore_continues_identically() {
        let mut net = Network::build(stack3(), 13).unwrap();
        for i in 0..80 {
            let s = ((i * 31) % 89) as f64 / 89.0;
            net.tick(&scalar_frame(s)).unwrap();
        }
        let mut bytes = Vec::new();
        net.snapshot(&mut bytes).unwrap();
        let mut restored = Network::restore(bytes.as_slice()).unwrap();
        assert_eq!(restored.tick_count(), net.tick_count());

        let mut trace_a = String::new();
        let mut trace_b = String::new();
        for i in 80..160 {
            let s = ((i * 31) % 89) as f64 / 89.0;
            let a = net.tick(&scalar_frame(s)).unwrap();
            let b = restored.tick(&scalar_frame(s)).unwrap();
            for (oa, ob) in a.iter().zip(&b) {
                trace_a.push_str(&format!("{}|{}|{}\n", oa.y, oa.v, oa.z));
                trace_b.push_str(&format!("{}|{}|{}\n", ob.y, ob.v, ob.z));
            }
        }
        assert_eq!(trace_a, trace_b, "restored network diverged");

        // snapshot of the restored state is byte-identical as well
        let mut bytes_b = Vec::new();
        restored.snapshot(&mut bytes_b).unwrap();
        let mut bytes_a = Vec::new();
        net.snapshot(&mut bytes_a).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn corrupted_snapshots_are_rejected() {
        let net = Network::build(stack3(), 13).unwrap();
        let mut bytes = Vec::new();
        net.snapshot(&mut bytes).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] ^= 0xff;
        assert!(matches!(
            Network::restore(bad_magic.as_slice()),
            Err(CalError::Snapshot(_))
        ));

        let truncated = &bytes[..bytes.len() / 2];
        assert!(Network::restore(truncated).is_err());
    }
}
