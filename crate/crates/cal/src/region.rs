//! One cortical region: binary correlator, sequence memory, apical
//! feedback array and temporal pooling wired into a single step function.
//!
//! Per step: feed-forward inputs are concatenated (spatial pooling),
//! OR-ed over a sliding window (temporal pooling), pushed through the
//! gain-modulated correlator, and the winning columns drive sequence
//! memory. The predicted cells' columns are reconstructed back into
//! input space for decoding. With feedback configured, the apical array
//! converts the feedback vector into a per-axon gain and learns which
//! input bits co-occur with which feedback activity.

use std::collections::VecDeque;

use crate::bitvec::{concat, union_window, DenseExcitation, SparseBitVector};
use crate::codec::EncoderSpec;
use crate::correlator::{default_k_out, Correlator};
use crate::error::{CalError, Result};
use crate::sequence::{SequenceMemory, SmGeometry};
use crate::synapses::{PlasticityParams, SynapseArray, WeightBits};

/// Splitmix64 step; derives stable per-component seeds from one master.
pub(crate) fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut z = master
        .wrapping_add(salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) const SALT_CORRELATOR: u64 = 1;
pub(crate) const SALT_SEQUENCE: u64 = 2;

/// How the region's correlator is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelatorKind {
    /// Unit weights, evenly distributed, updates disabled.
    Hardwired { fanin: usize },
    /// Starts empty and learns online.
    Learning,
}

/// Width and reconstruction depth of one feed-forward channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelSpec {
    pub width: usize,
    /// Active bits to reconstruct within this channel (the encoder's k).
    pub k: usize,
}

/// Everything needed to build one region.
#[derive(Debug, Clone)]
pub struct RegionConfig {
    pub geometry: SmGeometry,
    /// Total feed-forward bits entering the correlator.
    pub input_width: usize,
    /// Temporal pooling depth; 1 disables pooling.
    pub pool_window: usize,
    /// Active columns per step; defaults to `round(sqrt(N_col))`.
    pub k_out: Option<usize>,
    pub correlator: CorrelatorKind,
    /// Receptive-field cap per correlator dendrite (learning mode).
    pub correlator_max_fanin: Option<usize>,
    /// Minimum active synapses for a lateral segment to predict.
    pub segment_threshold: usize,
    pub weight_bits: WeightBits,
    pub correlator_plasticity: PlasticityParams,
    pub sm_plasticity: PlasticityParams,
    pub apical_plasticity: PlasticityParams,
    /// Apical axon count; 0 disables feedback.
    pub feedback_width: usize,
    /// Channel layout for prediction reconstruction; empty skips it.
    pub channels: Vec<ChannelSpec>,
    pub seed: u64,
}

impl RegionConfig {
    pub fn new(geometry: SmGeometry, input_width: usize) -> Self {
        // meta-plasticity protects consolidated sequence transitions from
        // being forgotten; in the co-occurrence learners (correlator,
        // apical) the same protection would freeze receptive fields, so
        // only sequence memory defaults to it
        let co_occurrence = PlasticityParams {
            meta: false,
            ..Default::default()
        };
        Self {
            geometry,
            input_width,
            pool_window: 1,
            k_out: None,
            correlator: CorrelatorKind::Learning,
            correlator_max_fanin: None,
            segment_threshold: 2,
            weight_bits: WeightBits::Full,
            correlator_plasticity: co_occurrence.clone(),
            sm_plasticity: PlasticityParams::default(),
            apical_plasticity: co_occurrence,
            feedback_width: 0,
            channels: Vec::new(),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_width == 0 {
            return Err(CalError::InvalidParameter("region input width is 0".into()));
        }
        if self.pool_window == 0 {
            return Err(CalError::InvalidParameter("pool window must be >= 1".into()));
        }
        if !self.channels.is_empty() {
            let total: usize = self.channels.iter().map(|c| c.width).sum();
            if total != self.input_width {
                return Err(CalError::LengthMismatch {
                    context: "region channel widths",
                    expected: self.input_width,
                    got: total,
                });
            }
        }
        Ok(())
    }
}

/// Products of one region step.
#[derive(Debug, Clone)]
pub struct RegionOutput {
    /// Winning mini-columns.
    pub y: SparseBitVector,
    /// Verified cells — the feed-forward payload to the next level.
    pub v: SparseBitVector,
    /// Cells predicted for the next step.
    pub z: SparseBitVector,
    /// Reconstructed predicted input, when channels are configured.
    pub x_hat: Option<SparseBitVector>,
    /// Jaccard similarity of `y` with the previous step's `y`.
    pub persistence: f64,
}

/// Dendritic gain from feedback: `g = 1 + fᵀW_Ap`, elementwise over the
/// gain slots. The unity baseline keeps absent feedback neutral —
/// feedback can only ever lower effective thresholds.
pub fn apical_gain(f: &SparseBitVector, w_ap: &SynapseArray) -> Result<DenseExcitation> {
    let e = w_ap.excite(f, None)?;
    DenseExcitation::new(e.into_iter().map(|v| 1.0 + v).collect())
}

/// One node of the hierarchy.
#[derive(Debug, Clone)]
pub struct Region {
    config: RegionConfig,
    correlator: Correlator,
    sm: SequenceMemory,
    apical: Option<SynapseArray>,
    pool: VecDeque<SparseBitVector>,
    y_prev: SparseBitVector,
    last_x_hat: Option<SparseBitVector>,
    learning: bool,
}

impl Region {
    pub fn new(config: RegionConfig) -> Result<Self> {
        config.validate()?;
        let n_col = config.geometry.n_col;
        let k_out = config.k_out.unwrap_or_else(|| default_k_out(n_col));
        let correlator = match config.correlator {
            CorrelatorKind::Hardwired { fanin } => Correlator::hardwire(
                config.input_width,
                n_col,
                fanin,
                derive_seed(config.seed, SALT_CORRELATOR),
            )?
            .with_k_out(k_out)?,
            CorrelatorKind::Learning => Correlator::new_learning(
                config.input_width,
                n_col,
                Some(k_out),
                config.weight_bits,
                config.correlator_plasticity.clone(),
                config.correlator_max_fanin,
            )?,
        };
        let sm = SequenceMemory::new(
            config.geometry,
            k_out,
            config.weight_bits,
            config.sm_plasticity.clone(),
            derive_seed(config.seed, SALT_SEQUENCE),
        )?
        .with_segment_threshold(config.segment_threshold);
        let apical = if config.feedback_width > 0 {
            Some(SynapseArray::new(
                config.feedback_width,
                config.input_width,
                config.weight_bits,
                None,
            )?)
        } else {
            None
        };
        Ok(Self {
            y_prev: SparseBitVector::empty(n_col),
            pool: VecDeque::with_capacity(config.pool_window),
            last_x_hat: None,
            learning: true,
            config,
            correlator,
            sm,
            apical,
        })
    }

    pub fn config(&self) -> &RegionConfig {
        &self.config
    }

    pub fn correlator(&self) -> &Correlator {
        &self.correlator
    }

    pub fn sequence_memory(&self) -> &SequenceMemory {
        &self.sm
    }

    pub fn k_out(&self) -> usize {
        self.correlator.k_out()
    }

    /// Verified-cell vector width, the payload width seen by upper levels.
    pub fn output_width(&self) -> usize {
        self.config.geometry.cells()
    }

    pub fn set_learning(&mut self, on: bool) {
        self.learning = on;
        self.sm.set_learning(on);
    }

    pub fn learning(&self) -> bool {
        self.learning
    }

    /// Runs one step: concatenate feed-forward inputs, pool temporally,
    /// modulate by feedback gain, activate, predict, reconstruct.
    pub fn step(
        &mut self,
        ff_inputs: &[SparseBitVector],
        feedback: Option<&SparseBitVector>,
    ) -> Result<RegionOutput> {
        let x_t = concat(ff_inputs)?;
        if x_t.len() != self.config.input_width {
            return Err(CalError::LengthMismatch {
                context: "region feed-forward input",
                expected: self.config.input_width,
                got: x_t.len(),
            });
        }
        if self.pool.len() == self.config.pool_window {
            self.pool.pop_front();
        }
        self.pool.push_back(x_t);
        let pool_slices: Vec<SparseBitVector> = self.pool.iter().cloned().collect();
        let pooled = union_window(&pool_slices)?;

        let gain = match (&self.apical, feedback) {
            (Some(ap), Some(f)) => {
                if f.len() != self.config.feedback_width {
                    return Err(CalError::LengthMismatch {
                        context: "region feedback",
                        expected: self.config.feedback_width,
                        got: f.len(),
                    });
                }
                Some(apical_gain(f, ap)?)
            }
            (None, Some(_)) => {
                return Err(CalError::InvalidParameter(
                    "feedback given to a region with feedback_width 0".into(),
                ))
            }
            _ => None,
        };

        let y = if self.learning {
            self.correlator.forward(&pooled, gain.as_ref())?
        } else {
            self.correlator.forward_frozen(&pooled, gain.as_ref())?
        };

        let sm_out = self.sm.step(&y)?;

        // decode only from excitation-driven predictions; bursting picks
        // name the current input and would drag the forecast backward
        let predicted_columns = columns_of_cells(&self.config.geometry, &sm_out.z_driven);
        let x_hat = if self.config.channels.is_empty() || predicted_columns.is_empty() {
            None
        } else {
            let segments: Vec<(usize, usize)> = self
                .config
                .channels
                .iter()
                .map(|c| (c.width, c.k))
                .collect();
            Some(self.correlator.reconstruct_channels(&predicted_columns, &segments)?)
        };

        if self.learning {
            if let (Some(ap), Some(f)) = (self.apical.as_mut(), feedback) {
                if !f.is_empty() {
                    // the gain slots live in input space: the winners map
                    // back to the active input bits connected to them
                    let y_ap = winner_input_bits(self.correlator.array(), &pooled, &y);
                    ap.update(f, &y_ap, &self.config.apical_plasticity)?;
                    let init = ap.min_connectable_permanence();
                    ap.grow_synapses(f, &y_ap, init, usize::MAX);
                }
            }
        }

        let persistence = self.y_prev.jaccard(&y)?;
        self.y_prev = y.clone();
        self.last_x_hat = x_hat.clone();

        Ok(RegionOutput {
            y,
            v: sm_out.v,
            z: sm_out.z,
            x_hat,
            persistence,
        })
    }

    /// Splits the last reconstructed prediction by channel and decodes
    /// each; a silent channel (or no prediction at all) yields `None`.
    pub fn predict_scalar(&self, decoders: &[&EncoderSpec]) -> Result<Vec<Option<f64>>> {
        if decoders.len() != self.config.channels.len() {
            return Err(CalError::LengthMismatch {
                context: "predict_scalar decoders",
                expected: self.config.channels.len(),
                got: decoders.len(),
            });
        }
        let Some(x_hat) = &self.last_x_hat else {
            return Ok(vec![None; decoders.len()]);
        };
        let widths: Vec<usize> = self.config.channels.iter().map(|c| c.width).collect();
        let parts = x_hat.split(&widths)?;
        let mut out = Vec::with_capacity(parts.len());
        for (part, dec) in parts.iter().zip(decoders) {
            match dec.decode(part) {
                Ok(v) => out.push(Some(v)),
                Err(CalError::NoPrediction) => out.push(None),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// The apical feedback array, when feedback is configured.
    pub fn apical(&self) -> Option<&SynapseArray> {
        self.apical.as_ref()
    }

    /// Mutable access for hand-built apical wiring.
    pub fn apical_mut(&mut self) -> Option<&mut SynapseArray> {
        self.apical.as_mut()
    }

    pub(crate) fn correlator_mut(&mut self) -> &mut Correlator {
        &mut self.correlator
    }

    pub(crate) fn sm(&self) -> &SequenceMemory {
        &self.sm
    }

    pub(crate) fn sm_mut(&mut self) -> &mut SequenceMemory {
        &mut self.sm
    }

    pub(crate) fn pool_contents(&self) -> &VecDeque<SparseBitVector> {
        &self.pool
    }

    pub(crate) fn y_prev(&self) -> &SparseBitVector {
        &self.y_prev
    }

    pub(crate) fn restore_loop_state(
        &mut self,
        pool: VecDeque<SparseBitVector>,
        y_prev: SparseBitVector,
        last_x_hat: Option<SparseBitVector>,
    ) {
        self.pool = pool;
        self.y_prev = y_prev;
        self.last_x_hat = last_x_hat;
    }

    pub(crate) fn last_x_hat(&self) -> Option<&SparseBitVector> {
        self.last_x_hat.as_ref()
    }
}

/// Columns containing at least one of the given cells.
pub fn columns_of_cells(geom: &SmGeometry, cells: &SparseBitVector) -> SparseBitVector {
    let mut cols: Vec<usize> = cells
        .active()
        .iter()
        .map(|&c| geom.column_of_cell(c))
        .collect();
    cols.dedup();
    SparseBitVector::from_active(geom.n_col, cols)
        .expect("columns of ascending cells are non-decreasing")
}

/// Active input bits connected (nonzero weight) to at least one winning
/// column — the winners mapped back through the correlator wiring onto
/// the gain slots.
fn winner_input_bits(
    array: &SynapseArray,
    x: &SparseBitVector,
    y: &SparseBitVector,
) -> SparseBitVector {
    let mut connected = vec![false; array.axon_count()];
    for &j in y.active() {
        for i in array.connected_axons_of(j) {
            connected[i] = true;
        }
    }
    let active: Vec<usize> = x
        .active()
        .iter()
        .copied()
        .filter(|&i| connected[i])
        .collect();
    SparseBitVector::from_active(array.axon_count(), active).expect("subset of a valid vector")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::codec::{EncoderSpec, ScalarKind};

    fn sbv(len: usize, idx: &[usize]) -> SparseBitVector {
        SparseBitVector::from_active(len, idx.to_vec()).unwrap()
    }

    #[test]
    fn apical_gain_is_one_plus_feedback_drive() {
        let mut ap = SynapseArray::new(4, 6, WeightBits::Full, None).unwrap();
        // no feedback activity: neutral gain everywhere
        let g = apical_gain(&SparseBitVector::empty(4), &ap).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.0));

        // one synapse of weight 0.5 onto gain slot 3
        ap.set_permanence(1, 3, 0.5).unwrap();
        let g = apical_gain(&sbv(4, &[1]), &ap).unwrap();
        assert!((g.get(3) - 1.5).abs() < 1e-4);
        assert_eq!(g.get(0), 1.0);
    }

    #[test]
    fn apical_gain_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let (m, n) = (rng.gen_range(2..=16), rng.gen_range(2..=16));
            let mut ap = SynapseArray::new(m, n, WeightBits::Full, None).unwrap();
            let mut w = vec![vec![0.0; n]; m];
            for i in 0..m {
                for j in 0..n {
                    if rng.gen_bool(0.3) {
                        let p = (rng.gen_range(0.1..1.0f64) * 65535.0).round() / 65535.0;
                        ap.set_permanence(i, j, p).unwrap();
                        w[i][j] = p;
                    }
                }
            }
            let f_bits: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.4)).collect();
            let f = SparseBitVector::from_active(
                m,
                f_bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect(),
            )
            .unwrap();
            let g = apical_gain(&f, &ap).unwrap();
            for j in 0..n {
                let expect: f64 =
                    1.0 + (0..m).filter(|&i| f_bits[i]).map(|i| w[i][j]).sum::<f64>();
                assert!((g.get(j) - expect).abs() < 1e-9);
            }
        }
    }

    fn popeq_like_config(seed: u64) -> RegionConfig {
        let geometry = SmGeometry::new(64, 4, 2).unwrap();
        let mut cfg = RegionConfig::new(geometry, 25);
        cfg.correlator = CorrelatorKind::Hardwired { fanin: 1 };
        cfg.k_out = Some(8);
        cfg.channels = vec![ChannelSpec { width: 25, k: 5 }];
        cfg.seed = seed;
        cfg
    }

    #[test]
    fn degenerate_pooling_equals_bare_composition() {
        let cfg = popeq_like_config(11);
        let mut region = Region::new(cfg.clone()).unwrap();

        // manual composition with the same derived seeds
        let mut correlator = Correlator::hardwire(
            cfg.input_width,
            cfg.geometry.n_col,
            1,
            derive_seed(cfg.seed, SALT_CORRELATOR),
        )
        .unwrap()
        .with_k_out(8)
        .unwrap();
        let mut sm = SequenceMemory::new(
            cfg.geometry,
            8,
            cfg.weight_bits,
            cfg.sm_plasticity.clone(),
            derive_seed(cfg.seed, SALT_SEQUENCE),
        )
        .unwrap();

        let enc = EncoderSpec::new(0.0, 1.0, 0.05, 5, ScalarKind::Real).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..120 {
            let s = rng.gen_range(0.0..=1.0);
            let x = enc.encode(s).unwrap();
            let out = region.step(std::slice::from_ref(&x), None).unwrap();
            let y = correlator.forward(&x, None).unwrap();
            let sm_out = sm.step(&y).unwrap();
            assert_eq!(out.y, y);
            assert_eq!(out.v, sm_out.v);
            assert_eq!(out.z, sm_out.z);
        }
    }

    #[test]
    fn pooling_window_ors_recent_inputs() {
        let geometry = SmGeometry::new(16, 2, 2).unwrap();
        let mut cfg = RegionConfig::new(geometry, 12);
        cfg.correlator = CorrelatorKind::Hardwired { fanin: 2 };
        cfg.pool_window = 3;
        cfg.seed = 5;
        let mut region = Region::new(cfg).unwrap();

        let inputs = [sbv(12, &[0]), sbv(12, &[4]), sbv(12, &[8]), sbv(12, &[11])];
        for x in &inputs {
            region.step(std::slice::from_ref(x), None).unwrap();
        }
        let pooled = union_window(&region.pool_contents().iter().cloned().collect::<Vec<_>>()).unwrap();
        // cold start padded with fewer inputs; at steady state the pool
        // holds exactly the last three
        assert_eq!(pooled, sbv(12, &[4, 8, 11]));
    }

    #[test]
    fn neutral_gain_changes_nothing() {
        let cfg = {
            let mut c = popeq_like_config(7);
            c.feedback_width = 10;
            c
        };
        let mut with_fb = Region::new(cfg.clone()).unwrap();
        let mut without_fb = Region::new({
            let mut c = cfg.clone();
            c.feedback_width = 0;
            c
        })
        .unwrap();

        let enc = EncoderSpec::new(0.0, 1.0, 0.05, 5, ScalarKind::Real).unwrap();
        let empty_fb = SparseBitVector::empty(10);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..60 {
            let s = rng.gen_range(0.0..=1.0);
            let x = enc.encode(s).unwrap();
            // empty feedback over an unconnected apical array: g == 1
            let a = with_fb.step(std::slice::from_ref(&x), Some(&empty_fb)).unwrap();
            let b = without_fb.step(std::slice::from_ref(&x), None).unwrap();
            assert_eq!(a.y, b.y);
            assert_eq!(a.z, b.z);
        }
    }

    #[test]
    fn predict_scalar_splits_channels_and_propagates_no_prediction() {
        let enc1 = EncoderSpec::new(0.0, 3.0, 1.0, 5, ScalarKind::Integer).unwrap();
        let enc2 = EncoderSpec::new(0.0, 3.0, 1.0, 5, ScalarKind::Integer).unwrap();
        let width = enc1.n_bits() + enc2.n_bits();
        let geometry = SmGeometry::new(64, 2, 2).unwrap();
        let mut cfg = RegionConfig::new(geometry, width);
        // fan-in 1 keeps reverse reconstruction free of strays: every
        // dendrite has exactly one owner axon
        cfg.correlator = CorrelatorKind::Hardwired { fanin: 1 };
        cfg.channels = vec![
            ChannelSpec { width: enc1.n_bits(), k: 5 },
            ChannelSpec { width: enc2.n_bits(), k: 5 },
        ];
        cfg.seed = 13;
        let mut region = Region::new(cfg).unwrap();

        // before any step there is no prediction
        assert_eq!(region.predict_scalar(&[&enc1, &enc2]).unwrap(), vec![None, None]);

        // drive a fixed pair long enough familiar for predictions to appear
        for _ in 0..30 {
            let x1 = enc1.encode(1.0).unwrap();
            let x2 = enc2.encode(2.0).unwrap();
            region.step(&[x1, x2], None).unwrap();
        }
        let decoded = region.predict_scalar(&[&enc1, &enc2]).unwrap();
        assert_eq!(decoded, vec![Some(1.0), Some(2.0)]);
    }

    /// Feedback aligned with the true pattern must never degrade — and on
    /// noisy input should improve — prediction accuracy on a learned
    /// periodic sequence.
    #[test]
    fn aligned_feedback_corrects_noisy_winner_sets() {
        let enc = EncoderSpec::new(0.0, 7.0, 1.0, 5, ScalarKind::Integer).unwrap();
        let n_bits = enc.n_bits(); // 40
        let geometry = SmGeometry::new(64, 4, 2).unwrap();
        let mut cfg = RegionConfig::new(geometry, n_bits);
        cfg.correlator = CorrelatorKind::Hardwired { fanin: 2 };
        cfg.k_out = Some(8);
        cfg.feedback_width = n_bits;
        cfg.channels = vec![ChannelSpec { width: n_bits, k: 5 }];
        cfg.seed = 41;
        let mut region = Region::new(cfg).unwrap();
        // identity apical wiring: feedback bit i raises gain slot i
        {
            let ap = region.apical_mut().unwrap();
            for i in 0..n_bits {
                ap.set_permanence(i, i, 1.0).unwrap();
            }
        }

        let cycle = [0.0, 3.0, 5.0, 2.0, 6.0, 1.0];
        // train on clean input, no feedback
        for _ in 0..60 {
            for &s in &cycle {
                let x = enc.encode(s).unwrap();
                region.step(std::slice::from_ref(&x), None).unwrap();
            }
        }
        region.set_learning(false);

        let noisy = |s: f64, rng: &mut ChaCha8Rng| {
            let mut bits = enc.encode(s).unwrap().active().to_vec();
            for _ in 0..4 {
                bits.push(rng.gen_range(0..n_bits));
            }
            SparseBitVector::from_unsorted(n_bits, bits).unwrap()
        };

        let accuracy = |use_feedback: bool| {
            let mut probe = region.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut hits = 0;
            let mut total = 0;
            for pass in 0..12 {
                for (i, &s) in cycle.iter().enumerate() {
                    let x = noisy(s, &mut rng);
                    let fb = enc.encode(s).unwrap();
                    probe
                        .step(std::slice::from_ref(&x), use_feedback.then_some(&fb))
                        .unwrap();
                    if pass == 0 {
                        continue; // let context settle
                    }
                    let next = cycle[(i + 1) % cycle.len()];
                    if probe.predict_scalar(&[&enc]).unwrap()[0] == Some(next) {
                        hits += 1;
                    }
                    total += 1;
                }
            }
            hits as f64 / total as f64
        };

        let acc_plain = accuracy(false);
        let acc_fb = accuracy(true);
        assert!(
            acc_fb >= acc_plain,
            "feedback degraded accuracy: {acc_fb} < {acc_plain}"
        );
        assert!(acc_fb > acc_plain + 0.1, "feedback gave no measurable lift");

        // on clean input the winner sets are unchanged by aligned feedback
        let mut clean_a = region.clone();
        let mut clean_b = region.clone();
        for &s in &cycle {
            let x = enc.encode(s).unwrap();
            let fb = enc.encode(s).unwrap();
            let ya = clean_a.step(std::slice::from_ref(&x), Some(&fb)).unwrap();
            let yb = clean_b.step(std::slice::from_ref(&x), None).unwrap();
            assert_eq!(ya.y, yb.y);
        }
    }

    #[test]
    fn persistence_tracks_output_stability() {
        let cfg = popeq_like_config(3);
        let mut region = Region::new(cfg).unwrap();
        let enc = EncoderSpec::new(0.0, 1.0, 0.05, 5, ScalarKind::Real).unwrap();
        let x = enc.encode(0.4).unwrap();
        let first = region.step(std::slice::from_ref(&x), None).unwrap();
        assert_eq!(first.persistence, 0.0, "first step: nothing to compare");
        let second = region.step(std::slice::from_ref(&x), None).unwrap();
        assert_eq!(second.persistence, 1.0, "same input, same winners");
    }
}
