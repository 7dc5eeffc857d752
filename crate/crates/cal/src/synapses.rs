//! Plastic synapse arrays: permanence storage, quantized weights,
//! k-winners-take-all activation, Hebbian/anti-Hebbian updates with
//! homeostatic balancing, synapse growth and meta-plasticity.
//!
//! An array connects `m` axons to `n` dendrites. Only realized synapses
//! are stored; a missing entry is an unrealized potential synapse.
//! Permanence lives on a 16-bit fixed-point grid in `[0, 1]` so that the
//! snapshot format (which stores 16-bit permanences) is lossless and a
//! restored array behaves identically to the original.

use std::collections::{BTreeMap, BTreeSet};

use crate::bitvec::{DenseExcitation, SparseBitVector};
use crate::error::{CalError, Result};

/// Permanence grid denominator: stored values are `p16 / 65535`.
pub const PERMANENCE_SCALE: f64 = 65535.0;

/// Weight quantization precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightBits {
    /// 1, 2, 3, 4 or 8 bits.
    Bits(u8),
    /// Weight equals permanence.
    Full,
}

impl WeightBits {
    pub fn validate(self) -> Result<Self> {
        match self {
            WeightBits::Bits(b) if matches!(b, 1 | 2 | 3 | 4 | 8) => Ok(self),
            WeightBits::Full => Ok(self),
            WeightBits::Bits(b) => Err(CalError::InvalidParameter(format!(
                "unsupported weight precision {b} bits"
            ))),
        }
    }
}

/// Quantizes a permanence to a weight: `b` bits give `round(p*(2^b - 1)) /
/// (2^b - 1)`; full precision passes the permanence through.
pub fn quantize(p: f64, bits: WeightBits) -> f64 {
    match bits {
        WeightBits::Full => p,
        WeightBits::Bits(b) => {
            let levels = ((1u32 << b) - 1) as f64;
            (p * levels).round() / levels
        }
    }
}

/// Protection multiplier applied to anti-Hebbian decrements: the most
/// permanent synapses (`p -> 1`) become immune to weakening.
pub fn metaplastic_factor(p: f64) -> f64 {
    1.0 - p
}

/// Learning-rule coefficients for one synapse array.
#[derive(Debug, Clone, PartialEq)]
pub struct PlasticityParams {
    /// Hebbian increment, the per-region "learning rate".
    pub delta_aa: f64,
    /// Anti-Hebbian decrement for active-axon/inactive-dendrite pairs.
    /// Ignored while `balance` is on; defaults to `delta_aa` when unset.
    pub delta_ai: Option<f64>,
    /// Anti-Hebbian decrement for inactive-axon/active-dendrite pairs.
    pub delta_ia: Option<f64>,
    /// Scale decrements so each anti-Hebbian channel's total matches the
    /// Hebbian total of the same step.
    pub balance: bool,
    /// Reduce decrements on well-established synapses by `1 - p`.
    pub meta: bool,
    /// Seed for the stochastic choices of the owning region.
    pub rng_seed: u64,
}

impl Default for PlasticityParams {
    fn default() -> Self {
        Self {
            delta_aa: 0.1,
            delta_ai: None,
            delta_ia: None,
            balance: true,
            meta: true,
            rng_seed: 0,
        }
    }
}

/// Outcome of one update call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub strengthened: usize,
    pub weakened: usize,
    pub pruned: usize,
}

/// Which dendrites the active-axon anti-Hebbian term may touch.
enum AiScope<'a> {
    /// Every existing synapse of an active axon outside the Hebbian set.
    AllInactive,
    /// Only synapses onto these dendrites (sequence memory punishes just
    /// the segments that crossed selection and then failed).
    Only(&'a SparseBitVector),
}

/// Sparse permanence matrix with per-axon and per-dendrite adjacency.
#[derive(Debug, Clone)]
pub struct SynapseArray {
    m: usize,
    n: usize,
    weight_bits: WeightBits,
    max_fanin: Option<usize>,
    /// axon -> (dendrite -> permanence grid value)
    rows: Vec<BTreeMap<u32, u16>>,
    /// dendrite -> axons with a stored entry
    cols: Vec<BTreeSet<u32>>,
}

impl SynapseArray {
    pub fn new(m: usize, n: usize, weight_bits: WeightBits, max_fanin: Option<usize>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(CalError::InvalidParameter(
                "synapse array needs at least one axon and one dendrite".into(),
            ));
        }
        let weight_bits = weight_bits.validate()?;
        Ok(Self {
            m,
            n,
            weight_bits,
            max_fanin,
            rows: vec![BTreeMap::new(); m],
            cols: vec![BTreeSet::new(); n],
        })
    }

    pub fn axon_count(&self) -> usize {
        self.m
    }

    pub fn dendrite_count(&self) -> usize {
        self.n
    }

    pub fn weight_bits(&self) -> WeightBits {
        self.weight_bits
    }

    pub fn max_fanin(&self) -> Option<usize> {
        self.max_fanin
    }

    pub fn synapse_count(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Number of synapses whose quantized weight is nonzero.
    pub fn connected_count(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.values().filter(|&&p| self.weight_of(p) > 0.0).count())
            .sum()
    }

    pub fn potential_count(&self) -> usize {
        self.m * self.n
    }

    /// Stored synapses per dendrite (connected or not).
    pub fn fanin(&self, dendrite: usize) -> usize {
        self.cols[dendrite].len()
    }

    pub fn fanout(&self, axon: usize) -> usize {
        self.rows[axon].len()
    }

    /// Total permanence stored on a dendrite, on the 16-bit grid. A
    /// freshly bound dendrite scores low, a consolidated receptive field
    /// high — the measure behind recycling order.
    pub fn dendrite_commitment(&self, dendrite: usize) -> u64 {
        self.cols[dendrite]
            .iter()
            .map(|&i| self.rows[i as usize][&(dendrite as u32)] as u64)
            .sum()
    }

    /// Number of connected (nonzero weight) synapses on a dendrite.
    pub fn connected_fanin(&self, dendrite: usize) -> usize {
        self.cols[dendrite]
            .iter()
            .filter(|&&i| self.weight(i as usize, dendrite) > 0.0)
            .count()
    }

    pub fn permanence(&self, axon: usize, dendrite: usize) -> Option<f64> {
        self.rows[axon]
            .get(&(dendrite as u32))
            .map(|&p| p as f64 / PERMANENCE_SCALE)
    }

    pub fn weight(&self, axon: usize, dendrite: usize) -> f64 {
        self.rows[axon]
            .get(&(dendrite as u32))
            .map_or(0.0, |&p| self.weight_of(p))
    }

    fn weight_of(&self, p16: u16) -> f64 {
        quantize(p16 as f64 / PERMANENCE_SCALE, self.weight_bits)
    }

    /// Sets a permanence directly (snapshot restore, hand-built wiring).
    /// A value that lands on 0 removes the synapse.
    pub fn set_permanence(&mut self, axon: usize, dendrite: usize, p: f64) -> Result<()> {
        if axon >= self.m {
            return Err(CalError::IndexOutOfBounds {
                index: axon,
                length: self.m,
            });
        }
        if dendrite >= self.n {
            return Err(CalError::IndexOutOfBounds {
                index: dendrite,
                length: self.n,
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(CalError::InvalidParameter(format!(
                "permanence {p} outside [0, 1]"
            )));
        }
        let p16 = (p * PERMANENCE_SCALE).round() as u16;
        if p16 == 0 {
            self.remove(axon, dendrite);
        } else {
            self.insert(axon, dendrite, p16);
        }
        Ok(())
    }

    fn insert(&mut self, axon: usize, dendrite: usize, p16: u16) {
        self.rows[axon].insert(dendrite as u32, p16);
        self.cols[dendrite].insert(axon as u32);
    }

    fn remove(&mut self, axon: usize, dendrite: usize) {
        self.rows[axon].remove(&(dendrite as u32));
        self.cols[dendrite].remove(&(axon as u32));
    }

    /// Axons connected (nonzero weight) to a dendrite, ascending.
    pub fn connected_axons_of(&self, dendrite: usize) -> Vec<usize> {
        self.cols[dendrite]
            .iter()
            .filter(|&&i| self.weight(i as usize, dendrite) > 0.0)
            .map(|&i| i as usize)
            .collect()
    }

    /// Deterministic iteration over stored synapses as
    /// `(axon, dendrite, permanence grid value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, u16)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |(&j, &p)| (i, j as usize, p)))
    }

    /// Smallest permanence that still quantizes to a nonzero weight: a
    /// freshly grown synapse is connected but maximally fragile.
    pub fn min_connectable_permanence(&self) -> f64 {
        match self.weight_bits {
            WeightBits::Full => 1.0 / PERMANENCE_SCALE,
            WeightBits::Bits(b) => {
                let levels = ((1u32 << b) - 1) as f64;
                let p16 = (PERMANENCE_SCALE / (2.0 * levels)).ceil();
                p16 / PERMANENCE_SCALE
            }
        }
    }

    /// Excitation of every dendrite from the active axons, optionally
    /// modulated by a per-axon gain: `e = (x ⊙ g)ᵀ W`.
    pub fn excite(&self, x: &SparseBitVector, gain: Option<&DenseExcitation>) -> Result<Vec<f64>> {
        Ok(self.excite_with_matches(x, gain)?.0)
    }

    /// As [`excite`](Self::excite), also counting per dendrite how many
    /// of the active axons are connected to it — the match count behind
    /// coverage-based winner qualification.
    pub fn excite_with_matches(
        &self,
        x: &SparseBitVector,
        gain: Option<&DenseExcitation>,
    ) -> Result<(Vec<f64>, Vec<u32>)> {
        if x.len() != self.m {
            return Err(CalError::LengthMismatch {
                context: "excite input",
                expected: self.m,
                got: x.len(),
            });
        }
        if let Some(g) = gain {
            if g.len() != self.m {
                return Err(CalError::LengthMismatch {
                    context: "excite gain",
                    expected: self.m,
                    got: g.len(),
                });
            }
        }
        let mut e = vec![0.0; self.n];
        let mut matches = vec![0u32; self.n];
        for &i in x.active() {
            let gi = gain.map_or(1.0, |g| g.get(i));
            for (&j, &p) in &self.rows[i] {
                let w = self.weight_of(p);
                if w > 0.0 {
                    matches[j as usize] += 1;
                    if gi != 0.0 {
                        e[j as usize] += gi * w;
                    }
                }
            }
        }
        Ok((e, matches))
    }

    /// Excitation of every axon from a set of active dendrites:
    /// `W ŷ` (the reconstruction direction).
    pub fn reconstruct_excitation(&self, y_hat: &SparseBitVector) -> Result<Vec<f64>> {
        if y_hat.len() != self.n {
            return Err(CalError::LengthMismatch {
                context: "reconstruct input",
                expected: self.n,
                got: y_hat.len(),
            });
        }
        let mut e = vec![0.0; self.m];
        for &j in y_hat.active() {
            for &i in &self.cols[j] {
                let w = self.weight(i as usize, j);
                if w > 0.0 {
                    e[i as usize] += w;
                }
            }
        }
        Ok(e)
    }

    /// Multiply, accumulate and threshold with k-winners-take-all
    /// inhibition. Only dendrites with positive excitation can win; ties
    /// at the threshold break toward the lowest index, so the output
    /// cardinality never exceeds `k`.
    pub fn kwta_activate(&self, x: &SparseBitVector, k: usize) -> Result<SparseBitVector> {
        if k < 1 || k > self.n {
            return Err(CalError::InvalidParameter(format!(
                "k = {k} outside 1..={}",
                self.n
            )));
        }
        let e = self.excite(x, None)?;
        Ok(select_top_k(&e, k))
    }

    /// Applies the Hebbian/anti-Hebbian permanence update to existing
    /// synapses. Categories are exclusive per synapse: active axon with
    /// active dendrite strengthens, active axon with inactive dendrite and
    /// inactive axon with active dendrite weaken, both inactive is
    /// untouched. Results clip to `[0, 1]`; a permanence reaching 0 prunes
    /// the synapse.
    pub fn update(
        &mut self,
        x: &SparseBitVector,
        y: &SparseBitVector,
        params: &PlasticityParams,
    ) -> Result<UpdateStats> {
        self.apply_update(x, y, AiScope::AllInactive, false, params)
    }

    /// As [`update`](Self::update) but the Hebbian term covers *potential*
    /// synapses: a co-active pair with no stored entry is created at
    /// `delta_aa`. This is how the correlator wires itself to input
    /// correlations — dendrites accumulate synapses from every axon that
    /// fires with them. Anti-Hebbian terms still touch existing synapses
    /// only, otherwise the matrix densifies.
    pub fn update_potential(
        &mut self,
        x: &SparseBitVector,
        y: &SparseBitVector,
        params: &PlasticityParams,
    ) -> Result<UpdateStats> {
        self.apply_update(x, y, AiScope::AllInactive, true, params)
    }

    /// As [`update`](Self::update) but the active-axon decrement touches
    /// only the `punished` dendrites instead of every inactive one.
    pub fn update_scoped(
        &mut self,
        x: &SparseBitVector,
        y: &SparseBitVector,
        punished: &SparseBitVector,
        params: &PlasticityParams,
    ) -> Result<UpdateStats> {
        if punished.len() != self.n {
            return Err(CalError::LengthMismatch {
                context: "update punished set",
                expected: self.n,
                got: punished.len(),
            });
        }
        self.apply_update(x, y, AiScope::Only(punished), false, params)
    }

    fn apply_update(
        &mut self,
        x: &SparseBitVector,
        y: &SparseBitVector,
        ai_scope: AiScope,
        hebbian_on_potential: bool,
        params: &PlasticityParams,
    ) -> Result<UpdateStats> {
        if x.len() != self.m {
            return Err(CalError::LengthMismatch {
                context: "update input",
                expected: self.m,
                got: x.len(),
            });
        }
        if y.len() != self.n {
            return Err(CalError::LengthMismatch {
                context: "update output",
                expected: self.n,
                got: y.len(),
            });
        }

        let mut x_mask = vec![false; self.m];
        for &i in x.active() {
            x_mask[i] = true;
        }
        let mut y_mask = vec![false; self.n];
        for &j in y.active() {
            y_mask[j] = true;
        }
        let punish_mask = match ai_scope {
            AiScope::AllInactive => None,
            AiScope::Only(p) => {
                let mut mask = vec![false; self.n];
                for &j in p.active() {
                    mask[j] = true;
                }
                Some(mask)
            }
        };

        // classification pass: Hebbian pairs either over existing
        // synapses only, or over every co-active potential pair
        let mut aa = Vec::new();
        let mut ai = Vec::new();
        for &i in x.active() {
            if hebbian_on_potential {
                for &j in y.active() {
                    aa.push((i, j));
                }
                for &j in self.rows[i].keys() {
                    let j = j as usize;
                    if !y_mask[j] {
                        let in_scope = punish_mask.as_ref().map_or(true, |m| m[j]);
                        if in_scope {
                            ai.push((i, j));
                        }
                    }
                }
            } else {
                for &j in self.rows[i].keys() {
                    let j = j as usize;
                    if y_mask[j] {
                        aa.push((i, j));
                    } else {
                        let in_scope = punish_mask.as_ref().map_or(true, |m| m[j]);
                        if in_scope {
                            ai.push((i, j));
                        }
                    }
                }
            }
        }
        let mut ia = Vec::new();
        for &j in y.active() {
            for &i in &self.cols[j] {
                if !x_mask[i as usize] {
                    ia.push((i as usize, j));
                }
            }
        }

        let delta_aa = params.delta_aa;
        let (delta_ai, delta_ia) = if params.balance {
            let hebb = delta_aa * aa.len() as f64;
            (
                hebb / (ai.len().max(1) as f64),
                hebb / (ia.len().max(1) as f64),
            )
        } else {
            (
                params.delta_ai.unwrap_or(delta_aa),
                params.delta_ia.unwrap_or(delta_aa),
            )
        };

        let mut stats = UpdateStats::default();
        for (i, j) in aa {
            if hebbian_on_potential && !self.rows[i].contains_key(&(j as u32)) {
                // creation respects the dendrite's capacity; a full
                // dendrite must first shed stale synapses
                if self.max_fanin.is_some_and(|cap| self.cols[j].len() >= cap) {
                    continue;
                }
                let p16 = ((delta_aa.clamp(0.0, 1.0)) * PERMANENCE_SCALE).round() as u16;
                if p16 > 0 {
                    self.insert(i, j, p16);
                    stats.strengthened += 1;
                }
                continue;
            }
            self.nudge(i, j, delta_aa, false, &mut stats);
        }
        for (i, j) in ai {
            self.nudge(i, j, -delta_ai, params.meta, &mut stats);
        }
        for (i, j) in ia {
            self.nudge(i, j, -delta_ia, params.meta, &mut stats);
        }
        Ok(stats)
    }

    fn nudge(&mut self, axon: usize, dendrite: usize, delta: f64, meta: bool, stats: &mut UpdateStats) {
        let Some(&p16) = self.rows[axon].get(&(dendrite as u32)) else {
            return;
        };
        let p = p16 as f64 / PERMANENCE_SCALE;
        let applied = if meta && delta < 0.0 {
            delta * metaplastic_factor(p)
        } else {
            delta
        };
        let new16 = ((p + applied).clamp(0.0, 1.0) * PERMANENCE_SCALE).round() as u16;
        if new16 == p16 {
            return;
        }
        if new16 == 0 {
            self.remove(axon, dendrite);
            stats.pruned += 1;
        } else {
            self.rows[axon].insert(dendrite as u32, new16);
            if new16 > p16 {
                stats.strengthened += 1;
            } else {
                stats.weakened += 1;
            }
        }
    }

    /// Creates synapses for active axons that have no connected synapse
    /// onto any active dendrite. Each such axon connects, at `init_p`, to
    /// the active dendrite with the fewest existing synapses (ties to the
    /// lowest index), respecting `max_fanin` and the creation budget.
    pub fn grow_synapses(
        &mut self,
        x: &SparseBitVector,
        y: &SparseBitVector,
        init_p: f64,
        budget: usize,
    ) -> usize {
        if y.is_empty() || budget == 0 || x.len() != self.m || y.len() != self.n {
            return 0;
        }
        let init16 = ((init_p.clamp(0.0, 1.0) * PERMANENCE_SCALE).round() as u16).max(1);
        let mut created = 0;
        for &i in x.active() {
            if created == budget {
                break;
            }
            let connected = y
                .active()
                .iter()
                .any(|&j| self.weight(i, j) > 0.0);
            if connected {
                continue;
            }
            let mut best: Option<(usize, usize)> = None;
            for &j in y.active() {
                if self.rows[i].contains_key(&(j as u32)) {
                    continue;
                }
                if let Some(cap) = self.max_fanin {
                    if self.cols[j].len() >= cap {
                        continue;
                    }
                }
                let f = self.cols[j].len();
                if best.map_or(true, |(bf, bj)| f < bf || (f == bf && j < bj)) {
                    best = Some((f, j));
                }
            }
            if let Some((_, j)) = best {
                self.insert(i, j, init16);
                created += 1;
            }
        }
        created
    }
}

/// Indices of the `k` highest positive entries, ties at the threshold
/// broken toward the lowest index. Fewer than `k` positive entries yield
/// a shorter output — zero-excitation slots never win.
pub fn select_top_k(excitation: &[f64], k: usize) -> SparseBitVector {
    let mut candidates: Vec<(usize, f64)> = excitation
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0)
        .map(|(j, &e)| (j, e))
        .collect();
    candidates.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("excitation values are finite")
            .then(a.0.cmp(&b.0))
    });
    candidates.truncate(k);
    let mut winners: Vec<usize> = candidates.into_iter().map(|(j, _)| j).collect();
    winners.sort_unstable();
    SparseBitVector::from_active(excitation.len(), winners)
        .expect("winner indices are unique and in range")
}
