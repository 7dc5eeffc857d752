//! The binary correlator: feed-forward activation of mini-columns,
//! reverse reconstruction, hard-wired mode and the covariance diagnostic.
//!
//! Axons carry (possibly concatenated) input bits; each dendrite belongs
//! to one mini-column. Activation is k-winners-take-all over the weighted
//! input, optionally modulated by a per-axon gain from apical feedback.
//! In learning mode the array updates after every activation and grows
//! synapses toward the winners, so the wiring comes to reflect the
//! correlations in the input.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bitvec::{DenseExcitation, SparseBitVector};
use crate::error::{CalError, Result};
use crate::synapses::{select_top_k, PlasticityParams, SynapseArray, UpdateStats, WeightBits};

/// Whether the array is frozen at unit weights or learning online.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelatorMode {
    Hardwired,
    Learning,
}

/// Default number of active mini-columns: `k = round(sqrt(N_col))`,
/// the capacity/accidental-match compromise.
pub fn default_k_out(n_col: usize) -> usize {
    ((n_col as f64).sqrt().round() as usize).max(1)
}

/// One region's L-IV synapse array plus its activation parameters.
#[derive(Debug, Clone)]
pub struct Correlator {
    array: SynapseArray,
    k_out: usize,
    mode: CorrelatorMode,
    params: PlasticityParams,
}

impl Correlator {
    /// A learning correlator that starts without any connections.
    /// `max_fanin` caps each dendrite's receptive field; without a cap a
    /// dendrite whose wins track a slowly drifting input can accumulate
    /// the whole input space and crowd out all competition.
    pub fn new_learning(
        m: usize,
        n: usize,
        k_out: Option<usize>,
        weight_bits: WeightBits,
        params: PlasticityParams,
        max_fanin: Option<usize>,
    ) -> Result<Self> {
        let k_out = k_out.unwrap_or_else(|| default_k_out(n));
        Self::check_k(k_out, n)?;
        Ok(Self {
            array: SynapseArray::new(m, n, weight_bits, max_fanin)?,
            k_out,
            mode: CorrelatorMode::Learning,
            params,
        })
    }

    /// A frozen correlator with unit-weight synapses distributed by a
    /// seeded permutation: per-dendrite fan-in is exactly `fanin` and
    /// per-axon fan-out counts differ by at most one.
    pub fn hardwire(m: usize, n: usize, fanin: usize, seed: u64) -> Result<Self> {
        if fanin == 0 {
            return Err(CalError::InvalidParameter("fan-in must be positive".into()));
        }
        let slots = fanin
            .checked_mul(n)
            .ok_or_else(|| CalError::InvalidParameter("fan-in overflow".into()))?;
        if slots < m {
            return Err(CalError::InvalidParameter(format!(
                "{slots} synapse slots cannot cover {m} axons"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut slot_axons: Vec<u32> = Vec::with_capacity(slots + m);
        while slot_axons.len() < slots {
            let mut perm: Vec<u32> = (0..m as u32).collect();
            perm.shuffle(&mut rng);
            slot_axons.extend(perm);
        }
        slot_axons.truncate(slots);

        // a dendrite may not hold the same axon twice; repair duplicates
        // at permutation boundaries by swapping with a later slot
        for j in 0..n {
            let base = j * fanin;
            'repair: loop {
                let chunk = &slot_axons[base..base + fanin];
                let mut dup_pos = None;
                for a in 0..fanin {
                    if chunk[..a].contains(&chunk[a]) {
                        dup_pos = Some(base + a);
                        break;
                    }
                }
                let Some(dup_pos) = dup_pos else { break };
                let dup_axon = slot_axons[dup_pos];
                for s in base + fanin..slots {
                    let candidate = slot_axons[s];
                    if slot_axons[base..base + fanin].contains(&candidate) {
                        continue;
                    }
                    let their_base = (s / fanin) * fanin;
                    if slot_axons[their_base..their_base + fanin]
                        .iter()
                        .any(|&a| a == dup_axon)
                    {
                        continue;
                    }
                    slot_axons.swap(dup_pos, s);
                    continue 'repair;
                }
                return Err(CalError::InvalidParameter(format!(
                    "cannot wire fan-in {fanin} over {m} axons and {n} dendrites"
                )));
            }
        }

        let mut array = SynapseArray::new(m, n, WeightBits::Full, None)?;
        for j in 0..n {
            for s in 0..fanin {
                array.set_permanence(slot_axons[j * fanin + s] as usize, j, 1.0)?;
            }
        }
        let k_out = default_k_out(n);
        Ok(Self {
            array,
            k_out,
            mode: CorrelatorMode::Hardwired,
            params: PlasticityParams::default(),
        })
    }

    fn check_k(k_out: usize, n: usize) -> Result<()> {
        let bound = 2.0 * (n as f64).sqrt();
        if k_out == 0 || k_out > n || (k_out as f64) > bound {
            return Err(CalError::InvalidParameter(format!(
                "k_out = {k_out} outside sanity bound 1..=2*sqrt({n})"
            )));
        }
        Ok(())
    }

    /// Overrides the number of winning columns.
    pub fn with_k_out(mut self, k_out: usize) -> Result<Self> {
        Self::check_k(k_out, self.array.dendrite_count())?;
        self.k_out = k_out;
        Ok(self)
    }

    pub fn k_out(&self) -> usize {
        self.k_out
    }

    pub fn mode(&self) -> CorrelatorMode {
        self.mode
    }

    pub fn input_width(&self) -> usize {
        self.array.axon_count()
    }

    pub fn column_count(&self) -> usize {
        self.array.dendrite_count()
    }

    pub fn array(&self) -> &SynapseArray {
        &self.array
    }

    /// Mutable access for hand-built wiring and probes.
    pub fn array_mut(&mut self) -> &mut SynapseArray {
        &mut self.array
    }

    /// Replaces the whole array (snapshot restore); dimensions must match.
    pub(crate) fn set_array(&mut self, array: SynapseArray) -> Result<()> {
        if array.axon_count() != self.array.axon_count()
            || array.dendrite_count() != self.array.dendrite_count()
        {
            return Err(CalError::LengthMismatch {
                context: "correlator array restore",
                expected: self.array.axon_count() * self.array.dendrite_count(),
                got: array.axon_count() * array.dendrite_count(),
            });
        }
        self.array = array;
        Ok(())
    }

    /// Activates the winning columns and, in learning mode, updates and
    /// grows the array. The gain modulates winner selection only; the
    /// plasticity update sees the raw binary input.
    pub fn forward(
        &mut self,
        x: &SparseBitVector,
        gain: Option<&DenseExcitation>,
    ) -> Result<SparseBitVector> {
        let y = self.activate(x, gain)?;
        if self.mode == CorrelatorMode::Learning {
            // Hebbian over potential pairs: winners accumulate synapses
            // from every co-active axon, which is what makes the wiring
            // reflect input correlations
            self.array.update_potential(x, &y, &self.params.clone())?;
            let init = self.array.min_connectable_permanence();
            self.array.grow_synapses(x, &y, init, usize::MAX);
        }
        Ok(y)
    }

    /// Activation without any plasticity, for probing a trained array.
    pub fn forward_frozen(
        &self,
        x: &SparseBitVector,
        gain: Option<&DenseExcitation>,
    ) -> Result<SparseBitVector> {
        let e = self.array.excite(x, gain)?;
        Ok(select_top_k(&e, self.k_out))
    }

    /// Learning-mode winners must be connected to strictly more than this
    /// fraction of the active input bits. An accidental overlap with a
    /// mature receptive field must not beat an unclaimed dendrite, or new
    /// patterns take over foreign dendrites instead of recruiting their
    /// own; and with concatenated channels, matching one whole channel of
    /// two (exactly half) must not qualify either, or same-channel
    /// look-alikes hijack the winner set and corrupt the other channel's
    /// reconstruction.
    const MATCH_FRACTION: f64 = 0.5;

    fn activate(
        &self,
        x: &SparseBitVector,
        gain: Option<&DenseExcitation>,
    ) -> Result<SparseBitVector> {
        match self.mode {
            CorrelatorMode::Hardwired => {
                let e = self.array.excite(x, gain)?;
                Ok(select_top_k(&e, self.k_out))
            }
            CorrelatorMode::Learning => {
                if x.is_empty() {
                    return Ok(SparseBitVector::empty(self.array.dendrite_count()));
                }
                let (e, matches) = self.array.excite_with_matches(x, gain)?;
                let min_matches =
                    (x.cardinality() as f64 * Self::MATCH_FRACTION).floor() as u32 + 1;
                let mut masked = e.clone();
                for (j, &m) in matches.iter().enumerate() {
                    if m < min_matches {
                        masked[j] = 0.0;
                    }
                }
                let qualified = select_top_k(&masked, self.k_out);
                if qualified.cardinality() == self.k_out {
                    return Ok(qualified);
                }
                Ok(self.recruit(qualified))
            }
        }
    }

    /// Fills the remaining winner slots with the least-committed
    /// non-winning dendrites (total permanence, then lowest index).
    /// Growth then wires the active axons onto them, so an unconnected
    /// array organizes itself from the first input and a novel pattern
    /// claims fresh dendrites. Ranking by commitment rather than raw
    /// fan-in protects consolidated receptive fields from being recycled
    /// while uncommitted recruits churn.
    fn recruit(&self, winners: SparseBitVector) -> SparseBitVector {
        let need = self.k_out - winners.cardinality();
        let mut pool: Vec<(u64, usize)> = (0..self.array.dendrite_count())
            .filter(|&j| !winners.contains(j))
            .map(|j| (self.array.dendrite_commitment(j), j))
            .collect();
        pool.sort_unstable();
        let mut active: Vec<usize> = winners.active().to_vec();
        active.extend(pool.into_iter().take(need).map(|(_, j)| j));
        active.sort_unstable();
        SparseBitVector::from_active(self.array.dendrite_count(), active)
            .expect("recruited indices are unique and in range")
    }

    /// Applies the plasticity update directly (used by callers that pick
    /// their own winner set).
    pub fn learn(&mut self, x: &SparseBitVector, y: &SparseBitVector) -> Result<UpdateStats> {
        self.array.update(x, y, &self.params.clone())
    }

    /// Runs the correlation in reverse: the predicted input is the
    /// `k_in` rows most excited by the predicted columns. Rows with zero
    /// excitation are never selected.
    pub fn reconstruct(&self, y_hat: &SparseBitVector, k_in: usize) -> Result<SparseBitVector> {
        let e = self.array.reconstruct_excitation(y_hat)?;
        Ok(select_top_k(&e, k_in))
    }

    /// Per-channel reconstruction: the input is treated as concatenated
    /// segments of the given widths and the top `k` rows are selected
    /// within each segment independently, so one strongly driven channel
    /// cannot starve another.
    pub fn reconstruct_channels(
        &self,
        y_hat: &SparseBitVector,
        channels: &[(usize, usize)],
    ) -> Result<SparseBitVector> {
        let total: usize = channels.iter().map(|(w, _)| w).sum();
        if total != self.array.axon_count() {
            return Err(CalError::LengthMismatch {
                context: "reconstruct channels",
                expected: self.array.axon_count(),
                got: total,
            });
        }
        let e = self.array.reconstruct_excitation(y_hat)?;
        let mut active = Vec::new();
        let mut offset = 0;
        for &(width, k) in channels {
            let segment = select_top_k(&e[offset..offset + width], k);
            active.extend(segment.active().iter().map(|&i| i + offset));
            offset += width;
        }
        Ok(SparseBitVector::from_active(self.array.axon_count(), active)
            .expect("per-segment winners are disjoint and sorted"))
    }

    /// Axon weight covariance `WᵀW`: entry `(i, j)` counts the dendrites
    /// connected (nonzero weight) to both axons `i` and `j`.
    pub fn covariance(&self) -> CountMatrix {
        let m = self.array.axon_count();
        let mut data = vec![0u32; m * m];
        for j in 0..self.array.dendrite_count() {
            let connected = self.array.connected_axons_of(j);
            for &a in &connected {
                for &b in &connected {
                    data[a * m + b] += 1;
                }
            }
        }
        CountMatrix { rows: m, cols: m, data }
    }
}

/// Dense non-negative integer matrix with CSV and portable-graymap
/// export, used for covariance and similarity diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl CountMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u32) {
        self.data[row * self.cols + col] = value;
    }

    pub fn max_value(&self) -> u32 {
        self.data.iter().copied().max().unwrap_or(0)
    }

    /// Cuts out `[row0, row1) x [col0, col1)`.
    pub fn submatrix(&self, row0: usize, row1: usize, col0: usize, col1: usize) -> Self {
        let mut out = Self::zeros(row1 - row0, col1 - col0);
        for r in row0..row1 {
            for c in col0..col1 {
                out.set(r - row0, c - col0, self.at(r, c));
            }
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    write!(w, ",")?;
                }
                write!(w, "{}", self.at(r, c))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Plain (P2) portable-graymap, values scaled so the maximum maps to
    /// white.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "P2")?;
        writeln!(w, "{} {}", self.cols, self.rows)?;
        writeln!(w, "255")?;
        let max = self.max_value().max(1);
        for r in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|c| ((self.at(r, c) as u64 * 255) / max as u64).to_string())
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::codec::{EncoderSpec, ScalarKind};
    use crate::synapses::PERMANENCE_SCALE;

    fn sbv(len: usize, idx: &[usize]) -> SparseBitVector {
        SparseBitVector::from_active(len, idx.to_vec()).unwrap()
    }

    #[test]
    fn forward_without_gain_equals_plain_kwta() {
        let c = Correlator::hardwire(12, 16, 2, 99).unwrap();
        let x = sbv(12, &[0, 3, 7]);
        let via_forward = c.forward_frozen(&x, None).unwrap();
        let via_kwta = c.array().kwta_activate(&x, c.k_out()).unwrap();
        assert_eq!(via_forward, via_kwta);
    }

    #[test]
    fn disjoint_receptive_fields_route_to_their_column() {
        // three columns with hand-built disjoint two-bit fields
        let mut c = Correlator::new_learning(6, 3, Some(1), WeightBits::Full, PlasticityParams::default(), None).unwrap();
        for (j, field) in [[0, 1], [2, 3], [4, 5]].iter().enumerate() {
            for &i in field {
                c.array_mut().set_permanence(i, j, 1.0).unwrap();
            }
        }
        for (j, field) in [[0, 1], [2, 3], [4, 5]].iter().enumerate() {
            let y = c.forward_frozen(&sbv(6, field), None).unwrap();
            assert_eq!(y.active(), &[j]);
        }
    }

    #[test]
    fn gain_biases_winner_selection() {
        // two dendrites tied at one unit synapse each; gain breaks the tie
        let mut c = Correlator::new_learning(2, 2, Some(1), WeightBits::Full, PlasticityParams::default(), None).unwrap();
        c.array_mut().set_permanence(0, 0, 1.0).unwrap();
        c.array_mut().set_permanence(1, 1, 1.0).unwrap();
        let x = sbv(2, &[0, 1]);
        let no_gain = c.forward_frozen(&x, None).unwrap();
        assert_eq!(no_gain.active(), &[0], "lowest index wins the tie");
        let gain = DenseExcitation::new(vec![1.0, 2.0]).unwrap();
        let with_gain = c.forward_frozen(&x, Some(&gain)).unwrap();
        assert_eq!(with_gain.active(), &[1]);
    }

    #[test]
    fn hardwired_integer_round_trip_is_exact() {
        let enc = EncoderSpec::new(0.0, 31.0, 1.0, 5, ScalarKind::Integer).unwrap();
        let mut c = Correlator::hardwire(enc.n_bits(), 256, 1, 5).unwrap();
        c = c.with_k_out(16).unwrap();
        for v in 0..=31 {
            let x = enc.encode(v as f64).unwrap();
            let y = c.forward_frozen(&x, None).unwrap();
            let x_hat = c.reconstruct(&y, enc.active_bits()).unwrap();
            assert_eq!(enc.decode(&x_hat).unwrap(), v as f64);
            // with k_in = |x| the reconstruction is the input itself
            assert_eq!(x.jaccard(&x_hat).unwrap(), 1.0);
        }
    }

    #[test]
    fn reconstruct_of_empty_prediction_is_empty() {
        let c = Correlator::hardwire(12, 16, 1, 3).unwrap();
        let x_hat = c.reconstruct(&SparseBitVector::empty(16), 5).unwrap();
        assert!(x_hat.is_empty());
    }

    #[test]
    fn reconstruct_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let (m, n) = (12, 8);
            let mut c = Correlator::new_learning(m, n, Some(4), WeightBits::Full, PlasticityParams::default(), None).unwrap();
            let mut w = vec![vec![0.0; n]; m];
            for i in 0..m {
                for j in 0..n {
                    if rng.gen_bool(0.3) {
                        let p = (rng.gen_range(0.1..1.0) * PERMANENCE_SCALE).round() / PERMANENCE_SCALE;
                        c.array_mut().set_permanence(i, j, p).unwrap();
                        w[i][j] = p;
                    }
                }
            }
            let y_hat = SparseBitVector::from_unsorted(n, (0..n).filter(|_| rng.gen_bool(0.4)).collect()).unwrap();
            let k_in = rng.gen_range(1..=6);
            let got = c.reconstruct(&y_hat, k_in).unwrap();

            let mut e = vec![0.0; m];
            for i in 0..m {
                for &j in y_hat.active() {
                    e[i] += w[i][j];
                }
            }
            let mut idx: Vec<usize> = (0..m).filter(|&i| e[i] > 0.0).collect();
            idx.sort_by(|&a, &b| e[b].partial_cmp(&e[a]).unwrap().then(a.cmp(&b)));
            idx.truncate(k_in);
            idx.sort_unstable();
            assert_eq!(got.active(), idx.as_slice());
        }
    }

    #[test]
    fn hardwire_balances_fanout_and_is_deterministic() {
        let c = Correlator::hardwire(205, 1024, 2, 77).unwrap();
        let arr = c.array();
        let fanouts: Vec<usize> = (0..205).map(|i| arr.fanout(i)).collect();
        let min = fanouts.iter().min().unwrap();
        let max = fanouts.iter().max().unwrap();
        assert!(max - min <= 1, "fan-outs {min}..{max} differ by more than 1");
        assert_eq!(fanouts.iter().sum::<usize>(), 2 * 1024);
        for j in 0..1024 {
            assert_eq!(arr.fanin(j), 2);
        }

        let again = Correlator::hardwire(205, 1024, 2, 77).unwrap();
        assert!(c.array().triplets().eq(again.array().triplets()));
        let other = Correlator::hardwire(205, 1024, 2, 78).unwrap();
        assert!(!c.array().triplets().eq(other.array().triplets()));
    }

    #[test]
    fn hardwire_small_exact_cover() {
        let c = Correlator::hardwire(4, 2, 2, 1).unwrap();
        for i in 0..4 {
            assert_eq!(c.array().fanout(i), 1, "every axon exactly once");
        }
        assert!(Correlator::hardwire(8, 2, 2, 1).is_err(), "4 slots cannot cover 8 axons");
    }

    #[test]
    fn covariance_counts_shared_dendrites() {
        let mut c = Correlator::new_learning(6, 4, Some(2), WeightBits::Full, PlasticityParams::default(), None).unwrap();
        assert_eq!(c.covariance().max_value(), 0);

        c.array_mut().set_permanence(2, 1, 1.0).unwrap();
        c.array_mut().set_permanence(5, 1, 1.0).unwrap();
        let cov = c.covariance();
        for (i, j, expect) in [(2, 5, 1), (5, 2, 1), (2, 2, 1), (5, 5, 1), (0, 0, 0), (2, 4, 0)] {
            assert_eq!(cov.at(i, j), expect);
        }
    }

    #[test]
    fn covariance_is_symmetric_with_fanout_diagonal() {
        let c = Correlator::hardwire(16, 12, 3, 9).unwrap();
        let cov = c.covariance();
        for i in 0..16 {
            assert_eq!(cov.at(i, i) as usize, c.array().fanout(i));
            for j in 0..16 {
                assert_eq!(cov.at(i, j), cov.at(j, i));
            }
        }
    }

    #[test]
    fn learning_forward_matches_scripted_oracle() {
        // dense end-to-end script of one learning step: modulated
        // multiply, sort, recruitment, categorical update, least-fan-in
        // growth
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for case in 0..100 {
            let m = rng.gen_range(4..=16);
            let n = rng.gen_range(4..=16);
            let k = rng.gen_range(1..=(2.0 * (n as f64).sqrt()) as usize);
            let params = PlasticityParams {
                delta_aa: 0.1,
                balance: case % 2 == 0,
                meta: false,
                ..Default::default()
            };
            let mut c = Correlator::new_learning(m, n, Some(k), WeightBits::Full, params.clone(), None).unwrap();
            let mut dense: Vec<Vec<Option<f64>>> = vec![vec![None; n]; m];
            for i in 0..m {
                for j in 0..n {
                    if rng.gen_bool(0.25) {
                        let p = (rng.gen_range(0.2..1.0) * PERMANENCE_SCALE).round() / PERMANENCE_SCALE;
                        c.array_mut().set_permanence(i, j, p).unwrap();
                        dense[i][j] = Some(p);
                    }
                }
            }
            let x_bits: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.4)).collect();
            let x = SparseBitVector::from_active(
                m,
                x_bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect(),
            )
            .unwrap();
            let gain_vals: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
            let gain = DenseExcitation::new(gain_vals.clone()).unwrap();

            let y = c.forward(&x, Some(&gain)).unwrap();

            // oracle: winners — coverage-qualified top-k, then
            // least-connected recruitment
            let mut e = vec![0.0; n];
            let mut matches = vec![0usize; n];
            for i in 0..m {
                if x_bits[i] {
                    for j in 0..n {
                        if dense[i][j].unwrap_or(0.0) > 0.0 {
                            matches[j] += 1;
                            e[j] += gain_vals[i] * dense[i][j].unwrap();
                        }
                    }
                }
            }
            let x_count = x_bits.iter().filter(|&&b| b).count();
            let min_matches = (x_count as f64 * 0.5).floor() as usize + 1;
            let mut winners: Vec<usize> = (0..n)
                .filter(|&j| e[j] > 0.0 && matches[j] >= min_matches)
                .collect();
            winners.sort_by(|&a, &b| e[b].partial_cmp(&e[a]).unwrap().then(a.cmp(&b)));
            winners.truncate(k);
            if !x.is_empty() && winners.len() < k {
                let mut pool: Vec<(u64, usize)> = (0..n)
                    .filter(|j| !winners.contains(j))
                    .map(|j| {
                        let commitment: u64 = (0..m)
                            .filter_map(|i| dense[i][j])
                            .map(|p| (p * PERMANENCE_SCALE).round() as u64)
                            .sum();
                        (commitment, j)
                    })
                    .collect();
                pool.sort_unstable();
                let need = k - winners.len();
                winners.extend(pool.into_iter().take(need).map(|(_, j)| j));
            }
            winners.sort_unstable();
            assert_eq!(y.active(), winners.as_slice(), "case {case}: winner sets differ");

            // oracle: update + growth; the Hebbian term covers potential
            // pairs (co-activity creates synapses), anti-Hebbian terms
            // touch existing entries only
            let y_bits: Vec<bool> = (0..n).map(|j| winners.contains(&j)).collect();
            let x_count = x_bits.iter().filter(|&&b| b).count();
            let aa_pairs = x_count * winners.len();
            let mut counts = (aa_pairs, 0usize, 0usize);
            for i in 0..m {
                for j in 0..n {
                    if dense[i][j].is_none() {
                        continue;
                    }
                    match (x_bits[i], y_bits[j]) {
                        (true, false) => counts.1 += 1,
                        (false, true) => counts.2 += 1,
                        _ => {}
                    }
                }
            }
            let (d_ai, d_ia) = if params.balance {
                let hebb = params.delta_aa * counts.0 as f64;
                (hebb / counts.1.max(1) as f64, hebb / counts.2.max(1) as f64)
            } else {
                (params.delta_aa, params.delta_aa)
            };
            for i in 0..m {
                for j in 0..n {
                    let old = dense[i][j];
                    let delta = match (x_bits[i], y_bits[j]) {
                        (true, true) => params.delta_aa,
                        (true, false) if old.is_some() => -d_ai,
                        (false, true) if old.is_some() => -d_ia,
                        _ => 0.0,
                    };
                    if delta == 0.0 {
                        continue;
                    }
                    let new = (((old.unwrap_or(0.0) + delta).clamp(0.0, 1.0)) * PERMANENCE_SCALE)
                        .round()
                        / PERMANENCE_SCALE;
                    dense[i][j] = if new == 0.0 { None } else { Some(new) };
                }
            }

            for i in 0..m {
                for j in 0..n {
                    let got = c.array().permanence(i, j);
                    match (got, dense[i][j]) {
                        (None, None) => {}
                        (Some(a), Some(b)) => assert!(
                            (a - b).abs() < 1e-9,
                            "case {case}: ({i},{j}) {a} vs {b}"
                        ),
                        other => panic!("case {case}: ({i},{j}) disagreement {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn forward_cardinality_never_exceeds_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut c = Correlator::new_learning(40, 64, Some(8), WeightBits::Full, PlasticityParams::default(), None).unwrap();
        for _ in 0..50 {
            let x = SparseBitVector::from_unsorted(40, (0..40).filter(|_| rng.gen_bool(0.2)).collect()).unwrap();
            let y = c.forward(&x, None).unwrap();
            assert!(y.cardinality() <= 8);
            if !x.is_empty() {
                assert_eq!(y.cardinality(), 8, "learning mode recruits up to k");
            }
        }
    }

    #[test]
    fn distinct_bins_map_to_distinct_column_sets() {
        // the single-channel sequence-memory geometry: 205 in, 1024 columns
        let enc = EncoderSpec::new(0.0, 1.0, 0.005, 5, ScalarKind::Real).unwrap();
        let c = Correlator::hardwire(enc.n_bits(), 1024, 1, 11).unwrap().with_k_out(32).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for bin in 0..enc.bins() {
            let x = enc.encode(enc.value_of_bin(bin)).unwrap();
            let y = c.forward_frozen(&x, None).unwrap();
            assert!(!y.is_empty());
            assert!(seen.insert(y.to_string()), "bin {bin} collides");
        }
    }

    #[test]
    fn count_matrix_exports() {
        let mut mtx = CountMatrix::zeros(2, 3);
        mtx.set(0, 0, 4);
        mtx.set(1, 2, 2);
        let mut csv = Vec::new();
        mtx.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "4,0,0\n0,0,2\n");
        let mut pgm = Vec::new();
        mtx.write_pgm(&mut pgm).unwrap();
        let text = String::from_utf8(pgm).unwrap();
        assert!(text.starts_with("P2\n3 2\n255\n"));
        assert!(text.contains("255 0 0"));
    }
}
