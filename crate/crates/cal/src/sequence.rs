//! Recurrent sequence memory over mini-columns.
//!
//! Each mini-column holds `N_cell` cells; each cell carries `N_seg`
//! lateral dendrite segments. Active cells excite segments through the
//! lateral synapse array; sufficiently excited segments predict their
//! cells for the next step. A predicted cell whose column then activates
//! is *verified*; an active column with no predicted cell *bursts*,
//! activating every cell so exploratory context can be learned.
//!
//! Index conventions: cell `(col j, cell i)` is `j*N_cell + i`; segment
//! `(cell c, seg q)` is `c*N_seg + q` — segments count fastest.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bitvec::SparseBitVector;
use crate::error::{CalError, Result};
use crate::synapses::{select_top_k, PlasticityParams, SynapseArray, WeightBits};

/// Mini-column geometry of one region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmGeometry {
    pub n_col: usize,
    pub n_cell: usize,
    pub n_seg: usize,
}

impl SmGeometry {
    pub fn new(n_col: usize, n_cell: usize, n_seg: usize) -> Result<Self> {
        if n_col == 0 || n_cell == 0 || n_seg == 0 {
            return Err(CalError::InvalidParameter(
                "geometry counts must all be at least 1".into(),
            ));
        }
        Ok(Self { n_col, n_cell, n_seg })
    }

    pub fn cells(&self) -> usize {
        self.n_col * self.n_cell
    }

    pub fn segments(&self) -> usize {
        self.cells() * self.n_seg
    }

    /// Segments per column, `D = N_seg * N_cell`.
    pub fn segments_per_column(&self) -> usize {
        self.n_seg * self.n_cell
    }

    pub fn cell_index(&self, col: usize, cell: usize) -> usize {
        col * self.n_cell + cell
    }

    pub fn column_of_cell(&self, cell: usize) -> usize {
        cell / self.n_cell
    }

    pub fn segment_index(&self, cell: usize, seg: usize) -> usize {
        cell * self.n_seg + seg
    }

    pub fn cell_of_segment(&self, segment: usize) -> usize {
        segment / self.n_seg
    }

    pub fn column_of_segment(&self, segment: usize) -> usize {
        self.column_of_cell(self.cell_of_segment(segment))
    }
}

/// Cells in active columns that were predicted at the previous step.
pub fn verified(
    geom: &SmGeometry,
    y: &SparseBitVector,
    z_prev: &SparseBitVector,
) -> Result<SparseBitVector> {
    check_columns(geom, y)?;
    check_cells(geom, z_prev)?;
    let active = z_prev
        .active()
        .iter()
        .copied()
        .filter(|&c| y.contains(geom.column_of_cell(c)))
        .collect();
    Ok(SparseBitVector::from_active(geom.cells(), active).expect("subset of a valid vector"))
}

/// Active columns that contain no predicted cell.
pub fn unpredicted_columns(
    geom: &SmGeometry,
    y: &SparseBitVector,
    z_prev: &SparseBitVector,
) -> Result<SparseBitVector> {
    check_columns(geom, y)?;
    check_cells(geom, z_prev)?;
    let mut predicted = vec![false; geom.n_col];
    for &c in z_prev.active() {
        predicted[geom.column_of_cell(c)] = true;
    }
    let active = y
        .active()
        .iter()
        .copied()
        .filter(|&j| !predicted[j])
        .collect();
    Ok(SparseBitVector::from_active(geom.n_col, active).expect("subset of a valid vector"))
}

/// Replicates unpredicted columns onto all of their cells.
pub fn bursting(geom: &SmGeometry, u: &SparseBitVector) -> Result<SparseBitVector> {
    check_columns(geom, u)?;
    let mut active = Vec::with_capacity(u.cardinality() * geom.n_cell);
    for &j in u.active() {
        active.extend(geom.cell_index(j, 0)..geom.cell_index(j, 0) + geom.n_cell);
    }
    Ok(SparseBitVector::from_active(geom.cells(), active)
        .expect("ascending columns yield ascending cells"))
}

/// Cell activity: verified cells together with bursting cells.
pub fn active_cells(v: &SparseBitVector, b: &SparseBitVector) -> Result<SparseBitVector> {
    v.union(b)
}

/// Cells owning at least one selected segment.
pub fn predict_cells(geom: &SmGeometry, s: &SparseBitVector) -> Result<SparseBitVector> {
    if s.len() != geom.segments() {
        return Err(CalError::LengthMismatch {
            context: "predict_cells",
            expected: geom.segments(),
            got: s.len(),
        });
    }
    let mut active: Vec<usize> = s
        .active()
        .iter()
        .map(|&seg| geom.cell_of_segment(seg))
        .collect();
    active.dedup();
    Ok(SparseBitVector::from_active(geom.cells(), active)
        .expect("cell of ascending segments is non-decreasing"))
}

/// k-winners-take-all over the current segment excitations, plus one
/// segment per bursting column: the segment that came closest to
/// predicting it — argmax of the *retained previous-step* excitation over
/// the column's slice — or a uniformly random segment when that slice is
/// silent. Random draws are consumed in ascending column order.
///
/// Ranking the bursting pick by the previous step's excitation is what
/// keeps one context on one segment: the current activity cannot excite
/// the column's own segments (their synapses come from the previous
/// pattern), so ranking by current excitation would re-pick at random on
/// every visit and fragment the context across segments.
pub fn select_segments(
    geom: &SmGeometry,
    d: &[f64],
    d_prev: &[f64],
    u: &SparseBitVector,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(SparseBitVector, Vec<usize>)> {
    if d.len() != geom.segments() {
        return Err(CalError::LengthMismatch {
            context: "select_segments",
            expected: geom.segments(),
            got: d.len(),
        });
    }
    if d_prev.len() != geom.segments() {
        return Err(CalError::LengthMismatch {
            context: "select_segments retained excitation",
            expected: geom.segments(),
            got: d_prev.len(),
        });
    }
    check_columns(geom, u)?;
    let winners = select_top_k(d, k);
    let mut set: std::collections::BTreeSet<usize> = winners.active().iter().copied().collect();
    let span = geom.segments_per_column();
    let mut chosen = Vec::with_capacity(u.cardinality());
    for &col in u.active() {
        let base = col * span;
        let slice = &d_prev[base..base + span];
        let pick = if slice.iter().any(|&e| e > 0.0) {
            let mut best = 0;
            for (i, &e) in slice.iter().enumerate() {
                if e > slice[best] {
                    best = i;
                }
            }
            base + best
        } else {
            base + rng.gen_range(0..span)
        };
        set.insert(pick);
        chosen.push(pick);
    }
    let s = SparseBitVector::from_active(geom.segments(), set.into_iter().collect())
        .expect("set iteration is sorted and in range");
    Ok((s, chosen))
}

fn check_columns(geom: &SmGeometry, v: &SparseBitVector) -> Result<()> {
    if v.len() != geom.n_col {
        return Err(CalError::LengthMismatch {
            context: "column vector",
            expected: geom.n_col,
            got: v.len(),
        });
    }
    Ok(())
}

fn check_cells(geom: &SmGeometry, v: &SparseBitVector) -> Result<()> {
    if v.len() != geom.cells() {
        return Err(CalError::LengthMismatch {
            context: "cell vector",
            expected: geom.cells(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Borrowed view of everything the snapshot format persists.
pub(crate) struct SmSnapshotView<'a> {
    pub array: &'a SynapseArray,
    pub z_prev: &'a SparseBitVector,
    pub a_prev: &'a SparseBitVector,
    pub s_prev: &'a SparseBitVector,
    pub d_prev: &'a [f64],
    pub stepped: bool,
    pub rng: &'a ChaCha8Rng,
}

/// Products of one sequence-memory step.
#[derive(Debug, Clone)]
pub struct SmStepOutput {
    /// Verified cells: predicted at t-1 and in an active column now.
    pub v: SparseBitVector,
    /// Cells predicted for the next step, including the bursting picks
    /// (they must be verifiable, or exploration could never consolidate).
    pub z: SparseBitVector,
    /// All active cells (verified plus bursting).
    pub a: SparseBitVector,
    /// Predictions backed by actual segment excitation, without the
    /// bursting picks. A bursting column's pick names the *current*
    /// column, so treating it as a forecast would bias any readout
    /// toward the present input; decoding uses this vector instead.
    pub z_driven: SparseBitVector,
}

/// One region's lateral sequence memory.
#[derive(Debug, Clone)]
pub struct SequenceMemory {
    geom: SmGeometry,
    array: SynapseArray,
    params: PlasticityParams,
    k: usize,
    /// Minimum active synapses for a segment to raise a prediction.
    segment_threshold: usize,
    z_prev: SparseBitVector,
    a_prev: SparseBitVector,
    s_prev: SparseBitVector,
    /// Retained dendrite excitation from the previous step, ranking the
    /// bursting picks ("came closest to being predicted").
    d_prev: Vec<f64>,
    stepped: bool,
    learning: bool,
    rng: ChaCha8Rng,
}

impl SequenceMemory {
    /// `k` is the number of segments selected by inhibition each step —
    /// the same k as the correlator activating this region, since that
    /// many columns fire at the next step.
    pub fn new(
        geom: SmGeometry,
        k: usize,
        weight_bits: WeightBits,
        params: PlasticityParams,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 || k > geom.segments() {
            return Err(CalError::InvalidParameter(format!(
                "segment selection k = {k} outside 1..={}",
                geom.segments()
            )));
        }
        Ok(Self {
            geom,
            array: SynapseArray::new(geom.cells(), geom.segments(), weight_bits, None)?,
            params,
            k,
            segment_threshold: 2,
            z_prev: SparseBitVector::empty(geom.cells()),
            a_prev: SparseBitVector::empty(geom.cells()),
            s_prev: SparseBitVector::empty(geom.segments()),
            d_prev: vec![0.0; geom.segments()],
            stepped: false,
            learning: true,
            rng: rand::SeedableRng::seed_from_u64(seed),
        })
    }

    pub fn geometry(&self) -> &SmGeometry {
        &self.geom
    }

    pub fn array(&self) -> &SynapseArray {
        &self.array
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn set_learning(&mut self, on: bool) {
        self.learning = on;
    }

    /// Overrides the prediction floor (active synapses per segment).
    pub fn with_segment_threshold(mut self, threshold: usize) -> Self {
        self.segment_threshold = threshold.max(1);
        self
    }

    pub fn segment_threshold(&self) -> usize {
        self.segment_threshold
    }

    pub fn learning(&self) -> bool {
        self.learning
    }

    /// Predictions carried from the previous step.
    pub fn predicted(&self) -> &SparseBitVector {
        &self.z_prev
    }

    /// Segments selected at the previous step.
    pub fn selected_segments(&self) -> &SparseBitVector {
        &self.s_prev
    }

    /// Fraction of potential lateral synapses currently connected.
    pub fn connected_fraction(&self) -> f64 {
        self.array.connected_count() as f64 / self.array.potential_count() as f64
    }

    /// Runs one step on the active columns `y`: verification, bursting,
    /// segment excitation, prediction, then learning against the previous
    /// step's activity.
    pub fn step(&mut self, y: &SparseBitVector) -> Result<SmStepOutput> {
        let v = verified(&self.geom, y, &self.z_prev)?;
        let u = unpredicted_columns(&self.geom, y, &self.z_prev)?;
        let b = bursting(&self.geom, &u)?;
        let a = active_cells(&v, &b)?;
        let (mut d, matches) = self.array.excite_with_matches(&a, None)?;
        // a segment predicts only when enough of its synapses fired:
        // an accidental one- or two-cell overlap with a consolidated
        // context must not raise a prediction. Segments below the floor
        // still consolidate through the bursting path, where the retained
        // excitation ranks them.
        for (j, e) in d.iter_mut().enumerate() {
            if *e > 0.0 && (matches[j] as usize) < self.segment_threshold {
                *e = 0.0;
            }
        }
        let (s, chosen) =
            select_segments(&self.geom, &d, &self.d_prev, &u, self.k, &mut self.rng)?;
        let z = predict_cells(&self.geom, &s)?;
        let z_driven = predict_cells(&self.geom, &select_top_k(&d, self.k))?;

        if self.learning && self.stepped {
            self.learn(&v, &chosen)?;
        }

        self.z_prev = z.clone();
        self.a_prev = a.clone();
        self.s_prev = s;
        self.d_prev = d;
        self.stepped = true;
        Ok(SmStepOutput { v, z, a, z_driven })
    }

    /// Credit assignment against the previous step's activity. Segments
    /// that predicted now-verified cells strengthen their synapses from
    /// the previously active cells; segments whose cells were predicted
    /// but not verified are punished. A bursting column's chosen segment
    /// counts as a verified prediction too — its column is demonstrably
    /// active — so it is wired to the previous activity and strengthened
    /// at the burst step itself; that is the only way a cold-started or
    /// newly contextualized column ever acquires usable synapses.
    fn learn(&mut self, v_now: &SparseBitVector, chosen_now: &[usize]) -> Result<()> {
        let mut s_ok = Vec::new();
        let mut s_bad = Vec::new();
        for &seg in self.s_prev.active() {
            if v_now.contains(self.geom.cell_of_segment(seg)) {
                s_ok.push(seg);
            } else {
                s_bad.push(seg);
            }
        }
        let s_ok = SparseBitVector::from_active(self.geom.segments(), s_ok)
            .expect("subset of a valid vector");
        let s_bad = SparseBitVector::from_active(self.geom.segments(), s_bad)
            .expect("subset of a valid vector");

        // exploration growth first, so the burst picks take the Hebbian
        // increment of this very step
        let init = self.array.min_connectable_permanence();
        if !chosen_now.is_empty() {
            let chosen = SparseBitVector::from_unsorted(self.geom.segments(), chosen_now.to_vec())
                .expect("chosen segments are in range");
            self.array.grow_synapses(&self.a_prev, &chosen, init, usize::MAX);
            // a selected segment's column cannot also be bursting, so the
            // reinforced and punished sets stay disjoint
            let reinforced = s_ok.union(&chosen)?;
            self.array
                .update_scoped(&self.a_prev, &reinforced, &s_bad, &self.params)?;
        } else {
            self.array
                .update_scoped(&self.a_prev, &s_ok, &s_bad, &self.params)?;
        }

        if !s_ok.is_empty() {
            self.array.grow_synapses(&self.a_prev, &s_ok, init, usize::MAX);
        }
        Ok(())
    }

    pub(crate) fn state_for_snapshot(&self) -> SmSnapshotView<'_> {
        SmSnapshotView {
            array: &self.array,
            z_prev: &self.z_prev,
            a_prev: &self.a_prev,
            s_prev: &self.s_prev,
            d_prev: &self.d_prev,
            stepped: self.stepped,
            rng: &self.rng,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn restore_state(
        &mut self,
        array: SynapseArray,
        z_prev: SparseBitVector,
        a_prev: SparseBitVector,
        s_prev: SparseBitVector,
        d_prev: Vec<f64>,
        stepped: bool,
        rng: ChaCha8Rng,
    ) {
        self.array = array;
        self.z_prev = z_prev;
        self.a_prev = a_prev;
        self.s_prev = s_prev;
        self.d_prev = d_prev;
        self.stepped = stepped;
        self.rng = rng;
    }
}
