//! Scalar-to-SDR slide-bar encoding, nearest-bin decoding and binary
//! image ingestion.
//!
//! A scalar channel is mapped onto a binary vector by turning on a bar of
//! `k` adjacent bits whose position slides with the value. Real channels
//! use a bin displacement `d < k` so neighbouring values share bits;
//! integer channels use `d = k` so every value is disjoint.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::bitvec::SparseBitVector;
use crate::error::{CalError, Result};

/// Whether a channel carries real numbers (overlapping bins) or integers
/// (disjoint bins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Real,
    Integer,
}

/// Slide-bar encoding parameters for one scalar channel.
///
/// Derived quantities follow `bins = (s_max - s_min)/r + 1` and
/// `N = d*(bins - 1) + k`; bin `b` activates bits `[b*d, b*d + k)`,
/// index origin 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSpec {
    s_min: f64,
    s_max: f64,
    resolution: f64,
    active_bits: usize,
    displacement: usize,
    kind: ScalarKind,
    steps: usize,
}

impl EncoderSpec {
    /// Builds an encoder. Real channels default to displacement 1 (maximum
    /// overlap between neighbouring bins); integer channels are forced to
    /// `d = k` and `r = 1`.
    pub fn new(s_min: f64, s_max: f64, resolution: f64, k: usize, kind: ScalarKind) -> Result<Self> {
        if !(s_max > s_min) {
            return Err(CalError::InvalidParameter(format!(
                "encoder range [{s_min}, {s_max}] is empty"
            )));
        }
        if !(resolution > 0.0) {
            return Err(CalError::InvalidParameter(format!(
                "encoder resolution {resolution} must be positive"
            )));
        }
        if k < 1 {
            return Err(CalError::InvalidParameter(
                "encoder needs at least one active bit".into(),
            ));
        }
        let raw_steps = (s_max - s_min) / resolution;
        let steps = raw_steps.round();
        if kind == ScalarKind::Integer {
            if resolution != 1.0 {
                return Err(CalError::InvalidParameter(
                    "integer channels require resolution 1".into(),
                ));
            }
            if (raw_steps - steps).abs() > 1e-9 {
                return Err(CalError::InvalidParameter(format!(
                    "integer range [{s_min}, {s_max}] does not hold a whole number of bins"
                )));
            }
        }
        if steps < 1.0 {
            return Err(CalError::InvalidParameter(
                "encoder range shorter than one resolution step".into(),
            ));
        }
        let displacement = match kind {
            ScalarKind::Integer => k,
            ScalarKind::Real => 1,
        };
        Ok(Self {
            s_min,
            s_max,
            resolution,
            active_bits: k,
            displacement,
            kind,
            steps: steps as usize,
        })
    }

    /// Overrides the bin displacement; real channels allow `1 <= d <= k`,
    /// integer channels are pinned at `d = k`.
    pub fn with_displacement(mut self, d: usize) -> Result<Self> {
        match self.kind {
            ScalarKind::Integer => {
                if d != self.active_bits {
                    return Err(CalError::InvalidParameter(
                        "integer channels require d = k".into(),
                    ));
                }
            }
            ScalarKind::Real => {
                if d < 1 || d > self.active_bits {
                    return Err(CalError::InvalidParameter(format!(
                        "displacement {d} outside 1..=k ({})",
                        self.active_bits
                    )));
                }
            }
        }
        self.displacement = d;
        Ok(self)
    }

    /// Total vector length `N = d*(bins - 1) + k`.
    pub fn n_bits(&self) -> usize {
        self.displacement * self.steps + self.active_bits
    }

    /// Number of encoded values.
    pub fn bins(&self) -> usize {
        self.steps + 1
    }

    pub fn active_bits(&self) -> usize {
        self.active_bits
    }

    pub fn displacement(&self) -> usize {
        self.displacement
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    pub fn range(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    /// Bin number for a value; values within half a resolution step beyond
    /// the range bounds round into the edge bins, anything further is an
    /// error (silent clamping would corrupt error metrics downstream).
    pub fn bin_of(&self, s: f64) -> Result<usize> {
        let slack = self.resolution / 2.0 + self.resolution * 1e-9;
        if !s.is_finite() || s < self.s_min - slack || s > self.s_max + slack {
            return Err(CalError::OutOfRange {
                value: s,
                min: self.s_min,
                max: self.s_max,
            });
        }
        let bin = ((s - self.s_min) / self.resolution).round();
        Ok((bin.max(0.0) as usize).min(self.steps))
    }

    /// Scalar value at the centre of a bin.
    pub fn value_of_bin(&self, bin: usize) -> f64 {
        self.s_min + bin as f64 * self.resolution
    }

    /// Encodes a scalar as its bar of active bits.
    pub fn encode(&self, s: f64) -> Result<SparseBitVector> {
        let bin = self.bin_of(s)?;
        let start = bin * self.displacement;
        SparseBitVector::from_active(self.n_bits(), (start..start + self.active_bits).collect())
    }

    /// Decodes by nearest bin: the bin whose bar overlaps the most active
    /// bits wins; when several bins tie, the middle of the tied set is
    /// taken (a fixed edge preference would bias every tied decode the
    /// same way). All-zero input is "no prediction".
    pub fn decode(&self, x: &SparseBitVector) -> Result<f64> {
        Ok(self.value_of_bin(self.decode_bin(x)?))
    }

    /// As [`decode`](Self::decode) but returns the winning bin number.
    pub fn decode_bin(&self, x: &SparseBitVector) -> Result<usize> {
        if x.len() != self.n_bits() {
            return Err(CalError::LengthMismatch {
                context: "decode",
                expected: self.n_bits(),
                got: x.len(),
            });
        }
        if x.is_empty() {
            return Err(CalError::NoPrediction);
        }
        let mut best_overlap = 0;
        let mut tied = Vec::new();
        for b in 0..=self.steps {
            let start = b * self.displacement;
            let overlap = x.count_in_range(start, start + self.active_bits);
            if overlap > best_overlap {
                best_overlap = overlap;
                tied.clear();
            }
            if overlap == best_overlap {
                tied.push(b);
            }
        }
        Ok(tied[tied.len() / 2])
    }
}

/// Materialized decode look-up table: one column per bin holding that
/// bin's encoding. The arithmetic path in [`EncoderSpec::decode`] is the
/// same computation; the table exists for direct inspection and as the
/// second route in dual-route tests.
#[derive(Debug, Clone)]
pub struct DecodeTable {
    columns: Vec<SparseBitVector>,
}

impl DecodeTable {
    pub fn new(spec: &EncoderSpec) -> Self {
        let columns = (0..spec.bins())
            .map(|b| {
                let start = b * spec.displacement();
                SparseBitVector::from_active(
                    spec.n_bits(),
                    (start..start + spec.active_bits()).collect(),
                )
                .expect("bar indices are in range by construction")
            })
            .collect();
        Self { columns }
    }

    pub fn bins(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, bin: usize) -> &SparseBitVector {
        &self.columns[bin]
    }

    /// Best matching bin by overlap, ties to the middle of the tied set.
    pub fn best_match(&self, x: &SparseBitVector) -> Result<(usize, usize)> {
        if x.is_empty() {
            return Err(CalError::NoPrediction);
        }
        let mut best_overlap = 0;
        let mut tied = Vec::new();
        for (b, col) in self.columns.iter().enumerate() {
            let overlap = col.overlap(x)?;
            if overlap > best_overlap {
                best_overlap = overlap;
                tied.clear();
            }
            if overlap == best_overlap {
                tied.push(b);
            }
        }
        Ok((tied[tied.len() / 2], best_overlap))
    }
}

/// A binary 2D image, row-major storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CalError::InvalidParameter(
                "image needs at least one row and one column".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            bits: vec![false; rows * cols],
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.cols + col] = value;
    }

    /// Number of set pixels.
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Cuts out the sub-image at `(row0, col0)` of the given size.
    pub fn crop(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<Self> {
        if row0 + rows > self.rows || col0 + cols > self.cols {
            return Err(CalError::IndexOutOfBounds {
                index: (row0 + rows) * (col0 + cols),
                length: self.rows * self.cols,
            });
        }
        let mut out = Self::new(rows, cols)?;
        for r in 0..rows {
            for c in 0..cols {
                out.set(r, c, self.get(row0 + r, col0 + c));
            }
        }
        Ok(out)
    }

    /// Reads a plain portable-bitmap (magic `P1`). `#` comments and
    /// arbitrary whitespace between tokens are accepted.
    pub fn from_pbm(reader: impl BufRead) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("");
            tokens.extend(body.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        let magic = it.next().ok_or_else(|| CalError::Parse("empty PBM".into()))?;
        if magic != "P1" {
            return Err(CalError::Parse(format!("expected P1 magic, got `{magic}`")));
        }
        let mut next_usize = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| CalError::Parse(format!("PBM missing {what}")))?
                .parse()
                .map_err(|_| CalError::Parse(format!("PBM bad {what}")))
        };
        let cols = next_usize("width")?;
        let rows = next_usize("height")?;
        let mut img = Self::new(rows, cols)?;
        let mut count = 0;
        for tok in it {
            // plain PBM allows digits to be packed without separators
            for ch in tok.chars() {
                let value = match ch {
                    '0' => false,
                    '1' => true,
                    _ => return Err(CalError::Parse(format!("PBM bad pixel `{ch}`"))),
                };
                if count >= rows * cols {
                    return Err(CalError::Parse("PBM has too many pixels".into()));
                }
                img.bits[count] = value;
                count += 1;
            }
        }
        if count != rows * cols {
            return Err(CalError::Parse(format!(
                "PBM has {count} pixels, expected {}",
                rows * cols
            )));
        }
        Ok(img)
    }
}

/// Unwraps a binary image in column-major order: pixel `(i, j)` maps to
/// index `j*rows + i`.
pub fn ingest_frame(image: &BinaryImage) -> SparseBitVector {
    let mut active = Vec::with_capacity(image.popcount());
    for j in 0..image.cols() {
        for i in 0..image.rows() {
            if image.get(i, j) {
                active.push(j * image.rows() + i);
            }
        }
    }
    SparseBitVector::from_active(image.rows() * image.cols(), active)
        .expect("column-major walk yields increasing indices")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derived_sizes_match_known_channels() {
        // [-1, 1] at r = 0.01 with 5 active bits: 201 bins, 205-bit vector
        let e = EncoderSpec::new(-1.0, 1.0, 0.01, 5, ScalarKind::Real).unwrap();
        assert_eq!(e.bins(), 201);
        assert_eq!(e.n_bits(), 205);

        // [0, 1] at r = 0.005: also a 205-bit vector
        let e = EncoderSpec::new(0.0, 1.0, 0.005, 5, ScalarKind::Real).unwrap();
        assert_eq!(e.bins(), 201);
        assert_eq!(e.n_bits(), 205);

        // integer [0, 255]: d = k = 5, disjoint bars
        let e = EncoderSpec::new(0.0, 255.0, 1.0, 5, ScalarKind::Integer).unwrap();
        assert_eq!(e.bins(), 256);
        assert_eq!(e.n_bits(), 1280);
        assert_eq!(e.displacement(), 5);
    }

    #[test]
    fn encoder_rejects_bad_parameters() {
        assert!(EncoderSpec::new(1.0, 1.0, 0.1, 5, ScalarKind::Real).is_err());
        assert!(EncoderSpec::new(0.0, 1.0, 0.0, 5, ScalarKind::Real).is_err());
        assert!(EncoderSpec::new(0.0, 1.0, 1.0, 0, ScalarKind::Real).is_err());
        // integer ranges must hold a whole number of bins at r = 1
        assert!(EncoderSpec::new(0.0, 2.5, 1.0, 3, ScalarKind::Integer).is_err());
        assert!(EncoderSpec::new(0.0, 255.0, 0.5, 5, ScalarKind::Integer).is_err());
    }

    #[test]
    fn encode_places_the_bar() {
        let e = EncoderSpec::new(-1.0, 1.0, 0.01, 5, ScalarKind::Real).unwrap();
        assert_eq!(e.encode(-1.0).unwrap().active(), &[0, 1, 2, 3, 4]);
        // midpoint: bin 100, bits 100..=104
        assert_eq!(e.encode(0.0).unwrap().active(), &[100, 101, 102, 103, 104]);
        // adjacent reals overlap in k - d bits
        let a = e.encode(0.25).unwrap();
        let b = e.encode(0.25 + e.resolution()).unwrap();
        assert_eq!(a.overlap(&b).unwrap(), 4);
        // half a step beyond the bounds still lands in the edge bins
        assert_eq!(e.encode(1.005).unwrap(), e.encode(1.0).unwrap());
        assert!(e.encode(1.02).is_err());
    }

    #[test]
    fn decode_round_trips_within_half_resolution() {
        let e = EncoderSpec::new(-1.0, 1.0, 0.01, 5, ScalarKind::Real).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let s = rng.gen_range(-1.0..=1.0);
            let decoded = e.decode(&e.encode(s).unwrap()).unwrap();
            assert!((decoded - s).abs() <= e.resolution() / 2.0 + 1e-12);
        }
    }

    #[test]
    fn decode_rejects_empty_and_wrong_width() {
        let e = EncoderSpec::new(0.0, 10.0, 1.0, 3, ScalarKind::Integer).unwrap();
        match e.decode(&SparseBitVector::empty(e.n_bits())) {
            Err(CalError::NoPrediction) => {}
            other => panic!("expected NoPrediction, got {other:?}"),
        }
        assert!(e.decode(&SparseBitVector::empty(7)).is_err());
    }

    /// Brute-force oracle: decode must agree with an exhaustive
    /// overlap-argmax over the materialized look-up table, for every bin
    /// and every single-bit perturbation of its bar.
    #[test]
    fn single_bit_perturbations_decode_to_the_nearest_bin() {
        for kind in [ScalarKind::Real, ScalarKind::Integer] {
            let e = match kind {
                ScalarKind::Real => EncoderSpec::new(0.0, 3.0, 0.1, 5, kind).unwrap(),
                ScalarKind::Integer => EncoderSpec::new(0.0, 30.0, 1.0, 5, kind).unwrap(),
            };
            let table = DecodeTable::new(&e);
            let n = e.n_bits();
            for bin in 0..e.bins() {
                let bar = table.column(bin).clone();
                for &bit in bar.active() {
                    for moved in [bit.wrapping_sub(1), bit + 1] {
                        if moved >= n {
                            continue;
                        }
                        let mut bits: Vec<usize> =
                            bar.active().iter().copied().filter(|&b| b != bit).collect();
                        bits.push(moved);
                        let x = SparseBitVector::from_unsorted(n, bits).unwrap();
                        let got = e.decode_bin(&x).unwrap();
                        let (oracle, _) = table.best_match(&x).unwrap();
                        assert_eq!(got, oracle, "decode disagrees with LUT oracle");
                        if kind == ScalarKind::Integer {
                            // disjoint bars: the original bin always survives
                            assert_eq!(got, bin);
                        } else {
                            // overlapping bars: an edge bit moving outward can
                            // tie into the adjacent bin, never further
                            assert!((got as isize - bin as isize).abs() <= 1);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn integer_round_trip_is_exact_over_the_range() {
        let e = EncoderSpec::new(0.0, 255.0, 1.0, 5, ScalarKind::Integer).unwrap();
        for v in 0..=255 {
            let s = v as f64;
            assert_eq!(e.decode(&e.encode(s).unwrap()).unwrap(), s);
        }
    }

    #[test]
    fn integer_bars_are_disjoint_and_real_neighbours_share_bits() {
        let ei = EncoderSpec::new(0.0, 20.0, 1.0, 4, ScalarKind::Integer).unwrap();
        for a in 0..20 {
            let va = ei.encode(a as f64).unwrap();
            let vb = ei.encode((a + 1) as f64).unwrap();
            assert_eq!(va.overlap(&vb).unwrap(), 0);
        }
        let er = EncoderSpec::new(0.0, 2.0, 0.1, 5, ScalarKind::Real).unwrap();
        let d = er.displacement();
        for b in 0..er.bins() - 1 {
            let va = er.encode(er.value_of_bin(b)).unwrap();
            let vb = er.encode(er.value_of_bin(b + 1)).unwrap();
            assert!(va.overlap(&vb).unwrap() >= er.active_bits() - d);
        }
    }

    /// Digitization-noise statistics: for uniform random reals the decode
    /// error is the rounding saw-tooth, mean 0 and RMS r/sqrt(12).
    #[test]
    fn uniform_reals_hit_the_digitization_floor() {
        let e = EncoderSpec::new(-1.0, 1.0, 0.01, 5, ScalarKind::Real).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let s = rng.gen_range(-1.0..=1.0);
            let err = e.decode(&e.encode(s).unwrap()).unwrap() - s;
            sum += err;
            sum_sq += err * err;
        }
        let mean = sum / n as f64;
        let rms = (sum_sq / n as f64).sqrt();
        let floor = e.resolution() / 12.0_f64.sqrt();
        assert!(mean.abs() < floor * 0.05, "mean {mean} too far from 0");
        assert!(
            (rms - floor).abs() < floor * 0.05,
            "rms {rms} vs floor {floor}"
        );
    }

    #[test]
    fn ingest_is_column_major() {
        let mut img = BinaryImage::new(2, 2).unwrap();
        img.set(0, 1, true);
        assert_eq!(ingest_frame(&img).active(), &[2]);

        let empty = BinaryImage::new(3, 4).unwrap();
        assert!(ingest_frame(&empty).is_empty());

        let mut diag = BinaryImage::new(3, 3).unwrap();
        for i in 0..3 {
            diag.set(i, i, true);
        }
        assert_eq!(ingest_frame(&diag).active(), &[0, 4, 8]);
    }

    #[test]
    fn pbm_parsing_accepts_plain_p1() {
        let text = "P1\n# a comment\n3 2\n1 0 1\n0 1 0\n";
        let img = BinaryImage::from_pbm(text.as_bytes()).unwrap();
        assert_eq!((img.rows(), img.cols()), (2, 3));
        assert!(img.get(0, 0) && img.get(0, 2) && img.get(1, 1));
        assert!(!img.get(0, 1));

        // packed digits are legal in plain PBM
        let packed = "P1 2 2 1001";
        let img = BinaryImage::from_pbm(packed.as_bytes()).unwrap();
        assert!(img.get(0, 0) && img.get(1, 1));

        assert!(BinaryImage::from_pbm("P4 2 2".as_bytes()).is_err());
        assert!(BinaryImage::from_pbm("P1 2 2 1 0 1".as_bytes()).is_err());
    }
}
