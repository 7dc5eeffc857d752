//! Little-endian binary snapshot primitives.
//!
//! The network snapshot embeds its topology as TOML followed by raw
//! state: synapse arrays as `(axon, dendrite, 16-bit permanence)`
//! triplets, bit vectors as index lists, RNG state as seed plus stream
//! position. Permanences live on the same 16-bit grid in memory, so the
//! round trip is lossless and a restored network replays identically.

use std::io::{Read, Write};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bitvec::SparseBitVector;
use crate::error::{CalError, Result};
use crate::synapses::{SynapseArray, WeightBits, PERMANENCE_SCALE};

pub(crate) const MAGIC: &[u8; 8] = b"CALSNAP\x01";
pub(crate) const VERSION: u32 = 1;

pub(crate) struct SnapshotWriter<W: Write> {
    out: W,
}

impl<W: Write> SnapshotWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.out.write_all(b)?;
        Ok(())
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u128(&mut self, v: u128) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.u64(v.to_bits())
    }

    pub fn string(&mut self, s: &str) -> Result<()> {
        self.u64(s.len() as u64)?;
        self.bytes(s.as_bytes())
    }

    pub fn bitvec(&mut self, v: &SparseBitVector) -> Result<()> {
        self.u64(v.len() as u64)?;
        self.u64(v.cardinality() as u64)?;
        for &i in v.active() {
            self.u32(i as u32)?;
        }
        Ok(())
    }

    pub fn array(&mut self, a: &SynapseArray) -> Result<()> {
        self.u64(a.axon_count() as u64)?;
        self.u64(a.dendrite_count() as u64)?;
        self.u8(match a.weight_bits() {
            WeightBits::Full => 0,
            WeightBits::Bits(b) => b,
        })?;
        self.u64(a.max_fanin().map_or(u64::MAX, |f| f as u64))?;
        self.u64(a.synapse_count() as u64)?;
        for (i, j, p16) in a.triplets() {
            self.u32(i as u32)?;
            self.u32(j as u32)?;
            self.bytes(&p16.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn rng(&mut self, rng: &ChaCha8Rng) -> Result<()> {
        self.bytes(&rng.get_seed())?;
        self.u128(rng.get_word_pos())?;
        self.u64(rng.get_stream())
    }
}

pub(crate) struct SnapshotReader<R: Read> {
    input: R,
}

impl<R: Read> SnapshotReader<R> {
    pub fn new(input: R) -> Self {
        Self { input }
    }

    fn take(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.input
            .read_exact(&mut buf)
            .map_err(|e| CalError::Snapshot(format!("truncated snapshot: {e}")))?;
        Ok(buf)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn string(&mut self) -> Result<String> {
        let len = self.u64()? as usize;
        if len > 1 << 30 {
            return Err(CalError::Snapshot(format!("implausible string length {len}")));
        }
        String::from_utf8(self.take(len)?)
            .map_err(|_| CalError::Snapshot("non-utf8 string".into()))
    }

    pub fn expect_magic(&mut self) -> Result<()> {
        let got = self.take(MAGIC.len())?;
        if got != MAGIC {
            return Err(CalError::Snapshot("bad magic, not a CAL snapshot".into()));
        }
        let version = self.u32()?;
        if version != VERSION {
            return Err(CalError::Snapshot(format!(
                "unsupported snapshot version {version}"
            )));
        }
        Ok(())
    }

    pub fn bitvec(&mut self) -> Result<SparseBitVector> {
        let length = self.u64()? as usize;
        let count = self.u64()? as usize;
        if count > length {
            return Err(CalError::Snapshot(format!(
                "bit vector with {count} active of {length}"
            )));
        }
        let mut active = Vec::with_capacity(count);
        for _ in 0..count {
            active.push(self.u32()? as usize);
        }
        SparseBitVector::from_active(length, active)
            .map_err(|e| CalError::Snapshot(format!("bad bit vector: {e}")))
    }

    pub fn array(&mut self) -> Result<SynapseArray> {
        let m = self.u64()? as usize;
        let n = self.u64()? as usize;
        let bits = match self.u8()? {
            0 => WeightBits::Full,
            b => WeightBits::Bits(b),
        };
        let max_fanin = match self.u64()? {
            u64::MAX => None,
            f => Some(f as usize),
        };
        let count = self.u64()? as usize;
        let mut array = SynapseArray::new(m, n, bits, max_fanin)
            .map_err(|e| CalError::Snapshot(format!("bad array header: {e}")))?;
        for _ in 0..count {
            let i = self.u32()? as usize;
            let j = self.u32()? as usize;
            let p16 = u16::from_le_bytes(self.take(2)?.try_into().unwrap());
            array
                .set_permanence(i, j, p16 as f64 / PERMANENCE_SCALE)
                .map_err(|e| CalError::Snapshot(format!("bad synapse: {e}")))?;
        }
        Ok(array)
    }

    pub fn rng(&mut self) -> Result<ChaCha8Rng> {
        let seed: [u8; 32] = self.take(32)?.try_into().unwrap();
        let word_pos = self.u128()?;
        let stream = self.u64()?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        Ok(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn primitives_round_trip() {
        let mut buf = Vec::new();
        {
            let mut w = SnapshotWriter::new(&mut buf);
            w.bytes(MAGIC).unwrap();
            w.u32(VERSION).unwrap();
            w.string("hello").unwrap();
            w.f64(-0.1234567890123).unwrap();
            let v = SparseBitVector::from_active(10, vec![1, 5, 9]).unwrap();
            w.bitvec(&v).unwrap();
            let mut a = SynapseArray::new(4, 3, WeightBits::Bits(2), Some(7)).unwrap();
            a.set_permanence(1, 2, 0.5).unwrap();
            a.set_permanence(3, 0, 1.0).unwrap();
            w.array(&a).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let _: u64 = rng.gen();
            w.rng(&rng).unwrap();
        }
        let mut r = SnapshotReader::new(buf.as_slice());
        r.expect_magic().unwrap();
        assert_eq!(r.string().unwrap(), "hello");
        assert_eq!(r.f64().unwrap(), -0.1234567890123);
        let v = r.bitvec().unwrap();
        assert_eq!(v.active(), &[1, 5, 9]);
        let a = r.array().unwrap();
        assert_eq!(a.max_fanin(), Some(7));
        assert_eq!(a.synapse_count(), 2);
        assert!((a.permanence(1, 2).unwrap() - 0.5).abs() < 1e-4);
        let mut restored = r.rng().unwrap();
        let mut original = ChaCha8Rng::seed_from_u64(5);
        let _: u64 = original.gen();
        let a: u64 = restored.gen();
        let b: u64 = original.gen();
        assert_eq!(a, b, "restored rng continues the same stream");
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let mut r = SnapshotReader::new(&b"NOTASNAP\x01\x00\x00\x00"[..]);
        assert!(matches!(r.expect_magic(), Err(CalError::Snapshot(_))));
    }
}
