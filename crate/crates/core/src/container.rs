//! Binary container shared by every structure kind.
//!
//! ```text
//! magic "SDR1" | version u8 | kind u8 | k u8 | r u8 | reserved u8
//! n u64 | m u64 | master_seed u64 | seed_generation u32
//! kind_specific_len u32 | kind_specific | payload_len_bits u64 | payload
//! crc32 u32 (over everything before it)
//! ```
//!
//! Integers are little-endian. The payload is a bit stream packed LSB-first
//! within bytes, entries contiguous, final byte zero-padded.

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SDR1";
pub const VERSION: u8 = 1;

/// Size of every field except `kind_specific` and the payload bytes.
pub const FIXED_HEADER_BYTES: usize = 4 + 1 + 1 + 1 + 1 + 1 + 8 + 8 + 8 + 4 + 4 + 8 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Kind {
    Basic = 1,
    Compact = 2,
    Blocked = 3,
    Filter = 4,
    Bloomier = 5,
    Phf = 6,
    Mphf = 7,
}

impl Kind {
    pub fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            1 => Kind::Basic,
            2 => Kind::Compact,
            3 => Kind::Blocked,
            4 => Kind::Filter,
            5 => Kind::Bloomier,
            6 => Kind::Phf,
            7 => Kind::Mphf,
            other => return Err(Error::Malformed(format!("unknown kind {other}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Basic => "basic",
            Kind::Compact => "compact",
            Kind::Blocked => "blocked",
            Kind::Filter => "filter",
            Kind::Bloomier => "bloomier",
            Kind::Phf => "phf",
            Kind::Mphf => "mphf",
        }
    }
}

/// Decoded container fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub kind: Kind,
    pub k: u8,
    pub r: u8,
    pub n: u64,
    pub m: u64,
    pub master_seed: u64,
    pub seed_generation: u32,
    pub kind_specific: Vec<u8>,
    pub payload_bits: u64,
    pub payload: Vec<u8>,
}

impl Container {
    /// Header size in bits, everything except the payload bytes.
    pub fn header_bits(&self) -> u64 {
        ((FIXED_HEADER_BYTES + self.kind_specific.len()) * 8) as u64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FIXED_HEADER_BYTES + self.kind_specific.len() + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&[VERSION, self.kind as u8, self.k, self.r, 0]);
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.master_seed.to_le_bytes());
        out.extend_from_slice(&self.seed_generation.to_le_bytes());
        out.extend_from_slice(&(self.kind_specific.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.kind_specific);
        out.extend_from_slice(&self.payload_bits.to_le_bytes());
        out.extend_from_slice(&self.payload);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < FIXED_HEADER_BYTES {
            return Err(Error::Malformed(format!("truncated: {} bytes", bytes.len())));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored {
            return Err(Error::BadCrc);
        }
        let mut rd = ByteReader::new(&body[4..]);
        let version = rd.u8()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let kind = Kind::from_byte(rd.u8()?)?;
        let k = rd.u8()?;
        let r = rd.u8()?;
        let _reserved = rd.u8()?;
        let n = rd.u64()?;
        let m = rd.u64()?;
        let master_seed = rd.u64()?;
        let seed_generation = rd.u32()?;
        let ks_len = rd.u32()? as usize;
        let kind_specific = rd.bytes(ks_len)?.to_vec();
        let payload_bits = rd.u64()?;
        let payload_len = usize::try_from(payload_bits.div_ceil(8))
            .map_err(|_| Error::Malformed("payload too large".into()))?;
        let payload = rd.bytes(payload_len)?.to_vec();
        if !rd.is_empty() {
            return Err(Error::Malformed("trailing bytes".into()));
        }
        Ok(Self {
            kind,
            k,
            r,
            n,
            m,
            master_seed,
            seed_generation,
            kind_specific,
            payload_bits,
            payload,
        })
    }

    pub fn expect_kind(&self, kind: Kind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Malformed(format!(
                "expected kind {}, found {}",
                kind.name(),
                self.kind.name()
            )));
        }
        Ok(())
    }

    pub fn payload_reader(&self) -> BitReader<'_> {
        BitReader::new(&self.payload, self.payload_bits)
    }
}

/// Appends little-endian integers to a byte buffer.
#[derive(Debug, Default, Clone)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.u64(v.to_bits())
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn bytes(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Malformed("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn finish(&self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::Malformed("unused kind-specific bytes".into()))
        }
    }
}

/// LSB-first bit packer.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value` (`width <= 64`).
    pub fn push(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for i in 0..width {
            let bit = (value >> i) & 1;
            let at = self.bits as usize;
            if at % 8 == 0 {
                self.bytes.push(0);
            }
            self.bytes[at / 8] |= (bit as u8) << (at % 8);
            self.bits += 1;
        }
    }

    pub fn push_all(&mut self, values: &[u64], width: u32) {
        for &v in values {
            self.push(v, width);
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.bits
    }

    pub fn finish(self) -> (Vec<u8>, u64) {
        (self.bytes, self.bits)
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], len: u64) -> Self {
        Self { bytes, len, pos: 0 }
    }

    pub fn read(&mut self, width: u32) -> Result<u64> {
        if self.pos + u64::from(width) > self.len {
            return Err(Error::Malformed("payload too short".into()));
        }
        let mut v = 0u64;
        for i in 0..width {
            let at = self.pos as usize;
            let bit = (self.bytes[at / 8] >> (at % 8)) & 1;
            v |= u64::from(bit) << i;
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn read_vec(&mut self, count: usize, width: u32) -> Result<Vec<u64>> {
        (0..count).map(|_| self.read(width)).collect()
    }

    pub fn remaining(&self) -> u64 {
        self.len - self.pos
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() == 0 {
            Ok(())
        } else {
            Err(Error::Malformed(format!("{} unused payload bits", self.remaining())))
        }
    }
}

/// Structures that round-trip through a [`Container`].
pub trait Persist: Sized {
    fn to_container(&self) -> Container;
    fn from_container(c: &Container) -> Result<Self>;

    fn to_bytes(&self) -> Vec<u8> {
        self.to_container().to_bytes()
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_container(&Container::from_bytes(bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Container {
        let mut w = BitWriter::new();
        w.push_all(&[5, 0, 7, 1], 3);
        let (payload, payload_bits) = w.finish();
        Container {
            kind: Kind::Basic,
            k: 3,
            r: 3,
            n: 3,
            m: 4,
            master_seed: 99,
            seed_generation: 2,
            kind_specific: vec![1, 2, 3],
            payload_bits,
            payload,
        }
    }

    #[test]
    fn bits_round_trip() {
        let mut w = BitWriter::new();
        let vals = [0u64, 1, u64::MAX, 0xdead_beef, 12345];
        w.push_all(&vals, 64);
        w.push(0b101, 3);
        let (bytes, len) = w.finish();
        assert_eq!(len, 5 * 64 + 3);
        assert_eq!(bytes.len(), 41);
        let mut r = BitReader::new(&bytes, len);
        assert_eq!(r.read_vec(5, 64).unwrap(), vals);
        assert_eq!(r.read(3).unwrap(), 0b101);
        assert!(r.finish().is_ok());
        assert!(r.read(1).is_err());
    }

    #[test]
    fn lsb_first_packing() {
        let mut w = BitWriter::new();
        w.push(1, 1);
        w.push(0, 1);
        w.push(0b11, 2);
        let (bytes, _) = w.finish();
        assert_eq!(bytes, vec![0b1101]);
    }

    #[test]
    fn container_round_trip() {
        let c = sample();
        let bytes = c.to_bytes();
        assert_eq!(bytes.len(), FIXED_HEADER_BYTES + 3 + 2);
        assert_eq!(Container::from_bytes(&bytes).unwrap(), c);
        assert_eq!(c.header_bits(), ((FIXED_HEADER_BYTES + 3) * 8) as u64);
    }

    #[test]
    fn corruption_detected() {
        let bytes = sample().to_bytes();
        for i in 4..bytes.len() {
            for b in 0..8 {
                let mut bad = bytes.clone();
                bad[i] ^= 1 << b;
                assert!(Container::from_bytes(&bad).is_err(), "byte {i} bit {b}");
            }
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(Container::from_bytes(&bad), Err(Error::BadMagic));
        let mut bad = bytes.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0x10;
        assert_eq!(Container::from_bytes(&bad), Err(Error::BadCrc));
    }

    #[test]
    fn truncation_detected() {
        let bytes = sample().to_bytes();
        for len in 0..bytes.len() {
            assert!(Container::from_bytes(&bytes[..len]).is_err());
        }
    }

    #[test]
    fn version_checked() {
        let mut bytes = sample().to_bytes();
        bytes[4] = 2;
        let body = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[..body]);
        bytes[body..].copy_from_slice(&crc.to_le_bytes());
        assert_eq!(Container::from_bytes(&bytes), Err(Error::UnsupportedVersion(2)));
    }
}
