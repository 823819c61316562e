//! Fixed-length bit strings and bit matrices over GF(2).
//!
//! Bit `0` is the first bit: the most significant bit of byte `0`. Unused
//! padding bits in the last byte are always zero, so equality and hashing on
//! the byte buffer are well defined.

use std::fmt;

use rand::RngCore;

use crate::error::{Error, Result};

/// An immutable-length string of bits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    /// All-zero string of `len` bits.
    pub fn zeros(len: usize) -> Self {
        Self {
            bytes: vec![0u8; len.div_ceil(8)],
            len,
        }
    }

    /// Builds from raw bytes, masking any padding bits in the last byte.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::InputLength {
                expected: len.div_ceil(8) * 8,
                got: bytes.len() * 8,
            });
        }
        let mut out = Self {
            bytes: bytes.to_vec(),
            len,
        };
        out.mask_padding();
        Ok(out)
    }

    /// Builds from `0`/`1` values, bit 0 first. Test and example convenience.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut out = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            out.set(i, b != 0);
        }
        out
    }

    /// Interprets the low `len` bits of `value` (bit `i` of the string is
    /// bit `i` of `value`). Used for exhaustive enumeration with `len <= 64`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut out = Self::zeros(len);
        for i in 0..len {
            out.set(i, (value >> i) & 1 == 1);
        }
        out
    }

    /// Parses a lowercase hex string of exactly `ceil(len/8)` bytes.
    pub fn from_hex(hex_str: &str, len: usize) -> Result<Self> {
        let bytes = hex::decode(hex_str)
            .map_err(|e| Error::Config(format!("invalid hex bit string: {e}")))?;
        Self::from_bytes(&bytes, len)
    }

    /// Samples a uniform bit string of `len` bits.
    pub fn random<R: RngCore>(rng: &mut R, len: usize) -> Self {
        let mut bytes = vec![0u8; len.div_ceil(8)];
        rng.fill_bytes(&mut bytes);
        let mut out = Self { bytes, len };
        out.mask_padding();
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 0x80 >> (i % 8);
        if value {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    /// The first bit of the string (bit 0).
    pub fn first_bit(&self) -> u8 {
        u8::from(self.get(0))
    }

    pub fn is_zero(&self) -> bool {
        self.bytes.iter().all(|&b| b == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Index of the first set bit, if any.
    pub fn leading_one(&self) -> Option<usize> {
        for (byte_idx, &b) in self.bytes.iter().enumerate() {
            if b != 0 {
                return Some(byte_idx * 8 + b.leading_zeros() as usize);
            }
        }
        None
    }

    /// In-place XOR with another string of the same length.
    pub fn xor_assign(&mut self, other: &BitString) {
        assert_eq!(self.len, other.len, "xor of unequal-length bit strings");
        for (a, b) in self.bytes.iter_mut().zip(&other.bytes) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// GF(2) inner product: parity of the AND of the two strings.
    pub fn dot(&self, other: &BitString) -> u8 {
        assert_eq!(self.len, other.len, "dot of unequal-length bit strings");
        let ones: u32 = self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        (ones & 1) as u8
    }

    /// Whether `pattern` occurs as a contiguous bit substring.
    pub fn contains(&self, pattern: &BitString) -> bool {
        if pattern.len > self.len {
            return false;
        }
        'outer: for offset in 0..=(self.len - pattern.len) {
            for j in 0..pattern.len {
                if self.get(offset + j) != pattern.get(j) {
                    continue 'outer;
                }
            }
            return true;
        }
        false
    }

    /// Expands to a `{0.0, 1.0}` vector, bit 0 first.
    pub fn to_f64_bits(&self) -> Vec<f64> {
        (0..self.len)
            .map(|i| f64::from(u8::from(self.get(i))))
            .collect()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    fn mask_padding(&mut self) {
        let tail = self.len % 8;
        if tail != 0 {
            let last = self.bytes.len() - 1;
            self.bytes[last] &= 0xffu8 << (8 - tail);
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({} bits, {})", self.len, self.to_hex())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

/// A dense bit matrix over GF(2), stored row-wise.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BitMatrix {
    rows: Vec<BitString>,
    cols: usize,
}

impl BitMatrix {
    pub fn from_rows(rows: Vec<BitString>, cols: usize) -> Result<Self> {
        for row in &rows {
            if row.len() != cols {
                return Err(Error::InputLength {
                    expected: cols,
                    got: row.len(),
                });
            }
        }
        Ok(Self { rows, cols })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows: vec![BitString::zeros(cols); rows],
            cols,
        }
    }

    pub fn random<R: RngCore>(rng: &mut R, rows: usize, cols: usize) -> Self {
        Self {
            rows: (0..rows).map(|_| BitString::random(rng, cols)).collect(),
            cols,
        }
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitString {
        &self.rows[i]
    }

    pub fn set_bit(&mut self, row: usize, col: usize, value: bool) {
        self.rows[row].set(col, value);
    }

    pub fn bit(&self, row: usize, col: usize) -> bool {
        self.rows[row].get(col)
    }

    /// Matrix-vector product over GF(2).
    pub fn mul_vec(&self, x: &BitString) -> Result<BitString> {
        if x.len() != self.cols {
            return Err(Error::InputLength {
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut out = BitString::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            out.set(i, row.dot(x) == 1);
        }
        Ok(out)
    }

    /// Hex encoding of each row, joined by `:`. Stable content identifier.
    pub fn to_hex_rows(&self) -> String {
        self.rows
            .iter()
            .map(BitString::to_hex)
            .collect::<Vec<_>>()
            .join(":")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn bit_indexing_and_first_bit() {
        let x = BitString::from_bytes(&[0b1010_0000], 8).unwrap();
        assert!(x.get(0));
        assert!(!x.get(1));
        assert!(x.get(2));
        assert_eq!(x.first_bit(), 1);
        assert_eq!(BitString::zeros(8).first_bit(), 0);
    }

    #[test]
    fn padding_bits_are_masked() {
        let x = BitString::from_bytes(&[0xff], 5).unwrap();
        assert_eq!(x.count_ones(), 5);
        let y = BitString::from_bytes(&[0xf8], 5).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn hex_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for len in [1usize, 7, 8, 64, 128, 130] {
            let x = BitString::random(&mut rng, len);
            let back = BitString::from_hex(&x.to_hex(), len).unwrap();
            assert_eq!(x, back);
        }
    }

    #[test]
    fn substring_search_matches_naive_scan() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let hay = BitString::random(&mut rng, 64);
            let pat = BitString::random(&mut rng, 9);
            let naive = (0..=(64 - 9)).any(|off| (0..9).all(|j| hay.get(off + j) == pat.get(j)));
            assert_eq!(hay.contains(&pat), naive);
        }
    }

    #[test]
    fn contains_finds_planted_pattern() {
        let mut hay = BitString::zeros(32);
        let pat = BitString::from_bits(&[1, 0, 1, 1, 0, 1]);
        for (j, bit) in [1, 0, 1, 1, 0, 1].iter().enumerate() {
            hay.set(13 + j, *bit == 1);
        }
        assert!(hay.contains(&pat));
    }

    #[test]
    fn dot_is_parity_of_and() {
        let a = BitString::from_bits(&[1, 1, 0, 1]);
        let b = BitString::from_bits(&[1, 0, 1, 1]);
        assert_eq!(a.dot(&b), 0); // overlap at bits 0 and 3
        let c = BitString::from_bits(&[1, 0, 0, 0]);
        assert_eq!(a.dot(&c), 1);
    }

    #[test]
    fn mul_vec_zero_input_gives_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let m = BitMatrix::random(&mut rng, 16, 24);
        let out = m.mul_vec(&BitString::zeros(24)).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn mul_vec_rejects_wrong_length() {
        let m = BitMatrix::zeros(4, 8);
        let err = m.mul_vec(&BitString::zeros(9)).unwrap_err();
        assert!(matches!(err, Error::InputLength { expected: 8, got: 9 }));
    }
}
