//! Keyed function oracles and the balanced trigger decoder.
//!
//! Three oracle families share one query interface:
//!
//! * [`StrongPrf`] — HMAC-SHA256 under a 128-bit key, truncated to the
//!   configured output width. Treated as a pseudorandom function.
//! * [`WeakLinearPrf`] — a GF(2)-linear map. Deliberately broken: it is
//!   exactly recoverable from linearly independent samples, which is what
//!   makes the distinguisher reduction observable end to end.
//! * [`RandomOracle`] — a lazily sampled random function. Values are
//!   memoized per session; first-time values are derived from the session
//!   seed and the input so that repeated runs and arbitrary query orders
//!   agree bit for bit.

use std::collections::HashMap;
use std::sync::Mutex;

use hmac::{Hmac, Mac};
use sha2::{Digest, Sha256};

use crate::bits::{BitMatrix, BitString};
use crate::error::{Error, Result};
use crate::gf2;

/// Default trigger input width in bits.
pub const DEFAULT_INPUT_LEN: usize = 64;
/// Default oracle output width in bits.
pub const DEFAULT_OUTPUT_LEN: usize = 128;

type HmacSha256 = Hmac<Sha256>;

fn check_len(expected: usize, x: &BitString) -> Result<()> {
    if x.len() != expected {
        return Err(Error::InputLength {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Expands `block(i)` outputs until `bits` bits are collected.
fn take_bits(bits: usize, mut block: impl FnMut(u32) -> [u8; 32]) -> BitString {
    let mut bytes = Vec::with_capacity(bits.div_ceil(8));
    let mut counter = 0u32;
    while bytes.len() * 8 < bits {
        bytes.extend_from_slice(&block(counter));
        counter += 1;
    }
    bytes.truncate(bits.div_ceil(8));
    BitString::from_bytes(&bytes, bits).expect("sized above")
}

/// HMAC-SHA256 based keyed function, truncated to `output_len` bits.
#[derive(Clone)]
pub struct StrongPrf {
    key: [u8; 16],
    input_len: usize,
    output_len: usize,
}

impl StrongPrf {
    pub fn new(key: [u8; 16], input_len: usize, output_len: usize) -> Result<Self> {
        if input_len == 0 || output_len == 0 {
            return Err(Error::Config(
                "strong PRF input_len and output_len must be positive".into(),
            ));
        }
        Ok(Self {
            key,
            input_len,
            output_len,
        })
    }

    /// Parses a 32-hex-char (128-bit) key.
    pub fn from_hex_key(key_hex: &str, input_len: usize, output_len: usize) -> Result<Self> {
        let bytes = hex::decode(key_hex)
            .map_err(|e| Error::Config(format!("strong PRF key: invalid hex: {e}")))?;
        let key: [u8; 16] = bytes
            .try_into()
            .map_err(|_| Error::Config("strong PRF key must be 16 bytes".into()))?;
        Self::new(key, input_len, output_len)
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn key_hex(&self) -> String {
        hex::encode(self.key)
    }

    pub fn eval(&self, x: &BitString) -> Result<BitString> {
        check_len(self.input_len, x)?;
        Ok(take_bits(self.output_len, |counter| {
            let mut mac =
                HmacSha256::new_from_slice(&self.key).expect("HMAC accepts any key length");
            mac.update(&counter.to_be_bytes());
            mac.update(x.as_bytes());
            mac.finalize().into_bytes().into()
        }))
    }
}

impl std::fmt::Debug for StrongPrf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Key deliberately not printed.
        write!(
            f,
            "StrongPrf({} -> {} bits)",
            self.input_len, self.output_len
        )
    }
}

/// GF(2)-linear keyed function `x -> M * x`.
///
/// Satisfies `F(x ^ y) = F(x) ^ F(y)`, so it is exactly learnable from any
/// spanning sample set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakLinearPrf {
    matrix: BitMatrix,
}

impl WeakLinearPrf {
    pub fn new(matrix: BitMatrix) -> Result<Self> {
        if matrix.row_count() == 0 || matrix.col_count() == 0 {
            return Err(Error::Config("weak PRF matrix must be non-empty".into()));
        }
        Ok(Self { matrix })
    }

    /// Samples a uniform matrix from a seeded stream.
    pub fn random<R: rand::RngCore>(rng: &mut R, output_len: usize, input_len: usize) -> Self {
        Self {
            matrix: BitMatrix::random(rng, output_len, input_len),
        }
    }

    pub fn input_len(&self) -> usize {
        self.matrix.col_count()
    }

    pub fn output_len(&self) -> usize {
        self.matrix.row_count()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn eval(&self, x: &BitString) -> Result<BitString> {
        self.matrix.mul_vec(x)
    }
}

/// One session of a lazily sampled true random function.
///
/// The memo table lives only in memory and is never persisted. Fresh values
/// are derived from `(seed, x)`, so sessions with equal seeds agree across
/// runs and query orders; sessions with different seeds are independent.
#[derive(Debug)]
pub struct RandomOracle {
    seed: u64,
    input_len: usize,
    output_len: usize,
    memo: Mutex<HashMap<BitString, BitString>>,
}

impl RandomOracle {
    pub fn new(seed: u64, input_len: usize, output_len: usize) -> Self {
        Self {
            seed,
            input_len,
            output_len,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// Number of distinct inputs sampled so far in this session.
    pub fn queries(&self) -> usize {
        self.memo.lock().expect("memo table poisoned").len()
    }

    pub fn eval(&self, x: &BitString) -> Result<BitString> {
        check_len(self.input_len, x)?;
        let mut memo = self.memo.lock().expect("memo table poisoned");
        if let Some(v) = memo.get(x) {
            return Ok(v.clone());
        }
        let value = take_bits(self.output_len, |counter| {
            let mut h = Sha256::new();
            h.update(b"probelab.random-oracle.v1");
            h.update(self.seed.to_le_bytes());
            h.update(counter.to_be_bytes());
            h.update((x.len() as u64).to_le_bytes());
            h.update(x.as_bytes());
            h.finalize().into()
        });
        memo.insert(x.clone(), value.clone());
        Ok(value)
    }
}

/// The three oracle families behind one query interface.
#[derive(Debug)]
pub enum OracleKind {
    StrongPrf(StrongPrf),
    WeakLinearPrf(WeakLinearPrf),
    TrueRandom(RandomOracle),
}

impl OracleKind {
    pub fn eval(&self, x: &BitString) -> Result<BitString> {
        match self {
            Self::StrongPrf(f) => f.eval(x),
            Self::WeakLinearPrf(f) => f.eval(x),
            Self::TrueRandom(f) => f.eval(x),
        }
    }

    pub fn input_len(&self) -> usize {
        match self {
            Self::StrongPrf(f) => f.input_len(),
            Self::WeakLinearPrf(f) => f.input_len(),
            Self::TrueRandom(f) => f.input_len(),
        }
    }

    pub fn output_len(&self) -> usize {
        match self {
            Self::StrongPrf(f) => f.output_len(),
            Self::WeakLinearPrf(f) => f.output_len(),
            Self::TrueRandom(f) => f.output_len(),
        }
    }
}

/// Identifier of a balanced predicate beyond the canonical first-bit decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalancedPredicate {
    /// Parity of all bits of `r`.
    OutputParity,
    /// First bit of `r` XOR last bit of `r`.
    FirstXorLast,
    /// The bit of `r` indexed by `popcount(x) mod len(r)`; input-dependent
    /// but still exactly balanced for every fixed `x`.
    PopcountIndexedBit,
}

/// Trigger decoder `g(x, r)`: for every fixed `x`, exactly half of all `r`
/// values decode to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderG {
    /// `g(x, r) = r_1`, the first bit of `r`.
    FirstBit,
    CustomBalanced(BalancedPredicate),
}

impl DecoderG {
    pub fn decode(&self, x: &BitString, r: &BitString) -> Result<u8> {
        if r.is_empty() {
            return Err(Error::InputLength {
                expected: 1,
                got: 0,
            });
        }
        Ok(match self {
            Self::FirstBit => r.first_bit(),
            Self::CustomBalanced(p) => match p {
                BalancedPredicate::OutputParity => (r.count_ones() % 2) as u8,
                BalancedPredicate::FirstXorLast => r.first_bit() ^ u8::from(r.get(r.len() - 1)),
                BalancedPredicate::PopcountIndexedBit => {
                    u8::from(r.get(x.count_ones() % r.len()))
                }
            },
        })
    }

    /// Exhaustively verifies balance at a small output width: for the given
    /// `x`, exactly half of all `2^r_len` values of `r` must decode to 1.
    pub fn is_exactly_balanced(&self, x: &BitString, r_len: usize) -> Result<bool> {
        assert!(r_len <= 16, "exhaustive balance check is for r_len <= 16");
        let mut ones = 0u64;
        for v in 0..(1u64 << r_len) {
            let r = BitString::from_u64(v, r_len);
            ones += u64::from(self.decode(x, &r)?);
        }
        Ok(ones == 1u64 << (r_len - 1))
    }

    /// Fraction of 1-decodes over uniformly sampled `r` values.
    pub fn empirical_density<R: rand::RngCore>(
        &self,
        x: &BitString,
        r_len: usize,
        samples: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let mut ones = 0usize;
        for _ in 0..samples {
            let r = BitString::random(rng, r_len);
            ones += usize::from(self.decode(x, &r)? == 1);
        }
        Ok(ones as f64 / samples as f64)
    }
}

/// Recovers the matrix of a [`WeakLinearPrf`] from `(x, F(x))` samples by
/// GF(2) elimination. Requires the inputs to span the input space.
pub fn solve_weak_prf(samples: &[(BitString, BitString)]) -> Result<BitMatrix> {
    gf2::solve_exact(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn test_key() -> [u8; 16] {
        *b"\x00\x01\x02\x03\x04\x05\x06\x07\x08\x09\x0a\x0b\x0c\x0d\x0e\x0f"
    }

    #[test]
    fn strong_prf_is_deterministic() {
        let f = StrongPrf::new(test_key(), 64, 128).unwrap();
        let x = BitString::from_hex("0123456789abcdef", 64).unwrap();
        assert_eq!(f.eval(&x).unwrap(), f.eval(&x).unwrap());
    }

    #[test]
    fn strong_prf_rejects_wrong_length() {
        let f = StrongPrf::new(test_key(), 64, 128).unwrap();
        let err = f.eval(&BitString::zeros(63)).unwrap_err();
        assert!(matches!(err, Error::InputLength { expected: 64, got: 63 }));
    }

    #[test]
    fn strong_prf_output_bits_look_uniform() {
        // Per-output-bit frequency of 1 over 10^4 distinct inputs stays
        // within 0.5 +/- 0.02 (binomial three-sigma is 0.015).
        let f = StrongPrf::new(test_key(), 64, 128).unwrap();
        let m = 10_000usize;
        let mut counts = vec![0usize; 128];
        for i in 0..m {
            let x = BitString::from_u64(i as u64, 64);
            let y = f.eval(&x).unwrap();
            for (bit, count) in counts.iter_mut().enumerate() {
                *count += usize::from(y.get(bit));
            }
        }
        for (bit, count) in counts.iter().enumerate() {
            let freq = *count as f64 / m as f64;
            assert!(
                (freq - 0.5).abs() <= 0.02,
                "output bit {bit} frequency {freq}"
            );
        }
    }

    #[test]
    fn strong_prf_expands_beyond_one_hash_block() {
        let f = StrongPrf::new(test_key(), 64, 512).unwrap();
        let y = f.eval(&BitString::zeros(64)).unwrap();
        assert_eq!(y.len(), 512);
        // The two 256-bit halves come from different counter blocks.
        let first = BitString::from_bytes(&y.as_bytes()[..32], 256).unwrap();
        let second = BitString::from_bytes(&y.as_bytes()[32..], 256).unwrap();
        assert_ne!(first, second);
    }

    #[test]
    fn weak_prf_zero_maps_to_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let f = WeakLinearPrf::random(&mut rng, 128, 64);
        assert!(f.eval(&BitString::zeros(64)).unwrap().is_zero());
    }

    #[test]
    fn weak_prf_is_linear() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let f = WeakLinearPrf::random(&mut rng, 32, 48);
        for _ in 0..1000 {
            let x = BitString::random(&mut rng, 48);
            let y = BitString::random(&mut rng, 48);
            let lhs = f.eval(&x.xor(&y)).unwrap();
            let rhs = f.eval(&x).unwrap().xor(&f.eval(&y).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn random_oracle_memoizes_within_session() {
        let oracle = RandomOracle::new(9, 64, 128);
        let x = BitString::from_u64(77, 64);
        let a = oracle.eval(&x).unwrap();
        let b = oracle.eval(&x).unwrap();
        assert_eq!(a, b);
        assert_eq!(oracle.queries(), 1);
    }

    #[test]
    fn random_oracle_sessions_with_distinct_seeds_disagree() {
        let a = RandomOracle::new(1, 64, 128);
        let b = RandomOracle::new(2, 64, 128);
        let mut agreements = 0usize;
        for i in 0..10_000u64 {
            let x = BitString::from_u64(i, 64);
            if a.eval(&x).unwrap() == b.eval(&x).unwrap() {
                agreements += 1;
            }
        }
        // Agreement probability per input is 2^-128.
        assert_eq!(agreements, 0);
    }

    #[test]
    fn random_oracle_outputs_have_no_birthday_collisions() {
        let oracle = RandomOracle::new(5, 64, 128);
        let mut seen = std::collections::HashSet::new();
        for i in 0..10_000u64 {
            let y = oracle.eval(&BitString::from_u64(i, 64)).unwrap();
            assert!(seen.insert(y), "collision at input {i}");
        }
    }

    #[test]
    fn random_oracle_is_consistent_under_concurrent_queries() {
        use std::sync::Arc;
        let oracle = Arc::new(RandomOracle::new(3, 64, 128));
        let baseline: Vec<_> = (0..256u64)
            .map(|i| oracle.eval(&BitString::from_u64(i, 64)).unwrap())
            .collect();
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let oracle = Arc::clone(&oracle);
                std::thread::spawn(move || {
                    let mut out = Vec::new();
                    for i in 0..256u64 {
                        let i = (i + t * 61) % 256; // different orders per thread
                        out.push((i, oracle.eval(&BitString::from_u64(i, 64)).unwrap()));
                    }
                    out
                })
            })
            .collect();
        for h in handles {
            for (i, v) in h.join().unwrap() {
                assert_eq!(v, baseline[i as usize]);
            }
        }
    }

    #[test]
    fn first_bit_decoder_reads_bit_zero() {
        let g = DecoderG::FirstBit;
        let x = BitString::zeros(8);
        let mut r = BitString::zeros(16);
        assert_eq!(g.decode(&x, &r).unwrap(), 0);
        r.set(0, true);
        assert_eq!(g.decode(&x, &r).unwrap(), 1);
    }

    #[test]
    fn all_decoders_are_exactly_balanced_at_small_widths() {
        let decoders = [
            DecoderG::FirstBit,
            DecoderG::CustomBalanced(BalancedPredicate::OutputParity),
            DecoderG::CustomBalanced(BalancedPredicate::FirstXorLast),
            DecoderG::CustomBalanced(BalancedPredicate::PopcountIndexedBit),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for g in decoders {
            for r_len in [2usize, 8, 12, 16] {
                for _ in 0..4 {
                    let x = BitString::random(&mut rng, 24);
                    assert!(
                        g.is_exactly_balanced(&x, r_len).unwrap(),
                        "{g:?} unbalanced at r_len {r_len}"
                    );
                }
            }
        }
    }

    #[test]
    fn first_bit_empirical_density_at_full_width() {
        // 10^5 uniform draws; tolerance 0.005 (three-sigma is 0.00474).
        let g = DecoderG::FirstBit;
        let x = BitString::zeros(64);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let density = g.empirical_density(&x, 128, 100_000, &mut rng).unwrap();
        assert!((density - 0.5).abs() <= 0.005, "density {density}");
    }

    #[test]
    fn solve_weak_prf_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let f = WeakLinearPrf::random(&mut rng, 128, 64);
        let samples: Vec<_> = (0..96)
            .map(|_| {
                let x = BitString::random(&mut rng, 64);
                let y = f.eval(&x).unwrap();
                (x, y)
            })
            .collect();
        let recovered = solve_weak_prf(&samples).unwrap();
        assert_eq!(&recovered, f.matrix());
    }

    #[test]
    fn solve_weak_prf_rank_deficient_on_repeated_zero() {
        let samples = vec![(BitString::zeros(64), BitString::zeros(128)); 70];
        let err = solve_weak_prf(&samples).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }
}
