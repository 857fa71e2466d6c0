//! Seeded randomness primitives shared by every hash scheme: a single master
//! seed plus string labels reproduces all 2-wise independent bucket/sign
//! families, Gaussian projection rows, and uniform offsets bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Mersenne prime 2^61 - 1, the modulus of the 2-wise independent families.
pub const MERSENNE_P: u64 = (1u64 << 61) - 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// splitmix64 finalizer; a strong 64-bit mixing function.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root of all randomness in a run. Equal seeds plus equal derivation labels
/// yield bit-identical downstream draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct MasterSeed(pub u64);

impl MasterSeed {
    pub fn value(self) -> u64 {
        self.0
    }

    /// Deterministic, label-distinct substream seed.
    pub fn derive(self, label: &str) -> MasterSeed {
        derive_seed(self, label)
    }

    /// Seeded generator for this seed's stream.
    pub fn rng(self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.0)
    }
}

/// Splits `master` into an independent substream identified by `label`.
///
/// Panics if `label` is empty.
pub fn derive_seed(master: MasterSeed, label: &str) -> MasterSeed {
    assert!(!label.is_empty(), "derivation label must be nonempty");
    MasterSeed(mix64(master.0.wrapping_add(mix64(fnv1a(label.as_bytes())))))
}

/// Degree-1 polynomial hash ((a*(i+1) + b) mod P) mod m over P = 2^61 - 1.
///
/// The input index is shifted by +1 so index 0 is not a fixed point of
/// families with b = 0. The construction is 2-universal over the draw of
/// (a, b).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoWiseFamily {
    a: u64,
    b: u64,
    domain: usize,
    range: usize,
}

impl TwoWiseFamily {
    /// Draws coefficients a in [1, P-1], b in [0, P-1] from the seeded stream.
    pub fn new(seed: MasterSeed, domain: usize, range: usize) -> Result<Self> {
        if domain == 0 {
            return Err(Error::EmptyDomain);
        }
        if range == 0 {
            return Err(Error::EmptyRange);
        }
        if range as u64 > MERSENNE_P - 1 {
            return Err(Error::RangeTooLarge(range as u64, MERSENNE_P - 1));
        }
        let mut rng = seed.rng();
        let a = rng.random_range(1..MERSENNE_P);
        let b = rng.random_range(0..MERSENNE_P);
        Ok(TwoWiseFamily {
            a,
            b,
            domain,
            range,
        })
    }

    /// Builds a family from explicit coefficients (tests, worked examples).
    pub fn from_coefficients(a: u64, b: u64, domain: usize, range: usize) -> Result<Self> {
        if domain == 0 {
            return Err(Error::EmptyDomain);
        }
        if range == 0 {
            return Err(Error::EmptyRange);
        }
        if range as u64 > MERSENNE_P - 1 {
            return Err(Error::RangeTooLarge(range as u64, MERSENNE_P - 1));
        }
        if a == 0 || a >= MERSENNE_P {
            return Err(Error::BadCoefficientA(a));
        }
        if b >= MERSENNE_P {
            return Err(Error::BadCoefficientB(b));
        }
        Ok(TwoWiseFamily {
            a,
            b,
            domain,
            range,
        })
    }

    /// Bucket of index `i`. Panics if `i` is outside the domain.
    #[inline]
    pub fn eval(&self, i: usize) -> usize {
        assert!(i < self.domain, "index {} outside domain {}", i, self.domain);
        let x = self.a as u128 * (i as u128 + 1) + self.b as u128;
        ((x % MERSENNE_P as u128) % self.range as u128) as usize
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn coefficients(&self) -> (u64, u64) {
        (self.a, self.b)
    }

    /// Full evaluation table over the domain (space-accounting experiments).
    pub fn materialize(&self) -> Vec<usize> {
        (0..self.domain).map(|i| self.eval(i)).collect()
    }
}

/// Random sign function s:[d] -> {+1, -1}; parity 0 of the underlying 2-wise
/// family maps to +1, parity 1 to -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignFamily {
    base: TwoWiseFamily,
}

impl SignFamily {
    pub fn new(seed: MasterSeed, domain: usize) -> Result<Self> {
        Ok(SignFamily {
            base: TwoWiseFamily::new(seed, domain, 2)?,
        })
    }

    pub fn from_coefficients(a: u64, b: u64, domain: usize) -> Result<Self> {
        Ok(SignFamily {
            base: TwoWiseFamily::from_coefficients(a, b, domain, 2)?,
        })
    }

    /// Sign of index `i` as an exact +-1.0. Panics outside the domain.
    #[inline]
    pub fn eval(&self, i: usize) -> f64 {
        if self.base.eval(i) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn domain(&self) -> usize {
        self.base.domain()
    }

    pub fn coefficients(&self) -> (u64, u64) {
        self.base.coefficients()
    }

    pub fn materialize(&self) -> Vec<f64> {
        (0..self.domain()).map(|i| self.eval(i)).collect()
    }
}

/// Materialized m x d matrix of i.i.d. standard normal entries.
///
/// Sampling uses the ziggurat method of `rand_distr::StandardNormal` over a
/// ChaCha12 stream; regeneration from the same seed is bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GaussianMatrix {
    pub fn sample(seed: MasterSeed, rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be nonempty");
        let mut rng = seed.rng();
        let data = (0..rows * cols)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        GaussianMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `r` as a slice of length `cols`.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Inner product of row `r` with `p` (`p` may be shorter than `cols`;
    /// missing trailing coordinates count as zero).
    #[inline]
    pub fn dot_row(&self, r: usize, p: &[f64]) -> f64 {
        let row = self.row(r);
        assert!(p.len() <= self.cols, "input longer than projection row");
        row.iter().zip(p.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// m offsets drawn uniformly from the half-open interval [0, w).
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetVector {
    values: Vec<f64>,
    width: f64,
}

impl OffsetVector {
    pub fn sample(seed: MasterSeed, m: usize, w: f64) -> Result<Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidWidth(w));
        }
        let mut rng = seed.rng();
        let values = (0..m).map(|_| rng.random_range(0.0..w)).collect();
        Ok(OffsetVector { values, width: w })
    }

    /// Wraps explicit offsets, validating each lies in [0, w).
    pub fn from_values(values: Vec<f64>, w: f64) -> Result<Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidWidth(w));
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..w).contains(v)) {
            return Err(Error::InvalidWidth(bad));
        }
        Ok(OffsetVector { values, width: w })
    }

    #[inline]
    pub fn get(&self, l: usize) -> f64 {
        self.values[l]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}
