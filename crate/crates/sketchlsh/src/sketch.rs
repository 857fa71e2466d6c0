//! Count sketch and higher-order count sketch of dense vectors, including the
//! vector<->tensor index mapping, near-equal mode factoring, and logical zero
//! padding.

use crate::error::{Error, Result};
use crate::hashcore::{MasterSeed, SignFamily, TwoWiseFamily};

/// Column-major flat index of `indices` within a tensor of shape `dims`
/// (0-based, mode 0 fastest): j = i_0 + sum_{k>=1} i_k * prod_{t<k} dims[t].
///
/// Panics if the shapes disagree or a component is out of range.
pub fn flat_index(indices: &[usize], dims: &[usize]) -> usize {
    assert_eq!(indices.len(), dims.len(), "rank mismatch");
    let mut j = 0;
    let mut stride = 1;
    for (k, (&i, &dk)) in indices.iter().zip(dims.iter()).enumerate() {
        assert!(i < dk, "index {i} out of range for mode {k} of size {dk}");
        j += i * stride;
        stride *= dk;
    }
    j
}

/// Inverse of [`flat_index`]: mode indices of flat position `j` in `dims`.
///
/// Panics if `j` is outside the tensor.
pub fn unflatten(j: usize, dims: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    assert!(j < total, "flat index {j} outside tensor of {total} cells");
    let mut rest = j;
    dims.iter()
        .map(|&dk| {
            let i = rest % dk;
            rest /= dk;
            i
        })
        .collect()
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Mode dimensions for reshaping a d-vector into an `order`-mode tensor:
/// all modes within +-1 of each other, product at least `d` and minimal
/// under that shape. Positions past `d` are logical zero padding.
///
/// Returns `(mode_d, padded_d)`. Panics on `d = 0` or `order = 0`.
pub fn tensorize(d: usize, order: usize) -> (Vec<usize>, usize) {
    assert!(d >= 1, "dimension must be at least 1");
    assert!(order >= 1, "order must be at least 1");
    // Smallest c with c^order >= d.
    let mut c = (d as f64).powf(1.0 / order as f64).floor().max(1.0) as usize;
    while checked_pow(c, order).map_or(true, |p| p < d) {
        c += 1;
    }
    while c > 1 && checked_pow(c - 1, order).is_some_and(|p| p >= d) {
        c -= 1;
    }
    // Largest count of modes that can drop to c-1 while the product stays >= d.
    let mut low = 0;
    while c > 1 && low < order {
        let prod = checked_pow(c - 1, low + 1)
            .and_then(|a| checked_pow(c, order - low - 1).map(|b| a as u128 * b as u128));
        match prod {
            Some(p) if p >= d as u128 => low += 1,
            _ => break,
        }
    }
    let mut modes = vec![c - 1; low];
    modes.extend(std::iter::repeat(c).take(order - low));
    let padded: usize = modes.iter().product();
    (modes, padded)
}

/// Splits a code length `m` into `order` factors with exact product `m`,
/// each factor chosen greedily as the divisor closest to the geometric
/// target, returned in ascending order.
///
/// Panics on `m = 0` or `order = 0`.
pub fn factor_code_length(m: usize, order: usize) -> Vec<usize> {
    assert!(m >= 1, "code length must be at least 1");
    assert!(order >= 1, "order must be at least 1");
    let mut rem = m;
    let mut modes = Vec::with_capacity(order);
    for left in (1..=order).rev() {
        if left == 1 {
            modes.push(rem);
            break;
        }
        let target = (rem as f64).powf(1.0 / left as f64);
        let mut best = 1;
        let mut best_dist = f64::INFINITY;
        for q in 1..=rem {
            if rem % q == 0 {
                let dist = (q as f64 - target).abs();
                if dist < best_dist {
                    best = q;
                    best_dist = dist;
                }
            }
        }
        modes.push(best);
        rem /= best;
    }
    modes.sort_unstable();
    modes
}

/// Count-sketch plan: one 2-wise bucket family h:[d] -> [m] and one sign
/// family s:[d] -> {+1,-1}. The sketch is out[h(i)] += s(i) * p_i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsPlan {
    d: usize,
    m: usize,
    bucket: TwoWiseFamily,
    sign: SignFamily,
}

impl CsPlan {
    /// Seeds fresh families. Uses the same derivation labels as an order-1
    /// [`HcsPlan`], so the two constructions agree bit-for-bit.
    pub fn new(seed: MasterSeed, d: usize, m: usize) -> Result<Self> {
        let bucket = TwoWiseFamily::new(seed.derive("mode0/bucket"), d, m)?;
        let sign = SignFamily::new(seed.derive("mode0/sign"), d)?;
        Ok(CsPlan { d, m, bucket, sign })
    }

    /// Assembles a plan from explicit families.
    pub fn from_parts(bucket: TwoWiseFamily, sign: SignFamily) -> Result<Self> {
        if bucket.domain() != sign.domain() {
            return Err(Error::BadPlan(format!(
                "bucket domain {} != sign domain {}",
                bucket.domain(),
                sign.domain()
            )));
        }
        Ok(CsPlan {
            d: bucket.domain(),
            m: bucket.range(),
            bucket,
            sign,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn sketch_dim(&self) -> usize {
        self.m
    }

    pub fn bucket(&self) -> &TwoWiseFamily {
        &self.bucket
    }

    pub fn sign(&self) -> &SignFamily {
        &self.sign
    }

    /// Sketches `p` in a single pass; time linear in d, independent of m.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: p.len(),
            });
        }
        let mut out = vec![0.0; self.m];
        for (i, &x) in p.iter().enumerate() {
            out[self.bucket.eval(i)] += self.sign.eval(i) * x;
        }
        Ok(out)
    }
}

/// Higher-order count-sketch plan: the input is viewed as an N-mode tensor
/// with near-equal mode dimensions, each mode gets its own bucket and sign
/// family, and the sketched tensor is flattened back to an m-vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HcsPlan {
    mode_d: Vec<usize>,
    mode_m: Vec<usize>,
    buckets: Vec<TwoWiseFamily>,
    signs: Vec<SignFamily>,
    padded_d: usize,
    m: usize,
}

impl HcsPlan {
    /// Seeds per-mode families for input dimension `d`, code length `m`, and
    /// tensor order `order`, with labels "mode{k}/bucket" and "mode{k}/sign".
    pub fn new(seed: MasterSeed, d: usize, m: usize, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::ZeroOrder);
        }
        if d == 0 {
            return Err(Error::EmptyDomain);
        }
        if m == 0 {
            return Err(Error::ZeroCodeLength);
        }
        let (mode_d, padded_d) = tensorize(d, order);
        let mode_m = factor_code_length(m, order);
        let mut buckets = Vec::with_capacity(order);
        let mut signs = Vec::with_capacity(order);
        for k in 0..order {
            buckets.push(TwoWiseFamily::new(
                seed.derive(&format!("mode{k}/bucket")),
                mode_d[k],
                mode_m[k],
            )?);
            signs.push(SignFamily::new(
                seed.derive(&format!("mode{k}/sign")),
                mode_d[k],
            )?);
        }
        Ok(HcsPlan {
            mode_d,
            mode_m,
            buckets,
            signs,
            padded_d,
            m,
        })
    }

    /// Assembles a plan from explicit per-mode families (bucket and sign
    /// domains must agree mode by mode).
    pub fn from_parts(buckets: Vec<TwoWiseFamily>, signs: Vec<SignFamily>) -> Result<Self> {
        if buckets.is_empty() {
            return Err(Error::ZeroOrder);
        }
        if buckets.len() != signs.len() {
            return Err(Error::BadPlan(format!(
                "{} bucket families vs {} sign families",
                buckets.len(),
                signs.len()
            )));
        }
        for (k, (b, s)) in buckets.iter().zip(signs.iter()).enumerate() {
            if b.domain() != s.domain() {
                return Err(Error::BadPlan(format!(
                    "mode {k}: bucket domain {} != sign domain {}",
                    b.domain(),
                    s.domain()
                )));
            }
        }
        let mode_d: Vec<usize> = buckets.iter().map(|b| b.domain()).collect();
        let mode_m: Vec<usize> = buckets.iter().map(|b| b.range()).collect();
        let padded_d = mode_d
            .iter()
            .try_fold(1usize, |acc, &dk| acc.checked_mul(dk))
            .ok_or_else(|| Error::BadPlan("padded dimension overflows".into()))?;
        let m = mode_m
            .iter()
            .try_fold(1usize, |acc, &mk| acc.checked_mul(mk))
            .ok_or_else(|| Error::BadPlan("code length overflows".into()))?;
        Ok(HcsPlan {
            mode_d,
            mode_m,
            buckets,
            signs,
            padded_d,
            m,
        })
    }

    pub fn order(&self) -> usize {
        self.mode_d.len()
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_d
    }

    pub fn mode_code_lengths(&self) -> &[usize] {
        &self.mode_m
    }

    pub fn padded_dim(&self) -> usize {
        self.padded_d
    }

    pub fn sketch_dim(&self) -> usize {
        self.m
    }

    pub fn buckets(&self) -> &[TwoWiseFamily] {
        &self.buckets
    }

    pub fn signs(&self) -> &[SignFamily] {
        &self.signs
    }

    /// Sketches `p` (zero-padded up to the tensor size if shorter); time
    /// linear in the padded dimension.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() > self.padded_d {
            return Err(Error::InputTooLong {
                padded: self.padded_d,
                got: p.len(),
            });
        }
        let order = self.order();
        let mut m_stride = vec![1usize; order];
        for k in 1..order {
            m_stride[k] = m_stride[k - 1] * self.mode_m[k - 1];
        }
        let mut out = vec![0.0; self.m];
        // Walk positions in flat order, carrying the mode indices as a
        // mixed-radix counter; padding positions past p.len() contribute 0
        // and are skipped.
        let mut idx = vec![0usize; order];
        for &x in p {
            let mut cell = 0;
            let mut sign = 1.0;
            for k in 0..order {
                cell += self.buckets[k].eval(idx[k]) * m_stride[k];
                sign *= self.signs[k].eval(idx[k]);
            }
            out[cell] += sign * x;
            for k in 0..order {
                idx[k] += 1;
                if idx[k] < self.mode_d[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(out)
    }
}
