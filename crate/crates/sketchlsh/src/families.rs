//! The six hash families. Euclidean schemes emit signed integer codes via
//! randomized floor discretization; cosine schemes emit sign bits. The
//! classical pair projects with a dense Gaussian matrix (time and space
//! proportional to m*d); the sketched variants replace the projection with a
//! count sketch or a higher-order count sketch (time proportional to d, space
//! independent of m).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hashcore::{GaussianMatrix, MasterSeed, OffsetVector};
use crate::sketch::{CsPlan, HcsPlan};

/// Which of the six hash schemes a family implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SchemeKind {
    E2lsh,
    CsE2lsh,
    HcsE2lsh,
    Srp,
    CsSrp,
    HcsSrp,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::E2lsh,
        SchemeKind::CsE2lsh,
        SchemeKind::HcsE2lsh,
        SchemeKind::Srp,
        SchemeKind::CsSrp,
        SchemeKind::HcsSrp,
    ];

    /// Euclidean schemes emit integer codes; the rest emit bits.
    pub fn is_euclidean(self) -> bool {
        matches!(
            self,
            SchemeKind::E2lsh | SchemeKind::CsE2lsh | SchemeKind::HcsE2lsh
        )
    }

    pub fn is_cosine(self) -> bool {
        !self.is_euclidean()
    }

    /// True for the count-sketch and higher-order variants.
    pub fn is_sketched(self) -> bool {
        !matches!(self, SchemeKind::E2lsh | SchemeKind::Srp)
    }

    /// True for the higher-order (tensorized) variants.
    pub fn is_tensorized(self) -> bool {
        matches!(self, SchemeKind::HcsE2lsh | SchemeKind::HcsSrp)
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::E2lsh => "e2lsh",
            SchemeKind::CsE2lsh => "cs-e2lsh",
            SchemeKind::HcsE2lsh => "hcs-e2lsh",
            SchemeKind::Srp => "srp",
            SchemeKind::CsSrp => "cs-srp",
            SchemeKind::HcsSrp => "hcs-srp",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "e2lsh" => Ok(SchemeKind::E2lsh),
            "cs-e2lsh" => Ok(SchemeKind::CsE2lsh),
            "hcs-e2lsh" => Ok(SchemeKind::HcsE2lsh),
            "srp" => Ok(SchemeKind::Srp),
            "cs-srp" => Ok(SchemeKind::CsSrp),
            "hcs-srp" => Ok(SchemeKind::HcsSrp),
            other => Err(Error::UnknownScheme(other.to_string())),
        }
    }
}

/// Parameters needed to instantiate a family: `w` applies to Euclidean
/// schemes, `order` to higher-order schemes; both are ignored elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub kind: SchemeKind,
    pub d: usize,
    pub m: usize,
    pub w: f64,
    pub order: usize,
}

impl FamilyParams {
    /// Defaults: bucket width 4.0, tensor order 2.
    pub fn new(kind: SchemeKind, d: usize, m: usize) -> Self {
        FamilyParams {
            kind,
            d,
            m,
            w: 4.0,
            order: 2,
        }
    }

    pub fn with_w(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }
}

/// The projection backing a family: a dense Gaussian matrix, a count-sketch
/// plan, or a higher-order count-sketch plan.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Dense(GaussianMatrix),
    Sketch(CsPlan),
    Tensor(HcsPlan),
}

/// A fully seeded, immutable hash family emitting m-coordinate codes for
/// d-vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyInstance {
    params: FamilyParams,
    projection: Projection,
    offsets: Option<OffsetVector>,
}

/// An m-coordinate hash code: signed integers for Euclidean schemes, 0/1
/// bits for cosine schemes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HashCode {
    Euclidean(Vec<i64>),
    Cosine(Vec<u8>),
}

impl HashCode {
    pub fn len(&self) -> usize {
        match self {
            HashCode::Euclidean(v) => v.len(),
            HashCode::Cosine(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_euclidean(&self) -> Option<&[i64]> {
        match self {
            HashCode::Euclidean(v) => Some(v),
            HashCode::Cosine(_) => None,
        }
    }

    pub fn as_cosine(&self) -> Option<&[u8]> {
        match self {
            HashCode::Cosine(v) => Some(v),
            HashCode::Euclidean(_) => None,
        }
    }
}

/// floor((x + b) / w): the randomized discretization of a projection value.
///
/// Panics unless w > 0 and 0 <= b < w.
#[inline]
pub fn discretize(x: f64, b: f64, w: f64) -> f64 {
    assert!(w > 0.0, "width must be positive");
    assert!((0.0..w).contains(&b), "offset must lie in [0, w)");
    ((x + b) / w).floor()
}

/// [`discretize`] with a range check into the signed 64-bit code space.
#[inline]
pub fn discretize_checked(x: f64, b: f64, w: f64) -> Result<i64> {
    let v = discretize(x, b, w);
    if v.is_finite() && (i64::MIN as f64..=i64::MAX as f64).contains(&v) {
        Ok(v as i64)
    } else {
        Err(Error::CodeOverflow(v))
    }
}

impl FamilyInstance {
    /// Seeds a family for `params`. Substreams are derived with fixed labels
    /// ("gaussian", "offset", "mode{k}/bucket", "mode{k}/sign"), so a
    /// count-sketch family and an order-1 higher-order family built from the
    /// same seed agree bit-for-bit.
    pub fn new(seed: MasterSeed, params: FamilyParams) -> Result<Self> {
        if params.d == 0 {
            return Err(Error::EmptyDomain);
        }
        if params.m == 0 {
            return Err(Error::ZeroCodeLength);
        }
        let projection = match params.kind {
            SchemeKind::E2lsh | SchemeKind::Srp => Projection::Dense(GaussianMatrix::sample(
                seed.derive("gaussian"),
                params.m,
                params.d,
            )),
            SchemeKind::CsE2lsh | SchemeKind::CsSrp => {
                Projection::Sketch(CsPlan::new(seed, params.d, params.m)?)
            }
            SchemeKind::HcsE2lsh | SchemeKind::HcsSrp => {
                Projection::Tensor(HcsPlan::new(seed, params.d, params.m, params.order)?)
            }
        };
        let offsets = if params.kind.is_euclidean() {
            Some(OffsetVector::sample(
                seed.derive("offset"),
                params.m,
                params.w,
            )?)
        } else {
            None
        };
        Ok(FamilyInstance {
            params,
            projection,
            offsets,
        })
    }

    /// Assembles a family from explicit parts (tests, worked examples).
    pub fn from_parts(
        params: FamilyParams,
        projection: Projection,
        offsets: Option<OffsetVector>,
    ) -> Result<Self> {
        let ok = match (params.kind, &projection) {
            (SchemeKind::E2lsh | SchemeKind::Srp, Projection::Dense(g)) => {
                g.rows() == params.m && g.cols() == params.d
            }
            (SchemeKind::CsE2lsh | SchemeKind::CsSrp, Projection::Sketch(p)) => {
                p.input_dim() == params.d && p.sketch_dim() == params.m
            }
            (SchemeKind::HcsE2lsh | SchemeKind::HcsSrp, Projection::Tensor(p)) => {
                p.padded_dim() >= params.d && p.sketch_dim() == params.m
            }
            _ => false,
        };
        if !ok {
            return Err(Error::BadPlan(format!(
                "projection does not match scheme {} at d={}, m={}",
                params.kind, params.d, params.m
            )));
        }
        match (&offsets, params.kind.is_euclidean()) {
            (Some(o), true) if o.len() == params.m => {}
            (None, false) => {}
            _ => {
                return Err(Error::BadPlan(format!(
                    "offsets must be present with length m exactly for Euclidean schemes ({})",
                    params.kind
                )))
            }
        }
        Ok(FamilyInstance {
            params,
            projection,
            offsets,
        })
    }

    pub fn kind(&self) -> SchemeKind {
        self.params.kind
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn offsets(&self) -> Option<&OffsetVector> {
        self.offsets.as_ref()
    }

    /// Raw projection of `p` before discretization or sign-taking: the m
    /// Gaussian inner products, or the (scaled) sketch coordinates.
    pub fn project(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.params.d {
            return Err(Error::DimensionMismatch {
                expected: self.params.d,
                got: p.len(),
            });
        }
        match &self.projection {
            Projection::Dense(g) => Ok((0..self.params.m).map(|l| g.dot_row(l, p)).collect()),
            Projection::Sketch(plan) => {
                let mut s = plan.apply(p)?;
                if self.params.kind.is_euclidean() {
                    let scale = (self.params.m as f64).sqrt();
                    for v in &mut s {
                        *v *= scale;
                    }
                }
                Ok(s)
            }
            Projection::Tensor(plan) => {
                let mut s = plan.apply(p)?;
                if self.params.kind.is_euclidean() {
                    let scale = (self.params.m as f64).sqrt();
                    for v in &mut s {
                        *v *= scale;
                    }
                }
                Ok(s)
            }
        }
    }

    /// Hashes `p` to its m-coordinate code.
    pub fn hash(&self, p: &[f64]) -> Result<HashCode> {
        let z = self.project(p)?;
        if self.params.kind.is_euclidean() {
            let offsets = self.offsets.as_ref().expect("Euclidean family has offsets");
            let mut code = Vec::with_capacity(self.params.m);
            for (l, &v) in z.iter().enumerate() {
                code.push(discretize_checked(v, offsets.get(l), self.params.w)?);
            }
            Ok(HashCode::Euclidean(code))
        } else {
            Ok(HashCode::Cosine(
                z.iter().map(|&v| (v > 0.0) as u8).collect(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashcore::{SignFamily, TwoWiseFamily};
    use rand::Rng;

    fn worked_cs_plan() -> CsPlan {
        let bucket = TwoWiseFamily::from_coefficients(1, 1, 4, 2).unwrap();
        let sign = SignFamily::from_coefficients(1, 1, 4).unwrap();
        CsPlan::from_parts(bucket, sign).unwrap()
    }

    fn worked_hcs_plan() -> HcsPlan {
        let buckets = vec![
            TwoWiseFamily::from_coefficients(1, 0, 2, 1).unwrap(),
            TwoWiseFamily::from_coefficients(1, 0, 2, 1).unwrap(),
        ];
        let signs = vec![
            SignFamily::from_coefficients(1, 1, 2).unwrap(),
            SignFamily::from_coefficients(2, 2, 2).unwrap(),
        ];
        HcsPlan::from_parts(buckets, signs).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for kind in SchemeKind::ALL {
            assert_eq!(kind.name().parse::<SchemeKind>().unwrap(), kind);
        }
        assert_eq!("CS-E2LSH".parse::<SchemeKind>().unwrap(), SchemeKind::CsE2lsh);
        assert!(matches!(
            "simhash".parse::<SchemeKind>(),
            Err(Error::UnknownScheme(_))
        ));
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize(2.3, 1.0, 4.0), 0.0);
        assert_eq!(discretize(-5.0, 1.0, 4.0), -1.0);
        assert_eq!(discretize_checked(2.3, 1.0, 4.0).unwrap(), 0);
    }

    #[test]
    fn discretize_shift_identity() {
        let mut rng = MasterSeed(31).rng();
        for _ in 0..10_000 {
            let w = rng.random_range(0.1..10.0);
            let b = rng.random_range(0.0..w);
            let x = rng.random_range(-100.0..100.0);
            assert_eq!(discretize(x + w, b, w), discretize(x, b, w) + 1.0);
        }
    }

    #[test]
    fn discretize_checked_rejects_overflow() {
        assert!(matches!(
            discretize_checked(1e300, 0.5, 1.0),
            Err(Error::CodeOverflow(_))
        ));
    }

    #[test]
    fn code_length_is_m_for_all_schemes() {
        let seed = MasterSeed(1);
        let mut rng = MasterSeed(2).rng();
        let p: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        for kind in SchemeKind::ALL {
            let fam = FamilyInstance::new(seed, FamilyParams::new(kind, 50, 6)).unwrap();
            let code = fam.hash(&p).unwrap();
            assert_eq!(code.len(), 6, "{kind}");
            assert_eq!(kind.is_euclidean(), code.as_euclidean().is_some());
        }
    }

    #[test]
    fn zero_vector_hashes_to_zero_code() {
        let seed = MasterSeed(17);
        let zero = vec![0.0; 32];
        for kind in SchemeKind::ALL {
            let fam = FamilyInstance::new(seed, FamilyParams::new(kind, 32, 4)).unwrap();
            match fam.hash(&zero).unwrap() {
                HashCode::Euclidean(code) => assert!(code.iter().all(|&c| c == 0), "{kind}"),
                HashCode::Cosine(bits) => assert!(bits.iter().all(|&b| b == 0), "{kind}"),
            }
        }
    }

    #[test]
    fn e2lsh_matches_hand_computation() {
        let seed = MasterSeed(8);
        let fam = FamilyInstance::new(seed, FamilyParams::new(SchemeKind::E2lsh, 8, 2)).unwrap();
        let mut rng = MasterSeed(9).rng();
        let p: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = match fam.projection() {
            Projection::Dense(g) => g,
            _ => unreachable!(),
        };
        let offsets = fam.offsets().unwrap();
        let expected: Vec<i64> = (0..2)
            .map(|l| {
                let z: f64 = g.row(l).iter().zip(p.iter()).map(|(a, b)| a * b).sum();
                discretize(z, offsets.get(l), 4.0) as i64
            })
            .collect();
        assert_eq!(fam.hash(&p).unwrap(), HashCode::Euclidean(expected));
    }

    #[test]
    fn e2lsh_projection_shift_bumps_one_coordinate() {
        let seed = MasterSeed(4);
        let fam = FamilyInstance::new(seed, FamilyParams::new(SchemeKind::E2lsh, 16, 3)).unwrap();
        let mut rng = MasterSeed(5).rng();
        let p: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = fam.project(&p).unwrap();
        let offsets = fam.offsets().unwrap();
        for l in 0..3 {
            assert_eq!(
                discretize(z[l] + 4.0, offsets.get(l), 4.0),
                discretize(z[l], offsets.get(l), 4.0) + 1.0
            );
        }
    }

    #[test]
    fn srp_matches_signs_and_scale_invariance() {
        let seed = MasterSeed(6);
        let fam = FamilyInstance::new(seed, FamilyParams::new(SchemeKind::Srp, 8, 4)).unwrap();
        let mut rng = MasterSeed(7).rng();
        let p: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = match fam.projection() {
            Projection::Dense(g) => g,
            _ => unreachable!(),
        };
        let expected: Vec<u8> = (0..4)
            .map(|l| {
                let z: f64 = g.row(l).iter().zip(p.iter()).map(|(a, b)| a * b).sum();
                (z > 0.0) as u8
            })
            .collect();
        assert_eq!(fam.hash(&p).unwrap(), HashCode::Cosine(expected));
        for c in [0.5, 3.7, 1024.0] {
            let scaled: Vec<f64> = p.iter().map(|x| c * x).collect();
            assert_eq!(fam.hash(&p).unwrap(), fam.hash(&scaled).unwrap());
        }
    }

    #[test]
    fn cosine_sketch_schemes_are_scale_invariant() {
        let seed = MasterSeed(20);
        let mut rng = MasterSeed(21).rng();
        let p: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        for kind in [SchemeKind::CsSrp, SchemeKind::HcsSrp] {
            let fam = FamilyInstance::new(seed, FamilyParams::new(kind, 60, 8)).unwrap();
            for c in [0.25, 2.0f64.powi(10), 7.3] {
                let scaled: Vec<f64> = p.iter().map(|x| c * x).collect();
                assert_eq!(fam.hash(&p).unwrap(), fam.hash(&scaled).unwrap(), "{kind} c={c}");
            }
        }
    }

    #[test]
    fn cs_e2lsh_worked_example() {
        let params = FamilyParams::new(SchemeKind::CsE2lsh, 4, 2);
        let offsets = OffsetVector::from_values(vec![1.0, 1.0], 4.0).unwrap();
        let fam =
            FamilyInstance::from_parts(params, Projection::Sketch(worked_cs_plan()), Some(offsets))
                .unwrap();
        // Sketch of (1,2,3,4) is (4,-6); codes floor((sqrt(2)*4+1)/4) = 1 and
        // floor((sqrt(2)*(-6)+1)/4) = -2.
        assert_eq!(
            fam.hash(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            HashCode::Euclidean(vec![1, -2])
        );
    }

    #[test]
    fn cs_srp_worked_example() {
        let params = FamilyParams::new(SchemeKind::CsSrp, 4, 2);
        let fam =
            FamilyInstance::from_parts(params, Projection::Sketch(worked_cs_plan()), None).unwrap();
        assert_eq!(
            fam.hash(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            HashCode::Cosine(vec![1, 0])
        );
    }

    #[test]
    fn hcs_e2lsh_worked_example() {
        let params = FamilyParams::new(SchemeKind::HcsE2lsh, 4, 1);
        let offsets = OffsetVector::from_values(vec![0.5], 4.0).unwrap();
        let fam =
            FamilyInstance::from_parts(params, Projection::Tensor(worked_hcs_plan()), Some(offsets))
                .unwrap();
        // Sketch scalar is -2 with m=1: floor((-2 + 0.5)/4) = -1.
        assert_eq!(
            fam.hash(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            HashCode::Euclidean(vec![-1])
        );
    }

    #[test]
    fn hcs_srp_worked_example() {
        let params = FamilyParams::new(SchemeKind::HcsSrp, 4, 1);
        let fam =
            FamilyInstance::from_parts(params, Projection::Tensor(worked_hcs_plan()), None).unwrap();
        assert_eq!(
            fam.hash(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            HashCode::Cosine(vec![0])
        );
    }

    #[test]
    fn order_one_tensor_schemes_match_sketch_schemes() {
        let seed = MasterSeed(33);
        let mut rng = MasterSeed(34).rng();
        let p: Vec<f64> = (0..80).map(|_| rng.random_range(-2.0..2.0)).collect();
        for (cs_kind, hcs_kind) in [
            (SchemeKind::CsE2lsh, SchemeKind::HcsE2lsh),
            (SchemeKind::CsSrp, SchemeKind::HcsSrp),
        ] {
            let cs = FamilyInstance::new(seed, FamilyParams::new(cs_kind, 80, 8)).unwrap();
            let hcs =
                FamilyInstance::new(seed, FamilyParams::new(hcs_kind, 80, 8).with_order(1)).unwrap();
            assert_eq!(cs.hash(&p).unwrap(), hcs.hash(&p).unwrap());
        }
    }

    #[test]
    fn hash_rejects_dimension_mismatch() {
        let fam = FamilyInstance::new(
            MasterSeed(1),
            FamilyParams::new(SchemeKind::CsE2lsh, 10, 2),
        )
        .unwrap();
        assert!(matches!(
            fam.hash(&[0.0; 9]),
            Err(Error::DimensionMismatch { expected: 10, got: 9 })
        ));
    }

    #[test]
    fn from_parts_rejects_mismatched_projection() {
        let params = FamilyParams::new(SchemeKind::E2lsh, 4, 2);
        assert!(FamilyInstance::from_parts(
            params,
            Projection::Sketch(worked_cs_plan()),
            Some(OffsetVector::from_values(vec![0.0, 0.0], 4.0).unwrap()),
        )
        .is_err());
        let params = FamilyParams::new(SchemeKind::CsE2lsh, 4, 2);
        assert!(
            FamilyInstance::from_parts(params, Projection::Sketch(worked_cs_plan()), None).is_err()
        );
    }
}
