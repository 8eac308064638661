//! Affine, max-of-affine, min-of-affine and difference-of-convex piecewise
//! affine functions, together with interval bounds over boxes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwaError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("piecewise function needs at least one piece")]
    NoPieces,
    #[error("box lower bound exceeds upper bound at coordinate {0}")]
    InvertedBox(usize),
    #[error("NaN passed to Heaviside function")]
    NanArgument,
}

fn check_dim(expected: usize, got: usize) -> Result<(), PwaError> {
    if expected != got {
        return Err(PwaError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Indicator of the closed half-line `[0, inf)`.
pub fn heaviside_closed(t: f64) -> Result<bool, PwaError> {
    if t.is_nan() {
        return Err(PwaError::NanArgument);
    }
    Ok(t >= 0.0)
}

/// Indicator of the open half-line `(0, inf)`.
pub fn heaviside_open(t: f64) -> Result<bool, PwaError> {
    if t.is_nan() {
        return Err(PwaError::NanArgument);
    }
    Ok(t > 0.0)
}

/// Axis-aligned box `lower <= x <= upper` with finite bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, PwaError> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self, PwaError> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn validate(&self) -> Result<(), PwaError> {
        check_dim(self.lower.len(), self.upper.len())?;
        for (i, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(PwaError::NonFinite("box bound"));
            }
            if l > u {
                return Err(PwaError::InvertedBox(i));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
    }

    /// The point closest to the origin (zero where the box allows it).
    pub fn origin_projection(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| 0.0f64.clamp(l, u))
            .collect()
    }
}

/// Common interface of every piecewise affine family.
pub trait PiecewiseAffine {
    fn dim(&self) -> usize;

    /// Value at `x`; `x` must have length `dim()`.
    fn value(&self, x: &[f64]) -> f64;

    fn lower_bound(&self, domain: &BoxDomain) -> f64;

    fn upper_bound(&self, domain: &BoxDomain) -> f64;

    fn eval(&self, x: &[f64]) -> Result<f64, PwaError> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value(x))
    }

    fn lower_bound_on_box(&self, domain: &BoxDomain) -> Result<f64, PwaError> {
        check_dim(self.dim(), domain.dim())?;
        Ok(self.lower_bound(domain))
    }

    fn upper_bound_on_box(&self, domain: &BoxDomain) -> Result<f64, PwaError> {
        check_dim(self.dim(), domain.dim())?;
        Ok(self.upper_bound(domain))
    }
}

/// `w . x + offset`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFn {
    pub weights: Vec<f64>,
    pub offset: f64,
}

impl AffineFn {
    pub fn new(weights: Vec<f64>, offset: f64) -> Result<Self, PwaError> {
        let f = Self { weights, offset };
        f.validate()?;
        Ok(f)
    }

    pub fn constant(n: usize, offset: f64) -> Result<Self, PwaError> {
        Self::new(vec![0.0; n], offset)
    }

    pub fn validate(&self) -> Result<(), PwaError> {
        if !self.offset.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(PwaError::NonFinite("affine coefficient"));
        }
        Ok(())
    }

    pub fn neg(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|w| -w).collect(),
            offset: -self.offset,
        }
    }

    /// `self - other`
    pub fn sub(&self, other: &AffineFn) -> Self {
        Self {
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a - b)
                .collect(),
            offset: self.offset - other.offset,
        }
    }
}

impl PiecewiseAffine for AffineFn {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.offset
    }

    fn lower_bound(&self, domain: &BoxDomain) -> f64 {
        self.weights
            .iter()
            .zip(domain.lower.iter().zip(&domain.upper))
            .map(|(&w, (&l, &u))| (w * l).min(w * u))
            .sum::<f64>()
            + self.offset
    }

    fn upper_bound(&self, domain: &BoxDomain) -> f64 {
        self.weights
            .iter()
            .zip(domain.lower.iter().zip(&domain.upper))
            .map(|(&w, (&l, &u))| (w * l).max(w * u))
            .sum::<f64>()
            + self.offset
    }
}

fn validate_pieces(pieces: &[AffineFn]) -> Result<(), PwaError> {
    let first = pieces.first().ok_or(PwaError::NoPieces)?;
    for p in pieces {
        check_dim(first.weights.len(), p.weights.len())?;
        p.validate()?;
    }
    Ok(())
}

/// Pointwise maximum of affine pieces (convex).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAffine {
    pub pieces: Vec<AffineFn>,
}

impl MaxAffine {
    pub fn new(pieces: Vec<AffineFn>) -> Result<Self, PwaError> {
        validate_pieces(&pieces)?;
        Ok(Self { pieces })
    }

    pub fn validate(&self) -> Result<(), PwaError> {
        validate_pieces(&self.pieces)
    }

    /// Index of a maximizing piece at `x` (lowest index on ties).
    pub fn argmax(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, p) in self.pieces.iter().enumerate() {
            let v = p.value(x);
            if v > best_val {
                best = i;
                best_val = v;
            }
        }
        best
    }

    pub fn negate(&self) -> MinAffine {
        MinAffine {
            pieces: self.pieces.iter().map(AffineFn::neg).collect(),
        }
    }
}

impl PiecewiseAffine for MaxAffine {
    fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn lower_bound(&self, domain: &BoxDomain) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.lower_bound(domain))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn upper_bound(&self, domain: &BoxDomain) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.upper_bound(domain))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Pointwise minimum of affine pieces (concave).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinAffine {
    pub pieces: Vec<AffineFn>,
}

impl MinAffine {
    pub fn new(pieces: Vec<AffineFn>) -> Result<Self, PwaError> {
        validate_pieces(&pieces)?;
        Ok(Self { pieces })
    }

    pub fn validate(&self) -> Result<(), PwaError> {
        validate_pieces(&self.pieces)
    }

    pub fn negate(&self) -> MaxAffine {
        MaxAffine {
            pieces: self.pieces.iter().map(AffineFn::neg).collect(),
        }
    }
}

impl PiecewiseAffine for MinAffine {
    fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::INFINITY, f64::min)
    }

    fn lower_bound(&self, domain: &BoxDomain) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.lower_bound(domain))
            .fold(f64::INFINITY, f64::min)
    }

    fn upper_bound(&self, domain: &BoxDomain) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.upper_bound(domain))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `plus(x) - minus(x)` with both parts convex max-of-affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcPwa {
    pub plus: MaxAffine,
    pub minus: MaxAffine,
}

impl DcPwa {
    pub fn new(plus: MaxAffine, minus: MaxAffine) -> Result<Self, PwaError> {
        let f = Self { plus, minus };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), PwaError> {
        self.plus.validate()?;
        self.minus.validate()?;
        check_dim(self.plus.dim(), self.minus.dim())
    }
}

impl PiecewiseAffine for DcPwa {
    fn dim(&self) -> usize {
        self.plus.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.plus.value(x) - self.minus.value(x)
    }

    fn lower_bound(&self, domain: &BoxDomain) -> f64 {
        self.plus.lower_bound(domain) - self.minus.upper_bound(domain)
    }

    fn upper_bound(&self, domain: &BoxDomain) -> f64 {
        self.plus.upper_bound(domain) - self.minus.lower_bound(domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn aff(w: &[f64], o: f64) -> AffineFn {
        AffineFn::new(w.to_vec(), o).unwrap()
    }

    #[test]
    fn affine_offset_only_at_origin() {
        assert_eq!(aff(&[1.0, 0.0], 0.5).eval(&[0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn max_affine_is_absolute_value() {
        let f = MaxAffine::new(vec![aff(&[1.0], 0.0), aff(&[-1.0], 0.0)]).unwrap();
        assert_eq!(f.eval(&[-2.0]).unwrap(), 2.0);
    }

    #[test]
    fn dc_evaluates_both_halves() {
        let plus = MaxAffine::new(vec![aff(&[1.0], 0.0), aff(&[-1.0], 0.0)]).unwrap();
        let minus = MaxAffine::new(vec![aff(&[0.0], 0.0), aff(&[2.0], -1.0)]).unwrap();
        let f = DcPwa::new(plus, minus).unwrap();
        assert_eq!(f.eval(&[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = aff(&[1.0, 2.0], 0.0);
        assert_eq!(
            f.eval(&[1.0]),
            Err(PwaError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        let b = BoxDomain::cube(3, 0.0, 1.0).unwrap();
        assert!(f.lower_bound_on_box(&b).is_err());
    }

    #[test]
    fn heaviside_conventions() {
        assert!(heaviside_closed(0.0).unwrap());
        assert!(!heaviside_open(0.0).unwrap());
        assert!(!heaviside_closed(-0.5).unwrap());
        assert!(heaviside_open(3.2).unwrap());
        assert_eq!(heaviside_closed(f64::NAN), Err(PwaError::NanArgument));
        assert_eq!(heaviside_open(f64::NAN), Err(PwaError::NanArgument));
    }

    #[test]
    fn box_bounds() {
        let b = BoxDomain::new(vec![-1.0], vec![3.0]).unwrap();
        assert_eq!(aff(&[1.0], 0.0).lower_bound_on_box(&b).unwrap(), -1.0);
        let min = MinAffine::new(vec![aff(&[1.0], 0.0), aff(&[1.0], -2.0)]).unwrap();
        assert_eq!(min.lower_bound_on_box(&b).unwrap(), -3.0);
        let abs = MaxAffine::new(vec![aff(&[1.0], 0.0), aff(&[-1.0], 0.0)]).unwrap();
        assert_eq!(abs.lower_bound_on_box(&b).unwrap(), -1.0);
        // grid check of bound dominance for |x|
        for i in 0..=400 {
            let x = -1.0 + 4.0 * i as f64 / 400.0;
            assert!(abs.value(&[x]) >= -1.0);
        }
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(AffineFn::new(vec![f64::NAN], 0.0).is_err());
        assert!(AffineFn::new(vec![1.0], f64::INFINITY).is_err());
        assert_eq!(MaxAffine::new(vec![]), Err(PwaError::NoPieces));
        assert!(MinAffine::new(vec![aff(&[1.0], 0.0), aff(&[1.0, 1.0], 0.0)]).is_err());
        assert_eq!(
            BoxDomain::new(vec![1.0], vec![0.0]),
            Err(PwaError::InvertedBox(0))
        );
        assert!(BoxDomain::new(vec![f64::NEG_INFINITY], vec![0.0]).is_err());
    }

    #[test]
    fn negate_is_termwise() {
        let f = MinAffine::new(vec![aff(&[1.0], 0.0), aff(&[-1.0], 2.0)]).unwrap();
        let g = f.negate();
        assert_eq!(g.pieces, vec![aff(&[-1.0], 0.0), aff(&[1.0], -2.0)]);
        assert_eq!(g.negate(), f);
    }

    fn affine_strategy(n: usize) -> impl Strategy<Value = AffineFn> {
        (prop::collection::vec(-5.0..5.0f64, n), -5.0..5.0f64)
            .prop_map(|(w, o)| AffineFn { weights: w, offset: o })
    }

    fn pieces_strategy(n: usize) -> impl Strategy<Value = Vec<AffineFn>> {
        prop::collection::vec(affine_strategy(n), 1..5)
    }

    fn box_strategy(n: usize) -> impl Strategy<Value = BoxDomain> {
        prop::collection::vec((-4.0..4.0f64, 0.0..4.0f64), n).prop_map(|v| {
            let lower: Vec<f64> = v.iter().map(|(l, _)| *l).collect();
            let upper: Vec<f64> = v.iter().map(|(l, w)| l + w).collect();
            BoxDomain::new(lower, upper).unwrap()
        })
    }

    fn sample_in(b: &BoxDomain, t: &[f64]) -> Vec<f64> {
        b.lower()
            .iter()
            .zip(b.upper())
            .zip(t)
            .map(|((l, u), s)| l + (u - l) * s)
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn negation_negates_values(p in pieces_strategy(3), xs in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 3), 100)) {
            let f = MinAffine { pieces: p };
            let g = f.negate();
            for x in &xs {
                prop_assert!((g.value(x) + f.value(x)).abs() <= 1e-12 * (1.0 + f.value(x).abs()));
            }
        }

        #[test]
        fn dc_value_is_difference(p in pieces_strategy(2), m in pieces_strategy(2), x in prop::collection::vec(-10.0..10.0f64, 2)) {
            let plus = MaxAffine { pieces: p };
            let minus = MaxAffine { pieces: m };
            let f = DcPwa { plus: plus.clone(), minus: minus.clone() };
            let d = plus.value(&x) - minus.value(&x);
            prop_assert!((f.value(&x) - d).abs() <= 1e-12 * (1.0 + d.abs()));
        }

        #[test]
        fn min_affine_bounds_enclose_samples(
            p in pieces_strategy(3),
            b in box_strategy(3),
            t in prop::collection::vec(0.0..=1.0f64, 3),
        ) {
            let f = MinAffine { pieces: p };
            let x = sample_in(&b, &t);
            let v = f.value(&x);
            prop_assert!(f.lower_bound(&b) <= v + 1e-9);
            prop_assert!(f.upper_bound(&b) >= v - 1e-9);
        }

        #[test]
        fn open_closed_complement(t in -1e6..1e6f64) {
            prop_assert_eq!(heaviside_open(t).unwrap(), !heaviside_closed(-t).unwrap());
            prop_assert_eq!(heaviside_open(0.0).unwrap(), !heaviside_closed(-0.0).unwrap());
        }
    }

    #[test]
    fn lower_bounds_are_sound_on_random_boxes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let rand_aff = |rng: &mut rand_chacha::ChaCha8Rng| {
            AffineFn::new(
                (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                rng.gen_range(-3.0..3.0),
            )
            .unwrap()
        };
        for _ in 0..1000 {
            let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.0..3.0)).collect();
            let b = BoxDomain::new(lower, upper).unwrap();
            let k = rng.gen_range(1..4);
            let min = MinAffine::new((0..k).map(|_| rand_aff(&mut rng)).collect()).unwrap();
            let max = MaxAffine::new((0..k).map(|_| rand_aff(&mut rng)).collect()).unwrap();
            let dc = DcPwa::new(
                MaxAffine::new((0..k).map(|_| rand_aff(&mut rng)).collect()).unwrap(),
                MaxAffine::new((0..2).map(|_| rand_aff(&mut rng)).collect()).unwrap(),
            )
            .unwrap();
            let lbs = [min.lower_bound(&b), max.lower_bound(&b), dc.lower_bound(&b)];
            let ubs = [min.upper_bound(&b), max.upper_bound(&b), dc.upper_bound(&b)];
            for _ in 0..1000 {
                let t: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                let x = sample_in(&b, &t);
                let vals = [min.value(&x), max.value(&x), dc.value(&x)];
                for i in 0..3 {
                    assert!(vals[i] >= lbs[i] - 1e-9);
                    assert!(vals[i] <= ubs[i] + 1e-9);
                }
            }
        }
    }
}
