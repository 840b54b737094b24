//! Confinement domains and external fields.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RieszError};

/// Membership predicate for a region domain.
pub type RegionPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Confinement set for the particles.
///
/// The boundary regularity of a `Region` is not checked: the predicate is
/// trusted to describe a closed set with a reasonable boundary.
#[derive(Clone)]
pub enum Domain {
    /// Closed axis-aligned box `[lo_k, hi_k]` on every axis.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// All of `R^d`.
    Whole { dim: usize },
    /// Points of `bbox` for which `predicate` holds.
    Region {
        predicate: RegionPredicate,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Box { lo, hi } => f.debug_struct("Box").field("lo", lo).field("hi", hi).finish(),
            Domain::Whole { dim } => f.debug_struct("Whole").field("dim", dim).finish(),
            Domain::Region { lo, hi, .. } => f
                .debug_struct("Region")
                .field("lo", lo)
                .field("hi", hi)
                .finish_non_exhaustive(),
        }
    }
}

impl Domain {
    pub fn unit_cube(dim: usize) -> Domain {
        Domain::Box {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Domain {
        Domain::Box {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn region<F>(lo: Vec<f64>, hi: Vec<f64>, predicate: F) -> Domain
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Domain::Region {
            predicate: Arc::new(predicate),
            lo,
            hi,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } | Domain::Region { lo, .. } => lo.len(),
            Domain::Whole { dim } => *dim,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Domain::Whole { .. })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box { lo, hi } => in_box(x, lo, hi),
            Domain::Whole { .. } => x.iter().all(|v| v.is_finite()),
            Domain::Region { predicate, lo, hi } => in_box(x, lo, hi) && predicate(x),
        }
    }

    /// Bounding box, `None` for the whole space.
    pub fn bounds(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Domain::Box { lo, hi } | Domain::Region { lo, hi, .. } => Some((lo, hi)),
            Domain::Whole { .. } => None,
        }
    }

    /// Lebesgue measure for boxes; `None` when it is not known in closed form.
    pub fn volume(&self) -> Option<f64> {
        match self {
            Domain::Box { lo, hi } => Some(lo.iter().zip(hi).map(|(a, b)| b - a).product()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.bounds() {
            if lo.len() != hi.len() {
                return Err(RieszError::DimensionMismatch {
                    expected: lo.len(),
                    got: hi.len(),
                });
            }
            if lo.is_empty() {
                return Err(RieszError::InvalidParameter("domain of dimension 0".into()));
            }
            for (a, b) in lo.iter().zip(hi) {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(RieszError::InvalidParameter(format!(
                        "degenerate domain bounds [{a}, {b}]"
                    )));
                }
            }
        } else if self.dim() == 0 {
            return Err(RieszError::InvalidParameter("domain of dimension 0".into()));
        }
        Ok(())
    }
}

fn in_box(x: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    x.len() == lo.len() && x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
}

/// A field tabulated on a uniform grid, multilinearly interpolated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedField {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Knot count per axis (at least 2).
    pub shape: Vec<usize>,
    /// Row-major values, last axis fastest.
    pub values: Vec<f64>,
}

impl TabulatedField {
    fn validate(&self) -> Result<()> {
        let d = self.lo.len();
        if self.hi.len() != d || self.shape.len() != d {
            return Err(RieszError::DimensionMismatch {
                expected: d,
                got: self.shape.len(),
            });
        }
        if self.shape.iter().any(|&n| n < 2) {
            return Err(RieszError::InvalidParameter("tabulated field needs >= 2 knots per axis".into()));
        }
        let total: usize = self.shape.iter().product();
        if total != self.values.len() {
            return Err(RieszError::InvalidParameter(format!(
                "tabulated field expects {total} values, got {}",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RieszError::InvalidParameter(
                "tabulated field values must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    // Cell index and local coordinate in [0,1] along one axis. Points outside the
    // grid are clamped onto it.
    fn locate(&self, axis: usize, x: f64) -> (usize, f64, f64) {
        let n = self.shape[axis];
        let h = (self.hi[axis] - self.lo[axis]) / (n - 1) as f64;
        let t = ((x - self.lo[axis]) / h).clamp(0.0, (n - 1) as f64);
        let cell = (t.floor() as usize).min(n - 2);
        (cell, t - cell as f64, h)
    }

    fn value_at(&self, idx: &[usize]) -> f64 {
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.shape[k] + i;
        }
        self.values[flat]
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.eval_with(x, None)
    }

    // Multilinear interpolation; with `deriv = Some(k)` returns the slope along axis k.
    fn eval_with(&self, x: &[f64], deriv: Option<usize>) -> f64 {
        let d = self.lo.len();
        let cells: Vec<(usize, f64, f64)> = (0..d).map(|k| self.locate(k, x[k])).collect();
        let mut acc = 0.0;
        let mut idx = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for k in 0..d {
                let bit = (corner >> k) & 1;
                let (c, t, h) = cells[k];
                idx[k] = c + bit;
                if deriv == Some(k) {
                    w *= if bit == 1 { 1.0 / h } else { -1.0 / h };
                } else {
                    w *= if bit == 1 { t } else { 1.0 - t };
                }
            }
            acc += w * self.value_at(&idx);
        }
        acc
    }
}

/// External field family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Field {
    Zero,
    /// `c·|x|²`
    Quadratic { c: f64 },
    /// `Σ_k p_k(x_k)` where `coeffs[k][j]` multiplies `x_k^j`. Each axis
    /// polynomial is expected to be non-negative on its own.
    AxisPolynomial { coeffs: Vec<Vec<f64>> },
    Tabulated(TabulatedField),
}

/// External field together with its confinement domain.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    pub domain: Domain,
    pub field: Field,
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * t + a)
}

fn poly_deriv(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, a)| acc * t + j as f64 * a)
}

fn leading(c: &[f64]) -> Option<(usize, f64)> {
    c.iter().enumerate().rev().find(|(_, a)| **a != 0.0).map(|(j, a)| (j, *a))
}

impl FieldSpec {
    pub fn new(domain: Domain, field: Field) -> Result<FieldSpec> {
        let spec = FieldSpec { domain, field };
        spec.validate()?;
        Ok(spec)
    }

    /// No field, confinement only.
    pub fn free(domain: Domain) -> FieldSpec {
        FieldSpec {
            domain,
            field: Field::Zero,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let d = self.dim();
        match &self.field {
            Field::Zero => {}
            Field::Quadratic { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(RieszError::InvalidParameter(format!("quadratic field needs c >= 0, got {c}")));
                }
            }
            Field::AxisPolynomial { coeffs } => {
                if coeffs.len() != d {
                    return Err(RieszError::DimensionMismatch {
                        expected: d,
                        got: coeffs.len(),
                    });
                }
                if coeffs.iter().flatten().any(|a| !a.is_finite()) {
                    return Err(RieszError::InvalidParameter("non-finite polynomial coefficient".into()));
                }
            }
            Field::Tabulated(t) => {
                t.validate()?;
                if t.lo.len() != d {
                    return Err(RieszError::DimensionMismatch {
                        expected: d,
                        got: t.lo.len(),
                    });
                }
            }
        }
        if !self.domain.is_bounded() && !self.is_coercive() {
            return Err(RieszError::InvalidParameter(
                "unbounded domain requires a coercive field (V -> +inf at infinity)".into(),
            ));
        }
        Ok(())
    }

    /// Whether `V(x) -> +∞` as `|x| -> ∞`.
    pub fn is_coercive(&self) -> bool {
        match &self.field {
            Field::Zero | Field::Tabulated(_) => false,
            Field::Quadratic { c } => *c > 0.0,
            Field::AxisPolynomial { coeffs } => coeffs.iter().all(|c| match leading(c) {
                Some((deg, a)) => deg >= 2 && deg % 2 == 0 && a > 0.0,
                None => false,
            }),
        }
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        match &self.field {
            Field::Zero => 0.0,
            Field::Quadratic { c } => c * x.iter().map(|v| v * v).sum::<f64>(),
            Field::AxisPolynomial { coeffs } => coeffs.iter().zip(x).map(|(c, t)| poly_eval(c, *t)).sum(),
            Field::Tabulated(t) => t.eval(x),
        }
    }

    /// Gradient of `V` written into `out`. For tabulated fields this is the
    /// slope of the interpolant, which jumps across knots.
    pub fn potential_gradient(&self, x: &[f64], out: &mut [f64]) {
        match &self.field {
            Field::Zero => out.iter_mut().for_each(|g| *g = 0.0),
            Field::Quadratic { c } => {
                for (g, v) in out.iter_mut().zip(x) {
                    *g = 2.0 * c * v;
                }
            }
            Field::AxisPolynomial { coeffs } => {
                for ((g, c), t) in out.iter_mut().zip(coeffs).zip(x) {
                    *g = poly_deriv(c, *t);
                }
            }
            Field::Tabulated(t) => {
                for (k, g) in out.iter_mut().enumerate() {
                    *g = t.eval_with(x, Some(k));
                }
            }
        }
    }

    /// Bounding box of `{x in Ω : V(x) <= level}`. For the whole space this
    /// uses the coercive structure of the field family.
    pub fn sublevel_box(&self, level: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.dim();
        let (mut lo, mut hi) = match self.domain.bounds() {
            Some((lo, hi)) => (lo.to_vec(), hi.to_vec()),
            None => (vec![f64::NEG_INFINITY; d], vec![f64::INFINITY; d]),
        };
        let axis_box: Option<Vec<(f64, f64)>> = match &self.field {
            Field::Quadratic { c } if *c > 0.0 => {
                let r = (level.max(0.0) / c).sqrt();
                Some(vec![(-r, r); d])
            }
            Field::AxisPolynomial { coeffs } if self.is_coercive() => {
                Some(coeffs.iter().map(|c| poly_sublevel_interval(c, level)).collect())
            }
            Field::Tabulated(t) => Some(t.lo.iter().zip(&t.hi).map(|(a, b)| (*a, *b)).collect()),
            _ => None,
        };
        if let Some(ab) = axis_box {
            for (k, (a, b)) in ab.into_iter().enumerate() {
                lo[k] = lo[k].max(a);
                hi[k] = hi[k].min(b);
            }
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(RieszError::Bracket("field is not coercive on an unbounded domain".into()));
        }
        Ok((lo, hi))
    }
}

// Interval outside of which the (non-negative, even-degree) polynomial exceeds
// `level`, via the Cauchy root bound tightened by an inward scan.
fn poly_sublevel_interval(c: &[f64], level: f64) -> (f64, f64) {
    let (deg, lead) = leading(c).expect("coercive polynomial has a leading term");
    let mut shifted = c[..=deg].to_vec();
    shifted[0] -= level;
    let bound = 1.0 + shifted[..deg].iter().map(|a| (a / lead).abs()).fold(0.0, f64::max);
    let steps = 4096;
    let h = bound / steps as f64;
    let mut right = bound;
    for i in (0..=steps).rev() {
        let t = i as f64 * h;
        if poly_eval(c, t) <= level {
            right = (t + h).min(bound);
            break;
        }
    }
    let mut left = -bound;
    for i in (0..=steps).rev() {
        let t = -(i as f64) * h;
        if poly_eval(c, t) <= level {
            left = (t - h).max(-bound);
            break;
        }
    }
    (left, right)
}
