//! Finite point configurations and the geometric maps acting on them.

use std::fmt::Write as _;

use crate::error::{Result, RieszError};
use crate::field::Domain;

/// An ordered list of points in `R^d`, stored flat.
///
/// Duplicate points are representable; energy kernels reject them.
#[derive(Clone, Debug)]
pub struct PointConfiguration {
    dim: usize,
    coords: Vec<f64>,
    domain: Option<Domain>,
}

impl PartialEq for PointConfiguration {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords == other.coords
    }
}

impl PointConfiguration {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(RieszError::InvalidParameter("dimension must be positive".into()));
        }
        if coords.len() % dim != 0 {
            return Err(RieszError::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if let Some(k) = coords.iter().position(|v| !v.is_finite()) {
            return Err(RieszError::NonFinite { index: k / dim });
        }
        Ok(PointConfiguration {
            dim,
            coords,
            domain: None,
        })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(RieszError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    /// One-dimensional configuration from scalar positions.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(1, xs.to_vec())
    }

    pub fn empty(dim: usize) -> Self {
        PointConfiguration {
            dim,
            coords: Vec::new(),
            domain: None,
        }
    }

    /// Attaches a domain, checking that every point belongs to it.
    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if domain.dim() != self.dim {
            return Err(RieszError::DimensionMismatch {
                expected: self.dim,
                got: domain.dim(),
            });
        }
        if let Some(i) = (0..self.len()).find(|&i| !domain.contains(self.point(i))) {
            return Err(RieszError::OutsideDomain { index: i });
        }
        self.domain = Some(domain);
        Ok(self)
    }

    pub fn domain(&self) -> Option<&Domain> {
        self.domain.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[cfg(test)]
    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    /// Overwrites point `i`. The domain tag is not rechecked.
    pub fn set_point(&mut self, i: usize, x: &[f64]) -> Result<()> {
        if i >= self.len() {
            return Err(RieszError::IndexOutOfRange { index: i, len: self.len() });
        }
        if x.len() != self.dim {
            return Err(RieszError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RieszError::NonFinite { index: i });
        }
        self.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(x);
        Ok(())
    }

    /// `p -> p - x` for every point; the domain tag is dropped.
    pub fn translate(&self, x: &[f64]) -> Result<Self> {
        if x.len() != self.dim {
            return Err(RieszError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(k, v)| v - x[k % self.dim])
            .collect();
        Self::new(self.dim, coords)
    }

    /// The scaling map `p -> m^{1/d} p`, which multiplies the density by `m`.
    pub fn rescale(&self, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(RieszError::InvalidParameter(format!("scaling factor must be positive, got {m}")));
        }
        let f = m.powf(1.0 / self.dim as f64);
        Self::new(self.dim, self.coords.iter().map(|v| v * f).collect())
    }

    /// Multiplies every coordinate by `f`.
    pub fn scale_coords(&self, f: f64) -> Result<Self> {
        Self::new(self.dim, self.coords.iter().map(|v| v * f).collect())
    }

    /// Number of points in the closed centered cube of side `r`, divided by `r^d`.
    pub fn finite_density(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(RieszError::InvalidParameter(format!("window side must be positive, got {r}")));
        }
        Ok(self.count_in_window(r) as f64 / r.powi(self.dim as i32))
    }

    pub fn count_in_window(&self, r: f64) -> usize {
        let h = r / 2.0;
        self.points().filter(|p| p.iter().all(|v| v.abs() <= h)).count()
    }

    /// Points in the closed centered cube of side `r`, in original order.
    pub fn restrict_to_window(&self, r: f64) -> Self {
        let h = r / 2.0;
        let coords = self
            .points()
            .filter(|p| p.iter().all(|v| v.abs() <= h))
            .flatten()
            .copied()
            .collect();
        PointConfiguration {
            dim: self.dim,
            coords,
            domain: None,
        }
    }

    /// CSV snapshot: a `# d=<d> n=<n>` header, then one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# d={} n={}", self.dim, self.len()).unwrap();
        for p in self.points() {
            for (k, v) in p.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write!(out, "{v:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| RieszError::Format("empty configuration CSV".into()))?;
        let (dim, n) = parse_header(header)?;
        let mut coords = Vec::with_capacity(dim * n);
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim {
                return Err(RieszError::Format(format!(
                    "row {row}: expected {dim} columns, got {}",
                    fields.len()
                )));
            }
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|_| RieszError::Format(format!("row {row}: bad number {f:?}")))?;
                coords.push(v);
            }
        }
        if coords.len() != dim * n {
            return Err(RieszError::Format(format!(
                "header announces {n} points, found {}",
                coords.len() / dim.max(1)
            )));
        }
        Self::new(dim, coords)
    }
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| RieszError::Format(format!("missing '# d=.. n=..' header: {line:?}")))?;
    let mut dim = None;
    let mut n = None;
    for tok in body.split_whitespace() {
        if let Some(v) = tok.strip_prefix("d=") {
            dim = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("n=") {
            n = v.parse().ok();
        }
    }
    match (dim, n) {
        (Some(d), Some(n)) if d > 0 => Ok((d, n)),
        _ => Err(RieszError::Format(format!("malformed header {line:?}"))),
    }
}
