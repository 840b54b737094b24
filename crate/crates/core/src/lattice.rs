//! Bravais lattices, Epstein and Epstein-Hurwitz zeta functions, and
//! periodic Riesz energies.
//!
//! Lattice sums `Σ_n |U n + x|^{-s}` are split into an explicit partial sum
//! over `|n|_∞ <= K` and a tail. The tail is replaced by the integral of the
//! summand over the complement of the cube `|z|_∞ <= K + 1/2` (each lattice
//! cell contributes its midpoint value), evaluated as a surface integral over
//! the cube faces. The reported `tail_bound` is a rigorous bound on the
//! midpoint-rule error obtained from the Hessian of `|y|^{-s}`, plus the
//! estimated face-quadrature error and a rounding allowance.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PointConfiguration;
use crate::energy::check_exponent;
use crate::error::{Result, RieszError};
use crate::quad::{gauss_box, pairwise_sum};

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct BravaisLattice {
    dim: usize,
    /// Row-major `d×d`; the lattice vectors are the columns.
    generator: Vec<f64>,
    inverse: Vec<f64>,
    covolume: f64,
    sigma_min: f64,
    sigma_max: f64,
}

impl PartialEq for BravaisLattice {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.generator == other.generator
    }
}

impl BravaisLattice {
    /// Lattice `U Z^d` from a row-major `d×d` matrix whose columns are the basis vectors.
    pub fn new(dim: usize, generator: Vec<f64>) -> Result<Self> {
        if dim == 0 || generator.len() != dim * dim {
            return Err(RieszError::InvalidParameter(format!(
                "generator must be a {dim}x{dim} matrix, got {} entries",
                generator.len()
            )));
        }
        if generator.iter().any(|v| !v.is_finite()) {
            return Err(RieszError::InvalidParameter("non-finite generator entry".into()));
        }
        let m = DMatrix::from_row_slice(dim, dim, &generator);
        let det = m.determinant();
        let svd = m.clone().svd(false, false);
        let sigma_max = svd.singular_values.max();
        let sigma_min = svd.singular_values.min();
        if det == 0.0 || sigma_min <= 1e-14 * sigma_max {
            return Err(RieszError::InvalidParameter("generator matrix is singular".into()));
        }
        let inv = m
            .try_inverse()
            .ok_or_else(|| RieszError::InvalidParameter("generator matrix is singular".into()))?;
        let inverse = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| inv[(i, j)]).collect();
        Ok(BravaisLattice {
            dim,
            generator,
            inverse,
            covolume: det.abs(),
            sigma_min,
            sigma_max,
        })
    }

    /// `a Z^d`.
    pub fn cubic(dim: usize, a: f64) -> Result<Self> {
        let mut g = vec![0.0; dim * dim];
        for i in 0..dim {
            g[i * dim + i] = a;
        }
        Self::new(dim, g)
    }

    /// Triangular lattice scaled to covolume 1.
    pub fn hexagonal() -> Self {
        let a = (2.0 / 3f64.sqrt()).sqrt();
        Self::new(2, vec![a, 0.5 * a, 0.0, 0.5 * 3f64.sqrt() * a]).expect("hexagonal generator is regular")
    }

    /// Named presets: `Z1`, `Z2`, `Z3`, `hexagonal`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "Z1" => Self::cubic(1, 1.0),
            "Z2" => Self::cubic(2, 1.0),
            "Z3" => Self::cubic(3, 1.0),
            "hexagonal" => Ok(Self::hexagonal()),
            other => Err(RieszError::InvalidParameter(format!("unknown lattice preset {other:?}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    pub fn covolume(&self) -> f64 {
        self.covolume
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::new(self.dim, self.generator.iter().map(|v| v * a).collect())
    }

    /// `U n` for real coefficients `n`.
    pub fn apply(&self, n: &[f64], out: &mut [f64]) {
        mat_vec(&self.generator, self.dim, n, out);
    }

    /// Lattice coordinates `U^{-1} x`.
    pub fn coordinates(&self, x: &[f64], out: &mut [f64]) {
        mat_vec(&self.inverse, self.dim, x, out);
    }

    /// Representative of `x` in the fundamental domain `U [-1/2, 1/2)^d`.
    pub fn wrap(&self, x: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        self.coordinates(x, &mut c);
        for v in c.iter_mut() {
            *v -= (*v + 0.5).floor();
        }
        let mut out = vec![0.0; self.dim];
        self.apply(&c, &mut out);
        out
    }

    /// Whether `x` lies in `U [-1/2, 1/2)^d`, with a rounding allowance.
    pub fn in_fundamental_domain(&self, x: &[f64]) -> bool {
        let mut c = vec![0.0; self.dim];
        self.coordinates(x, &mut c);
        c.iter().all(|v| *v >= -0.5 - 1e-12 && *v < 0.5 + 1e-12)
    }

    // Reduces `x` modulo the lattice: returns `(U c, c)` with `c` in [-1/2, 1/2]^d.
    fn reduce(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut c = vec![0.0; self.dim];
        self.coordinates(x, &mut c);
        for v in c.iter_mut() {
            *v -= v.round();
        }
        let mut y = vec![0.0; self.dim];
        self.apply(&c, &mut y);
        (y, c)
    }
}

fn mat_vec(m: &[f64], d: usize, x: &[f64], out: &mut [f64]) {
    for i in 0..d {
        out[i] = (0..d).map(|j| m[i * d + j] * x[j]).sum();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaResult {
    pub value: f64,
    pub tail_bound: f64,
    pub shells_used: usize,
}

#[inline]
fn inv_pow(r2: f64, s: f64) -> f64 {
    let half = 0.5 * s;
    if half.fract() == 0.0 && half <= 16.0 {
        1.0 / r2.powi(half as i32)
    } else {
        r2.powf(-half)
    }
}

fn shell_count(d: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    ((2 * k + 1) as f64).powi(d as i32) - ((2 * k - 1) as f64).powi(d as i32)
}

const CHUNK: usize = 8192;

/// Certified lattice-sum engine for one `(lattice, s)` pair with a truncation
/// `K` valid for every shift in the fundamental domain.
#[derive(Clone, Debug)]
pub struct LatticeSum {
    lattice: BravaisLattice,
    s: f64,
    k: usize,
    bound: f64,
}

impl LatticeSum {
    /// Picks `K` so that the midpoint-rule error is at most `tol / 2`.
    pub fn new(lattice: &BravaisLattice, s: f64, tol: f64) -> Result<Self> {
        check_exponent(s, lattice.dim)?;
        if !(tol > 0.0) {
            return Err(RieszError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        let max_shift = 0.5 * lattice.sigma_max * (lattice.dim as f64).sqrt();
        let (k, bound) = choose_truncation(lattice, s, max_shift, 0.5 * tol);
        Ok(LatticeSum {
            lattice: lattice.clone(),
            s,
            k,
            bound,
        })
    }

    pub fn lattice(&self) -> &BravaisLattice {
        &self.lattice
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    pub fn shells(&self) -> usize {
        self.k
    }

    /// `ζ_Λ(s) = Σ_{v != 0} |v|^{-s}`.
    pub fn zeta(&self) -> ZetaResult {
        let zero = vec![0.0; self.lattice.dim];
        let s = self.s;
        let partial = self.accumulate(1, |v, acc| acc[0] += inv_pow(v.iter().map(|t| t * t).sum(), s))[0];
        self.finish(partial, &zero, &zero)
    }

    /// `ζ_Λ(s, x) = Σ_v |x + v|^{-s}`.
    pub fn hurwitz(&self, x: &[f64]) -> Result<ZetaResult> {
        let (y, c) = self.checked_reduce(x)?;
        let s = self.s;
        let origin = inv_pow(y.iter().map(|t| t * t).sum(), s);
        let rest = self.accumulate(1, |v, acc| {
            acc[0] += inv_pow(v.iter().zip(&y).map(|(a, b)| (a + b) * (a + b)).sum(), s)
        })[0];
        Ok(self.finish(origin + rest, &y, &c))
    }

    /// `ζ_Λ(s, x)` and its gradient in `x` with the same truncation.
    pub fn hurwitz_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (y, c) = self.checked_reduce(x)?;
        let d = self.lattice.dim;
        let s = self.s;
        let term = |v: &[f64], acc: &mut [f64]| {
            let r2: f64 = v.iter().zip(&y).map(|(a, b)| (a + b) * (a + b)).sum();
            let f = inv_pow(r2, s);
            acc[0] += f;
            let coef = -s * f / r2;
            for k in 0..d {
                acc[k + 1] += coef * (v[k] + y[k]);
            }
        };
        let mut acc = vec![0.0; d + 1];
        term(&vec![0.0; d], &mut acc);
        let rest = self.accumulate(d + 1, term);
        let (tail, tail_grad) = self.face_integral(&c, 6, true);
        let grad = (0..d).map(|k| acc[k + 1] + rest[k + 1] + tail_grad[k]).collect();
        Ok((acc[0] + rest[0] + tail, grad))
    }

    fn checked_reduce(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.lattice.dim {
            return Err(RieszError::DimensionMismatch {
                expected: self.lattice.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RieszError::NonFinite { index: 0 });
        }
        let (y, c) = self.lattice.reduce(x);
        let r = y.iter().map(|t| t * t).sum::<f64>().sqrt();
        if r <= 1e-13 * self.lattice.sigma_min {
            return Err(RieszError::OnLatticePoint);
        }
        Ok((y, c))
    }

    // Applies `f` to every `U n` with `0 < |n|_∞ <= K`. Vectors are decoded
    // from a flat index over the cube and reduced in fixed chunks; the result
    // does not depend on the thread count.
    fn accumulate<F>(&self, width: usize, f: F) -> Vec<f64>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let d = self.lattice.dim;
        let side = 2 * self.k + 1;
        let total = side.pow(d as u32);
        let origin = (total - 1) / 2;
        let k = self.k as f64;
        let chunk_sum = |c: usize| {
            let mut acc = vec![0.0; width];
            let mut n = vec![0.0; d];
            let mut v = vec![0.0; d];
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                if idx == origin {
                    continue;
                }
                let mut rem = idx;
                for slot in n.iter_mut() {
                    *slot = (rem % side) as f64 - k;
                    rem /= side;
                }
                self.lattice.apply(&n, &mut v);
                f(&v, &mut acc);
            }
            acc
        };
        let chunks = total.div_ceil(CHUNK);
        let parts: Vec<Vec<f64>> = if chunks >= 4 {
            (0..chunks).into_par_iter().map(chunk_sum).collect()
        } else {
            (0..chunks).map(chunk_sum).collect()
        };
        (0..width)
            .map(|w| pairwise_sum(&parts.iter().map(|p| p[w]).collect::<Vec<_>>()))
            .collect()
    }

    fn finish(&self, partial: f64, y: &[f64], c: &[f64]) -> ZetaResult {
        let bound = if y.iter().all(|t| *t == 0.0) {
            midpoint_error_bound(&self.lattice, self.s, 0.0, self.k)
        } else {
            self.bound
        };
        let fine = self.face_integral(c, 8, false).0;
        let coarse = self.face_integral(c, 4, false).0;
        let value = partial + fine;
        let rounding = 8.0 * f64::EPSILON * (self.k as f64 + 2.0) * value;
        ZetaResult {
            value,
            tail_bound: bound + (fine - coarse).abs() + rounding,
            shells_used: self.k,
        }
    }

    // ∫_{|z|_∞ > K+1/2} |U z + x|^{-s} dz with x = U c. With w = z + c and
    // polar coordinates along rays from the origin this is
    // (1/(s-d)) Σ_faces ∫_face (w·ν) |U w|^{-s} dS over the cube of half-width
    // K + 1/2 centred at c. The gradient integrand is homogeneous of degree
    // -s-1, hence the factor 1/(s+1-d).
    fn face_integral(&self, c: &[f64], panels: usize, with_gradient: bool) -> (f64, Vec<f64>) {
        let d = self.lattice.dim;
        let s = self.s;
        let a = self.k as f64 + 0.5;
        let mut value = 0.0;
        let mut grad = vec![0.0; d];
        for axis in 0..d {
            for sign in [-1.0, 1.0] {
                let lever = a + sign * c[axis];
                let lo: Vec<f64> = (0..d).filter(|&i| i != axis).map(|i| c[i] - a).collect();
                let hi: Vec<f64> = (0..d).filter(|&i| i != axis).map(|i| c[i] + a).collect();
                let image = |free: &[f64]| {
                    let mut it = free.iter();
                    let w: Vec<f64> = (0..d)
                        .map(|i| if i == axis { c[axis] + sign * a } else { *it.next().unwrap() })
                        .collect();
                    let mut y = vec![0.0; d];
                    self.lattice.apply(&w, &mut y);
                    y
                };
                let f_val = |free: &[f64]| inv_pow(image(free).iter().map(|t| t * t).sum(), s);
                value += lever * gauss_box(f_val, &lo, &hi, panels, 16) / (s - d as f64);
                if with_gradient {
                    for k in 0..d {
                        let f_grad = |free: &[f64]| {
                            let y = image(free);
                            let r2: f64 = y.iter().map(|t| t * t).sum();
                            -s * inv_pow(r2, s) / r2 * y[k]
                        };
                        grad[k] += lever * gauss_box(f_grad, &lo, &hi, panels, 16) / (s + 1.0 - d as f64);
                    }
                }
            }
        }
        (value, grad)
    }
}

// Σ_{k>K} count_k · (d/24) σ_max² s(s+1) (σ_min(k - 1/2) - |x|)^{-s-2}: the
// midpoint rule on a unit cell in lattice coordinates errs by at most half the
// Hessian norm times E|u|² = d/12, and ‖Hess |y|^{-s}‖ = s(s+1)|y|^{-s-2}.
// Returns +∞ when K is too small for the shift.
fn midpoint_error_bound(lattice: &BravaisLattice, s: f64, shift: f64, k: usize) -> f64 {
    let d = lattice.dim;
    let df = d as f64;
    let sig = lattice.sigma_min;
    let c = df / 24.0 * lattice.sigma_max.powi(2) * s * (s + 1.0);
    if sig * (k as f64 + 0.5) <= shift {
        return f64::INFINITY;
    }
    // explicit shells up to M, then an integral bound
    let m = (4 * k).max(k + 1000).max((2.0 * shift / sig).ceil() as usize + 1);
    let mut acc = 0.0;
    for kk in k + 1..=m {
        let q = sig * (kk as f64 - 0.5) - shift;
        acc += shell_count(d, kk) * c * q.powf(-(s + 2.0));
    }
    let mf = m as f64;
    let eps = shift / (sig * (mf + 0.5));
    let eta = 1.0 + 1.0 / (mf + 0.5);
    let p = s + 3.0 - df;
    let coef = 2.0 * df * (2.0 * eta).powi(d as i32 - 1) * c * (sig * (1.0 - eps)).powf(-(s + 2.0));
    acc + coef * (mf - 0.5).powf(1.0 - p) / (p - 1.0)
}

fn choose_truncation(lattice: &BravaisLattice, s: f64, shift: f64, tol: f64) -> (usize, f64) {
    let mut lo = 1usize;
    let mut hi = 2usize;
    loop {
        let b = midpoint_error_bound(lattice, s, shift, hi);
        if b <= tol {
            break;
        }
        lo = hi;
        hi *= 2;
        assert!(hi < 1 << 30, "lattice sum truncation diverged");
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if midpoint_error_bound(lattice, s, shift, mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, midpoint_error_bound(lattice, s, shift, hi))
}

/// `ζ_Λ(s)` with `|value - exact| <= tail_bound <= tol`.
pub fn epstein_zeta(lattice: &BravaisLattice, s: f64, tol: f64) -> Result<ZetaResult> {
    Ok(LatticeSum::new(lattice, s, tol)?.zeta())
}

/// `ζ_Λ(s, x)` with `|value - exact| <= tail_bound <= tol`.
pub fn epstein_hurwitz_zeta(lattice: &BravaisLattice, s: f64, x: &[f64], tol: f64) -> Result<ZetaResult> {
    LatticeSum::new(lattice, s, tol)?.hurwitz(x)
}

/// Memoized zeta values for one `(lattice, s, tol)`; Hurwitz values are keyed
/// by the reduced shift up to sign.
#[derive(Debug)]
pub struct ZetaCache {
    sum: LatticeSum,
    zeta: ZetaResult,
    hurwitz: HashMap<Vec<u64>, ZetaResult>,
}

impl ZetaCache {
    pub fn new(lattice: &BravaisLattice, s: f64, tol: f64) -> Result<Self> {
        let sum = LatticeSum::new(lattice, s, tol)?;
        let zeta = sum.zeta();
        Ok(ZetaCache {
            sum,
            zeta,
            hurwitz: HashMap::new(),
        })
    }

    pub fn zeta(&self) -> ZetaResult {
        self.zeta
    }

    pub fn hurwitz(&mut self, x: &[f64]) -> Result<ZetaResult> {
        let (y, _) = self.sum.lattice.reduce(x);
        let key = canonical_key(&y);
        if let Some(v) = self.hurwitz.get(&key) {
            return Ok(*v);
        }
        let v = self.sum.hurwitz(x)?;
        self.hurwitz.insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.hurwitz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hurwitz.is_empty()
    }
}

fn canonical_key(y: &[f64]) -> Vec<u64> {
    let first = y.iter().find(|v| **v != 0.0).copied().unwrap_or(0.0);
    let sign = if first < 0.0 { -1.0 } else { 1.0 };
    // +0.0 normalizes negative zeros
    y.iter().map(|v| (sign * v + 0.0).to_bits()).collect()
}

fn check_periodic_input(lattice: &BravaisLattice, config: &PointConfiguration) -> Result<()> {
    if config.dim() != lattice.dim {
        return Err(RieszError::DimensionMismatch {
            expected: lattice.dim,
            got: config.dim(),
        });
    }
    if config.is_empty() {
        return Err(RieszError::InvalidParameter("periodic energy needs at least one point".into()));
    }
    if let Some(i) = (0..config.len()).find(|&i| !lattice.in_fundamental_domain(config.point(i))) {
        return Err(RieszError::OutsideDomain { index: i });
    }
    Ok(())
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `E_{s,Λ}(ω_N) = N ζ_Λ(s) + Σ_{x != y} ζ_Λ(s, x - y)`, every zeta certified
/// to `tol / N²`; the returned `tail_bound` covers the whole sum.
pub fn periodic_energy_with_bound(
    lattice: &BravaisLattice,
    config: &PointConfiguration,
    s: f64,
    tol: f64,
) -> Result<ZetaResult> {
    check_periodic_input(lattice, config)?;
    let n = config.len();
    let mut cache = ZetaCache::new(lattice, s, tol / (n * n) as f64)?;
    let z = cache.zeta();
    let mut value = n as f64 * z.value;
    let mut bound = n as f64 * z.tail_bound;
    for i in 0..n {
        for j in i + 1..n {
            let h = cache.hurwitz(&diff(config.point(i), config.point(j))).map_err(|e| match e {
                RieszError::OnLatticePoint => RieszError::Congruent { i, j },
                other => other,
            })?;
            value += 2.0 * h.value;
            bound += 2.0 * h.tail_bound;
        }
    }
    Ok(ZetaResult {
        value,
        tail_bound: bound,
        shells_used: z.shells_used,
    })
}

pub fn periodic_energy(lattice: &BravaisLattice, config: &PointConfiguration, s: f64, tol: f64) -> Result<f64> {
    Ok(periodic_energy_with_bound(lattice, config, s, tol)?.value)
}

/// `W_s(Λ) = ζ_Λ(s) / |Λ|`.
pub fn lattice_ws(lattice: &BravaisLattice, s: f64, tol: f64) -> Result<f64> {
    Ok(epstein_zeta(lattice, s, tol)?.value / lattice.covolume)
}

/// `W_s(ω_N + Λ) = E_{s,Λ}(ω_N) / |Λ|`.
pub fn periodic_config_ws(lattice: &BravaisLattice, config: &PointConfiguration, s: f64, tol: f64) -> Result<f64> {
    Ok(periodic_energy(lattice, config, s, tol)? / lattice.covolume)
}

/// Periodic energy and its gradient with a shared truncation, for optimizers.
pub(crate) fn periodic_energy_and_gradient(
    sum: &LatticeSum,
    zeta: f64,
    config: &PointConfiguration,
) -> Result<(f64, Vec<f64>)> {
    let n = config.len();
    let d = config.dim();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let evals: Vec<Result<(f64, Vec<f64>)>> = if pairs.len() >= 16 {
        pairs
            .par_iter()
            .map(|&(i, j)| sum.hurwitz_with_gradient(&diff(config.point(i), config.point(j))))
            .collect()
    } else {
        pairs
            .iter()
            .map(|&(i, j)| sum.hurwitz_with_gradient(&diff(config.point(i), config.point(j))))
            .collect()
    };
    let mut energy = n as f64 * zeta;
    let mut grad = vec![0.0; n * d];
    for (&(i, j), r) in pairs.iter().zip(evals) {
        let (v, g) = r.map_err(|e| match e {
            RieszError::OnLatticePoint => RieszError::Congruent { i, j },
            other => other,
        })?;
        energy += 2.0 * v;
        for k in 0..d {
            grad[i * d + k] += 2.0 * g[k];
            grad[j * d + k] -= 2.0 * g[k];
        }
    }
    Ok((energy, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const ZETA_1_5: f64 = 2.612_375_348_685_488;
    const ZETA_3: f64 = 1.202_056_903_159_594_2;

    fn riemann_zeta(s: f64) -> f64 {
        match s {
            x if x == 1.5 => ZETA_1_5,
            x if x == 2.0 => PI * PI / 6.0,
            x if x == 3.0 => ZETA_3,
            x if x == 4.0 => PI.powi(4) / 90.0,
            _ => unreachable!(),
        }
    }

    #[test]
    fn certified_error_in_one_dimension() {
        let z = BravaisLattice::cubic(1, 1.0).unwrap();
        for s in [1.5, 2.0, 3.0, 4.0] {
            let r = epstein_zeta(&z, s, 1e-9).unwrap();
            let exact = 2.0 * riemann_zeta(s);
            assert!(r.tail_bound <= 1e-9);
            assert!((r.value - exact).abs() <= r.tail_bound, "s={s}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn zeta_examples() {
        let z = BravaisLattice::cubic(1, 1.0).unwrap();
        let r = epstein_zeta(&z, 2.0, 1e-8).unwrap();
        assert!((r.value - PI * PI / 3.0).abs() <= 1e-8);
        let z2 = BravaisLattice::cubic(1, 2.0).unwrap();
        let r = epstein_zeta(&z2, 2.0, 1e-8).unwrap();
        assert!((r.value - PI * PI / 12.0).abs() <= 1e-8);
        assert!(matches!(epstein_zeta(&z, 1.0, 1e-8), Err(RieszError::NotHypersingular { .. })));
    }

    #[test]
    fn square_lattice_s4() {
        // 4 ζ(2) β(2), with Catalan's constant β(2)
        let catalan = 0.915_965_594_177_219;
        let exact = 4.0 * PI * PI / 6.0 * catalan;
        let r = epstein_zeta(&BravaisLattice::cubic(2, 1.0).unwrap(), 4.0, 1e-6).unwrap();
        assert!((r.value - exact).abs() <= r.tail_bound.max(1e-12));
        assert!((r.value - 6.026812).abs() < 1e-6);
    }

    #[test]
    fn hurwitz_half_shift() {
        let z = BravaisLattice::cubic(1, 1.0).unwrap();
        let r = epstein_hurwitz_zeta(&z, 2.0, &[0.5], 1e-8).unwrap();
        assert!((r.value - PI * PI).abs() <= 1e-8);
        assert_eq!(epstein_hurwitz_zeta(&z, 2.0, &[3.0], 1e-8), Err(RieszError::OnLatticePoint));
    }

    #[test]
    fn hurwitz_symmetry_and_periodicity() {
        let hex = BravaisLattice::hexagonal();
        let sum = LatticeSum::new(&hex, 3.0, 1e-8).unwrap();
        let x = [0.213, -0.37];
        let a = sum.hurwitz(&x).unwrap().value;
        let b = sum.hurwitz(&[-x[0], -x[1]]).unwrap().value;
        let mut lam = [0.0; 2];
        hex.apply(&[2.0, -1.0], &mut lam);
        let c = sum.hurwitz(&[x[0] + lam[0], x[1] + lam[1]]).unwrap().value;
        assert!((a - b).abs() < 1e-12 * a);
        assert!((a - c).abs() < 1e-12 * a);
    }

    #[test]
    fn hurwitz_gradient_matches_finite_differences() {
        let hex = BravaisLattice::hexagonal();
        let sum = LatticeSum::new(&hex, 4.0, 1e-10).unwrap();
        let x = [0.31, 0.12];
        let (_, g) = sum.hurwitz_with_gradient(&x).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut p = x;
            p[k] += h;
            let mut m = x;
            m[k] -= h;
            let fd = (sum.hurwitz(&p).unwrap().value - sum.hurwitz(&m).unwrap().value) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-6 * g[k].abs().max(1.0), "{k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn rotation_invariance() {
        let base = BravaisLattice::hexagonal();
        let th: f64 = 0.7;
        let (c, s) = (th.cos(), th.sin());
        let u = base.generator();
        let rot = vec![
            c * u[0] - s * u[2],
            c * u[1] - s * u[3],
            s * u[0] + c * u[2],
            s * u[1] + c * u[3],
        ];
        let rotated = BravaisLattice::new(2, rot).unwrap();
        let a = epstein_zeta(&base, 3.0, 1e-8).unwrap().value;
        let b = epstein_zeta(&rotated, 3.0, 1e-8).unwrap().value;
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn periodic_energy_two_points() {
        let z = BravaisLattice::cubic(1, 1.0).unwrap();
        let w = PointConfiguration::from_scalars(&[0.0, 0.5]).unwrap();
        let e = periodic_energy(&z, &w, 2.0, 1e-8).unwrap();
        assert!((e - 8.0 * PI * PI / 3.0).abs() < 1e-7);
        // unfolded: ω + Z = (1/2) Z
        let half = BravaisLattice::cubic(1, 0.5).unwrap();
        let unfolded = 2.0 * epstein_zeta(&half, 2.0, 1e-9).unwrap().value;
        assert!((e - unfolded).abs() < 1e-7);
    }

    #[test]
    fn periodic_energy_equal_spacing() {
        let z = BravaisLattice::cubic(1, 1.0).unwrap();
        for n in [1usize, 3, 5, 8] {
            let pts: Vec<f64> = (0..n).map(|k| z.wrap(&[k as f64 / n as f64])[0]).collect();
            let w = PointConfiguration::from_scalars(&pts).unwrap();
            let e = periodic_energy_with_bound(&z, &w, 2.0, 1e-8).unwrap();
            let exact = PI * PI / 3.0 * (n as f64).powi(3);
            assert!(e.tail_bound <= 1e-8);
            assert!((e.value - exact).abs() <= e.tail_bound + 1e-12 * exact, "n={n}");
        }
    }

    #[test]
    fn periodic_energy_errors() {
        let z = BravaisLattice::cubic(1, 1.0).unwrap();
        let w = PointConfiguration::from_scalars(&[0.1, 0.1]).unwrap();
        assert_eq!(periodic_energy(&z, &w, 2.0, 1e-6), Err(RieszError::Congruent { i: 0, j: 1 }));
        let out = PointConfiguration::from_scalars(&[0.7]).unwrap();
        assert!(matches!(periodic_energy(&z, &out, 2.0, 1e-6), Err(RieszError::OutsideDomain { .. })));
    }

    #[test]
    fn periodic_energy_matches_direct_image_sum() {
        // direct double sum over images within |n|_∞ <= M, plus the integral tail bound
        let hex = BravaisLattice::hexagonal();
        let s = 5.0;
        let pts = [vec![0.1, 0.05], vec![-0.3, 0.2], vec![0.25, -0.3]];
        let w = PointConfiguration::from_points(2, &pts).unwrap();
        let e = periodic_energy_with_bound(&hex, &w, s, 1e-9).unwrap();
        let m = 120i64;
        let mut direct = 0.0;
        let mut y = [0.0; 2];
        for p in &pts {
            for q in &pts {
                for a in -m..=m {
                    for b in -m..=m {
                        hex.apply(&[a as f64, b as f64], &mut y);
                        let r2 = (p[0] - q[0] - y[0]).powi(2) + (p[1] - q[1] - y[1]).powi(2);
                        if r2 > 0.0 {
                            direct += r2.powf(-s / 2.0);
                        }
                    }
                }
            }
        }
        // remainder beyond the box: 9 · 2π ∫_{ρ}^∞ r^{1-s} dr / |Λ| with ρ = σ_min·(m+1/2) - 1
        let rho = hex.sigma_min * (m as f64 + 0.5) - 1.0;
        let tail = 9.0 * 2.0 * PI * rho.powf(2.0 - s) / (s - 2.0) / hex.covolume();
        assert!(direct <= e.value + e.tail_bound);
        assert!(e.value - e.tail_bound <= direct + tail);
    }

    #[test]
    fn lattice_ws_scaling() {
        for s in [1.5, 2.0, 4.0] {
            let base = lattice_ws(&BravaisLattice::cubic(1, 1.0).unwrap(), s, 1e-10).unwrap();
            for a in [0.5, 2.0, 3.0] {
                let w = lattice_ws(&BravaisLattice::cubic(1, a).unwrap(), s, 1e-10).unwrap();
                let expected = a.powf(-(1.0 + s)) * base;
                assert!((w - expected).abs() < 1e-8 * expected.max(1.0), "s={s} a={a}");
            }
        }
    }

    #[test]
    fn periodic_config_ws_examples() {
        let z = BravaisLattice::cubic(1, 1.0).unwrap();
        let w = PointConfiguration::from_scalars(&[0.0, 0.5]).unwrap();
        assert!((periodic_config_ws(&z, &w, 2.0, 1e-8).unwrap() - 8.0 * PI * PI / 3.0).abs() < 1e-7);
        let z2 = BravaisLattice::cubic(1, 2.0).unwrap();
        let one = PointConfiguration::from_scalars(&[0.0]).unwrap();
        assert!((periodic_config_ws(&z2, &one, 2.0, 1e-9).unwrap() - PI * PI / 24.0).abs() < 1e-8);
    }

    #[test]
    fn singular_generator_rejected() {
        assert!(BravaisLattice::new(2, vec![1.0, 2.0, 2.0, 4.0]).is_err());
        let hex = BravaisLattice::hexagonal();
        assert!((hex.covolume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cache_reuses_sign_symmetric_values() {
        let z = BravaisLattice::cubic(1, 1.0).unwrap();
        let mut cache = ZetaCache::new(&z, 2.0, 1e-8).unwrap();
        let a = cache.hurwitz(&[0.25]).unwrap();
        let b = cache.hurwitz(&[-0.25]).unwrap();
        let c = cache.hurwitz(&[0.75]).unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
