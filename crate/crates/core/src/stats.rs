//! Empirical measures, pair correlations, nearest-neighbour spacings and the
//! explicit `β = ∞` limit density.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PointConfiguration;
use crate::error::{Result, RieszError};
use crate::field::FieldSpec;
use crate::quad::{adaptive_1d, adaptive_box, gauss_box};
use crate::sampler::SampleArchive;

/// Histogram of points on a product grid of bins. Bins are half-open except
/// the last one on each axis, which is closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalHistogram {
    pub edges: Vec<Vec<f64>>,
    /// Row-major over axes, first axis slowest.
    pub masses: Vec<f64>,
    pub sample_count: usize,
}

fn check_edges(edges: &[Vec<f64>]) -> Result<()> {
    if edges.is_empty() {
        return Err(RieszError::InvalidParameter("need bin edges for at least one axis".into()));
    }
    for e in edges {
        if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) || e.iter().any(|v| !v.is_finite()) {
            return Err(RieszError::InvalidParameter("bin edges must be finite and increasing".into()));
        }
    }
    Ok(())
}

fn bin_of(edges: &[f64], x: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if x < edges[0] || x > edges[last] {
        return None;
    }
    if x == edges[last] {
        return Some(last - 1);
    }
    Some(edges.partition_point(|e| *e <= x) - 1)
}

impl EmpiricalHistogram {
    /// `n` equal bins on `[lo, hi]` along one axis.
    pub fn uniform_edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 }).collect()
    }

    fn flat_index(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (e, v) in self.edges.iter().zip(x) {
            idx = idx * (e.len() - 1) + bin_of(e, *v)?;
        }
        Some(idx)
    }

    /// Volume of bin `k`.
    pub fn bin_volume(&self, k: usize) -> f64 {
        let (lo, hi) = self.bin_box(k);
        lo.iter().zip(&hi).map(|(a, b)| b - a).product()
    }

    pub fn bin_box(&self, mut k: usize) -> (Vec<f64>, Vec<f64>) {
        let d = self.edges.len();
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for a in (0..d).rev() {
            let m = self.edges[a].len() - 1;
            let i = k % m;
            k /= m;
            lo[a] = self.edges[a][i];
            hi[a] = self.edges[a][i + 1];
        }
        (lo, hi)
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let shape: Vec<String> = self.edges.iter().map(|e| (e.len() - 1).to_string()).collect();
        writeln!(out, "# bins={}, samples={}", shape.join("x"), self.sample_count).unwrap();
        let d = self.edges.len();
        let cols: Vec<String> = (0..d).flat_map(|a| [format!("lo{a}"), format!("hi{a}")]).collect();
        writeln!(out, "{},mass", cols.join(",")).unwrap();
        for (k, m) in self.masses.iter().enumerate() {
            let (lo, hi) = self.bin_box(k);
            let cells: Vec<String> = lo.iter().zip(&hi).flat_map(|(a, b)| [format!("{a:?}"), format!("{b:?}")]).collect();
            writeln!(out, "{},{m:?}", cells.join(",")).unwrap();
        }
        out
    }
}

/// Histogram of `(1/N) Σ δ_{x_i}`.
pub fn empirical_measure(config: &PointConfiguration, edges: &[Vec<f64>]) -> Result<EmpiricalHistogram> {
    pooled_measure(std::slice::from_ref(config), edges)
}

/// Empirical measure averaged over snapshots.
pub fn pooled_measure(snapshots: &[PointConfiguration], edges: &[Vec<f64>]) -> Result<EmpiricalHistogram> {
    check_edges(edges)?;
    let mut hist = EmpiricalHistogram {
        edges: edges.to_vec(),
        masses: vec![0.0; edges.iter().map(|e| e.len() - 1).product()],
        sample_count: 0,
    };
    let mut counts = vec![0u64; hist.masses.len()];
    let mut total = 0u64;
    for snap in snapshots {
        if snap.dim() != edges.len() {
            return Err(RieszError::DimensionMismatch {
                expected: edges.len(),
                got: snap.dim(),
            });
        }
        for (i, p) in snap.points().enumerate() {
            let k = hist.flat_index(p).ok_or(RieszError::OutsideDomain { index: i })?;
            counts[k] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(RieszError::InvalidParameter("no points to histogram".into()));
    }
    hist.masses = counts.iter().map(|c| *c as f64 / total as f64).collect();
    hist.sample_count = total as usize;
    Ok(hist)
}

/// `(1/2) Σ |p_k - q_k|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(RieszError::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Bin probabilities of a density on the histogram's bins.
pub fn bin_probabilities<F>(hist: &EmpiricalHistogram, density: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    (0..hist.masses.len())
        .map(|k| {
            let (lo, hi) = hist.bin_box(k);
            gauss_box(&density, &lo, &hi, 8, 8)
        })
        .collect()
}

/// `X'_N`: every point multiplied by `N^{1/d}`.
pub fn rescaled_configuration(config: &PointConfiguration, n: usize) -> Result<PointConfiguration> {
    if config.len() != n {
        return Err(RieszError::InvalidParameter(format!(
            "configuration has {} points, expected N={n}",
            config.len()
        )));
    }
    config.rescale(n as f64)
}

/// Point counts per unit volume in the window of side `r` around each tag,
/// computed on `θ_{N^{1/d} x} X'_N`.
pub fn tagged_local_intensity(config: &PointConfiguration, tags: &[Vec<f64>], r: f64) -> Result<Vec<f64>> {
    let n = config.len();
    let scaled = rescaled_configuration(config, n)?;
    let f = (n as f64).powf(1.0 / config.dim() as f64);
    tags.iter()
        .map(|x| {
            let centre: Vec<f64> = x.iter().map(|v| v * f).collect();
            scaled.translate(&centre)?.finite_density(r)
        })
        .collect()
}

/// Symmetric per-axis bins for separation vectors. Bin `0` is
/// `[-r_0, r_0]`, bin `±k` is `±[r_{k-1}, r_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBins {
    pub radii: Vec<f64>,
}

impl CorrelationBins {
    pub fn from_radii(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(RieszError::InvalidParameter("bin radii must be positive and increasing".into()));
        }
        Ok(CorrelationBins { radii })
    }

    /// Bins of width `w` centred on the multiples of `w`, out to `count·w`.
    pub fn centered(width: f64, count: usize) -> Result<Self> {
        Self::from_radii((0..=count).map(|k| (k as f64 + 0.5) * width).collect())
    }

    /// Geometric radii from `r0` growing by `ratio` until `r_max` is covered.
    pub fn geometric(r0: f64, ratio: f64, r_max: f64) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(RieszError::InvalidParameter("geometric ratio must exceed 1".into()));
        }
        let mut radii = vec![r0];
        while *radii.last().unwrap() < r_max {
            radii.push(radii.last().unwrap() * ratio);
        }
        Self::from_radii(radii)
    }

    pub fn per_axis(&self) -> usize {
        2 * self.radii.len() - 1
    }

    fn max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    // Signed index in -(m-1)..=(m-1), mirrored so that v and -v land in
    // opposite bins exactly.
    fn signed(&self, v: f64) -> Option<i64> {
        let a = v.abs();
        if a >= self.max() {
            return None;
        }
        let k = if a <= self.radii[0] {
            0
        } else {
            self.radii.partition_point(|r| *r <= a) as i64
        };
        Some(if v < 0.0 { -k } else { k })
    }

    fn interval(&self, k: i64) -> (f64, f64) {
        let m = k.unsigned_abs() as usize;
        let (a, b) = if m == 0 {
            (-self.radii[0], self.radii[0])
        } else {
            (self.radii[m - 1], self.radii[m])
        };
        if k < 0 {
            (-b, -a)
        } else {
            (a, b)
        }
    }
}

/// Binned estimate of the two-point correlation density `ρ_2(v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub dim: usize,
    pub bins: CorrelationBins,
    /// Row-major over axes with signed bin indices shifted to `0..per_axis`.
    pub values: Vec<f64>,
    pub window: f64,
    pub sample_count: usize,
    /// Mean number of points per unit volume in the window.
    pub intensity: f64,
}

impl CorrelationEstimate {
    fn index_to_signed(&self, mut k: usize) -> Vec<i64> {
        let m = self.bins.per_axis();
        let half = (m / 2) as i64;
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = (k % m) as i64 - half;
            k /= m;
        }
        out
    }

    /// Lower and upper corner of bin `k`.
    pub fn bin_box(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let signed = self.index_to_signed(k);
        signed.iter().map(|&i| self.bins.interval(i)).unzip()
    }

    pub fn midpoint(&self, k: usize) -> Vec<f64> {
        let (lo, hi) = self.bin_box(k);
        lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn is_central(&self, k: usize) -> bool {
        self.index_to_signed(k).iter().all(|&i| i == 0)
    }

    /// Value in the bin containing `v`.
    pub fn value_at(&self, v: &[f64]) -> Option<f64> {
        let m = self.bins.per_axis() as i64;
        let mut idx = 0i64;
        for x in v {
            idx = idx * m + self.bins.signed(*x)? + m / 2;
        }
        Some(self.values[idx as usize])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# bins={}^{}, R={:?}, samples={}, intensity={:?}",
            self.bins.per_axis(),
            self.dim,
            self.window,
            self.sample_count,
            self.intensity
        )
        .unwrap();
        let cols: Vec<String> = (0..self.dim).map(|a| format!("v{a}")).collect();
        writeln!(out, "{},rho2", cols.join(",")).unwrap();
        for (k, val) in self.values.iter().enumerate() {
            let mid: Vec<String> = self.midpoint(k).iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{},{val:?}", mid.join(",")).unwrap();
        }
        out
    }
}

/// Edge-corrected estimator: ordered pairs `p != q` of the window `K_R` with
/// `p - q` in a bin, divided by `R^d Π_i(1 - |v_i|/R)`, the bin volume and the
/// number of snapshots, where `v` is the bin midpoint.
pub fn two_point_correlation(
    snapshots: &[PointConfiguration],
    window: f64,
    bins: &CorrelationBins,
) -> Result<CorrelationEstimate> {
    if snapshots.is_empty() {
        return Err(RieszError::InvalidParameter("no snapshots".into()));
    }
    if !(window > 0.0) {
        return Err(RieszError::InvalidParameter(format!("window side must be positive, got {window}")));
    }
    let d = snapshots[0].dim();
    let m = bins.per_axis();
    let nbins = m.pow(d as u32);
    let half = (m / 2) as i64;
    let per_snapshot: Vec<(Vec<u64>, usize)> = snapshots
        .par_iter()
        .map(|snap| {
            let inside = snap.restrict_to_window(window);
            let mut counts = vec![0u64; nbins];
            for i in 0..inside.len() {
                for j in i + 1..inside.len() {
                    let (p, q) = (inside.point(i), inside.point(j));
                    let mut idx = 0i64;
                    let mut mirror = 0i64;
                    let mut ok = true;
                    for a in 0..d {
                        match bins.signed(p[a] - q[a]) {
                            Some(k) => {
                                idx = idx * m as i64 + k + half;
                                mirror = mirror * m as i64 - k + half;
                            }
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        counts[idx as usize] += 1;
                        counts[mirror as usize] += 1;
                    }
                }
            }
            (counts, inside.len())
        })
        .collect();
    if per_snapshot.iter().all(|(_, n)| *n == 0) {
        return Err(RieszError::InvalidParameter("empty window".into()));
    }
    if snapshots.iter().any(|s| s.dim() != d) {
        return Err(RieszError::DimensionMismatch {
            expected: d,
            got: snapshots.iter().find(|s| s.dim() != d).unwrap().dim(),
        });
    }
    let mut counts = vec![0u64; nbins];
    for (c, _) in &per_snapshot {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
    }
    let samples = snapshots.len();
    let vol = window.powi(d as i32);
    let points: usize = per_snapshot.iter().map(|(_, n)| n).sum();
    let mut est = CorrelationEstimate {
        dim: d,
        bins: bins.clone(),
        values: vec![0.0; nbins],
        window,
        sample_count: samples,
        intensity: points as f64 / (samples as f64 * vol),
    };
    for (k, c) in counts.iter().enumerate() {
        let (lo, hi) = est.bin_box(k);
        let bin_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let overlap: f64 = est.midpoint(k).iter().map(|v| 1.0 - v.abs() / window).product();
        if overlap > 0.0 {
            est.values[k] = *c as f64 / (samples as f64 * vol * overlap * bin_vol);
        }
    }
    Ok(est)
}

/// Correlation estimate from the snapshots of an archive.
pub fn archive_correlation(archive: &SampleArchive, window: f64, bins: &CorrelationBins) -> Result<CorrelationEstimate> {
    two_point_correlation(&archive.snapshots, window, bins)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WsEstimate {
    pub value: f64,
    /// Mass was found in the central bin, which is left out of the sum.
    pub singular_warning: bool,
}

/// `Σ_bins |v|^{-s} ρ̂_2(v) Π_i(1 - |v_i|/R) |bin|` at bin midpoints,
/// central bin excluded.
pub fn ws_from_correlation(corr: &CorrelationEstimate, s: f64) -> WsEstimate {
    let mut value = 0.0;
    let mut singular_warning = false;
    for (k, rho) in corr.values.iter().enumerate() {
        if corr.is_central(k) {
            singular_warning |= *rho != 0.0;
            continue;
        }
        if *rho == 0.0 {
            continue;
        }
        let (lo, hi) = corr.bin_box(k);
        let bin_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let mid = corr.midpoint(k);
        let r = mid.iter().map(|v| v * v).sum::<f64>().sqrt();
        let weight: f64 = mid.iter().map(|v| 1.0 - v.abs() / corr.window).product();
        value += r.powf(-s) * rho * weight * bin_vol;
    }
    WsEstimate {
        value,
        singular_warning,
    }
}

/// Gaps between consecutive sorted points of the central half (d = 1).
pub fn nn_spacing_stats(config: &PointConfiguration) -> Result<(f64, f64, Vec<f64>)> {
    if config.dim() != 1 {
        return Err(RieszError::DimensionMismatch {
            expected: 1,
            got: config.dim(),
        });
    }
    let n = config.len();
    if n < 3 {
        return Err(RieszError::InvalidParameter(format!("need at least 3 points, got {n}")));
    }
    let mut xs = config.coords().to_vec();
    xs.sort_by(f64::total_cmp);
    let (a, b) = (n / 4, (3 * n).div_ceil(4).max(n / 4 + 2).min(n));
    let gaps: Vec<f64> = xs[a..b].windows(2).map(|w| w[1] - w[0]).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gaps.len() as f64;
    Ok((mean, var.sqrt() / mean, gaps))
}

const NORMALIZATION_TOL: f64 = 1e-6;

/// `ρ(x) = [(L - V(x)) / (C (1 + s/d))]_+^{d/s}` with `∫_Ω ρ = 1`.
#[derive(Clone, Debug)]
pub struct LimitMeasure {
    pub level: f64,
    pub s: f64,
    pub d: usize,
    pub csd: f64,
    pub field: FieldSpec,
    /// Box containing `{V < L} ∩ Ω`.
    pub support: (Vec<f64>, Vec<f64>),
    /// `|∫ρ - 1|`
    pub residual: f64,
}

impl LimitMeasure {
    pub fn density(&self, x: &[f64]) -> f64 {
        limit_density(&self.field, self.level, self.s, self.d, self.csd, x)
    }

    /// `x, rho` rows on the given grid.
    pub fn to_csv(&self, grid: &[Vec<f64>]) -> String {
        let mut out = String::new();
        writeln!(out, "# level={:?}, residual={:?}, csd={:?}", self.level, self.residual, self.csd).unwrap();
        let cols: Vec<String> = (0..self.d).map(|a| format!("x{a}")).collect();
        writeln!(out, "{},rho", cols.join(",")).unwrap();
        for x in grid {
            let xs: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{},{:?}", xs.join(","), self.density(x)).unwrap();
        }
        out
    }
}

fn limit_density(field: &FieldSpec, level: f64, s: f64, d: usize, csd: f64, x: &[f64]) -> f64 {
    if !field.domain.contains(x) {
        return 0.0;
    }
    let gap = level - field.potential(x);
    if gap <= 0.0 {
        return 0.0;
    }
    (gap / (csd * (1.0 + s / d as f64))).powf(d as f64 / s)
}

fn integrate(f: &(dyn Fn(&[f64]) -> f64 + Sync), lo: &[f64], hi: &[f64], tol: f64) -> f64 {
    if lo.len() == 1 {
        adaptive_1d(&|t: f64| f(&[t]), lo[0], hi[0], tol).0
    } else {
        adaptive_box(&|x: &[f64]| f(x), lo, hi, tol)
    }
}

/// Solves for the level `L` by safeguarded regula falsi on the normalization integral.
pub fn solve_limit_measure(field: &FieldSpec, s: f64, d: usize, csd: f64) -> Result<LimitMeasure> {
    crate::energy::check_exponent(s, d)?;
    field.validate()?;
    if field.dim() != d {
        return Err(RieszError::DimensionMismatch {
            expected: d,
            got: field.dim(),
        });
    }
    if !(csd > 0.0 && csd.is_finite()) {
        return Err(RieszError::InvalidParameter(format!("C_sd must be positive, got {csd}")));
    }
    let mass = |level: f64| -> Result<(f64, (Vec<f64>, Vec<f64>))> {
        let (lo, hi) = field.sublevel_box(level)?;
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Ok((0.0, (lo, hi)));
        }
        let f = |x: &[f64]| limit_density(field, level, s, d, csd, x);
        Ok((integrate(&f, &lo, &hi, 1e-11), (lo, hi)))
    };
    // bracket: start from the smallest value of V seen on a coarse grid
    let (blo, bhi) = field.sublevel_box(field.potential(&vec![0.0; d]).max(0.0) + 1.0)?;
    let mut lo_level = f64::INFINITY;
    let probes = 64usize;
    for k in 0..probes.pow(d.min(3) as u32) {
        let mut rem = k;
        let x: Vec<f64> = (0..d)
            .map(|a| {
                let i = if a < 3 { rem % probes } else { probes / 2 };
                rem /= probes;
                blo[a] + (bhi[a] - blo[a]) * (i as f64 + 0.5) / probes as f64
            })
            .collect();
        if field.domain.contains(&x) {
            lo_level = lo_level.min(field.potential(&x));
        }
    }
    if !lo_level.is_finite() {
        return Err(RieszError::Bracket("could not locate the domain".into()));
    }
    lo_level -= 1.0;
    let mut step = 1.0;
    let mut hi_level = lo_level + step;
    let mut guard = 0;
    while mass(hi_level)?.0 < 1.0 {
        step *= 2.0;
        hi_level = lo_level + step;
        guard += 1;
        if guard > 200 {
            return Err(RieszError::Bracket("normalization never reaches 1".into()));
        }
    }
    // Illinois regula falsi on mass(L) - 1
    let mut g_lo = mass(lo_level)?.0 - 1.0;
    let mut g_hi = mass(hi_level)?.0 - 1.0;
    let mut level = hi_level;
    let mut side = 0i8;
    for _ in 0..200 {
        if hi_level - lo_level <= 1e-13 * hi_level.abs().max(1.0) {
            break;
        }
        let mut next = hi_level - g_hi * (hi_level - lo_level) / (g_hi - g_lo);
        if !(next > lo_level && next < hi_level) {
            next = 0.5 * (lo_level + hi_level);
        }
        level = next;
        let g = mass(next)?.0 - 1.0;
        if g.abs() <= 1e-13 {
            break;
        }
        if g < 0.0 {
            lo_level = next;
            g_lo = g;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi_level = next;
            g_hi = g;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    let (total, support) = mass(level)?;
    let residual = (total - 1.0).abs();
    if residual > NORMALIZATION_TOL {
        return Err(RieszError::Bracket(format!("normalization residual {residual} after root finding")));
    }
    Ok(LimitMeasure {
        level,
        s,
        d,
        csd,
        field: field.clone(),
        support,
        residual,
    })
}

/// Density argument of the `β = ∞` functional.
pub enum DensityInput<'a> {
    Limit(&'a LimitMeasure),
    Histogram(&'a EmpiricalHistogram),
    /// A density supported in the box `[lo, hi]`.
    Function {
        f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

/// `C ∫ρ^{1+s/d} + ∫Vρ`.
pub fn beta_infinity_functional(density: &DensityInput, field: &FieldSpec, s: f64, d: usize, csd: f64) -> Result<f64> {
    let p = 1.0 + s / d as f64;
    let (mass, first, second) = match density {
        DensityInput::Histogram(h) => {
            let mut first = 0.0;
            let mut second = 0.0;
            for (k, m) in h.masses.iter().enumerate() {
                if *m == 0.0 {
                    continue;
                }
                let (lo, hi) = h.bin_box(k);
                let vol = h.bin_volume(k);
                first += vol * (m / vol).powf(p);
                second += m * gauss_box(|x| field.potential(x), &lo, &hi, 4, 8) / vol;
            }
            (h.total_mass(), first, second)
        }
        DensityInput::Limit(mu) => {
            let (lo, hi) = &mu.support;
            let f = |x: &[f64]| mu.density(x);
            integrals(&f, field, lo, hi, p)
        }
        DensityInput::Function { f, lo, hi } => integrals(*f, field, lo, hi, p),
    };
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(RieszError::Unnormalized { mass });
    }
    Ok(csd * first + second)
}

fn integrals(f: &(dyn Fn(&[f64]) -> f64 + Sync), field: &FieldSpec, lo: &[f64], hi: &[f64], p: f64) -> (f64, f64, f64) {
    let mass = integrate(f, lo, hi, 1e-11);
    let first = integrate(&|x: &[f64]| f(x).powf(p), lo, hi, 1e-11);
    let second = integrate(&|x: &[f64]| field.potential(x) * f(x), lo, hi, 1e-11);
    (mass, first, second)
}
