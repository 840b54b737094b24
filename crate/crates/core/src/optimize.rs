//! Energy minimization for confined and periodic systems, and extrapolation
//! of the asymptotic constant `C_{s,d}`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::PointConfiguration;
use crate::energy::{energy_and_gradient, total_energy, RieszParams};
use crate::error::{Result, RieszError};
use crate::field::{Domain, FieldSpec};
use crate::lattice::{periodic_energy_and_gradient, periodic_energy_with_bound, BravaisLattice, LatticeSum};
use crate::rng::{stratified_jitter, stream_rng};

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const DISAGREEMENT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Stop once the projected-gradient max-norm is below this times `N^{s/d}`.
    pub gradient_tol: f64,
    /// Total certified error budget of periodic energies.
    pub zeta_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iterations: 100_000,
            gradient_tol: 1e-8,
            zeta_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeReport {
    pub best_config: PointConfiguration,
    pub best_energy: f64,
    pub restarts_used: usize,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub restart_energies: Vec<f64>,
    /// Whether restarts ended more than `1e-6` relative energy apart.
    pub restarts_disagree: bool,
    /// Accepted energies of the best restart, starting from its initial point.
    pub energy_trace: Vec<f64>,
    pub params: RieszParams,
}

impl MinimizeReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "params": self.params,
            "best_energy": self.best_energy,
            "restart_energies": self.restart_energies,
            "restarts_used": self.restarts_used,
            "restarts_disagree": self.restarts_disagree,
            "gradient_norm": self.gradient_norm,
            "iterations": self.iterations,
            "best_config": self.best_config.to_csv(),
        })
    }
}

trait Objective: Sync {
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
    /// Point reached by a step of length `t` along `-g`, with the displacement
    /// used for the sufficient-decrease test; `None` if infeasible.
    fn step(&self, x: &[f64], g: &[f64], t: f64) -> Option<(Vec<f64>, Vec<f64>)>;
    fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64;
}

struct Confined<'a> {
    field: &'a FieldSpec,
    params: RieszParams,
}

impl Objective for Confined<'_> {
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let c = PointConfiguration::new(self.params.d, x.to_vec())?;
        energy_and_gradient(&c, self.field, &self.params)
    }

    fn step(&self, x: &[f64], g: &[f64], t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let d = self.params.d;
        let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - t * b).collect();
        if let Some((lo, hi)) = self.field.domain.bounds() {
            for (k, v) in y.iter_mut().enumerate() {
                *v = v.clamp(lo[k % d], hi[k % d]);
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if let Domain::Region { .. } = self.field.domain {
            if !y.chunks_exact(d).all(|p| self.field.domain.contains(p)) {
                return None;
            }
        }
        let delta = y.iter().zip(x).map(|(a, b)| a - b).collect();
        Some((y, delta))
    }

    fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        let d = self.params.d;
        let bounds = self.field.domain.bounds();
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(k, (v, gk))| match bounds {
                Some((lo, hi)) if (*v <= lo[k % d] && *gk > 0.0) || (*v >= hi[k % d] && *gk < 0.0) => 0.0,
                _ => gk.abs(),
            })
            .fold(0.0, f64::max)
    }
}

struct Periodic {
    sum: LatticeSum,
    zeta: f64,
    d: usize,
}

impl Objective for Periodic {
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let c = PointConfiguration::new(self.d, x.to_vec())?;
        periodic_energy_and_gradient(&self.sum, self.zeta, &c)
    }

    fn step(&self, x: &[f64], g: &[f64], t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let delta: Vec<f64> = g.iter().map(|v| -t * v).collect();
        let mut y = Vec::with_capacity(x.len());
        for (p, dp) in x.chunks_exact(self.d).zip(delta.chunks_exact(self.d)) {
            let moved: Vec<f64> = p.iter().zip(dp).map(|(a, b)| a + b).collect();
            y.extend(self.sum.lattice().wrap(&moved));
        }
        y.iter().all(|v| v.is_finite()).then_some((y, delta))
    }

    fn projected_gradient_norm(&self, _x: &[f64], g: &[f64]) -> f64 {
        g.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

struct Descent {
    coords: Vec<f64>,
    energy: f64,
    gradient_norm: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Projected gradient descent with Barzilai-Borwein trial steps and Armijo
// backtracking. Only strictly decreasing steps are accepted.
fn descend(obj: &dyn Objective, start: Vec<f64>, gtol: f64, max_iterations: usize, spacing: f64) -> Result<Descent> {
    let mut x = start;
    let (mut e, mut g) = obj.eval(&x)?;
    let mut trace = vec![e];
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut t = if gmax > 0.0 { 0.1 * spacing / gmax } else { 1.0 };
    let mut iterations = 0;
    let mut pg = obj.projected_gradient_norm(&x, &g);
    while iterations < max_iterations && pg > gtol {
        let mut trial = t;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let Some((y, delta)) = obj.step(&x, &g, trial) else {
                trial *= 0.5;
                continue;
            };
            let slope = dot(&g, &delta);
            if slope >= 0.0 {
                break;
            }
            match obj.eval(&y) {
                Ok((ey, gy)) if ey < e && ey <= e + ARMIJO * slope => {
                    accepted = Some((y, delta, ey, gy));
                    break;
                }
                Ok(_) | Err(RieszError::Singular { .. }) | Err(RieszError::Congruent { .. }) => trial *= 0.5,
                Err(other) => return Err(other),
            }
        }
        let Some((y, delta, ey, gy)) = accepted else {
            break;
        };
        let dg: Vec<f64> = gy.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&delta, &dg);
        t = if sy > 0.0 { dot(&delta, &delta) / sy } else { 2.0 * trial };
        x = y;
        e = ey;
        g = gy;
        trace.push(e);
        iterations += 1;
        pg = obj.projected_gradient_norm(&x, &g);
    }
    Ok(Descent {
        coords: x,
        energy: e,
        gradient_norm: pg,
        iterations,
        trace,
    })
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn run_restarts<F>(restarts: usize, run: F) -> Result<(Descent, Vec<f64>, bool)>
where
    F: Fn(u64) -> Result<Descent> + Sync + Send,
{
    if restarts == 0 {
        return Err(RieszError::InvalidParameter("restarts must be >= 1".into()));
    }
    let results: Vec<Descent> = (0..restarts as u64).into_par_iter().map(run).collect::<Result<_>>()?;
    let energies: Vec<f64> = results.iter().map(|r| r.energy).collect();
    let lo = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let disagree = (hi - lo) > DISAGREEMENT * lo.abs().max(f64::MIN_POSITIVE);
    let best = results
        .into_iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| lexicographic(&a.coords, &b.coords)))
        .expect("at least one restart");
    Ok((best, energies, disagree))
}

fn typical_spacing(field: &FieldSpec, n: usize) -> f64 {
    let d = field.dim();
    let vol = match crate::rng::sampling_box(field) {
        Ok((lo, hi)) => lo.iter().zip(&hi).map(|(a, b)| b - a).product(),
        Err(_) => 1.0,
    };
    (vol / n as f64).powf(1.0 / d as f64)
}

/// Minimizes `H_N` over `Ω^N` from `restarts` stratified random starts.
pub fn minimize_confined(field: &FieldSpec, params: &RieszParams, restarts: usize, seed: u64) -> Result<MinimizeReport> {
    minimize_confined_with(field, params, restarts, seed, &MinimizeOptions::default())
}

pub fn minimize_confined_with(
    field: &FieldSpec,
    params: &RieszParams,
    restarts: usize,
    seed: u64,
    options: &MinimizeOptions,
) -> Result<MinimizeReport> {
    params.validate()?;
    field.validate()?;
    if field.dim() != params.d {
        return Err(RieszError::DimensionMismatch {
            expected: params.d,
            got: field.dim(),
        });
    }
    let obj = Confined {
        field,
        params: *params,
    };
    let gtol = options.gradient_tol * params.field_weight();
    let spacing = typical_spacing(field, params.n);
    let (best, energies, disagree) = run_restarts(restarts, |k| {
        let start = stratified_jitter(field, params.n, &mut stream_rng(seed, k))?;
        descend(&obj, start.coords().to_vec(), gtol, options.max_iterations, spacing)
    })?;
    let config = PointConfiguration::new(params.d, best.coords)?.with_domain(field.domain.clone())?;
    let energy = total_energy(&config, field, params)?;
    Ok(MinimizeReport {
        best_config: config,
        best_energy: energy,
        restarts_used: restarts,
        gradient_norm: best.gradient_norm,
        iterations: best.iterations,
        restart_energies: energies,
        restarts_disagree: disagree,
        energy_trace: best.trace,
        params: *params,
    })
}

/// Minimizes the `Λ`-periodic energy of `n` points in the fundamental domain.
pub fn minimize_periodic(lattice: &BravaisLattice, s: f64, n: usize, restarts: usize, seed: u64) -> Result<MinimizeReport> {
    minimize_periodic_with(lattice, s, n, restarts, seed, &MinimizeOptions::default())
}

pub fn minimize_periodic_with(
    lattice: &BravaisLattice,
    s: f64,
    n: usize,
    restarts: usize,
    seed: u64,
    options: &MinimizeOptions,
) -> Result<MinimizeReport> {
    let d = lattice.dim();
    let params = RieszParams::new(d, s, 0.0, n)?;
    let tol = options.zeta_tol / (n * n) as f64;
    let sum = LatticeSum::new(lattice, s, tol)?;
    let zeta = sum.zeta().value;
    let obj = Periodic { sum, zeta, d };
    let gtol = options.gradient_tol * params.field_weight();
    let unit = FieldSpec::free(Domain::cube(d, -0.5, 0.5));
    let spacing = (lattice.covolume() / n as f64).powf(1.0 / d as f64);
    let (best, energies, disagree) = run_restarts(restarts, |k| {
        let raw = stratified_jitter(&unit, n, &mut stream_rng(seed, k))?;
        let mut start = Vec::with_capacity(n * d);
        let mut y = vec![0.0; d];
        for p in raw.points() {
            lattice.apply(p, &mut y);
            start.extend(lattice.wrap(&y));
        }
        descend(&obj, start, gtol, options.max_iterations, spacing)
    })?;
    let config = PointConfiguration::new(d, best.coords)?;
    let energy = periodic_energy_with_bound(lattice, &config, s, options.zeta_tol)?.value;
    Ok(MinimizeReport {
        best_config: config,
        best_energy: energy,
        restarts_used: restarts,
        gradient_norm: best.gradient_norm,
        iterations: best.iterations,
        restart_energies: energies,
        restarts_disagree: disagree,
        energy_trace: best.trace,
        params,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum CsdMode {
    /// Minimal energy in the unit cube `[0,1]^d`.
    ConfinedCube,
    /// Minimal periodic energy for a lattice of covolume 1.
    Periodic(BravaisLattice),
}

impl CsdMode {
    pub fn periodic_unit(d: usize) -> Result<Self> {
        Ok(CsdMode::Periodic(BravaisLattice::cubic(d, 1.0)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsdRow {
    pub n: usize,
    pub energy: f64,
    /// `E / N^{1+s/d}`
    pub ratio: f64,
    pub restarts_disagree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsdEstimate {
    pub s: f64,
    pub d: usize,
    pub table: Vec<CsdRow>,
    /// Intercept `a` of the fit `a + b N^{-1/d}`.
    pub extrapolated: f64,
    pub slope: f64,
}

/// Failure at some `N`, with the rows completed before it.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("C_sd estimate failed at N={n}: {source}")]
pub struct CsdError {
    pub n: usize,
    pub partial: Vec<CsdRow>,
    pub source: RieszError,
}

pub fn estimate_csd(
    s: f64,
    d: usize,
    n_list: &[usize],
    mode: &CsdMode,
    restarts: usize,
    seed: u64,
) -> std::result::Result<CsdEstimate, CsdError> {
    estimate_csd_with(s, d, n_list, mode, restarts, seed, &MinimizeOptions::default())
}

pub fn estimate_csd_with(
    s: f64,
    d: usize,
    n_list: &[usize],
    mode: &CsdMode,
    restarts: usize,
    seed: u64,
    options: &MinimizeOptions,
) -> std::result::Result<CsdEstimate, CsdError> {
    let fail = |n, partial: &[CsdRow], source| CsdError {
        n,
        partial: partial.to_vec(),
        source,
    };
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(fail(
            0,
            &[],
            RieszError::InvalidParameter("N list must be nonempty, positive and increasing".into()),
        ));
    }
    if let CsdMode::Periodic(l) = mode {
        if l.dim() != d || (l.covolume() - 1.0).abs() > 1e-12 {
            return Err(fail(
                0,
                &[],
                RieszError::InvalidParameter("periodic mode needs a covolume-1 lattice of dimension d".into()),
            ));
        }
    }
    let mut table: Vec<CsdRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let report = match mode {
            CsdMode::ConfinedCube => RieszParams::new(d, s, 1.0, n).and_then(|p| {
                minimize_confined_with(&FieldSpec::free(Domain::unit_cube(d)), &p, restarts, seed, options)
            }),
            CsdMode::Periodic(lattice) => minimize_periodic_with(lattice, s, n, restarts, seed, options),
        }
        .map_err(|e| fail(n, &table, e))?;
        let ratio = report.best_energy / (n as f64).powf(1.0 + s / d as f64);
        log::info!("csd N={n} ratio={ratio}");
        table.push(CsdRow {
            n,
            energy: report.best_energy,
            ratio,
            restarts_disagree: report.restarts_disagree,
        });
    }
    let (a, b) = fit_tail(&table, d);
    Ok(CsdEstimate {
        s,
        d,
        table,
        extrapolated: a,
        slope: b,
    })
}

// Least-squares `a + b N^{-1/d}` over the largest half of the table.
fn fit_tail(table: &[CsdRow], d: usize) -> (f64, f64) {
    let used = &table[table.len() / 2..];
    if used.len() < 2 {
        return (used[0].ratio, 0.0);
    }
    let xs: Vec<f64> = used.iter().map(|r| (r.n as f64).powf(-1.0 / d as f64)).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = used.iter().map(|r| r.ratio).sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(used).map(|(x, r)| (x - mx) * (r.ratio - my)).sum();
    if sxx == 0.0 {
        return (my, 0.0);
    }
    let b = sxy / sxx;
    (my - b * mx, b)
}
