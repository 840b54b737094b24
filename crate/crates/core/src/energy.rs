//! Riesz energies of finite configurations.
//!
//! Every pair sum runs over ordered pairs `i != j`, so each unordered pair
//! contributes twice. This matches `H_N` literally; halve the result if you
//! want the physics convention.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{dist2, CellIndex};
use crate::config::PointConfiguration;
use crate::error::{Result, RieszError};
use crate::field::FieldSpec;

/// Below this many points kernels run sequentially.
const PARALLEL_THRESHOLD: usize = 512;

/// Target number of near-field neighbours for the default split radius.
const NEAR_FIELD_NEIGHBOURS: f64 = 32.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszParams {
    pub d: usize,
    pub s: f64,
    pub beta: f64,
    pub n: usize,
}

impl RieszParams {
    pub fn new(d: usize, s: f64, beta: f64, n: usize) -> Result<Self> {
        let p = RieszParams { d, s, beta, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.s, self.d)?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(RieszError::InvalidParameter(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.n == 0 {
            return Err(RieszError::InvalidParameter("N must be >= 1".into()));
        }
        Ok(())
    }

    /// `N^{s/d}`, the weight of the external field in `H_N`.
    pub fn field_weight(&self) -> f64 {
        (self.n as f64).powf(self.s / self.d as f64)
    }
}

pub(crate) fn check_exponent(s: f64, d: usize) -> Result<()> {
    if d == 0 {
        return Err(RieszError::InvalidParameter("dimension must be positive".into()));
    }
    if !(s.is_finite() && s > d as f64) {
        return Err(RieszError::NotHypersingular { s, d });
    }
    Ok(())
}

// Evaluates `f` for every index, in parallel for large inputs, and returns
// the results in index order.
fn per_index<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Split radius giving roughly 32 expected near-field neighbours, estimated
/// from the bounding box of the configuration.
pub fn default_tau_split(config: &PointConfiguration) -> f64 {
    let d = config.dim();
    let n = config.len();
    if n < 2 {
        return 1.0;
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in config.points() {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    if extent <= 0.0 {
        return 1.0;
    }
    // degenerate boxes (points on a hyperplane) get the largest extent as side
    let volume: f64 = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a).max(extent / n as f64))
        .product();
    let density = n as f64 / volume;
    let ball = unit_ball_volume(d);
    let tau = (NEAR_FIELD_NEIGHBOURS / (density * ball)).powf(1.0 / d as f64);
    tau.min(extent).max(extent * 1e-6)
}

pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    // V_d = π^{d/2} / Γ(d/2 + 1), via the recursion V_d = 2π/d V_{d-2}
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Near- and far-field parts of `Σ_{j != skip} |x - x_j|^{-s}`.
///
/// Points in the one-ring of `x`'s cell at distance below `tau_split` form the
/// near field; all remaining points, including those of non-adjacent cells,
/// are summed directly as the far field. Both parts are exact.
fn split_potential(
    config: &PointConfiguration,
    cells: &CellIndex,
    x: &[f64],
    skip: Option<usize>,
    s: f64,
    tau_split: f64,
) -> Result<(f64, f64)> {
    let half = -0.5 * s;
    let tau2 = tau_split * tau_split;
    let key = cells.key_of(x);
    let (mut near, mut far) = (0.0, 0.0);
    for (ck, list) in cells.cells() {
        if CellIndex::adjacent(ck, &key) {
            for &j in list {
                if Some(j) == skip {
                    continue;
                }
                let r2 = dist2(x, config.point(j));
                if r2 == 0.0 {
                    return Err(RieszError::Singular {
                        i: skip.unwrap_or(j),
                        j,
                    });
                }
                if r2 < tau2 {
                    near += r2.powf(half);
                } else {
                    far += r2.powf(half);
                }
            }
        } else {
            for &j in list {
                if Some(j) != skip {
                    far += dist2(x, config.point(j)).powf(half);
                }
            }
        }
    }
    Ok((near, far))
}

/// `Σ_{i != j} |x_i - x_j|^{-s}` with the cell-list kernel.
pub fn pair_sum_energy(config: &PointConfiguration, s: f64) -> Result<f64> {
    pair_sum_energy_split(config, s, default_tau_split(config))
}

pub fn pair_sum_energy_split(config: &PointConfiguration, s: f64, tau_split: f64) -> Result<f64> {
    check_exponent(s, config.dim())?;
    if config.len() < 2 {
        return Ok(0.0);
    }
    let cells = CellIndex::build(config, tau_split)?;
    let partial = per_index(config.len(), |i| {
        let (near, far) = split_potential(config, &cells, config.point(i), Some(i), s, tau_split)?;
        Ok(near + far)
    })
    .map_err(order_singular)?;
    Ok(partial.iter().sum())
}

fn order_singular(e: RieszError) -> RieszError {
    match e {
        RieszError::Singular { i, j } => RieszError::Singular {
            i: i.min(j),
            j: i.max(j),
        },
        other => other,
    }
}

fn check_total_preconditions(config: &PointConfiguration, field: &FieldSpec, params: &RieszParams) -> Result<()> {
    params.validate()?;
    if config.dim() != params.d || field.dim() != params.d {
        return Err(RieszError::DimensionMismatch {
            expected: params.d,
            got: if config.dim() != params.d { config.dim() } else { field.dim() },
        });
    }
    if config.len() != params.n {
        return Err(RieszError::InvalidParameter(format!(
            "configuration has {} points, params say N={}",
            config.len(),
            params.n
        )));
    }
    if let Some(i) = (0..config.len()).find(|&i| !field.domain.contains(config.point(i))) {
        return Err(RieszError::OutsideDomain { index: i });
    }
    Ok(())
}

/// `H_N = Σ_{i != j}|x_i - x_j|^{-s} + N^{s/d} Σ_i V(x_i)`.
pub fn total_energy(config: &PointConfiguration, field: &FieldSpec, params: &RieszParams) -> Result<f64> {
    check_total_preconditions(config, field, params)?;
    let pair = pair_sum_energy(config, params.s)?;
    Ok(pair + params.field_weight() * field_sum(config, field))
}

fn field_sum(config: &PointConfiguration, field: &FieldSpec) -> f64 {
    config.points().map(|p| field.potential(p)).sum()
}

/// `Σ_{p in A, q in B, |p-q| >= tau} |p - q|^{-s}` over ordered cross pairs.
/// Pairs closer than `tau`, coincident ones included, contribute nothing.
pub fn truncated_interaction(a: &PointConfiguration, b: &PointConfiguration, s: f64, tau: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(RieszError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if !(tau > 0.0) {
        return Err(RieszError::InvalidParameter(format!("truncation radius must be positive, got {tau}")));
    }
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let cells = CellIndex::build(b, tau)?;
    let half = -0.5 * s;
    let tau2 = tau * tau;
    let partial = per_index(a.len(), |i| {
        let x = a.point(i);
        let key = cells.key_of(x);
        let mut acc = 0.0;
        for (ck, list) in cells.cells() {
            let near = CellIndex::adjacent(ck, &key);
            for &j in list {
                let r2 = dist2(x, b.point(j));
                // non-adjacent cells are at least tau away
                if !near || r2 >= tau2 {
                    acc += r2.powf(half);
                }
            }
        }
        Ok(acc)
    })?;
    Ok(partial.iter().sum())
}

/// `(1/R^d) Σ_{p != q in C ∩ K_R} |p - q|^{-s}` for the closed centered cube `K_R`.
pub fn window_energy_density(config: &PointConfiguration, s: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(RieszError::InvalidParameter(format!("window side must be positive, got {r}")));
    }
    let inside = config.restrict_to_window(r);
    Ok(pair_sum_energy(&inside, s)? / r.powi(config.dim() as i32))
}

/// Gradient of `H_N`, flattened point-major (`N·d` entries).
pub fn gradient(config: &PointConfiguration, field: &FieldSpec, params: &RieszParams) -> Result<Vec<f64>> {
    check_total_preconditions(config, field, params)?;
    let (_, grad) = energy_and_gradient(config, field, params)?;
    Ok(grad)
}

/// `H_N` and its gradient in one all-pairs pass. Domain membership is not
/// rechecked here; optimizers call this on projected iterates.
pub(crate) fn energy_and_gradient(
    config: &PointConfiguration,
    field: &FieldSpec,
    params: &RieszParams,
) -> Result<(f64, Vec<f64>)> {
    let d = config.dim();
    let n = config.len();
    let s = params.s;
    let w = params.field_weight();
    let rows = per_index(n, |i| {
        let xi = config.point(i);
        let mut row = vec![0.0; d];
        let mut e = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let xj = config.point(j);
            let r2 = dist2(xi, xj);
            if r2 == 0.0 {
                return Err(RieszError::Singular {
                    i: i.min(j),
                    j: i.max(j),
                });
            }
            let rs = r2.powf(-0.5 * s);
            e += rs;
            let coef = -2.0 * s * rs / r2;
            for k in 0..d {
                row[k] += coef * (xi[k] - xj[k]);
            }
        }
        let mut gv = vec![0.0; d];
        field.potential_gradient(xi, &mut gv);
        for k in 0..d {
            row[k] += w * gv[k];
        }
        Ok((e + w * field.potential(xi), row))
    })?;
    let energy = rows.iter().map(|(e, _)| e).sum();
    let grad = rows.into_iter().flat_map(|(_, r)| r).collect();
    Ok((energy, grad))
}

/// Change of `H_N` when point `index` moves to `new_position`.
///
/// Uses `cells` (built on the current configuration with cell size at least
/// `tau_split`) for the near field and a direct pass over the remaining cells
/// for the far field.
pub fn move_delta(
    config: &PointConfiguration,
    index: usize,
    new_position: &[f64],
    field: &FieldSpec,
    params: &RieszParams,
    cells: &CellIndex,
    tau_split: f64,
) -> Result<f64> {
    if index >= config.len() {
        return Err(RieszError::IndexOutOfRange {
            index,
            len: config.len(),
        });
    }
    if new_position.len() != config.dim() {
        return Err(RieszError::DimensionMismatch {
            expected: config.dim(),
            got: new_position.len(),
        });
    }
    if tau_split > cells.cell_size() {
        return Err(RieszError::InvalidParameter(format!(
            "split radius {tau_split} exceeds cell size {}",
            cells.cell_size()
        )));
    }
    if !field.domain.contains(new_position) {
        return Err(RieszError::OutsideDomain { index });
    }
    let old = config.point(index);
    if old == new_position {
        return Ok(0.0);
    }
    let (near_new, far_new) = split_potential(config, cells, new_position, Some(index), params.s, tau_split)?;
    let (near_old, far_old) = split_potential(config, cells, old, Some(index), params.s, tau_split)?;
    let pair = 2.0 * ((near_new - near_old) + (far_new - far_old));
    let ext = params.field_weight() * (field.potential(new_position) - field.potential(old));
    Ok(pair + ext)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Domain, Field};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // O(N^2) reference kernel
    fn brute_pair_sum(c: &PointConfiguration, s: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..c.len() {
            for j in 0..c.len() {
                if i != j {
                    acc += dist2(c.point(i), c.point(j)).sqrt().powf(-s);
                }
            }
        }
        acc
    }

    fn random_config(rng: &mut ChaCha8Rng, d: usize, n: usize, lo: f64, hi: f64) -> PointConfiguration {
        PointConfiguration::new(d, (0..n * d).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn pair_sum_examples() {
        let c = PointConfiguration::from_scalars(&[0.0, 0.5]).unwrap();
        assert_eq!(pair_sum_energy(&c, 2.0).unwrap(), 8.0);
        let c = PointConfiguration::from_points(2, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((pair_sum_energy(&c, 4.0).unwrap() - 4.5).abs() < 1e-14);
    }

    #[test]
    fn pair_sum_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..=3 {
            let c = random_config(&mut rng, d, 50, 0.0, 1.0);
            let s = d as f64 + 1.5;
            assert!(rel(pair_sum_energy(&c, s).unwrap(), brute_pair_sum(&c, s)) < 1e-12);
        }
    }

    #[test]
    fn coincident_points_are_singular() {
        let c = PointConfiguration::from_scalars(&[0.3, 0.1, 0.3]).unwrap();
        assert_eq!(pair_sum_energy(&c, 2.0), Err(RieszError::Singular { i: 0, j: 2 }));
    }

    #[test]
    fn exponent_must_exceed_dimension() {
        let c = PointConfiguration::from_points(2, &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(pair_sum_energy(&c, 2.0), Err(RieszError::NotHypersingular { .. })));
    }

    #[test]
    fn total_energy_examples() {
        let c = PointConfiguration::from_scalars(&[0.0, 0.5]).unwrap();
        let p = RieszParams::new(1, 2.0, 1.0, 2).unwrap();
        let free = FieldSpec::free(Domain::unit_cube(1));
        assert_eq!(total_energy(&c, &free, &p).unwrap(), 8.0);
        let quad = FieldSpec::new(Domain::Whole { dim: 1 }, Field::Quadratic { c: 1.0 }).unwrap();
        assert!((total_energy(&c, &quad, &p).unwrap() - 9.0).abs() < 1e-14);
        let out = PointConfiguration::from_scalars(&[0.0, 1.5]).unwrap();
        assert_eq!(total_energy(&out, &free, &p), Err(RieszError::OutsideDomain { index: 1 }));
    }

    #[test]
    fn equal_spacing_approaches_two_zeta_two() {
        let n = 200;
        let c = PointConfiguration::from_scalars(&(0..n).map(|k| k as f64 / (n - 1) as f64).collect::<Vec<_>>()).unwrap();
        let p = RieszParams::new(1, 2.0, 1.0, n).unwrap();
        let e = total_energy(&c, &FieldSpec::free(Domain::unit_cube(1)), &p).unwrap();
        // closed form for equal spacing: 2 Σ_k (N-k) (k/(N-1))^{-2}
        let oracle: f64 = (1..n)
            .map(|k| 2.0 * (n - k) as f64 * ((n - 1) as f64 / k as f64).powi(2))
            .sum();
        assert!(rel(e, oracle) < 1e-12);
        let target = std::f64::consts::PI.powi(2) / 3.0;
        assert!(rel(e / (n as f64).powi(3), target) < 0.05);
    }

    #[test]
    fn truncated_interaction_examples() {
        let a = PointConfiguration::from_scalars(&[0.0, 0.5, 3.0]).unwrap();
        let v = truncated_interaction(&a, &a, 2.0, 1.0).unwrap();
        let expected = 2.0 * (1.0 / 9.0 + 1.0 / 6.25);
        assert!((v - expected).abs() < 1e-15);
        let tiny = truncated_interaction(&a, &a, 2.0, 1e-3).unwrap();
        assert!(rel(tiny, brute_pair_sum(&a, 2.0)) < 1e-14);
    }

    #[test]
    fn truncated_interaction_matches_filtered_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_config(&mut rng, 2, 100, 0.0, 1.0);
        let tau = 0.1;
        let mut oracle = 0.0;
        for p in a.points() {
            for q in a.points() {
                let r = dist2(p, q).sqrt();
                if r >= tau {
                    oracle += r.powf(-3.0);
                }
            }
        }
        assert!(rel(truncated_interaction(&a, &a, 3.0, tau).unwrap(), oracle) < 1e-12);
    }

    #[test]
    fn window_energy_examples() {
        let ints: Vec<f64> = (-150..=150).map(f64::from).collect();
        let z = PointConfiguration::from_scalars(&ints).unwrap();
        assert_eq!(window_energy_density(&z, 2.0, 1.0).unwrap(), 0.0);
        let w = window_energy_density(&z, 2.0, 100.0).unwrap();
        let target = std::f64::consts::PI.powi(2) / 3.0;
        assert!(rel(w, target) < 0.03);
        // direct partial-sum oracle: 101 points, (1/R) Σ_k 2 (101-k) k^{-2}
        let oracle: f64 = (1..=100).map(|k| 2.0 * (101 - k) as f64 / (k * k) as f64).sum::<f64>() / 100.0;
        assert!(rel(w, oracle) < 1e-13);
    }

    #[test]
    fn window_energy_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_config(&mut rng, 2, 80, -2.0, 2.0);
        let (s, r, m) = (3.0, 3.0, 2.5);
        let lhs = window_energy_density(&c.rescale(m).unwrap(), s, m.sqrt() * r).unwrap();
        let rhs = m.powf(-(1.0 + s / 2.0)) * window_energy_density(&c, s, r).unwrap();
        assert!(rel(lhs, rhs) < 1e-12);
    }

    #[test]
    fn gradient_two_point_symmetry() {
        let c = PointConfiguration::from_scalars(&[0.0, 1.0]).unwrap();
        let p = RieszParams::new(1, 2.0, 1.0, 2).unwrap();
        let g = gradient(&c, &FieldSpec::free(Domain::cube(1, -1.0, 2.0)), &p).unwrap();
        assert_eq!(g, vec![4.0, -4.0]);
    }

    #[test]
    fn gradient_sums_to_zero_without_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random_config(&mut rng, 2, 30, 0.0, 1.0);
        let p = RieszParams::new(2, 3.0, 1.0, 30).unwrap();
        let g = gradient(&c, &FieldSpec::free(Domain::unit_cube(2)), &p).unwrap();
        let scale: f64 = g.iter().map(|v| v.abs()).sum();
        for k in 0..2 {
            let sum: f64 = g.iter().skip(k).step_by(2).sum();
            assert!(sum.abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let field = FieldSpec::new(Domain::Whole { dim: 2 }, Field::Quadratic { c: 0.7 }).unwrap();
        let c = random_config(&mut rng, 2, 20, -1.0, 1.0);
        let p = RieszParams::new(2, 3.0, 1.0, 20).unwrap();
        let g = gradient(&c, &field, &p).unwrap();
        let h = 1e-6;
        for k in 0..c.coords().len() {
            let mut plus = c.clone();
            plus.coords_mut()[k] += h;
            let mut minus = c.clone();
            minus.coords_mut()[k] -= h;
            let fd = (total_energy(&plus, &field, &p).unwrap() - total_energy(&minus, &field, &p).unwrap()) / (2.0 * h);
            assert!(rel(g[k], fd) < 1e-5, "component {k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn move_delta_examples() {
        let c = PointConfiguration::from_scalars(&[0.0, 0.5]).unwrap();
        let p = RieszParams::new(1, 2.0, 1.0, 2).unwrap();
        let f = FieldSpec::free(Domain::unit_cube(1));
        let cells = CellIndex::build(&c, 0.5).unwrap();
        assert_eq!(move_delta(&c, 1, &[0.5], &f, &p, &cells, 0.5).unwrap(), 0.0);
        assert_eq!(move_delta(&c, 1, &[1.0], &f, &p, &cells, 0.5).unwrap(), -6.0);
        assert_eq!(
            move_delta(&c, 1, &[0.0], &f, &p, &cells, 0.5),
            Err(RieszError::Singular { i: 1, j: 0 })
        );
        assert!(matches!(
            move_delta(&c, 2, &[0.3], &f, &p, &cells, 0.5),
            Err(RieszError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn move_delta_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100;
        let field = FieldSpec::new(Domain::cube(2, 0.0, 1.0), Field::Quadratic { c: 1.0 }).unwrap();
        let p = RieszParams::new(2, 3.0, 1.0, n).unwrap();
        let mut c = random_config(&mut rng, 2, n, 0.0, 1.0);
        let tau = default_tau_split(&c);
        let mut cells = CellIndex::build(&c, tau).unwrap();
        let mut e = total_energy(&c, &field, &p).unwrap();
        for _ in 0..1000 {
            let i = rng.random_range(0..n);
            let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let delta = move_delta(&c, i, &x, &field, &p, &cells, tau).unwrap();
            let mut moved = c.clone();
            moved.set_point(i, &x).unwrap();
            let e1 = total_energy(&moved, &field, &p).unwrap();
            assert!((delta - (e1 - e)).abs() <= 1e-9 * e.max(e1));
            c = moved;
            cells.relocate(i, &x);
            e = e1;
        }
    }

    #[test]
    fn default_split_hits_neighbour_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = random_config(&mut rng, 2, 2000, 0.0, 1.0);
        let tau = default_tau_split(&c);
        let cells = CellIndex::build(&c, tau).unwrap();
        let pairs = cells.pairs_within(&c, tau).unwrap().len();
        let mean = 2.0 * pairs as f64 / c.len() as f64;
        assert!((20.0..40.0).contains(&mean), "mean neighbours {mean}");
    }

    proptest! {
        #[test]
        fn permutation_and_translation_invariance(
            raw in prop::collection::vec(-2.0f64..2.0, 4..40),
            shift in prop::collection::vec(-5.0f64..5.0, 2),
            seed in any::<u64>(),
        ) {
            let n = raw.len() / 2;
            let c = PointConfiguration::new(2, raw[..2 * n].to_vec()).unwrap();
            let Ok(e) = pair_sum_energy(&c, 3.0) else { return Ok(()) };
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..n).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let perm: Vec<Vec<f64>> = order.iter().map(|&i| c.point(i).to_vec()).collect();
            let pc = PointConfiguration::from_points(2, &perm).unwrap();
            prop_assert!(rel(pair_sum_energy(&pc, 3.0).unwrap(), e) < 1e-10);
            prop_assert!(rel(pair_sum_energy(&c.translate(&shift).unwrap(), 3.0).unwrap(), e) < 1e-9);
        }

        #[test]
        fn truncation_is_monotone(
            raw in prop::collection::vec(0.0f64..3.0, 2..30),
            t1 in 0.01f64..2.0,
            t2 in 0.01f64..2.0,
        ) {
            let c = PointConfiguration::from_scalars(&raw).unwrap();
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let a = truncated_interaction(&c, &c, 2.0, lo).unwrap();
            let b = truncated_interaction(&c, &c, 2.0, hi).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-12));
            prop_assert!(b >= 0.0);
        }

        #[test]
        fn scaling_of_pair_sum(
            raw in prop::collection::vec(-1.0f64..1.0, 6..60),
            m in 0.1f64..10.0,
        ) {
            let n = raw.len() / 3;
            let c = PointConfiguration::new(3, raw[..3 * n].to_vec()).unwrap();
            let s = 4.5;
            if let Ok(e) = pair_sum_energy(&c, s) {
                let scaled = pair_sum_energy(&c.rescale(m).unwrap(), s).unwrap();
                prop_assert!(rel(scaled, m.powf(-s / 3.0) * e) < 1e-10);
            }
        }
    }
}
