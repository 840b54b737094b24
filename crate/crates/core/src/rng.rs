//! Seed splitting and random initial configurations.
//!
//! Every random stream is a ChaCha8 generator keyed by the user seed with the
//! stream number selecting an independent keystream, so restart `k` or chain
//! `k` sees the same numbers whatever the thread schedule.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PointConfiguration;
use crate::error::{Result, RieszError};
use crate::field::{Domain, FieldSpec};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const DRAWS_PER_CELL: usize = 64;

/// Box from which initial points are drawn: the domain bounds, or for the
/// whole space a sublevel box of the field.
pub fn sampling_box(field: &FieldSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    match field.domain.bounds() {
        Some((lo, hi)) => Ok((lo.to_vec(), hi.to_vec())),
        None => {
            let origin = vec![0.0; field.dim()];
            field.sublevel_box(field.potential(&origin) + 1.0)
        }
    }
}

/// `n` points, one per cell of a grid partition of the sampling box, uniform
/// within the cell. Cells whose draws keep missing a region domain are skipped.
pub fn stratified_jitter<R: Rng>(field: &FieldSpec, n: usize, rng: &mut R) -> Result<PointConfiguration> {
    let d = field.dim();
    let (lo, hi) = sampling_box(field)?;
    let mut per_axis = (n as f64).powf(1.0 / d as f64).round().max(1.0) as usize;
    while per_axis.pow(d as u32) < n {
        per_axis += 1;
    }
    let total = per_axis.pow(d as u32);
    let order: Vec<usize> = sample(rng, total, total).into_vec();
    let mut coords = Vec::with_capacity(n * d);
    let mut attempts = 0;
    let mut p = vec![0.0; d];
    for cell in order {
        if coords.len() == n * d {
            break;
        }
        let mut rem = cell;
        let idx: Vec<usize> = (0..d)
            .map(|_| {
                let i = rem % per_axis;
                rem /= per_axis;
                i
            })
            .collect();
        for _ in 0..DRAWS_PER_CELL {
            attempts += 1;
            for k in 0..d {
                let w = (hi[k] - lo[k]) / per_axis as f64;
                p[k] = lo[k] + w * (idx[k] as f64 + rng.random::<f64>());
            }
            if field.domain.contains(&p) {
                coords.extend_from_slice(&p);
                break;
            }
            if matches!(field.domain, Domain::Box { .. } | Domain::Whole { .. }) {
                break;
            }
        }
    }
    if coords.len() < n * d {
        return Err(RieszError::InfeasibleStart { attempts });
    }
    PointConfiguration::new(d, coords)
}
