//! Cell-list spatial index.
//!
//! Cells are hashed by their integer coordinates `floor(x_k / cell_size)`, so
//! the index works for unbounded domains. A `BTreeMap` keeps the traversal
//! order deterministic, which keeps floating point reductions reproducible.

use std::collections::BTreeMap;

use crate::config::PointConfiguration;
use crate::error::{Result, RieszError};

pub type CellKey = Vec<i64>;

#[derive(Clone, Debug)]
pub struct CellIndex {
    dim: usize,
    cell_size: f64,
    cells: BTreeMap<CellKey, Vec<usize>>,
    point_cell: Vec<CellKey>,
}

impl CellIndex {
    pub fn build(config: &PointConfiguration, cell_size: f64) -> Result<CellIndex> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(RieszError::InvalidParameter(format!("cell size must be positive, got {cell_size}")));
        }
        let mut index = CellIndex {
            dim: config.dim(),
            cell_size,
            cells: BTreeMap::new(),
            point_cell: Vec::with_capacity(config.len()),
        };
        for (i, p) in config.points().enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(RieszError::NonFinite { index: i });
            }
            let key = index.key_of(p);
            index.cells.entry(key.clone()).or_default().push(i);
            index.point_cell.push(key);
        }
        Ok(index)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.point_cell.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_cell.is_empty()
    }

    pub fn key_of(&self, x: &[f64]) -> CellKey {
        x.iter().map(|v| (v / self.cell_size).floor() as i64).collect()
    }

    pub fn cell_of_point(&self, i: usize) -> &CellKey {
        &self.point_cell[i]
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &Vec<usize>)> {
        self.cells.iter()
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.len()
    }

    /// Smallest and largest occupied cell coordinate along each axis.
    pub fn bounding_cells(&self) -> Option<(CellKey, CellKey)> {
        let mut it = self.point_cell.iter();
        let first = it.next()?.clone();
        let (mut lo, mut hi) = (first.clone(), first);
        for k in it {
            for a in 0..self.dim {
                lo[a] = lo[a].min(k[a]);
                hi[a] = hi[a].max(k[a]);
            }
        }
        Some((lo, hi))
    }

    /// Keys of the `3^d` cells around `key` (including itself), in lexicographic order.
    pub fn neighbor_keys(&self, key: &[i64]) -> Vec<CellKey> {
        let mut out = Vec::with_capacity(3usize.pow(self.dim as u32));
        let mut offset = vec![-1i64; self.dim];
        loop {
            out.push(key.iter().zip(&offset).map(|(k, o)| k + o).collect());
            let mut a = self.dim;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if offset[a] < 1 {
                    offset[a] += 1;
                    break;
                }
                offset[a] = -1;
            }
        }
    }

    /// Candidate indices from the `3^d` cells around `x`. When `r <= cell_size`
    /// this is a superset of the points within distance `r` of `x`.
    pub fn candidates(&self, x: &[f64]) -> Vec<usize> {
        let key = self.key_of(x);
        let mut out = Vec::new();
        for k in self.neighbor_keys(&key) {
            if let Some(list) = self.cells.get(&k) {
                out.extend_from_slice(list);
            }
        }
        out
    }

    /// Indices of points within distance `< r` of `x` (`r <= cell_size`).
    pub fn within(&self, config: &PointConfiguration, x: &[f64], r: f64) -> Vec<usize> {
        debug_assert!(r <= self.cell_size);
        let r2 = r * r;
        self.candidates(x)
            .into_iter()
            .filter(|&j| dist2(config.point(j), x) < r2)
            .collect()
    }

    /// Whether two cells are in each other's one-ring.
    pub fn adjacent(a: &[i64], b: &[i64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1)
    }

    /// Unordered pairs `(i, j)`, `i < j`, at distance `< r` (`r <= cell_size`),
    /// sorted.
    pub fn pairs_within(&self, config: &PointConfiguration, r: f64) -> Result<Vec<(usize, usize)>> {
        if r > self.cell_size {
            return Err(RieszError::InvalidParameter(format!(
                "pair radius {r} exceeds cell size {}",
                self.cell_size
            )));
        }
        let r2 = r * r;
        let mut pairs = Vec::new();
        for (key, list) in &self.cells {
            for nk in self.neighbor_keys(key) {
                // visit each unordered cell pair once
                if nk < *key {
                    continue;
                }
                let Some(other) = self.cells.get(&nk) else { continue };
                let same = nk == *key;
                for (a, &i) in list.iter().enumerate() {
                    let start = if same { a + 1 } else { 0 };
                    for &j in &other[start..] {
                        if dist2(config.point(i), config.point(j)) < r2 {
                            pairs.push((i.min(j), i.max(j)));
                        }
                    }
                }
            }
        }
        pairs.sort_unstable();
        Ok(pairs)
    }

    /// Moves point `i` to `x`, updating its cell membership.
    pub fn relocate(&mut self, i: usize, x: &[f64]) {
        let key = self.key_of(x);
        if key == self.point_cell[i] {
            return;
        }
        let old = std::mem::replace(&mut self.point_cell[i], key.clone());
        if let Some(list) = self.cells.get_mut(&old) {
            if let Some(pos) = list.iter().position(|&j| j == i) {
                list.remove(pos);
            }
            if list.is_empty() {
                self.cells.remove(&old);
            }
        }
        let list = self.cells.entry(key).or_default();
        // sorted lists keep traversal order independent of move history
        let pos = list.partition_point(|&j| j < i);
        list.insert(pos, i);
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
