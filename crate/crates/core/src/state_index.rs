//! Tolerance-aware lookup of canonical coin states.
//!
//! Coordinates are bucketed on a grid coarser than the match tolerance; a
//! query probes the neighbouring bucket along every axis where it sits
//! within tolerance of a bucket edge, so two states within tolerance are
//! always found regardless of where the grid lines fall.

use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::CoinState;

/// Distance below which two canonical states are the same node.
pub const DEDUP_TOL: f64 = 1e-9;
const CELL: f64 = 1e-7;

#[derive(Debug, Default, Clone)]
pub(crate) struct StateIndex {
    cells: HashMap<[i64; 4], Vec<(CoinState, usize)>>,
}

fn cell_of(x: f64) -> (i64, f64) {
    let scaled = x / CELL;
    let c = libm::floor(scaled);
    (c as i64, scaled - c)
}

impl StateIndex {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn find(&self, state: &CoinState) -> Option<usize> {
        let coords = state.coords();
        let margin = DEDUP_TOL / CELL;
        let mut options: [[i64; 2]; 4] = [[0; 2]; 4];
        let mut counts = [1usize; 4];
        for (axis, &x) in coords.iter().enumerate() {
            let (c, frac) = cell_of(x);
            options[axis][0] = c;
            if frac < margin {
                options[axis][1] = c - 1;
                counts[axis] = 2;
            } else if frac > 1.0 - margin {
                options[axis][1] = c + 1;
                counts[axis] = 2;
            }
        }
        for a in 0..counts[0] {
            for b in 0..counts[1] {
                for c in 0..counts[2] {
                    for d in 0..counts[3] {
                        let key = [options[0][a], options[1][b], options[2][c], options[3][d]];
                        if let Some(bucket) = self.cells.get(&key) {
                            for (s, id) in bucket {
                                if s.distance(state) <= DEDUP_TOL {
                                    return Some(*id);
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }

    pub(crate) fn insert(&mut self, state: CoinState, id: usize) {
        let c = state.coords();
        let key = [cell_of(c[0]).0, cell_of(c[1]).0, cell_of(c[2]).0, cell_of(c[3]).0];
        self.cells.entry(key).or_default().push((state, id));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn finds_states_across_cell_edges() {
        let mut idx = StateIndex::new();
        let theta = 0.3f64;
        let a = CoinState::new(
            Complex64::new(libm::cos(theta), 0.0),
            Complex64::new(libm::sin(theta), 0.0),
        )
        .unwrap();
        idx.insert(a, 7);
        for eps in [-5e-10, 1e-10, 4e-10] {
            let t = theta + eps;
            let b = CoinState::new(Complex64::new(libm::cos(t), 0.0), Complex64::new(libm::sin(t), 0.0)).unwrap();
            assert_eq!(idx.find(&b), Some(7));
        }
        let far = CoinState::from_bloch(1.0, 0.5);
        assert_eq!(idx.find(&far), None);
    }
}
