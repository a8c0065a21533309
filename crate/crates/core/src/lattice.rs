//! Toroidal hypercubic lattice `(Z/aZ)^d`.
//!
//! Vertices are encoded row-major: the first coordinate is the most
//! significant digit. Neighbors are listed in a fixed order (dimension 1
//! minus, dimension 1 plus, dimension 2 minus, ...), which keeps runs
//! reproducible under a fixed seed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension. Keeps `Q = 2d` within the inline capacity of
/// [`Neighbors`].
pub const MAX_DIMENSION: usize = 8;

/// Inline list of at most `Q` vertices.
pub type Neighbors = smallvec::SmallVec<[VertexId; 2 * MAX_DIMENSION]>;

/// Integer index of a lattice vertex, in `[0, a^d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for VertexId {
    fn from(value: u32) -> Self {
        VertexId(value)
    }
}

/// Geometry parameters: dimension `d` and side length `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub d: usize,
    pub a: usize,
}

impl LatticeConfig {
    pub fn new(d: usize, a: usize) -> Self {
        LatticeConfig { d, a }
    }

    /// Checks `1 <= d <= MAX_DIMENSION`, `a >= 3` and that `a^d` fits a `u32`.
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > MAX_DIMENSION {
            return Err(Error::InvalidConfig(format!(
                "dimension d = {} must lie in [1, {MAX_DIMENSION}]",
                self.d
            )));
        }
        if self.a < 3 {
            return Err(Error::InvalidConfig(format!(
                "side length a = {} must be at least 3 so that every vertex has 2d distinct neighbors",
                self.a
            )));
        }
        self.checked_vertex_count().ok_or_else(|| {
            Error::InvalidConfig(format!("lattice a^d = {}^{} is too large", self.a, self.d))
        })?;
        Ok(())
    }

    fn checked_vertex_count(&self) -> Option<usize> {
        let mut n: usize = 1;
        for _ in 0..self.d {
            n = n.checked_mul(self.a)?;
        }
        (n <= u32::MAX as usize).then_some(n)
    }

    /// Number of lattice neighbors of every vertex.
    pub fn q(&self) -> usize {
        2 * self.d
    }
}

/// A validated lattice with a precomputed neighbor table.
#[derive(Clone, Debug)]
pub struct Lattice {
    config: LatticeConfig,
    n_vertices: usize,
    neighbor_table: Vec<VertexId>,
}

impl Lattice {
    pub fn new(config: LatticeConfig) -> Result<Self> {
        config.validate()?;
        let n_vertices = config.checked_vertex_count().expect("validated");
        let q = config.q();
        let mut neighbor_table = Vec::with_capacity(n_vertices * q);
        let mut coords = vec![0usize; config.d];
        for v in 0..n_vertices {
            decode(v, config, &mut coords);
            for dim in 0..config.d {
                let original = coords[dim];
                coords[dim] = (original + config.a - 1) % config.a;
                neighbor_table.push(VertexId(encode(&coords, config.a) as u32));
                coords[dim] = (original + 1) % config.a;
                neighbor_table.push(VertexId(encode(&coords, config.a) as u32));
                coords[dim] = original;
            }
        }
        Ok(Lattice {
            config,
            n_vertices,
            neighbor_table,
        })
    }

    /// Shorthand for `Lattice::new(LatticeConfig::new(d, a))`.
    pub fn with_shape(d: usize, a: usize) -> Result<Self> {
        Lattice::new(LatticeConfig::new(d, a))
    }

    pub fn config(&self) -> LatticeConfig {
        self.config
    }

    pub fn dimension(&self) -> usize {
        self.config.d
    }

    pub fn side(&self) -> usize {
        self.config.a
    }

    /// `Q = 2d`.
    pub fn q(&self) -> usize {
        self.config.q()
    }

    /// `a^d`.
    pub fn vertex_count(&self) -> usize {
        self.n_vertices
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n_vertices as u32).map(VertexId)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.n_vertices
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v.0,
                count: self.n_vertices,
            })
        }
    }

    /// Row-major coordinates of `v`.
    pub fn to_coords(&self, v: VertexId) -> Result<Vec<usize>> {
        self.check_vertex(v)?;
        let mut coords = vec![0; self.config.d];
        decode(v.index(), self.config, &mut coords);
        Ok(coords)
    }

    /// Inverse of [`Lattice::to_coords`]. Coordinates are reduced modulo `a`.
    pub fn to_index(&self, coords: &[usize]) -> Result<VertexId> {
        if coords.len() != self.config.d {
            return Err(Error::InvalidConfig(format!(
                "expected {} coordinates, got {}",
                self.config.d,
                coords.len()
            )));
        }
        let reduced: Vec<usize> = coords.iter().map(|c| c % self.config.a).collect();
        Ok(VertexId(encode(&reduced, self.config.a) as u32))
    }

    /// The `Q` neighbors of `v` in fixed order. Panics on an out-of-range
    /// vertex; use [`Lattice::check_vertex`] on untrusted input.
    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let q = self.q();
        &self.neighbor_table[v.index() * q..(v.index() + 1) * q]
    }

    #[inline]
    pub fn are_neighbors(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).contains(&v)
    }
}

fn decode(mut index: usize, config: LatticeConfig, coords: &mut [usize]) {
    for slot in coords.iter_mut().rev() {
        *slot = index % config.a;
        index /= config.a;
    }
}

fn encode(coords: &[usize], a: usize) -> usize {
    coords.iter().fold(0, |acc, &c| acc * a + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_row_major() {
        let lat = Lattice::with_shape(2, 5).unwrap();
        assert_eq!(lat.to_coords(VertexId(0)).unwrap(), vec![0, 0]);
        assert_eq!(lat.to_coords(VertexId(7)).unwrap(), vec![1, 2]);
        let lat = Lattice::with_shape(3, 4).unwrap();
        assert_eq!(lat.to_coords(VertexId(63)).unwrap(), vec![3, 3, 3]);
        assert!(matches!(
            lat.to_coords(VertexId(64)),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn neighbor_order_and_wraparound() {
        let lat = Lattice::with_shape(1, 4).unwrap();
        assert_eq!(lat.neighbors(VertexId(0)), &[VertexId(3), VertexId(1)]);

        let lat = Lattice::with_shape(2, 3).unwrap();
        let origin = lat.to_index(&[0, 0]).unwrap();
        let expected: Vec<VertexId> = [[2, 0], [1, 0], [0, 2], [0, 1]]
            .iter()
            .map(|c| lat.to_index(c).unwrap())
            .collect();
        assert_eq!(lat.neighbors(origin), expected.as_slice());
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(Lattice::with_shape(2, 2).is_err());
        assert!(Lattice::with_shape(0, 5).is_err());
        assert!(Lattice::with_shape(MAX_DIMENSION + 1, 3).is_err());
        assert!(Lattice::with_shape(8, 20000).is_err());
    }

    #[test]
    fn exhaustive_small_lattices() {
        for (d, a) in [(1, 3), (1, 7), (2, 3), (2, 5), (3, 4), (4, 3), (2, 300)] {
            let lat = Lattice::with_shape(d, a).unwrap();
            assert_eq!(lat.vertex_count(), a.pow(d as u32));
            for v in lat.vertices() {
                let coords = lat.to_coords(v).unwrap();
                assert_eq!(lat.to_index(&coords).unwrap(), v);
                let ns = lat.neighbors(v);
                assert_eq!(ns.len(), 2 * d);
                let mut sorted = ns.to_vec();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), 2 * d, "duplicate neighbor at {v} for d={d} a={a}");
                for &u in ns {
                    assert!(lat.are_neighbors(u, v), "asymmetric pair {u} {v}");
                }
            }
        }
    }
}
