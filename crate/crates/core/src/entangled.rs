//! Lazy underlying graphs: out-edges are drawn the first time growth or a
//! weight computation needs them, rather than for the whole reachable set up
//! front.
//!
//! Every vertex receives its out-edges from the same law as in
//! [`crate::graph::generate`], and only vertices reachable from the root are
//! ever queried, so the visited part of a lazy graph has the law of the
//! corresponding part of a fully generated one.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::Result;
use crate::graph::{
    draw_out_edges, forced_successors, orient_randomly, random_free_vertex, DegreeMode,
    UnderlyingGraph,
};
use crate::growth::{grow, EdgeSource, GrowthResult};
use crate::lattice::{Lattice, Neighbors, VertexId};
use crate::state::{Occupancy, Polymer};

/// A partially generated underlying graph.
#[derive(Clone, Debug)]
pub struct LazyGraph<'a> {
    lattice: &'a Lattice,
    mode: &'a DegreeMode,
    graph: UnderlyingGraph,
    forced: Option<Vec<Option<VertexId>>>,
    /// Vertices known to belong to the graph (the assigned set plus the
    /// waiting set).
    seen: Vec<bool>,
    /// Discovered vertices in discovery order; some may since be assigned.
    waiting: VecDeque<VertexId>,
}

impl<'a> LazyGraph<'a> {
    /// A lazy graph with a given root and no assignments yet.
    pub fn rooted_at(lattice: &'a Lattice, mode: &'a DegreeMode, root: VertexId) -> Self {
        let mut seen = vec![false; lattice.vertex_count()];
        seen[root.index()] = true;
        LazyGraph {
            lattice,
            mode,
            graph: UnderlyingGraph::empty(lattice, root),
            forced: None,
            seen,
            waiting: VecDeque::from([root]),
        }
    }

    /// A lazy graph compatible with `c`: orientation drawn with probability
    /// 1/2 each, then the polymer vertices except the far end assigned
    /// immediately (each with its forced edge). Other vertices stay pending.
    pub fn compatible<R: Rng + ?Sized>(
        lattice: &'a Lattice,
        mode: &'a DegreeMode,
        c: &Polymer,
        rng: &mut R,
    ) -> Self {
        let oriented = orient_randomly(c, rng);
        let mut lazy = LazyGraph::rooted_at(lattice, mode, oriented.first());
        lazy.forced = Some(forced_successors(lattice, &oriented));
        for &v in &oriented.vertices()[..oriented.len() - 1] {
            lazy.ensure(v, rng);
        }
        lazy
    }

    pub fn root(&self) -> VertexId {
        self.graph.root()
    }

    /// The assigned part.
    pub fn graph(&self) -> &UnderlyingGraph {
        &self.graph
    }

    /// Number of vertices given out-edges so far.
    pub fn assigned(&self) -> usize {
        self.graph.size()
    }

    fn ensure<R: Rng + ?Sized>(&mut self, v: VertexId, rng: &mut R) {
        if self.graph.contains(v) {
            return;
        }
        debug_assert!(self.seen[v.index()], "queried vertex {v} is not reachable");
        let degree = self.mode.draw(rng);
        let must = self.forced.as_ref().and_then(|f| f[v.index()]);
        let outs = draw_out_edges(self.lattice, v, degree, must, rng);
        for &u in &outs {
            if !self.seen[u.index()] {
                self.seen[u.index()] = true;
                self.waiting.push_back(u);
            }
        }
        self.graph.assign(v, &outs);
    }

    /// Finishes generation by assigning every pending vertex in FIFO order.
    pub fn complete<R: Rng + ?Sized>(mut self, rng: &mut R) -> UnderlyingGraph {
        while let Some(v) = self.waiting.pop_front() {
            self.ensure(v, rng);
        }
        self.graph
    }
}

impl EdgeSource for LazyGraph<'_> {
    fn root(&self) -> VertexId {
        self.graph.root()
    }

    fn out_edges<R: Rng + ?Sized>(&mut self, v: VertexId, rng: &mut R) -> Neighbors {
        self.ensure(v, rng);
        self.graph.out_edges(v).iter().copied().collect()
    }
}

/// Picks a uniform free root and grows on a lazy graph. Returns `None` if
/// no vertex is free.
pub fn entangled_grow<'a, R: Rng + ?Sized>(
    lattice: &'a Lattice,
    mode: &'a DegreeMode,
    occupancy: &Occupancy,
    length: usize,
    ell: usize,
    rng: &mut R,
) -> Result<Option<(GrowthResult, LazyGraph<'a>)>> {
    let Some(root) = random_free_vertex(occupancy, rng) else {
        return Ok(None);
    };
    let mut lazy = LazyGraph::rooted_at(lattice, mode, root);
    let result = grow(&mut lazy, occupancy, length, ell, rng)?;
    Ok(Some((result, lazy)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::is_compatible;
    use crate::growth::{weight, weight_w0};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_degree_lazy_matches_complete_graph() {
        let lat = Lattice::with_shape(2, 4).unwrap();
        let mode = DegreeMode::fixed(4);
        let occ = Occupancy::empty(16);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut lazy = LazyGraph::rooted_at(&lat, &mode, VertexId(5));
        let result = grow(&mut lazy, &occ, 4, 1, &mut rng).unwrap();
        let c = result.into_polymer().unwrap();
        let w_lazy = weight(&mut lazy, &occ, &c, 1, &mut rng).unwrap();
        let mut full = UnderlyingGraph::complete_lattice(&lat, VertexId(5));
        let w_full = weight(&mut full, &occ, &c, 1, &mut rng).unwrap();
        assert_eq!(w_lazy, w_full);
    }

    #[test]
    fn lazy_weights_equal_completed_graph_weights() {
        let lat = Lattice::with_shape(2, 6).unwrap();
        let mode = DegreeMode::fixed(2);
        let occ = Occupancy::empty(36);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut checked = 0;
        for _ in 0..300 {
            let mut lazy = LazyGraph::rooted_at(&lat, &mode, VertexId(14));
            let result = grow(&mut lazy, &occ, 5, 2, &mut rng).unwrap();
            let Some(c) = result.into_polymer() else { continue };
            let w = weight(&mut lazy, &occ, &c, 2, &mut rng).unwrap();
            let w0 = weight_w0(&mut lazy, &c, &mut rng).unwrap();
            let assigned = lazy.assigned();
            let mut full = lazy.complete(&mut rng);
            assert!(assigned <= full.size());
            assert!(full.is_rooted_reachable());
            assert_eq!(weight(&mut full, &occ, &c, 2, &mut rng).unwrap(), w);
            assert_eq!(weight_w0(&mut full, &c, &mut rng).unwrap(), w0);
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn compatible_lazy_has_forced_edges() {
        let lat = Lattice::with_shape(2, 5).unwrap();
        let mode = DegreeMode::fixed(2);
        let c = Polymer::from_indices(&[0, 1, 6, 11]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let lazy = LazyGraph::compatible(&lat, &mode, &c, &mut rng);
            assert!(is_compatible(lazy.graph(), &c));
            assert_eq!(lazy.assigned(), 3);
            let full = lazy.complete(&mut rng);
            assert!(is_compatible(&full, &c));
            assert!(full.is_rooted_reachable());
        }
    }
}
