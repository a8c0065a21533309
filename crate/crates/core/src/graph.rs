//! Underlying graphs: rooted directed subgraphs of the lattice on which a
//! growth attempt runs.
//!
//! Generation only looks at the occupancy when choosing the root. Every
//! vertex taken from the waiting set receives a uniformly random set of
//! out-edges (of size `k`, or of a size drawn from a [`DegreeDistribution`]),
//! and newly discovered targets join the waiting set. The law of the result
//! does not depend on the order in which waiting vertices are processed; FIFO
//! is used for replayability.

use std::collections::VecDeque;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Neighbors, VertexId};
use crate::state::{Occupancy, Polymer};

/// Out-degree law `p_1..p_Q` for the random-degree variant (`p_0 = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeDistribution {
    /// `p[i]` is the probability of out-degree `i + 1`.
    pub p: Vec<f64>,
}

impl DegreeDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        let dist = DegreeDistribution { p };
        dist.check()?;
        Ok(dist)
    }

    /// All mass on degree `k`.
    pub fn point(q: usize, k: usize) -> Self {
        let mut p = vec![0.0; q];
        p[k - 1] = 1.0;
        DegreeDistribution { p }
    }

    pub fn check(&self) -> Result<()> {
        if self.p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidConfig(
                "degree probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = self.p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "degree probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// `p_κ`, zero outside `1..=Q`.
    pub fn prob(&self, degree: usize) -> f64 {
        if degree == 0 {
            0.0
        } else {
            self.p.get(degree - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 1;
        for (i, &p) in self.p.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = i + 1;
                if u < acc {
                    return i + 1;
                }
            }
        }
        // Rounding left a sliver above the cumulative sum.
        last
    }
}

/// How out-degrees are assigned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DegreeMode {
    /// Every vertex gets exactly `k` out-edges.
    Fixed { k: usize },
    /// Out-degree drawn per vertex from `p`.
    Extended(DegreeDistribution),
}

impl DegreeMode {
    pub fn fixed(k: usize) -> Self {
        DegreeMode::Fixed { k }
    }

    pub fn validate(&self, q: usize) -> Result<()> {
        match self {
            DegreeMode::Fixed { k } if *k == 0 || *k > q => Err(Error::InvalidConfig(format!(
                "out-degree k = {k} must lie in [1, Q = {q}]"
            ))),
            DegreeMode::Fixed { .. } => Ok(()),
            DegreeMode::Extended(dist) => {
                if dist.p.len() != q {
                    return Err(Error::InvalidConfig(format!(
                        "degree distribution has {} entries, expected Q = {q}",
                        dist.p.len()
                    )));
                }
                dist.check()
            }
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            DegreeMode::Fixed { k } => *k,
            DegreeMode::Extended(dist) => dist.sample(rng),
        }
    }

    /// Probability of assigning out-degree `degree`.
    pub fn degree_prob(&self, degree: usize) -> f64 {
        match self {
            DegreeMode::Fixed { k } => {
                if degree == *k {
                    1.0
                } else {
                    0.0
                }
            }
            DegreeMode::Extended(dist) => dist.prob(degree),
        }
    }

    fn degree_prob_exact(&self, degree: usize) -> BigRational {
        match self {
            DegreeMode::Fixed { k } => {
                if degree == *k {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
            DegreeMode::Extended(dist) => {
                BigRational::from_float(dist.prob(degree)).unwrap_or_else(BigRational::zero)
            }
        }
    }
}

/// Assigns out-edges to one vertex: uniform `degree`-subset of its lattice
/// neighbors, or `forced` plus a uniform `(degree - 1)`-subset of the rest.
pub(crate) fn draw_out_edges<R: Rng + ?Sized>(
    lattice: &Lattice,
    v: VertexId,
    degree: usize,
    forced: Option<VertexId>,
    rng: &mut R,
) -> Neighbors {
    let mut pool: Neighbors = lattice.neighbors(v).iter().copied().collect();
    let mut out = Neighbors::new();
    let mut wanted = degree;
    if let Some(f) = forced {
        let at = pool.iter().position(|&u| u == f).expect("forced edge is a lattice edge");
        pool.remove(at);
        out.push(f);
        wanted -= 1;
    }
    // Partial Fisher-Yates: the first `wanted` slots form a uniform subset.
    for i in 0..wanted {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
        out.push(pool[i]);
    }
    out
}

/// Order in which the waiting set is drained during generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaitingOrder {
    Fifo,
    Lifo,
}

/// A rooted directed subgraph of the lattice.
#[derive(Clone, Debug)]
pub struct UnderlyingGraph {
    root: VertexId,
    q: usize,
    /// Out-degree per lattice vertex; zero for vertices not in the graph.
    degree: Vec<u8>,
    /// `q` slots per lattice vertex, the first `degree[v]` used.
    edges: Vec<VertexId>,
    /// Vertices in the order they were assigned out-edges.
    members: Vec<VertexId>,
}

impl UnderlyingGraph {
    pub(crate) fn empty(lattice: &Lattice, root: VertexId) -> Self {
        UnderlyingGraph {
            root,
            q: lattice.q(),
            degree: vec![0; lattice.vertex_count()],
            edges: vec![VertexId(0); lattice.vertex_count() * lattice.q()],
            members: Vec::new(),
        }
    }

    /// The graph with every lattice edge, rooted at `root` (the only graph of
    /// the `k = Q` law with this root).
    pub fn complete_lattice(lattice: &Lattice, root: VertexId) -> Self {
        let mut g = UnderlyingGraph::empty(lattice, root);
        for v in lattice.vertices() {
            g.assign(v, lattice.neighbors(v));
        }
        g
    }

    /// Builds a graph from explicit adjacency. Fails if a target is not a
    /// lattice neighbor, a list repeats a target, or a vertex is unreachable
    /// from `root`.
    pub fn from_adjacency(
        lattice: &Lattice,
        root: VertexId,
        adjacency: &[(VertexId, Vec<VertexId>)],
    ) -> Result<Self> {
        lattice.check_vertex(root)?;
        let mut g = UnderlyingGraph::empty(lattice, root);
        for (v, outs) in adjacency {
            lattice.check_vertex(*v)?;
            if g.contains(*v) {
                return Err(Error::InvalidConfig(format!("vertex {v} listed twice")));
            }
            if outs.is_empty() {
                return Err(Error::InvalidConfig(format!("vertex {v} has no out-edge")));
            }
            for (i, u) in outs.iter().enumerate() {
                if !lattice.are_neighbors(*v, *u) || outs[..i].contains(u) {
                    return Err(Error::InvalidConfig(format!("bad out-edge {v} -> {u}")));
                }
            }
            g.assign(*v, outs);
        }
        if !g.contains(root) || !g.is_rooted_reachable() {
            return Err(Error::InvalidConfig(
                "every vertex must be reachable from the root".into(),
            ));
        }
        Ok(g)
    }

    #[inline]
    pub(crate) fn assign(&mut self, v: VertexId, outs: &[VertexId]) {
        debug_assert!(!outs.is_empty() && outs.len() <= self.q);
        let base = v.index() * self.q;
        self.edges[base..base + outs.len()].copy_from_slice(outs);
        self.degree[v.index()] = outs.len() as u8;
        self.members.push(v);
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        self.degree[v.index()] != 0
    }

    /// Out-neighbors of `v`; empty when `v` is not in the graph.
    #[inline]
    pub fn out_edges(&self, v: VertexId) -> &[VertexId] {
        let base = v.index() * self.q;
        &self.edges[base..base + self.degree[v.index()] as usize]
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.degree[v.index()] as usize
    }

    pub fn has_edge(&self, from: VertexId, to: VertexId) -> bool {
        self.out_edges(from).contains(&to)
    }

    /// `|G|`, the number of vertices.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Vertices in assignment order.
    pub fn vertices(&self) -> &[VertexId] {
        &self.members
    }

    /// `k_i(G)`: number of vertices with out-degree `i`, indexed `0..=Q`.
    pub fn degree_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.q + 1];
        for &v in &self.members {
            counts[self.out_degree(v)] += 1;
        }
        counts
    }

    /// In-degree of `v` within the graph.
    pub fn in_degree(&self, v: VertexId) -> usize {
        self.members.iter().filter(|&&u| self.has_edge(u, v)).count()
    }

    /// Whether every member is reachable from the root along out-edges.
    pub fn is_rooted_reachable(&self) -> bool {
        if !self.contains(self.root) {
            return false;
        }
        let mut seen = vec![false; self.degree.len()];
        let mut stack = vec![self.root];
        seen[self.root.index()] = true;
        let mut count = 0;
        while let Some(v) = stack.pop() {
            count += 1;
            for &u in self.out_edges(v) {
                if !seen[u.index()] {
                    if !self.contains(u) {
                        return false;
                    }
                    seen[u.index()] = true;
                    stack.push(u);
                }
            }
        }
        count == self.size()
    }

    /// Order-independent description: root followed by sorted adjacency.
    pub fn signature(&self) -> Vec<u32> {
        let mut vs = self.members.clone();
        vs.sort();
        let mut sig = vec![self.root.0];
        for v in vs {
            let mut outs: Vec<u32> = self.out_edges(v).iter().map(|u| u.0).collect();
            outs.sort();
            sig.push(v.0);
            sig.push(outs.len() as u32);
            sig.extend(outs);
        }
        sig
    }

    /// Debug dump: one line `v: n1 n2 ...` per vertex in ascending order, the
    /// root's line suffixed with ` (root)`.
    pub fn dump(&self) -> String {
        let mut vs = self.members.clone();
        vs.sort();
        let mut out = String::new();
        for v in vs {
            let targets: Vec<String> = self.out_edges(v).iter().map(|u| u.to_string()).collect();
            let _ = write!(out, "{v}: {}", targets.join(" "));
            if v == self.root {
                out.push_str(" (root)");
            }
            out.push('\n');
        }
        out
    }
}

/// Uniform free vertex, or `None` if the lattice is full.
pub fn random_free_vertex<R: Rng + ?Sized>(
    occupancy: &Occupancy,
    rng: &mut R,
) -> Option<VertexId> {
    let free = occupancy.free_count();
    if free == 0 {
        return None;
    }
    let n = occupancy.vertex_count();
    if free * 8 >= n {
        loop {
            let v = VertexId(rng.gen_range(0..n as u32));
            if occupancy.is_free(v) {
                return Some(v);
            }
        }
    }
    let pick = rng.gen_range(0..free);
    occupancy.free_vertices().nth(pick)
}

/// Draws an underlying graph rooted at a uniform free vertex.
pub fn generate<R: Rng + ?Sized>(
    lattice: &Lattice,
    occupancy: &Occupancy,
    mode: &DegreeMode,
    rng: &mut R,
) -> Result<UnderlyingGraph> {
    let root = random_free_vertex(occupancy, rng)
        .ok_or_else(|| Error::Infeasible("no free vertex for the root".into()))?;
    Ok(generate_from_root(lattice, root, mode, rng))
}

/// Draws the out-edges of an underlying graph with a given root.
pub fn generate_from_root<R: Rng + ?Sized>(
    lattice: &Lattice,
    root: VertexId,
    mode: &DegreeMode,
    rng: &mut R,
) -> UnderlyingGraph {
    generate_with(lattice, root, mode, None, WaitingOrder::Fifo, rng)
}

/// [`generate_from_root`] with an explicit waiting-set discipline.
pub fn generate_with_order<R: Rng + ?Sized>(
    lattice: &Lattice,
    root: VertexId,
    mode: &DegreeMode,
    order: WaitingOrder,
    rng: &mut R,
) -> UnderlyingGraph {
    generate_with(lattice, root, mode, None, order, rng)
}

/// Draws an underlying graph compatible with `c`: the root is one of the two
/// extremities with probability 1/2 each, and the first `L - 1` polymer
/// vertices (in the induced orientation) always point to their successor.
pub fn generate_compatible<R: Rng + ?Sized>(
    lattice: &Lattice,
    c: &Polymer,
    mode: &DegreeMode,
    rng: &mut R,
) -> UnderlyingGraph {
    let oriented = orient_randomly(c, rng);
    let forced = forced_successors(lattice, &oriented);
    generate_with(
        lattice,
        oriented.first(),
        mode,
        Some(&forced),
        WaitingOrder::Fifo,
        rng,
    )
}

pub(crate) fn orient_randomly<R: Rng + ?Sized>(c: &Polymer, rng: &mut R) -> Polymer {
    if rng.gen_bool(0.5) {
        c.clone()
    } else {
        c.reversed()
    }
}

/// Dense map `v -> successor of v` along an oriented polymer.
pub(crate) fn forced_successors(lattice: &Lattice, oriented: &Polymer) -> Vec<Option<VertexId>> {
    let mut forced = vec![None; lattice.vertex_count()];
    for w in oriented.vertices().windows(2) {
        forced[w[0].index()] = Some(w[1]);
    }
    forced
}

fn generate_with<R: Rng + ?Sized>(
    lattice: &Lattice,
    root: VertexId,
    mode: &DegreeMode,
    forced: Option<&[Option<VertexId>]>,
    order: WaitingOrder,
    rng: &mut R,
) -> UnderlyingGraph {
    let mut g = UnderlyingGraph::empty(lattice, root);
    let mut seen = vec![false; lattice.vertex_count()];
    let mut waiting = VecDeque::new();
    waiting.push_back(root);
    seen[root.index()] = true;
    loop {
        let next = match order {
            WaitingOrder::Fifo => waiting.pop_front(),
            WaitingOrder::Lifo => waiting.pop_back(),
        };
        let Some(v) = next else { break };
        let degree = mode.draw(rng);
        let must = forced.and_then(|f| f[v.index()]);
        let outs = draw_out_edges(lattice, v, degree, must, rng);
        for &u in &outs {
            if !seen[u.index()] {
                seen[u.index()] = true;
                waiting.push_back(u);
            }
        }
        g.assign(v, &outs);
    }
    g
}

/// Whether the root of `g` is an extremity of `c` and every edge of `c`,
/// oriented from that root, is present in `g`.
pub fn is_compatible(g: &UnderlyingGraph, c: &Polymer) -> bool {
    match c.oriented_from(g.root()) {
        Some(oriented) => oriented.vertices().windows(2).all(|w| g.has_edge(w[0], w[1])),
        None => false,
    }
}

/// `C(n, r)` as an exact integer.
pub fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// The combinatorial constants entering the generation probabilities.
#[derive(Clone, Debug)]
pub struct GraphConstants {
    pub q: usize,
    /// Free vertices when the other polymers are present.
    pub gamma: usize,
}

impl GraphConstants {
    pub fn new(q: usize, gamma: usize) -> Self {
        GraphConstants { q, gamma }
    }

    /// `gamma = a^d - (N - 1) L` for `N` polymers of length `L`.
    pub fn for_system(lattice: &Lattice, n: usize, length: usize) -> Self {
        GraphConstants::new(lattice.q(), lattice.vertex_count() - (n - 1) * length)
    }

    /// `alpha_i = 1 / C(Q, i)`.
    pub fn alpha(&self, i: usize) -> f64 {
        1.0 / binomial(self.q, i) as f64
    }

    /// `beta_i = 1 / C(Q - 1, i - 1)`.
    pub fn beta(&self, i: usize) -> f64 {
        1.0 / binomial(self.q - 1, i - 1) as f64
    }

    pub fn alpha_exact(&self, i: usize) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(binomial(self.q, i)))
    }

    pub fn beta_exact(&self, i: usize) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(binomial(self.q - 1, i - 1)))
    }

    /// `eta = gamma / 2 * (beta / alpha)^(L - 1)` of the fixed-`k` law.
    pub fn eta(&self, k: usize, length: usize) -> f64 {
        self.gamma as f64 / 2.0 * (self.beta(k) / self.alpha(k)).powi(length as i32 - 1)
    }

    pub fn eta_exact(&self, k: usize, length: usize) -> BigRational {
        let ratio = self.beta_exact(k) / self.alpha_exact(k);
        let mut eta = BigRational::new(BigInt::from(self.gamma), BigInt::from(2));
        for _ in 1..length {
            eta *= &ratio;
        }
        eta
    }
}

/// `ln P_u(G)`: `ln(alpha^|G| / gamma)` for fixed `k`, and
/// `ln(prod_v p_d(v) alpha_d(v) / gamma)` for random degrees. `-inf` when a
/// degree lies outside the support of the law.
pub fn ln_prob_u(g: &UnderlyingGraph, consts: &GraphConstants, mode: &DegreeMode) -> f64 {
    let mut ln = -(consts.gamma as f64).ln();
    for (degree, &count) in g.degree_counts().iter().enumerate().skip(1) {
        if count == 0 {
            continue;
        }
        let p = mode.degree_prob(degree);
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        ln += count as f64 * (p * consts.alpha(degree)).ln();
    }
    ln
}

pub fn prob_u(g: &UnderlyingGraph, consts: &GraphConstants, mode: &DegreeMode) -> f64 {
    ln_prob_u(g, consts, mode).exp()
}

/// Exact-rational `P_u(G)`. Random-degree probabilities are taken at their
/// exact binary value.
pub fn prob_u_exact(g: &UnderlyingGraph, consts: &GraphConstants, mode: &DegreeMode) -> BigRational {
    let mut prob = BigRational::new(BigInt::one(), BigInt::from(consts.gamma));
    for (degree, &count) in g.degree_counts().iter().enumerate().skip(1) {
        let factor = mode.degree_prob_exact(degree) * consts.alpha_exact(degree);
        for _ in 0..count {
            prob *= &factor;
        }
    }
    prob
}

/// The polymer vertices that carry a forced edge (all but the far end),
/// or `None` if incompatible.
fn forced_part(g: &UnderlyingGraph, c: &Polymer) -> Option<Vec<VertexId>> {
    if !is_compatible(g, c) {
        return None;
    }
    let oriented = c.oriented_from(g.root())?;
    Some(oriented.vertices()[..oriented.len() - 1].to_vec())
}

/// `ln P_c(G | C)`: one half times `p_d alpha_d` per vertex off the forced
/// part and `p_d beta_d` per forced vertex. `-inf` if incompatible.
pub fn ln_prob_c(
    g: &UnderlyingGraph,
    c: &Polymer,
    consts: &GraphConstants,
    mode: &DegreeMode,
) -> f64 {
    let Some(forced) = forced_part(g, c) else {
        return f64::NEG_INFINITY;
    };
    let mut ln = -std::f64::consts::LN_2;
    for &v in g.vertices() {
        let degree = g.out_degree(v);
        let p = mode.degree_prob(degree);
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        let choice = if forced.contains(&v) {
            consts.beta(degree)
        } else {
            consts.alpha(degree)
        };
        ln += (p * choice).ln();
    }
    ln
}

pub fn prob_c(g: &UnderlyingGraph, c: &Polymer, consts: &GraphConstants, mode: &DegreeMode) -> f64 {
    ln_prob_c(g, c, consts, mode).exp()
}

pub fn prob_c_exact(
    g: &UnderlyingGraph,
    c: &Polymer,
    consts: &GraphConstants,
    mode: &DegreeMode,
) -> BigRational {
    let Some(forced) = forced_part(g, c) else {
        return BigRational::zero();
    };
    let mut prob = BigRational::new(BigInt::one(), BigInt::from(2));
    for &v in g.vertices() {
        let degree = g.out_degree(v);
        let choice = if forced.contains(&v) {
            consts.beta_exact(degree)
        } else {
            consts.alpha_exact(degree)
        };
        prob *= mode.degree_prob_exact(degree) * choice;
    }
    prob
}
