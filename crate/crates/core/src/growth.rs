//! Recoil growth with a feeler of length `ell` on an underlying graph, and
//! the weights that give its output law.
//!
//! A growth attempt starts at the graph root and keeps drawing untried
//! out-neighbors of the current end. It may recoil only inside the feeler,
//! the suffix beyond the fixed part `(v_1 .. v_delta)` with
//! `delta = max(1, l_max - ell)`. On a graph compatible with a complete
//! polymer `C`, the attempt returns `C` with probability `1 / W(C | G)`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::UnderlyingGraph;
use crate::lattice::{Neighbors, VertexId};
use crate::state::{Occupancy, Polymer};

/// Something growth can walk on: a fully generated graph, or one whose
/// out-edges are drawn the first time a vertex is queried.
pub trait EdgeSource {
    fn root(&self) -> VertexId;

    /// Out-neighbors of `v`, drawing them first if needed.
    fn out_edges<R: Rng + ?Sized>(&mut self, v: VertexId, rng: &mut R) -> Neighbors;
}

impl EdgeSource for UnderlyingGraph {
    fn root(&self) -> VertexId {
        UnderlyingGraph::root(self)
    }

    fn out_edges<R: Rng + ?Sized>(&mut self, v: VertexId, _rng: &mut R) -> Neighbors {
        UnderlyingGraph::out_edges(self, v).iter().copied().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// The drawn neighbor was free and became the new end.
    Extend,
    /// The drawn neighbor belongs to another polymer.
    RejectOccupied,
    /// The drawn neighbor is already on the partial polymer.
    RejectSelf,
    /// All out-neighbors of the end were tried; the end was removed.
    Recoil,
    /// All out-neighbors of an end inside the fixed part were tried.
    Fail,
    /// The partial polymer reached full length.
    Success,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Extend => "extend",
            EventKind::RejectOccupied => "reject-occupied",
            EventKind::RejectSelf => "reject-self",
            EventKind::Recoil => "recoil",
            EventKind::Fail => "fail",
            EventKind::Success => "success",
        }
    }
}

/// One decision of a growth attempt. `length` and `delta` are read after
/// the decision took effect.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub kind: EventKind,
    /// Drawn vertex for extend/reject, removed end for recoil, current end
    /// for fail/success.
    pub vertex: VertexId,
    pub length: usize,
    pub delta: usize,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} length={} delta={}",
            self.kind.name(),
            self.vertex,
            self.length,
            self.delta
        )
    }
}

/// Renders a trace in the line-based log format.
pub fn format_trace(events: &[TraceEvent]) -> String {
    events.iter().map(|e| format!("{e}\n")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrowthOutcome {
    Success(Polymer),
    Failure,
}

#[derive(Clone, Debug)]
pub struct GrowthResult {
    pub outcome: GrowthOutcome,
    /// Out-neighbor draws made.
    pub steps_taken: usize,
    pub recoils: usize,
    /// Longest partial polymer reached.
    pub l_max: usize,
}

impl GrowthResult {
    pub fn polymer(&self) -> Option<&Polymer> {
        match &self.outcome {
            GrowthOutcome::Success(c) => Some(c),
            GrowthOutcome::Failure => None,
        }
    }

    pub fn into_polymer(self) -> Option<Polymer> {
        match self.outcome {
            GrowthOutcome::Success(c) => Some(c),
            GrowthOutcome::Failure => None,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self.outcome, GrowthOutcome::Success(_))
    }
}

struct Frame {
    vertex: VertexId,
    /// Out-neighbors in the order they will be tried; `None` at full length.
    order: Option<Neighbors>,
    cursor: usize,
}

/// `max(1, l_max - ell)`.
#[inline]
pub fn fixed_part(l_max: usize, ell: usize) -> usize {
    l_max.saturating_sub(ell).max(1)
}

/// Grows a polymer of `length` vertices from the root of `source`.
pub fn grow<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    occupancy: &Occupancy,
    length: usize,
    ell: usize,
    rng: &mut R,
) -> Result<GrowthResult> {
    grow_traced(source, occupancy, length, ell, rng, None)
}

/// [`grow`], appending every decision to `trace` when given.
pub fn grow_traced<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    occupancy: &Occupancy,
    length: usize,
    ell: usize,
    rng: &mut R,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<GrowthResult> {
    let root = source.root();
    if occupancy.is_occupied(root) {
        return Err(Error::RootOccupied(root.0));
    }
    if length < 2 {
        return Err(Error::InvalidConfig(format!("polymer length {length} is below 2")));
    }
    let mut log = |kind, vertex, length, delta| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceEvent {
                kind,
                vertex,
                length,
                delta,
            });
        }
    };

    let mut path: Vec<VertexId> = Vec::with_capacity(length);
    let mut frames: Vec<Frame> = Vec::with_capacity(length);
    path.push(root);
    frames.push(open_frame(source, root, 1, length, rng));
    let mut l_max = 1;
    let mut steps_taken = 0;
    let mut recoils = 0;

    loop {
        let i = path.len();
        let delta = fixed_part(l_max, ell);
        if i == length {
            log(EventKind::Success, path[i - 1], i, delta);
            return Ok(GrowthResult {
                outcome: GrowthOutcome::Success(Polymer::new(path)),
                steps_taken,
                recoils,
                l_max,
            });
        }
        let frame = frames.last_mut().expect("non-empty partial polymer");
        let order = frame.order.as_ref().expect("open frame below full length");
        if frame.cursor == order.len() {
            if i > delta {
                let removed = path.pop().expect("i > 1");
                frames.pop();
                recoils += 1;
                log(EventKind::Recoil, removed, i - 1, delta);
                continue;
            }
            log(EventKind::Fail, path[i - 1], i, delta);
            return Ok(GrowthResult {
                outcome: GrowthOutcome::Failure,
                steps_taken,
                recoils,
                l_max,
            });
        }
        let u = order[frame.cursor];
        frame.cursor += 1;
        steps_taken += 1;
        if occupancy.is_occupied(u) {
            log(EventKind::RejectOccupied, u, i, delta);
        } else if path.contains(&u) {
            log(EventKind::RejectSelf, u, i, delta);
        } else {
            path.push(u);
            frames.push(open_frame(source, u, i + 1, length, rng));
            l_max = l_max.max(i + 1);
            log(EventKind::Extend, u, i + 1, fixed_part(l_max, ell));
        }
    }
}

fn open_frame<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    v: VertexId,
    position: usize,
    length: usize,
    rng: &mut R,
) -> Frame {
    let order = (position < length).then(|| {
        let mut outs = source.out_edges(v, rng);
        outs.shuffle(rng);
        outs
    });
    Frame {
        vertex: v,
        order,
        cursor: 0,
    }
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frame({}, tried {})", self.vertex, self.cursor)
    }
}

/// Number of further steps a candidate must be extendable by: `ell` while
/// `i < length - ell`, and up to full length otherwise. `i` is the prefix
/// length before the candidate.
#[inline]
pub fn admissibility_depth(i: usize, ell: usize, length: usize) -> usize {
    if i + ell < length {
        ell
    } else {
        length - i - 1
    }
}

/// Whether `v` is an admissible continuation of `prefix`: free, off the
/// prefix, and the start of a self-avoiding directed path of the required
/// depth that avoids the occupancy and `prefix + v`.
pub fn is_admissible<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    occupancy: &Occupancy,
    prefix: &[VertexId],
    v: VertexId,
    ell: usize,
    length: usize,
    rng: &mut R,
) -> bool {
    if occupancy.is_occupied(v) || prefix.contains(&v) {
        return false;
    }
    let depth = admissibility_depth(prefix.len(), ell, length);
    let mut path = Vec::with_capacity(prefix.len() + 1 + depth);
    path.extend_from_slice(prefix);
    path.push(v);
    extendable(source, occupancy, &mut path, depth, rng)
}

fn extendable<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    occupancy: &Occupancy,
    path: &mut Vec<VertexId>,
    remaining: usize,
    rng: &mut R,
) -> bool {
    if remaining == 0 {
        return true;
    }
    let end = *path.last().expect("non-empty path");
    for u in source.out_edges(end, rng) {
        if occupancy.is_occupied(u) || path.contains(&u) {
            continue;
        }
        path.push(u);
        let found = extendable(source, occupancy, path, remaining - 1, rng);
        path.pop();
        if found {
            return true;
        }
    }
    false
}

/// `C` oriented from the root of `source`, checked for compatibility.
pub fn orient_compatible<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    c: &Polymer,
    rng: &mut R,
) -> Result<Polymer> {
    let oriented = c.oriented_from(source.root()).ok_or(Error::Incompatible)?;
    for w in oriented.vertices().windows(2) {
        if !source.out_edges(w[0], rng).contains(&w[1]) {
            return Err(Error::Incompatible);
        }
    }
    Ok(oriented)
}

/// `w_i`: admissible out-neighbors of `v_i` given the prefix `v_1 .. v_i`
/// of the oriented polymer. `i` is 1-based, `1 <= i <= L - 1`.
pub fn elementary_weight<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    occupancy: &Occupancy,
    oriented: &Polymer,
    i: usize,
    ell: usize,
    rng: &mut R,
) -> u32 {
    let prefix = &oriented.vertices()[..i];
    let length = oriented.len();
    let mut count = 0;
    for u in source.out_edges(prefix[i - 1], rng) {
        if is_admissible(source, occupancy, prefix, u, ell, length, rng) {
            count += 1;
        }
    }
    count
}

/// A product of small positive integers, kept factor by factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weight {
    factors: Vec<u32>,
}

impl Weight {
    pub fn from_factors(factors: Vec<u32>) -> Self {
        Weight { factors }
    }

    pub fn factors(&self) -> &[u32] {
        &self.factors
    }

    pub fn value(&self) -> BigUint {
        self.factors
            .iter()
            .fold(BigUint::one(), |acc, &f| acc * BigUint::from(f))
    }

    pub fn ln(&self) -> f64 {
        self.factors.iter().map(|&f| (f as f64).ln()).sum()
    }

    /// The value as `f64` (may round for long polymers).
    pub fn as_f64(&self) -> f64 {
        self.factors.iter().map(|&f| f as f64).product()
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// `W(C | G) = prod w_i`. Fails if `C` is not compatible with `source`.
pub fn weight<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    occupancy: &Occupancy,
    c: &Polymer,
    ell: usize,
    rng: &mut R,
) -> Result<Weight> {
    let oriented = orient_compatible(source, c, rng)?;
    let factors = (1..oriented.len())
        .map(|i| elementary_weight(source, occupancy, &oriented, i, ell, rng))
        .collect();
    Ok(Weight::from_factors(factors))
}

/// `W0(C | G)`: out-degrees along `C`, excluding the far end.
pub fn weight_w0<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    c: &Polymer,
    rng: &mut R,
) -> Result<Weight> {
    let oriented = orient_compatible(source, c, rng)?;
    let factors = oriented.vertices()[..oriented.len() - 1]
        .iter()
        .map(|&v| source.out_edges(v, rng).len() as u32)
        .collect();
    Ok(Weight::from_factors(factors))
}

/// `P_g(C | G)`: `1 / W(C | G)` when compatible, zero otherwise.
pub fn prob_g(g: &UnderlyingGraph, occupancy: &Occupancy, c: &Polymer, ell: usize) -> f64 {
    let mut g = g.clone();
    let mut no_rng = rand::rngs::mock::StepRng::new(0, 0);
    if c.vertices().iter().any(|&v| occupancy.is_occupied(v)) {
        return 0.0;
    }
    match weight(&mut g, occupancy, c, ell, &mut no_rng) {
        Ok(w) => (-w.ln()).exp(),
        Err(_) => 0.0,
    }
}
