//! Negative cycles of difference graphs and the cuts they induce on
//! assignment variables.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::error::CutError;
use crate::feasibility::SirConstraint;
use crate::model::ServerAssignment;
use crate::par::{self, Parallelism};
use crate::relaxation::{Arc, ArcKind, DifferenceGraph};

/// A closed directed walk with distinct nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    pub arcs: Vec<Arc>,
    pub total_weight: i64,
}

impl Cycle {
    pub fn new(arcs: Vec<Arc>) -> Self {
        for (i, arc) in arcs.iter().enumerate() {
            debug_assert_eq!(arc.head, arcs[(i + 1) % arcs.len()].tail, "arcs must chain");
        }
        let total_weight = arcs.iter().map(|a| a.weight).sum();
        Cycle { arcs, total_weight }
    }

    pub fn is_negative(&self) -> bool {
        self.total_weight < 0
    }

    pub fn nodes(&self) -> Vec<usize> {
        self.arcs.iter().map(|a| a.tail).collect()
    }
}

/// Outcome of [`find_negative_cycle`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleSearch {
    Negative(Cycle),
    /// Potentials `π` with `π_v − π_u ≤ l` on every arc `u → v`.
    Potentials(Vec<i64>),
}

impl CycleSearch {
    pub fn cycle(&self) -> Option<&Cycle> {
        match self {
            CycleSearch::Negative(c) => Some(c),
            CycleSearch::Potentials(_) => None,
        }
    }
}

/// Bellman-Ford from a virtual source joined to every node by zero arcs.
///
/// Returns the arc indices of a negative cycle, or feasible potentials.
pub fn bellman_ford(node_count: usize, arcs: &[(usize, usize, i64)]) -> Result<Vec<i64>, Vec<usize>> {
    let mut dist = vec![0i64; node_count];
    let mut pred: Vec<Option<usize>> = vec![None; node_count];
    let mut last_round_changed = false;
    for _ in 0..node_count.max(1) {
        last_round_changed = false;
        for (i, &(u, v, w)) in arcs.iter().enumerate() {
            let candidate = dist[u] + w;
            if candidate < dist[v] {
                dist[v] = candidate;
                pred[v] = Some(i);
                last_round_changed = true;
            }
        }
        if !last_round_changed {
            return Ok(dist);
        }
    }
    debug_assert!(last_round_changed);
    Err(predecessor_cycle(node_count, arcs, &pred))
}

/// Any cycle of the predecessor graph, scanning start nodes in index order.
fn predecessor_cycle(node_count: usize, arcs: &[(usize, usize, i64)], pred: &[Option<usize>]) -> Vec<usize> {
    // 0 = unvisited, 1 = on current walk, 2 = exhausted
    let mut state = vec![0u8; node_count];
    for start in 0..node_count {
        if state[start] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut v = start;
        loop {
            if state[v] == 1 {
                // v closes a cycle; collect arcs in forward order
                let mut cycle = Vec::new();
                let mut u = v;
                loop {
                    let arc = pred[u].expect("walked node has a predecessor");
                    cycle.push(arc);
                    u = arcs[arc].0;
                    if u == v {
                        break;
                    }
                }
                cycle.reverse();
                return cycle;
            }
            if state[v] == 2 {
                break;
            }
            state[v] = 1;
            walk.push(v);
            match pred[v] {
                Some(arc) => v = arcs[arc].0,
                None => break,
            }
        }
        for w in walk {
            state[w] = 2;
        }
    }
    unreachable!("a relaxation in the last round implies a predecessor cycle")
}

/// Some negative cycle of the graph, or a certificate that none exists.
/// Arcs and nodes are scanned in index order, so the answer is
/// deterministic.
pub fn find_negative_cycle(graph: &DifferenceGraph) -> CycleSearch {
    let triples: Vec<(usize, usize, i64)> = graph
        .arcs()
        .iter()
        .map(|a| (a.tail, a.head, a.weight))
        .collect();
    match bellman_ford(graph.node_count(), &triples) {
        Ok(potentials) => CycleSearch::Potentials(potentials),
        Err(indices) => {
            let cycle = Cycle::new(indices.into_iter().map(|i| graph.arcs()[i]).collect());
            debug_assert!(cycle.is_negative());
            CycleSearch::Negative(cycle)
        }
    }
}

/// Where a cut came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CutProvenance {
    /// Two interference arcs between one node pair with negative sum.
    TwoCycle { weight: i64 },
    NegativeCycle(Cycle),
    /// Irreducible infeasible subsystem of the exact SIR system.
    InfeasibleSubsystem,
}

impl CutProvenance {
    pub fn label(&self) -> &'static str {
        match self {
            CutProvenance::TwoCycle { .. } => "two-cycle",
            CutProvenance::NegativeCycle(_) => "negative-cycle",
            CutProvenance::InfeasibleSubsystem => "infeasible-subsystem",
        }
    }
}

/// `Σ_{(t,b) ∈ pairs} x_tb ≤ |pairs| − 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleCut {
    /// `(receiver, transmitter)` pairs, sorted.
    pairs: Vec<(usize, usize)>,
    pub provenance: CutProvenance,
}

impl CycleCut {
    /// Cut whose pairs must have distinct receivers and distinct
    /// transmitters.
    pub fn from_cycle_pairs(
        mut pairs: Vec<(usize, usize)>,
        provenance: CutProvenance,
    ) -> Result<Self, CutError> {
        pairs.sort_unstable();
        let mut transmitters = BTreeSet::new();
        for &(_, b) in &pairs {
            if !transmitters.insert(b) {
                return Err(CutError::RepeatedTransmitter(b));
            }
        }
        Self::with_distinct_receivers(pairs, provenance)
    }

    /// No-good cut for an infeasible exact subsystem; servers may repeat.
    pub fn from_subsystem(constraints: &[SirConstraint]) -> Result<Self, CutError> {
        let mut pairs: Vec<(usize, usize)> =
            constraints.iter().map(|c| (c.receiver, c.server)).collect();
        pairs.sort_unstable();
        Self::with_distinct_receivers(pairs, CutProvenance::InfeasibleSubsystem)
    }

    fn with_distinct_receivers(
        pairs: Vec<(usize, usize)>,
        provenance: CutProvenance,
    ) -> Result<Self, CutError> {
        if pairs.is_empty() {
            return Err(CutError::Empty);
        }
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CutError::RepeatedReceiver(w[0].0));
            }
        }
        Ok(CycleCut { pairs, provenance })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn rhs(&self) -> usize {
        self.pairs.len() - 1
    }

    pub fn contains(&self, t: usize, b: usize) -> bool {
        self.pairs.binary_search(&(t, b)).is_ok()
    }
}

impl fmt::Display for CycleCut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .pairs
            .iter()
            .map(|(t, b)| format!("x_t{t}_b{b}"))
            .collect();
        write!(f, "{} <= {}", terms.join(" + "), self.rhs())
    }
}

/// Cut on the interference pairs of a negative cycle; bound and pin arcs
/// carry no pair.
pub fn cut_from_cycle(cycle: &Cycle) -> Result<CycleCut, CutError> {
    if !cycle.is_negative() {
        return Err(CutError::NotNegative(cycle.total_weight));
    }
    let pairs: Vec<(usize, usize)> = cycle
        .arcs
        .iter()
        .filter_map(|a| match a.kind {
            ArcKind::Interference {
                receiver, server, ..
            } => Some((receiver, server)),
            _ => None,
        })
        .collect();
    if pairs.is_empty() {
        return Err(CutError::BoundsOnly);
    }
    CycleCut::from_cycle_pairs(pairs, CutProvenance::NegativeCycle(cycle.clone()))
}

/// All cuts `x_{t₁β} + x_{t₂b} ≤ 1` from pairs of opposite interference
/// arcs with negative total weight, ordered by transmitter pair, then
/// receivers. The graph must be built over the full scope.
pub fn enumerate_two_cycles(graph: &DifferenceGraph) -> Vec<CycleCut> {
    enumerate_two_cycles_with(graph, Parallelism::default())
}

pub fn enumerate_two_cycles_with(graph: &DifferenceGraph, parallelism: Parallelism) -> Vec<CycleCut> {
    let nb = graph.n_transmitters();
    let node_pairs: Vec<(usize, usize)> = (0..nb)
        .flat_map(|u| (u + 1..nb).map(move |v| (u, v)))
        .collect();
    // each cut comes from exactly one transmitter pair, so no dedupe
    let blocks = par::map(parallelism, &node_pairs, |&(beta, b)| {
        let forward = graph.provenance(beta, b);
        let backward = graph.provenance(b, beta);
        let mut found = Vec::new();
        for &(t1, w1) in forward {
            for &(t2, w2) in backward {
                if t1 != t2 && w1 + w2 < 0 {
                    let cut = CycleCut::from_cycle_pairs(
                        vec![(t1, beta), (t2, b)],
                        CutProvenance::TwoCycle { weight: w1 + w2 },
                    )
                    .expect("two-cycle pairs are distinct");
                    found.push(cut);
                }
            }
        }
        found
    });
    blocks.into_iter().flatten().collect()
}

/// True iff every pair of the cut is activated.
pub fn violated_by(cut: &CycleCut, x: &ServerAssignment) -> bool {
    cut.pairs.iter().all(|&(t, b)| x.is_active(t, b))
}

/// One line per cut.
pub fn dump_cuts(cuts: &[CycleCut]) -> String {
    let mut out = String::new();
    for cut in cuts {
        writeln!(out, "{cut}").unwrap();
    }
    out
}
