//! Exact branch-and-bound over server assignments.
//!
//! Every search node holds a feasible partial assignment. Children extend it
//! by serving one more receiver; each child is screened first on the pairwise
//! dB relaxation (a negative cycle becomes a learned cut) and then on the
//! exact SIR system (an infeasible system yields an irreducible infeasible
//! subsystem, learned as a no-good). Candidate servers that would complete a
//! known cut are dropped before branching.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::cycles::{self, CutProvenance, CycleCut, CycleSearch};
use crate::error::ModelError;
use crate::feasibility::{self, ActivatedSystem, FeasibilityConfig, SirConstraint};
use crate::model::{self, Instance, PowerVector, ServerAssignment};
use crate::par::{self, Parallelism};
use crate::relaxation::{self, Scope};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutMode {
    #[default]
    None,
    /// Install every negative two-cycle cut at the root.
    TwoCycle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proof {
    Optimal,
    TimeLimit,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub cuts: CutMode,
    pub node_limit: u64,
    pub time_limit: Duration,
    pub parallelism: Parallelism,
    pub feasibility: FeasibilityConfig,
    /// Cuts known to be valid, installed before the search starts.
    pub initial_cuts: Vec<CycleCut>,
    /// Also test every candidate extension on the exact system before
    /// counting it in the node bound. Tighter bounds, costlier nodes.
    pub lookahead: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cuts: CutMode::None,
            node_limit: 1_000_000,
            time_limit: Duration::from_secs(3600),
            parallelism: Parallelism::Sequential,
            feasibility: FeasibilityConfig::default(),
            initial_cuts: Vec::new(),
            lookahead: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutCounts {
    pub two_cycle: usize,
    pub negative_cycle: usize,
    pub infeasible_subsystem: usize,
}

impl CutCounts {
    pub fn total(&self) -> usize {
        self.two_cycle + self.negative_cycle + self.infeasible_subsystem
    }

    fn add(&mut self, other: CutCounts) {
        self.two_cycle += other.two_cycle;
        self.negative_cycle += other.negative_cycle;
        self.infeasible_subsystem += other.infeasible_subsystem;
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub best_assignment: ServerAssignment,
    pub best_powers: PowerVector,
    pub objective: f64,
    pub root_bound: f64,
    /// Best proven upper bound at termination.
    pub upper_bound: f64,
    pub proof: Proof,
    pub cuts_generated: CutCounts,
    /// Cuts learned during the search, in discovery order.
    pub learned_cuts: Vec<CycleCut>,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

impl SolveResult {
    /// `100·(UB − LB)/LB`; `None` when no receiver is served.
    pub fn gap_percent(&self) -> Option<f64> {
        gap_percent(self.upper_bound, self.objective)
    }
}

pub fn gap_percent(upper: f64, lower: f64) -> Option<f64> {
    if lower > 0.0 {
        Some(100.0 * (upper - lower) / lower)
    } else if upper <= 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Upper bound on the optimum available before branching.
///
/// Without cuts: total revenue of receivers some transmitter can serve on
/// its own. With cuts: additionally, for a greedy matching of two-cycle
/// conflicts between receivers that have no other candidate server, the
/// smaller revenue of each matched conflict is dropped.
pub fn root_bound(instance: &Instance, with_cuts: bool) -> f64 {
    let candidates: Vec<Vec<usize>> = (0..instance.n_receivers())
        .map(|t| instance.candidate_servers(t))
        .collect();
    let plain: f64 = candidates
        .iter()
        .zip(&instance.revenue)
        .filter(|(c, _)| !c.is_empty())
        .map(|(_, r)| r)
        .sum();
    if !with_cuts {
        return plain;
    }
    let graph = relaxation::build_graph(instance, Scope::All);
    let mut edges: Vec<(f64, usize, usize)> = cycles::enumerate_two_cycles(&graph)
        .iter()
        .filter_map(|cut| {
            let [(t1, b1), (t2, b2)] = cut.pairs() else {
                return None;
            };
            let only = |t: usize, b: usize| candidates[t].as_slice() == [b];
            (only(*t1, *b1) && only(*t2, *b2)).then(|| {
                (instance.revenue[*t1].min(instance.revenue[*t2]), *t1, *t2)
            })
        })
        .collect();
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut matched = vec![false; instance.n_receivers()];
    let mut reduction = 0.0;
    for (loss, t1, t2) in edges {
        if !matched[t1] && !matched[t2] {
            matched[t1] = true;
            matched[t2] = true;
            reduction += loss;
        }
    }
    plain - reduction
}

/// Receivers by revenue (highest first) each try their strongest
/// transmitter and keep it iff the exact system stays feasible.
pub fn greedy_heuristic(instance: &Instance) -> ServerAssignment {
    greedy_with(instance, &FeasibilityConfig::default()).0
}

fn greedy_with(instance: &Instance, config: &FeasibilityConfig) -> (ServerAssignment, PowerVector) {
    let mut order: Vec<usize> = (0..instance.n_receivers()).collect();
    order.sort_by(|&a, &b| instance.revenue[b].total_cmp(&instance.revenue[a]).then(a.cmp(&b)));
    let mut x = ServerAssignment::unserved(instance.n_receivers());
    let mut powers = PowerVector::zeros(instance.n_transmitters());
    for t in order {
        let best = (0..instance.n_transmitters())
            .filter(|&b| instance.gain(t, b) > 0.0)
            .fold(None, |acc: Option<usize>, b| match acc {
                Some(a) if instance.gain(t, a) >= instance.gain(t, b) => Some(a),
                _ => Some(b),
            });
        let Some(b) = best else { continue };
        x.set(t, Some(b));
        match feasibility::minimal_powers_with(&feasibility::assignment_to_system(&x, instance), config) {
            Some(p) => powers = p,
            None => x.set(t, None),
        }
    }
    (x, powers)
}

struct Incumbent {
    assignment: ServerAssignment,
    powers: PowerVector,
    objective: f64,
}

/// Incumbent shared by concurrent subtree searches; the objective only
/// grows.
struct Shared {
    objective_bits: AtomicU64,
    best: Mutex<Incumbent>,
}

impl Shared {
    fn objective(&self) -> f64 {
        f64::from_bits(self.objective_bits.load(Ordering::Acquire))
    }

    fn offer(&self, x: &ServerAssignment, powers: &PowerVector, objective: f64) {
        if objective <= self.objective() {
            return;
        }
        let mut best = self.best.lock().expect("incumbent lock");
        if objective > best.objective {
            best.assignment = x.clone();
            best.powers = powers.clone();
            best.objective = objective;
            self.objective_bits.store(objective.to_bits(), Ordering::Release);
        }
    }
}

struct Limits {
    node_limit: u64,
    deadline: Instant,
    nodes: AtomicU64,
}

struct Search<'a> {
    instance: &'a Instance,
    config: &'a SolverConfig,
    shared: &'a Shared,
    limits: &'a Limits,
    candidates: Vec<Vec<usize>>,
    cuts: Vec<CycleCut>,
    /// Cut ids touching each `(receiver, transmitter)`.
    cut_index: Vec<Vec<Vec<usize>>>,
    known: HashSet<Vec<(usize, usize)>>,
    learned: Vec<CycleCut>,
    counts: CutCounts,
    x: ServerAssignment,
    decided: Vec<bool>,
    aborted: bool,
    open_bound: f64,
    eps: f64,
}

impl<'a> Search<'a> {
    fn new(
        instance: &'a Instance,
        config: &'a SolverConfig,
        shared: &'a Shared,
        limits: &'a Limits,
        root_cuts: &[CycleCut],
    ) -> Self {
        let candidates = (0..instance.n_receivers())
            .map(|t| {
                let mut c = instance.candidate_servers(t);
                c.sort_by(|&a, &b| instance.gain(t, b).total_cmp(&instance.gain(t, a)).then(a.cmp(&b)));
                c
            })
            .collect();
        let mut search = Search {
            instance,
            config,
            shared,
            limits,
            candidates,
            cuts: Vec::new(),
            cut_index: vec![vec![Vec::new(); instance.n_transmitters()]; instance.n_receivers()],
            known: HashSet::new(),
            learned: Vec::new(),
            counts: CutCounts::default(),
            x: ServerAssignment::unserved(instance.n_receivers()),
            decided: vec![false; instance.n_receivers()],
            aborted: false,
            open_bound: f64::NEG_INFINITY,
            eps: 1e-9 * instance.total_revenue().max(1.0),
        };
        for cut in root_cuts {
            search.install(cut.clone());
        }
        search
    }

    fn install(&mut self, cut: CycleCut) -> bool {
        if !self.known.insert(cut.pairs().to_vec()) {
            return false;
        }
        let id = self.cuts.len();
        for &(t, b) in cut.pairs() {
            self.cut_index[t][b].push(id);
        }
        self.cuts.push(cut);
        true
    }

    fn learn(&mut self, cut: CycleCut) {
        let label = cut.provenance.label();
        if self.install(cut.clone()) {
            match cut.provenance {
                CutProvenance::TwoCycle { .. } => self.counts.two_cycle += 1,
                CutProvenance::NegativeCycle(_) => self.counts.negative_cycle += 1,
                CutProvenance::InfeasibleSubsystem => self.counts.infeasible_subsystem += 1,
            }
            debug!("learned {label} cut {cut}");
            self.learned.push(cut);
        }
    }

    /// Serving `t` by `b` would complete a known cut.
    fn blocked(&self, t: usize, b: usize) -> bool {
        self.cut_index[t][b].iter().any(|&id| {
            self.cuts[id]
                .pairs()
                .iter()
                .all(|&(u, c)| (u, c) == (t, b) || self.x.is_active(u, c))
        })
    }

    fn limit_hit(&self) -> bool {
        let nodes = self.limits.nodes.load(Ordering::Relaxed);
        nodes >= self.limits.node_limit || Instant::now() >= self.limits.deadline
    }

    fn system(&self) -> ActivatedSystem<'a> {
        feasibility::assignment_to_system(&self.x, self.instance)
    }

    /// Surviving candidates of every undecided receiver.
    fn survivors(&self, powers: &PowerVector) -> Vec<(usize, Vec<usize>)> {
        (0..self.instance.n_receivers())
            .filter(|&t| !self.decided[t])
            .map(|t| {
                let alive = self.candidates[t]
                    .iter()
                    .copied()
                    .filter(|&b| !self.blocked(t, b))
                    .filter(|&b| !self.config.lookahead || self.extension_feasible(t, b, powers))
                    .collect();
                (t, alive)
            })
            .collect()
    }

    fn extension_feasible(&self, t: usize, b: usize, powers: &PowerVector) -> bool {
        let mut sys = self.system();
        sys.constraints.push(SirConstraint::new(t, b));
        feasibility::minimal_powers_from(&sys, &self.config.feasibility, powers).is_some()
    }

    /// Screens the current assignment after `t` got a server; returns its
    /// minimal powers when it survives.
    fn screen(&mut self, t: usize, powers: &PowerVector) -> Option<PowerVector> {
        let graph = relaxation::build_for_pairs(self.instance, self.x.pairs());
        if let CycleSearch::Negative(cycle) = cycles::find_negative_cycle(&graph) {
            match cycles::cut_from_cycle(&cycle) {
                Ok(cut) => self.learn(cut),
                Err(e) => debug!("negative cycle without a usable cut: {e}"),
            }
            return None;
        }
        let sys = self.system();
        match feasibility::minimal_powers_from(&sys, &self.config.feasibility, powers) {
            Some(p) => Some(p),
            None => {
                // the new constraint goes last so the filter keeps it cheaply
                let mut constraints: Vec<SirConstraint> =
                    sys.constraints.iter().copied().filter(|c| c.receiver != t).collect();
                constraints.push(SirConstraint::new(t, self.x.server(t).expect("served")));
                let ordered = ActivatedSystem {
                    instance: self.instance,
                    constraints,
                };
                if let Ok(iis) = feasibility::minimal_infeasible_subsystem(&ordered) {
                    if let Ok(cut) = CycleCut::from_subsystem(&iis) {
                        self.learn(cut);
                    }
                }
                None
            }
        }
    }

    fn revenue(&self) -> f64 {
        self.x.revenue(self.instance)
    }

    /// Explores the subtree below the current (feasible) assignment.
    fn explore(&mut self, powers: &PowerVector, parent_bound: f64) {
        if self.limit_hit() {
            self.aborted = true;
            self.open_bound = self.open_bound.max(parent_bound);
            return;
        }
        self.limits.nodes.fetch_add(1, Ordering::Relaxed);
        let revenue = self.revenue();
        self.shared.offer(&self.x, powers, revenue);

        let survivors = self.survivors(powers);
        let bound = revenue
            + survivors
                .iter()
                .filter(|(_, alive)| !alive.is_empty())
                .map(|(t, _)| self.instance.revenue[*t])
                .sum::<f64>();
        if bound <= self.shared.objective() + self.eps {
            return;
        }
        // fail-first: fewest surviving candidates, lowest index on ties
        let Some((t, alive)) = survivors
            .into_iter()
            .filter(|(_, alive)| !alive.is_empty())
            .min_by_key(|(t, alive)| (alive.len(), *t))
        else {
            return;
        };
        self.decided[t] = true;
        for b in alive {
            self.x.set(t, Some(b));
            if let Some(p) = self.screen(t, powers) {
                self.explore(&p, bound);
            }
            self.x.set(t, None);
            if self.aborted {
                self.open_bound = self.open_bound.max(bound);
                self.decided[t] = false;
                return;
            }
        }
        self.explore(powers, bound);
        self.decided[t] = false;
        if self.aborted {
            self.open_bound = self.open_bound.max(bound);
        }
    }

    /// Children of the root in branching order, for parallel splitting.
    fn root_children(&mut self, powers: &PowerVector) -> Option<(usize, Vec<Option<usize>>, f64)> {
        let revenue = self.revenue();
        self.shared.offer(&self.x, powers, revenue);
        let survivors = self.survivors(powers);
        let bound = revenue
            + survivors
                .iter()
                .filter(|(_, alive)| !alive.is_empty())
                .map(|(t, _)| self.instance.revenue[*t])
                .sum::<f64>();
        if bound <= self.shared.objective() + self.eps {
            return None;
        }
        let (t, alive) = survivors
            .into_iter()
            .filter(|(_, alive)| !alive.is_empty())
            .min_by_key(|(t, alive)| (alive.len(), *t))?;
        let mut children: Vec<Option<usize>> = alive.into_iter().map(Some).collect();
        children.push(None);
        Some((t, children, bound))
    }
}

/// Solves the instance exactly, unless a limit stops the search first.
pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<SolveResult, ModelError> {
    let violations = model::validate(instance);
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }
    let start = Instant::now();
    let with_cuts = config.cuts == CutMode::TwoCycle;
    let root = root_bound(instance, with_cuts);

    let mut root_cuts = config.initial_cuts.clone();
    let mut counts = CutCounts::default();
    if with_cuts {
        let two = cycles::enumerate_two_cycles_with(
            &relaxation::build_graph(instance, Scope::All),
            config.parallelism,
        );
        counts.two_cycle = two.len();
        root_cuts.extend(two);
    }

    let (greedy, greedy_powers) = greedy_with(instance, &config.feasibility);
    let greedy_objective = greedy.revenue(instance);
    let shared = Shared {
        objective_bits: AtomicU64::new(greedy_objective.to_bits()),
        best: Mutex::new(Incumbent {
            assignment: greedy,
            powers: greedy_powers,
            objective: greedy_objective,
        }),
    };
    let limits = Limits {
        node_limit: config.node_limit,
        deadline: start + config.time_limit,
        nodes: AtomicU64::new(0),
    };
    let zero = PowerVector::zeros(instance.n_transmitters());

    let (aborted, open_bound, learned) = if config.parallelism.is_parallel() {
        let mut root_search = Search::new(instance, config, &shared, &limits, &root_cuts);
        limits.nodes.fetch_add(1, Ordering::Relaxed);
        match root_search.root_children(&zero) {
            None => (false, f64::NEG_INFINITY, Vec::new()),
            Some((t, children, bound)) => {
                let outcomes = par::map(config.parallelism, &children, |&child| {
                    let mut search = Search::new(instance, config, &shared, &limits, &root_cuts);
                    search.decided[t] = true;
                    let powers = match child {
                        Some(b) => {
                            search.x.set(t, Some(b));
                            search.screen(t, &zero)
                        }
                        None => Some(zero.clone()),
                    };
                    if let Some(p) = powers {
                        search.explore(&p, bound);
                    }
                    (search.aborted, search.open_bound, search.counts, search.learned)
                });
                let mut aborted = false;
                let mut open = f64::NEG_INFINITY;
                let mut learned = Vec::new();
                let mut seen = HashSet::new();
                for (a, o, c, l) in outcomes {
                    aborted |= a;
                    open = open.max(o);
                    counts.add(c);
                    learned.extend(l.into_iter().filter(|cut| seen.insert(cut.pairs().to_vec())));
                }
                (aborted, open, learned)
            }
        }
    } else {
        let mut search = Search::new(instance, config, &shared, &limits, &root_cuts);
        search.explore(&zero, root);
        counts.add(search.counts);
        (search.aborted, search.open_bound, search.learned)
    };

    let best = shared.best.into_inner().expect("incumbent lock");
    assert!(
        feasibility::check_with(
            &feasibility::assignment_to_system(&best.assignment, instance),
            &config.feasibility
        )
        .feasible,
        "incumbent must be feasible"
    );
    let proof = if aborted { Proof::TimeLimit } else { Proof::Optimal };
    let upper_bound = if aborted {
        open_bound.max(best.objective).min(root)
    } else {
        best.objective
    };
    let nodes = limits.nodes.load(Ordering::Relaxed);
    info!(
        "solved: objective {} bound {upper_bound} nodes {nodes} cuts {}",
        best.objective,
        counts.total()
    );
    Ok(SolveResult {
        best_assignment: best.assignment,
        best_powers: best.powers,
        objective: best.objective,
        root_bound: root,
        upper_bound,
        proof,
        cuts_generated: counts,
        learned_cuts: learned,
        nodes_explored: nodes,
        wall_time: start.elapsed(),
    })
}

/// JSON view of a [`SolveResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective: f64,
    pub root_bound: f64,
    pub upper_bound: f64,
    pub gap_percent: Option<f64>,
    pub proof: Proof,
    pub cuts: CutCounts,
    pub nodes: u64,
    pub wall_time_s: f64,
    pub assignment: BTreeMap<String, String>,
    pub powers: BTreeMap<String, f64>,
}

impl SolveReport {
    pub fn new(result: &SolveResult, instance: &Instance) -> Self {
        SolveReport {
            objective: result.objective,
            root_bound: result.root_bound,
            upper_bound: result.upper_bound,
            gap_percent: result.gap_percent(),
            proof: result.proof,
            cuts: result.cuts_generated,
            nodes: result.nodes_explored,
            wall_time_s: result.wall_time.as_secs_f64(),
            assignment: model::assignment_to_map(&result.best_assignment, instance),
            powers: instance
                .transmitters
                .iter()
                .cloned()
                .zip(result.best_powers.0.iter().copied())
                .collect(),
        }
    }
}
