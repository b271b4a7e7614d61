//! Exact feasibility of an activated SIR system with power bounds.
//!
//! The activated constraints define a monotone interference map
//! `T(p)_β = max_{t served by β} δ·(μ + Σ_{b≠β} a[t][b]·p_b) / a[t][β]`.
//! The system is feasible iff `T` has a fixed point inside the power box, and
//! the least fixed point is the componentwise minimal power vector. Iterating
//! `T` from zero climbs towards it, so any iterate above `P_max` proves
//! infeasibility. Once the iteration settles (or its budget runs out) the
//! fixed point is pinned exactly by policy iteration: fix one binding receiver
//! per server, solve the resulting linear system, and re-select receivers
//! until no server's requirement grows.

use crate::error::FeasibilityError;
use crate::model::{Instance, PowerVector, ServerAssignment};

/// The inequality SIR(t, β): receiver `t` served by transmitter `server`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SirConstraint {
    pub receiver: usize,
    pub server: usize,
}

impl SirConstraint {
    pub fn new(receiver: usize, server: usize) -> Self {
        SirConstraint { receiver, server }
    }
}

/// The subsystem I(x) of SIR inequalities switched on by an assignment.
#[derive(Clone, Debug)]
pub struct ActivatedSystem<'a> {
    pub instance: &'a Instance,
    pub constraints: Vec<SirConstraint>,
}

impl<'a> ActivatedSystem<'a> {
    pub fn new(
        instance: &'a Instance,
        constraints: Vec<SirConstraint>,
    ) -> Result<Self, FeasibilityError> {
        let mut seen = vec![false; instance.n_receivers()];
        for c in &constraints {
            if c.receiver >= instance.n_receivers() || c.server >= instance.n_transmitters() {
                return Err(FeasibilityError::OutOfRange {
                    receiver: c.receiver,
                    server: c.server,
                });
            }
            if std::mem::replace(&mut seen[c.receiver], true) {
                return Err(FeasibilityError::DuplicateReceiver(c.receiver));
            }
        }
        Ok(ActivatedSystem {
            instance,
            constraints,
        })
    }

    fn subset(&self, constraints: Vec<SirConstraint>) -> ActivatedSystem<'a> {
        ActivatedSystem {
            instance: self.instance,
            constraints,
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

/// One constraint per served receiver, in receiver order.
pub fn assignment_to_system<'a>(x: &ServerAssignment, instance: &'a Instance) -> ActivatedSystem<'a> {
    ActivatedSystem {
        instance,
        constraints: x.pairs().map(|(t, b)| SirConstraint::new(t, b)).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityConfig {
    /// Per-component relative change below which the iteration is settled.
    pub rel_tol: f64,
    /// Relative slack allowed above `P_max`.
    pub bound_slack: f64,
    /// Overrides the default budget `10·|B|·ln(P_max/ε)`.
    pub max_iterations: Option<usize>,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        FeasibilityConfig {
            rel_tol: 1e-10,
            bound_slack: 1e-9,
            max_iterations: None,
        }
    }
}

impl FeasibilityConfig {
    fn budget(&self, instance: &Instance) -> usize {
        self.max_iterations.unwrap_or_else(|| {
            let ratio = (instance.p_max.max() / instance.p_min).ln().max(1.0);
            ((10 * instance.n_transmitters()) as f64 * ratio).ceil() as usize
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    pub minimal_powers: Option<PowerVector>,
    pub witness: Option<Vec<SirConstraint>>,
}

/// Feasibility verdict with minimal powers, or an irreducible infeasible
/// witness when the system has no power vector.
pub fn check(system: &ActivatedSystem<'_>) -> FeasibilityVerdict {
    check_with(system, &FeasibilityConfig::default())
}

pub fn check_with(system: &ActivatedSystem<'_>, config: &FeasibilityConfig) -> FeasibilityVerdict {
    match minimal_powers_with(system, config) {
        Some(p) => FeasibilityVerdict {
            feasible: true,
            minimal_powers: Some(p),
            witness: None,
        },
        None => FeasibilityVerdict {
            feasible: false,
            minimal_powers: None,
            witness: Some(deletion_filter(system, config)),
        },
    }
}

pub fn is_feasible(system: &ActivatedSystem<'_>) -> bool {
    minimal_powers(system).is_some()
}

/// Componentwise minimal powers of the system, `None` when infeasible.
pub fn minimal_powers(system: &ActivatedSystem<'_>) -> Option<PowerVector> {
    minimal_powers_with(system, &FeasibilityConfig::default())
}

pub fn minimal_powers_with(
    system: &ActivatedSystem<'_>,
    config: &FeasibilityConfig,
) -> Option<PowerVector> {
    let zero = PowerVector::zeros(system.instance.n_transmitters());
    minimal_powers_from(system, config, &zero)
}

/// Like [`minimal_powers_with`], iterating from `start` instead of zero.
///
/// `start` must lie below the least fixed point, e.g. the minimal powers of
/// a subsystem.
pub fn minimal_powers_from(
    system: &ActivatedSystem<'_>,
    config: &FeasibilityConfig,
    start: &PowerVector,
) -> Option<PowerVector> {
    let map = InterferenceMap::new(system)?;
    let instance = system.instance;
    let over = |p: &[f64]| {
        map.servers
            .iter()
            .any(|&b| p[b] > instance.p_max_of(b) * (1.0 + config.bound_slack))
    };
    let mut iteration = PowerIteration::from_map(map.clone(), start.0.clone(), config.rel_tol);
    let mut p = start.0.clone();
    for _ in 0..config.budget(instance) {
        let Some(next) = iteration.next() else { break };
        if over(next.as_slice()) {
            return None;
        }
        p = next.0;
        if iteration.settled {
            break;
        }
    }
    let mut fixed = map.policy_fixed_point(&p)?;
    if over(&fixed) {
        return None;
    }
    for &b in &map.servers {
        fixed[b] = fixed[b].min(instance.p_max_of(b));
    }
    Some(PowerVector(fixed))
}

/// Deletion filter over the constraints in insertion order.
pub fn minimal_infeasible_subsystem(
    system: &ActivatedSystem<'_>,
) -> Result<Vec<SirConstraint>, FeasibilityError> {
    let config = FeasibilityConfig::default();
    if minimal_powers_with(system, &config).is_some() {
        return Err(FeasibilityError::Feasible);
    }
    Ok(deletion_filter(system, &config))
}

fn deletion_filter(system: &ActivatedSystem<'_>, config: &FeasibilityConfig) -> Vec<SirConstraint> {
    if let Some(dead) = system
        .constraints
        .iter()
        .find(|c| system.instance.gain(c.receiver, c.server) <= 0.0)
    {
        return vec![*dead];
    }
    let mut kept = system.constraints.clone();
    let mut i = 0;
    while i < kept.len() {
        let mut trial = kept.clone();
        trial.remove(i);
        if minimal_powers_with(&system.subset(trial.clone()), config).is_none() {
            kept = trial;
        } else {
            i += 1;
        }
    }
    kept
}

/// The interference map of a system, grouped by server.
#[derive(Clone, Debug)]
struct InterferenceMap<'a> {
    instance: &'a Instance,
    /// Distinct servers in index order.
    servers: Vec<usize>,
    /// Receivers assigned to each entry of `servers`.
    receivers: Vec<Vec<usize>>,
}

impl<'a> InterferenceMap<'a> {
    /// `None` when some activated constraint has zero serving gain.
    fn new(system: &ActivatedSystem<'a>) -> Option<Self> {
        let instance = system.instance;
        let mut by_server: Vec<Vec<usize>> = vec![Vec::new(); instance.n_transmitters()];
        for c in &system.constraints {
            if instance.gain(c.receiver, c.server) <= 0.0 {
                return None;
            }
            by_server[c.server].push(c.receiver);
        }
        let (servers, receivers) = by_server
            .into_iter()
            .enumerate()
            .filter(|(_, r)| !r.is_empty())
            .unzip();
        Some(InterferenceMap {
            instance,
            servers,
            receivers,
        })
    }

    /// Power `server` needs for receiver `t` given the others at `p`.
    fn requirement(&self, t: usize, server: usize, p: &[f64]) -> f64 {
        let inst = self.instance;
        let interference: f64 = self
            .servers
            .iter()
            .filter(|&&b| b != server)
            .map(|&b| inst.gain(t, b) * p[b])
            .sum();
        inst.sir_threshold * (inst.noise + interference) / inst.gain(t, server)
    }

    /// The binding receiver of each server at `p` and its requirement.
    fn binding(&self, k: usize, p: &[f64]) -> (usize, f64) {
        let server = self.servers[k];
        self.receivers[k]
            .iter()
            .map(|&t| (t, self.requirement(t, server, p)))
            .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
    }

    fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; p.len()];
        for (k, &b) in self.servers.iter().enumerate() {
            next[b] = self.binding(k, p).1;
        }
        next
    }

    /// Least fixed point by policy iteration, warm-started at `start`.
    /// `None` when the map has no fixed point at all.
    fn policy_fixed_point(&self, start: &[f64]) -> Option<Vec<f64>> {
        let n = self.servers.len();
        if n == 0 {
            return Some(vec![0.0; start.len()]);
        }
        let mut policy: Vec<usize> = (0..n).map(|k| self.binding(k, start).0).collect();
        let max_rounds = 1 + self.receivers.iter().map(Vec::len).sum::<usize>() * n;
        for _ in 0..max_rounds {
            let p = self.solve_policy(&policy)?;
            let mut changed = false;
            for k in 0..n {
                let (t, need) = self.binding(k, &p);
                let b = self.servers[k];
                if t != policy[k] && need > p[b] * (1.0 + 1e-12) {
                    policy[k] = t;
                    changed = true;
                }
            }
            if !changed {
                return Some(p);
            }
        }
        self.solve_policy(&policy)
    }

    /// Solves `(I − F)·p = c` for a fixed receiver per server. `None` when
    /// `I − F` is not a nonsingular M-matrix, i.e. no nonnegative solution.
    fn solve_policy(&self, policy: &[usize]) -> Option<Vec<f64>> {
        let inst = self.instance;
        let n = self.servers.len();
        let delta = inst.sir_threshold;
        let mut m = vec![vec![0.0; n]; n];
        let mut rhs = vec![0.0; n];
        for k in 0..n {
            let t = policy[k];
            let own = inst.gain(t, self.servers[k]);
            m[k][k] = 1.0;
            for (j, &b) in self.servers.iter().enumerate() {
                if j != k {
                    m[k][j] = -delta * inst.gain(t, b) / own;
                }
            }
            rhs[k] = delta * inst.noise / own;
        }
        // Gaussian elimination without pivoting; positive pivots certify
        // the M-matrix property.
        for col in 0..n {
            let pivot = m[col][col];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return None;
            }
            for row in col + 1..n {
                let factor = m[row][col] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    m[row][j] -= factor * m[col][j];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
        let mut sol = vec![0.0; n];
        for row in (0..n).rev() {
            let tail: f64 = (row + 1..n).map(|j| m[row][j] * sol[j]).sum();
            sol[row] = (rhs[row] - tail) / m[row][row];
            if !(sol[row] >= 0.0) || !sol[row].is_finite() {
                return None;
            }
        }
        let mut p = vec![0.0; inst.n_transmitters()];
        for (k, &b) in self.servers.iter().enumerate() {
            p[b] = sol[k];
        }
        Some(p)
    }
}

/// Successive iterates `T(0), T(T(0)), ...` of the interference map.
///
/// Yields nothing for systems containing a zero-gain constraint, and stops
/// once a diverging iterate overflows.
pub struct PowerIteration<'a> {
    map: Option<InterferenceMap<'a>>,
    current: Vec<f64>,
    rel_tol: f64,
    /// Set once the last step changed no component by more than `rel_tol`.
    pub settled: bool,
}

impl<'a> PowerIteration<'a> {
    pub fn new(system: &ActivatedSystem<'a>, rel_tol: f64) -> Self {
        PowerIteration {
            map: InterferenceMap::new(system),
            current: vec![0.0; system.instance.n_transmitters()],
            rel_tol,
            settled: false,
        }
    }

    fn from_map(map: InterferenceMap<'a>, start: Vec<f64>, rel_tol: f64) -> Self {
        PowerIteration {
            map: Some(map),
            current: start,
            rel_tol,
            settled: false,
        }
    }
}

impl Iterator for PowerIteration<'_> {
    type Item = PowerVector;

    fn next(&mut self) -> Option<PowerVector> {
        let map = self.map.as_ref()?;
        let next = map.apply(&self.current);
        if next.iter().any(|v| !v.is_finite()) {
            self.map = None;
            return None;
        }
        debug_assert!(next
            .iter()
            .zip(&self.current)
            .all(|(n, c)| *n >= *c * (1.0 - 1e-12)));
        self.settled = next
            .iter()
            .zip(&self.current)
            .all(|(n, c)| (n - c).abs() <= self.rel_tol * n.abs());
        self.current = next;
        Some(PowerVector(self.current.clone()))
    }
}
