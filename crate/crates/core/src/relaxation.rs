//! Pairwise SIR relaxation in the dB domain.
//!
//! Each SIR inequality of receiver `t` served by `β` is replaced by one
//! inequality per interferer `b`, `a[t][β]·p_β ≥ δ·a[t][b]·p_b`, which in dB
//! (`q = 10·log₁₀ p`) reads `q_b − q_β ≤ w` with integer
//! `w = ⌈10·(log₁₀ a[t][β] − log₁₀ a[t][b] − log₁₀ δ)⌉`.
//!
//! Arc convention: an arc `u → v` of weight `l` encodes `π_v − π_u ≤ l`, so
//! the constraint above becomes the arc `β → b`.
//!
//! Noise is a fictitious transmitter `ν` whose dB power is pinned to
//! `n = ⌈10·log₁₀ μ⌉` with respect to the reference node `ρ`; its gain towards
//! every receiver is then `μ / 10^(n/10)` so that gain times power is exactly
//! `μ`. Power bounds are arcs to and from `ρ`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::model::{Instance, ServerAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Transmitter(usize),
    Noise,
    Reference,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Transmitter(b) => write!(f, "b{b}"),
            Node::Noise => f.write_str("nu"),
            Node::Reference => f.write_str("rho"),
        }
    }
}

/// Who interferes in a pairwise constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Interferer {
    Transmitter(usize),
    Noise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundSide {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArcKind {
    /// `q_interferer − q_server ≤ w` contributed by receiver `receiver`.
    Interference {
        receiver: usize,
        server: usize,
        interferer: Interferer,
    },
    Bound {
        transmitter: usize,
        side: BoundSide,
    },
    NoisePin,
    /// Arcs of graphs not built from an instance.
    Plain,
}

impl fmt::Display for ArcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArcKind::Interference {
                receiver,
                server,
                interferer,
            } => {
                let by = match interferer {
                    Interferer::Transmitter(b) => format!("b{b}"),
                    Interferer::Noise => "nu".into(),
                };
                write!(f, "interference(t{receiver},b{server},{by})")
            }
            ArcKind::Bound { transmitter, side } => match side {
                BoundSide::Upper => write!(f, "upper(b{transmitter})"),
                BoundSide::Lower => write!(f, "lower(b{transmitter})"),
            },
            ArcKind::NoisePin => f.write_str("noise-pin"),
            ArcKind::Plain => f.write_str("plain"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub weight: i64,
    pub kind: ArcKind,
}

/// Result of [`pairwise_weight`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairWeight {
    Weight(i64),
    /// The interferer is inaudible at the receiver: no constraint.
    Inaudible,
    /// Zero serving gain: the pair can never be activated.
    Never,
}

/// dB value the noise node is pinned to.
pub fn noise_pin(instance: &Instance) -> i64 {
    (10.0 * instance.noise.log10()).ceil() as i64
}

/// Lower power bound used in the dB domain.
///
/// Kept at most `μ·min(1, δ)`: an idle transmitter lifted to this floor then
/// never breaks a pairwise constraint that the exact system satisfies with
/// the transmitter switched off.
pub fn relaxation_floor(instance: &Instance) -> f64 {
    instance
        .p_min
        .min(instance.noise * instance.sir_threshold.min(1.0))
}

/// `⌈10·(log₁₀ a[t][β] − log₁₀ a[t][b] − log₁₀ δ)⌉`.
pub fn pairwise_weight(instance: &Instance, t: usize, server: usize, interferer: Interferer) -> PairWeight {
    let own = instance.gain(t, server);
    if own <= 0.0 {
        return PairWeight::Never;
    }
    let log_delta = instance.sir_threshold.log10();
    let value = match interferer {
        Interferer::Transmitter(b) => {
            let other = instance.gain(t, b);
            if other <= 0.0 {
                return PairWeight::Inaudible;
            }
            10.0 * (own.log10() - other.log10() - log_delta)
        }
        Interferer::Noise => {
            10.0 * (own.log10() - instance.noise.log10() - log_delta) + noise_pin(instance) as f64
        }
    };
    PairWeight::Weight(value.ceil() as i64)
}

/// Which SIR constraints contribute interference arcs.
#[derive(Clone, Copy, Debug)]
pub enum Scope<'a> {
    /// Every pair with positive serving gain; parallel arcs collapsed to the
    /// lightest one.
    All,
    /// Only the activated pairs of an assignment.
    Assignment(&'a ServerAssignment),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceGraph {
    n_transmitters: usize,
    arcs: Vec<Arc>,
    /// Pairs requested by the scope that can never be served.
    unsatisfiable: Vec<(usize, usize)>,
    /// For each `(server, head)` node pair, every `(receiver, weight)`
    /// contributing an interference arc, receivers ascending.
    provenance: BTreeMap<(usize, usize), Vec<(usize, i64)>>,
}

impl DifferenceGraph {
    /// Graph over `n_transmitters` transmitter nodes plus `ν` and `ρ` with
    /// caller-provided arcs.
    pub fn from_arcs(n_transmitters: usize, arcs: Vec<Arc>) -> Self {
        let n = n_transmitters + 2;
        assert!(arcs.iter().all(|a| a.tail < n && a.head < n), "arc endpoint out of range");
        DifferenceGraph {
            n_transmitters,
            arcs,
            unsatisfiable: Vec::new(),
            provenance: BTreeMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n_transmitters + 2
    }

    pub fn n_transmitters(&self) -> usize {
        self.n_transmitters
    }

    pub fn noise_node(&self) -> usize {
        self.n_transmitters
    }

    pub fn reference_node(&self) -> usize {
        self.n_transmitters + 1
    }

    pub fn node(&self, index: usize) -> Node {
        match index {
            i if i < self.n_transmitters => Node::Transmitter(i),
            i if i == self.n_transmitters => Node::Noise,
            i if i == self.n_transmitters + 1 => Node::Reference,
            _ => panic!("node index {index} out of range"),
        }
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn unsatisfiable(&self) -> &[(usize, usize)] {
        &self.unsatisfiable
    }

    /// Every receiver weight behind the `server → head` interference arc.
    pub fn provenance(&self, server: usize, head: usize) -> &[(usize, i64)] {
        self.provenance
            .get(&(server, head))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn provenance_map(&self) -> &BTreeMap<(usize, usize), Vec<(usize, i64)>> {
        &self.provenance
    }

    /// One line per arc: `tail head weight provenance`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for arc in &self.arcs {
            writeln!(
                out,
                "{} {} {} {}",
                self.node(arc.tail),
                self.node(arc.head),
                arc.weight,
                arc.kind
            )
            .unwrap();
        }
        out
    }
}

fn interferers(instance: &Instance, server: usize) -> impl Iterator<Item = Interferer> + '_ {
    (0..instance.n_transmitters())
        .filter(move |&b| b != server)
        .map(Interferer::Transmitter)
        .chain(std::iter::once(Interferer::Noise))
}

fn head_of(instance: &Instance, interferer: Interferer) -> usize {
    match interferer {
        Interferer::Transmitter(b) => b,
        Interferer::Noise => instance.n_transmitters(),
    }
}

fn frame_arcs(instance: &Instance) -> Vec<Arc> {
    let nb = instance.n_transmitters();
    let (nu, rho) = (nb, nb + 1);
    let pin = noise_pin(instance);
    let lower = (-10.0 * relaxation_floor(instance).log10()).ceil() as i64;
    let mut arcs = vec![
        Arc {
            tail: rho,
            head: nu,
            weight: pin,
            kind: ArcKind::NoisePin,
        },
        Arc {
            tail: nu,
            head: rho,
            weight: -pin,
            kind: ArcKind::NoisePin,
        },
    ];
    for b in 0..nb {
        let upper = (10.0 * instance.p_max_of(b).log10()).ceil() as i64;
        arcs.push(Arc {
            tail: rho,
            head: b,
            weight: upper,
            kind: ArcKind::Bound {
                transmitter: b,
                side: BoundSide::Upper,
            },
        });
        arcs.push(Arc {
            tail: b,
            head: rho,
            weight: lower,
            kind: ArcKind::Bound {
                transmitter: b,
                side: BoundSide::Lower,
            },
        });
    }
    arcs
}

/// Builds the difference graph over the requested scope.
pub fn build_graph(instance: &Instance, scope: Scope<'_>) -> DifferenceGraph {
    match scope {
        Scope::All => build_full(instance),
        Scope::Assignment(x) => build_for_pairs(instance, x.pairs()),
    }
}

/// Graph restricted to the given activated `(receiver, server)` pairs, one
/// arc per pair and interferer.
pub fn build_for_pairs(
    instance: &Instance,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> DifferenceGraph {
    let mut arcs = frame_arcs(instance);
    let mut unsatisfiable = Vec::new();
    let mut provenance: BTreeMap<(usize, usize), Vec<(usize, i64)>> = BTreeMap::new();
    for (t, server) in pairs {
        for interferer in interferers(instance, server) {
            match pairwise_weight(instance, t, server, interferer) {
                PairWeight::Never => {
                    unsatisfiable.push((t, server));
                    break;
                }
                PairWeight::Inaudible => {}
                PairWeight::Weight(weight) => {
                    let head = head_of(instance, interferer);
                    provenance.entry((server, head)).or_default().push((t, weight));
                    arcs.push(Arc {
                        tail: server,
                        head,
                        weight,
                        kind: ArcKind::Interference {
                            receiver: t,
                            server,
                            interferer,
                        },
                    });
                }
            }
        }
    }
    for list in provenance.values_mut() {
        list.sort();
    }
    DifferenceGraph {
        n_transmitters: instance.n_transmitters(),
        arcs,
        unsatisfiable,
        provenance,
    }
}

fn build_full(instance: &Instance) -> DifferenceGraph {
    let mut arcs = frame_arcs(instance);
    let mut unsatisfiable = Vec::new();
    let mut provenance: BTreeMap<(usize, usize), Vec<(usize, i64)>> = BTreeMap::new();
    // lightest (weight, receiver) per node pair, first receiver on ties
    let mut lightest: BTreeMap<(usize, usize), (i64, usize, Interferer)> = BTreeMap::new();
    for t in 0..instance.n_receivers() {
        for server in 0..instance.n_transmitters() {
            if instance.gain(t, server) <= 0.0 {
                unsatisfiable.push((t, server));
                continue;
            }
            for interferer in interferers(instance, server) {
                if let PairWeight::Weight(weight) = pairwise_weight(instance, t, server, interferer) {
                    let head = head_of(instance, interferer);
                    provenance.entry((server, head)).or_default().push((t, weight));
                    let entry = lightest.entry((server, head)).or_insert((weight, t, interferer));
                    if weight < entry.0 {
                        *entry = (weight, t, interferer);
                    }
                }
            }
        }
    }
    for ((server, head), (weight, receiver, interferer)) in lightest {
        arcs.push(Arc {
            tail: server,
            head,
            weight,
            kind: ArcKind::Interference {
                receiver,
                server,
                interferer,
            },
        });
    }
    DifferenceGraph {
        n_transmitters: instance.n_transmitters(),
        arcs,
        unsatisfiable,
        provenance,
    }
}
