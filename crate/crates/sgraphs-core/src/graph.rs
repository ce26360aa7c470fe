//! Metric graphs with directed bond phases, and the conjugate-pair
//! construction that realizes an antiunitary symmetry squaring to -1.
//!
//! A graph is a set of bonds (i, j, length, phase) joined at vertices with
//! Neumann conditions. The phase is the line integral of a vector potential
//! along the bond, stored once per bond in the canonical i -> j direction;
//! traversal in the opposite direction contributes the negated phase.
//!
//! The pair construction duplicates a base graph into two subgraphs whose
//! secular matrices are complex conjugates of each other, then joins them by
//! one or two pairs of equal-length cross bonds. A twist `delta_phi` sits on
//! exactly one bond of each pair; at `delta_phi = pi` the combined secular
//! matrix acquires quaternion structure and every level is a Kramers doublet.

use rand::Rng;
use thiserror::Error;

use crate::seeding::stream_rng;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("bond {index}: endpoint {vertex} out of range (vertex count {vertex_count})")]
    EndpointOutOfRange { index: usize, vertex: usize, vertex_count: usize },
    #[error("bond {index}: self-loop at vertex {vertex} is not supported")]
    SelfLoop { index: usize, vertex: usize },
    #[error("bond {index}: length must be positive, got {length}")]
    NonPositiveLength { index: usize, length: f64 },
    #[error("graph is not connected")]
    Disconnected,
    #[error("cannot normalize a graph with zero total length")]
    ZeroTotalLength,
    #[error("cubic graph needs an even vertex count of at least 4, got {0}")]
    InfeasibleDegreeSequence(usize),
    #[error("length range ({0}, {1}) is not positive and increasing")]
    BadLengthRange(f64, f64),
    #[error("pair spec needs one or two cross-bond pairs, got {0}")]
    BadPairCount(usize),
    #[error("cross pair endpoints ({0}, {1}) must be distinct base vertices")]
    BadPairEndpoints(usize, usize),
}

/// Wrap a phase into the canonical interval (-pi, pi].
pub fn wrap_phase(phi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = phi.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// One bond of a metric graph. `phase` is directed i -> j; the reverse
/// direction sees the negated phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub length: f64,
    pub phase: f64,
}

impl Bond {
    pub fn new(i: usize, j: usize, length: f64, phase: f64) -> Bond {
        Bond { i, j, length, phase: wrap_phase(phase) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    vertex_count: usize,
    bonds: Vec<Bond>,
    labels: Vec<Option<String>>,
}

impl Graph {
    pub fn new(vertex_count: usize, bonds: Vec<Bond>) -> Result<Graph, GraphError> {
        for (index, b) in bonds.iter().enumerate() {
            if b.i >= vertex_count {
                return Err(GraphError::EndpointOutOfRange { index, vertex: b.i, vertex_count });
            }
            if b.j >= vertex_count {
                return Err(GraphError::EndpointOutOfRange { index, vertex: b.j, vertex_count });
            }
            if b.i == b.j {
                return Err(GraphError::SelfLoop { index, vertex: b.i });
            }
            if !(b.length > 0.0) {
                return Err(GraphError::NonPositiveLength { index, length: b.length });
            }
        }
        let bonds: Vec<Bond> = bonds
            .into_iter()
            .map(|b| Bond { phase: wrap_phase(b.phase), ..b })
            .collect();
        Ok(Graph { vertex_count, bonds, labels: vec![None; vertex_count] })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn label(&self, vertex: usize) -> Option<&str> {
        self.labels.get(vertex).and_then(|l| l.as_deref())
    }

    pub fn set_label(&mut self, vertex: usize, label: &str) {
        if vertex < self.vertex_count {
            self.labels[vertex] = Some(label.to_string());
        }
    }

    /// Sum of all bond lengths (the graph's total optical length).
    pub fn total_length(&self) -> f64 {
        self.bonds.iter().map(|b| b.length).sum()
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); self.vertex_count];
        for b in &self.bonds {
            adj[b.i].push(b.j);
            adj[b.j].push(b.i);
        }
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn require_connected(&self) -> Result<(), GraphError> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(GraphError::Disconnected)
        }
    }

    /// Rescale all lengths so the total length becomes pi, which gives the
    /// spectrum unit mean density in k. Phases are fixed quantities and are
    /// not rescaled.
    pub fn normalize_to_unit_density(&self) -> Result<Graph, GraphError> {
        let total = self.total_length();
        if !(total > 0.0) {
            return Err(GraphError::ZeroTotalLength);
        }
        let factor = std::f64::consts::PI / total;
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond { length: b.length * factor, ..b.clone() })
            .collect();
        Ok(Graph { vertex_count: self.vertex_count, bonds, labels: self.labels.clone() })
    }

    /// Multiply every bond length by (1 + sigma_rel * g) with g standard
    /// normal; models construction tolerances that split Kramers doublets.
    pub fn with_length_perturbation(&self, sigma_rel: f64, seed: u64) -> Graph {
        let mut rng = stream_rng(seed, 0x70657274);
        let bonds = self
            .bonds
            .iter()
            .map(|b| {
                let g: f64 = rng.sample(rand_distr::StandardNormal);
                Bond { length: b.length * (1.0 + sigma_rel * g).max(1e-6), ..b.clone() }
            })
            .collect();
        Graph { vertex_count: self.vertex_count, bonds, labels: self.labels.clone() }
    }
}

/// Bond-phase policy for randomly generated subgraphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhasePolicy {
    /// All phases zero; time-reversal invariant (GOE-like statistics).
    None,
    /// Phases uniform in (-pi, pi]; breaks time reversal (GUE-like).
    RandomUniform,
}

/// Connected 3-regular graph with random incommensurate bond lengths.
///
/// Lengths are drawn uniformly from `length_range` and then jittered by a
/// relative 1e-3 uniform factor so no two are rationally related.
pub fn random_cubic(
    vertex_count: usize,
    length_range: (f64, f64),
    phase_policy: PhasePolicy,
    seed: u64,
) -> Result<Graph, GraphError> {
    if vertex_count < 4 || vertex_count % 2 != 0 {
        return Err(GraphError::InfeasibleDegreeSequence(vertex_count));
    }
    let (lo, hi) = length_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(GraphError::BadLengthRange(lo, hi));
    }
    let mut rng = stream_rng(seed, 0x63756269);

    // configuration model with rejection: keep sampling perfect matchings of
    // the 3V stubs until the result is simple and connected
    let edges = loop {
        let mut stubs: Vec<usize> = (0..vertex_count).flat_map(|v| [v, v, v]).collect();
        for i in (1..stubs.len()).rev() {
            let j = rng.gen_range(0..=i);
            stubs.swap(i, j);
        }
        let pairs: Vec<(usize, usize)> = stubs.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        let simple = pairs.iter().all(|&(a, b)| a != b)
            && {
                let mut seen = std::collections::HashSet::new();
                pairs.iter().all(|&(a, b)| seen.insert((a.min(b), a.max(b))))
            };
        if !simple {
            continue;
        }
        let probe = Graph::new(
            vertex_count,
            pairs.iter().map(|&(a, b)| Bond::new(a, b, 1.0, 0.0)).collect(),
        )
        .expect("stub pairing produced valid bonds");
        if probe.is_connected() {
            break pairs;
        }
    };

    // Stratified lengths: one per slot of the range, jittered within a
    // third of the slot and randomly assigned to edges. Independent uniform
    // draws from a narrow range collide at the 1e-3 level for dozens of
    // bonds, leaving near-equal pairs whose beating shows up as spurious
    // near-degeneracies; stratification keeps all lengths pairwise separated.
    let n_edges = edges.len();
    let mut slots: Vec<usize> = (0..n_edges).collect();
    for i in (1..slots.len()).rev() {
        let j = rng.gen_range(0..=i);
        slots.swap(i, j);
    }
    let slot_width = (hi - lo) / n_edges as f64;
    let bonds = edges
        .into_iter()
        .zip(slots)
        .map(|((a, b), slot)| {
            let jitter: f64 = rng.gen_range(-1.0 / 3.0..1.0 / 3.0);
            let length = if hi > lo {
                lo + slot_width * (slot as f64 + 0.5 + jitter)
            } else {
                lo * (1.0 + 1e-3 * jitter)
            };
            let phase = match phase_policy {
                PhasePolicy::None => 0.0,
                PhasePolicy::RandomUniform => {
                    let u: f64 = rng.gen_range(-1.0..1.0);
                    wrap_phase(u * std::f64::consts::PI)
                }
            };
            Bond::new(a, b, length, phase)
        })
        .collect();
    Graph::new(vertex_count, bonds)
}

/// One pair of cross bonds joining base vertex `from` to the conjugate copy
/// of `to` and vice versa, both with the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossPair {
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

/// Seeded random pair-graph blueprint: a cubic base with uniform phases, one
/// or two cross pairs attached at distinct random vertices, cross lengths
/// near the mean bond length with enough jitter to stay incommensurate with
/// everything else.
pub fn random_pair_spec(
    base_vertices: usize,
    length_range: (f64, f64),
    pairs: usize,
    delta_phi: f64,
    seed: u64,
) -> Result<SymplecticPairSpec, GraphError> {
    if pairs == 0 || pairs > 2 {
        return Err(GraphError::BadPairCount(pairs));
    }
    let base = random_cubic(base_vertices, length_range, PhasePolicy::RandomUniform, seed)?;
    let mut rng = stream_rng(seed, 0x70616972);
    let mut remaining: Vec<usize> = (0..base_vertices).collect();
    let mut cross = Vec::new();
    for p in 0..pairs {
        let from = remaining.swap_remove(rng.gen_range(0..remaining.len()));
        let to = remaining.swap_remove(rng.gen_range(0..remaining.len()));
        // cross lengths sit in bands just above the base range so they stay
        // incommensurate with every base bond and with each other
        let band = 1.05 + 0.12 * p as f64;
        let length = length_range.1 * (band + rng.gen_range(0.0..0.1));
        cross.push(CrossPair { from, to, length });
    }
    let spec = SymplecticPairSpec { base, pairs: cross, delta_phi };
    spec.validate()?;
    Ok(spec)
}

/// Blueprint for a conjugate-pair graph: a base subgraph, one or two cross
/// pairs, and the twist applied to one bond of each pair.
#[derive(Debug, Clone)]
pub struct SymplecticPairSpec {
    pub base: Graph,
    pub pairs: Vec<CrossPair>,
    pub delta_phi: f64,
}

impl SymplecticPairSpec {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.pairs.is_empty() || self.pairs.len() > 2 {
            return Err(GraphError::BadPairCount(self.pairs.len()));
        }
        for p in &self.pairs {
            if p.from == p.to
                || p.from >= self.base.vertex_count()
                || p.to >= self.base.vertex_count()
            {
                return Err(GraphError::BadPairEndpoints(p.from, p.to));
            }
            if !(p.length > 0.0) {
                return Err(GraphError::NonPositiveLength { index: 0, length: p.length });
            }
        }
        Ok(())
    }
}

/// Build the 2n-vertex pair graph: vertices 0..n carry the base, n..2n a copy
/// with every phase negated, plus the cross bonds. For a pair (a, b) the bond
/// a -> conj(b) carries no extra phase and b -> conj(a) carries `delta_phi`.
pub fn build_symplectic_pair(spec: &SymplecticPairSpec) -> Result<Graph, GraphError> {
    spec.validate()?;
    let n = spec.base.vertex_count();
    let mut bonds: Vec<Bond> = Vec::with_capacity(2 * spec.base.bonds().len() + 2 * spec.pairs.len());
    for b in spec.base.bonds() {
        bonds.push(b.clone());
    }
    for b in spec.base.bonds() {
        bonds.push(Bond::new(b.i + n, b.j + n, b.length, -b.phase));
    }
    for p in &spec.pairs {
        bonds.push(Bond::new(p.from, p.to + n, p.length, 0.0));
        bonds.push(Bond::new(p.to, p.from + n, p.length, spec.delta_phi));
    }
    let mut g = Graph::new(2 * n, bonds)?;
    for v in 0..n {
        g.set_label(v, "subgraph-1");
        g.set_label(v + n, "subgraph-2");
    }
    Ok(g)
}

/// Pair graph with the twist bond of the first cross pair lengthened by
/// `delta_l` (a trombone-style phase shifter): the effective twist becomes
/// delta_phi + k * delta_l and is therefore frequency dependent.
pub fn build_pair_with_length_offset(
    spec: &SymplecticPairSpec,
    delta_l: f64,
) -> Result<Graph, GraphError> {
    spec.validate()?;
    let n = spec.base.vertex_count();
    let mut bonds: Vec<Bond> = Vec::new();
    for b in spec.base.bonds() {
        bonds.push(b.clone());
    }
    for b in spec.base.bonds() {
        bonds.push(Bond::new(b.i + n, b.j + n, b.length, -b.phase));
    }
    for (idx, p) in spec.pairs.iter().enumerate() {
        let offset = if idx == 0 { delta_l } else { 0.0 };
        bonds.push(Bond::new(p.from, p.to + n, p.length, 0.0));
        bonds.push(Bond::new(p.to, p.from + n, p.length + offset, spec.delta_phi));
    }
    Graph::new(2 * n, bonds)
}

/// Mirror image of a vertex under the pair construction: v <-> v + n.
pub fn conjugate_vertex(pair_graph: &Graph, v: usize) -> usize {
    let n = pair_graph.vertex_count() / 2;
    if v < n {
        v + n
    } else {
        v - n
    }
}
