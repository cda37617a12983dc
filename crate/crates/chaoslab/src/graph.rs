//! The iteration graph of a Boolean map and chaos certification.
//!
//! The graph has one vertex per configuration and, from each vertex x, one
//! arc per component i leading to the configuration obtained by updating
//! component i alone. Self-loops occur exactly where the update leaves x
//! unchanged. The asynchronous iteration system of f is chaotic (regular,
//! transitive and sensitive on the orbit space) if and only if this graph is
//! strongly connected, so certification reduces to one Tarjan pass.

use serde::Serialize;

use crate::dynamics::{BoolConfig, BooleanMap, Strategy};
use crate::error::{Error, Result};

/// The labeled graph on all 2^n configurations; arc `i` out of `v` is stored
/// at `arcs[v * n + i - 1]`.
pub struct IterationGraph {
    n: usize,
    arcs: Vec<u16>,
}

impl IterationGraph {
    pub fn build(map: &BooleanMap) -> Self {
        let n = map.n();
        let size = map.config_count();
        let mut arcs = Vec::with_capacity(size * n);
        for v in 0..size as u16 {
            let x = BoolConfig::new(n, v).unwrap();
            for i in 1..=n {
                arcs.push(map.step(i, x).unwrap().value());
            }
        }
        Self { n, arcs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.arcs.len() / self.n
    }

    /// Endpoint of the arc labeled `i` (1-based) out of `v`.
    pub fn target(&self, v: u16, i: usize) -> u16 {
        self.arcs[v as usize * self.n + (i - 1)]
    }

    /// Strongly connected components in Tarjan order (reverse topological
    /// with respect to the condensation). Iterative so that 2^16 vertices
    /// cannot exhaust the call stack.
    pub fn strongly_connected_components(&self) -> Vec<Vec<u16>> {
        const UNVISITED: u32 = u32::MAX;
        let size = self.vertex_count();
        let mut index = vec![UNVISITED; size];
        let mut low = vec![0u32; size];
        let mut on_stack = vec![false; size];
        let mut stack: Vec<u16> = Vec::new();
        let mut counter = 0u32;
        let mut components = Vec::new();
        // Frames carry the vertex and the next arc label offset to explore.
        let mut frames: Vec<(u16, usize)> = Vec::new();

        for root in 0..size as u16 {
            if index[root as usize] != UNVISITED {
                continue;
            }
            index[root as usize] = counter;
            low[root as usize] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root as usize] = true;
            frames.push((root, 0));

            while let Some(&mut (v, ref mut next)) = frames.last_mut() {
                if *next < self.n {
                    let w = self.arcs[v as usize * self.n + *next];
                    *next += 1;
                    if index[w as usize] == UNVISITED {
                        index[w as usize] = counter;
                        low[w as usize] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w as usize] = true;
                        frames.push((w, 0));
                    } else if on_stack[w as usize] {
                        low[v as usize] = low[v as usize].min(index[w as usize]);
                    }
                } else {
                    frames.pop();
                    if low[v as usize] == index[v as usize] {
                        let mut component = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w as usize] = false;
                            component.push(w);
                            if w == v {
                                break;
                            }
                        }
                        component.sort_unstable();
                        components.push(component);
                    }
                    if let Some(&mut (parent, _)) = frames.last_mut() {
                        low[parent as usize] = low[parent as usize].min(low[v as usize]);
                    }
                }
            }
        }
        components
    }

    /// Shortest strategy driving x to y, found by breadth-first search.
    /// Among shortest strategies, ascending label order makes the result the
    /// lexicographically smallest one. `None` means y is unreachable.
    pub fn steer(&self, x: BoolConfig, y: BoolConfig) -> Result<Option<Strategy>> {
        self.check_dims(x)?;
        self.check_dims(y)?;
        if x == y {
            return Ok(Some(Strategy::empty()));
        }
        let size = self.vertex_count();
        let mut prev: Vec<Option<(u16, u8)>> = vec![None; size];
        let mut seen = vec![false; size];
        let mut queue = std::collections::VecDeque::new();
        seen[x.value() as usize] = true;
        queue.push_back(x.value());
        while let Some(v) = queue.pop_front() {
            for i in 1..=self.n {
                let w = self.target(v, i);
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    prev[w as usize] = Some((v, i as u8));
                    if w == y.value() {
                        let mut terms = Vec::new();
                        let mut cur = w;
                        while cur != x.value() {
                            let (p, label) = prev[cur as usize].unwrap();
                            terms.push(label);
                            cur = p;
                        }
                        terms.reverse();
                        return Ok(Some(Strategy::new(terms, self.n)?));
                    }
                    queue.push_back(w);
                }
            }
        }
        Ok(None)
    }

    /// For each walk length 0..=max_len, whether some walk of exactly that
    /// length leads from x to y. Self-loop arcs count as ordinary steps.
    pub fn walk_lengths(&self, x: BoolConfig, y: BoolConfig, max_len: usize) -> Result<Vec<bool>> {
        self.check_dims(x)?;
        self.check_dims(y)?;
        let size = self.vertex_count();
        let mut reach = vec![false; size];
        reach[x.value() as usize] = true;
        let mut hits = Vec::with_capacity(max_len + 1);
        hits.push(reach[y.value() as usize]);
        for _ in 0..max_len {
            let mut next = vec![false; size];
            for v in 0..size {
                if reach[v] {
                    for i in 1..=self.n {
                        next[self.target(v as u16, i) as usize] = true;
                    }
                }
            }
            reach = next;
            hits.push(reach[y.value() as usize]);
        }
        Ok(hits)
    }

    fn check_dims(&self, x: BoolConfig) -> Result<()> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.n(),
            });
        }
        Ok(())
    }
}

/// Evidence attached to a certificate verdict.
#[derive(Clone, Debug, Serialize)]
pub enum ChaosEvidence {
    /// The whole graph is one strongly connected component.
    StronglyConnected,
    /// A pair (from, to) with no walk from `from` to `to`, taken from a sink
    /// component of the condensation, plus the component partition sizes.
    NotStronglyConnected {
        witness_from: String,
        witness_to: String,
        component_sizes: Vec<usize>,
    },
}

/// Outcome of certifying a map: chaotic if and only if the iteration graph
/// is strongly connected.
#[derive(Clone, Debug, Serialize)]
pub struct ChaosCertificate {
    pub n: usize,
    pub chaotic: bool,
    pub scc_count: usize,
    pub fixed_points: Vec<String>,
    pub evidence: ChaosEvidence,
}

/// Certifies whether the asynchronous iteration system of `map` is chaotic.
pub fn certify_chaos(map: &BooleanMap) -> ChaosCertificate {
    let graph = IterationGraph::build(map);
    let components = graph.strongly_connected_components();
    let fixed_points = map.fixed_points().iter().map(|c| c.to_string()).collect();
    if components.len() == 1 {
        return ChaosCertificate {
            n: map.n(),
            chaotic: true,
            scc_count: 1,
            fixed_points,
            evidence: ChaosEvidence::StronglyConnected,
        };
    }

    let size = graph.vertex_count();
    let mut component_of = vec![0usize; size];
    for (c, comp) in components.iter().enumerate() {
        for &v in comp {
            component_of[v as usize] = c;
        }
    }
    // A sink component of the condensation has no outgoing arcs; nothing
    // inside it can reach anything outside it.
    let mut has_out = vec![false; components.len()];
    for v in 0..size as u16 {
        for i in 1..=graph.n() {
            let w = graph.target(v, i);
            if component_of[v as usize] != component_of[w as usize] {
                has_out[component_of[v as usize]] = true;
            }
        }
    }
    let sink = (0..components.len())
        .filter(|&c| !has_out[c])
        .min_by_key(|&c| components[c][0])
        .expect("a finite graph has a sink component");
    let from = components[sink][0];
    let to = (0..size as u16)
        .find(|v| component_of[*v as usize] != sink)
        .expect("more than one component");

    let mut sizes: Vec<usize> = components.iter().map(|c| c.len()).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let n = map.n();
    ChaosCertificate {
        n,
        chaotic: false,
        scc_count: components.len(),
        fixed_points,
        evidence: ChaosEvidence::NotStronglyConnected {
            witness_from: BoolConfig::new(n, from).unwrap().to_string(),
            witness_to: BoolConfig::new(n, to).unwrap().to_string(),
            component_sizes: sizes,
        },
    }
}

/// Walk-length reachability over a window: which exact lengths 0..=max_len
/// admit a walk from x to y, and the smallest length from which every longer
/// length in the window works. Parity obstructions (e.g. the negation map's
/// bipartite graph) show up as `all_from: None`.
#[derive(Clone, Debug, Serialize)]
pub struct MixingReport {
    pub from: String,
    pub to: String,
    pub max_len: usize,
    pub achievable: Vec<usize>,
    pub all_from: Option<usize>,
}

pub fn mixing_probe(
    graph: &IterationGraph,
    x: BoolConfig,
    y: BoolConfig,
    max_len: usize,
) -> Result<MixingReport> {
    let hits = graph.walk_lengths(x, y, max_len)?;
    let achievable: Vec<usize> = (0..=max_len).filter(|&l| hits[l]).collect();
    let mut all_from = None;
    for start in (0..=max_len).rev() {
        if !hits[start] {
            break;
        }
        all_from = Some(start);
    }
    Ok(MixingReport {
        from: x.to_string(),
        to: y.to_string(),
        max_len,
        achievable,
        all_from,
    })
}
