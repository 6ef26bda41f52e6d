//! Breadth-first state-space exploration.
//!
//! Each component's local states are interned separately, so a system state
//! is a vector of small ids. Successors of a BFS layer are computed in
//! parallel; ids are then handed out sequentially in (parent, label) order,
//! which makes the graph independent of the number of workers and makes the
//! first-discovery parent path the lexicographically least shortest trace.

use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::kernel::{
    combine_offers, local_offers, Composition, KernelError, Label, Local, Offer, StepPolicy,
    SystemState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreLimits {
    pub max_states: usize,
    /// States at this depth are not expanded.
    pub max_depth: Option<usize>,
    /// States whose discovery path holds this many ticks are not expanded.
    pub max_ticks: Option<usize>,
    pub policy: StepPolicy,
    pub workers: usize,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits {
            max_states: 5_000_000,
            max_depth: None,
            max_ticks: None,
            policy: StepPolicy::default(),
            workers: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("{error} after trace [{}]", trace.join(", "))]
    Kernel {
        error: KernelError,
        trace: Vec<String>,
    },
    #[error("could not start workers: {0}")]
    Workers(String),
}

/// Per-state facts recorded during exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateInfo {
    pub depth: u32,
    pub ticks: u32,
    /// Discovering state and label, `None` for the initial state.
    pub parent: Option<(u32, u32)>,
    pub terminated: bool,
    pub divergent: bool,
    pub expanded: bool,
}

#[derive(Debug)]
pub struct StateGraph {
    /// Per component, its distinct local states.
    locals: Vec<Vec<Local>>,
    keys: Vec<Vec<u32>>,
    pub info: Vec<StateInfo>,
    pub labels: Vec<Label>,
    /// `edges[edge_start[s]..edge_start[s + 1]]` leave state `s`.
    edge_start: Vec<u32>,
    edges: Vec<(u32, u32)>,
    /// Some state was left unexpanded because of a limit.
    pub partial: bool,
    pub max_depth: u32,
    pub elapsed_ms: u128,
}

impl StateGraph {
    pub fn state_count(&self) -> usize {
        self.keys.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing `(label id, target)` pairs, in canonical label order.
    pub fn successors(&self, s: u32) -> &[(u32, u32)] {
        let i = s as usize;
        if i + 1 >= self.edge_start.len() {
            return &[];
        }
        &self.edges[self.edge_start[i] as usize..self.edge_start[i + 1] as usize]
    }

    pub fn label(&self, id: u32) -> &Label {
        &self.labels[id as usize]
    }

    pub fn state(&self, s: u32) -> SystemState {
        SystemState {
            locals: self.keys[s as usize]
                .iter()
                .enumerate()
                .map(|(c, &l)| self.locals[c][l as usize].clone())
                .collect(),
        }
    }

    /// Labels along the discovery path from the initial state to `s`.
    pub fn trace_to(&self, s: u32) -> Vec<Label> {
        let mut out = Vec::new();
        let mut cur = s;
        while let Some((p, l)) = self.info[cur as usize].parent {
            out.push(self.labels[l as usize].clone());
            cur = p;
        }
        out.reverse();
        out
    }

    /// Canonical fingerprint: the per-component local ids of every state.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.keys.hash(&mut h);
        self.edges.hash(&mut h);
        for l in &self.labels {
            l.to_string().hash(&mut h);
        }
        h.finish()
    }
}

struct Interner {
    values: Vec<Local>,
    index: HashMap<Local, u32>,
    /// Per local id, its offers once computed.
    offers: Vec<Option<LocalInfo>>,
}

struct LocalInfo {
    offers: Vec<(Label, Result<u32, KernelError>)>,
    terminated: bool,
    divergent: bool,
}

impl Interner {
    fn intern(&mut self, l: Local) -> u32 {
        if let Some(&i) = self.index.get(&l) {
            return i;
        }
        let i = self.values.len() as u32;
        self.values.push(l.clone());
        self.index.insert(l, i);
        self.offers.push(None);
        i
    }

    fn info(&self, id: u32) -> &LocalInfo {
        self.offers[id as usize].as_ref().expect("offers computed")
    }
}

pub fn explore(comp: &Composition, limits: &ExploreLimits) -> Result<StateGraph, ExploreError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(limits.workers.max(1))
        .build()
        .map_err(|e| ExploreError::Workers(e.to_string()))?;
    pool.install(|| explore_in(comp, limits))
}

/// Computes offers for every local state of `layer` not seen before. Work is
/// parallel; interning happens in (component, local id) order.
fn fill_offers(
    comp: &Composition,
    tables: &mut [Interner],
    keys: &[Vec<u32>],
    layer: &[u32],
) -> Result<(), (KernelError, u32)> {
    let mut todo: Vec<(usize, u32, u32)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for &s in layer {
        for (c, &l) in keys[s as usize].iter().enumerate() {
            if tables[c].offers[l as usize].is_none() && seen.insert((c, l)) {
                todo.push((c, l, s));
            }
        }
    }
    todo.sort_unstable();
    let results: Vec<Result<(Vec<Offer>, bool, bool), KernelError>> = {
        let tables = &*tables;
        todo.par_iter()
            .map(|&(c, l, _)| {
                let local = &tables[c].values[l as usize];
                let component = &comp.components[c];
                let terminated = crate::kernel::component::local_terminated(local, &comp.channels);
                let divergent = crate::kernel::component::local_divergent(local, &comp.channels);
                let offers = if divergent {
                    Vec::new()
                } else {
                    local_offers(local, component, &comp.channels)?
                };
                Ok((offers, terminated, divergent))
            })
            .collect()
    };
    for (&(c, l, s), r) in todo.iter().zip(results) {
        let (offers, terminated, divergent) = r.map_err(|e| (e, s))?;
        let offers = offers
            .into_iter()
            .map(|(label, next)| (label, next.map(|l| tables[c].intern(l))))
            .collect();
        tables[c].offers[l as usize] = Some(LocalInfo {
            offers,
            terminated,
            divergent,
        });
    }
    Ok(())
}

fn explore_in(comp: &Composition, limits: &ExploreLimits) -> Result<StateGraph, ExploreError> {
    let start = Instant::now();
    let n = comp.components.len();
    let mut tables: Vec<Interner> = (0..n)
        .map(|_| Interner {
            values: Vec::new(),
            index: HashMap::new(),
            offers: Vec::new(),
        })
        .collect();
    let mut states: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut keys: Vec<Vec<u32>> = Vec::new();
    let mut info: Vec<StateInfo> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    let mut label_ids: HashMap<Label, u32> = HashMap::new();
    let mut adjacency: Vec<Vec<(u32, u32)>> = Vec::new();
    let mut partial = false;

    let init = comp.initial_state().map_err(|error| ExploreError::Kernel {
        error,
        trace: Vec::new(),
    })?;
    let key: Vec<u32> = init
        .locals
        .into_iter()
        .enumerate()
        .map(|(c, l)| tables[c].intern(l))
        .collect();
    states.insert(key.clone(), 0);
    keys.push(key);
    info.push(StateInfo {
        depth: 0,
        ticks: 0,
        parent: None,
        terminated: false,
        divergent: false,
        expanded: false,
    });
    adjacency.push(Vec::new());

    let mut layer: Vec<u32> = vec![0];
    let mut depth = 0u32;
    while !layer.is_empty() {
        let expandable: Vec<u32> = layer
            .iter()
            .copied()
            .filter(|&s| {
                let i = &info[s as usize];
                let cut = limits.max_depth.is_some_and(|d| i.depth as usize >= d)
                    || limits.max_ticks.is_some_and(|t| i.ticks as usize >= t);
                !cut
            })
            .collect();
        if expandable.len() < layer.len() {
            partial = true;
        }
        fill_offers(comp, &mut tables, &keys, &expandable).map_err(|(error, s)| {
            ExploreError::Kernel {
                error,
                trace: trace_of(&info, &labels, s)
                    .iter()
                    .map(|l| l.to_string())
                    .collect(),
            }
        })?;
        let results: Vec<Result<Expansion, KernelError>> = {
            let tables = &tables;
            let keys = &keys;
            expandable
                .par_iter()
                .map(|&s| expand(comp, tables, &keys[s as usize], limits.policy))
                .collect()
        };
        let mut next = Vec::new();
        for (&s, r) in expandable.iter().zip(results) {
            let e = r.map_err(|error| ExploreError::Kernel {
                error,
                trace: trace_of(&info, &labels, s)
                    .iter()
                    .map(|l| l.to_string())
                    .collect(),
            })?;
            let si = s as usize;
            info[si].terminated = e.terminated;
            info[si].divergent = e.divergent;
            if e.divergent || e.terminated {
                info[si].expanded = true;
                continue;
            }
            if states.len() >= limits.max_states {
                partial = true;
                continue;
            }
            info[si].expanded = true;
            let mut out = Vec::with_capacity(e.succ.len());
            for (label, key) in e.succ {
                let lid = *label_ids.entry(label.clone()).or_insert_with(|| {
                    labels.push(label.clone());
                    (labels.len() - 1) as u32
                });
                let target = match states.get(&key) {
                    Some(&t) => t,
                    None => {
                        let t = keys.len() as u32;
                        states.insert(key.clone(), t);
                        keys.push(key);
                        info.push(StateInfo {
                            depth: depth + 1,
                            ticks: info[si].ticks + u32::from(label == Label::Tick),
                            parent: Some((s, lid)),
                            terminated: false,
                            divergent: false,
                            expanded: false,
                        });
                        adjacency.push(Vec::new());
                        next.push(t);
                        t
                    }
                };
                out.push((lid, target));
            }
            adjacency[si] = out;
        }
        if !next.is_empty() {
            depth += 1;
        }
        layer = next;
    }

    let mut edge_start = Vec::with_capacity(adjacency.len() + 1);
    let mut edges = Vec::new();
    for a in adjacency {
        edge_start.push(edges.len() as u32);
        edges.extend(a);
    }
    edge_start.push(edges.len() as u32);
    Ok(StateGraph {
        locals: tables.into_iter().map(|t| t.values).collect(),
        keys,
        info,
        labels,
        edge_start,
        edges,
        partial,
        max_depth: depth,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

fn trace_of(info: &[StateInfo], labels: &[Label], s: u32) -> Vec<Label> {
    let mut out = Vec::new();
    let mut cur = s;
    while let Some((p, l)) = info[cur as usize].parent {
        out.push(labels[l as usize].clone());
        cur = p;
    }
    out.reverse();
    out
}

/// Result of expanding one state.
struct Expansion {
    terminated: bool,
    divergent: bool,
    succ: Vec<(Label, Vec<u32>)>,
}

fn expand(
    comp: &Composition,
    tables: &[Interner],
    key: &[u32],
    policy: StepPolicy,
) -> Result<Expansion, KernelError> {
    let infos: Vec<&LocalInfo> = key
        .iter()
        .enumerate()
        .map(|(c, &l)| tables[c].info(l))
        .collect();
    let flags: Vec<bool> = infos.iter().map(|i| i.terminated).collect();
    let terminated = comp.terminated_from_flags(&flags);
    let divergent = infos.iter().any(|i| i.divergent);
    if divergent || terminated {
        return Ok(Expansion {
            terminated,
            divergent,
            succ: Vec::new(),
        });
    }
    let refs: Vec<&[(Label, Result<u32, KernelError>)]> =
        infos.iter().map(|i| i.offers.as_slice()).collect();
    let current: Vec<Result<u32, KernelError>> = key.iter().map(|&l| Ok(l)).collect();
    let succ = combine_offers(comp, &current, &refs, &flags, policy)?
        .into_iter()
        .map(|(l, locals)| Ok((l, locals.into_iter().collect::<Result<Vec<u32>, _>>()?)))
        .collect::<Result<Vec<_>, KernelError>>()?;
    Ok(Expansion {
        terminated,
        divergent,
        succ,
    })
}
