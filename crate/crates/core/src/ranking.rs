//! Ordinal ranking of the DAs of one group from criteria estimates.
//!
//! An ELECTRE I style outranking relation is built from concordance and
//! discordance indices; the relation is condensed into strongly connected
//! components and peeled into layers. The layer index is the priority.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DaId, NodeId};

string_id!(CriterionId);

/// Tolerance for threshold comparisons, so that rescaled inputs land on the
/// same side of `p` and `q`.
const THRESHOLD_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub id: CriterionId,
    pub name: String,
    /// Sign is the direction (negative: smaller is better), magnitude the importance.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateTable {
    pub group: NodeId,
    pub alternatives: Vec<DaId>,
    pub criteria: Vec<CriterionSpec>,
    pub values: BTreeMap<(DaId, CriterionId), f64>,
}

impl EstimateTable {
    pub fn new(group: impl Into<NodeId>, alternatives: Vec<DaId>, criteria: Vec<CriterionSpec>) -> Self {
        EstimateTable {
            group: group.into(),
            alternatives,
            criteria,
            values: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, da: impl Into<DaId>, criterion: impl Into<CriterionId>, value: f64) -> &mut Self {
        self.values.insert((da.into(), criterion.into()), value);
        self
    }

    pub fn value(&self, da: &DaId, criterion: &CriterionId) -> Option<f64> {
        self.values.get(&(da.clone(), criterion.clone())).copied()
    }

    /// Criteria with a value for every alternative of the group.
    pub fn active_criteria(&self) -> Vec<&CriterionSpec> {
        self.criteria
            .iter()
            .filter(|c| self.alternatives.iter().all(|a| self.value(a, &c.id).is_some()))
            .collect()
    }

    fn checked_active(&self) -> Result<Vec<&CriterionSpec>> {
        let active = self.active_criteria();
        if active.is_empty() {
            return Err(Error::NoActiveCriteria(self.group.clone()));
        }
        for c in &active {
            if c.weight == 0.0 || !c.weight.is_finite() {
                return Err(Error::InvalidInput(format!("criterion {} has weight {}", c.id, c.weight)));
            }
            for a in &self.alternatives {
                let v = self.value(a, &c.id).unwrap();
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("estimate of {a} on {} is not finite", c.id)));
                }
            }
        }
        Ok(active)
    }

    fn check_member(&self, da: &DaId) -> Result<()> {
        if self.alternatives.contains(da) {
            Ok(())
        } else {
            Err(Error::UnknownDa(da.clone()))
        }
    }

    /// Direction-adjusted advantage of `a` over `b` on one criterion.
    fn advantage(&self, c: &CriterionSpec, a: &DaId, b: &DaId) -> f64 {
        let diff = self.value(a, &c.id).unwrap() - self.value(b, &c.id).unwrap();
        if c.weight > 0.0 {
            diff
        } else {
            -diff
        }
    }

    fn range(&self, c: &CriterionSpec) -> f64 {
        let (lo, hi) = self
            .alternatives
            .iter()
            .map(|a| self.value(a, &c.id).unwrap())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum concordance `p` in (0, 1].
    pub concordance_min: f64,
    /// Maximum discordance `q` in [0, 1]; 1 disables the discordance test.
    pub discordance_max: f64,
}

impl Thresholds {
    pub fn new(concordance_min: f64, discordance_max: f64) -> Result<Self> {
        if !(concordance_min > 0.0 && concordance_min <= 1.0) {
            return Err(Error::InvalidInput(format!("concordance threshold {concordance_min} not in (0,1]")));
        }
        if !(0.0..=1.0).contains(&discordance_max) {
            return Err(Error::InvalidInput(format!("discordance threshold {discordance_max} not in [0,1]")));
        }
        Ok(Thresholds {
            concordance_min,
            discordance_max,
        })
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            concordance_min: 0.5,
            discordance_max: 1.0,
        }
    }
}

/// Share of active-criteria weight on which `a` is at least as good as `b`.
pub fn concordance(a: &DaId, b: &DaId, table: &EstimateTable) -> Result<f64> {
    let active = table.checked_active()?;
    table.check_member(a)?;
    table.check_member(b)?;
    let (agree, total) = active.iter().fold((0.0, 0.0), |(agree, total), c| {
        let w = c.weight.abs();
        let agree = if table.advantage(c, a, b) >= 0.0 { agree + w } else { agree };
        (agree, total + w)
    });
    Ok(agree / total)
}

/// Largest margin by which `b` beats `a`, relative to that criterion's range
/// over the group. Zero-range criteria never contribute.
pub fn discordance(a: &DaId, b: &DaId, table: &EstimateTable) -> Result<f64> {
    let active = table.checked_active()?;
    table.check_member(a)?;
    table.check_member(b)?;
    let d = active
        .iter()
        .filter_map(|c| {
            let margin = table.advantage(c, b, a);
            let range = table.range(c);
            (margin > 0.0 && range > 0.0).then(|| margin / range)
        })
        .fold(0.0, f64::max);
    Ok(d.min(1.0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutrankingGraph {
    pub vertices: Vec<DaId>,
    /// `(a, b)`: `a` outranks `b`.
    pub arcs: BTreeSet<(DaId, DaId)>,
}

impl OutrankingGraph {
    pub fn new(vertices: Vec<DaId>) -> Self {
        OutrankingGraph {
            vertices,
            arcs: BTreeSet::new(),
        }
    }

    pub fn with_arcs<'a>(vertices: &[&str], arcs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        OutrankingGraph {
            vertices: vertices.iter().map(|v| DaId::from(*v)).collect(),
            arcs: arcs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    pub fn has_arc(&self, a: &str, b: &str) -> bool {
        self.arcs.contains(&(a.into(), b.into()))
    }

    /// Uncapped 1-based layer of every vertex (aligned with `vertices`):
    /// condense strongly connected components, then repeatedly take the
    /// components with no incoming arc from what remains.
    pub fn layers(&self) -> Vec<usize> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.vertices.len(), self.arcs.len());
        let ids: Vec<_> = self.vertices.iter().map(|_| g.add_node(())).collect();
        let pos: BTreeMap<&DaId, usize> = self.vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
        for (a, b) in &self.arcs {
            if let (Some(&i), Some(&j)) = (pos.get(a), pos.get(b)) {
                if i != j {
                    g.add_edge(ids[i], ids[j], ());
                }
            }
        }
        let sccs = tarjan_scc(&g);
        let mut comp = vec![0usize; self.vertices.len()];
        for (ci, scc) in sccs.iter().enumerate() {
            for n in scc {
                comp[n.index()] = ci;
            }
        }
        let mut incoming: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); sccs.len()];
        for e in g.raw_edges() {
            let (s, t) = (comp[e.source().index()], comp[e.target().index()]);
            if s != t {
                incoming[t].insert(s);
            }
        }
        let mut comp_layer = vec![0usize; sccs.len()];
        let mut remaining: BTreeSet<usize> = (0..sccs.len()).collect();
        let mut layer = 1;
        while !remaining.is_empty() {
            let sources: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|c| incoming[*c].iter().all(|s| !remaining.contains(s)))
                .collect();
            for c in &sources {
                comp_layer[*c] = layer;
                remaining.remove(c);
            }
            layer += 1;
        }
        comp.iter().map(|&c| comp_layer[c]).collect()
    }
}

/// Arc `(a, b)` iff `concordance(a, b) >= p` and `discordance(a, b) <= q`.
pub fn outranking_graph(table: &EstimateTable, t: &Thresholds) -> Result<OutrankingGraph> {
    let mut graph = OutrankingGraph::new(table.alternatives.clone());
    if table.alternatives.len() < 2 {
        return Ok(graph);
    }
    for a in &table.alternatives {
        for b in &table.alternatives {
            if a == b {
                continue;
            }
            let c = concordance(a, b, table)?;
            let d = discordance(a, b, table)?;
            if c >= t.concordance_min - THRESHOLD_EPS && d <= t.discordance_max + THRESHOLD_EPS {
                graph.arcs.insert((a.clone(), b.clone()));
            }
        }
    }
    Ok(graph)
}

/// Layer index as priority, with layers beyond `k` folded into `k`.
pub fn rank_layers(g: &OutrankingGraph, k: u32) -> BTreeMap<DaId, u32> {
    g.vertices
        .iter()
        .cloned()
        .zip(g.layers())
        .map(|(v, l)| (v, (l as u32).min(k.max(1))))
        .collect()
}

pub fn rank_group(table: &EstimateTable, t: &Thresholds, k: u32) -> Result<BTreeMap<DaId, u32>> {
    Ok(rank_layers(&outranking_graph(table, t)?, k))
}
