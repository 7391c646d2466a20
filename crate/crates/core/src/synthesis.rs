//! Bottom-up morphological synthesis.
//!
//! Every composite node combines exactly one option per child: a leaf DA for
//! group children, a propagated composite DA for composite children. Each
//! admissible combination is scored with a [`QualityVector`], the Pareto
//! layers are peeled, and the best layers are promoted to act as the node's
//! own design alternatives one level up.
//!
//! Combinations are enumerated with the first child varying fastest, and
//! retained solutions are named `<node>1`, `<node>2`, ... in that order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{count_design_space, DaId, ModelIndex, Node, NodeId, SystemModel};
use crate::quality::{pareto_front, pareto_layers, HasQuality, QualityVector};

pub const DEFAULT_BRUTE_CAP: u128 = 1_000_000;

/// How a composite node counts the parts it is built from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityMode {
    /// Each child choice is one part; composites contribute their own priority.
    #[default]
    Units,
    /// Every leaf DA below the node is a part; `w` also folds in the
    /// compatibility inside composite children.
    Leaves,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Composites from Pareto layers `1..=propagate_layers` move up a level.
    pub propagate_layers: usize,
    pub quality_mode: QualityMode,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            propagate_layers: 1,
            quality_mode: QualityMode::Units,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Da(DaId),
    Composite(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSolution {
    pub node: NodeId,
    pub name: String,
    /// One choice per child, in model child order.
    pub selection: Vec<(NodeId, Choice)>,
    pub quality: QualityVector,
    /// Flattened selection: the leaf DA chosen for every group below `node`.
    pub leaf_profile: BTreeMap<NodeId, DaId>,
}

impl HasQuality for CompositeSolution {
    fn quality(&self) -> &QualityVector {
        &self.quality
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeDa {
    pub solution: CompositeSolution,
    pub priority: u32,
}

/// Pareto layering over a node's admissible compositions; the layer index,
/// capped at `k`, becomes the composite priority. Inadmissible candidates are
/// dropped and input order is kept.
pub fn assign_layer_priorities(candidates: Vec<CompositeSolution>, k: u32) -> Vec<CompositeDa> {
    let layers = pareto_layers(&candidates);
    candidates
        .into_iter()
        .zip(layers)
        .filter_map(|(solution, layer)| {
            layer.map(|l| CompositeDa {
                solution,
                priority: (l as u32).min(k),
            })
        })
        .collect()
}

/// One composed part: its leaf DAs and the priority it carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part {
    pub leaves: Vec<DaId>,
    pub priority: u32,
}

impl Part {
    pub fn leaf(model: &SystemModel, id: &DaId) -> Result<Part> {
        let da = model.da(id).ok_or_else(|| Error::UnknownDa(id.clone()))?;
        Ok(Part {
            leaves: vec![da.id.clone()],
            priority: da.priority,
        })
    }

    pub fn composite(da: &CompositeDa) -> Part {
        Part {
            leaves: da.solution.leaf_profile.values().cloned().collect(),
            priority: da.priority,
        }
    }
}

/// Minimum compatibility between leaf constituents of different parts;
/// `l` when there are fewer than two parts.
pub fn min_compatibility(model: &SystemModel, parts: &[Part]) -> Result<u32> {
    let mut w = model.l;
    for (i, a) in parts.iter().enumerate() {
        for b in &parts[i + 1..] {
            for x in &a.leaves {
                for y in &b.leaves {
                    w = w.min(model.compat(x, y)?);
                }
            }
        }
    }
    Ok(w)
}

pub fn quality_vector(model: &SystemModel, parts: &[Part]) -> Result<QualityVector> {
    let w = min_compatibility(model, parts)?;
    Ok(QualityVector::from_priorities(w, model.k, parts.iter().map(|p| p.priority)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeFront {
    pub node: NodeId,
    /// Compositions visited after pruning zero-compatibility prefixes.
    pub admissible: usize,
    /// The Pareto-efficient compositions (layer 1).
    pub front: Vec<CompositeDa>,
    /// Everything promoted to the parent level (a superset of `front`).
    pub propagated: Vec<CompositeDa>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synthesis {
    /// Fronts of all composite nodes, children before parents.
    pub fronts: Vec<NodeFront>,
    pub root: Vec<CompositeSolution>,
}

impl Synthesis {
    pub fn front(&self, node: &NodeId) -> Option<&NodeFront> {
        self.fronts.iter().find(|f| &f.node == node)
    }
}

/// An option available at one child slot.
#[derive(Clone, Debug)]
struct Opt {
    choice: Choice,
    leaves: Vec<usize>,
    priority: u32,
    /// Compatibility already inside the option.
    inner_w: u32,
}

pub fn synthesize(model: &SystemModel, config: &SynthesisConfig) -> Result<Synthesis> {
    let idx = ModelIndex::new(model)?;
    let root = idx.node(&model.root).expect("validated root");
    if root.is_group() {
        return Ok(Synthesis {
            fronts: Vec::new(),
            root: single_group_front(&idx, root),
        });
    }

    let layers = config.propagate_layers.max(1);
    let mut options: BTreeMap<NodeId, Vec<Opt>> = BTreeMap::new();
    let mut fronts = Vec::new();
    for node in idx.post_order() {
        let slots: Vec<Vec<Opt>> = node
            .children
            .iter()
            .map(|c| child_options(&idx, c, &options))
            .collect();
        let found = enumerate(&idx, &slots, config.quality_mode);
        if found.is_empty() {
            return Err(Error::EmptyFront(node.id.clone()));
        }
        let layer = pareto_layers(&found);
        let mut order: Vec<usize> = (0..found.len()).filter(|&i| layer[i].unwrap() <= layers).collect();
        order.sort_by_key(|&i| layer[i]);

        let mut promoted = Vec::with_capacity(order.len());
        let mut opts = Vec::with_capacity(order.len());
        for (n, &i) in order.iter().enumerate() {
            let cand = &found[i];
            let name = format!("{}{}", node.id, n + 1);
            let solution = build_solution(&idx, node, &slots, cand, name.clone());
            let priority = (layer[i].unwrap() as u32).min(model.k);
            opts.push(Opt {
                choice: Choice::Composite(name),
                leaves: cand.picks.iter().zip(&slots).flat_map(|(&p, s)| s[p].leaves.clone()).collect(),
                priority,
                inner_w: cand.quality.w,
            });
            promoted.push(CompositeDa { solution, priority });
        }
        options.insert(node.id.clone(), opts);
        fronts.push(NodeFront {
            node: node.id.clone(),
            admissible: found.len(),
            front: promoted.iter().filter(|c| c.priority == 1).cloned().collect(),
            propagated: promoted,
        });
    }
    let root = fronts
        .last()
        .map(|f| f.front.iter().map(|c| c.solution.clone()).collect())
        .unwrap_or_default();
    Ok(Synthesis { fronts, root })
}

fn child_options(idx: &ModelIndex<'_>, child: &NodeId, built: &BTreeMap<NodeId, Vec<Opt>>) -> Vec<Opt> {
    let node = idx.node(child).expect("validated child");
    if node.is_group() {
        let g = idx.group_position(child).expect("group index");
        idx.group_das(g)
            .map(|i| Opt {
                choice: Choice::Da(idx.da(i).id.clone()),
                leaves: vec![i],
                priority: idx.da(i).priority,
                inner_w: idx.model.l,
            })
            .collect()
    } else {
        built[child].clone()
    }
}

struct Candidate {
    picks: Vec<usize>,
    quality: QualityVector,
}

impl HasQuality for Candidate {
    fn quality(&self) -> &QualityVector {
        &self.quality
    }
}

/// Depth-first enumeration with the last slot outermost, so the first slot
/// varies fastest. A prefix whose running minimum reaches 0 is cut: the
/// minimum can only fall as more parts are added.
fn enumerate(idx: &ModelIndex<'_>, slots: &[Vec<Opt>], mode: QualityMode) -> Vec<Candidate> {
    struct Walk<'a, 'm> {
        idx: &'a ModelIndex<'m>,
        slots: &'a [Vec<Opt>],
        mode: QualityMode,
        picks: Vec<usize>,
        out: Vec<Candidate>,
    }

    impl Walk<'_, '_> {
        fn go(&mut self, slot: usize, w: u32) {
            let Some(slot) = slot.checked_sub(1) else {
                self.emit(w);
                return;
            };
            for (oi, opt) in self.slots[slot].iter().enumerate() {
                let mut w = w;
                if self.mode == QualityMode::Leaves {
                    w = w.min(opt.inner_w);
                }
                'outer: for later in (slot + 1)..self.slots.len() {
                    let other = &self.slots[later][self.picks[later]];
                    for &a in &opt.leaves {
                        for &b in &other.leaves {
                            w = w.min(self.idx.compat(a, b).unwrap_or(0));
                            if w == 0 {
                                break 'outer;
                            }
                        }
                    }
                }
                if w == 0 {
                    continue;
                }
                self.picks[slot] = oi;
                self.go(slot, w);
            }
        }

        fn emit(&mut self, w: u32) {
            let k = self.idx.model.k;
            let chosen = self.picks.iter().zip(self.slots).map(|(&p, s)| &s[p]);
            let quality = match self.mode {
                QualityMode::Units => QualityVector::from_priorities(w, k, chosen.map(|o| o.priority)),
                QualityMode::Leaves => QualityVector::from_priorities(
                    w,
                    k,
                    chosen.flat_map(|o| o.leaves.iter().map(|&i| self.idx.da(i).priority)),
                ),
            };
            self.out.push(Candidate {
                picks: self.picks.clone(),
                quality,
            });
        }
    }

    let mut walk = Walk {
        idx,
        slots,
        mode,
        picks: vec![0; slots.len()],
        out: Vec::new(),
    };
    walk.go(slots.len(), idx.model.l);
    walk.out
}

fn build_solution(idx: &ModelIndex<'_>, node: &Node, slots: &[Vec<Opt>], cand: &Candidate, name: String) -> CompositeSolution {
    let mut leaf_profile = BTreeMap::new();
    let mut selection = Vec::with_capacity(slots.len());
    for ((child, slot), &p) in node.children.iter().zip(slots).zip(&cand.picks) {
        let opt = &slot[p];
        for &leaf in &opt.leaves {
            let da = idx.da(leaf);
            leaf_profile.insert(da.group.clone(), da.id.clone());
        }
        selection.push((child.clone(), opt.choice.clone()));
    }
    CompositeSolution {
        node: node.id.clone(),
        name,
        selection,
        quality: cand.quality.clone(),
        leaf_profile,
    }
}

fn single_group_front(idx: &ModelIndex<'_>, root: &Node) -> Vec<CompositeSolution> {
    let model = idx.model;
    let all: Vec<CompositeSolution> = root
        .alternatives
        .iter()
        .map(|da| CompositeSolution {
            node: root.id.clone(),
            name: String::new(),
            selection: vec![(root.id.clone(), Choice::Da(da.id.clone()))],
            quality: QualityVector::from_priorities(model.l, model.k, [da.priority]),
            leaf_profile: BTreeMap::from([(root.id.clone(), da.id.clone())]),
        })
        .collect();
    name_in_order(&root.id, pareto_front(all))
}

fn name_in_order(node: &NodeId, mut v: Vec<CompositeSolution>) -> Vec<CompositeSolution> {
    for (i, s) in v.iter_mut().enumerate() {
        s.name = format!("{node}{}", i + 1);
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForce {
    pub enumerated: u128,
    pub front: Vec<CompositeSolution>,
}

/// Reference oracle: scores every full leaf profile once with the root-scope
/// vector over all leaf parts and keeps the Pareto-efficient ones.
pub fn brute_force_synthesize(model: &SystemModel, cap: u128) -> Result<BruteForce> {
    let idx = ModelIndex::new(model)?;
    let size = count_design_space(model);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let groups: Vec<Vec<usize>> = (0..idx.groups().len()).map(|g| idx.group_das(g).collect()).collect();
    let mut digits = vec![0usize; groups.len()];
    let mut all = Vec::new();
    let mut enumerated = 0u128;
    loop {
        enumerated += 1;
        let chosen: Vec<usize> = digits.iter().zip(&groups).map(|(&d, g)| g[d]).collect();
        let mut w = model.l;
        for (i, &a) in chosen.iter().enumerate() {
            for &b in &chosen[i + 1..] {
                w = w.min(idx.compat(a, b).ok_or_else(|| Error::UnrelatedPair {
                    a: idx.da(a).id.clone(),
                    b: idx.da(b).id.clone(),
                })?);
            }
        }
        if w > 0 {
            all.push(CompositeSolution {
                node: model.root.clone(),
                name: String::new(),
                selection: chosen
                    .iter()
                    .map(|&i| (idx.da(i).group.clone(), Choice::Da(idx.da(i).id.clone())))
                    .collect(),
                quality: QualityVector::from_priorities(w, model.k, chosen.iter().map(|&i| idx.da(i).priority)),
                leaf_profile: chosen
                    .iter()
                    .map(|&i| (idx.da(i).group.clone(), idx.da(i).id.clone()))
                    .collect(),
            });
        }
        // Odometer with the first group fastest.
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Ok(BruteForce {
                    enumerated,
                    front: name_in_order(&model.root, pareto_front(all)),
                });
            }
            digits[pos] += 1;
            if digits[pos] < groups[pos].len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CompatibilityMatrix, DesignAlternative};

    fn da(id: &str, group: &str, priority: u32) -> DesignAlternative {
        DesignAlternative {
            id: id.into(),
            group: group.into(),
            name: id.to_owned(),
            priority,
        }
    }

    fn flat(groups: &[(&str, &[u32])], compat: CompatibilityMatrix, k: u32, l: u32) -> SystemModel {
        let mut nodes = vec![Node::composite("S", "root", groups.iter().map(|(g, _)| NodeId::from(*g)).collect())];
        for (g, prios) in groups {
            let das = prios
                .iter()
                .enumerate()
                .map(|(i, &p)| da(&format!("{g}.{}", i + 1), g, p))
                .collect();
            nodes.push(Node::group(*g, *g, das));
        }
        SystemModel {
            root: "S".into(),
            nodes,
            k,
            l,
            compat: vec![compat],
        }
    }

    #[test]
    fn uniform_model_keeps_everything() {
        let model = flat(&[("A", &[1, 1]), ("B", &[1, 1, 1])], CompatibilityMatrix::new("S").with_default(2), 2, 2);
        let s = synthesize(&model, &SynthesisConfig::default()).unwrap();
        assert_eq!(s.root.len(), 6);
        assert!(s.root.iter().all(|r| r.quality == QualityVector::new(2, vec![2, 0])));
        // First child varies fastest.
        assert_eq!(s.root[0].leaf_profile[&NodeId::from("A")], DaId::from("A.1"));
        assert_eq!(s.root[1].leaf_profile[&NodeId::from("A")], DaId::from("A.2"));
        assert_eq!(s.root[1].name, "S2");
    }

    #[test]
    fn all_zero_pair_is_empty_front() {
        let model = flat(&[("A", &[1, 2]), ("B", &[1])], CompatibilityMatrix::new("S").with_default(0), 2, 3);
        let err = synthesize(&model, &SynthesisConfig::default()).unwrap_err();
        assert_eq!(err.code(), "EMPTY_FRONT");
        assert!(brute_force_synthesize(&model, DEFAULT_BRUTE_CAP).unwrap().front.is_empty());
    }

    #[test]
    fn single_group_root() {
        let model = SystemModel {
            root: "G".into(),
            nodes: vec![Node::group("G", "g", vec![da("G.1", "G", 2), da("G.2", "G", 1), da("G.3", "G", 1)])],
            k: 2,
            l: 3,
            compat: vec![],
        };
        let s = synthesize(&model, &SynthesisConfig::default()).unwrap();
        let bf = brute_force_synthesize(&model, DEFAULT_BRUTE_CAP).unwrap();
        assert_eq!(bf.enumerated, 3);
        assert_eq!(s.root, bf.front);
        assert_eq!(s.root.len(), 2);
        assert_eq!(s.root[0].quality, QualityVector::new(3, vec![1, 0]));
    }

    #[test]
    fn single_child_composite_has_best_w() {
        let model = SystemModel {
            root: "S".into(),
            nodes: vec![
                Node::composite("S", "s", vec!["G".into()]),
                Node::group("G", "g", vec![da("G.1", "G", 1)]),
            ],
            k: 1,
            l: 4,
            compat: vec![],
        };
        let s = synthesize(&model, &SynthesisConfig::default()).unwrap();
        assert_eq!(s.root[0].quality, QualityVector::new(4, vec![1]));
    }

    #[test]
    fn cap_exceeded() {
        let model = flat(&[("A", &[1, 1]), ("B", &[1, 1, 1])], CompatibilityMatrix::new("S").with_default(2), 2, 2);
        assert_eq!(brute_force_synthesize(&model, 5).unwrap_err().code(), "CAP_EXCEEDED");
    }

    #[test]
    fn layered_propagation() {
        // A chain of three qualities at node X; widening propagation promotes
        // all three with priorities 1, 2, 3.
        let mut m = CompatibilityMatrix::new("X");
        m.set("A.1", "B.1", 1).set("A.2", "B.1", 2).set("A.3", "B.1", 3);
        let mut model = flat(&[("A", &[1, 1, 1]), ("B", &[1])], m, 3, 3);
        model.nodes[0].id = "X".into();
        model.root = "T".into();
        model.nodes.push(Node::composite("T", "t", vec!["X".into(), "C".into()]));
        model.nodes.push(Node::group("C", "c", vec![da("C.1", "C", 1)]));
        model.compat.push(CompatibilityMatrix::new("T").with_default(3));

        let narrow = synthesize(&model, &SynthesisConfig::default()).unwrap();
        assert_eq!(narrow.front(&"X".into()).unwrap().propagated.len(), 1);
        assert_eq!(narrow.root.len(), 1);

        let wide = SynthesisConfig {
            propagate_layers: 3,
            ..Default::default()
        };
        let s = synthesize(&model, &wide).unwrap();
        let x = s.front(&"X".into()).unwrap();
        let prios: Vec<u32> = x.propagated.iter().map(|c| c.priority).collect();
        assert_eq!(prios, vec![1, 2, 3]);
        assert_eq!(x.propagated[0].solution.leaf_profile[&NodeId::from("A")], DaId::from("A.3"));
        assert_eq!(x.front.len(), 1);
        // At T the composite priority counts as one unit.
        assert_eq!(s.root.len(), 1);
        assert_eq!(s.root[0].quality, QualityVector::new(3, vec![2, 0, 0]));
    }

    #[test]
    fn assign_layers_chain_and_ties() {
        let mk = |w: u32, n: Vec<u32>| CompositeSolution {
            node: "X".into(),
            name: String::new(),
            selection: vec![],
            quality: QualityVector::new(w, n),
            leaf_profile: BTreeMap::new(),
        };
        let out = assign_layer_priorities(vec![mk(1, vec![0, 1]), mk(3, vec![1, 0]), mk(2, vec![1, 0]), mk(0, vec![1, 0])], 3);
        assert_eq!(out.iter().map(|c| c.priority).collect::<Vec<_>>(), vec![3, 1, 2]);
        let capped = assign_layer_priorities(vec![mk(1, vec![0, 1]), mk(3, vec![1, 0]), mk(2, vec![1, 0])], 2);
        assert_eq!(capped.iter().map(|c| c.priority).collect::<Vec<_>>(), vec![2, 1, 2]);
        let same = assign_layer_priorities(vec![mk(2, vec![1, 1]), mk(2, vec![1, 1])], 3);
        assert!(same.iter().all(|c| c.priority == 1));
    }
}
