//! Hierarchical system model: a rooted tree whose leaves are component groups
//! holding design alternatives (DAs), plus scoped pairwise compatibility.
//!
//! Priorities use an ordinal scale `1..=k` (1 is best). Compatibility uses
//! `0..=l` where 0 forbids the pair and `l` is the best level.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

string_id!(NodeId);
string_id!(DaId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Group,
    Composite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignAlternative {
    pub id: DaId,
    pub group: NodeId,
    pub name: String,
    pub priority: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
    pub alternatives: Vec<DesignAlternative>,
}

impl Node {
    pub fn group(id: impl Into<NodeId>, label: impl Into<String>, alternatives: Vec<DesignAlternative>) -> Self {
        Node {
            id: id.into(),
            label: label.into(),
            kind: NodeKind::Group,
            children: Vec::new(),
            alternatives,
        }
    }

    pub fn composite(id: impl Into<NodeId>, label: impl Into<String>, children: Vec<NodeId>) -> Self {
        Node {
            id: id.into(),
            label: label.into(),
            kind: NodeKind::Composite,
            children,
            alternatives: Vec::new(),
        }
    }

    pub fn is_group(&self) -> bool {
        self.kind == NodeKind::Group
    }
}

/// Pairwise compatibility between DAs of different child subtrees of `scope`.
///
/// Entries are stored as listed; lookups are symmetric. Pairs without an
/// entry resolve to `default` when one is set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompatibilityMatrix {
    pub scope: NodeId,
    pub entries: BTreeMap<(DaId, DaId), u32>,
    pub default: Option<u32>,
}

impl CompatibilityMatrix {
    pub fn new(scope: impl Into<NodeId>) -> Self {
        CompatibilityMatrix {
            scope: scope.into(),
            entries: BTreeMap::new(),
            default: None,
        }
    }

    pub fn with_default(mut self, default: u32) -> Self {
        self.default = Some(default);
        self
    }

    pub fn set(&mut self, a: impl Into<DaId>, b: impl Into<DaId>, w: u32) -> &mut Self {
        self.entries.insert((a.into(), b.into()), w);
        self
    }

    pub fn explicit(&self, a: &DaId, b: &DaId) -> Option<u32> {
        self.entries
            .get(&(a.clone(), b.clone()))
            .or_else(|| self.entries.get(&(b.clone(), a.clone())))
            .copied()
    }

    pub fn resolve(&self, a: &DaId, b: &DaId) -> Option<u32> {
        self.explicit(a, b).or(self.default)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel {
    pub root: NodeId,
    /// Node ids are expected to be unique; validation reports duplicates.
    pub nodes: Vec<Node>,
    pub k: u32,
    pub l: u32,
    pub compat: Vec<CompatibilityMatrix>,
}

impl SystemModel {
    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn da(&self, id: &DaId) -> Option<&DesignAlternative> {
        self.nodes
            .iter()
            .flat_map(|n| n.alternatives.iter())
            .find(|d| &d.id == id)
    }

    pub fn matrix(&self, scope: &NodeId) -> Option<&CompatibilityMatrix> {
        self.compat.iter().find(|m| &m.scope == scope)
    }

    /// Leaf groups reachable from the root, in depth-first child order.
    pub fn leaf_groups(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut stack = vec![&self.root];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            let Some(node) = self.node(id) else { continue };
            if node.is_group() {
                out.push(node);
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    fn parents(&self) -> HashMap<&NodeId, &NodeId> {
        let mut parents = HashMap::new();
        for node in &self.nodes {
            for child in &node.children {
                parents.entry(child).or_insert(&node.id);
            }
        }
        parents
    }

    fn ancestry<'a>(&'a self, parents: &HashMap<&'a NodeId, &'a NodeId>, start: &'a NodeId) -> Vec<&'a NodeId> {
        let mut path = vec![start];
        let mut cur = start;
        while let Some(p) = parents.get(cur) {
            if path.contains(p) {
                break;
            }
            path.push(p);
            cur = p;
        }
        path
    }

    /// Resolved compatibility between two DAs, looked up at the scope of
    /// their lowest common ancestor.
    pub fn compat(&self, a: &DaId, b: &DaId) -> Result<u32> {
        let da_a = self.da(a).ok_or_else(|| Error::UnknownDa(a.clone()))?;
        let da_b = self.da(b).ok_or_else(|| Error::UnknownDa(b.clone()))?;
        let unrelated = || Error::UnrelatedPair { a: a.clone(), b: b.clone() };
        if da_a.group == da_b.group {
            return Err(unrelated());
        }
        let parents = self.parents();
        let up_a = self.ancestry(&parents, &da_a.group);
        let up_b = self.ancestry(&parents, &da_b.group);
        let lca = up_a.iter().find(|n| up_b.contains(n)).ok_or_else(unrelated)?;
        self.matrix(lca)
            .and_then(|m| m.resolve(a, b))
            .ok_or_else(unrelated)
    }
}

/// Product of group sizes over all leaf groups; compatibility is ignored.
pub fn count_design_space(model: &SystemModel) -> u128 {
    model
        .leaf_groups()
        .iter()
        .map(|g| g.alternatives.len() as u128)
        .fold(1u128, |acc, n| acc.saturating_mul(n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    BadScale,
    MissingRoot,
    DuplicateNode,
    DanglingChild,
    MultipleParents,
    Cycle,
    OrphanNode,
    EmptyGroup,
    GroupHasChildren,
    EmptyComposite,
    CompositeHasAlternatives,
    DuplicateDa,
    DaGroupMismatch,
    PriorityOutOfRange,
    CompatUnknownScope,
    CompatDuplicateScope,
    CompatUnknownDa,
    CompatNotCrossSubtree,
    CompatOutOfRange,
    AsymmetricCompat,
    MissingCompat,
    UnusedCompatScope,
    UnknownCriterion,
    DuplicateCriterion,
    EstimateUnknownDa,
    ItemUnknownDa,
    DuplicateItem,
    BadItem,
    SolutionMismatch,
}

impl IssueCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            IssueCode::BadScale => "BAD_SCALE",
            IssueCode::MissingRoot => "MISSING_ROOT",
            IssueCode::DuplicateNode => "DUPLICATE_NODE",
            IssueCode::DanglingChild => "DANGLING_CHILD",
            IssueCode::MultipleParents => "MULTIPLE_PARENTS",
            IssueCode::Cycle => "CYCLE",
            IssueCode::OrphanNode => "ORPHAN_NODE",
            IssueCode::EmptyGroup => "EMPTY_GROUP",
            IssueCode::GroupHasChildren => "GROUP_HAS_CHILDREN",
            IssueCode::EmptyComposite => "EMPTY_COMPOSITE",
            IssueCode::CompositeHasAlternatives => "COMPOSITE_HAS_ALTERNATIVES",
            IssueCode::DuplicateDa => "DUPLICATE_DA",
            IssueCode::DaGroupMismatch => "DA_GROUP_MISMATCH",
            IssueCode::PriorityOutOfRange => "PRIORITY_OUT_OF_RANGE",
            IssueCode::CompatUnknownScope => "COMPAT_UNKNOWN_SCOPE",
            IssueCode::CompatDuplicateScope => "COMPAT_DUPLICATE_SCOPE",
            IssueCode::CompatUnknownDa => "COMPAT_UNKNOWN_DA",
            IssueCode::CompatNotCrossSubtree => "COMPAT_NOT_CROSS_SUBTREE",
            IssueCode::CompatOutOfRange => "COMPAT_OUT_OF_RANGE",
            IssueCode::AsymmetricCompat => "ASYMMETRIC_COMPAT",
            IssueCode::MissingCompat => "MISSING_COMPAT",
            IssueCode::UnusedCompatScope => "UNUSED_COMPAT_SCOPE",
            IssueCode::UnknownCriterion => "UNKNOWN_CRITERION",
            IssueCode::DuplicateCriterion => "DUPLICATE_CRITERION",
            IssueCode::EstimateUnknownDa => "ESTIMATE_UNKNOWN_DA",
            IssueCode::ItemUnknownDa => "ITEM_UNKNOWN_DA",
            IssueCode::DuplicateItem => "DUPLICATE_ITEM",
            IssueCode::BadItem => "BAD_ITEM",
            IssueCode::SolutionMismatch => "SOLUTION_MISMATCH",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub subject: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|e| e.code == code)
    }

    pub fn error(&mut self, code: IssueCode, subject: impl fmt::Display, message: impl Into<String>) {
        self.errors.push(Issue {
            code,
            subject: subject.to_string(),
            message: message.into(),
        });
    }

    pub fn warning(&mut self, code: IssueCode, subject: impl fmt::Display, message: impl Into<String>) {
        self.warnings.push(Issue {
            code,
            subject: subject.to_string(),
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }
}

/// Checks every structural invariant of the model. Violations are reported
/// as data, one error per violation, in a deterministic order.
pub fn validate_model(model: &SystemModel) -> ValidationReport {
    let mut report = ValidationReport::default();

    if model.k == 0 {
        report.error(IssueCode::BadScale, "k", "priority scale length k must be at least 1");
    }
    if model.l == 0 {
        report.error(IssueCode::BadScale, "l", "compatibility scale maximum l must be at least 1");
    }

    let mut by_id: HashMap<&NodeId, &Node> = HashMap::new();
    for node in &model.nodes {
        if by_id.insert(&node.id, node).is_some() {
            report.error(IssueCode::DuplicateNode, &node.id, format!("node id {} is used more than once", node.id));
        }
    }

    // Tree shape.
    let mut parent_of: HashMap<&NodeId, &NodeId> = HashMap::new();
    for node in &model.nodes {
        for child in &node.children {
            if !by_id.contains_key(child) {
                report.error(
                    IssueCode::DanglingChild,
                    &node.id,
                    format!("child {child} of {} does not exist", node.id),
                );
                continue;
            }
            if let Some(prev) = parent_of.insert(child, &node.id) {
                report.error(
                    IssueCode::MultipleParents,
                    child,
                    format!("node {child} has more than one parent ({prev}, {})", node.id),
                );
            }
        }
    }
    if !by_id.contains_key(&model.root) {
        report.error(IssueCode::MissingRoot, &model.root, format!("root {} is not a node", model.root));
    } else if let Some(p) = parent_of.get(&model.root) {
        report.error(IssueCode::Cycle, &model.root, format!("root {} has parent {p}", model.root));
    }

    let mut reachable: HashSet<&NodeId> = HashSet::new();
    if by_id.contains_key(&model.root) {
        let mut stack = vec![&model.root];
        while let Some(id) = stack.pop() {
            if !reachable.insert(id) {
                continue;
            }
            if let Some(node) = by_id.get(id) {
                stack.extend(node.children.iter().filter(|c| by_id.contains_key(c)));
            }
        }
    }
    let mut cycle_reported = false;
    for node in &model.nodes {
        if reachable.contains(&node.id) {
            continue;
        }
        // Unreachable nodes either hang off a cycle or have no parent at all.
        if parent_of.contains_key(&node.id) {
            if !cycle_reported {
                report.error(IssueCode::Cycle, &node.id, format!("node {} lies on a cycle detached from the root", node.id));
                cycle_reported = true;
            }
        } else if node.id != model.root {
            report.error(IssueCode::OrphanNode, &node.id, format!("node {} is not reachable from the root", node.id));
        }
    }

    // Node kinds and DAs.
    let mut da_owner: HashMap<&DaId, &NodeId> = HashMap::new();
    for node in &model.nodes {
        match node.kind {
            NodeKind::Group => {
                if !node.children.is_empty() {
                    report.error(IssueCode::GroupHasChildren, &node.id, format!("group {} must not have children", node.id));
                }
                if node.alternatives.is_empty() {
                    report.error(IssueCode::EmptyGroup, &node.id, format!("group {} has no design alternatives", node.id));
                }
            }
            NodeKind::Composite => {
                if node.children.is_empty() {
                    report.error(IssueCode::EmptyComposite, &node.id, format!("composite {} has no children", node.id));
                }
                if !node.alternatives.is_empty() {
                    report.error(
                        IssueCode::CompositeHasAlternatives,
                        &node.id,
                        format!("composite {} must not hold design alternatives", node.id),
                    );
                }
            }
        }
        for da in &node.alternatives {
            if da_owner.insert(&da.id, &node.id).is_some() {
                report.error(IssueCode::DuplicateDa, &da.id, format!("alternative id {} is used more than once", da.id));
            }
            if da.group != node.id {
                report.error(
                    IssueCode::DaGroupMismatch,
                    &da.id,
                    format!("alternative {} claims group {} but sits in {}", da.id, da.group, node.id),
                );
            }
            if da.priority < 1 || da.priority > model.k {
                report.error(
                    IssueCode::PriorityOutOfRange,
                    &da.id,
                    format!("priority {} of {} is outside 1..={}", da.priority, da.id, model.k),
                );
            }
        }
    }

    // Compatibility is only checked on a structurally sound tree.
    if !report.is_valid() {
        return report;
    }

    // Leaf groups below each child of every composite.
    let mut groups_below: HashMap<&NodeId, Vec<&Node>> = HashMap::new();
    fn collect<'a>(id: &'a NodeId, by_id: &HashMap<&NodeId, &'a Node>, out: &mut Vec<&'a Node>) {
        let node = by_id[id];
        if node.is_group() {
            out.push(node);
        } else {
            for c in &node.children {
                collect(c, by_id, out);
            }
        }
    }
    for node in &model.nodes {
        let mut v = Vec::new();
        collect(&node.id, &by_id, &mut v);
        groups_below.insert(&node.id, v);
    }

    let mut seen_scopes = HashSet::new();
    for matrix in &model.compat {
        let scope = &matrix.scope;
        if !seen_scopes.insert(scope) {
            report.error(IssueCode::CompatDuplicateScope, scope, format!("more than one matrix for scope {scope}"));
            continue;
        }
        let Some(node) = by_id.get(scope).filter(|n| !n.is_group()) else {
            report.error(IssueCode::CompatUnknownScope, scope, format!("scope {scope} is not a composite node"));
            continue;
        };
        if node.children.len() < 2 {
            report.warning(
                IssueCode::UnusedCompatScope,
                scope,
                format!("scope {scope} has a single child; its matrix is never consulted"),
            );
        }
        if let Some(d) = matrix.default.filter(|&d| d > model.l) {
            report.error(IssueCode::CompatOutOfRange, scope, format!("default {d} at {scope} exceeds l={}", model.l));
        }
        // Which child subtree of the scope each DA sits in.
        let mut branch: HashMap<&DaId, usize> = HashMap::new();
        for (ci, child) in node.children.iter().enumerate() {
            for g in &groups_below[child] {
                for da in &g.alternatives {
                    branch.insert(&da.id, ci);
                }
            }
        }
        for ((a, b), &w) in &matrix.entries {
            let subject = format!("{scope}:{a}-{b}");
            if !da_owner.contains_key(a) || !da_owner.contains_key(b) {
                report.error(IssueCode::CompatUnknownDa, &subject, format!("entry {a}-{b} names an unknown alternative"));
                continue;
            }
            match (branch.get(a), branch.get(b)) {
                (Some(x), Some(y)) if x != y => {}
                _ => {
                    report.error(
                        IssueCode::CompatNotCrossSubtree,
                        &subject,
                        format!("{a} and {b} are not in different child subtrees of {scope}"),
                    );
                    continue;
                }
            }
            if w > model.l {
                report.error(IssueCode::CompatOutOfRange, &subject, format!("value {w} exceeds l={}", model.l));
            }
            if a < b {
                if let Some(&rev) = matrix.entries.get(&(b.clone(), a.clone())) {
                    if rev != w {
                        report.error(
                            IssueCode::AsymmetricCompat,
                            &subject,
                            format!("entry({a},{b})={w} but entry({b},{a})={rev}"),
                        );
                    }
                }
            }
        }
    }

    // Every cross-subtree pair under a multi-child composite must resolve.
    for node in model.nodes.iter().filter(|n| !n.is_group() && n.children.len() >= 2) {
        let matrix = model.matrix(&node.id);
        let mut missing = 0usize;
        let mut first = None;
        for (i, ci) in node.children.iter().enumerate() {
            for cj in &node.children[i + 1..] {
                for ga in &groups_below[ci] {
                    for gb in &groups_below[cj] {
                        for a in &ga.alternatives {
                            for b in &gb.alternatives {
                                if matrix.and_then(|m| m.resolve(&a.id, &b.id)).is_none() {
                                    missing += 1;
                                    first.get_or_insert_with(|| format!("{}-{}", a.id, b.id));
                                }
                            }
                        }
                    }
                }
            }
        }
        if missing > 0 {
            report.error(
                IssueCode::MissingCompat,
                &node.id,
                format!(
                    "{missing} cross-subtree pair(s) under {} have no compatibility value (first: {})",
                    node.id,
                    first.unwrap_or_default()
                ),
            );
        }
    }

    report
}

/// Dense lookup tables over a validated model.
#[derive(Clone, Debug)]
pub struct ModelIndex<'m> {
    pub model: &'m SystemModel,
    das: Vec<&'m DesignAlternative>,
    da_pos: HashMap<&'m DaId, usize>,
    groups: Vec<&'m Node>,
    group_pos: HashMap<&'m NodeId, usize>,
    da_group: Vec<usize>,
    nodes: HashMap<&'m NodeId, &'m Node>,
    parent: HashMap<&'m NodeId, &'m NodeId>,
    /// Group positions under each node.
    below: HashMap<&'m NodeId, Vec<usize>>,
    /// Row-major resolved compatibility, `None` where no scope relates the pair.
    compat: Vec<Option<u32>>,
}

impl<'m> ModelIndex<'m> {
    pub fn new(model: &'m SystemModel) -> Result<Self> {
        validate_model(model).into_result()?;
        let groups = model.leaf_groups();
        let mut das = Vec::new();
        let mut da_group = Vec::new();
        for (gi, g) in groups.iter().enumerate() {
            for da in &g.alternatives {
                das.push(da);
                da_group.push(gi);
            }
        }
        let da_pos = das.iter().enumerate().map(|(i, d)| (&d.id, i)).collect();
        let group_pos = groups.iter().enumerate().map(|(i, g)| (&g.id, i)).collect();
        let nodes: HashMap<_, _> = model.nodes.iter().map(|n| (&n.id, n)).collect();
        let mut parent = HashMap::new();
        for n in &model.nodes {
            for c in &n.children {
                parent.insert(c, &n.id);
            }
        }
        let mut idx = ModelIndex {
            model,
            das,
            da_pos,
            groups,
            group_pos,
            da_group,
            nodes,
            parent,
            below: HashMap::new(),
            compat: Vec::new(),
        };
        let mut below = HashMap::new();
        idx.fill_below(&model.root, &mut below);
        idx.below = below;

        let n = idx.das.len();
        let mut table = vec![None; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                if idx.da_group[i] == idx.da_group[j] {
                    continue;
                }
                let scope = idx.lca(idx.da_group[i], idx.da_group[j]);
                let v = model
                    .matrix(scope)
                    .and_then(|m| m.resolve(&idx.das[i].id, &idx.das[j].id));
                table[i * n + j] = v;
                table[j * n + i] = v;
            }
        }
        idx.compat = table;
        Ok(idx)
    }

    fn fill_below(&self, id: &'m NodeId, out: &mut HashMap<&'m NodeId, Vec<usize>>) -> Vec<usize> {
        let node = self.nodes[id];
        let v = if node.is_group() {
            vec![self.group_pos[&node.id]]
        } else {
            node.children.iter().flat_map(|c| self.fill_below(c, out)).collect()
        };
        out.insert(&node.id, v.clone());
        v
    }

    fn lca(&self, ga: usize, gb: usize) -> &'m NodeId {
        let mut up_a = vec![&self.groups[ga].id];
        while let Some(p) = self.parent.get(up_a.last().unwrap()) {
            up_a.push(p);
        }
        let mut cur = &self.groups[gb].id;
        loop {
            if up_a.contains(&cur) {
                return cur;
            }
            cur = self.parent[cur];
        }
    }

    pub fn node(&self, id: &NodeId) -> Option<&'m Node> {
        self.nodes.get(id).copied()
    }

    pub fn groups(&self) -> &[&'m Node] {
        &self.groups
    }

    pub fn group_position(&self, id: &NodeId) -> Option<usize> {
        self.group_pos.get(id).copied()
    }

    pub fn da_count(&self) -> usize {
        self.das.len()
    }

    pub fn da(&self, i: usize) -> &'m DesignAlternative {
        self.das[i]
    }

    pub fn da_position(&self, id: &DaId) -> Option<usize> {
        self.da_pos.get(id).copied()
    }

    pub fn da_group(&self, i: usize) -> usize {
        self.da_group[i]
    }

    /// Positions of the DAs of group `g`, in model order.
    pub fn group_das(&self, g: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.das.len()).filter(move |&i| self.da_group[i] == g)
    }

    pub fn groups_below(&self, id: &NodeId) -> &[usize] {
        self.below.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn compat(&self, a: usize, b: usize) -> Option<u32> {
        self.compat[a * self.das.len() + b]
    }

    /// Composite nodes reachable from the root, children before parents.
    pub fn post_order(&self) -> Vec<&'m Node> {
        fn walk<'m>(idx: &ModelIndex<'m>, id: &NodeId, out: &mut Vec<&'m Node>) {
            let node = idx.nodes[id];
            if node.is_group() {
                return;
            }
            for c in &node.children {
                walk(idx, c, out);
            }
            out.push(node);
        }
        let mut out = Vec::new();
        walk(self, &self.model.root, &mut out);
        out
    }
}
