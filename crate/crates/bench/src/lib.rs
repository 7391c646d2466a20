//! Seeded random instances for benchmarks and large randomized test sweeps.

use morph_core::{
    CompatibilityMatrix, CriterionSpec, DaId, DesignAlternative, EstimateTable, McpInstance, Node, NodeId,
    QualityVector, SelectionProfile, SystemModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn da_id(group: usize, i: usize) -> DaId {
    DaId::from(format!("G{group}.{i}"))
}

fn group_node(g: usize, priorities: &[u32]) -> Node {
    let gid = NodeId::from(format!("G{g}"));
    let das = priorities
        .iter()
        .enumerate()
        .map(|(i, &p)| DesignAlternative {
            id: da_id(g, i),
            group: gid.clone(),
            name: da_id(g, i).to_string(),
            priority: p,
        })
        .collect();
    Node::group(gid.clone(), gid.to_string(), das)
}

/// Root `S` directly over `1..=max_groups` groups of `1..=max_das` DAs.
/// Every cross pair gets an explicit compatibility in `0..=l`, zero with
/// probability `zero_prob`.
pub fn flat_model(rng: &mut impl Rng, max_groups: usize, max_das: usize, k: u32, l: u32, zero_prob: f64) -> SystemModel {
    let groups = rng.random_range(1..=max_groups);
    let sizes: Vec<usize> = (0..groups).map(|_| rng.random_range(1..=max_das)).collect();
    flat_model_with(rng, &sizes, k, l, zero_prob)
}

pub fn flat_model_with(rng: &mut impl Rng, sizes: &[usize], k: u32, l: u32, zero_prob: f64) -> SystemModel {
    let mut nodes = vec![Node::composite(
        "S",
        "root",
        (0..sizes.len()).map(|g| NodeId::from(format!("G{g}"))).collect(),
    )];
    for (g, &n) in sizes.iter().enumerate() {
        let prios: Vec<u32> = (0..n).map(|_| rng.random_range(1..=k)).collect();
        nodes.push(group_node(g, &prios));
    }
    let mut m = CompatibilityMatrix::new("S");
    for a in 0..sizes.len() {
        for b in (a + 1)..sizes.len() {
            for i in 0..sizes[a] {
                for j in 0..sizes[b] {
                    let w = if rng.random_bool(zero_prob) { 0 } else { rng.random_range(1..=l) };
                    m.set(da_id(a, i), da_id(b, j), w);
                }
            }
        }
    }
    SystemModel {
        root: "S".into(),
        nodes,
        k,
        l,
        compat: vec![m],
    }
}

/// Two-level tree: root over `subsystems` composites, each over
/// `groups_per` groups of `das` DAs. Cross-subsystem compatibility is
/// uniform at `l`; inside a subsystem it is random with no zeros.
pub fn layered_model(rng: &mut impl Rng, subsystems: usize, groups_per: usize, das: usize, k: u32, l: u32) -> SystemModel {
    let mut nodes = vec![Node::composite(
        "S",
        "root",
        (0..subsystems).map(|s| NodeId::from(format!("H{s}"))).collect(),
    )];
    let mut compat = vec![CompatibilityMatrix::new("S").with_default(l)];
    for s in 0..subsystems {
        let first = s * groups_per;
        nodes.push(Node::composite(
            format!("H{s}"),
            format!("H{s}"),
            (first..first + groups_per).map(|g| NodeId::from(format!("G{g}"))).collect(),
        ));
        let mut m = CompatibilityMatrix::new(format!("H{s}"));
        for g in first..first + groups_per {
            let prios: Vec<u32> = (0..das).map(|_| rng.random_range(1..=k)).collect();
            nodes.push(group_node(g, &prios));
            for h in (g + 1)..first + groups_per {
                for i in 0..das {
                    for j in 0..das {
                        m.set(da_id(g, i), da_id(h, j), rng.random_range(1..=l));
                    }
                }
            }
        }
        compat.push(m);
    }
    SystemModel {
        root: "S".into(),
        nodes,
        k,
        l,
        compat,
    }
}

/// Up to `max_groups` groups of up to `max_items` items with integer costs
/// in `0..=max_cost`, integer profits, and a budget between zero and the
/// most expensive full pick.
pub fn mcp_instance(rng: &mut impl Rng, max_groups: usize, max_items: usize, max_cost: u32) -> McpInstance {
    let groups = rng.random_range(1..=max_groups);
    let rows: Vec<Vec<(DaId, f64, f64)>> = (0..groups)
        .map(|g| {
            (0..rng.random_range(1..=max_items))
                .map(|j| {
                    (
                        da_id(g, j),
                        rng.random_range(0..=max_cost) as f64,
                        rng.random_range(-10..=60) as f64,
                    )
                })
                .collect()
        })
        .collect();
    let max_total: f64 = rows
        .iter()
        .map(|g| g.iter().map(|r| r.1).fold(0.0, f64::max))
        .sum();
    let budget = rng.random_range(0..=max_total as u32) as f64;
    McpInstance::from_rows(rows, budget)
}

/// A quality vector with `k` levels and `m` parts.
pub fn quality(rng: &mut impl Rng, k: usize, m: u32, l: u32) -> QualityVector {
    let mut n = vec![0u32; k];
    for _ in 0..m {
        n[rng.random_range(0..k)] += 1;
    }
    QualityVector::new(rng.random_range(0..=l), n)
}

/// Single-valued profile over `groups` groups with `choices` DAs each.
pub fn profile(rng: &mut impl Rng, groups: usize, choices: usize) -> SelectionProfile {
    SelectionProfile::from_leaf_profile(
        &(0..groups)
            .map(|g| (NodeId::from(format!("G{g}")), da_id(g, rng.random_range(0..choices))))
            .collect(),
    )
}

/// Integer-valued estimate table with nonzero integer weights.
pub fn estimate_table(rng: &mut impl Rng, max_criteria: usize, max_das: usize) -> EstimateTable {
    let criteria = rng.random_range(1..=max_criteria);
    let das = rng.random_range(1..=max_das);
    let weights: Vec<i32> = (0..criteria)
        .map(|_| {
            let w = rng.random_range(1..=10);
            if rng.random_bool(0.5) { w } else { -w }
        })
        .collect();
    let ids: Vec<DaId> = (0..das).map(|i| da_id(0, i)).collect();
    let specs = weights
        .iter()
        .enumerate()
        .map(|(c, &w)| CriterionSpec {
            id: format!("C{c}").into(),
            name: format!("C{c}"),
            weight: w as f64,
        })
        .collect();
    let mut t = EstimateTable::new("G0", ids.clone(), specs);
    for id in &ids {
        for c in 0..criteria {
            t.set(id.clone(), format!("C{c}"), rng.random_range(-20..=20) as f64);
        }
    }
    t
}
