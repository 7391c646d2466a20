//! Aggregation of several composite solutions into one.
//!
//! Three strategies are provided: extending the common kernel with a
//! multiple-choice knapsack over the remaining groups, compressing the
//! superstructure by deleting all but one DA per multi-valued group, and
//! picking the set median under group-wise Hamming distance.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DaId, NodeId, SystemModel};

const COST_EPS: f64 = 1e-9;
/// Largest decimal scaling the exact solver accepts.
const MAX_COST_DECIMALS: u32 = 3;
/// Upper bound on DP cells (groups x capacity).
const MAX_DP_CELLS: usize = 100_000_000;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionProfile {
    pub choices: BTreeMap<NodeId, BTreeSet<DaId>>,
}

impl SelectionProfile {
    pub fn from_leaf_profile(profile: &BTreeMap<NodeId, DaId>) -> Self {
        SelectionProfile {
            choices: profile
                .iter()
                .map(|(g, d)| (g.clone(), BTreeSet::from([d.clone()])))
                .collect(),
        }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a [&'a str])>) -> Self {
        SelectionProfile {
            choices: pairs
                .into_iter()
                .map(|(g, ds)| (g.into(), ds.iter().map(|d| DaId::from(*d)).collect()))
                .collect(),
        }
    }

    pub fn get(&self, group: &NodeId) -> Option<&BTreeSet<DaId>> {
        self.choices.get(group)
    }

    pub fn is_single_valued(&self) -> bool {
        self.choices.values().all(|s| s.len() == 1)
    }

    /// `self` is contained in `other` group by group.
    pub fn is_subset_of(&self, other: &SelectionProfile) -> bool {
        self.choices.iter().all(|(g, s)| {
            s.is_empty() || other.choices.get(g).is_some_and(|o| s.is_subset(o))
        })
    }
}

/// Group-wise intersection over all solutions.
pub fn kernel(solutions: &[SelectionProfile]) -> SelectionProfile {
    let groups: BTreeSet<&NodeId> = solutions.iter().flat_map(|s| s.choices.keys()).collect();
    let choices = groups
        .into_iter()
        .map(|g| {
            let mut sets = solutions.iter().map(|s| s.choices.get(g).cloned().unwrap_or_default());
            let first = sets.next().unwrap_or_default();
            let common = sets.fold(first, |acc, s| acc.intersection(&s).cloned().collect());
            (g.clone(), common)
        })
        .collect();
    SelectionProfile { choices }
}

/// Group-wise union over all solutions.
pub fn superstructure(solutions: &[SelectionProfile]) -> SelectionProfile {
    let mut choices: BTreeMap<NodeId, BTreeSet<DaId>> = BTreeMap::new();
    for s in solutions {
        for (g, set) in &s.choices {
            choices.entry(g.clone()).or_default().extend(set.iter().cloned());
        }
    }
    SelectionProfile { choices }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McpItem {
    pub group: usize,
    pub index: usize,
    pub da: DaId,
    pub cost: f64,
    pub profit: f64,
}

/// Multiple-choice knapsack: exactly one item per group, total cost within
/// `budget`, total profit maximal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McpInstance {
    pub groups: Vec<Vec<McpItem>>,
    pub budget: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McpMethod {
    #[default]
    Greedy,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McpSolution {
    pub picks: Vec<McpItem>,
    pub total_cost: f64,
    pub total_profit: f64,
    pub method: McpMethod,
}

impl McpInstance {
    /// Builds an instance from `(da, cost, profit)` rows per group,
    /// numbering groups and items in the given order.
    pub fn from_rows(groups: Vec<Vec<(DaId, f64, f64)>>, budget: f64) -> Self {
        McpInstance {
            groups: groups
                .into_iter()
                .enumerate()
                .map(|(gi, items)| {
                    items
                        .into_iter()
                        .enumerate()
                        .map(|(j, (da, cost, profit))| McpItem {
                            group: gi,
                            index: j,
                            da,
                            cost,
                            profit,
                        })
                        .collect()
                })
                .collect(),
            budget,
        }
    }

    fn check(&self) -> Result<()> {
        if self.budget.is_nan() || self.budget < 0.0 {
            return Err(Error::InvalidInput(format!("budget {} must be nonnegative", self.budget)));
        }
        for (gi, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidInput(format!("knapsack group {gi} is empty")));
            }
            for it in g {
                if !(it.cost >= 0.0 && it.cost.is_finite()) || !it.profit.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "item {} has cost {} and profit {}",
                        it.da, it.cost, it.profit
                    )));
                }
            }
        }
        Ok(())
    }

    /// Index of the cheapest item per group; ties go to higher profit, then
    /// lower index.
    fn cheapest(&self) -> Vec<usize> {
        self.groups
            .iter()
            .map(|g| {
                (0..g.len())
                    .min_by(|&a, &b| {
                        g[a].cost
                            .total_cmp(&g[b].cost)
                            .then(g[b].profit.total_cmp(&g[a].profit))
                            .then(a.cmp(&b))
                    })
                    .unwrap()
            })
            .collect()
    }

    pub fn min_cost_total(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.iter().map(|i| i.cost).fold(f64::INFINITY, f64::min))
            .sum()
    }

    fn ensure_feasible(&self) -> Result<()> {
        self.check()?;
        let min_cost = self.min_cost_total();
        if min_cost > self.budget + COST_EPS {
            return Err(Error::Infeasible {
                min_cost,
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn solution(&self, picks: &[usize], method: McpMethod) -> McpSolution {
        let picks: Vec<McpItem> = picks.iter().zip(&self.groups).map(|(&j, g)| g[j].clone()).collect();
        McpSolution {
            total_cost: picks.iter().map(|i| i.cost).sum(),
            total_profit: picks.iter().map(|i| i.profit).sum(),
            picks,
            method,
        }
    }
}

/// Ratio greedy: start from the cheapest item of every group, then keep
/// applying the in-group upgrade with the best profit gain per unit of extra
/// cost that still fits the budget and gains profit.
///
/// Ties on the ratio go to the larger gain, then the lower group index, then
/// the lower item index. On the sensor example this takes {R3, Z1, Y2, O1} at
/// budget 14, and at budget 15 the R3 -> R4 upgrade (gain 1 per unit) fits.
pub fn mcp_greedy(inst: &McpInstance) -> Result<McpSolution> {
    inst.ensure_feasible()?;
    let mut picks = inst.cheapest();
    let mut cost: f64 = picks.iter().zip(&inst.groups).map(|(&j, g)| g[j].cost).sum();
    loop {
        // (ratio, gain, group, item)
        let mut best: Option<(f64, f64, usize, usize)> = None;
        for (gi, g) in inst.groups.iter().enumerate() {
            let cur = &g[picks[gi]];
            for (j, it) in g.iter().enumerate() {
                let dc = it.cost - cur.cost;
                let dp = it.profit - cur.profit;
                if dc <= 0.0 || dp <= 0.0 || cost + dc > inst.budget + COST_EPS {
                    continue;
                }
                let ratio = dp / dc;
                let better = match best {
                    None => true,
                    Some((r, p, bg, bj)) => ratio
                        .total_cmp(&r)
                        .then(dp.total_cmp(&p))
                        .then(bg.cmp(&gi))
                        .then(bj.cmp(&j))
                        == Ordering::Greater,
                };
                if better {
                    best = Some((ratio, dp, gi, j));
                }
            }
        }
        let Some((_, _, gi, j)) = best else { break };
        cost += inst.groups[gi][j].cost - inst.groups[gi][picks[gi]].cost;
        picks[gi] = j;
    }
    Ok(inst.solution(&picks, McpMethod::Greedy))
}

fn decimals(x: f64) -> Option<u32> {
    (0..=MAX_COST_DECIMALS).find(|&d| {
        let scaled = x * 10f64.powi(d as i32);
        (scaled - scaled.round()).abs() <= COST_EPS * scaled.abs().max(1.0)
    })
}

/// Exact dynamic program over groups x integer capacity. Costs are scaled
/// by `10^d`, `d` being the most decimals any cost carries (at most 3).
/// Among optimal picks the lexicographically smallest item indices win.
pub fn mcp_exact(inst: &McpInstance) -> Result<McpSolution> {
    inst.ensure_feasible()?;
    let mut d = 0;
    for it in inst.groups.iter().flatten() {
        d = d.max(decimals(it.cost).ok_or(Error::CostPrecision(it.cost))?);
    }
    let scale = 10f64.powi(d as i32);
    let costs: Vec<Vec<usize>> = inst
        .groups
        .iter()
        .map(|g| g.iter().map(|it| (it.cost * scale).round() as usize).collect())
        .collect();
    let max_total: usize = costs.iter().map(|g| *g.iter().max().unwrap()).sum();
    let cap = ((inst.budget * scale + COST_EPS).floor() as usize).min(max_total);
    let n = inst.groups.len();
    if (n + 1).saturating_mul(cap + 1) > MAX_DP_CELLS {
        return Err(Error::InvalidInput(format!(
            "exact solver table of {} x {} cells is too large",
            n + 1,
            cap + 1
        )));
    }

    // best[i][c]: best profit from groups i.. with capacity c left.
    let mut best = vec![vec![f64::NEG_INFINITY; cap + 1]; n + 1];
    best[n].iter_mut().for_each(|v| *v = 0.0);
    for i in (0..n).rev() {
        for c in 0..=cap {
            let mut v = f64::NEG_INFINITY;
            for (j, it) in inst.groups[i].iter().enumerate() {
                let a = costs[i][j];
                if a <= c {
                    v = v.max(it.profit + best[i + 1][c - a]);
                }
            }
            best[i][c] = v;
        }
    }
    if best[0][cap] == f64::NEG_INFINITY {
        return Err(Error::Infeasible {
            min_cost: inst.min_cost_total(),
            budget: inst.budget,
        });
    }

    let mut picks = Vec::with_capacity(n);
    let mut c = cap;
    for i in 0..n {
        let target = best[i][c];
        let tol = 1e-9 * target.abs().max(1.0);
        let j = (0..inst.groups[i].len())
            .find(|&j| costs[i][j] <= c && inst.groups[i][j].profit + best[i + 1][c - costs[i][j]] >= target - tol)
            .expect("optimum is reachable");
        c -= costs[i][j];
        picks.push(j);
    }
    Ok(inst.solution(&picks, McpMethod::Exact))
}

pub fn solve_mcp(inst: &McpInstance, method: McpMethod) -> Result<McpSolution> {
    match method {
        McpMethod::Greedy => mcp_greedy(inst),
        McpMethod::Exact => mcp_exact(inst),
    }
}

/// Per-DA cost and profit estimates used by extension and compression.
pub type ItemTable = BTreeMap<DaId, (f64, f64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Extend,
    Compress,
    Median,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub strategy: Strategy,
    pub profile: SelectionProfile,
    /// DAs decided by the knapsack (added for extension, kept for compression).
    pub picks: Vec<DaId>,
    /// Extension: cost of the added DAs. Compression: cost of the deleted DAs.
    pub cost: f64,
    /// Extension: profit of the added DAs. Compression: profit of the deleted DAs.
    pub profit: f64,
    pub method: Option<McpMethod>,
}

/// Groups of `profile` in model leaf order, then any others by id.
fn ordered_groups<'a>(model: &'a SystemModel, profile: &'a SelectionProfile) -> Vec<&'a NodeId> {
    let mut out: Vec<&NodeId> = model
        .leaf_groups()
        .into_iter()
        .map(|g| &g.id)
        .filter(|g| profile.choices.contains_key(*g))
        .collect();
    out.extend(profile.choices.keys().filter(|g| model.node(g).is_none_or(|n| !n.is_group())));
    out
}

/// DAs of `set` in model order.
fn ordered_das(model: &SystemModel, group: &NodeId, set: &BTreeSet<DaId>) -> Vec<DaId> {
    let mut out: Vec<DaId> = model
        .node(group)
        .map(|n| n.alternatives.iter().map(|d| d.id.clone()).filter(|d| set.contains(d)).collect())
        .unwrap_or_default();
    out.extend(set.iter().filter(|d| !out.contains(d)).cloned().collect::<Vec<_>>());
    out
}

fn item_row(table: &ItemTable, da: &DaId) -> Result<(DaId, f64, f64)> {
    let &(cost, profit) = table.get(da).ok_or_else(|| Error::MissingItemData(da.clone()))?;
    Ok((da.clone(), cost, profit))
}

/// Completes the kernel: every group where the kernel is not a single DA
/// gets one of its superstructure DAs, chosen by a knapsack over `table`.
pub fn extend_kernel(
    model: &SystemModel,
    kernel: &SelectionProfile,
    superstructure: &SelectionProfile,
    table: &ItemTable,
    budget: f64,
    method: McpMethod,
) -> Result<Aggregate> {
    if !kernel.is_subset_of(superstructure) {
        return Err(Error::InvalidInput("kernel is not contained in the superstructure".into()));
    }
    let mut profile = SelectionProfile::default();
    let mut open = Vec::new();
    for g in ordered_groups(model, superstructure) {
        let fixed = kernel.get(g).filter(|s| s.len() == 1);
        match fixed {
            Some(s) => {
                profile.choices.insert(g.clone(), s.clone());
            }
            None => {
                let pool = kernel.get(g).filter(|s| s.len() > 1).unwrap_or(&superstructure.choices[g]);
                if pool.is_empty() {
                    return Err(Error::InvalidInput(format!("group {g} has no candidate to extend with")));
                }
                let rows = ordered_das(model, g, pool)
                    .iter()
                    .map(|d| item_row(table, d))
                    .collect::<Result<Vec<_>>>()?;
                open.push((g.clone(), rows));
            }
        }
    }
    if open.is_empty() {
        return Ok(Aggregate {
            strategy: Strategy::Extend,
            profile,
            picks: Vec::new(),
            cost: 0.0,
            profit: 0.0,
            method: None,
        });
    }
    let (groups, rows): (Vec<NodeId>, Vec<_>) = open.into_iter().unzip();
    let inst = McpInstance::from_rows(rows, budget);
    let sol = solve_mcp(&inst, method)?;
    for (g, it) in groups.iter().zip(&sol.picks) {
        profile.choices.insert(g.clone(), BTreeSet::from([it.da.clone()]));
    }
    Ok(Aggregate {
        strategy: Strategy::Extend,
        profile,
        picks: sol.picks.iter().map(|i| i.da.clone()).collect(),
        cost: sol.total_cost,
        profit: sol.total_profit,
        method: Some(method),
    })
}

/// Bound on what compression may delete.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "limit")]
pub enum DeletionLimit {
    #[default]
    Unbounded,
    /// Total cost of the deleted DAs.
    Cost(f64),
    /// Number of deleted DAs.
    Count(usize),
}

/// Reduces every multi-valued group of the superstructure to a single DA,
/// choosing what to delete so that the deleted profit is minimal under the
/// deletion limit.
pub fn compress_superstructure(
    model: &SystemModel,
    superstructure: &SelectionProfile,
    table: &ItemTable,
    limit: DeletionLimit,
    method: McpMethod,
) -> Result<Aggregate> {
    let mut profile = SelectionProfile::default();
    let mut multi = Vec::new();
    let mut deletions = 0usize;
    for g in ordered_groups(model, superstructure) {
        let set = &superstructure.choices[g];
        match set.len() {
            0 => return Err(Error::InvalidInput(format!("group {g} is empty in the superstructure"))),
            1 => {
                profile.choices.insert(g.clone(), set.clone());
            }
            n => {
                deletions += n - 1;
                let das = ordered_das(model, g, set);
                let rows = das.iter().map(|d| item_row(table, d)).collect::<Result<Vec<_>>>()?;
                // Keeping DA j deletes all the others.
                let keep_rows = (0..rows.len())
                    .map(|j| {
                        let (cost, profit) = rows
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != j)
                            .fold((0.0, 0.0), |(c, p), (_, r)| (c + r.1, p + r.2));
                        (rows[j].0.clone(), cost, -profit)
                    })
                    .collect::<Vec<_>>();
                multi.push((g.clone(), keep_rows));
            }
        }
    }
    if multi.is_empty() {
        return Ok(Aggregate {
            strategy: Strategy::Compress,
            profile,
            picks: Vec::new(),
            cost: 0.0,
            profit: 0.0,
            method: None,
        });
    }
    let unbounded: f64 = multi
        .iter()
        .map(|(_, rows)| rows.iter().map(|r| r.1).fold(0.0, f64::max))
        .sum();
    let budget = match limit {
        DeletionLimit::Unbounded => unbounded,
        DeletionLimit::Cost(b) => b,
        DeletionLimit::Count(max) => {
            if deletions > max {
                return Err(Error::Infeasible {
                    min_cost: deletions as f64,
                    budget: max as f64,
                });
            }
            unbounded
        }
    };
    let (groups, rows): (Vec<NodeId>, Vec<_>) = multi.into_iter().unzip();
    let sol = solve_mcp(&McpInstance::from_rows(rows, budget), method)?;
    for (g, it) in groups.iter().zip(&sol.picks) {
        profile.choices.insert(g.clone(), BTreeSet::from([it.da.clone()]));
    }
    Ok(Aggregate {
        strategy: Strategy::Compress,
        profile,
        picks: sol.picks.iter().map(|i| i.da.clone()).collect(),
        cost: sol.total_cost,
        profit: -sol.total_profit,
        method: Some(method),
    })
}

/// Number of groups whose chosen DA differs.
pub fn proximity(x: &SelectionProfile, y: &SelectionProfile) -> Result<usize> {
    if !x.is_single_valued() || !y.is_single_valued() || !x.choices.keys().eq(y.choices.keys()) {
        return Err(Error::ProfileMismatch);
    }
    Ok(x.choices.values().zip(y.choices.values()).filter(|(a, b)| a != b).count())
}

/// Compares names like `S2` < `S10`: alphabetic prefix, then numeric suffix.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let cut = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        (&s[..cut], s[cut..].parse().ok())
    }
    let (pa, na) = split(a);
    let (pb, nb) = split(b);
    pa.cmp(pb).then(na.cmp(&nb)).then(a.cmp(b))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Median {
    pub index: usize,
    pub name: String,
    /// Sum of distances from the median to every solution.
    pub total: usize,
}

/// The solution minimising the summed proximity to all solutions; ties go to
/// the smaller name.
pub fn set_median(solutions: &[(String, SelectionProfile)]) -> Result<Median> {
    if solutions.is_empty() {
        return Err(Error::InvalidInput("set median of an empty set".into()));
    }
    let mut best: Option<Median> = None;
    for (i, (name, x)) in solutions.iter().enumerate() {
        let total = solutions
            .iter()
            .map(|(_, s)| proximity(x, s))
            .sum::<Result<usize>>()?;
        let better = match &best {
            None => true,
            Some(b) => total < b.total || (total == b.total && natural_cmp(name, &b.name) == Ordering::Less),
        };
        if better {
            best = Some(Median {
                index: i,
                name: name.clone(),
                total,
            });
        }
    }
    Ok(best.unwrap())
}
