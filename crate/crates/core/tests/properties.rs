use std::collections::{BTreeMap, BTreeSet};

use morph_core::*;
use proptest::strategy::Strategy;
use proptest::prelude::*;

const K: u32 = 3;
const L: u32 = 3;

fn qv(max_k: usize) -> impl Strategy<Value = QualityVector> {
    (1..=max_k).prop_flat_map(|k| (0..=L, prop::collection::vec(0u32..4, k)).prop_map(|(w, n)| QualityVector::new(w, n)))
}

/// Vectors of one fixed shape (k = 3, m = 4).
fn shaped() -> impl Strategy<Value = QualityVector> {
    (0..=L, 0u32..=4, 0u32..=4).prop_filter_map("m = 4", |(w, a, b)| {
        (a + b <= 4).then(|| QualityVector::new(w, vec![a, b, 4 - a - b]))
    })
}

/// Flat model: root `S` directly over groups `G0..`, DA ids `G<g>.<i>`.
#[derive(Clone, Debug)]
struct FlatCase {
    priorities: Vec<Vec<u32>>,
    compat: Vec<u32>,
}

fn flat_case(max_groups: usize, max_das: usize) -> impl Strategy<Value = FlatCase> {
    prop::collection::vec(prop::collection::vec(1..=K, 1..=max_das), 1..=max_groups).prop_flat_map(|priorities| {
        let sizes: Vec<usize> = priorities.iter().map(Vec::len).collect();
        let pairs: usize = (0..sizes.len())
            .flat_map(|i| ((i + 1)..sizes.len()).map(move |j| (i, j)))
            .map(|(i, j)| sizes[i] * sizes[j])
            .sum();
        // Zeros are as likely as each positive level.
        prop::collection::vec(0..=L, pairs).prop_map(move |compat| FlatCase {
            priorities: priorities.clone(),
            compat,
        })
    })
}

fn da_id(g: usize, i: usize) -> String {
    format!("G{g}.{i}")
}

fn build_flat(case: &FlatCase) -> SystemModel {
    let groups = case.priorities.len();
    let mut nodes = vec![Node::composite("S", "root", (0..groups).map(|g| NodeId::from(format!("G{g}"))).collect())];
    for (g, prios) in case.priorities.iter().enumerate() {
        let gid = format!("G{g}");
        let das = prios
            .iter()
            .enumerate()
            .map(|(i, &p)| DesignAlternative {
                id: da_id(g, i).into(),
                group: gid.as_str().into(),
                name: da_id(g, i),
                priority: p,
            })
            .collect();
        nodes.push(Node::group(gid.as_str(), gid.as_str(), das));
    }
    let mut m = CompatibilityMatrix::new("S");
    let mut it = case.compat.iter();
    for a in 0..groups {
        for b in (a + 1)..groups {
            for i in 0..case.priorities[a].len() {
                for j in 0..case.priorities[b].len() {
                    m.set(da_id(a, i), da_id(b, j), *it.next().unwrap());
                }
            }
        }
    }
    SystemModel {
        root: "S".into(),
        nodes,
        k: K,
        l: L,
        compat: vec![m],
    }
}

fn root_set(model: &SystemModel) -> Option<BTreeSet<BTreeMap<NodeId, DaId>>> {
    match synthesize(model, &SynthesisConfig::default()) {
        Ok(s) => Some(s.root.into_iter().map(|c| c.leaf_profile).collect()),
        Err(e) => {
            assert_eq!(e.code(), "EMPTY_FRONT");
            None
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn dominance_is_irreflexive(a in qv(4)) {
        prop_assert!(!strictly_dominates(&a, &a).unwrap());
    }

    #[test]
    fn dominance_is_asymmetric_and_transitive(a in shaped(), b in shaped(), c in shaped()) {
        let ab = strictly_dominates(&a, &b).unwrap();
        let ba = strictly_dominates(&b, &a).unwrap();
        prop_assert!(!(ab && ba));
        if ab && strictly_dominates(&b, &c).unwrap() {
            prop_assert!(strictly_dominates(&a, &c).unwrap());
        }
    }

    #[test]
    fn dominance_rejects_other_shapes(a in qv(4), b in qv(4)) {
        let r = strictly_dominates(&a, &b);
        if a.k() != b.k() || a.m() != b.m() {
            prop_assert_eq!(r.unwrap_err().code(), "SHAPE_MISMATCH");
        } else {
            prop_assert!(r.is_ok());
        }
    }

    #[test]
    fn pareto_front_is_idempotent_and_covering(xs in prop::collection::vec(shaped(), 0..20)) {
        let front = pareto_front(xs.clone());
        prop_assert_eq!(pareto_front(front.clone()), front.clone());
        prop_assert!(front.iter().all(QualityVector::is_admissible));
        for x in xs.iter().filter(|x| x.is_admissible()) {
            if !front.contains(x) {
                prop_assert!(front.iter().any(|f| strictly_dominates(f, x).unwrap()));
            }
        }
        let layers = pareto_layers(&xs);
        for (x, l) in xs.iter().zip(&layers) {
            prop_assert_eq!(*l == Some(1), front.contains(x));
        }
    }

    #[test]
    fn flat_synthesis_equals_enumeration(case in flat_case(4, 4)) {
        let model = build_flat(&case);
        let flat = brute_force_synthesize(&model, DEFAULT_BRUTE_CAP).unwrap();
        match synthesize(&model, &SynthesisConfig::default()) {
            Ok(syn) => prop_assert_eq!(syn.root, flat.front),
            Err(e) => {
                prop_assert_eq!(e.code(), "EMPTY_FRONT");
                prop_assert!(flat.front.is_empty());
            }
        }
    }

    #[test]
    fn emitted_solutions_avoid_forbidden_pairs(case in flat_case(4, 4)) {
        let model = build_flat(&case);
        if let Some(set) = root_set(&model) {
            for p in set {
                let das: Vec<&DaId> = p.values().collect();
                for (i, a) in das.iter().enumerate() {
                    for b in &das[i + 1..] {
                        prop_assert!(model.compat(a, b).unwrap() > 0);
                    }
                }
            }
        }
    }

    #[test]
    fn improving_a_chosen_priority_keeps_the_solution(case in flat_case(4, 4), pick in any::<prop::sample::Index>(), slot in any::<prop::sample::Index>()) {
        let model = build_flat(&case);
        let Some(before) = root_set(&model) else { return Ok(()) };
        let before: Vec<_> = before.into_iter().collect();
        let sol = pick.get(&before).clone();
        let da = slot.get(&sol.values().cloned().collect::<Vec<_>>()).clone();
        let mut improved = model.clone();
        for d in improved.nodes.iter_mut().flat_map(|n| n.alternatives.iter_mut()) {
            if d.id == da && d.priority > 1 {
                d.priority -= 1;
            }
        }
        let after = root_set(&improved).unwrap();
        prop_assert!(after.contains(&sol));
    }
}

#[derive(Clone, Debug)]
struct McpCase {
    groups: Vec<Vec<(u32, i32)>>,
    budget: u32,
}

fn mcp_case() -> impl Strategy<Value = McpCase> {
    (
        prop::collection::vec(prop::collection::vec((0u32..=50, -10i32..=60), 1..=8), 1..=5),
        0u32..=250,
    )
        .prop_map(|(groups, budget)| McpCase { groups, budget })
}

fn mcp_instance(case: &McpCase) -> McpInstance {
    McpInstance::from_rows(
        case.groups
            .iter()
            .enumerate()
            .map(|(g, items)| {
                items
                    .iter()
                    .enumerate()
                    .map(|(j, &(c, p))| (DaId::from(format!("{g}.{j}")), c as f64, p as f64))
                    .collect()
            })
            .collect(),
        case.budget as f64,
    )
}

/// Best integer profit over every full pick.
fn mcp_brute(case: &McpCase) -> Option<i64> {
    let mut best = None;
    let mut idx = vec![0usize; case.groups.len()];
    loop {
        let cost: u32 = idx.iter().zip(&case.groups).map(|(&j, g)| g[j].0).sum();
        if cost <= case.budget {
            let p: i64 = idx.iter().zip(&case.groups).map(|(&j, g)| g[j].1 as i64).sum();
            best = Some(best.map_or(p, |b: i64| b.max(p)));
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < case.groups[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn knapsack_solvers_against_enumeration(case in mcp_case()) {
        let inst = mcp_instance(&case);
        let min_cost: u32 = case.groups.iter().map(|g| g.iter().map(|i| i.0).min().unwrap()).sum();
        let brute = mcp_brute(&case);
        prop_assert_eq!(brute.is_none(), min_cost > case.budget);
        match brute {
            None => {
                prop_assert_eq!(mcp_exact(&inst).unwrap_err().code(), "INFEASIBLE");
                prop_assert_eq!(mcp_greedy(&inst).unwrap_err().code(), "INFEASIBLE");
            }
            Some(best) => {
                let exact = mcp_exact(&inst).unwrap();
                let greedy = mcp_greedy(&inst).unwrap();
                prop_assert_eq!(exact.total_profit, best as f64);
                prop_assert!(greedy.total_profit <= exact.total_profit);
                for s in [&exact, &greedy] {
                    prop_assert!(s.total_cost <= inst.budget);
                    prop_assert_eq!(s.picks.len(), inst.groups.len());
                    prop_assert!(s.picks.iter().enumerate().all(|(g, p)| p.group == g));
                    prop_assert_eq!(s.total_cost, s.picks.iter().map(|p| p.cost).sum::<f64>());
                }
                prop_assert_eq!(mcp_exact(&inst).unwrap(), exact);
                prop_assert_eq!(mcp_greedy(&inst).unwrap(), greedy);
            }
        }
    }
}

fn single_profile(groups: usize, choice: &[u8]) -> SelectionProfile {
    SelectionProfile::from_leaf_profile(
        &(0..groups)
            .map(|g| (NodeId::from(format!("G{g}")), DaId::from(format!("G{g}.{}", choice[g]))))
            .collect(),
    )
}

fn profiles(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<SelectionProfile>> {
    (1usize..=6).prop_flat_map(move |groups| {
        prop::collection::vec(prop::collection::vec(0u8..3, groups), n.clone())
            .prop_map(move |cs| cs.iter().map(|c| single_profile(groups, c)).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn proximity_is_a_metric(ps in profiles(3..=3)) {
        let (x, y, z) = (&ps[0], &ps[1], &ps[2]);
        let d = |a, b| proximity(a, b).unwrap();
        prop_assert_eq!(d(x, x), 0);
        prop_assert_eq!(d(x, y) == 0, x == y);
        prop_assert_eq!(d(x, y), d(y, x));
        prop_assert!(d(x, z) <= d(x, y) + d(y, z));
    }

    #[test]
    fn set_median_minimises_total_distance(ps in profiles(1..=12)) {
        let named: Vec<(String, SelectionProfile)> =
            ps.iter().enumerate().map(|(i, p)| (format!("S{}", i + 1), p.clone())).collect();
        let totals: Vec<usize> = ps
            .iter()
            .map(|x| ps.iter().map(|y| proximity(x, y).unwrap()).sum())
            .collect();
        let min = *totals.iter().min().unwrap();
        let m = set_median(&named).unwrap();
        prop_assert_eq!(m.total, min);
        prop_assert_eq!(m.index, totals.iter().position(|t| *t == min).unwrap());
    }

    #[test]
    fn kernel_and_superstructure_bracket_every_solution(ps in profiles(1..=8)) {
        let k = kernel(&ps);
        let s = superstructure(&ps);
        for p in &ps {
            prop_assert!(k.is_subset_of(p));
            prop_assert!(p.is_subset_of(&s));
        }
    }
}

#[derive(Clone, Debug)]
struct RankSpec {
    weights: Vec<i32>,
    rows: Vec<Vec<i32>>,
}

fn rank_spec() -> impl Strategy<Value = RankSpec> {
    (1usize..=4, 1usize..=6).prop_flat_map(|(c, n)| {
        (
            prop::collection::vec(prop_oneof![-10i32..=-1, 1i32..=10], c),
            prop::collection::vec(prop::collection::vec(-20i32..=20, c), n),
        )
            .prop_map(|(weights, rows)| RankSpec { weights, rows })
    })
}

fn table(case: &RankSpec, scale: f64, value_map: impl Fn(usize, f64) -> f64) -> EstimateTable {
    let das: Vec<DaId> = (0..case.rows.len()).map(|i| DaId::from(format!("a{i}"))).collect();
    let criteria = case
        .weights
        .iter()
        .enumerate()
        .map(|(i, &w)| CriterionSpec {
            id: format!("C{i}").into(),
            name: format!("C{i}"),
            weight: w as f64 * scale,
        })
        .collect();
    let mut t = EstimateTable::new("G", das.clone(), criteria);
    for (a, row) in das.iter().zip(&case.rows) {
        for (c, &v) in row.iter().enumerate() {
            t.set(a.clone(), format!("C{c}"), value_map(c, v as f64));
        }
    }
    t
}

fn thresholds() -> impl Strategy<Value = Thresholds> {
    (1u32..=10, 0u32..=10).prop_map(|(p, q)| Thresholds::new(p as f64 / 10.0, q as f64 / 10.0).unwrap())
}

/// Mutual reachability over the arcs.
fn reach(g: &OutrankingGraph) -> Vec<Vec<bool>> {
    let n = g.vertices.len();
    let mut r = vec![vec![false; n]; n];
    for (i, a) in g.vertices.iter().enumerate() {
        r[i][i] = true;
        for (j, b) in g.vertices.iter().enumerate() {
            if g.arcs.contains(&(a.clone(), b.clone())) {
                r[i][j] = true;
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][m] && r[m][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn self_comparison(case in rank_spec()) {
        let t = table(&case, 1.0, |_, v| v);
        for a in &t.alternatives {
            prop_assert_eq!(concordance(a, a, &t).unwrap(), 1.0);
            prop_assert_eq!(discordance(a, a, &t).unwrap(), 0.0);
        }
    }

    #[test]
    fn weight_scaling_is_invisible(case in rank_spec(), th in thresholds(), s in prop_oneof![Just(0.25), Just(0.5), Just(2.0), Just(8.0), Just(3.0), Just(7.0)]) {
        let base = table(&case, 1.0, |_, v| v);
        let scaled = table(&case, s, |_, v| v);
        for a in &base.alternatives {
            for b in &base.alternatives {
                prop_assert_eq!(concordance(a, b, &base).unwrap().to_bits(), concordance(a, b, &scaled).unwrap().to_bits());
            }
        }
        prop_assert_eq!(outranking_graph(&base, &th).unwrap(), outranking_graph(&scaled, &th).unwrap());
        prop_assert_eq!(rank_group(&base, &th, K).unwrap(), rank_group(&scaled, &th, K).unwrap());
    }

    #[test]
    fn real_weight_scaling_keeps_the_graph(case in rank_spec(), th in thresholds(), s in 0.01f64..100.0) {
        let base = table(&case, 1.0, |_, v| v);
        let scaled = table(&case, s, |_, v| v);
        prop_assert_eq!(outranking_graph(&base, &th).unwrap(), outranking_graph(&scaled, &th).unwrap());
    }

    #[test]
    fn discordance_ignores_affine_rescaling(case in rank_spec(), alpha in 0.01f64..100.0, beta in -1000.0f64..1000.0) {
        let base = table(&case, 1.0, |_, v| v);
        let moved = table(&case, 1.0, |_, v| alpha * v + beta);
        for a in &base.alternatives {
            for b in &base.alternatives {
                let d0 = discordance(a, b, &base).unwrap();
                let d1 = discordance(a, b, &moved).unwrap();
                prop_assert!((d0 - d1).abs() <= 1e-9, "{} vs {}", d0, d1);
            }
        }
    }

    #[test]
    fn layers_respect_dominance_and_cycles(case in rank_spec(), th in thresholds()) {
        let t = table(&case, 1.0, |_, v| v);
        let g = outranking_graph(&t, &th).unwrap();
        let layers = g.layers();
        let r = reach(&g);
        let n = t.alternatives.len();
        for i in 0..n {
            for j in 0..n {
                if r[i][j] && r[j][i] {
                    prop_assert_eq!(layers[i], layers[j]);
                }
                let dominates = (0..case.weights.len()).all(|c| {
                    let d = (case.rows[i][c] - case.rows[j][c]) * case.weights[c].signum();
                    d > 0
                });
                if dominates {
                    prop_assert!(g.arcs.contains(&(t.alternatives[i].clone(), t.alternatives[j].clone())));
                    prop_assert!(layers[i] <= layers[j]);
                    if !(r[i][j] && r[j][i]) {
                        prop_assert!(layers[i] < layers[j]);
                    }
                }
            }
        }
        let capped = rank_layers(&g, K);
        for (v, l) in g.vertices.iter().zip(&layers) {
            prop_assert_eq!(capped[v], (*l as u32).min(K));
        }
    }
}

#[test]
fn dominance_alone_does_not_force_a_strictly_better_layer() {
    // a beats b everywhere, yet b and c outrank each other around a cycle
    // that also contains a.
    let case = RankSpec {
        weights: vec![1, 1],
        rows: vec![vec![10, 10], vec![9, 9], vec![11, 0]],
    };
    let t = table(&case, 1.0, |_, v| v);
    let g = outranking_graph(&t, &Thresholds::default()).unwrap();
    let layers = g.layers();
    assert!(layers[0] <= layers[1]);
    let r = reach(&g);
    assert!(r[0][1] && r[1][0]);
}
