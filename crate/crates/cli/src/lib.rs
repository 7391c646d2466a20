//! Command orchestration for the `morph` binary: ranking, synthesis and
//! aggregation over a parsed model file, collected into a [`RunReport`].

pub mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use morph_core::aggregation::natural_cmp;
use morph_core::model::ModelIndex;
use morph_core::{
    brute_force_synthesize, compress_superstructure, count_design_space, extend_kernel, kernel, outranking_graph,
    rank_layers, set_median, superstructure, synthesize, Choice, CompositeSolution, Dataset, DaId, DeletionLimit,
    Error, McpMethod, NodeId, QualityMode, SelectionProfile, Strategy, SynthesisConfig, SystemModel, Thresholds,
    DEFAULT_BRUTE_CAP,
};

pub use report::{render_report, Format, RunReport};
use report::*;

pub const BRUTE_CAP_ENV: &str = "MORPH_BRUTE_CAP";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Rank,
    Synth,
    Aggregate,
    Pipeline,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Rank => "rank",
            Command::Synth => "synth",
            Command::Aggregate => "aggregate",
            Command::Pipeline => "pipeline",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum PrioritySource {
    /// Priorities stored in the model file.
    #[default]
    File,
    /// Priorities computed from the criteria estimates.
    Rank,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Empty means the budgets listed in the model file.
    pub budgets: Vec<f64>,
    pub mcp: McpMethod,
    pub strategy: Strategy,
    pub priorities: PrioritySource,
    pub thresholds: Thresholds,
    pub synthesis: SynthesisConfig,
    pub max_deletions: Option<usize>,
    pub brute_cap: u128,
    pub timing: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            budgets: Vec::new(),
            mcp: McpMethod::Greedy,
            strategy: Strategy::Extend,
            priorities: PrioritySource::File,
            thresholds: Thresholds::default(),
            synthesis: SynthesisConfig::default(),
            max_deletions: None,
            brute_cap: DEFAULT_BRUTE_CAP,
            timing: false,
        }
    }
}

/// Reads the enumeration cap from the environment, if set.
pub fn brute_cap_from_env() -> Result<u128, String> {
    match std::env::var(BRUTE_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("{BRUTE_CAP_ENV} must be a nonnegative integer, got {v:?}")),
        Err(_) => Ok(DEFAULT_BRUTE_CAP),
    }
}

pub struct Outcome {
    pub report: RunReport,
    pub exit_code: i32,
}

fn exit_for(e: &Error) -> i32 {
    if e.is_infeasible() {
        EXIT_INFEASIBLE
    } else {
        EXIT_ERROR
    }
}

fn mcp_name(m: McpMethod) -> &'static str {
    match m {
        McpMethod::Greedy => "greedy",
        McpMethod::Exact => "exact",
    }
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::Extend => "extend",
        Strategy::Compress => "compress",
        Strategy::Median => "median",
    }
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Leaf DAs of a profile joined in model group order.
fn profile_string(model: &SystemModel, profile: &BTreeMap<NodeId, DaId>) -> String {
    model
        .leaf_groups()
        .iter()
        .filter_map(|g| profile.get(&g.id).map(|d| d.to_string()))
        .collect::<Vec<_>>()
        .join("*")
}

fn single_string(model: &SystemModel, p: &SelectionProfile) -> String {
    let flat: BTreeMap<NodeId, DaId> = p
        .choices
        .iter()
        .filter_map(|(g, s)| s.iter().next().map(|d| (g.clone(), d.clone())))
        .collect();
    profile_string(model, &flat)
}

fn group_choices(model: &SystemModel, p: &SelectionProfile) -> Vec<GroupChoice> {
    model
        .leaf_groups()
        .iter()
        .filter_map(|g| {
            p.choices.get(&g.id).map(|set| GroupChoice {
                group: g.id.to_string(),
                das: g
                    .alternatives
                    .iter()
                    .filter(|d| set.contains(&d.id))
                    .map(|d| d.id.to_string())
                    .collect(),
            })
        })
        .collect()
}

fn solution_row(model: &SystemModel, s: &CompositeSolution, priority: u32) -> SolutionRow {
    SolutionRow {
        name: s.name.clone(),
        composition: s
            .selection
            .iter()
            .map(|(_, c)| match c {
                Choice::Da(d) => d.to_string(),
                Choice::Composite(n) => n.clone(),
            })
            .collect::<Vec<_>>()
            .join("*"),
        profile: profile_string(model, &s.leaf_profile),
        quality: s.quality.to_string(),
        w: s.quality.w,
        n: s.quality.n.clone(),
        priority,
    }
}

/// Runs one command against a parsed dataset.
pub fn run(ds: &Dataset, cfg: &RunConfig) -> Outcome {
    let model = &ds.model;
    let warnings = morph_core::validate_model(model)
        .warnings
        .iter()
        .map(|w| format!("{} {}: {}", w.code, w.subject, w.message))
        .collect();
    let budgets = if cfg.budgets.is_empty() && cfg.strategy == Strategy::Extend {
        ds.budgets.clone()
    } else {
        cfg.budgets.clone()
    };
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        command: cfg.command.name().to_owned(),
        model: ModelSummary {
            name: ds.name.clone(),
            groups: model.leaf_groups().len(),
            alternatives: model.leaf_groups().iter().map(|g| g.alternatives.len()).sum(),
            design_space: count_design_space(model).to_string(),
            warnings,
        },
        config: ConfigEcho {
            priorities: match cfg.priorities {
                PrioritySource::File => "file",
                PrioritySource::Rank => "rank",
            }
            .to_owned(),
            concordance_min: cfg.thresholds.concordance_min,
            discordance_max: cfg.thresholds.discordance_max,
            propagate_layers: cfg.synthesis.propagate_layers,
            quality_mode: match cfg.synthesis.quality_mode {
                QualityMode::Units => "units",
                QualityMode::Leaves => "leaves",
            }
            .to_owned(),
            strategy: strategy_name(cfg.strategy).to_owned(),
            mcp: mcp_name(cfg.mcp).to_owned(),
            budgets: budgets.clone(),
            max_deletions: cfg.max_deletions,
            brute_cap: cfg.brute_cap.to_string(),
        },
        ranking: None,
        synthesis: None,
        aggregation: None,
        timing: None,
        error: None,
    };
    let mut timing = Timing {
        ranking_ms: 0.0,
        synthesis_ms: 0.0,
        aggregation_ms: 0.0,
    };
    let exit_code = match stages(ds, cfg, &budgets, &mut report, &mut timing) {
        Ok(code) => code,
        Err(e) => {
            report.error = Some(ErrorReport::from(&e));
            exit_for(&e)
        }
    };
    if cfg.timing {
        report.timing = Some(timing);
    }
    Outcome { report, exit_code }
}

fn stages(
    ds: &Dataset,
    cfg: &RunConfig,
    budgets: &[f64],
    report: &mut RunReport,
    timing: &mut Timing,
) -> Result<i32, Error> {
    if cfg.command == Command::Validate {
        return Ok(EXIT_OK);
    }
    let wants_rank = cfg.command == Command::Rank || cfg.priorities == PrioritySource::Rank;
    let mut model = ds.model.clone();
    if wants_rank {
        let t = Instant::now();
        let (rows, priorities) = rank_all(ds, cfg)?;
        report.ranking = Some(rows);
        if cfg.priorities == PrioritySource::Rank {
            model = ds.with_priorities(&priorities);
        }
        timing.ranking_ms = elapsed_ms(t);
    }
    if cfg.command == Command::Rank {
        return Ok(EXIT_OK);
    }

    let needs_synthesis = matches!(cfg.command, Command::Synth | Command::Pipeline)
        || (cfg.command == Command::Aggregate && ds.solutions.is_empty());
    let mut solutions: Vec<(String, SelectionProfile)> = Vec::new();
    let mut source = "stored solutions";
    if needs_synthesis {
        let t = Instant::now();
        let syn = synthesize(&model, &cfg.synthesis);
        timing.synthesis_ms = elapsed_ms(t);
        let syn = match syn {
            Ok(s) => s,
            Err(e @ Error::EmptyFront(_)) => {
                report.synthesis = Some(SynthesisReport {
                    fronts: Vec::new(),
                    root: Vec::new(),
                    flat_check: FlatCheck::Skipped {
                        reason: "synthesis found no admissible composition".to_owned(),
                    },
                });
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        let idx = ModelIndex::new(&model)?;
        let fronts = syn
            .fronts
            .iter()
            .filter(|f| f.node != model.root)
            .map(|f| FrontReport {
                node: f.node.to_string(),
                label: idx.node(&f.node).map(|n| n.label.clone()).unwrap_or_default(),
                admissible: f.admissible,
                front: f
                    .front
                    .iter()
                    .map(|c| solution_row(&model, &c.solution, c.priority))
                    .collect(),
                propagated: f.propagated.iter().map(|c| c.solution.name.clone()).collect(),
            })
            .collect();
        let root = syn.root.iter().map(|s| solution_row(&model, s, 1)).collect();
        let flat_check = match brute_force_synthesize(&model, cfg.brute_cap) {
            Ok(flat) => {
                let a: BTreeSet<_> = syn.root.iter().map(|s| &s.leaf_profile).collect();
                let b: BTreeSet<_> = flat.front.iter().map(|s| &s.leaf_profile).collect();
                FlatCheck::Done {
                    enumerated: flat.enumerated.to_string(),
                    front_size: flat.front.len(),
                    same_profiles: a == b,
                }
            }
            Err(e @ Error::CapExceeded { .. }) => FlatCheck::Skipped { reason: e.to_string() },
            Err(e) => return Err(e),
        };
        report.synthesis = Some(SynthesisReport {
            fronts,
            root,
            flat_check,
        });
        solutions = syn
            .root
            .iter()
            .map(|s| (s.name.clone(), SelectionProfile::from_leaf_profile(&s.leaf_profile)))
            .collect();
        source = "synthesis";
    } else if cfg.command == Command::Aggregate {
        solutions = ds.solutions.iter().map(|s| (s.name.clone(), s.selection())).collect();
        solutions.sort_by(|a, b| natural_cmp(&a.0, &b.0));
    }
    if cfg.command == Command::Synth {
        return Ok(EXIT_OK);
    }

    let t = Instant::now();
    let (agg, code) = aggregate(&model, ds, cfg, budgets, &solutions, source)?;
    timing.aggregation_ms = elapsed_ms(t);
    report.aggregation = Some(agg);
    Ok(code)
}

fn rank_all(ds: &Dataset, cfg: &RunConfig) -> Result<(Vec<GroupRanking>, BTreeMap<DaId, u32>), Error> {
    let mut rows = Vec::new();
    let mut priorities = BTreeMap::new();
    for g in ds.model.leaf_groups() {
        let table = ds.estimate_table(&g.id)?;
        let graph = outranking_graph(&table, &cfg.thresholds)?;
        let layers = graph.layers();
        let ranks = rank_layers(&graph, ds.model.k);
        let criteria = table.active_criteria().iter().map(|c| c.id.to_string()).collect();
        rows.push(GroupRanking {
            group: g.id.to_string(),
            criteria,
            arcs: graph.arcs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            alternatives: g
                .alternatives
                .iter()
                .zip(&layers)
                .map(|(d, &layer)| RankedDa {
                    da: d.id.to_string(),
                    layer,
                    priority: ranks[&d.id],
                    file_priority: d.priority,
                })
                .collect(),
        });
        priorities.extend(ranks);
    }
    Ok((rows, priorities))
}

fn aggregate(
    model: &SystemModel,
    ds: &Dataset,
    cfg: &RunConfig,
    budgets: &[f64],
    solutions: &[(String, SelectionProfile)],
    source: &str,
) -> Result<(AggregationReport, i32), Error> {
    if solutions.is_empty() {
        return Err(Error::InvalidInput("no solutions to aggregate".into()));
    }
    let profiles: Vec<SelectionProfile> = solutions.iter().map(|(_, p)| p.clone()).collect();
    let k = kernel(&profiles);
    let s = superstructure(&profiles);
    let mut code = EXIT_OK;
    let mut results = Vec::new();
    let mut median = None;

    let mut record = |budget: Option<f64>, r: Result<morph_core::Aggregate, Error>| -> Result<(), Error> {
        match r {
            Ok(a) => results.push(AggregateRow {
                budget,
                status: "ok".to_owned(),
                profile: Some(single_string(model, &a.profile)),
                picks: a.picks.iter().map(|d| d.to_string()).collect(),
                cost: Some(a.cost),
                profit: Some(a.profit),
                error: None,
            }),
            Err(e) if e.is_infeasible() => {
                code = EXIT_INFEASIBLE;
                results.push(AggregateRow {
                    budget,
                    status: "infeasible".to_owned(),
                    profile: None,
                    picks: Vec::new(),
                    cost: None,
                    profit: None,
                    error: Some(ErrorReport::from(&e)),
                });
            }
            Err(e) => return Err(e),
        }
        Ok(())
    };

    match cfg.strategy {
        Strategy::Extend => {
            if budgets.is_empty() {
                return Err(Error::InvalidInput("kernel extension needs at least one budget".into()));
            }
            for &b in budgets {
                record(Some(b), extend_kernel(model, &k, &s, &ds.items, b, cfg.mcp))?;
            }
        }
        Strategy::Compress => {
            let count = cfg.max_deletions.map(DeletionLimit::Count);
            if budgets.is_empty() {
                let limit = count.unwrap_or(DeletionLimit::Unbounded);
                record(None, compress_superstructure(model, &s, &ds.items, limit, cfg.mcp))?;
            }
            for &b in budgets {
                let limit = count.unwrap_or(DeletionLimit::Cost(b));
                record(Some(b), compress_superstructure(model, &s, &ds.items, limit, cfg.mcp))?;
            }
        }
        Strategy::Median => {
            let m = set_median(solutions)?;
            median = Some(MedianReport {
                name: m.name.clone(),
                profile: single_string(model, &solutions[m.index].1),
                total_distance: m.total,
            });
        }
    }

    Ok((
        AggregationReport {
            source: source.to_owned(),
            solutions: solutions.iter().map(|(n, _)| n.clone()).collect(),
            kernel: group_choices(model, &k),
            superstructure: group_choices(model, &s),
            strategy: strategy_name(cfg.strategy).to_owned(),
            results,
            median,
        },
        code,
    ))
}

/// Report for a model file that failed to load.
pub fn load_error_report(e: &Error) -> String {
    let mut out = format!("error {}: {e}\n", e.code());
    if let Error::Validation(r) = e {
        for issue in &r.errors {
            out.push_str(&format!("  {} {}: {}\n", issue.code, issue.subject, issue.message));
        }
    }
    out
}
