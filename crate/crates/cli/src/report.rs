//! Run reports and their text and machine renderings.

use std::fmt::Write as _;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub model: ModelSummary,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<GroupRanking>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSummary {
    pub name: String,
    pub groups: usize,
    pub alternatives: usize,
    pub design_space: String,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub priorities: String,
    pub concordance_min: f64,
    pub discordance_max: f64,
    pub propagate_layers: usize,
    pub quality_mode: String,
    pub strategy: String,
    pub mcp: String,
    pub budgets: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deletions: Option<usize>,
    pub brute_cap: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupRanking {
    pub group: String,
    pub criteria: Vec<String>,
    pub arcs: Vec<(String, String)>,
    pub alternatives: Vec<RankedDa>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedDa {
    pub da: String,
    pub layer: usize,
    pub priority: u32,
    pub file_priority: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionRow {
    pub name: String,
    /// Child choices, e.g. `H1*W1`.
    pub composition: String,
    /// Leaf DAs in model order, e.g. `R3*P3*D2*Q4`.
    pub profile: String,
    pub quality: String,
    pub w: u32,
    pub n: Vec<u32>,
    pub priority: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontReport {
    pub node: String,
    pub label: String,
    pub admissible: usize,
    pub front: Vec<SolutionRow>,
    pub propagated: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FlatCheck {
    Done { enumerated: String, front_size: usize, same_profiles: bool },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub fronts: Vec<FrontReport>,
    pub root: Vec<SolutionRow>,
    pub flat_check: FlatCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupChoice {
    pub group: String,
    pub das: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    pub picks: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MedianReport {
    pub name: String,
    pub profile: String,
    pub total_distance: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregationReport {
    pub source: String,
    pub solutions: Vec<String>,
    pub kernel: Vec<GroupChoice>,
    pub superstructure: Vec<GroupChoice>,
    pub strategy: String,
    pub results: Vec<AggregateRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median: Option<MedianReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub ranking_ms: f64,
    pub synthesis_ms: f64,
    pub aggregation_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorReport {
    pub code: String,
    pub message: String,
}

impl From<&morph_core::Error> for ErrorReport {
    fn from(e: &morph_core::Error) -> Self {
        ErrorReport {
            code: e.code().to_owned(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Machine,
}

pub fn render_report(report: &RunReport, format: Format) -> String {
    match format {
        Format::Machine => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => render_text(report),
    }
}

fn num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn choices(rows: &[GroupChoice]) -> String {
    rows.iter()
        .map(|g| {
            if g.das.is_empty() {
                format!("{}: -", g.group)
            } else {
                format!("{}: {}", g.group, g.das.join(","))
            }
        })
        .collect::<Vec<_>>()
        .join("  ")
}

fn solution_table(out: &mut String, rows: &[SolutionRow]) {
    let name_w = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let comp_w = rows.iter().map(|r| r.composition.len()).max().unwrap_or(0);
    let prof_w = rows.iter().map(|r| r.profile.len()).max().unwrap_or(0);
    let show_composition = rows.iter().any(|r| r.composition != r.profile);
    for r in rows {
        if show_composition {
            let _ = writeln!(
                out,
                "    {:name_w$}  {:comp_w$}  {:prof_w$}  {}  priority {}",
                r.name, r.composition, r.profile, r.quality, r.priority
            );
        } else {
            let _ = writeln!(out, "    {:name_w$}  {:prof_w$}  {}  priority {}", r.name, r.profile, r.quality, r.priority);
        }
    }
}

fn render_text(r: &RunReport) -> String {
    let mut out = String::new();
    let m = &r.model;
    let _ = writeln!(
        out,
        "model: {} ({} groups, {} alternatives, design space {})",
        m.name, m.groups, m.alternatives, m.design_space
    );
    for w in &m.warnings {
        let _ = writeln!(out, "warning: {w}");
    }

    if let Some(ranking) = &r.ranking {
        let _ = writeln!(
            out,
            "\nranking (p = {}, q = {})",
            num(r.config.concordance_min),
            num(r.config.discordance_max)
        );
        for g in ranking {
            let row: Vec<String> = g
                .alternatives
                .iter()
                .map(|d| {
                    if d.priority == d.file_priority {
                        format!("{}:{}", d.da, d.priority)
                    } else {
                        format!("{}:{} (file {})", d.da, d.priority, d.file_priority)
                    }
                })
                .collect();
            let _ = writeln!(out, "  {}  [{}]  {}", g.group, g.criteria.join(","), row.join("  "));
        }
    }

    if let Some(s) = &r.synthesis {
        let _ = writeln!(out, "\nsynthesis (priorities from {})", r.config.priorities);
        for f in &s.fronts {
            let _ = writeln!(
                out,
                "  node {} {}: {} admissible, {} efficient",
                f.node,
                f.label,
                f.admissible,
                f.front.len()
            );
            if f.front.is_empty() {
                let _ = writeln!(out, "    no admissible compositions");
            }
            solution_table(&mut out, &f.front);
        }
        let _ = writeln!(out, "  root solutions: {}", s.root.len());
        if s.root.is_empty() {
            let _ = writeln!(out, "    no admissible compositions");
        }
        solution_table(&mut out, &s.root);
        match &s.flat_check {
            FlatCheck::Done {
                enumerated,
                front_size,
                same_profiles,
            } => {
                let _ = writeln!(
                    out,
                    "  flat check: {enumerated} profiles enumerated, {front_size} efficient, {}",
                    if *same_profiles { "same profiles" } else { "different profiles" }
                );
            }
            FlatCheck::Skipped { reason } => {
                let _ = writeln!(out, "  flat check skipped: {reason}");
            }
        }
    }

    if let Some(a) = &r.aggregation {
        let _ = writeln!(out, "\naggregation of {} solutions ({})", a.solutions.len(), a.source);
        let _ = writeln!(out, "  kernel:         {}", choices(&a.kernel));
        let _ = writeln!(out, "  superstructure: {}", choices(&a.superstructure));
        if a.strategy == "median" {
            let _ = writeln!(out, "  strategy: median");
        } else {
            let _ = writeln!(out, "  strategy: {} ({})", a.strategy, r.config.mcp);
        }
        for row in &a.results {
            let head = match row.budget {
                Some(b) => format!("budget {}", num(b)),
                None => "unbounded".to_owned(),
            };
            match (&row.profile, &row.error) {
                (Some(p), _) => {
                    let _ = writeln!(
                        out,
                        "    {head}: {p}  picks {}  cost {}  profit {}",
                        if row.picks.is_empty() { "-".to_owned() } else { row.picks.join(",") },
                        num(row.cost.unwrap_or(0.0)),
                        num(row.profit.unwrap_or(0.0))
                    );
                }
                (None, Some(e)) => {
                    let _ = writeln!(out, "    {head}: {} {}", e.code, e.message);
                }
                (None, None) => {
                    let _ = writeln!(out, "    {head}: {}", row.status);
                }
            }
        }
        if let Some(med) = &a.median {
            let _ = writeln!(
                out,
                "    median: {} {}  total distance {}",
                med.name, med.profile, med.total_distance
            );
        }
    }

    if let Some(t) = &r.timing {
        let _ = writeln!(
            out,
            "\ntiming: ranking {:.3} ms, synthesis {:.3} ms, aggregation {:.3} ms",
            t.ranking_ms, t.synthesis_ms, t.aggregation_ms
        );
    }
    if let Some(e) = &r.error {
        let _ = writeln!(out, "\nerror {}: {}", e.code, e.message);
    }
    out
}
