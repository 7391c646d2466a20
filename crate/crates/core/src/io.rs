//! Model files: a JSON document with `model`, `criteria`, `compatibility`
//! and `aggregation` sections. Unknown keys are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregation::{ItemTable, SelectionProfile};
use crate::error::{Error, Result};
use crate::model::{
    validate_model, CompatibilityMatrix, DaId, DesignAlternative, IssueCode, Node, NodeId, SystemModel,
    ValidationReport,
};
use crate::ranking::{CriterionId, CriterionSpec, EstimateTable};

const SENSOR_MODEL: &str = include_str!("../data/sensor.model");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    model: ModelSection,
    #[serde(default)]
    criteria: CriteriaSection,
    #[serde(default)]
    compatibility: Vec<ScopeSection>,
    #[serde(default)]
    aggregation: AggregationSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    #[serde(default)]
    name: String,
    k: u32,
    l: u32,
    root: String,
    nodes: Vec<NodeSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSection {
    id: String,
    #[serde(default)]
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alternatives: Option<Vec<AlternativeSection>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlternativeSection {
    id: String,
    #[serde(default)]
    name: String,
    priority: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriteriaSection {
    #[serde(default)]
    specs: Vec<CriterionSpec>,
    #[serde(default)]
    estimates: Vec<EstimateRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateRow {
    da: String,
    values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScopeSection {
    scope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<u32>,
    #[serde(default)]
    entries: Vec<(String, String, u32)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AggregationSection {
    #[serde(default)]
    items: Vec<ItemRow>,
    #[serde(default)]
    budgets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    solutions: Vec<StoredSolution>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemRow {
    da: String,
    cost: f64,
    profit: f64,
}

/// A named single-valued solution kept in the model file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredSolution {
    pub name: String,
    pub profile: BTreeMap<NodeId, DaId>,
}

impl StoredSolution {
    pub fn selection(&self) -> SelectionProfile {
        SelectionProfile::from_leaf_profile(&self.profile)
    }
}

/// Everything a model file describes.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub model: SystemModel,
    pub criteria: Vec<CriterionSpec>,
    pub estimates: BTreeMap<(DaId, CriterionId), f64>,
    pub items: ItemTable,
    pub budgets: Vec<f64>,
    pub solutions: Vec<StoredSolution>,
}

impl Dataset {
    /// Criteria estimates restricted to one group.
    pub fn estimate_table(&self, group: &NodeId) -> Result<EstimateTable> {
        let node = self
            .model
            .node(group)
            .filter(|n| n.is_group())
            .ok_or_else(|| Error::UnknownNode(group.clone()))?;
        let das: Vec<DaId> = node.alternatives.iter().map(|d| d.id.clone()).collect();
        let mut table = EstimateTable::new(group.clone(), das.clone(), self.criteria.clone());
        for ((da, c), v) in &self.estimates {
            if das.contains(da) {
                table.set(da.clone(), c.clone(), *v);
            }
        }
        Ok(table)
    }

    /// A copy of the model with the given priorities replacing the stored ones.
    pub fn with_priorities(&self, priorities: &BTreeMap<DaId, u32>) -> SystemModel {
        let mut model = self.model.clone();
        for da in model.nodes.iter_mut().flat_map(|n| n.alternatives.iter_mut()) {
            if let Some(&p) = priorities.get(&da.id) {
                da.priority = p;
            }
        }
        model
    }
}

pub fn parse_model(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_model_str(&text)
}

pub fn parse_model_str(text: &str) -> Result<Dataset> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: full.strip_suffix(&suffix).unwrap_or(&full).to_owned(),
        }
    })?;
    build(file)
}

/// The bundled sensor-system dataset.
pub fn sensor_model() -> Dataset {
    parse_model_str(SENSOR_MODEL).expect("bundled dataset is valid")
}

pub fn sensor_model_text() -> &'static str {
    SENSOR_MODEL
}

fn build(file: ModelFile) -> Result<Dataset> {
    let mut report = ValidationReport::default();

    let nodes: Vec<Node> = file
        .model
        .nodes
        .iter()
        .map(|n| match (&n.children, &n.alternatives) {
            (_, Some(alts)) => {
                let mut node = Node::group(n.id.as_str(), n.label.as_str(), Vec::new());
                node.children = n.children.iter().flatten().map(|c| NodeId::from(c.as_str())).collect();
                node.alternatives = alts
                    .iter()
                    .map(|a| DesignAlternative {
                        id: a.id.as_str().into(),
                        group: node.id.clone(),
                        name: a.name.clone(),
                        priority: a.priority,
                    })
                    .collect();
                node
            }
            (children, None) => Node::composite(
                n.id.as_str(),
                n.label.as_str(),
                children.iter().flatten().map(|c| NodeId::from(c.as_str())).collect(),
            ),
        })
        .collect();

    let mut compat = Vec::new();
    for s in &file.compatibility {
        let mut m = CompatibilityMatrix::new(s.scope.as_str());
        m.default = s.default;
        for (a, b, w) in &s.entries {
            let key = (DaId::from(a.as_str()), DaId::from(b.as_str()));
            match m.entries.get(&key) {
                Some(old) if old != w => report.error(
                    IssueCode::AsymmetricCompat,
                    format!("{a}-{b}"),
                    format!("pair {a}-{b} listed twice with values {old} and {w} in scope {}", s.scope),
                ),
                _ => {
                    m.set(a.as_str(), b.as_str(), *w);
                }
            }
        }
        compat.push(m);
    }

    let model = SystemModel {
        root: file.model.root.as_str().into(),
        nodes,
        k: file.model.k,
        l: file.model.l,
        compat,
    };
    let structural = validate_model(&model);
    report.errors.extend(structural.errors);
    report.warnings.extend(structural.warnings);

    let known_das: BTreeSet<DaId> = model
        .nodes
        .iter()
        .flat_map(|n| n.alternatives.iter().map(|d| d.id.clone()))
        .collect();

    let mut criteria_ids = BTreeSet::new();
    for c in &file.criteria.specs {
        if !criteria_ids.insert(c.id.clone()) {
            report.error(IssueCode::DuplicateCriterion, &c.id, format!("criterion {} defined twice", c.id));
        }
        if c.weight == 0.0 || !c.weight.is_finite() {
            report.error(IssueCode::BadItem, &c.id, format!("criterion {} has weight {}", c.id, c.weight));
        }
    }
    let mut estimates = BTreeMap::new();
    for row in &file.criteria.estimates {
        let da = DaId::from(row.da.as_str());
        if !known_das.contains(&da) {
            report.error(IssueCode::EstimateUnknownDa, &da, format!("estimates given for unknown DA {da}"));
        }
        for (c, v) in &row.values {
            let c = CriterionId::from(c.as_str());
            if !criteria_ids.contains(&c) {
                report.error(IssueCode::UnknownCriterion, &c, format!("estimate of {da} on undefined criterion {c}"));
            }
            if !v.is_finite() {
                report.error(IssueCode::BadItem, &da, format!("estimate of {da} on {c} is not finite"));
            }
            estimates.insert((da.clone(), c), *v);
        }
    }

    let mut items = ItemTable::new();
    for row in &file.aggregation.items {
        let da = DaId::from(row.da.as_str());
        if !known_das.contains(&da) {
            report.error(IssueCode::ItemUnknownDa, &da, format!("cost/profit given for unknown DA {da}"));
        }
        if !(row.cost >= 0.0 && row.cost.is_finite()) || !row.profit.is_finite() {
            report.error(
                IssueCode::BadItem,
                &da,
                format!("{da} has cost {} and profit {}", row.cost, row.profit),
            );
        }
        if items.insert(da.clone(), (row.cost, row.profit)).is_some() {
            report.error(IssueCode::DuplicateItem, &da, format!("cost/profit for {da} given twice"));
        }
    }
    for b in &file.aggregation.budgets {
        if !(*b >= 0.0 && b.is_finite()) {
            report.error(IssueCode::BadItem, "budgets", format!("budget {b} must be nonnegative"));
        }
    }

    let groups: BTreeSet<NodeId> = model.leaf_groups().iter().map(|g| g.id.clone()).collect();
    for s in &file.aggregation.solutions {
        let covered: BTreeSet<NodeId> = s.profile.keys().cloned().collect();
        let members_ok = s
            .profile
            .iter()
            .all(|(g, d)| model.da(d).is_some_and(|da| &da.group == g));
        if covered != groups || !members_ok {
            report.error(
                IssueCode::SolutionMismatch,
                &s.name,
                format!("solution {} must pick one DA of its own group for every leaf group", s.name),
            );
        }
    }

    report.into_result()?;
    Ok(Dataset {
        name: file.model.name,
        model,
        criteria: file.criteria.specs,
        estimates,
        items,
        budgets: file.aggregation.budgets,
        solutions: file.aggregation.solutions,
    })
}

/// Serializes a dataset back to model-file syntax.
pub fn to_model_string(ds: &Dataset) -> String {
    let model = &ds.model;
    let das_in_order: Vec<&DesignAlternative> = model.nodes.iter().flat_map(|n| n.alternatives.iter()).collect();
    let file = ModelFile {
        model: ModelSection {
            name: ds.name.clone(),
            k: model.k,
            l: model.l,
            root: model.root.to_string(),
            nodes: model
                .nodes
                .iter()
                .map(|n| NodeSection {
                    id: n.id.to_string(),
                    label: n.label.clone(),
                    children: (!n.is_group() || !n.children.is_empty())
                        .then(|| n.children.iter().map(|c| c.to_string()).collect()),
                    alternatives: n.is_group().then(|| {
                        n.alternatives
                            .iter()
                            .map(|a| AlternativeSection {
                                id: a.id.to_string(),
                                name: a.name.clone(),
                                priority: a.priority,
                            })
                            .collect()
                    }),
                })
                .collect(),
        },
        criteria: CriteriaSection {
            specs: ds.criteria.clone(),
            estimates: das_in_order
                .iter()
                .filter_map(|d| {
                    let values: BTreeMap<String, f64> = ds
                        .estimates
                        .iter()
                        .filter(|((da, _), _)| da == &d.id)
                        .map(|((_, c), v)| (c.to_string(), *v))
                        .collect();
                    (!values.is_empty()).then(|| EstimateRow {
                        da: d.id.to_string(),
                        values,
                    })
                })
                .collect(),
        },
        compatibility: model
            .compat
            .iter()
            .map(|m| ScopeSection {
                scope: m.scope.to_string(),
                default: m.default,
                entries: m
                    .entries
                    .iter()
                    .map(|((a, b), w)| (a.to_string(), b.to_string(), *w))
                    .collect(),
            })
            .collect(),
        aggregation: AggregationSection {
            items: das_in_order
                .iter()
                .filter_map(|d| {
                    ds.items.get(&d.id).map(|&(cost, profit)| ItemRow {
                        da: d.id.to_string(),
                        cost,
                        profit,
                    })
                })
                .collect(),
            budgets: ds.budgets.clone(),
            solutions: ds.solutions.clone(),
        },
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model file serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
      "model": {"k": 2, "l": 3, "root": "S", "nodes": [
        {"id": "S", "children": ["A", "B"]},
        {"id": "A", "alternatives": [{"id": "A1", "priority": 1}, {"id": "A2", "priority": 2}]},
        {"id": "B", "alternatives": [{"id": "B1", "priority": 1}]}
      ]},
      "compatibility": [{"scope": "S", "entries": [["A1", "B1", 3], ["A2", "B1", 1]]}]
    }"#;

    #[test]
    fn parses_minimal_file() {
        let ds = parse_model_str(TINY).unwrap();
        assert_eq!(ds.model.leaf_groups().len(), 2);
        assert_eq!(ds.model.compat(&"B1".into(), &"A2".into()).unwrap(), 1);
        assert!(ds.items.is_empty());
    }

    #[test]
    fn empty_input_is_a_parse_error() {
        let err = parse_model_str("").unwrap_err();
        assert_eq!(err.code(), "PARSE_ERROR");
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_model_str("{\n  \"model\": ,\n}").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = TINY.replacen("\"k\": 2", "\"k\": 2, \"extra\": 1", 1);
        assert_eq!(parse_model_str(&text).unwrap_err().code(), "PARSE_ERROR");
    }

    #[test]
    fn asymmetric_entry_is_a_validation_error() {
        let text = TINY.replacen("[\"A2\", \"B1\", 1]", "[\"A2\", \"B1\", 1], [\"B1\", \"A1\", 2]", 1);
        match parse_model_str(&text).unwrap_err() {
            Error::Validation(r) => assert!(r.has(IssueCode::AsymmetricCompat)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let ds = parse_model_str(TINY).unwrap();
        let again = parse_model_str(&to_model_string(&ds)).unwrap();
        assert_eq!(ds, again);
    }
}
