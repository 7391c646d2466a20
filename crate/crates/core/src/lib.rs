//! Hierarchical morphological design: ordinal ranking of design
//! alternatives, bottom-up combinatorial synthesis over a system tree, and
//! aggregation of the resulting solutions.

macro_rules! string_id {
    ($name:ident) => {
        #[derive(
            Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, ::serde::Serialize, ::serde::Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

pub mod aggregation;
pub mod error;
pub mod io;
pub mod model;
pub mod quality;
pub mod ranking;
pub mod synthesis;

pub use aggregation::{
    compress_superstructure, extend_kernel, kernel, mcp_exact, mcp_greedy, proximity, set_median, solve_mcp,
    superstructure, Aggregate, DeletionLimit, ItemTable, McpInstance, McpItem, McpMethod, McpSolution, Median,
    SelectionProfile, Strategy,
};
pub use error::{Error, Result};
pub use io::{parse_model, parse_model_str, sensor_model, to_model_string, Dataset, StoredSolution};
pub use model::{
    count_design_space, validate_model, CompatibilityMatrix, DaId, DesignAlternative, Issue, IssueCode, Node,
    NodeId, NodeKind, SystemModel, ValidationReport,
};
pub use quality::{pareto_front, pareto_layers, strictly_dominates, HasQuality, QualityVector};
pub use ranking::{
    concordance, discordance, outranking_graph, rank_group, rank_layers, CriterionId, CriterionSpec, EstimateTable,
    OutrankingGraph, Thresholds,
};
pub use synthesis::{
    assign_layer_priorities, brute_force_synthesize, synthesize, BruteForce, Choice, CompositeDa, CompositeSolution,
    NodeFront, QualityMode, Synthesis, SynthesisConfig, DEFAULT_BRUTE_CAP,
};
