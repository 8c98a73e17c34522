//! Rearrangement instances: the R/S/D/M generators and the on-disk format.

mod gen;
mod io;

pub use gen::{default_suite, gen_double_cycle, gen_mixed, gen_random, gen_single_cycle, SuiteEntry};
pub use io::{format_instance, load, parse_instance, save, InstanceError, FORMAT_VERSION};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::depgraph::{build_dependency_graph, Arrangement, DepGraph, DepGraphError, ObjectShape};
use crate::geom::Workspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    /// Random start and goal arrangements.
    R,
    /// One dependency cycle.
    S,
    /// Two vertex-disjoint dependency cycles.
    D,
    /// Fixed mixture of isolated objects, a chain and two cycles.
    M,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::R, Category::S, Category::D, Category::M];

    pub fn letter(self) -> char {
        match self {
            Category::R => 'R',
            Category::S => 'S',
            Category::D => 'D',
            Category::M => 'M',
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "R" | "r" => Ok(Category::R),
            "S" | "s" => Ok(Category::S),
            "D" | "d" => Ok(Category::D),
            "M" | "m" => Ok(Category::M),
            _ => Err(format!("unknown category `{s}` (expected R, S, D or M)")),
        }
    }
}

/// Category plus index. For R, S and D the index is the object count; for M
/// it is an ordinal, since every mixed instance has 12 objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub category: Category,
    pub index: usize,
}

impl Label {
    pub fn new(category: Category, index: usize) -> Self {
        Self { category, index }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.category, self.index)
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let cat = chars
            .next()
            .ok_or_else(|| "empty label".to_string())?
            .to_string()
            .parse()?;
        let index = chars
            .as_str()
            .parse()
            .map_err(|_| format!("bad label index in `{s}`"))?;
        Ok(Label::new(cat, index))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("generation exhausted after {attempts} attempts for {what}")]
    GenerationExhausted { what: String, attempts: usize },
    #[error("invalid generator argument: {0}")]
    InvalidArgument(String),
}

/// A start/goal pair of feasible arrangements over the same objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub label: Label,
    pub seed: u64,
    pub workspace: Workspace,
    pub shapes: Vec<ObjectShape>,
    pub start: Arrangement,
    pub goal: Arrangement,
}

impl Instance {
    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    /// File stem, e.g. `S7-0003`.
    pub fn name(&self) -> String {
        format!("{}-{:04}", self.label, self.seed)
    }

    /// Both arrangements are on-table, feasible and sized like `shapes`.
    pub fn validate(&self) -> Result<(), DepGraphError> {
        for (what, arr) in [("start", &self.start), ("goal", &self.goal)] {
            if arr.placements.iter().any(|p| p.pose().is_none()) {
                return Err(DepGraphError::InfeasibleArrangement(format!(
                    "{what} arrangement has a held object"
                )));
            }
            arr.check_feasible(&self.shapes, &self.workspace)
                .map_err(|DepGraphError::InfeasibleArrangement(m)| {
                    DepGraphError::InfeasibleArrangement(format!("{what}: {m}"))
                })?;
        }
        Ok(())
    }

    pub fn dependency_graph(&self) -> Result<DepGraph, DepGraphError> {
        build_dependency_graph(&self.start, &self.goal, &self.shapes, &self.workspace)
    }

    /// First 16 hex digits of the SHA-256 of the serialized instance.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format_instance(self).as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for s in ["R10", "S2", "D7", "M3"] {
            assert_eq!(s.parse::<Label>().unwrap().to_string(), s);
        }
        assert!("X3".parse::<Label>().is_err());
        assert!("S".parse::<Label>().is_err());
    }
}
