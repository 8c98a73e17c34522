//! `sdar gen`: write generated instances to disk.

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use sdar_core::instances::{default_suite, save, GenerationError, SuiteEntry};
use sdar_core::{Category, Instance};

use crate::{CliError, CliResult};

/// Objects in every mixed instance.
pub const MIXED_OBJECTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenTarget {
    Category(Category),
    /// The full default benchmark suite.
    Suite,
}

impl std::str::FromStr for GenTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("suite") {
            return Ok(GenTarget::Suite);
        }
        s.parse::<Category>()
            .map(GenTarget::Category)
            .map_err(|_| format!("expected one of R, S, D, M or `suite`, got `{s}`"))
    }
}

/// Suite entries for a `gen` invocation.
///
/// Replicates of R/S/D use consecutive seeds starting at `seed`; mixed
/// instances are numbered from 1 and use `seed + index - 1`, like the
/// default suite.
pub fn entries(target: GenTarget, n: Option<usize>, count: usize, seed: u64) -> CliResult<Vec<SuiteEntry>> {
    let category = match target {
        GenTarget::Suite => return Ok(default_suite(seed)),
        GenTarget::Category(c) => c,
    };
    if count == 0 {
        return Err(CliError::Input(anyhow!("--count must be at least 1")));
    }
    let entries = match category {
        Category::M => {
            if n.is_some_and(|n| n != MIXED_OBJECTS) {
                return Err(CliError::Input(anyhow!(
                    "mixed instances always have {MIXED_OBJECTS} objects"
                )));
            }
            (1..=count)
                .map(|m| SuiteEntry {
                    category,
                    index: m,
                    seed: seed + m as u64 - 1,
                })
                .collect()
        }
        _ => {
            let n = n.ok_or_else(|| CliError::Input(anyhow!("category {category} needs an object count")))?;
            (0..count as u64)
                .map(|r| SuiteEntry {
                    category,
                    index: n,
                    seed: seed + r,
                })
                .collect()
        }
    };
    Ok(entries)
}

pub fn generate(entries: &[SuiteEntry]) -> CliResult<Vec<Instance>> {
    entries
        .iter()
        .map(|e| {
            e.generate().map_err(|err| match err {
                GenerationError::InvalidArgument(_) => CliError::input(err),
                GenerationError::GenerationExhausted { .. } => CliError::Planning(err.to_string()),
            })
        })
        .collect()
}

/// Writes `<name>.inst` for every instance and returns the paths.
pub fn write_all(instances: &[Instance], out: &Path) -> CliResult<Vec<PathBuf>> {
    instances
        .iter()
        .map(|inst| {
            let path = out.join(format!("{}.inst", inst.name()));
            save(inst, &path).map_err(CliError::input)?;
            Ok(path)
        })
        .collect()
}

/// One manifest line per instance: name, object count, hash, path.
pub fn manifest(instances: &[Instance], paths: &[PathBuf]) -> String {
    let mut out = String::new();
    for (inst, path) in instances.iter().zip(paths) {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            inst.name(),
            inst.len(),
            inst.hash(),
            path.display()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_entries_number_from_one() {
        let e = entries(GenTarget::Category(Category::M), None, 3, 10).unwrap();
        assert_eq!(e.iter().map(|e| (e.index, e.seed)).collect::<Vec<_>>(), [(1, 10), (2, 11), (3, 12)]);
    }

    #[test]
    fn replicates_use_consecutive_seeds() {
        let e = entries(GenTarget::Category(Category::S), Some(7), 2, 3).unwrap();
        assert_eq!(e.iter().map(|e| (e.index, e.seed)).collect::<Vec<_>>(), [(7, 3), (7, 4)]);
    }

    #[test]
    fn bad_requests_are_input_errors() {
        let code = |r: CliResult<Vec<SuiteEntry>>| r.unwrap_err().exit_code();
        assert_eq!(code(entries(GenTarget::Category(Category::R), None, 1, 0)), crate::EXIT_INPUT);
        assert_eq!(code(entries(GenTarget::Category(Category::M), Some(5), 1, 0)), crate::EXIT_INPUT);
        assert_eq!(code(entries(GenTarget::Category(Category::S), Some(4), 0, 0)), crate::EXIT_INPUT);
        let bad = entries(GenTarget::Category(Category::S), Some(1), 1, 0).unwrap();
        assert_eq!(generate(&bad).unwrap_err().exit_code(), crate::EXIT_INPUT);
    }

    #[test]
    fn targets_parse() {
        assert_eq!("suite".parse(), Ok(GenTarget::Suite));
        assert_eq!("d".parse(), Ok(GenTarget::Category(Category::D)));
        assert!("X".parse::<GenTarget>().is_err());
    }
}
