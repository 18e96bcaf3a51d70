use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use super::{AnnotationError, Upos};

const BUNDLED: &str = include_str!("../../data/penn-universal.tsv");

/// Fine-grained (Penn Treebank) to universal tag reduction.
///
/// Stored as a plain two-column text file: `fine_tag<TAB>upos`, `#` comments
/// allowed. Tags missing from the table map to [`Upos::X`].
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalMap {
    table: HashMap<String, Upos>,
}

impl UniversalMap {
    pub fn parse(text: &str) -> Result<Self, AnnotationError> {
        let mut table = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(fine), Some(coarse), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(AnnotationError::Malformed {
                    what: "universal mapping",
                    detail: format!("line {}: expected two tab-separated columns", lineno + 1),
                });
            };
            table.insert(fine.trim().to_string(), coarse.trim().parse()?);
        }
        Ok(UniversalMap { table })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The shipped Penn-to-universal table.
    pub fn bundled() -> &'static UniversalMap {
        static MAP: OnceLock<UniversalMap> = OnceLock::new();
        MAP.get_or_init(|| UniversalMap::parse(BUNDLED).expect("bundled mapping is well formed"))
    }

    pub fn map(&self, fine_tag: &str) -> Upos {
        self.table.get(fine_tag).copied().unwrap_or(Upos::X)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Maps a Penn Treebank tag through the bundled table.
pub fn map_to_universal(fine_tag: &str) -> Upos {
    UniversalMap::bundled().map(fine_tag)
}
