use std::path::Path;

use facetopo_core::topology::SpanningTree;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::{Error, Result};

/// JSON form of a rooted tree. `parent[root]` is `-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub n: usize,
    pub root: usize,
    pub parent: Vec<i64>,
    pub children: Vec<Vec<usize>>,
    pub total_weight: f64,
}

impl From<&SpanningTree> for TreeFile {
    fn from(tree: &SpanningTree) -> Self {
        Self {
            n: tree.n(),
            root: tree.root(),
            parent: tree.parents().iter().map(|p| p.map_or(-1, |p| p as i64)).collect(),
            children: tree.child_lists().to_vec(),
            total_weight: tree.total_weight(),
        }
    }
}

impl TreeFile {
    pub fn into_tree(self) -> Result<SpanningTree> {
        let bad = |reason: String| Error::Core(facetopo_core::Error::Validation { what: "tree file", reason });
        if self.parent.len() != self.n || self.children.len() != self.n {
            return Err(bad(format!(
                "n = {} but parent has {} and children {} entries",
                self.n,
                self.parent.len(),
                self.children.len()
            )));
        }
        let parent = self
            .parent
            .iter()
            .enumerate()
            .map(|(v, &p)| match p {
                -1 => Ok(None),
                p if p >= 0 => Ok(Some(p as usize)),
                p => Err(bad(format!("parent[{v}] = {p}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpanningTree::from_parts(self.root, parent, self.children, self.total_weight)?)
    }
}

pub fn tree_to_json(tree: &SpanningTree) -> String {
    let mut text = serde_json::to_string_pretty(&TreeFile::from(tree)).expect("tree serializes");
    text.push('\n');
    text
}

/// Parses a tree; syntax errors carry line and column.
pub fn tree_from_json(text: &str) -> Result<SpanningTree> {
    let file: TreeFile = serde_json::from_str(text).map_err(Error::json(Path::new("<tree json>")))?;
    file.into_tree()
}

pub fn write_tree(path: &Path, tree: &SpanningTree) -> Result<()> {
    write_json(path, &TreeFile::from(tree))
}

pub fn read_tree(path: &Path) -> Result<SpanningTree> {
    read_json::<TreeFile>(path)?.into_tree()
}
