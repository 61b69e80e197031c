//! Rooted hypernym trees and path-based similarity between their nodes.
//!
//! A taxonomy file is UTF-8 text with one `parent<TAB>child` edge per line.
//! Blank lines and lines starting with `#` are skipped. The parsed tree is
//! canonical: node order is lexicographic, so any permutation of the edge
//! lines produces an identical [`Taxonomy`].
//!
//! Similarity between two nodes is `1 / (1 + d)` where `d` is the number of
//! edges on the unique tree path between them. Callers that want a different
//! similarity in `(0, 1]` can build a weight matrix from their own scores.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("line {line}: taxonomy input contains no edges")]
    EmptyInput { line: usize },
    #[error("line {line}: expected `parent<TAB>child`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: edge {parent} -> {child} appears twice")]
    DuplicateEdge {
        line: usize,
        parent: String,
        child: String,
    },
    #[error(
        "line {line}: node {child} already has parent {existing}, cannot also hang under {parent}"
    )]
    MultipleParents {
        line: usize,
        child: String,
        existing: String,
        parent: String,
    },
    #[error("line {line}: cycle through node {node}")]
    CycleDetected { line: usize, node: String },
    #[error("line {line}: second root {root} (first root is {first})")]
    MultipleRoots {
        line: usize,
        root: String,
        first: String,
    },
    #[error("line {line}: node {node} is not in the taxonomy")]
    UnknownNodeReference { line: usize, node: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("line {line}: {message}")]
    LabelMap { line: usize, message: String },
}

impl TaxonomyError {
    /// Stable machine-readable code for this error.
    pub fn kind(&self) -> &'static str {
        match self {
            TaxonomyError::EmptyInput { .. } => "empty-input",
            TaxonomyError::Malformed { .. } => "malformed-line",
            TaxonomyError::DuplicateEdge { .. } => "duplicate-edge",
            TaxonomyError::MultipleParents { .. } => "multiple-parents",
            TaxonomyError::CycleDetected { .. } => "cycle-detected",
            TaxonomyError::MultipleRoots { .. } => "multiple-roots",
            TaxonomyError::UnknownNodeReference { .. } => "unknown-node-reference",
            TaxonomyError::UnknownNode(_) => "unknown-node",
            TaxonomyError::LabelMap { .. } => "invalid-label-map",
        }
    }
}

/// An immutable rooted tree over string node identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    root: usize,
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

impl Taxonomy {
    /// Parses the tab-separated edge-list format.
    pub fn parse(text: &str) -> Result<Self, TaxonomyError> {
        // child -> (parent, line of the edge)
        let mut parent_of: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
        let mut nodes: BTreeSet<&str> = BTreeSet::new();
        let mut last_line = 0;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let trimmed = raw.strip_suffix('\r').unwrap_or(raw);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split('\t');
            let (parent, child) = match (fields.next(), fields.next(), fields.next()) {
                (Some(p), Some(c), None) if valid_identifier(p) && valid_identifier(c) => (p, c),
                _ => {
                    return Err(TaxonomyError::Malformed {
                        line,
                        text: trimmed.to_string(),
                    })
                }
            };
            if let Some(&(existing, _)) = parent_of.get(child) {
                if existing == parent {
                    return Err(TaxonomyError::DuplicateEdge {
                        line,
                        parent: parent.to_string(),
                        child: child.to_string(),
                    });
                }
                return Err(TaxonomyError::MultipleParents {
                    line,
                    child: child.to_string(),
                    existing: existing.to_string(),
                    parent: parent.to_string(),
                });
            }
            parent_of.insert(child, (parent, line));
            nodes.insert(parent);
            nodes.insert(child);
        }

        if nodes.is_empty() {
            return Err(TaxonomyError::EmptyInput {
                line: last_line.max(1),
            });
        }

        let names: Vec<String> = nodes.iter().map(|s| s.to_string()).collect();
        let index: HashMap<String, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let parent: Vec<Option<usize>> = names
            .iter()
            .map(|n| parent_of.get(n.as_str()).map(|(p, _)| index[*p]))
            .collect();

        // Every node has at most one parent, so a walk up the parent chain
        // either reaches a root or revisits a node.
        let mut state = vec![0u8; names.len()]; // 0 unseen, 1 on current walk, 2 done
        for start in 0..names.len() {
            let mut walk = Vec::new();
            let mut cur = Some(start);
            while let Some(v) = cur {
                match state[v] {
                    2 => break,
                    1 => {
                        let line = parent_of[names[v].as_str()].1;
                        return Err(TaxonomyError::CycleDetected {
                            line,
                            node: names[v].clone(),
                        });
                    }
                    _ => {
                        state[v] = 1;
                        walk.push(v);
                        cur = parent[v];
                    }
                }
            }
            for v in walk {
                state[v] = 2;
            }
        }

        let roots: Vec<usize> = (0..names.len()).filter(|&v| parent[v].is_none()).collect();
        if roots.len() > 1 {
            // Report the line where the second root first appears as a parent.
            let first_line = |r: usize| {
                parent_of
                    .values()
                    .filter(|(p, _)| *p == names[r])
                    .map(|(_, l)| *l)
                    .min()
                    .unwrap_or(0)
            };
            let mut by_line: Vec<(usize, usize)> =
                roots.iter().map(|&r| (first_line(r), r)).collect();
            by_line.sort();
            return Err(TaxonomyError::MultipleRoots {
                line: by_line[1].0,
                root: names[by_line[1].1].clone(),
                first: names[by_line[0].1].clone(),
            });
        }
        let root = roots[0];

        let mut depth = vec![usize::MAX; names.len()];
        depth[root] = 0;
        for v in 0..names.len() {
            let mut chain = Vec::new();
            let mut cur = v;
            while depth[cur] == usize::MAX {
                chain.push(cur);
                cur = parent[cur].expect("non-root nodes have parents");
            }
            let mut d = depth[cur];
            for &u in chain.iter().rev() {
                d += 1;
                depth[u] = d;
            }
        }

        Ok(Taxonomy {
            names,
            index,
            parent,
            depth,
            root,
        })
    }

    pub fn root(&self) -> &str {
        &self.names[self.root]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, node: &str) -> bool {
        self.index.contains_key(node)
    }

    /// Node identifiers in canonical (lexicographic) order.
    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn parent(&self, node: &str) -> Result<Option<&str>, TaxonomyError> {
        let v = self.lookup(node)?;
        Ok(self.parent[v].map(|p| self.names[p].as_str()))
    }

    /// `(parent, child)` pairs in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(move |(c, p)| p.map(|p| (self.names[p].as_str(), self.names[c].as_str())))
    }

    pub fn depth(&self, node: &str) -> Result<usize, TaxonomyError> {
        Ok(self.depth[self.lookup(node)?])
    }

    fn lookup(&self, node: &str) -> Result<usize, TaxonomyError> {
        self.index
            .get(node)
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownNode(node.to_string()))
    }

    /// Number of edges on the tree path between `a` and `b`.
    pub fn shortest_path_length(&self, a: &str, b: &str) -> Result<usize, TaxonomyError> {
        let (mut x, mut y) = (self.lookup(a)?, self.lookup(b)?);
        let mut steps = 0;
        while self.depth[x] > self.depth[y] {
            x = self.parent[x].expect("deeper node has a parent");
            steps += 1;
        }
        while self.depth[y] > self.depth[x] {
            y = self.parent[y].expect("deeper node has a parent");
            steps += 1;
        }
        while x != y {
            x = self.parent[x].expect("below the common ancestor");
            y = self.parent[y].expect("below the common ancestor");
            steps += 2;
        }
        Ok(steps)
    }

    /// `1 / (1 + d)`; exactly 1 for identical nodes.
    pub fn path_similarity(&self, a: &str, b: &str) -> Result<f64, TaxonomyError> {
        let d = self.shortest_path_length(a, b)?;
        Ok(1.0 / (1.0 + d as f64))
    }
}

/// One dataset class bound to a taxonomy node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelEntry {
    pub index: usize,
    pub name: String,
    pub node: String,
}

/// Binds class indices `0..n` to names and taxonomy nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    entries: Vec<LabelEntry>,
}

impl LabelMap {
    /// Builds a map from entries in any order; indices must be exactly `0..n`.
    pub fn new(mut entries: Vec<LabelEntry>) -> Result<Self, TaxonomyError> {
        if entries.is_empty() {
            return Err(TaxonomyError::LabelMap {
                line: 1,
                message: "label map has no classes".into(),
            });
        }
        entries.sort_by_key(|e| e.index);
        for (i, e) in entries.iter().enumerate() {
            if e.index != i {
                let message = if i > 0 && entries[i - 1].index == e.index {
                    format!("duplicate class index {}", e.index)
                } else {
                    format!("class index {i} missing")
                };
                return Err(TaxonomyError::LabelMap { line: 0, message });
            }
        }
        Ok(LabelMap { entries })
    }

    /// Parses the `index,name,node` CSV format.
    pub fn from_csv(text: &str) -> Result<Self, TaxonomyError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut entries = Vec::new();
        let mut seen_header = false;
        let mut seen_index: HashMap<usize, usize> = HashMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| TaxonomyError::LabelMap {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if !seen_header {
                let header: Vec<&str> = record.iter().collect();
                if header != ["index", "name", "node"] {
                    return Err(TaxonomyError::LabelMap {
                        line,
                        message: format!("expected header `index,name,node`, got {header:?}"),
                    });
                }
                seen_header = true;
                continue;
            }
            if record.len() != 3 {
                return Err(TaxonomyError::LabelMap {
                    line,
                    message: format!("expected 3 fields, got {}", record.len()),
                });
            }
            let index: usize = record[0].parse().map_err(|_| TaxonomyError::LabelMap {
                line,
                message: format!("bad class index {:?}", &record[0]),
            })?;
            if let Some(prev) = seen_index.insert(index, line) {
                return Err(TaxonomyError::LabelMap {
                    line,
                    message: format!("duplicate class index {index} (first on line {prev})"),
                });
            }
            if record[1].is_empty() || !valid_identifier(&record[2]) {
                return Err(TaxonomyError::LabelMap {
                    line,
                    message: "class name and node must be non-empty".into(),
                });
            }
            entries.push(LabelEntry {
                index,
                name: record[1].to_string(),
                node: record[2].to_string(),
            });
        }
        if !seen_header {
            return Err(TaxonomyError::LabelMap {
                line: 1,
                message: "missing header `index,name,node`".into(),
            });
        }
        LabelMap::new(entries)
    }

    /// Checks that every bound node exists in `tax`.
    pub fn check_nodes(&self, tax: &Taxonomy) -> Result<(), TaxonomyError> {
        // Data lines start after the header on line 1.
        for (i, e) in self.entries.iter().enumerate() {
            if !tax.contains(&e.node) {
                return Err(TaxonomyError::UnknownNodeReference {
                    line: i + 2,
                    node: e.node.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LabelEntry] {
        &self.entries
    }

    pub fn class_names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,name,node\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.index, e.name, e.node));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "root\tanimal\nroot\tvehicle\nanimal\tdog\nanimal\tcat\nvehicle\tcar";

    #[test]
    fn parses_toy_tree() {
        let tax = Taxonomy::parse(TOY).unwrap();
        assert_eq!(tax.len(), 6);
        assert_eq!(tax.root(), "root");
        assert_eq!(tax.parent("dog").unwrap(), Some("animal"));
        assert_eq!(tax.depth("car").unwrap(), 2);
    }

    #[test]
    fn toy_path_lengths_and_similarities() {
        let tax = Taxonomy::parse(TOY).unwrap();
        assert_eq!(tax.shortest_path_length("dog", "dog").unwrap(), 0);
        assert_eq!(tax.shortest_path_length("dog", "cat").unwrap(), 2);
        assert_eq!(tax.shortest_path_length("dog", "car").unwrap(), 4);
        assert_eq!(tax.path_similarity("dog", "dog").unwrap(), 1.0);
        assert_eq!(tax.path_similarity("dog", "cat").unwrap(), 1.0 / 3.0);
        assert_eq!(tax.path_similarity("dog", "car").unwrap(), 0.2);
    }

    #[test]
    fn comments_blank_lines_and_crlf() {
        let text = "# toy\n\nroot\tanimal\r\n\nanimal\tdog\n";
        let tax = Taxonomy::parse(text).unwrap();
        assert_eq!(tax.len(), 3);
    }

    #[test]
    fn two_node_cycle() {
        let err = Taxonomy::parse("a\tb\nb\ta").unwrap_err();
        assert_eq!(err.kind(), "cycle-detected");
    }

    #[test]
    fn self_loop_is_a_cycle() {
        assert_eq!(
            Taxonomy::parse("a\ta").unwrap_err().kind(),
            "cycle-detected"
        );
    }

    #[test]
    fn detached_cycle_beside_a_root() {
        let err = Taxonomy::parse("r\tx\na\tb\nb\ta").unwrap_err();
        assert_eq!(err.kind(), "cycle-detected");
    }

    #[test]
    fn multiple_roots() {
        let err = Taxonomy::parse("r\tx\ns\ty").unwrap_err();
        assert_eq!(
            err,
            TaxonomyError::MultipleRoots {
                line: 2,
                root: "s".into(),
                first: "r".into()
            }
        );
    }

    #[test]
    fn duplicate_edge_reports_line() {
        let err = Taxonomy::parse("r\tx\n# c\nr\tx").unwrap_err();
        assert_eq!(
            err,
            TaxonomyError::DuplicateEdge {
                line: 3,
                parent: "r".into(),
                child: "x".into()
            }
        );
    }

    #[test]
    fn second_parent_rejected() {
        let err = Taxonomy::parse("r\tx\nr\ty\ny\tx").unwrap_err();
        assert_eq!(err.kind(), "multiple-parents");
    }

    #[test]
    fn empty_and_comment_only_input() {
        assert_eq!(Taxonomy::parse("").unwrap_err().kind(), "empty-input");
        assert_eq!(
            Taxonomy::parse("# nothing\n\n").unwrap_err().kind(),
            "empty-input"
        );
    }

    #[test]
    fn malformed_lines() {
        assert_eq!(Taxonomy::parse("a b").unwrap_err().kind(), "malformed-line");
        assert_eq!(
            Taxonomy::parse("a\tb\tc").unwrap_err().kind(),
            "malformed-line"
        );
        assert_eq!(Taxonomy::parse("a\t").unwrap_err().kind(), "malformed-line");
        assert_eq!(
            Taxonomy::parse("a\tb c").unwrap_err().kind(),
            "malformed-line"
        );
    }

    #[test]
    fn unknown_node_query() {
        let tax = Taxonomy::parse(TOY).unwrap();
        assert_eq!(
            tax.path_similarity("dog", "wolf").unwrap_err(),
            TaxonomyError::UnknownNode("wolf".into())
        );
    }

    #[test]
    fn identifiers_are_case_sensitive() {
        let tax = Taxonomy::parse("root\tDog\nroot\tdog").unwrap();
        assert_eq!(tax.shortest_path_length("Dog", "dog").unwrap(), 2);
    }

    #[test]
    fn label_map_round_trip() {
        let text = "index,name,node\n1,cat,cat\n0,dog,dog\n2,car,car\n";
        let map = LabelMap::from_csv(text).unwrap();
        assert_eq!(map.class_names(), ["dog", "cat", "car"]);
        assert_eq!(LabelMap::from_csv(&map.to_csv()).unwrap(), map);
        map.check_nodes(&Taxonomy::parse(TOY).unwrap()).unwrap();
    }

    #[test]
    fn label_map_errors() {
        let gap = LabelMap::from_csv("index,name,node\n0,a,a\n2,b,b\n").unwrap_err();
        assert!(gap.to_string().contains("missing"));
        let dup = LabelMap::from_csv("index,name,node\n0,a,a\n0,b,b\n").unwrap_err();
        assert!(dup.to_string().contains("duplicate"));
        let header = LabelMap::from_csv("idx,name,node\n0,a,a\n").unwrap_err();
        assert!(header.to_string().contains("header"));

        let tax = Taxonomy::parse(TOY).unwrap();
        let map = LabelMap::from_csv("index,name,node\n0,dog,dog\n1,wolf,wolf\n").unwrap();
        assert_eq!(
            map.check_nodes(&tax).unwrap_err(),
            TaxonomyError::UnknownNodeReference {
                line: 3,
                node: "wolf".into()
            }
        );
    }
}
