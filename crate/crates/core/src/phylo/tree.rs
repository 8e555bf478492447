use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub label: Option<String>,
    /// (neighbor, branch length)
    pub edges: Vec<(usize, f64)>,
}

/// Unrooted tree with branch lengths. Leaves carry labels; internal nodes
/// do not.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhyloTree {
    nodes: Vec<TreeNode>,
}

/// Bipartition encoded as a bitset over the sorted leaf labels, normalized to
/// the side that excludes the first label.
pub type Split = Vec<u64>;

impl PhyloTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_leaf(&mut self, label: impl Into<String>) -> usize {
        self.nodes.push(TreeNode {
            label: Some(label.into()),
            edges: Vec::new(),
        });
        self.nodes.len() - 1
    }

    pub fn add_internal(&mut self) -> usize {
        self.nodes.push(TreeNode {
            label: None,
            edges: Vec::new(),
        });
        self.nodes.len() - 1
    }

    pub fn connect(&mut self, a: usize, b: usize, len: f64) {
        self.nodes[a].edges.push((b, len));
        self.nodes[b].edges.push((a, len));
    }

    /// Turns a leaf into an unlabeled node; once isolated it is dropped by
    /// [`normalize`](Self::normalize).
    pub fn clear_label(&mut self, i: usize) {
        self.nodes[i].label = None;
    }

    pub fn disconnect(&mut self, a: usize, b: usize) -> Option<f64> {
        let pos = self.nodes[a].edges.iter().position(|e| e.0 == b)?;
        let (_, len) = self.nodes[a].edges.remove(pos);
        self.nodes[b].edges.retain(|e| e.0 != a);
        Some(len)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.nodes[i].label.is_some()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.label.is_some()).count()
    }

    /// Leaf labels in lexicographic order.
    pub fn leaf_labels(&self) -> Vec<String> {
        let mut v: Vec<String> = self.nodes.iter().filter_map(|n| n.label.clone()).collect();
        v.sort();
        v
    }

    pub fn find_leaf(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label.as_deref() == Some(label))
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.edges.len()).sum::<usize>() / 2
    }

    pub fn total_length(&self) -> f64 {
        self.nodes.iter().flat_map(|n| n.edges.iter().map(|e| e.1)).sum::<f64>() / 2.0
    }

    /// Drops isolated unlabeled nodes and splices out unlabeled nodes of
    /// degree two, summing the branch lengths they joined. Node ids are
    /// renumbered.
    pub fn normalize(&mut self) {
        while let Some(v) =
            (0..self.nodes.len()).find(|&v| self.nodes[v].label.is_none() && self.nodes[v].edges.len() == 2)
        {
            let (a, la) = self.nodes[v].edges[0];
            let (b, lb) = self.nodes[v].edges[1];
            self.disconnect(v, a);
            self.disconnect(v, b);
            self.connect(a, b, la + lb);
        }
        let keep: Vec<bool> = self
            .nodes
            .iter()
            .map(|n| n.label.is_some() || !n.edges.is_empty())
            .collect();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for (i, k) in keep.iter().enumerate() {
            if *k {
                remap[i] = next;
                next += 1;
            }
        }
        let nodes = std::mem::take(&mut self.nodes);
        self.nodes = nodes
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(mut n, _)| {
                for e in &mut n.edges {
                    e.0 = remap[e.0];
                }
                n
            })
            .collect();
    }

    /// Checks the unrooted-binary shape: connected, acyclic, labeled leaves
    /// of degree 1 and internal nodes of degree 3.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMsa(format!("malformed tree: {msg}")));
        if self.nodes.is_empty() {
            return bad("empty".into());
        }
        if self.edge_count() + 1 != self.nodes.len() {
            return bad(format!("{} nodes but {} edges", self.nodes.len(), self.edge_count()));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(w, len) in &self.nodes[v].edges {
                if !(len >= 0.0 && len.is_finite()) {
                    return bad(format!("branch length {len}"));
                }
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("disconnected".into());
        }
        for n in &self.nodes {
            let deg = n.edges.len();
            match &n.label {
                Some(l) if deg > 1 && self.nodes.len() > 2 => return bad(format!("leaf '{l}' has degree {deg}")),
                None if deg != 3 => return bad(format!("internal node of degree {deg}")),
                _ => {}
            }
        }
        Ok(())
    }

    /// Parent array and DFS preorder from `root`.
    pub(crate) fn orient(&self, root: usize) -> (Vec<usize>, Vec<f64>, Vec<usize>) {
        let mut parent = vec![usize::MAX; self.nodes.len()];
        let mut plen = vec![0.0; self.nodes.len()];
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![root];
        parent[root] = root;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &(w, len) in &self.nodes[v].edges {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    plen[w] = len;
                    stack.push(w);
                }
            }
        }
        (parent, plen, order)
    }

    /// Every edge as (split, length). Pendant edges give singleton splits.
    /// Edges that induce the same split (around degree-two nodes) are summed.
    pub fn split_lengths(&self) -> BTreeMap<Split, f64> {
        let labels = self.leaf_labels();
        let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let words = labels.len().div_ceil(64);
        let mut out = BTreeMap::new();
        let Some(root) = self.find_leaf(labels.first().map_or("", String::as_str)) else {
            return out;
        };
        let (parent, plen, order) = self.orient(root);
        let mut sets = vec![vec![0u64; words]; self.nodes.len()];
        for &v in order.iter().rev() {
            if let Some(l) = &self.nodes[v].label {
                let i = index[l.as_str()];
                sets[v][i / 64] |= 1 << (i % 64);
            }
            if v != root {
                let p = parent[v];
                let child = sets[v].clone();
                for (a, b) in sets[p].iter_mut().zip(&child) {
                    *a |= b;
                }
                if child.iter().any(|&w| w != 0) {
                    *out.entry(child).or_insert(0.0) += plen[v];
                }
            }
        }
        out
    }

    /// Non-trivial splits (both sides hold at least two leaves).
    pub fn splits(&self) -> BTreeSet<Split> {
        let n = self.leaf_count();
        self.split_lengths()
            .into_keys()
            .filter(|s| {
                let k: usize = s.iter().map(|w| w.count_ones() as usize).sum();
                k >= 2 && k + 2 <= n
            })
            .collect()
    }

    /// Newick text. The tree is rooted at the internal node next to the
    /// lexicographically smallest leaf; children are ordered by their
    /// smallest descendant label.
    pub fn to_newick(&self) -> String {
        let labels = self.leaf_labels();
        let Some(first) = labels.first().and_then(|l| self.find_leaf(l)) else {
            return ";".into();
        };
        if self.nodes.len() == 1 {
            return format!("{};", quote_label(&labels[0]));
        }
        let root = self.nodes[first].edges[0].0;
        if self.is_leaf(root) {
            let len = self.nodes[first].edges[0].1;
            return format!(
                "({}:{},{}:0);",
                quote_label(&labels[0]),
                fmt_len(len),
                quote_label(self.nodes[root].label.as_deref().unwrap_or_default())
            );
        }
        let (parent, plen, order) = self.orient(root);
        let mut min_label: Vec<Option<&str>> = vec![None; self.nodes.len()];
        for &v in order.iter().rev() {
            if let Some(l) = &self.nodes[v].label {
                min_label[v] = Some(l.as_str());
            }
            if v != root {
                let p = parent[v];
                let cand = min_label[v];
                if cand.is_some() && (min_label[p].is_none() || cand < min_label[p]) {
                    min_label[p] = cand;
                }
            }
        }
        let children = |v: usize| {
            let mut c: Vec<usize> = self.nodes[v]
                .edges
                .iter()
                .map(|e| e.0)
                .filter(|&w| w != root && parent[w] == v)
                .collect();
            c.sort_by(|&a, &b| min_label[a].cmp(&min_label[b]));
            c
        };
        let mut out = String::new();
        // explicit stack: (node, child cursor)
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(root, children(root), 0)];
        out.push('(');
        while let Some((v, kids, cursor)) = stack.last_mut() {
            if *cursor < kids.len() {
                let w = kids[*cursor];
                if *cursor > 0 {
                    out.push(',');
                }
                *cursor += 1;
                if let Some(l) = &self.nodes[w].label {
                    let _ = write!(out, "{}:{}", quote_label(l), fmt_len(plen[w]));
                } else {
                    out.push('(');
                    let ck = children(w);
                    stack.push((w, ck, 0));
                }
            } else {
                let v = *v;
                stack.pop();
                out.push(')');
                if v != root {
                    let _ = write!(out, ":{}", fmt_len(plen[v]));
                }
            }
        }
        out.push(';');
        out
    }

    pub fn write_newick(&self, mut sink: impl Write) -> Result<()> {
        sink.write_all(self.to_newick().as_bytes())?;
        sink.write_all(b"\n")?;
        sink.flush()?;
        Ok(())
    }
}

fn fmt_len(x: f64) -> String {
    // `{}` prints the shortest text that round-trips.
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

const META: &[char] = &['(', ')', '[', ']', '\'', ':', ';', ','];

pub fn quote_label(label: &str) -> String {
    if label.is_empty() || label.chars().any(|c| c.is_whitespace() || META.contains(&c)) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

pub fn write_newick(tree: &PhyloTree, sink: impl Write) -> Result<()> {
    tree.write_newick(sink)
}

/// Robinson-Foulds distance: size of the symmetric difference of the
/// non-trivial split sets. Both trees must have the same leaf labels.
pub fn robinson_foulds(a: &PhyloTree, b: &PhyloTree) -> Result<usize> {
    if a.leaf_labels() != b.leaf_labels() {
        return Err(Error::LeafMismatch("trees have different leaf sets".into()));
    }
    Ok(a.splits().symmetric_difference(&b.splits()).count())
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Newick {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && (self.text[self.pos].is_ascii_whitespace() || self.text[self.pos] == b'[') {
            if self.text[self.pos] == b'[' {
                while self.pos < self.text.len() && self.text[self.pos] != b']' {
                    self.pos += 1;
                }
            }
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn label(&mut self) -> Result<Option<String>> {
        match self.peek() {
            Some(b'\'') => {
                self.pos += 1;
                let mut out = Vec::new();
                loop {
                    match self.text.get(self.pos) {
                        None => return self.err("unterminated quoted label"),
                        Some(b'\'') if self.text.get(self.pos + 1) == Some(&b'\'') => {
                            out.push(b'\'');
                            self.pos += 2;
                        }
                        Some(b'\'') => {
                            self.pos += 1;
                            break;
                        }
                        Some(&c) => {
                            out.push(c);
                            self.pos += 1;
                        }
                    }
                }
                Ok(Some(String::from_utf8_lossy(&out).into_owned()))
            }
            Some(_) => {
                let start = self.pos;
                while let Some(&c) = self.text.get(self.pos) {
                    if c.is_ascii_whitespace() || META.contains(&(c as char)) {
                        break;
                    }
                    self.pos += 1;
                }
                if self.pos == start {
                    Ok(None)
                } else {
                    Ok(Some(String::from_utf8_lossy(&self.text[start..self.pos]).into_owned()))
                }
            }
            None => Ok(None),
        }
    }

    fn length(&mut self) -> Result<f64> {
        if self.peek() != Some(b':') {
            return Ok(0.0);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while let Some(&c) = self.text.get(self.pos) {
            if c.is_ascii_digit() || matches!(c, b'.' | b'-' | b'+' | b'e' | b'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let s = std::str::from_utf8(&self.text[start..self.pos]).unwrap_or("");
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => self.err(format!("bad branch length '{s}'")),
        }
    }

    /// Parses one subtree and returns its node id.
    fn subtree(&mut self, tree: &mut PhyloTree, depth: usize) -> Result<usize> {
        if depth > 100_000 {
            return self.err("nesting too deep");
        }
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let node = tree.add_internal();
            loop {
                let child = self.subtree(tree, depth + 1)?;
                let len = self.length()?;
                tree.connect(node, child, len);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.err("expected ',' or ')'"),
                }
            }
            // internal node names are accepted and dropped
            self.label()?;
            Ok(node)
        } else {
            match self.label()? {
                Some(l) => Ok(tree.add_leaf(l)),
                None => self.err("leaf without a label"),
            }
        }
    }
}

/// Parses one Newick tree. Degree-two nodes (a rooted input) are spliced
/// out so the result is unrooted.
pub fn parse_newick(text: &str) -> Result<PhyloTree> {
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
    };
    let mut tree = PhyloTree::new();
    p.subtree(&mut tree, 0)?;
    p.length()?;
    if p.peek() != Some(b';') {
        return p.err("expected ';'");
    }
    p.pos += 1;
    if p.peek().is_some() {
        return p.err("trailing characters after ';'");
    }
    let labels = tree.leaf_labels();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::LeafMismatch(format!("duplicate leaf label '{}'", w[0])));
    }
    tree.normalize();
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> PhyloTree {
        let mut t = PhyloTree::new();
        let c = t.add_internal();
        for (l, len) in [("C", 2.5), ("A", 0.5), ("B", 1.5)] {
            let leaf = t.add_leaf(l);
            t.connect(c, leaf, len);
        }
        t
    }

    #[test]
    fn star_newick() {
        assert_eq!(star().to_newick(), "(A:0.5,B:1.5,C:2.5);");
    }

    #[test]
    fn quoting() {
        assert_eq!(quote_label("a b"), "'a b'");
        assert_eq!(quote_label("it's"), "'it''s'");
        assert_eq!(quote_label("x:y"), "'x:y'");
        assert_eq!(quote_label("plain"), "plain");
        let mut t = star();
        t.nodes[1].label = Some("a b".into());
        let text = t.to_newick();
        assert_eq!(text, "(A:0.5,B:1.5,'a b':2.5);");
        let back = parse_newick(&text).unwrap();
        assert_eq!(back.leaf_labels(), vec!["A", "B", "a b"]);
    }

    #[test]
    fn round_trip_and_rooted_input() {
        let text = "((A:1,B:2):1,(C:3,D:4):0.5);";
        let t = parse_newick(text).unwrap();
        t.validate().unwrap();
        assert_eq!(t.leaf_count(), 4);
        assert!((t.total_length() - 11.5).abs() < 1e-12);
        let out = t.to_newick();
        assert_eq!(out, "(A:1,B:2,(C:3,D:4):1.5);");
        let again = parse_newick(&out).unwrap();
        assert_eq!(again.split_lengths(), t.split_lengths());
    }

    #[test]
    fn parse_errors() {
        assert!(parse_newick("(A,B").is_err());
        assert!(parse_newick("(A,B);x").is_err());
        assert!(parse_newick("(A,(B,C):x);").is_err());
        assert!(parse_newick("(A,A,B);").is_err());
        assert!(parse_newick("(A,,B);").is_err());
    }

    #[test]
    fn rf_distance() {
        let a = parse_newick("((A,B),(C,D),E);").unwrap();
        let b = parse_newick("((A,C),(B,D),E);").unwrap();
        assert_eq!(robinson_foulds(&a, &a).unwrap(), 0);
        assert_eq!(robinson_foulds(&a, &b).unwrap(), 4);
        let c = parse_newick("((A,B),C,F);").unwrap();
        assert!(robinson_foulds(&a, &c).is_err());
    }
}
