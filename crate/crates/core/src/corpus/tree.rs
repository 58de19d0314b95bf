use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Binary constituency tree over leaves `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BinaryTree {
    Leaf(usize),
    Node(Box<BinaryTree>, Box<BinaryTree>),
}

impl BinaryTree {
    pub fn node(left: BinaryTree, right: BinaryTree) -> Self {
        BinaryTree::Node(Box::new(left), Box::new(right))
    }

    /// Inclusive span `(first leaf, last leaf)`.
    pub fn span(&self) -> (usize, usize) {
        match self {
            BinaryTree::Leaf(i) => (*i, *i),
            BinaryTree::Node(l, r) => (l.span().0, r.span().1),
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            BinaryTree::Leaf(_) => 1,
            BinaryTree::Node(l, r) => l.num_leaves() + r.num_leaves(),
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            BinaryTree::Leaf(i) => out.push(*i),
            BinaryTree::Node(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    /// Checks that the leaves read `0, 1, ..., n-1` from left to right.
    pub fn validate(&self) -> Result<()> {
        for (expected, leaf) in self.leaves().into_iter().enumerate() {
            if leaf != expected {
                return Err(Error::invalid(format!(
                    "leaf {leaf} found where {expected} was expected"
                )));
            }
        }
        Ok(())
    }

    /// Spans of all internal nodes in pre-order, root first.
    pub fn internal_spans(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        self.collect_spans(&mut out);
        out
    }

    fn collect_spans(&self, out: &mut Vec<(usize, usize)>) -> (usize, usize) {
        match self {
            BinaryTree::Leaf(i) => (*i, *i),
            BinaryTree::Node(l, r) => {
                let at = out.len();
                out.push((0, 0));
                let (start, _) = l.collect_spans(out);
                let (_, end) = r.collect_spans(out);
                out[at] = (start, end);
                (start, end)
            }
        }
    }

    /// Adds `offset` to every leaf index.
    pub fn shifted(&self, offset: usize) -> BinaryTree {
        match self {
            BinaryTree::Leaf(i) => BinaryTree::Leaf(i + offset),
            BinaryTree::Node(l, r) => BinaryTree::node(l.shifted(offset), r.shifted(offset)),
        }
    }

    /// Replaces leaf `k` by `subtrees[k]`.
    pub fn substitute(&self, subtrees: &[BinaryTree]) -> BinaryTree {
        match self {
            BinaryTree::Leaf(i) => subtrees[*i].clone(),
            BinaryTree::Node(l, r) => {
                BinaryTree::node(l.substitute(subtrees), r.substitute(subtrees))
            }
        }
    }

    /// Fully left-branching tree over `start..start + n`.
    pub fn left_branching(start: usize, n: usize) -> BinaryTree {
        assert!(n > 0);
        (start + 1..start + n).fold(BinaryTree::Leaf(start), |acc, i| {
            BinaryTree::node(acc, BinaryTree::Leaf(i))
        })
    }

    /// Fully right-branching tree over `start..start + n`.
    pub fn right_branching(start: usize, n: usize) -> BinaryTree {
        assert!(n > 0);
        (start..start + n - 1)
            .rev()
            .fold(BinaryTree::Leaf(start + n - 1), |acc, i| {
                BinaryTree::node(BinaryTree::Leaf(i), acc)
            })
    }
}

impl fmt::Display for BinaryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinaryTree::Leaf(i) => write!(f, "{i}"),
            BinaryTree::Node(l, r) => write!(f, "({l} {r})"),
        }
    }
}

pub fn serialize_tree(tree: &BinaryTree) -> String {
    tree.to_string()
}

/// Parses a strictly binary tree such as `((0 1) 2)`.
pub fn parse_tree(text: &str) -> Result<BinaryTree> {
    let nary = parse_nary(text)?;
    nary.into_binary_strict()
}

impl FromStr for BinaryTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_tree(s)
    }
}

/// Tree whose internal nodes may have two or more children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NaryTree {
    Leaf(usize),
    Node(Vec<NaryTree>),
}

impl NaryTree {
    fn leaves_into(&self, out: &mut Vec<usize>) {
        match self {
            NaryTree::Leaf(i) => out.push(*i),
            NaryTree::Node(children) => children.iter().for_each(|c| c.leaves_into(out)),
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.leaves_into(&mut out);
        out
    }

    /// Spans of all internal nodes, outer span of every n-ary node included.
    pub fn internal_spans(&self) -> Vec<(usize, usize)> {
        fn walk(t: &NaryTree, out: &mut Vec<(usize, usize)>) -> (usize, usize) {
            match t {
                NaryTree::Leaf(i) => (*i, *i),
                NaryTree::Node(children) => {
                    let spans: Vec<_> = children.iter().map(|c| walk(c, out)).collect();
                    let span = (spans[0].0, spans[spans.len() - 1].1);
                    out.push(span);
                    span
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Converts every n-ary node `(c1 c2 ... ck)` into `(c1 (c2 (... ck)))`.
    pub fn right_binarize(&self) -> BinaryTree {
        match self {
            NaryTree::Leaf(i) => BinaryTree::Leaf(*i),
            NaryTree::Node(children) => {
                let mut iter = children.iter().rev().map(NaryTree::right_binarize);
                let last = iter.next().expect("internal node without children");
                iter.fold(last, |acc, c| BinaryTree::node(c, acc))
            }
        }
    }

    fn into_binary_strict(self) -> Result<BinaryTree> {
        let tree = match self {
            NaryTree::Leaf(i) => BinaryTree::Leaf(i),
            NaryTree::Node(children) => {
                if children.len() != 2 {
                    return Err(Error::TreeParse {
                        offset: 0,
                        message: format!("node with {} children in a binary tree", children.len()),
                    });
                }
                let mut it = children.into_iter();
                let l = it.next().unwrap().into_binary_strict()?;
                let r = it.next().unwrap().into_binary_strict()?;
                BinaryTree::node(l, r)
            }
        };
        Ok(tree)
    }
}

/// Parses `T := leafIndex | "(" T T+ ")"` and checks that leaves are the
/// contiguous sequence `0..n`.
pub fn parse_nary(text: &str) -> Result<NaryTree> {
    let mut parser = Parser {
        text: text.as_bytes(),
        pos: 0,
    };
    parser.skip_ws();
    let tree = parser.tree()?;
    parser.skip_ws();
    if parser.pos != parser.text.len() {
        return Err(parser.error("trailing input"));
    }
    for (expected, leaf) in tree.leaves().into_iter().enumerate() {
        if leaf != expected {
            return Err(Error::TreeParse {
                offset: 0,
                message: format!(
                    "non-contiguous leaves: found {leaf} where {expected} was expected"
                ),
            });
        }
    }
    Ok(tree)
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::TreeParse {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn tree(&mut self) -> Result<NaryTree> {
        match self.text.get(self.pos) {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    match self.text.get(self.pos) {
                        None => return Err(self.error("unbalanced parentheses")),
                        Some(b')') => {
                            if children.len() < 2 {
                                return Err(self.error("internal node needs at least two children"));
                            }
                            self.pos += 1;
                            return Ok(NaryTree::Node(children));
                        }
                        Some(_) => children.push(self.tree()?),
                    }
                }
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
                digits
                    .parse()
                    .map(NaryTree::Leaf)
                    .map_err(|_| Error::TreeParse {
                        offset: start,
                        message: "leaf index out of range".into(),
                    })
            }
            Some(b')') => Err(self.error("unbalanced parentheses")),
            Some(_) => Err(self.error("unexpected character")),
        }
    }
}
