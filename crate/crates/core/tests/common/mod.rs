//! Helpers shared by the integration tests: an AST-level regex matcher that
//! does not go through any automaton, and seeded instance generators.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rpq_core::{Direction, GraphBuilder, GraphDb, Path, Regex};

pub type Word = Vec<(String, Direction)>;

pub const PEOPLE: &str = "\
John knows Joe e1
Joe knows John e2
Joe knows Paul e3
Joe knows Lily e4
Paul knows Anne e5
Paul knows Jane e6
Lily knows Jane e7
John lives Rome e8
Anne lives Rome e9
Jane works ENS e10
Anne works ENS e11
";

/// Positions `j` such that `word[i..j]` matches `r`.
fn ends(r: &Regex, word: &[(String, Direction)], i: usize) -> BTreeSet<usize> {
    match r {
        Regex::Epsilon => BTreeSet::from([i]),
        Regex::Atom { label, dir } => match word.get(i) {
            Some((l, d)) if l == label && d == dir => BTreeSet::from([i + 1]),
            _ => BTreeSet::new(),
        },
        Regex::Concat(parts) => parts.iter().fold(BTreeSet::from([i]), |acc, p| {
            acc.into_iter().flat_map(|j| ends(p, word, j)).collect()
        }),
        Regex::Alt(parts) => parts.iter().flat_map(|p| ends(p, word, i)).collect(),
        Regex::Optional(inner) => {
            let mut out = ends(inner, word, i);
            out.insert(i);
            out
        }
        Regex::Star(inner) => closure(inner, word, BTreeSet::from([i])),
        Regex::Plus(inner) => closure(inner, word, ends(inner, word, i)),
    }
}

fn closure(r: &Regex, word: &[(String, Direction)], seed: BTreeSet<usize>) -> BTreeSet<usize> {
    let mut seen = seed.clone();
    let mut todo: Vec<usize> = seed.into_iter().collect();
    while let Some(j) = todo.pop() {
        for k in ends(r, word, j) {
            if seen.insert(k) {
                todo.push(k);
            }
        }
    }
    seen
}

pub fn ast_matches(r: &Regex, word: &[(String, Direction)]) -> bool {
    ends(r, word, 0).contains(&word.len())
}

pub fn path_word(g: &GraphDb, p: &Path) -> Word {
    p.named_word(g)
        .into_iter()
        .map(|(l, d)| (l.to_owned(), d))
        .collect()
}

pub const LABELS: [&str; 3] = ["a", "b", "c"];

pub fn random_atom(rng: &mut impl Rng, labels: &[&str]) -> Regex {
    let label = labels[rng.gen_range(0..labels.len())];
    if rng.gen_bool(0.25) {
        Regex::inverse(label)
    } else {
        Regex::atom(label)
    }
}

/// Random regex of depth at most `depth`.
pub fn random_regex(rng: &mut impl Rng, depth: usize, labels: &[&str]) -> Regex {
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.04) {
            Regex::Epsilon
        } else {
            random_atom(rng, labels)
        };
    }
    let sub = |rng: &mut _| random_regex(rng, depth - 1, labels);
    match rng.gen_range(0..5) {
        0 => {
            let n = rng.gen_range(2..=3);
            Regex::Concat((0..n).map(|_| sub(rng)).collect())
        }
        1 => {
            let n = rng.gen_range(2..=3);
            Regex::Alt((0..n).map(|_| sub(rng)).collect())
        }
        2 => Regex::Star(Box::new(sub(rng))),
        3 => Regex::Plus(Box::new(sub(rng))),
        _ => Regex::Optional(Box::new(sub(rng))),
    }
}

/// Random regex of depth at most `depth` whose root is an operator.
pub fn random_compound_regex(rng: &mut impl Rng, depth: usize, labels: &[&str]) -> Regex {
    loop {
        let r = random_regex(rng, depth, labels);
        if !matches!(r, Regex::Atom { .. } | Regex::Epsilon) {
            return r;
        }
    }
}

/// Random multigraph on nodes `n0..` with at least two nodes and one edge;
/// self-loops and parallel edges allowed.
pub fn random_graph(
    rng: &mut impl Rng,
    max_nodes: usize,
    max_edges: usize,
    labels: &[&str],
) -> GraphDb {
    let nodes = rng.gen_range(2..=max_nodes.max(2));
    let edges = rng.gen_range(1..=max_edges.max(1));
    let mut b = GraphBuilder::new();
    for i in 0..nodes {
        b.add_node(&format!("n{i}"));
    }
    for _ in 0..edges {
        let from = format!("n{}", rng.gen_range(0..nodes));
        let to = format!("n{}", rng.gen_range(0..nodes));
        let label = labels[rng.gen_range(0..labels.len())];
        b.add_edge(&from, label, &to);
    }
    b.build()
}

/// Every word of length `0..=max_len` over `symbols`.
pub fn all_words(symbols: &[(String, Direction)], max_len: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Word> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * symbols.len());
        for w in &layer {
            for s in symbols {
                let mut w2 = w.clone();
                w2.push(s.clone());
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Both directions of every label occurring in `r`.
pub fn symbols_of(r: &Regex) -> Vec<(String, Direction)> {
    fn labels(r: &Regex, out: &mut BTreeSet<String>) {
        match r {
            Regex::Epsilon => {}
            Regex::Atom { label, .. } => {
                out.insert(label.clone());
            }
            Regex::Concat(v) | Regex::Alt(v) => v.iter().for_each(|x| labels(x, out)),
            Regex::Star(x) | Regex::Plus(x) | Regex::Optional(x) => labels(x, out),
        }
    }
    let mut set = BTreeSet::new();
    labels(r, &mut set);
    set.into_iter()
        .flat_map(|l| [(l.clone(), Direction::Forward), (l, Direction::Inverse)])
        .collect()
}

/// A node with at least one incident edge, if any.
pub fn random_start(rng: &mut impl Rng, g: &GraphDb) -> String {
    match g.edges().len() {
        0 => g.node_name(rpq_core::NodeId(0)).to_owned(),
        m => {
            let e = g.edges()[rng.gen_range(0..m)];
            g.node_name(if rng.gen_bool(0.5) { e.from } else { e.to })
                .to_owned()
        }
    }
}

/// Whether `start` has at most `cap` trails (edge-distinct walks, either
/// direction), counted without labels.
pub fn trails_within(g: &GraphDb, start: rpq_core::NodeId, cap: usize) -> bool {
    fn go(g: &GraphDb, at: rpq_core::NodeId, used: &mut Vec<bool>, left: &mut usize) -> bool {
        for (i, e) in g.edges().iter().enumerate() {
            if used[i] || (e.from != at && e.to != at) {
                continue;
            }
            // a self-loop can be taken forward or inverse
            let (next, ways) = match (e.from == at, e.to == at) {
                (true, true) => (at, 2),
                (true, false) => (e.to, 1),
                _ => (e.from, 1),
            };
            for _ in 0..ways {
                if *left == 0 {
                    return false;
                }
                *left -= 1;
                used[i] = true;
                let ok = go(g, next, used, left);
                used[i] = false;
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    let mut used = vec![false; g.edges().len()];
    let mut left = cap;
    go(g, start, &mut used, &mut left)
}
