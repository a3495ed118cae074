//! ε-free automata over (label, direction) symbols.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use super::Regex;
use crate::graph::Direction;

pub type StateId = u32;

/// Subset-construction ceiling used by [`determinize`].
pub const DEFAULT_STATE_LIMIT: usize = 4096;

/// A transition symbol. `label` indexes [`Nfa::alphabet`]; `a` and `^a` are
/// distinct symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub label: u32,
    pub dir: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: StateId,
    pub symbol: Symbol,
    pub to: StateId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ambiguity {
    Unambiguous,
    Ambiguous,
    Unknown,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("automaton blow-up: determinization exceeded {limit} states")]
    BlowUp { limit: usize },
}

/// ε-free nondeterministic automaton.
///
/// The empty word is accepted when the initial state is final or when
/// `accepts_epsilon` is set; the flag lets [`single_final`] drop the initial
/// state from the final set without losing the zero-length answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    alphabet: Vec<String>,
    num_states: usize,
    initial: StateId,
    finals: Vec<bool>,
    // sorted by (from, symbol, to), deduplicated
    transitions: Vec<Transition>,
    accepts_epsilon: bool,
    ambiguity: Ambiguity,
}

impl Nfa {
    /// Assembles an automaton. Panics if a state id is out of range.
    pub fn from_parts(
        alphabet: Vec<String>,
        num_states: usize,
        initial: StateId,
        finals: impl IntoIterator<Item = StateId>,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Nfa {
        assert!(
            (initial as usize) < num_states,
            "initial state out of range"
        );
        let mut final_flags = vec![false; num_states];
        for f in finals {
            final_flags[f as usize] = true;
        }
        let mut transitions: Vec<Transition> = transitions.into_iter().collect();
        for t in &transitions {
            assert!((t.from as usize) < num_states && (t.to as usize) < num_states);
            assert!((t.symbol.label as usize) < alphabet.len());
        }
        transitions.sort_unstable();
        transitions.dedup();
        Nfa {
            alphabet,
            num_states,
            initial,
            finals: final_flags,
            transitions,
            accepts_epsilon: false,
            ambiguity: Ambiguity::Unknown,
        }
    }

    pub fn with_accepts_epsilon(mut self, yes: bool) -> Nfa {
        self.accepts_epsilon = yes;
        self
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q as usize]
    }

    pub fn finals(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states as StateId).filter(|&q| self.finals[q as usize])
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Outgoing transitions of `q`, sorted by (symbol, target).
    pub fn out(&self, q: StateId) -> &[Transition] {
        let lo = self.transitions.partition_point(|t| t.from < q);
        let hi = self.transitions.partition_point(|t| t.from <= q);
        &self.transitions[lo..hi]
    }

    pub fn accepts_epsilon_flag(&self) -> bool {
        self.accepts_epsilon
    }

    /// Whether the empty word is in the language.
    pub fn accepts_empty(&self) -> bool {
        self.accepts_epsilon || self.is_final(self.initial)
    }

    pub fn ambiguity(&self) -> Ambiguity {
        self.ambiguity
    }

    pub fn is_deterministic(&self) -> bool {
        self.transitions
            .windows(2)
            .all(|w| (w[0].from, w[0].symbol) != (w[1].from, w[1].symbol))
    }

    pub fn has_single_final(&self) -> bool {
        self.finals.iter().filter(|&&f| f).count() == 1
    }

    pub fn symbol(&self, label: &str, dir: Direction) -> Option<Symbol> {
        self.alphabet
            .iter()
            .position(|l| l == label)
            .map(|i| Symbol {
                label: i as u32,
                dir,
            })
    }

    pub fn label_name(&self, symbol: Symbol) -> &str {
        &self.alphabet[symbol.label as usize]
    }

    /// Direct simulation on a word of (label, direction) pairs.
    pub fn accepts<S: AsRef<str>>(&self, word: &[(S, Direction)]) -> bool {
        if word.is_empty() {
            return self.accepts_empty();
        }
        let mut current = vec![self.initial];
        for (label, dir) in word {
            let Some(sym) = self.symbol(label.as_ref(), *dir) else {
                return false;
            };
            let mut next: Vec<StateId> = current
                .iter()
                .flat_map(|&q| self.out(q).iter())
                .filter(|t| t.symbol == sym)
                .map(|t| t.to)
                .collect();
            next.sort_unstable();
            next.dedup();
            if next.is_empty() {
                return false;
            }
            current = next;
        }
        current.iter().any(|&q| self.is_final(q))
    }
}

struct GlushkovBuilder<'a> {
    alphabet: &'a [String],
    symbols: Vec<Symbol>,
    follow: Vec<BTreeSet<usize>>,
}

struct Summary {
    nullable: bool,
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
}

impl GlushkovBuilder<'_> {
    fn visit(&mut self, r: &Regex) -> Summary {
        match r {
            Regex::Epsilon => Summary {
                nullable: true,
                first: BTreeSet::new(),
                last: BTreeSet::new(),
            },
            Regex::Atom { label, dir } => {
                let idx = self.alphabet.binary_search(label).expect("label collected");
                self.symbols.push(Symbol {
                    label: idx as u32,
                    dir: *dir,
                });
                self.follow.push(BTreeSet::new());
                // position 0 is reserved for the initial state
                let p = self.symbols.len();
                Summary {
                    nullable: false,
                    first: BTreeSet::from([p]),
                    last: BTreeSet::from([p]),
                }
            }
            Regex::Concat(parts) => {
                let mut acc = Summary {
                    nullable: true,
                    first: BTreeSet::new(),
                    last: BTreeSet::new(),
                };
                for part in parts {
                    let s = self.visit(part);
                    for &x in &acc.last {
                        self.follow[x - 1].extend(s.first.iter().copied());
                    }
                    if acc.nullable {
                        acc.first.extend(s.first.iter().copied());
                    }
                    if s.nullable {
                        acc.last.extend(s.last);
                    } else {
                        acc.last = s.last;
                    }
                    acc.nullable &= s.nullable;
                }
                acc
            }
            Regex::Alt(parts) => {
                let mut acc = Summary {
                    nullable: parts.is_empty(),
                    first: BTreeSet::new(),
                    last: BTreeSet::new(),
                };
                for part in parts {
                    let s = self.visit(part);
                    acc.nullable |= s.nullable;
                    acc.first.extend(s.first);
                    acc.last.extend(s.last);
                }
                acc
            }
            Regex::Star(inner) | Regex::Plus(inner) => {
                let s = self.visit(inner);
                for &x in &s.last {
                    self.follow[x - 1].extend(s.first.iter().copied());
                }
                Summary {
                    nullable: s.nullable || matches!(r, Regex::Star(_)),
                    ..s
                }
            }
            Regex::Optional(inner) => {
                let s = self.visit(inner);
                Summary {
                    nullable: true,
                    ..s
                }
            }
        }
    }
}

fn collect_labels(r: &Regex, out: &mut BTreeSet<String>) {
    match r {
        Regex::Epsilon => {}
        Regex::Atom { label, .. } => {
            out.insert(label.clone());
        }
        Regex::Concat(v) | Regex::Alt(v) => v.iter().for_each(|x| collect_labels(x, out)),
        Regex::Star(x) | Regex::Plus(x) | Regex::Optional(x) => collect_labels(x, out),
    }
}

/// Position automaton: one state per atom occurrence plus the initial state,
/// no ε-transitions and no transition entering the initial state.
pub fn glushkov(ast: &Regex) -> Nfa {
    let mut labels = BTreeSet::new();
    collect_labels(ast, &mut labels);
    let alphabet: Vec<String> = labels.into_iter().collect();

    let mut b = GlushkovBuilder {
        alphabet: &alphabet,
        symbols: Vec::new(),
        follow: Vec::new(),
    };
    let summary = b.visit(ast);
    let GlushkovBuilder {
        symbols, follow, ..
    } = b;

    let mut transitions = Vec::new();
    for &p in &summary.first {
        transitions.push(Transition {
            from: 0,
            symbol: symbols[p - 1],
            to: p as StateId,
        });
    }
    for (i, targets) in follow.iter().enumerate() {
        for &p in targets {
            transitions.push(Transition {
                from: (i + 1) as StateId,
                symbol: symbols[p - 1],
                to: p as StateId,
            });
        }
    }
    let mut finals: Vec<StateId> = summary.last.iter().map(|&p| p as StateId).collect();
    if summary.nullable {
        finals.push(0);
    }
    Nfa::from_parts(alphabet, symbols.len() + 1, 0, finals, transitions)
}

/// True iff every word has at most one accepting run.
///
/// Searches the synchronized self-product for a pair of distinct states that
/// is reachable from `(q0, q0)` and can reach a pair of final states.
pub fn is_unambiguous(nfa: &Nfa) -> bool {
    let start = (nfa.initial, nfa.initial);
    let mut index: HashMap<(StateId, StateId), usize> = HashMap::from([(start, 0)]);
    let mut pairs = vec![start];
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);

    while let Some(i) = queue.pop_front() {
        let (p, q) = pairs[i];
        let (out_p, out_q) = (nfa.out(p), nfa.out(q));
        for tp in out_p {
            for tq in out_q.iter().filter(|t| t.symbol == tp.symbol) {
                let pair = (tp.to, tq.to);
                let j = *index.entry(pair).or_insert_with(|| {
                    pairs.push(pair);
                    reverse.push(Vec::new());
                    queue.push_back(pairs.len() - 1);
                    pairs.len() - 1
                });
                reverse[j].push(i);
            }
        }
    }

    let mut live = vec![false; pairs.len()];
    let mut stack: Vec<usize> = (0..pairs.len())
        .filter(|&i| nfa.is_final(pairs[i].0) && nfa.is_final(pairs[i].1))
        .collect();
    for &i in &stack {
        live[i] = true;
    }
    while let Some(i) = stack.pop() {
        for &j in &reverse[i] {
            if !live[j] {
                live[j] = true;
                stack.push(j);
            }
        }
    }
    !pairs.iter().zip(&live).any(|(&(p, q), &l)| l && p != q)
}

/// Subset construction with the default state ceiling.
pub fn determinize(nfa: &Nfa) -> Result<Nfa, AutomatonError> {
    determinize_with_limit(nfa, DEFAULT_STATE_LIMIT)
}

/// Subset construction over reachable subsets. The empty subset is not
/// materialized, so the result may be partial.
pub fn determinize_with_limit(nfa: &Nfa, limit: usize) -> Result<Nfa, AutomatonError> {
    let start = vec![nfa.initial];
    let mut ids: BTreeMap<Vec<StateId>, StateId> = BTreeMap::from([(start.clone(), 0)]);
    let mut subsets = vec![start];
    let mut transitions = Vec::new();
    let mut i = 0;
    while i < subsets.len() {
        let mut by_symbol: BTreeMap<Symbol, BTreeSet<StateId>> = BTreeMap::new();
        for &q in &subsets[i] {
            for t in nfa.out(q) {
                by_symbol.entry(t.symbol).or_default().insert(t.to);
            }
        }
        for (symbol, targets) in by_symbol {
            let key: Vec<StateId> = targets.into_iter().collect();
            let to = match ids.get(&key) {
                Some(&id) => id,
                None => {
                    if subsets.len() >= limit {
                        return Err(AutomatonError::BlowUp { limit });
                    }
                    let id = subsets.len() as StateId;
                    ids.insert(key.clone(), id);
                    subsets.push(key);
                    id
                }
            };
            transitions.push(Transition {
                from: i as StateId,
                symbol,
                to,
            });
        }
        i += 1;
    }
    let finals: Vec<StateId> = subsets
        .iter()
        .enumerate()
        .filter(|(_, s)| s.iter().any(|&q| nfa.is_final(q)))
        .map(|(i, _)| i as StateId)
        .collect();
    let mut dfa = Nfa::from_parts(nfa.alphabet.clone(), subsets.len(), 0, finals, transitions);
    dfa.accepts_epsilon = nfa.accepts_epsilon;
    dfa.ambiguity = Ambiguity::Unambiguous;
    Ok(dfa)
}

/// Rewrites the automaton to have exactly one final state.
///
/// A fresh final state receives a copy of every transition entering an old
/// final state; the old states stay as non-accepting. Acceptance of the
/// empty word moves to the `accepts_epsilon` flag. Already-normalized
/// automata (one final, not the initial state) are returned as is.
pub fn single_final(nfa: &Nfa) -> Nfa {
    let finals: Vec<StateId> = nfa.finals().collect();
    if finals.len() == 1 && finals[0] != nfa.initial {
        return nfa.clone();
    }
    let star = nfa.num_states as StateId;
    let extra: Vec<Transition> = nfa
        .transitions
        .iter()
        .filter(|t| nfa.is_final(t.to))
        .map(|t| Transition { to: star, ..*t })
        .collect();
    let mut out = Nfa::from_parts(
        nfa.alphabet.clone(),
        nfa.num_states + 1,
        nfa.initial,
        [star],
        nfa.transitions.iter().copied().chain(extra),
    );
    out.accepts_epsilon = nfa.accepts_empty();
    out.ambiguity = nfa.ambiguity;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regex::parse_regex;

    fn nfa(s: &str) -> Nfa {
        glushkov(&parse_regex(s).unwrap())
    }

    fn w(labels: &[&str]) -> Vec<(String, Direction)> {
        labels
            .iter()
            .map(|l| (l.to_string(), Direction::Forward))
            .collect()
    }

    // Counts accepting runs by brute force.
    fn runs(a: &Nfa, word: &[(String, Direction)]) -> usize {
        fn go(a: &Nfa, q: StateId, word: &[(String, Direction)]) -> usize {
            match word.split_first() {
                None => a.is_final(q) as usize,
                Some(((l, d), rest)) => a
                    .out(q)
                    .iter()
                    .filter(|t| a.label_name(t.symbol) == l && t.symbol.dir == *d)
                    .map(|t| go(a, t.to, rest))
                    .sum(),
            }
        }
        go(a, a.initial(), word)
    }

    #[test]
    fn single_atom() {
        let a = nfa("a");
        assert_eq!(a.num_states(), 2);
        assert_eq!(a.transitions().len(), 1);
        assert_eq!(a.finals().collect::<Vec<_>>(), [1]);
    }

    #[test]
    fn knows_star_works() {
        let a = nfa("knows*/works");
        assert_eq!(a.num_states(), 3);
        assert!(a.accepts(&w(&["works"])));
        assert!(a.accepts(&w(&["knows", "works"])));
        assert!(a.accepts(&w(&["knows", "knows", "knows", "works"])));
        assert!(!a.accepts(&w(&["knows"])));
        assert!(!a.accepts(&w(&["works", "works"])));
        assert!(!a.accepts_empty());
        assert!(a.transitions().iter().all(|t| t.to != a.initial()));
    }

    #[test]
    fn ambiguous_star_star() {
        let a = nfa("a*/a*");
        assert_eq!(a.num_states(), 3);
        assert_eq!(runs(&a, &w(&["a"])), 2);
        assert!(!is_unambiguous(&a));
    }

    #[test]
    fn unambiguity_examples() {
        assert!(is_unambiguous(&nfa("knows+/lives")));
        assert!(is_unambiguous(&nfa("a")));
        assert!(!is_unambiguous(&nfa("a|a")));
        assert!(!is_unambiguous(&nfa("(a|b)*/a/(a|b)*")));
        let d = determinize(&nfa("(a|b)*/a/(a|b)*")).unwrap();
        assert!(d.is_deterministic());
        assert!(is_unambiguous(&d));
    }

    #[test]
    fn determinize_star_star() {
        let d = determinize(&nfa("a*/a*")).unwrap();
        assert_eq!(d.num_states(), 2);
        assert!(d.is_deterministic());
        assert_eq!(d.ambiguity(), Ambiguity::Unambiguous);
        for k in 0..5 {
            assert!(d.accepts(&w(&vec!["a"; k])));
        }
    }

    #[test]
    fn determinize_is_idempotent_on_dfa() {
        let d = determinize(&nfa("(a|b)*/a")).unwrap();
        let dd = determinize(&d).unwrap();
        assert_eq!(d.num_states(), dd.num_states());
        assert_eq!(d.transitions(), dd.transitions());
    }

    #[test]
    fn determinize_respects_limit() {
        // (a|b)*/a/(a|b)^k needs 2^(k+1) subsets
        let r = format!("(a|b)*/a{}", "/(a|b)".repeat(5));
        assert_eq!(
            determinize_with_limit(&nfa(&r), 16).unwrap_err(),
            AutomatonError::BlowUp { limit: 16 }
        );
        assert!(determinize(&nfa(&r)).is_ok());
    }

    #[test]
    fn single_final_structural() {
        let alphabet = vec!["a".to_string(), "b".to_string()];
        let sym = |l| Symbol {
            label: l,
            dir: Direction::Forward,
        };
        let t = |from, l, to| Transition {
            from,
            symbol: sym(l),
            to,
        };
        let a = Nfa::from_parts(alphabet, 3, 0, [1, 2], [t(0, 0, 1), t(0, 1, 2)]);
        let s = single_final(&a);
        assert_eq!(s.finals().collect::<Vec<_>>(), [3]);
        assert_eq!(
            s.transitions(),
            &[t(0, 0, 1), t(0, 0, 3), t(0, 1, 2), t(0, 1, 3)]
        );
        assert!(!s.accepts_empty());
    }

    #[test]
    fn single_final_already_normal() {
        let a = nfa("knows*/works");
        let s = single_final(&a);
        assert_eq!(s, a);
        assert!(s.has_single_final());
    }

    #[test]
    fn single_final_moves_epsilon_to_flag() {
        let s = single_final(&nfa("a*"));
        assert!(s.has_single_final());
        assert!(!s.is_final(s.initial()));
        assert!(s.accepts_epsilon_flag());
        let f = s.finals().next().unwrap();
        assert!(s
            .transitions()
            .iter()
            .filter(|t| t.to == f)
            .all(|t| s.label_name(t.symbol) == "a"));
        for k in 0..4 {
            assert!(s.accepts(&w(&vec!["a"; k])));
        }
        assert!(is_unambiguous(&s));
    }

    #[test]
    fn inverse_is_a_distinct_symbol() {
        let a = nfa("^a/a");
        assert!(a.accepts(&[("a", Direction::Inverse), ("a", Direction::Forward)]));
        assert!(!a.accepts(&[("a", Direction::Forward), ("a", Direction::Forward)]));
    }
}
