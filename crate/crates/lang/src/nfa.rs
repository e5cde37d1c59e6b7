//! Nondeterministic finite automata over a named action alphabet, with
//! epsilon transitions, and the language algebra the deciders need:
//! epsilon elimination, trimming, determinization, complement, product,
//! inclusion and intersection-emptiness with witness words.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::LangError;

pub type StateId = usize;
pub type SymbolId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    /// Non-epsilon symbols; transition labels index into this table.
    pub alphabet: Vec<String>,
    pub state_labels: Vec<String>,
    pub initial: StateId,
    pub accepting: BTreeSet<StateId>,
    /// (source, label, target); `None` is epsilon.
    pub edges: Vec<(StateId, Option<SymbolId>, StateId)>,
}

impl Nfa {
    pub fn new(alphabet: Vec<String>) -> Self {
        Nfa {
            alphabet,
            state_labels: Vec::new(),
            initial: 0,
            accepting: BTreeSet::new(),
            edges: Vec::new(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn add_state(&mut self, label: impl Into<String>) -> StateId {
        self.state_labels.push(label.into());
        self.state_labels.len() - 1
    }

    pub fn add_edge(&mut self, from: StateId, label: Option<SymbolId>, to: StateId) {
        debug_assert!(from < self.n_states() && to < self.n_states());
        if let Some(s) = label {
            debug_assert!(s < self.alphabet.len());
        }
        let e = (from, label, to);
        if !self.edges.contains(&e) {
            self.edges.push(e);
        }
    }

    pub fn symbol_id(&self, name: &str) -> Option<SymbolId> {
        self.alphabet.iter().position(|s| s == name)
    }

    pub fn word_names(&self, word: &[SymbolId]) -> Vec<String> {
        word.iter().map(|s| self.alphabet[*s].clone()).collect()
    }

    fn adjacency(&self) -> Vec<Vec<(Option<SymbolId>, StateId)>> {
        let mut adj = vec![Vec::new(); self.n_states()];
        for (f, l, t) in &self.edges {
            adj[*f].push((*l, *t));
        }
        adj
    }

    pub fn epsilon_closure(&self, start: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let adj = self.adjacency();
        let mut seen = start.clone();
        let mut queue: VecDeque<StateId> = start.iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            for (l, t) in &adj[q] {
                if l.is_none() && seen.insert(*t) {
                    queue.push_back(*t);
                }
            }
        }
        seen
    }

    /// Remove epsilon transitions preserving the language.
    pub fn eliminate_epsilon(&self) -> Nfa {
        let adj = self.adjacency();
        let mut out = Nfa::new(self.alphabet.clone());
        for l in &self.state_labels {
            out.add_state(l.clone());
        }
        out.initial = self.initial;
        for q in 0..self.n_states() {
            let closure = self.epsilon_closure(&BTreeSet::from([q]));
            if closure.iter().any(|c| self.accepting.contains(c)) {
                out.accepting.insert(q);
            }
            for c in &closure {
                for (l, t) in &adj[*c] {
                    if l.is_some() {
                        out.add_edge(q, *l, *t);
                    }
                }
            }
        }
        out
    }

    /// Keep only states both reachable from the initial state and
    /// co-reachable to an accepting state. The initial state is always
    /// kept so the result stays well-formed even for empty languages.
    pub fn trim(&self) -> Nfa {
        let adj = self.adjacency();
        let mut reach = BTreeSet::from([self.initial]);
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            for (_, t) in &adj[q] {
                if reach.insert(*t) {
                    queue.push_back(*t);
                }
            }
        }
        let mut radj = vec![Vec::new(); self.n_states()];
        for (f, _, t) in &self.edges {
            radj[*t].push(*f);
        }
        let mut coreach: BTreeSet<StateId> = self.accepting.clone();
        let mut queue: VecDeque<StateId> = self.accepting.iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            for f in &radj[q] {
                if coreach.insert(*f) {
                    queue.push_back(*f);
                }
            }
        }
        let mut keep: Vec<StateId> = reach.intersection(&coreach).copied().collect();
        if !keep.contains(&self.initial) {
            keep.push(self.initial);
            keep.sort_unstable();
        }
        let index: BTreeMap<StateId, StateId> =
            keep.iter().enumerate().map(|(i, q)| (*q, i)).collect();
        let mut out = Nfa::new(self.alphabet.clone());
        for q in &keep {
            out.add_state(self.state_labels[*q].clone());
        }
        out.initial = index[&self.initial];
        for q in &keep {
            if self.accepting.contains(q) {
                out.accepting.insert(index[q]);
            }
        }
        for (f, l, t) in &self.edges {
            if let (Some(nf), Some(nt)) = (index.get(f), index.get(t)) {
                out.add_edge(*nf, *l, *nt);
            }
        }
        out
    }

    /// Project symbols outside `keep` to epsilon; the alphabet becomes
    /// exactly `keep` in the given order.
    pub fn project(&self, keep: &[String]) -> Nfa {
        let mut out = Nfa::new(keep.to_vec());
        for l in &self.state_labels {
            out.add_state(l.clone());
        }
        out.initial = self.initial;
        out.accepting = self.accepting.clone();
        for (f, l, t) in &self.edges {
            let nl = l.and_then(|s| out.symbol_id(&self.alphabet[s]));
            out.add_edge(*f, nl, *t);
        }
        out
    }

    pub fn accepts(&self, word: &[SymbolId]) -> bool {
        let mut current = self.epsilon_closure(&BTreeSet::from([self.initial]));
        let adj = self.adjacency();
        for s in word {
            let mut next = BTreeSet::new();
            for q in &current {
                for (l, t) in &adj[*q] {
                    if *l == Some(*s) {
                        next.insert(*t);
                    }
                }
            }
            current = self.epsilon_closure(&next);
            if current.is_empty() {
                return false;
            }
        }
        current.iter().any(|q| self.accepting.contains(q))
    }

    /// All accepted words of length at most `max_len`, as symbol id
    /// sequences. Brute-force; intended for test oracles.
    pub fn enumerate_words(&self, max_len: usize) -> BTreeSet<Vec<SymbolId>> {
        let eps_free = self.eliminate_epsilon();
        let adj = eps_free.adjacency();
        let mut result = BTreeSet::new();
        let start: BTreeSet<StateId> = BTreeSet::from([eps_free.initial]);
        let mut frontier: BTreeMap<Vec<SymbolId>, BTreeSet<StateId>> = BTreeMap::new();
        frontier.insert(Vec::new(), start);
        for _ in 0..=max_len {
            let mut next_frontier: BTreeMap<Vec<SymbolId>, BTreeSet<StateId>> = BTreeMap::new();
            for (word, states) in &frontier {
                if states.iter().any(|q| eps_free.accepting.contains(q)) {
                    result.insert(word.clone());
                }
                if word.len() == max_len {
                    continue;
                }
                for s in 0..eps_free.alphabet.len() {
                    let mut next = BTreeSet::new();
                    for q in states {
                        for (l, t) in &adj[*q] {
                            if *l == Some(s) {
                                next.insert(*t);
                            }
                        }
                    }
                    if !next.is_empty() {
                        let mut w = word.clone();
                        w.push(s);
                        next_frontier.insert(w, next);
                    }
                }
            }
            frontier = next_frontier;
        }
        result
    }

    fn check_same_alphabet(&self, other: &Nfa) -> Result<(), LangError> {
        if self.alphabet != other.alphabet {
            return Err(LangError::AlphabetMismatch(format!(
                "{:?} vs {:?}",
                self.alphabet, other.alphabet
            )));
        }
        Ok(())
    }

    /// Synchronous product; both automata must be epsilon-free with the
    /// same alphabet. The result accepts the intersection.
    pub fn product(&self, other: &Nfa) -> Result<Nfa, LangError> {
        self.check_same_alphabet(other)?;
        let a = self.eliminate_epsilon();
        let b = other.eliminate_epsilon();
        let aadj = a.adjacency();
        let badj = b.adjacency();
        let mut out = Nfa::new(a.alphabet.clone());
        let mut index: BTreeMap<(StateId, StateId), StateId> = BTreeMap::new();
        let mut queue = VecDeque::new();
        let s0 = (a.initial, b.initial);
        index.insert(s0, out.add_state(format!("{},{}", a.state_labels[s0.0], b.state_labels[s0.1])));
        queue.push_back(s0);
        while let Some((p, q)) = queue.pop_front() {
            let from = index[&(p, q)];
            for (la, ta) in &aadj[p] {
                let la = la.expect("epsilon-free");
                for (lb, tb) in &badj[q] {
                    let lb = lb.expect("epsilon-free");
                    if la == lb {
                        let key = (*ta, *tb);
                        let to = *index.entry(key).or_insert_with(|| {
                            queue.push_back(key);
                            out.add_state(format!(
                                "{},{}",
                                a.state_labels[*ta], b.state_labels[*tb]
                            ))
                        });
                        out.add_edge(from, Some(la), to);
                    }
                }
            }
        }
        for ((p, q), id) in &index {
            if a.accepting.contains(p) && b.accepting.contains(q) {
                out.accepting.insert(*id);
            }
        }
        Ok(out)
    }
}

/// Deterministic, complete automaton produced by the subset construction.
#[derive(Debug, Clone)]
pub struct Dfa {
    pub alphabet: Vec<String>,
    pub n_states: usize,
    pub initial: StateId,
    pub accepting: BTreeSet<StateId>,
    /// transitions[state][symbol]
    pub transitions: Vec<Vec<StateId>>,
}

pub const DEFAULT_DETERMINIZE_CAP: usize = 1 << 16;

impl Dfa {
    pub fn complement(&self) -> Dfa {
        let mut out = self.clone();
        out.accepting = (0..self.n_states)
            .filter(|q| !self.accepting.contains(q))
            .collect();
        out
    }

    pub fn to_nfa(&self) -> Nfa {
        let mut out = Nfa::new(self.alphabet.clone());
        for q in 0..self.n_states {
            out.add_state(format!("d{}", q));
        }
        out.initial = self.initial;
        out.accepting = self.accepting.clone();
        for q in 0..self.n_states {
            for (s, t) in self.transitions[q].iter().enumerate() {
                out.add_edge(q, Some(s), *t);
            }
        }
        out
    }
}

/// Subset construction with a hard state cap; aborts rather than degrade.
pub fn determinize(nfa: &Nfa, cap: usize) -> Result<Dfa, LangError> {
    let eps_free = nfa.eliminate_epsilon();
    let adj = eps_free.adjacency();
    let k = eps_free.alphabet.len();
    let mut index: BTreeMap<BTreeSet<StateId>, StateId> = BTreeMap::new();
    let mut transitions: Vec<Vec<StateId>> = Vec::new();
    let mut subsets: Vec<BTreeSet<StateId>> = Vec::new();
    let start: BTreeSet<StateId> = BTreeSet::from([eps_free.initial]);
    index.insert(start.clone(), 0);
    subsets.push(start);
    transitions.push(vec![usize::MAX; k]);
    let mut next = 0;
    while next < subsets.len() {
        let current = subsets[next].clone();
        for s in 0..k {
            let mut target = BTreeSet::new();
            for q in &current {
                for (l, t) in &adj[*q] {
                    if *l == Some(s) {
                        target.insert(*t);
                    }
                }
            }
            let id = match index.get(&target) {
                Some(id) => *id,
                None => {
                    if subsets.len() >= cap {
                        return Err(LangError::Resource(format!(
                            "determinization exceeded {} subset states",
                            cap
                        )));
                    }
                    let id = subsets.len();
                    index.insert(target.clone(), id);
                    subsets.push(target);
                    transitions.push(vec![usize::MAX; k]);
                    id
                }
            };
            transitions[next][s] = id;
        }
        next += 1;
    }
    let accepting = subsets
        .iter()
        .enumerate()
        .filter(|(_, set)| set.iter().any(|q| eps_free.accepting.contains(q)))
        .map(|(i, _)| i)
        .collect();
    Ok(Dfa {
        alphabet: eps_free.alphabet,
        n_states: subsets.len(),
        initial: 0,
        accepting,
        transitions,
    })
}

/// Language inclusion L(a) subseteq L(b), with a shortest counterexample
/// word on failure.
pub fn nfa_inclusion(
    a: &Nfa,
    b: &Nfa,
    cap: usize,
) -> Result<(bool, Option<Vec<SymbolId>>), LangError> {
    if a.alphabet != b.alphabet {
        return Err(LangError::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            a.alphabet, b.alphabet
        )));
    }
    let a = a.eliminate_epsilon().trim();
    let bd = determinize(b, cap)?;
    let bc = bd.complement();
    // BFS over (a-state, complement-dfa-state)
    let aadj = a.adjacency();
    let mut seen = BTreeSet::from([(a.initial, bc.initial)]);
    let mut queue = VecDeque::from([(a.initial, bc.initial, Vec::<SymbolId>::new())]);
    while let Some((p, q, word)) = queue.pop_front() {
        if a.accepting.contains(&p) && bc.accepting.contains(&q) {
            return Ok((false, Some(word)));
        }
        for (l, t) in &aadj[p] {
            let s = l.expect("epsilon-free");
            let q2 = bc.transitions[q][s];
            if seen.insert((*t, q2)) {
                let mut w = word.clone();
                w.push(s);
                queue.push_back((*t, q2, w));
            }
        }
    }
    Ok((true, None))
}

/// Emptiness of the intersection, with a shortest common word when
/// non-empty. Returns (is_empty, witness).
pub fn nfa_intersect_emptiness(
    a: &Nfa,
    b: &Nfa,
) -> Result<(bool, Option<Vec<SymbolId>>), LangError> {
    if a.alphabet != b.alphabet {
        return Err(LangError::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            a.alphabet, b.alphabet
        )));
    }
    let a = a.eliminate_epsilon().trim();
    let b = b.eliminate_epsilon().trim();
    let aadj = a.adjacency();
    let badj = b.adjacency();
    let mut seen = BTreeSet::from([(a.initial, b.initial)]);
    let mut queue = VecDeque::from([(a.initial, b.initial, Vec::<SymbolId>::new())]);
    while let Some((p, q, word)) = queue.pop_front() {
        if a.accepting.contains(&p) && b.accepting.contains(&q) {
            return Ok((false, Some(word)));
        }
        for (la, ta) in &aadj[p] {
            let s = la.expect("epsilon-free");
            for (lb, tb) in &badj[q] {
                if *lb == Some(s) && seen.insert((*ta, *tb)) {
                    let mut w = word.clone();
                    w.push(s);
                    queue.push_back((*ta, *tb, w));
                }
            }
        }
    }
    Ok((true, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(words: &[&[usize]], alphabet: &[&str]) -> Nfa {
        // automaton accepting exactly the listed words (trie)
        let mut nfa = Nfa::new(alphabet.iter().map(|s| s.to_string()).collect());
        let root = nfa.add_state("root");
        nfa.initial = root;
        for w in words {
            let mut at = root;
            for s in *w {
                let n = nfa.add_state("n");
                nfa.add_edge(at, Some(*s), n);
                at = n;
            }
            nfa.accepting.insert(at);
        }
        nfa
    }

    #[test]
    fn inclusion_basic() {
        let a = simple(&[&[0], &[0, 1]], &["x", "y"]);
        let b = simple(&[&[0], &[0, 1], &[1]], &["x", "y"]);
        let (ok, _) = nfa_inclusion(&a, &b, DEFAULT_DETERMINIZE_CAP).unwrap();
        assert!(ok);
        let (ok, cex) = nfa_inclusion(&b, &a, DEFAULT_DETERMINIZE_CAP).unwrap();
        assert!(!ok);
        assert_eq!(cex.unwrap(), vec![1]);
    }

    #[test]
    fn intersection_basic() {
        let a = simple(&[&[0, 0], &[0, 1]], &["x", "y"]);
        let b = simple(&[&[0, 1], &[1, 1]], &["x", "y"]);
        let (empty, w) = nfa_intersect_emptiness(&a, &b).unwrap();
        assert!(!empty);
        assert_eq!(w.unwrap(), vec![0, 1]);
        let c = simple(&[&[1]], &["x", "y"]);
        let (empty, _) = nfa_intersect_emptiness(&a, &c).unwrap();
        assert!(empty);
    }

    #[test]
    fn epsilon_elimination_keeps_language() {
        let mut nfa = Nfa::new(vec!["a".into()]);
        let q0 = nfa.add_state("0");
        let q1 = nfa.add_state("1");
        let q2 = nfa.add_state("2");
        nfa.initial = q0;
        nfa.add_edge(q0, None, q1);
        nfa.add_edge(q1, Some(0), q2);
        nfa.add_edge(q2, None, q1);
        nfa.accepting.insert(q2);
        let words = nfa.enumerate_words(3);
        let expect: BTreeSet<Vec<usize>> =
            [vec![0], vec![0, 0], vec![0, 0, 0]].into_iter().collect();
        assert_eq!(words, expect);
    }
}
