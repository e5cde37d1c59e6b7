//! Pushdown automata with final-state acceptance, the energy-stack
//! constructions that encode energy counting, the prefix-nonnegativity
//! language, products with NFAs, and emptiness with shortest witnesses.
//!
//! Every edge pops exactly one stack symbol and pushes a string; the
//! bottom symbol is never consumed for good, bottom tests are edges that
//! pop the bottom symbol and push it back.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use crate::nfa::{Nfa, StateId, SymbolId};
use crate::LangError;

pub const BOTTOM: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdaEdge {
    pub from: StateId,
    /// `None` is a silent move.
    pub input: Option<SymbolId>,
    /// Stack symbol popped by this edge.
    pub pop: usize,
    pub to: StateId,
    /// Pushed string, bottom first; the last element becomes the new top.
    pub push: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Pda {
    pub input_alphabet: Vec<String>,
    /// Index 0 is the bottom-of-stack symbol.
    pub stack_alphabet: Vec<String>,
    pub state_labels: Vec<String>,
    pub initial: StateId,
    pub accepting: BTreeSet<StateId>,
    pub edges: Vec<PdaEdge>,
}

impl Pda {
    pub fn new(input_alphabet: Vec<String>, stack_alphabet: Vec<String>) -> Self {
        assert!(!stack_alphabet.is_empty());
        Pda {
            input_alphabet,
            stack_alphabet,
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

    pub fn add_edge(
        &mut self,
        from: StateId,
        input: Option<SymbolId>,
        pop: usize,
        to: StateId,
        push: Vec<usize>,
    ) {
        let e = PdaEdge { from, input, pop, to, push };
        if !self.edges.contains(&e) {
            self.edges.push(e);
        }
    }

    pub fn symbol_id(&self, name: &str) -> Option<SymbolId> {
        self.input_alphabet.iter().position(|s| s == name)
    }

    /// Rewrite so every push string has length at most 2, factoring longer
    /// pushes through fresh states.
    pub fn normalized(&self) -> Pda {
        let mut out = self.clone();
        let edges = std::mem::take(&mut out.edges);
        for e in edges {
            if e.push.len() <= 2 {
                out.edges.push(e);
                continue;
            }
            // push a1..an (an top): first edge pushes a1 a2, then silent
            // edges each push one more on top of the previous.
            let mut prev = e.from;
            let mut input = e.input;
            let mut pop = e.pop;
            for i in 1..e.push.len() {
                let is_last = i == e.push.len() - 1;
                let target = if is_last {
                    e.to
                } else {
                    out.add_state(format!("push#{}", out.state_labels.len()))
                };
                let pushed = if i == 1 {
                    vec![e.push[0], e.push[1]]
                } else {
                    vec![e.push[i]]
                };
                // after the first edge, we pop the symbol we just pushed
                // and push it back with one more on top
                if i == 1 {
                    out.edges.push(PdaEdge { from: prev, input, pop, to: target, push: pushed });
                } else {
                    out.edges.push(PdaEdge {
                        from: prev,
                        input: None,
                        pop,
                        to: target,
                        push: vec![pop, e.push[i]],
                    });
                }
                input = None;
                pop = e.push[i];
                prev = target;
            }
        }
        out
    }

    /// Bounded acceptance test: BFS over configurations with caps on the
    /// stack height and explored nodes. Sound and complete within the
    /// caps; intended for word-level test oracles.
    pub fn accepts_bounded(&self, word: &[SymbolId], max_stack: usize, max_nodes: usize) -> bool {
        let mut seen: BTreeSet<(StateId, Vec<usize>, usize)> = BTreeSet::new();
        let mut queue: VecDeque<(StateId, Vec<usize>, usize)> = VecDeque::new();
        let start = (self.initial, vec![BOTTOM], 0usize);
        seen.insert(start.clone());
        queue.push_back(start);
        let mut nodes = 0;
        while let Some((q, stack, pos)) = queue.pop_front() {
            nodes += 1;
            if nodes > max_nodes {
                return false;
            }
            if pos == word.len() && self.accepting.contains(&q) {
                return true;
            }
            let top = *stack.last().expect("stack never empty");
            for e in &self.edges {
                if e.from != q || e.pop != top {
                    continue;
                }
                let new_pos = match e.input {
                    None => pos,
                    Some(s) => {
                        if pos < word.len() && word[pos] == s {
                            pos + 1
                        } else {
                            continue;
                        }
                    }
                };
                let mut new_stack = stack.clone();
                new_stack.pop();
                new_stack.extend_from_slice(&e.push);
                if new_stack.is_empty() || new_stack.len() > max_stack {
                    continue;
                }
                let cfg = (e.to, new_stack, new_pos);
                if seen.insert(cfg.clone()) {
                    queue.push_back(cfg);
                }
            }
        }
        false
    }

    /// All accepted words up to a length, bounded exploration (oracle use).
    pub fn enumerate_words_bounded(
        &self,
        max_len: usize,
        max_stack: usize,
        max_nodes: usize,
    ) -> BTreeSet<Vec<SymbolId>> {
        let mut out = BTreeSet::new();
        let mut seen: BTreeSet<(StateId, Vec<usize>, Vec<SymbolId>)> = BTreeSet::new();
        let mut queue: VecDeque<(StateId, Vec<usize>, Vec<SymbolId>)> = VecDeque::new();
        let start = (self.initial, vec![BOTTOM], Vec::new());
        seen.insert(start.clone());
        queue.push_back(start);
        let mut nodes = 0;
        while let Some((q, stack, word)) = queue.pop_front() {
            nodes += 1;
            if nodes > max_nodes {
                break;
            }
            if self.accepting.contains(&q) {
                out.insert(word.clone());
            }
            let top = *stack.last().expect("stack never empty");
            for e in &self.edges {
                if e.from != q || e.pop != top {
                    continue;
                }
                let mut new_word = word.clone();
                if let Some(s) = e.input {
                    if word.len() == max_len {
                        continue;
                    }
                    new_word.push(s);
                }
                let mut new_stack = stack.clone();
                new_stack.pop();
                new_stack.extend_from_slice(&e.push);
                if new_stack.is_empty() || new_stack.len() > max_stack {
                    continue;
                }
                let cfg = (e.to, new_stack, new_word);
                if seen.insert(cfg.clone()) {
                    queue.push_back(cfg);
                }
            }
        }
        out
    }
}

impl Pda {
    /// Silence the given input symbols (their edges become internal
    /// moves) and drop them from the alphabet.
    pub fn silence(&self, silent: &[&str]) -> Pda {
        let keep: Vec<String> =
            self.input_alphabet.iter().filter(|s| !silent.contains(&s.as_str())).cloned().collect();
        let mut out = self.clone();
        out.input_alphabet = keep;
        for e in &mut out.edges {
            e.input = e.input.and_then(|s| {
                let name = &self.input_alphabet[s];
                out.input_alphabet.iter().position(|k| k == name)
            });
        }
        out
    }
}

/// Single-state PDA over an arbitrary alphabet accepting the words whose
/// every prefix has at least as many `inc` as `dec` letters; all other
/// letters are neutral. The shape generalizes the fixed four-letter
/// automaton below.
pub fn prefix_nonneg_pda(alphabet: &[String], inc: &str, dec: &str) -> Pda {
    let mut pda = Pda::new(alphabet.to_vec(), vec!["⊥".into(), "e".into()]);
    let s = pda.add_state("s");
    pda.initial = s;
    pda.accepting.insert(s);
    let e = 1;
    for (i, a) in alphabet.iter().enumerate() {
        if a == inc {
            for gamma in [BOTTOM, e] {
                pda.add_edge(s, Some(i), gamma, s, vec![gamma, e]);
                pda.add_edge(s, Some(i), gamma, s, vec![gamma]);
            }
        } else if a == dec {
            pda.add_edge(s, Some(i), e, s, vec![]);
        } else {
            for gamma in [BOTTOM, e] {
                pda.add_edge(s, Some(i), gamma, s, vec![gamma]);
            }
        }
    }
    pda
}

/// The single-state PDA recognizing the words over {inc, dec, t, f} whose
/// every prefix has at least as many inc as dec. Symbol `e` counts the
/// inc surplus; t and f are neutral; the pushing and the neutral inc
/// loops are both present. A dec on the bottom symbol has no edge, so an
/// excess dec blocks.
pub fn l_geq0_pda() -> Pda {
    prefix_nonneg_pda(
        &["inc".into(), "dec".into(), "t".into(), "f".into()],
        "inc",
        "dec",
    )
}

/// Turn an NFA whose alphabet contains `inc` and `dec` letters into the
/// energy-counting PDA: inc becomes a silent push, dec a silent pop, and
/// each accepting state drains its stack through a fresh action whose
/// count equals the final energy, accepting after a bottom test.
pub fn energy_pda_of_nfa(nfa: &Nfa, inc: &str, dec: &str, drain: &str) -> Result<Pda, LangError> {
    for sym in &nfa.alphabet {
        if (sym.starts_with("inc") || sym.starts_with("dec")) && sym != inc && sym != dec {
            return Err(LangError::Unsupported(format!(
                "energy PDA construction needs a single energy variable, found action {}",
                sym
            )));
        }
    }
    let src = nfa.eliminate_epsilon().trim();
    let inc_id = src.symbol_id(inc);
    let dec_id = src.symbol_id(dec);
    let mut alphabet: Vec<String> = src
        .alphabet
        .iter()
        .filter(|s| Some(s.as_str()) != Some(inc) && s.as_str() != dec)
        .cloned()
        .collect();
    alphabet.push(drain.to_string());
    let mut pda = Pda::new(alphabet, vec!["⊥".into(), "e".into()]);
    let e = 1;
    for l in &src.state_labels {
        pda.add_state(l.clone());
    }
    pda.initial = src.initial;
    let map_sym = |s: SymbolId, pda: &Pda| -> Option<SymbolId> {
        pda.symbol_id(&src.alphabet[s])
    };
    for (fq, l, tq) in &src.edges {
        let l = l.expect("epsilon-free");
        if Some(l) == inc_id {
            for gamma in [BOTTOM, e] {
                pda.add_edge(*fq, None, gamma, *tq, vec![gamma, e]);
            }
        } else if Some(l) == dec_id {
            pda.add_edge(*fq, None, e, *tq, vec![]);
        } else {
            let sym = map_sym(l, &pda).expect("kept symbol");
            for gamma in [BOTTOM, e] {
                pda.add_edge(*fq, Some(sym), gamma, *tq, vec![gamma]);
            }
        }
    }
    let drain_id = pda.symbol_id(drain).expect("drain symbol");
    for qf in src.accepting.iter().copied().collect::<Vec<_>>() {
        let qf_prime = pda.add_state(format!("{}'", src.state_labels[qf]));
        pda.add_edge(qf, Some(drain_id), e, qf, vec![]);
        pda.add_edge(qf, None, BOTTOM, qf_prime, vec![BOTTOM]);
        pda.accepting.insert(qf_prime);
    }
    Ok(pda)
}

/// Conjunction of atoms `energy rel bound` carried by a marker action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerAtoms {
    pub atoms: Vec<(MarkerRel, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerRel {
    Lt,
    Le,
    Ge,
    Gt,
}

impl MarkerAtoms {
    fn holds_at(&self, value: u64) -> bool {
        self.atoms.iter().all(|(rel, b)| match rel {
            MarkerRel::Lt => value < *b,
            MarkerRel::Le => value <= *b,
            MarkerRel::Ge => value >= *b,
            MarkerRel::Gt => value > *b,
        })
    }

    fn holds_above(&self, m_e: u64) -> bool {
        // value is some v > m_e, and every bound is <= m_e
        self.atoms.iter().all(|(rel, b)| match rel {
            MarkerRel::Lt | MarkerRel::Le => false,
            MarkerRel::Ge | MarkerRel::Gt => *b <= m_e,
        })
    }
}

/// The guarded-energy construction: `m_e + 2` copies of a region NFA
/// whose energy guards appear as marker actions; copies `0..=m_e` track
/// the exact energy, the top copy tracks the surplus beyond `m_e` on the
/// stack. Accepting states drain: the stack is emptied first, then one
/// drain action per copy traversed down to copy 0, which alone accepts.
pub fn guarded_energy_pda(
    region_nfa: &Nfa,
    markers: &BTreeMap<String, MarkerAtoms>,
    inc: &str,
    dec: &str,
    drain: &str,
    m_e: u64,
) -> Result<Pda, LangError> {
    let src = region_nfa.eliminate_epsilon().trim();
    let inc_id = src.symbol_id(inc);
    let dec_id = src.symbol_id(dec);
    for name in markers.keys() {
        if src.symbol_id(name).is_none() && !src.alphabet.iter().any(|a| a == name) {
            return Err(LangError::Unsupported(format!(
                "marker action {} not in region automaton alphabet",
                name
            )));
        }
    }
    let mut alphabet: Vec<String> = src
        .alphabet
        .iter()
        .filter(|s| {
            s.as_str() != inc && s.as_str() != dec && !markers.contains_key(s.as_str())
        })
        .cloned()
        .collect();
    alphabet.push(drain.to_string());
    let mut pda = Pda::new(alphabet, vec!["⊥".into(), "e".into()]);
    let e = 1;
    let copies = (m_e + 2) as usize; // 0..=m_e exact, last = above
    let top = copies - 1;
    let state = |q: StateId, c: usize| q * copies + c;
    for c in 0..copies {
        for q in 0..src.n_states() {
            let _ = c;
            let _ = q;
        }
    }
    for q in 0..src.n_states() {
        for c in 0..copies {
            pda.add_state(format!("{}@{}", src.state_labels[q], c));
        }
    }
    // interleaved layout: fix indexing as q*copies + c requires the states
    // to be added in (q, c) order; they were added in that order above.
    pda.initial = state(src.initial, 0);
    for (fq, l, tq) in &src.edges {
        let l = l.expect("epsilon-free");
        let name = &src.alphabet[l];
        if Some(l) == inc_id {
            for c in 0..copies {
                if c < top {
                    pda.add_edge(state(*fq, c), None, BOTTOM, state(*tq, c + 1), vec![BOTTOM]);
                } else {
                    for gamma in [BOTTOM, e] {
                        pda.add_edge(state(*fq, top), None, gamma, state(*tq, top), vec![gamma, e]);
                    }
                }
            }
        } else if Some(l) == dec_id {
            for c in 1..=top {
                if c < top {
                    pda.add_edge(state(*fq, c), None, BOTTOM, state(*tq, c - 1), vec![BOTTOM]);
                } else {
                    // surplus on the stack: pop one e, stay on top;
                    // on empty stack the value was m_e + 1, drop a copy
                    pda.add_edge(state(*fq, top), None, e, state(*tq, top), vec![]);
                    pda.add_edge(state(*fq, top), None, BOTTOM, state(*tq, top - 1), vec![BOTTOM]);
                }
            }
            // dec in copy 0 is deleted: energy may not go negative
        } else if let Some(marker) = markers.get(name) {
            for c in 0..copies {
                let ok = if c < top { marker.holds_at(c as u64) } else { marker.holds_above(m_e) };
                if ok {
                    pda.add_edge(state(*fq, c), None, BOTTOM, state(*tq, c), vec![BOTTOM]);
                    if c == top {
                        pda.add_edge(state(*fq, c), None, e, state(*tq, c), vec![e]);
                    }
                }
            }
        } else {
            let sym = pda.symbol_id(name).expect("kept symbol");
            for c in 0..copies {
                pda.add_edge(state(*fq, c), Some(sym), BOTTOM, state(*tq, c), vec![BOTTOM]);
                if c == top {
                    pda.add_edge(state(*fq, c), Some(sym), e, state(*tq, c), vec![e]);
                }
            }
        }
    }
    let drain_id = pda.symbol_id(drain).expect("drain symbol");
    for qf in src.accepting.iter().copied().collect::<Vec<_>>() {
        // top copy: empty the stack first, then step down on the bottom test
        pda.add_edge(state(qf, top), Some(drain_id), e, state(qf, top), vec![]);
        pda.add_edge(state(qf, top), Some(drain_id), BOTTOM, state(qf, top - 1), vec![BOTTOM]);
        for c in 1..top {
            pda.add_edge(state(qf, c), Some(drain_id), BOTTOM, state(qf, c - 1), vec![BOTTOM]);
        }
        let qf_prime = pda.add_state(format!("{}'", src.state_labels[qf]));
        pda.add_edge(state(qf, 0), None, BOTTOM, qf_prime, vec![BOTTOM]);
        pda.accepting.insert(qf_prime);
    }
    Ok(pda)
}

/// Standard product of a PDA and an epsilon-free NFA over the shared
/// non-silent alphabet. The language is the intersection.
pub fn pda_nfa_product(p: &Pda, n: &Nfa) -> Result<Pda, LangError> {
    if p.input_alphabet != n.alphabet {
        return Err(LangError::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            p.input_alphabet, n.alphabet
        )));
    }
    let n = n.eliminate_epsilon();
    let mut nadj: Vec<Vec<(SymbolId, StateId)>> = vec![Vec::new(); n.n_states()];
    for (f, l, t) in &n.edges {
        nadj[*f].push((l.expect("epsilon-free"), *t));
    }
    let mut out = Pda::new(p.input_alphabet.clone(), p.stack_alphabet.clone());
    let state = |pq: StateId, nq: StateId| pq * n.n_states() + nq;
    for pq in 0..p.n_states() {
        for nq in 0..n.n_states() {
            out.add_state(format!("{}|{}", p.state_labels[pq], n.state_labels[nq]));
        }
    }
    out.initial = state(p.initial, n.initial);
    for e in &p.edges {
        match e.input {
            None => {
                for nq in 0..n.n_states() {
                    out.add_edge(state(e.from, nq), None, e.pop, state(e.to, nq), e.push.clone());
                }
            }
            Some(s) => {
                for nq in 0..n.n_states() {
                    for (l, nt) in &nadj[nq] {
                        if *l == s {
                            out.add_edge(
                                state(e.from, nq),
                                Some(s),
                                e.pop,
                                state(e.to, *nt),
                                e.push.clone(),
                            );
                        }
                    }
                }
            }
        }
    }
    for pq in &p.accepting {
        for nq in &n.accepting {
            out.accepting.insert(state(*pq, *nq));
        }
    }
    Ok(out)
}

/// Triple analysis: for the drain-augmented, push-normalized PDA, compute
/// for every triple (q, gamma, q') the shortest word taking the machine
/// from q with gamma on top to q' having popped gamma (net). Dijkstra
/// over derivations; words reconstructed through backpointers.
pub struct TripleAnalysis {
    pub pda: Pda,
    /// Index of the drain state appended to the PDA.
    pub drain_state: StateId,
    pub triples: BTreeMap<(StateId, usize, StateId), TripleInfo>,
}

#[derive(Debug, Clone)]
pub struct TripleInfo {
    pub cost: usize,
    back: Back,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Back {
    Base(usize),
    Single(usize, (StateId, usize, StateId)),
    Double(usize, (StateId, usize, StateId), (StateId, usize, StateId)),
}

pub fn triple_analysis(p: &Pda) -> TripleAnalysis {
    // drain: from accepting states, silently pop everything
    let mut pda = p.normalized();
    let drain = pda.add_state("drain");
    for f in pda.accepting.clone() {
        for gamma in 0..pda.stack_alphabet.len() {
            pda.add_edge(f, None, gamma, drain, vec![]);
        }
    }
    for gamma in 0..pda.stack_alphabet.len() {
        pda.add_edge(drain, None, gamma, drain, vec![]);
    }

    let edges = pda.edges.clone();
    type Triple = (StateId, usize, StateId);
    let mut best: BTreeMap<Triple, TripleInfo> = BTreeMap::new();
    let mut heap: BinaryHeap<Reverse<(usize, Triple, Back)>> = BinaryHeap::new();

    // indexes
    let mut single_edges: BTreeMap<(StateId, usize), Vec<usize>> = BTreeMap::new();
    let mut double_edges_by_first: BTreeMap<(StateId, usize), Vec<usize>> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        let cost = usize::from(e.input.is_some());
        match e.push.len() {
            0 => {
                heap.push(Reverse(((cost), (e.from, e.pop, e.to), Back::Base(i))));
            }
            1 => {
                single_edges.entry((e.to, e.push[0])).or_default().push(i);
            }
            2 => {
                // push [g1, g2], g2 on top: continuation pops g2 at e.to,
                // then pops g1 from wherever that ends
                double_edges_by_first.entry((e.to, e.push[1])).or_default().push(i);
            }
            _ => unreachable!("normalized"),
        }
    }

    // settled triples indexed by (start, gamma)
    let mut settled_by_start: BTreeMap<(StateId, usize), Vec<Triple>> = BTreeMap::new();

    while let Some(Reverse((cost, triple, back))) = heap.pop() {
        if best.contains_key(&triple) {
            continue;
        }
        best.insert(triple, TripleInfo { cost, back });
        let (x, gx, y) = triple;
        settled_by_start.entry((x, gx)).or_default().push(triple);

        // rule: single-push edges ending at (x, gx)
        if let Some(es) = single_edges.get(&(x, gx)) {
            for &i in es {
                let e = &edges[i];
                let c = usize::from(e.input.is_some()) + cost;
                let cand = (e.from, e.pop, y);
                if !best.contains_key(&cand) {
                    heap.push(Reverse((c, cand, Back::Single(i, triple))));
                }
            }
        }
        // rule: double-push edges whose top continuation is this triple
        if let Some(es) = double_edges_by_first.get(&(x, gx)) {
            for &i in es {
                let e = &edges[i];
                // need a settled (y, push[0], s)
                if let Some(seconds) = settled_by_start.get(&(y, e.push[0])) {
                    for t2 in seconds.clone() {
                        let c = usize::from(e.input.is_some()) + cost + best[&t2].cost;
                        let cand = (e.from, e.pop, t2.2);
                        if !best.contains_key(&cand) {
                            heap.push(Reverse((c, cand, Back::Double(i, triple, t2))));
                        }
                    }
                }
            }
        }
        // rule: this triple can be the second part of a double push:
        // edges with push [gx, g2] from q, where (e.to, g2, x) is settled
        for (i, e) in edges.iter().enumerate() {
            if e.push.len() == 2 && e.push[0] == gx {
                if let Some(firsts) = settled_by_start.get(&(e.to, e.push[1])) {
                    for t1 in firsts.clone() {
                        if t1.2 == x {
                            let c = usize::from(e.input.is_some()) + best[&t1].cost + cost;
                            let cand = (e.from, e.pop, y);
                            if !best.contains_key(&cand) {
                                heap.push(Reverse((c, cand, Back::Double(i, t1, triple))));
                            }
                        }
                    }
                }
            }
        }
    }

    TripleAnalysis { pda, drain_state: drain, triples: best }
}

impl TripleAnalysis {
    fn word_of(&self, triple: (StateId, usize, StateId), out: &mut Vec<SymbolId>) {
        let info = &self.triples[&triple];
        match &info.back {
            Back::Base(i) => {
                if let Some(s) = self.pda.edges[*i].input {
                    out.push(s);
                }
            }
            Back::Single(i, t) => {
                if let Some(s) = self.pda.edges[*i].input {
                    out.push(s);
                }
                self.word_of(*t, out);
            }
            Back::Double(i, t1, t2) => {
                if let Some(s) = self.pda.edges[*i].input {
                    out.push(s);
                }
                self.word_of(*t1, out);
                self.word_of(*t2, out);
            }
        }
    }
}

/// Emptiness of the PDA language (final-state acceptance) with a shortest
/// witness word when non-empty. Returns (is_empty, witness).
pub fn pda_emptiness(p: &Pda) -> (bool, Option<Vec<SymbolId>>) {
    let analysis = triple_analysis(p);
    let key = (analysis.pda.initial, BOTTOM, analysis.drain_state);
    match analysis.triples.get(&key) {
        None => (true, None),
        Some(_) => {
            let mut word = Vec::new();
            analysis.word_of(key, &mut word);
            (false, Some(word))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(pda: &Pda, names: &[&str]) -> Vec<SymbolId> {
        names.iter().map(|n| pda.symbol_id(n).unwrap()).collect()
    }

    #[test]
    fn l_geq0_prefix_condition() {
        let pda = l_geq0_pda();
        assert!(pda.accepts_bounded(&word(&pda, &["inc", "dec"]), 32, 100_000));
        assert!(!pda.accepts_bounded(&word(&pda, &["dec"]), 32, 100_000));
        assert!(pda.accepts_bounded(
            &word(&pda, &["t", "inc", "inc", "f", "dec", "dec", "f"]),
            32,
            100_000
        ));
        assert!(!pda.accepts_bounded(&word(&pda, &["inc", "dec", "dec", "inc"]), 32, 100_000));
        // epsilon accepted, single state initial = final
        assert!(pda.accepts_bounded(&[], 32, 1000));
        assert_eq!(pda.n_states(), 1);
    }

    #[test]
    fn emptiness_witness() {
        let pda = l_geq0_pda();
        let (empty, w) = pda_emptiness(&pda);
        assert!(!empty);
        assert_eq!(w.unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn emptiness_of_blocked_pda() {
        // accepting state requires popping a symbol that is never pushed
        let mut pda = Pda::new(vec!["a".into()], vec!["⊥".into(), "e".into()]);
        let q0 = pda.add_state("q0");
        let q1 = pda.add_state("q1");
        pda.initial = q0;
        pda.add_edge(q0, Some(0), 1, q1, vec![]);
        pda.accepting.insert(q1);
        let (empty, _) = pda_emptiness(&pda);
        assert!(empty);
    }

    #[test]
    fn energy_pda_counts_final_energy() {
        // NFA: inc inc then accepting; energy 2 -> words a a over the drain
        let mut nfa = Nfa::new(vec!["inc".into(), "dec".into(), "t".into()]);
        let q0 = nfa.add_state("q0");
        let q1 = nfa.add_state("q1");
        let q2 = nfa.add_state("q2");
        nfa.initial = q0;
        nfa.add_edge(q0, Some(0), q1);
        nfa.add_edge(q1, Some(0), q2);
        nfa.accepting.insert(q2);
        let pda = energy_pda_of_nfa(&nfa, "inc", "dec", "a").unwrap();
        let words = pda.enumerate_words_bounded(4, 16, 100_000);
        let a = pda.symbol_id("a").unwrap();
        assert!(words.contains(&vec![a, a]));
        assert!(!words.contains(&vec![a]));
        assert!(!words.contains(&vec![a, a, a]));
    }

    #[test]
    fn product_with_nfa() {
        let pda = l_geq0_pda();
        // NFA accepting dec . anything over the same alphabet
        let mut nfa = Nfa::new(pda.input_alphabet.clone());
        let q0 = nfa.add_state("q0");
        let q1 = nfa.add_state("q1");
        nfa.initial = q0;
        nfa.add_edge(q0, Some(1), q1);
        for s in 0..4 {
            nfa.add_edge(q1, Some(s), q1);
        }
        nfa.accepting.insert(q1);
        let product = pda_nfa_product(&pda, &nfa).unwrap();
        let (empty, _) = pda_emptiness(&product);
        assert!(empty);
    }
}
