//! The Parikh-by-block automaton: a finite automaton over tick actions
//! whose transitions carry the Parikh image of the tick-free fragment
//! language they stand for, plus the synchronized product check used to
//! compare two of them blockwise.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use opaq_lang::nfa::Nfa;
use opaq_lang::semilinear::{
    parikh_of_nfa, slset_intersection_witness, SemilinearSet, DEFAULT_PARIKH_STATE_CAP,
};
use opaq_lang::LangError;

/// Label of the virtual transition closing a word (the fragment from the
/// last tick to an accepting state).
pub const END_TICK: &str = "end";

#[derive(Debug, Clone)]
pub struct PbbEdge {
    pub from: usize,
    pub to: usize,
    /// A tick action or [`END_TICK`].
    pub tick: String,
    pub blocks: SemilinearSet,
}

#[derive(Debug, Clone)]
pub struct PbbAutomaton {
    pub state_labels: Vec<String>,
    pub initial: usize,
    /// The single virtual end state.
    pub final_state: usize,
    pub edges: Vec<PbbEdge>,
    pub counted_alphabet: Vec<String>,
}

/// Build the Parikh-by-block automaton of an NFA over the tick alphabet:
/// states are the initial state plus every tick target, a tick edge
/// carries the Parikh image of the tick-free fragment between its
/// endpoints, and a virtual end edge carries the fragment image up to
/// the accepting states. Edges with empty images are never created.
pub fn parikh_by_block(
    nfa: &Nfa,
    tick_alphabet: &[String],
    counted_alphabet: &[String],
    state_cap: usize,
) -> Result<PbbAutomaton, LangError> {
    let src = nfa.eliminate_epsilon().trim();
    let tick_ids: BTreeMap<usize, String> = tick_alphabet
        .iter()
        .filter_map(|t| src.symbol_id(t).map(|i| (i, t.clone())))
        .collect();

    // tick-free skeleton shared by every fragment query
    let mut fragment = src.clone();
    fragment.edges.retain(|(_, l, _)| l.map(|s| !tick_ids.contains_key(&s)).unwrap_or(true));

    // anchor states: initial plus all tick targets
    let mut anchors: Vec<usize> = vec![src.initial];
    for (_, l, t) in &src.edges {
        if l.map(|s| tick_ids.contains_key(&s)).unwrap_or(false) && !anchors.contains(t) {
            anchors.push(*t);
        }
    }
    anchors.sort_unstable();

    let mut state_labels: Vec<String> = anchors.iter().map(|a| src.state_labels[*a].clone()).collect();
    state_labels.push(END_TICK.to_string());
    let final_state = state_labels.len() - 1;
    let anchor_index = |q: usize| anchors.iter().position(|a| *a == q);

    let fragment_image = |from: usize, finals: &BTreeSet<usize>| -> Result<SemilinearSet, LangError> {
        let mut f = fragment.clone();
        f.initial = from;
        f.accepting = finals.clone();
        parikh_of_nfa(&f, counted_alphabet, state_cap)
    };

    let mut edges: Vec<PbbEdge> = Vec::new();
    for (ai, a) in anchors.iter().enumerate() {
        // group tick transitions by (tick letter, tick target)
        let mut sources_by: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();
        for (f, l, t) in &src.edges {
            if let Some(s) = l {
                if tick_ids.contains_key(s) {
                    sources_by.entry((*s, *t)).or_default().insert(*f);
                }
            }
        }
        for ((tick_sym, tick_target), tick_sources) in &sources_by {
            let image = fragment_image(*a, tick_sources)?;
            if image.is_empty() {
                continue;
            }
            let to = anchor_index(*tick_target).expect("tick targets are anchors");
            edges.push(PbbEdge {
                from: ai,
                to,
                tick: tick_ids[tick_sym].clone(),
                blocks: image,
            });
        }
        // fragment from this anchor to the accepting states closes a word
        if !src.accepting.is_empty() {
            let image = fragment_image(*a, &src.accepting)?;
            if !image.is_empty() {
                edges.push(PbbEdge {
                    from: ai,
                    to: final_state,
                    tick: END_TICK.to_string(),
                    blocks: image,
                });
            }
        }
    }
    Ok(PbbAutomaton {
        state_labels,
        initial: anchor_index(src.initial).expect("initial is an anchor"),
        final_state,
        edges,
        counted_alphabet: counted_alphabet.to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct PbbProductEdge {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub tick: String,
    /// A vector common to both block images, if any.
    pub common: Option<Vec<u64>>,
}

/// The synchronized product over the tick alphabet, with the per-edge
/// intersection witnesses already computed.
pub fn pbb_product(p1: &PbbAutomaton, p2: &PbbAutomaton) -> Result<Vec<PbbProductEdge>, LangError> {
    let mut out = Vec::new();
    for e1 in &p1.edges {
        for e2 in &p2.edges {
            if e1.tick != e2.tick {
                continue;
            }
            let common = slset_intersection_witness(&e1.blocks, &e2.blocks)?;
            out.push(PbbProductEdge {
                from: (e1.from, e2.from),
                to: (e1.to, e2.to),
                tick: e1.tick.clone(),
                common,
            });
        }
    }
    Ok(out)
}

/// One step of a witness path: the tick taken and the block vector the
/// two automata share on it.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PbbWitnessStep {
    pub tick: String,
    pub common_block: Vec<u64>,
}

/// Whether an accepting path over non-empty-intersection edges exists in
/// the synchronized product; the witness carries one common vector per
/// edge.
pub fn pbb_product_check(
    p1: &PbbAutomaton,
    p2: &PbbAutomaton,
) -> Result<(bool, Option<Vec<PbbWitnessStep>>), LangError> {
    let product = pbb_product(p1, p2)?;
    let start = (p1.initial, p2.initial);
    let goal = (p1.final_state, p2.final_state);
    let mut seen = BTreeSet::from([start]);
    let mut queue: VecDeque<((usize, usize), Vec<PbbWitnessStep>)> =
        VecDeque::from([(start, Vec::new())]);
    while let Some((at, path)) = queue.pop_front() {
        if at == goal {
            return Ok((true, Some(path)));
        }
        for e in &product {
            if e.from != at {
                continue;
            }
            let Some(common) = &e.common else { continue };
            if seen.insert(e.to) {
                let mut next = path.clone();
                next.push(PbbWitnessStep { tick: e.tick.clone(), common_block: common.clone() });
                queue.push_back((e.to, next));
            }
        }
    }
    Ok((false, None))
}

pub fn default_state_cap() -> usize {
    DEFAULT_PARIKH_STATE_CAP
}
