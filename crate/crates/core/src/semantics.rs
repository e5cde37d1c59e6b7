//! Exact concrete semantics: delay and discrete successors over
//! arbitrary-precision rationals, runs and their statistics, the
//! per-time-unit observation functions, and a bounded grid enumerator
//! used as a test oracle.

use std::collections::BTreeSet;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{atom_to_string, Atom, GuardedMeta, SimpleConstraint, VarRef};
use crate::CoreError;

pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn q_ratio(p: i64, q: i64) -> Q {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Render as "p/q", or just "p" for integers.
pub fn q_to_string(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_from_string(s: &str) -> Result<Q, CoreError> {
    let parse_int = |t: &str| -> Result<BigInt, CoreError> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| CoreError::Parse(format!("invalid rational \"{}\"", s)))
    };
    match s.split_once('/') {
        None => Ok(BigRational::from_integer(parse_int(s)?)),
        Some((p, q)) => {
            let denom = parse_int(q)?;
            if denom.is_zero() {
                return Err(CoreError::Parse(format!("invalid rational \"{}\"", s)));
            }
            Ok(BigRational::new(parse_int(p)?, denom))
        }
    }
}

fn q_ceil_usize(x: &Q) -> usize {
    x.ceil().to_integer().to_usize().unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConcreteState {
    pub location: usize,
    pub clocks: Vec<Q>,
    pub energies: Vec<Q>,
}

impl ConcreteState {
    pub fn initial(meta: &GuardedMeta) -> Result<Self, CoreError> {
        let location = meta
            .initial_index()
            .ok_or_else(|| CoreError::Semantics("model has no initial location".into()))?;
        Ok(ConcreteState {
            location,
            clocks: vec![Q::zero(); meta.clocks.len()],
            energies: vec![Q::zero(); meta.energies.len()],
        })
    }
}

fn atom_value(state: &ConcreteState, var: VarRef) -> Q {
    match var {
        VarRef::Clock(i) => state.clocks[i].clone(),
        VarRef::Energy(i) => state.energies[i].clone(),
    }
}

fn atom_holds(state: &ConcreteState, a: &Atom) -> bool {
    let v = atom_value(state, a.var);
    let b = q_int(a.bound);
    match a.rel {
        crate::model::Rel::Lt => v < b,
        crate::model::Rel::Le => v <= b,
        crate::model::Rel::Ge => v >= b,
        crate::model::Rel::Gt => v > b,
    }
}

pub fn satisfies(state: &ConcreteState, c: &SimpleConstraint) -> bool {
    c.atoms.iter().all(|a| atom_holds(state, a))
}

fn first_failing_atom<'c>(state: &ConcreteState, c: &'c SimpleConstraint) -> Option<&'c Atom> {
    c.atoms.iter().find(|a| !atom_holds(state, a))
}

/// Clocks advance by d, energies by rate * d. The invariant and energy
/// non-negativity are affine in the delay, so satisfaction on [0, d] is
/// equivalent to satisfaction at both endpoints.
pub fn delay_successor(meta: &GuardedMeta, state: &ConcreteState, d: &Q) -> Result<ConcreteState, CoreError> {
    if d.is_negative() {
        return Err(CoreError::Semantics("negative delay".into()));
    }
    let loc = &meta.locations[state.location];
    if let Some(a) = first_failing_atom(state, &loc.invariant) {
        return Err(CoreError::Semantics(format!(
            "state violates invariant atom {} of location {}",
            atom_to_string(meta, a),
            loc.name
        )));
    }
    if state.energies.iter().any(Signed::is_negative) {
        return Err(CoreError::Semantics("negative energy in source state".into()));
    }
    let mut next = state.clone();
    for c in &mut next.clocks {
        *c += d;
    }
    for (i, e) in next.energies.iter_mut().enumerate() {
        *e += q_int(loc.rates.0[i]) * d;
    }
    if let Some(a) = first_failing_atom(&next, &loc.invariant) {
        return Err(CoreError::Semantics(format!(
            "delay {} leaves invariant of {}: atom {} fails",
            q_to_string(d),
            loc.name,
            atom_to_string(meta, a)
        )));
    }
    if let Some(i) = next.energies.iter().position(Signed::is_negative) {
        return Err(CoreError::Semantics(format!(
            "delay {} drives energy {} negative",
            q_to_string(d),
            meta.energies[i]
        )));
    }
    Ok(next)
}

pub fn discrete_successor(
    meta: &GuardedMeta,
    state: &ConcreteState,
    edge_idx: usize,
) -> Result<ConcreteState, CoreError> {
    let edge = meta
        .edges
        .get(edge_idx)
        .ok_or_else(|| CoreError::Semantics(format!("no edge #{}", edge_idx)))?;
    if edge.source != state.location {
        return Err(CoreError::Semantics(format!(
            "edge #{} starts at {}, state is at {}",
            edge_idx, meta.locations[edge.source].name, meta.locations[state.location].name
        )));
    }
    if let Some(a) = first_failing_atom(state, &edge.guard) {
        return Err(CoreError::Semantics(format!(
            "guard unsatisfied: atom {} fails",
            atom_to_string(meta, a)
        )));
    }
    let mut next = state.clone();
    next.location = edge.target;
    for c in &edge.resets {
        next.clocks[*c] = Q::zero();
    }
    for (i, u) in edge.updates.0.iter().enumerate() {
        next.energies[i] += q_int(*u);
    }
    if let Some(i) = next.energies.iter().position(Signed::is_negative) {
        return Err(CoreError::Semantics(format!(
            "update drives energy {} negative",
            meta.energies[i]
        )));
    }
    let target = &meta.locations[edge.target];
    if let Some(a) = first_failing_atom(&next, &target.invariant) {
        return Err(CoreError::Semantics(format!(
            "target invariant of {} violated: atom {} fails",
            target.name,
            atom_to_string(meta, a)
        )));
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RunStep {
    pub delay: Q,
    pub edge: usize,
    pub state: ConcreteState,
}

/// Alternating concrete states and (delay, edge) steps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Run {
    pub initial: ConcreteState,
    pub steps: Vec<RunStep>,
}

impl Run {
    pub fn empty(initial: ConcreteState) -> Self {
        Run { initial, steps: Vec::new() }
    }

    pub fn last_state(&self) -> &ConcreteState {
        self.steps.last().map(|s| &s.state).unwrap_or(&self.initial)
    }

    pub fn states(&self) -> impl Iterator<Item = &ConcreteState> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.state))
    }

    pub fn duration(&self) -> Q {
        self.steps.iter().fold(Q::zero(), |acc, s| acc + &s.delay)
    }
}

/// Replay a scripted list of (delay, edge index) steps with validation.
pub fn replay(meta: &GuardedMeta, script: &[(Q, usize)]) -> Result<Run, CoreError> {
    let mut run = Run::empty(ConcreteState::initial(meta)?);
    for (delay, edge) in script {
        let mid = delay_successor(meta, run.last_state(), delay)?;
        let state = discrete_successor(meta, &mid, *edge)?;
        run.steps.push(RunStep { delay: delay.clone(), edge: *edge, state });
    }
    Ok(run)
}

/// Resolve an action name (or the silent action) to the unique matching
/// edge out of the given location, optionally narrowed by the target
/// location name when the action alone is ambiguous.
pub fn resolve_edge(
    meta: &GuardedMeta,
    location: usize,
    action: Option<&str>,
    target: Option<&str>,
) -> Result<usize, CoreError> {
    let wanted = match action {
        None => None,
        Some(name) => Some(meta.action_index(name).ok_or_else(|| {
            CoreError::Semantics(format!("\"{}\" is not a declared action", name))
        })?),
    };
    let target_idx = match target {
        None => None,
        Some(name) => Some(meta.location_index(name).ok_or_else(|| {
            CoreError::Semantics(format!("\"{}\" is not a declared location", name))
        })?),
    };
    let matches: Vec<usize> = meta
        .edges_from(location)
        .filter(|(_, e)| e.action == wanted && target_idx.map(|t| e.target == t).unwrap_or(true))
        .map(|(i, _)| i)
        .collect();
    match matches.len() {
        0 => Err(CoreError::Semantics(format!(
            "no edge from {} with action {}",
            meta.locations[location].name,
            action.unwrap_or("ε")
        ))),
        1 => Ok(matches[0]),
        _ => Err(CoreError::Semantics(format!(
            "ambiguous action {} from {} ({} candidates)",
            action.unwrap_or("ε"),
            meta.locations[location].name,
            matches.len()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub duration: String,
    pub final_energies: Vec<String>,
    pub is_private: bool,
    pub is_public: bool,
    pub timed_word: Vec<(String, String)>,
}

pub struct RunStatsExact {
    pub duration: Q,
    pub final_energies: Vec<Q>,
    pub is_private: bool,
    pub is_public: bool,
    pub timed_word: Vec<(Q, String)>,
}

pub fn run_stats(meta: &GuardedMeta, run: &Run) -> RunStatsExact {
    let duration = run.duration();
    let final_energies = run.last_state().energies.clone();
    let last_final = meta.locations[run.last_state().location].is_final;
    let visited_private = run.states().any(|s| meta.locations[s.location].is_private);
    let mut timed_word = Vec::new();
    let mut t = Q::zero();
    for step in &run.steps {
        t += &step.delay;
        if let Some(a) = meta.edges[step.edge].action {
            timed_word.push((t.clone(), meta.actions[a].clone()));
        }
    }
    RunStatsExact {
        duration,
        final_energies,
        is_private: visited_private && last_final,
        is_public: !visited_private && last_final,
        timed_word,
    }
}

impl RunStatsExact {
    pub fn display(&self) -> RunStats {
        RunStats {
            duration: q_to_string(&self.duration),
            final_energies: self.final_energies.iter().map(q_to_string).collect(),
            is_private: self.is_private,
            is_public: self.is_public,
            timed_word: self
                .timed_word
                .iter()
                .map(|(t, a)| (q_to_string(t), a.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceKind {
    Deo,
    Bdeo,
}

/// Per-time-unit observation: for DEO one energy valuation per tick, for
/// bDEO a (possibly empty) sequence of valuations per tick.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ObservationTrace {
    Deo(Vec<Vec<Q>>),
    Bdeo(Vec<Vec<Vec<Q>>>),
}

impl ObservationTrace {
    pub fn render(&self) -> String {
        fn valuation(v: &[Q]) -> String {
            if v.len() == 1 {
                q_to_string(&v[0])
            } else {
                format!("({})", v.iter().map(q_to_string).collect::<Vec<_>>().join(","))
            }
        }
        match self {
            ObservationTrace::Deo(ticks) => {
                ticks.iter().map(|v| valuation(v)).collect::<Vec<_>>().join(", ")
            }
            ObservationTrace::Bdeo(ticks) => ticks
                .iter()
                .map(|seq| {
                    if seq.is_empty() {
                        "ε".to_string()
                    } else {
                        format!(
                            "({})",
                            seq.iter().map(|v| valuation(v)).collect::<Vec<_>>().join(",")
                        )
                    }
                })
                .collect::<Vec<_>>()
                .join(", "),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ObservationTrace::Deo(ticks) => serde_json::json!(ticks
                .iter()
                .map(|v| v.iter().map(q_to_string).collect::<Vec<_>>())
                .collect::<Vec<_>>()),
            ObservationTrace::Bdeo(ticks) => serde_json::json!(ticks
                .iter()
                .map(|seq| seq
                    .iter()
                    .map(|v| v.iter().map(q_to_string).collect::<Vec<_>>())
                    .collect::<Vec<_>>())
                .collect::<Vec<_>>()),
        }
    }
}

/// Energy level at time t: the zero valuation before the first event,
/// otherwise the valuation at the last event whose cumulative delay is
/// at most t (events exactly at t included).
pub fn energy_level_at(run: &Run, t: &Q) -> Vec<Q> {
    if run.steps.is_empty() {
        return run.initial.energies.clone();
    }
    let d0 = &run.steps[0].delay;
    if t < d0 {
        return vec![Q::zero(); run.initial.energies.len()];
    }
    let mut best = run.initial.energies.clone();
    let mut cum = Q::zero();
    for step in &run.steps {
        cum += &step.delay;
        if &cum <= t {
            best = step.state.energies.clone();
        } else {
            break;
        }
    }
    best
}

/// Discrete energy observation: EL at times 1 .. ceil(duration). The
/// zero-duration run yields the empty trace.
pub fn deo(run: &Run) -> ObservationTrace {
    let k = q_ceil_usize(&run.duration());
    let mut ticks = Vec::with_capacity(k);
    for t in 1..=k {
        ticks.push(energy_level_at(run, &q_int(t as i64)));
    }
    ObservationTrace::Deo(ticks)
}

/// A run state annotated with its absolute time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedQuadruple {
    pub location: usize,
    pub clocks: Vec<Q>,
    pub energies: Vec<Q>,
    pub time: Q,
}

/// Embed absolute times and project onto states.
pub fn abs_t(run: &Run) -> Vec<TimedQuadruple> {
    let mut out = Vec::with_capacity(run.steps.len() + 1);
    let mut t = Q::zero();
    out.push(TimedQuadruple {
        location: run.initial.location,
        clocks: run.initial.clocks.clone(),
        energies: run.initial.energies.clone(),
        time: t.clone(),
    });
    for step in &run.steps {
        t += &step.delay;
        out.push(TimedQuadruple {
            location: step.state.location,
            clocks: step.state.clocks.clone(),
            energies: step.state.energies.clone(),
            time: t.clone(),
        });
    }
    out
}

/// Keep the head and drop every quadruple whose energy valuation equals
/// its predecessor's; idempotent.
pub fn destutter(seq: &[TimedQuadruple]) -> Vec<TimedQuadruple> {
    let mut out: Vec<TimedQuadruple> = Vec::new();
    for q in seq {
        match out.last() {
            Some(prev) if prev.energies == q.energies => {}
            _ => out.push(q.clone()),
        }
    }
    out
}

/// Energy valuations of the destuttered sequence with timestamps in the
/// interval (tau-1, tau], or [0, 1] for tau = 1. The head of the
/// destuttered sequence is the run's starting state, not an energy
/// change, and is never reported.
pub fn subseq_proj(destuttered: &[TimedQuadruple], tau: usize) -> Vec<Vec<Q>> {
    let tau_q = q_int(tau as i64);
    let lo = q_int(tau as i64 - 1);
    destuttered
        .iter()
        .skip(1)
        .filter(|q| {
            if tau == 1 {
                q.time <= tau_q
            } else {
                q.time > lo && q.time <= tau_q
            }
        })
        .map(|q| q.energies.clone())
        .collect()
}

pub fn bel(run: &Run, tau: usize) -> Vec<Vec<Q>> {
    subseq_proj(&destutter(&abs_t(run)), tau)
}

/// Buffered discrete energy observation: bEL at 1 .. ceil(duration).
pub fn bdeo(run: &Run) -> ObservationTrace {
    let destuttered = destutter(&abs_t(run));
    let k = q_ceil_usize(&run.duration());
    let mut ticks = Vec::with_capacity(k);
    for tau in 1..=k {
        ticks.push(subseq_proj(&destuttered, tau));
    }
    ObservationTrace::Bdeo(ticks)
}

#[derive(Debug, Clone)]
pub struct OracleBounds {
    pub max_steps: usize,
    pub delay_grid: Q,
    pub horizon: Q,
    pub max_runs: usize,
}

impl OracleBounds {
    pub fn new(max_steps: usize, delay_grid: Q, horizon: Q) -> Self {
        OracleBounds { max_steps, delay_grid, horizon, max_runs: 2_000_000 }
    }
}

/// Exhaustively enumerate all runs whose delays are multiples of the
/// grid, with total delay at most the horizon and at most `max_steps`
/// discrete steps, in a deterministic order (delays ascending, then edge
/// index). Every prefix is itself yielded.
pub fn enumerate_runs(meta: &GuardedMeta, bounds: &OracleBounds) -> Result<Vec<Run>, CoreError> {
    if !bounds.delay_grid.is_positive() {
        return Err(CoreError::Semantics("delay grid must be positive".into()));
    }
    let initial = ConcreteState::initial(meta)?;
    let mut out = Vec::new();
    let mut run = Run::empty(initial);
    enumerate_rec(meta, bounds, &mut run, &Q::zero(), &mut out)?;
    Ok(out)
}

fn enumerate_rec(
    meta: &GuardedMeta,
    bounds: &OracleBounds,
    run: &mut Run,
    elapsed: &Q,
    out: &mut Vec<Run>,
) -> Result<(), CoreError> {
    if out.len() >= bounds.max_runs {
        return Err(CoreError::Resource(format!(
            "run enumeration exceeded {} runs",
            bounds.max_runs
        )));
    }
    out.push(run.clone());
    if run.steps.len() >= bounds.max_steps {
        return Ok(());
    }
    let state = run.last_state().clone();
    let mut delay = Q::zero();
    while elapsed.clone() + &delay <= bounds.horizon {
        if let Ok(mid) = delay_successor(meta, &state, &delay) {
            for (idx, _) in meta.edges_from(mid.location) {
                if let Ok(next) = discrete_successor(meta, &mid, idx) {
                    run.steps.push(RunStep { delay: delay.clone(), edge: idx, state: next });
                    let new_elapsed = elapsed.clone() + &delay;
                    enumerate_rec(meta, bounds, run, &new_elapsed, out)?;
                    run.steps.pop();
                }
            }
        } else {
            // invariants are convex in the delay: once a delay fails, all
            // longer delays from this state fail too
            break;
        }
        delay += &bounds.delay_grid;
    }
    Ok(())
}

/// Observation sets over accepting runs, split into private and public.
pub struct AcceptingObservations {
    pub private_energies: BTreeSet<Vec<Q>>,
    pub public_energies: BTreeSet<Vec<Q>>,
    pub private_duration_energies: BTreeSet<(Q, Vec<Q>)>,
    pub public_duration_energies: BTreeSet<(Q, Vec<Q>)>,
    pub private_deo: BTreeSet<ObservationTrace>,
    pub public_deo: BTreeSet<ObservationTrace>,
    pub private_bdeo: BTreeSet<ObservationTrace>,
    pub public_bdeo: BTreeSet<ObservationTrace>,
    pub private_timed_words: BTreeSet<Vec<(Q, String)>>,
    pub public_timed_words: BTreeSet<Vec<(Q, String)>>,
}

pub fn accepting_observations(
    meta: &GuardedMeta,
    bounds: &OracleBounds,
) -> Result<AcceptingObservations, CoreError> {
    let mut obs = AcceptingObservations {
        private_energies: BTreeSet::new(),
        public_energies: BTreeSet::new(),
        private_duration_energies: BTreeSet::new(),
        public_duration_energies: BTreeSet::new(),
        private_deo: BTreeSet::new(),
        public_deo: BTreeSet::new(),
        private_bdeo: BTreeSet::new(),
        public_bdeo: BTreeSet::new(),
        private_timed_words: BTreeSet::new(),
        public_timed_words: BTreeSet::new(),
    };
    for run in enumerate_runs(meta, bounds)? {
        let stats = run_stats(meta, &run);
        if stats.is_private {
            obs.private_energies.insert(stats.final_energies.clone());
            obs.private_duration_energies
                .insert((stats.duration.clone(), stats.final_energies.clone()));
            obs.private_deo.insert(deo(&run));
            obs.private_bdeo.insert(bdeo(&run));
            obs.private_timed_words.insert(stats.timed_word.clone());
        } else if stats.is_public {
            obs.public_energies.insert(stats.final_energies.clone());
            obs.public_duration_energies
                .insert((stats.duration.clone(), stats.final_energies.clone()));
            obs.public_deo.insert(deo(&run));
            obs.public_bdeo.insert(bdeo(&run));
            obs.public_timed_words.insert(stats.timed_word.clone());
        }
    }
    Ok(obs)
}

/// Accepting timed words regardless of privacy (language comparisons).
pub fn timed_word_set(
    meta: &GuardedMeta,
    bounds: &OracleBounds,
) -> Result<BTreeSet<Vec<(Q, String)>>, CoreError> {
    let mut words = BTreeSet::new();
    for run in enumerate_runs(meta, bounds)? {
        let stats = run_stats(meta, &run);
        if meta.locations[run.last_state().location].is_final {
            words.insert(stats.timed_word);
        }
    }
    Ok(words)
}
