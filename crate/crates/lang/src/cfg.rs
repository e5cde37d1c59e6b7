//! Context-free grammars extracted from pushdown automata, and the
//! constructive Parikh image of a context-free language: bases come from
//! derivation trees with no nonterminal repeated on any root path,
//! periods from minimal pumping trees, combined per connected
//! availability cluster.

use std::collections::{BTreeMap, BTreeSet};

use crate::pda::{triple_analysis, Pda, BOTTOM};
use crate::semilinear::{LinearSet, SemilinearSet};
use crate::LangError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CfgSym {
    T(usize),
    N(usize),
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub terminals: Vec<String>,
    pub nonterminals: Vec<String>,
    pub start: usize,
    pub productions: Vec<(usize, Vec<CfgSym>)>,
}

impl Cfg {
    fn productions_of(&self) -> Vec<Vec<(usize, &Vec<CfgSym>)>> {
        let mut by_nt: Vec<Vec<(usize, &Vec<CfgSym>)>> = vec![Vec::new(); self.nonterminals.len()];
        for (i, (nt, rhs)) in self.productions.iter().enumerate() {
            by_nt[*nt].push((i, rhs));
        }
        by_nt
    }
}

/// Triple construction restricted to productive triples (those with an
/// actual pop derivation) and then to the ones reachable from the start.
pub fn pda_to_cfg(p: &Pda) -> Cfg {
    let analysis = triple_analysis(p);
    let pda = &analysis.pda;
    let productive: BTreeSet<(usize, usize, usize)> = analysis.triples.keys().copied().collect();
    let start_triple = (pda.initial, BOTTOM, analysis.drain_state);

    let mut nt_index: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut nonterminals: Vec<String> = Vec::new();
    let intern = |t: (usize, usize, usize),
                      nt_index: &mut BTreeMap<(usize, usize, usize), usize>,
                      nonterminals: &mut Vec<String>| {
        *nt_index.entry(t).or_insert_with(|| {
            nonterminals.push(format!("[{} {} {}]", t.0, pda.stack_alphabet[t.1], t.2));
            nonterminals.len() - 1
        })
    };

    let mut productions: Vec<(usize, Vec<CfgSym>)> = Vec::new();
    if !productive.contains(&start_triple) {
        // empty language: grammar with unproductive start
        return Cfg {
            terminals: p.input_alphabet.clone(),
            nonterminals: vec!["S".into()],
            start: 0,
            productions: Vec::new(),
        };
    }

    // group productive triples for the double-push join
    let mut by_start: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (q, g, r) in &productive {
        by_start.entry((*q, *g)).or_default().push(*r);
    }

    // forward closure from the start triple
    let mut queue = vec![start_triple];
    let mut seen: BTreeSet<(usize, usize, usize)> = BTreeSet::from([start_triple]);
    while let Some(t) = queue.pop() {
        let (q, gamma, q2) = t;
        let lhs = intern(t, &mut nt_index, &mut nonterminals);
        for e in &pda.edges {
            if e.from != q || e.pop != gamma {
                continue;
            }
            let mut rhs_term: Vec<CfgSym> = Vec::new();
            if let Some(s) = e.input {
                rhs_term.push(CfgSym::T(s));
            }
            match e.push.len() {
                0 => {
                    if e.to == q2 {
                        productions.push((lhs, rhs_term));
                    }
                }
                1 => {
                    let sub = (e.to, e.push[0], q2);
                    if productive.contains(&sub) {
                        let nt = intern(sub, &mut nt_index, &mut nonterminals);
                        let mut rhs = rhs_term.clone();
                        rhs.push(CfgSym::N(nt));
                        productions.push((lhs, rhs));
                        if seen.insert(sub) {
                            queue.push(sub);
                        }
                    }
                }
                2 => {
                    // push [g1, g2], g2 on top: pop g2 from e.to to r, then g1 from r to q2
                    if let Some(rs) = by_start.get(&(e.to, e.push[1])) {
                        for r in rs {
                            let t1 = (e.to, e.push[1], *r);
                            let t2 = (*r, e.push[0], q2);
                            if productive.contains(&t2) {
                                let n1 = intern(t1, &mut nt_index, &mut nonterminals);
                                let n2 = intern(t2, &mut nt_index, &mut nonterminals);
                                let mut rhs = rhs_term.clone();
                                rhs.push(CfgSym::N(n1));
                                rhs.push(CfgSym::N(n2));
                                productions.push((lhs, rhs));
                                if seen.insert(t1) {
                                    queue.push(t1);
                                }
                                if seen.insert(t2) {
                                    queue.push(t2);
                                }
                            }
                        }
                    }
                }
                _ => unreachable!("normalized"),
            }
        }
    }

    Cfg {
        terminals: pda.input_alphabet.clone(),
        nonterminals,
        start: nt_index[&start_triple],
        productions,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParikhCaps {
    pub enum_budget: usize,
    pub max_cluster: usize,
}

impl Default for ParikhCaps {
    fn default() -> Self {
        ParikhCaps { enum_budget: 4_000_000, max_cluster: 14 }
    }
}

type NtSet = BTreeSet<usize>;

/// Complete derivation trees from `nt` with no nonterminal repeated on
/// any root path; yields (terminal count vector, nonterminals used).
fn enumerate_bases(
    cfg: &Cfg,
    by_nt: &[Vec<(usize, &Vec<CfgSym>)>],
    counted: &[Option<usize>],
    dim: usize,
    nt: usize,
    path: &mut NtSet,
    budget: &mut usize,
) -> Result<Vec<(Vec<u64>, NtSet)>, LangError> {
    if *budget == 0 {
        return Err(LangError::Resource(
            "parikh extraction: base tree enumeration budget exhausted".into(),
        ));
    }
    *budget -= 1;
    let newly_on_path = path.insert(nt);
    let mut results: Vec<(Vec<u64>, NtSet)> = Vec::new();
    'prods: for (_, rhs) in &by_nt[nt] {
        let mut acc: Vec<(Vec<u64>, NtSet)> =
            vec![(vec![0u64; dim], NtSet::from([nt]))];
        for sym in rhs.iter() {
            match sym {
                CfgSym::T(t) => {
                    if let Some(i) = counted[*t] {
                        for (v, _) in &mut acc {
                            v[i] += 1;
                        }
                    }
                }
                CfgSym::N(b) => {
                    if path.contains(b) {
                        continue 'prods;
                    }
                    let subs = enumerate_bases(cfg, by_nt, counted, dim, *b, path, budget);
                    let subs = match subs {
                        Ok(s) => s,
                        Err(e) => {
                            if newly_on_path {
                                path.remove(&nt);
                            }
                            return Err(e);
                        }
                    };
                    if subs.is_empty() {
                        continue 'prods;
                    }
                    let mut next = Vec::new();
                    for (va, ua) in &acc {
                        for (vb, ub) in &subs {
                            let mut v = va.clone();
                            for (i, x) in vb.iter().enumerate() {
                                v[i] += x;
                            }
                            let mut u = ua.clone();
                            u.extend(ub.iter().copied());
                            next.push((v, u));
                        }
                    }
                    next.sort();
                    next.dedup();
                    if next.len() > 4000 {
                        if newly_on_path {
                            path.remove(&nt);
                        }
                        return Err(LangError::Resource(
                            "parikh extraction: base tree combination blow-up".into(),
                        ));
                    }
                    acc = next;
                }
            }
        }
        results.extend(acc);
    }
    if newly_on_path {
        path.remove(&nt);
    }
    results.sort();
    results.dedup();
    Ok(results)
}

/// Pump trees: rooted at `root`, exactly one leaf is the `root`
/// nonterminal itself (the hole), every other root path is
/// nonterminal-distinct. Yields (vector, nonterminals used).
fn enumerate_pumps_from(
    cfg: &Cfg,
    by_nt: &[Vec<(usize, &Vec<CfgSym>)>],
    counted: &[Option<usize>],
    dim: usize,
    root: usize,
    nt: usize,
    path: &mut NtSet,
    budget: &mut usize,
) -> Result<Vec<(Vec<u64>, NtSet, bool)>, LangError> {
    if *budget == 0 {
        return Err(LangError::Resource(
            "parikh extraction: pump enumeration budget exhausted".into(),
        ));
    }
    *budget -= 1;
    let newly_on_path = path.insert(nt);
    let mut results: Vec<(Vec<u64>, NtSet, bool)> = Vec::new();
    'prods: for (_, rhs) in &by_nt[nt] {
        let mut acc: Vec<(Vec<u64>, NtSet, bool)> =
            vec![(vec![0u64; dim], NtSet::from([nt]), false)];
        for sym in rhs.iter() {
            match sym {
                CfgSym::T(t) => {
                    if let Some(i) = counted[*t] {
                        for (v, _, _) in &mut acc {
                            v[i] += 1;
                        }
                    }
                }
                CfgSym::N(b) => {
                    let mut options: Vec<(Vec<u64>, NtSet, bool)> = Vec::new();
                    if *b == root {
                        // the hole: contributes nothing, consumes the budget of one hole
                        options.push((vec![0u64; dim], NtSet::new(), true));
                    }
                    if !path.contains(b) && *b != root {
                        let subs =
                            enumerate_pumps_from(cfg, by_nt, counted, dim, root, *b, path, budget);
                        let subs = match subs {
                            Ok(s) => s,
                            Err(e) => {
                                if newly_on_path {
                                    path.remove(&nt);
                                }
                                return Err(e);
                            }
                        };
                        options.extend(subs);
                    }
                    if options.is_empty() {
                        continue 'prods;
                    }
                    let mut next = Vec::new();
                    for (va, ua, ha) in &acc {
                        for (vb, ub, hb) in &options {
                            if *ha && *hb {
                                continue; // at most one hole
                            }
                            let mut v = va.clone();
                            for (i, x) in vb.iter().enumerate() {
                                v[i] += x;
                            }
                            let mut u = ua.clone();
                            u.extend(ub.iter().copied());
                            next.push((v, u, *ha || *hb));
                        }
                    }
                    next.sort();
                    next.dedup();
                    if next.len() > 4000 {
                        if newly_on_path {
                            path.remove(&nt);
                        }
                        return Err(LangError::Resource(
                            "parikh extraction: pump combination blow-up".into(),
                        ));
                    }
                    acc = next;
                }
            }
        }
        results.extend(acc);
    }
    if newly_on_path {
        path.remove(&nt);
    }
    results.sort();
    results.dedup();
    Ok(results)
}

/// Exact Parikh image of the grammar language over `counted_alphabet`.
pub fn parikh_of_cfg(
    cfg: &Cfg,
    counted_alphabet: &[String],
    caps: ParikhCaps,
) -> Result<SemilinearSet, LangError> {
    let dim = counted_alphabet.len();
    let mut result = SemilinearSet::empty(dim);
    if cfg.productions.is_empty() {
        return Ok(result);
    }
    let by_nt = cfg.productions_of();
    let counted: Vec<Option<usize>> = cfg
        .terminals
        .iter()
        .map(|t| counted_alphabet.iter().position(|c| c == t))
        .collect();

    let mut budget = caps.enum_budget;
    let mut path = NtSet::new();
    let bases = enumerate_bases(cfg, &by_nt, &counted, dim, cfg.start, &mut path, &mut budget)?;

    // pump trees per nonterminal root (deduplicated by vector + used set)
    let mut pumps: Vec<(usize, Vec<u64>, NtSet)> = Vec::new();
    for root in 0..cfg.nonterminals.len() {
        let mut path = NtSet::new();
        let all = enumerate_pumps_from(cfg, &by_nt, &counted, dim, root, root, &mut path, &mut budget)?;
        for (v, u, hole) in all {
            if hole {
                pumps.push((root, v, u));
            }
        }
    }
    pumps.sort();
    pumps.dedup();

    for (v0, u0) in &bases {
        // availability closure to find the relevant pump instances
        let mut relevant: Vec<usize> = Vec::new();
        let mut avail = u0.clone();
        loop {
            let mut changed = false;
            for (i, (root, _, pnts)) in pumps.iter().enumerate() {
                if !relevant.contains(&i) && avail.contains(root) {
                    relevant.push(i);
                    avail.extend(pnts.iter().copied());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if relevant.len() > caps.max_cluster {
            return Err(LangError::Resource(format!(
                "parikh extraction: {} pumps on one base exceeds cluster cap",
                relevant.len()
            )));
        }
        let n = relevant.len();
        'subsets: for mask in 0..(1u32 << n) {
            let chosen: Vec<usize> =
                (0..n).filter(|i| mask >> i & 1 == 1).map(|i| relevant[i]).collect();
            // admissibility: every chosen pump's root becomes available
            let mut avail = u0.clone();
            let mut remaining = chosen.clone();
            loop {
                let before = remaining.len();
                remaining.retain(|pi| {
                    let (root, _, pnts) = &pumps[*pi];
                    if avail.contains(root) {
                        avail.extend(pnts.iter().copied());
                        false
                    } else {
                        true
                    }
                });
                if remaining.is_empty() {
                    break;
                }
                if remaining.len() == before {
                    continue 'subsets;
                }
            }
            let mut base = v0.clone();
            let mut periods = Vec::new();
            for pi in &chosen {
                let (_, pv, _) = &pumps[*pi];
                for (i, x) in pv.iter().enumerate() {
                    base[i] += x;
                }
                periods.push(pv.clone());
            }
            result.add_component(LinearSet { base, periods });
        }
    }
    result.normalize();
    Ok(result)
}

/// Exact Parikh image of the language of a PDA as a semilinear set.
pub fn parikh_of_pda(
    p: &Pda,
    counted_alphabet: &[String],
    caps: ParikhCaps,
) -> Result<SemilinearSet, LangError> {
    let cfg = pda_to_cfg(p);
    parikh_of_cfg(&cfg, counted_alphabet, caps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pda::l_geq0_pda;
    use crate::semilinear::{slset_member, slset_vectors_up_to};

    #[test]
    fn parikh_of_an_t_an() {
        // PDA for { a^n t a^n }
        let mut pda = Pda::new(vec!["a".into(), "t".into()], vec!["⊥".into(), "e".into()]);
        let q0 = pda.add_state("q0");
        let q1 = pda.add_state("q1");
        pda.initial = q0;
        for gamma in [0, 1] {
            pda.add_edge(q0, Some(0), gamma, q0, vec![gamma, 1]);
            pda.add_edge(q0, Some(1), gamma, q1, vec![gamma]);
        }
        pda.add_edge(q1, Some(0), 1, q1, vec![]);
        pda.accepting.insert(q1);
        // accepting needs the stack emptied back to bottom: restrict by a
        // bottom test into a final state
        let qf = pda.add_state("qf");
        pda.add_edge(q1, None, 0, qf, vec![0]);
        pda.accepting.remove(&q1);
        pda.accepting.insert(qf);

        let image =
            parikh_of_pda(&pda, &["a".to_string(), "t".to_string()], ParikhCaps::default())
                .unwrap();
        for n in 0..5u64 {
            assert!(slset_member(&image, &[2 * n, 1]).unwrap(), "missing (2n,1) n={}", n);
            if n % 2 == 1 {
                assert!(!slset_member(&image, &[n, 1]).unwrap());
            }
        }
        assert!(!slset_member(&image, &[2, 0]).unwrap());
        assert!(!slset_member(&image, &[2, 2]).unwrap());
    }

    #[test]
    fn parikh_of_epsilon_only() {
        let mut pda = Pda::new(vec!["a".into()], vec!["⊥".into()]);
        let q0 = pda.add_state("q0");
        pda.initial = q0;
        pda.accepting.insert(q0);
        let image = parikh_of_pda(&pda, &["a".to_string()], ParikhCaps::default()).unwrap();
        assert!(slset_member(&image, &[0]).unwrap());
        assert!(!slset_member(&image, &[1]).unwrap());
    }

    #[test]
    fn parikh_of_l_geq0_matches_prefix_condition() {
        let image = parikh_of_pda(
            &l_geq0_pda(),
            &["inc".to_string(), "dec".to_string()],
            ParikhCaps::default(),
        )
        .unwrap();
        let got = slset_vectors_up_to(&image, 8);
        for inc in 0..=8u64 {
            for dec in 0..=(8 - inc) {
                let expect = dec <= inc;
                assert_eq!(
                    got.contains(&vec![inc, dec]),
                    expect,
                    "vector ({},{})",
                    inc,
                    dec
                );
            }
        }
    }
}
