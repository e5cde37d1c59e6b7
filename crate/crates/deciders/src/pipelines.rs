//! The per-class decision pipelines and the subclass dispatch.

use std::collections::BTreeMap;

use opaq_core::model::{classify, GuardedMeta, Rel};
use opaq_core::regions::build_region_automaton;
use opaq_core::transforms::{
    add_tick_instrumentation, duplicate_visited, inc_action, integer_switch_checks,
    integer_switch_to_discrete, remove_energy_guards, remove_private, split_and_relabel,
    SplitRelabel, TickMode,
};
use opaq_core::CoreError;
use opaq_lang::cfg::parikh_of_pda;
use opaq_lang::nfa::{nfa_inclusion, nfa_intersect_emptiness, Nfa};
use opaq_lang::pda::{
    energy_pda_of_nfa, guarded_energy_pda, pda_emptiness, pda_nfa_product, prefix_nonneg_pda,
    MarkerAtoms, MarkerRel, Pda,
};
use opaq_lang::semilinear::{
    parikh_of_nfa, slset_includes, slset_intersection_witness, SemilinearSet,
};
use opaq_lang::LangError;

use crate::pbb::{parikh_by_block, pbb_product_check};
use crate::{Artifacts, DecideOptions, OpacityQuery, Property, Variant, Verdict, VerdictStatus, Witness};

#[derive(Debug)]
pub enum PipelineError {
    Unsupported(String),
    Resource(String),
    Other(String),
}

impl From<CoreError> for PipelineError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Unsupported(r) => PipelineError::Unsupported(r),
            CoreError::Resource(r) => PipelineError::Resource(r),
            CoreError::Lang(l) => l.into(),
            other => PipelineError::Other(other.to_string()),
        }
    }
}

impl From<LangError> for PipelineError {
    fn from(e: LangError) -> Self {
        match e {
            LangError::Unsupported(r) => PipelineError::Unsupported(r),
            LangError::Resource(r) => PipelineError::Resource(r),
            other => PipelineError::Other(other.to_string()),
        }
    }
}

type Outcome = Result<(Verdict, Artifacts), PipelineError>;

fn verdict(
    query: OpacityQuery,
    pipeline: &str,
    status: VerdictStatus,
    witness: Option<Witness>,
) -> Verdict {
    Verdict {
        status,
        pipeline: pipeline.to_string(),
        property: query.property,
        variant: query.variant,
        witness,
        unsupported_reason: None,
        notes: Vec::new(),
    }
}

fn unsupported(query: OpacityQuery, pipeline: &str, reason: &str) -> (Verdict, Artifacts) {
    (
        Verdict {
            status: VerdictStatus::Unsupported,
            pipeline: pipeline.to_string(),
            property: query.property,
            variant: query.variant,
            witness: None,
            unsupported_reason: Some(reason.to_string()),
            notes: Vec::new(),
        },
        Artifacts::default(),
    )
}

const UNDECIDABLE_MULTI_GUARDED: &str = "undecidable class: discrete guarded inputs with two \
energy variables and one clock can simulate a two-counter machine, so no decision procedure \
exists";
const OPEN_MULTI_NONPOSITIVE: &str =
    "open class: discrete inputs with decrements over several energy variables have no known \
decision procedure";

pub fn dispatch(meta: &GuardedMeta, query: OpacityQuery, opts: &DecideOptions) -> Outcome {
    match query.property {
        Property::En => decide_en_family(meta, query, opts, false),
        Property::EtEn => decide_en_family(meta, query, opts, true),
        Property::De => decide_de(meta, query, opts),
        Property::Bde => decide_bde(meta, query, opts),
    }
}

/// EN and ET-EN share everything but the tick instrumentation and the
/// counted alphabet.
fn decide_en_family(meta: &GuardedMeta, query: OpacityQuery, opts: &DecideOptions, tick: bool) -> Outcome {
    let report = classify(meta);
    if !report.is_discrete {
        return is_route(meta, query, opts);
    }
    if report.is_positive {
        let mut pipeline = String::new();
        let base = if report.is_guarded {
            pipeline.push_str("guard-removal+");
            remove_energy_guards(meta)?
        } else {
            meta.clone()
        };
        pipeline.push_str(if tick { "parikh-nfa-ticked" } else { "parikh-nfa" });
        let split = split_and_relabel(&base, false)?;
        let model = if tick {
            add_tick_instrumentation(&split, TickMode::EtEn)?
        } else {
            split.ta.clone()
        };
        let (ra_priv, ra_pub) = regions_of_both_sides(&model)?;
        let mut counted: Vec<String> = (0..base.energies.len()).map(inc_action).collect();
        if tick {
            counted.push("t".into());
            counted.push("t>0".into());
        }
        let img_priv = parikh_of_nfa(&ra_priv, &counted, opts.parikh_state_cap)?;
        let img_pub = parikh_of_nfa(&ra_pub, &counted, opts.parikh_state_cap)?;
        return compare_semilinear(query, &pipeline, &counted, img_priv, img_pub);
    }
    if report.energy_count == 1 {
        return en_pda_pipeline(meta, query, opts, report.is_guarded, tick);
    }
    if report.is_guarded {
        Ok(unsupported(query, "dispatch", UNDECIDABLE_MULTI_GUARDED))
    } else {
        Ok(unsupported(query, "dispatch", OPEN_MULTI_NONPOSITIVE))
    }
}

/// Region automata of the private-runs and public-runs automata.
fn regions_of_both_sides(model: &GuardedMeta) -> Result<(Nfa, Nfa), PipelineError> {
    let apriv = duplicate_visited(model);
    let apub = remove_private(model);
    let ra_priv = build_region_automaton(&apriv)?.nfa.trim();
    let ra_pub = build_region_automaton(&apub)?.nfa.trim();
    Ok((ra_priv, ra_pub))
}

/// Single-energy inputs with decrements: the region automata become
/// energy-counting PDAs (with guard markers evaluated across value
/// copies when the input is guarded) and the Parikh images of the PDA
/// languages decide the query.
fn en_pda_pipeline(
    meta: &GuardedMeta,
    query: OpacityQuery,
    opts: &DecideOptions,
    guarded: bool,
    tick: bool,
) -> Outcome {
    let pipeline = if guarded { "guarded-energy-pda" } else { "energy-pda" };
    let split = split_and_relabel(meta, guarded)?;
    let inst = add_tick_instrumentation(&split, TickMode::EtEn)?;
    let (ra_priv, ra_pub) = regions_of_both_sides(&inst)?;
    let to_pda = |nfa: &Nfa| -> Result<Pda, PipelineError> {
        let pda = if guarded {
            let markers: BTreeMap<String, MarkerAtoms> = split
                .markers
                .iter()
                .map(|(name, atoms)| {
                    let atoms = atoms
                        .iter()
                        .map(|(rel, bound)| {
                            let rel = match rel {
                                Rel::Lt => MarkerRel::Lt,
                                Rel::Le => MarkerRel::Le,
                                Rel::Ge => MarkerRel::Ge,
                                Rel::Gt => MarkerRel::Gt,
                            };
                            (rel, (*bound).max(0) as u64)
                        })
                        .collect();
                    (name.clone(), MarkerAtoms { atoms })
                })
                .collect();
            guarded_energy_pda(
                nfa,
                &markers,
                &inc_action(0),
                &opaq_core::transforms::dec_action(0),
                "a",
                meta.max_energy_constant().max(0) as u64,
            )?
        } else {
            energy_pda_of_nfa(nfa, &inc_action(0), &opaq_core::transforms::dec_action(0), "a")?
        };
        Ok(if tick { pda } else { pda.silence(&["t", "t>0"]) })
    };
    let pda_priv = to_pda(&ra_priv)?;
    let pda_pub = to_pda(&ra_pub)?;
    let counted: Vec<String> = if tick {
        vec!["t".into(), "a".into(), "t>0".into()]
    } else {
        vec!["a".into()]
    };
    let img_priv = parikh_of_pda(&pda_priv, &counted, opts.parikh_caps)?;
    let img_pub = parikh_of_pda(&pda_pub, &counted, opts.parikh_caps)?;
    compare_semilinear(query, pipeline, &counted, img_priv, img_pub)
}

/// The three variants over a pair of semilinear observation images.
fn compare_semilinear(
    query: OpacityQuery,
    pipeline: &str,
    counted: &[String],
    img_priv: SemilinearSet,
    img_pub: SemilinearSet,
) -> Outcome {
    let artifacts = Artifacts {
        counted_alphabet: counted.to_vec(),
        private_image: Some(img_priv.clone()),
        public_image: Some(img_pub.clone()),
    };
    let v = match query.variant {
        Variant::Exists => match slset_intersection_witness(&img_priv, &img_pub)? {
            Some(vector) => verdict(
                query,
                pipeline,
                VerdictStatus::Holds,
                Some(Witness::ParikhVector { alphabet: counted.to_vec(), vector }),
            ),
            None => verdict(query, pipeline, VerdictStatus::Fails, None),
        },
        Variant::Weak => {
            let (ok, cex) = slset_includes(&img_pub, &img_priv)?;
            if ok {
                verdict(query, pipeline, VerdictStatus::Holds, None)
            } else {
                verdict(
                    query,
                    pipeline,
                    VerdictStatus::Fails,
                    cex.map(|vector| Witness::CounterexampleVector {
                        alphabet: counted.to_vec(),
                        vector,
                    }),
                )
            }
        }
        Variant::Full => {
            let (ok_weak, cex) = slset_includes(&img_pub, &img_priv)?;
            if !ok_weak {
                let mut v = verdict(
                    query,
                    pipeline,
                    VerdictStatus::Fails,
                    cex.map(|vector| Witness::CounterexampleVector {
                        alphabet: counted.to_vec(),
                        vector,
                    }),
                );
                v.notes.push("a private observation has no public counterpart".into());
                v
            } else {
                let (ok_conv, cex) = slset_includes(&img_priv, &img_pub)?;
                if ok_conv {
                    verdict(query, pipeline, VerdictStatus::Holds, None)
                } else {
                    let mut v = verdict(
                        query,
                        pipeline,
                        VerdictStatus::Fails,
                        cex.map(|vector| Witness::CounterexampleVector {
                            alphabet: counted.to_vec(),
                            vector,
                        }),
                    );
                    v.notes.push("a public observation has no private counterpart".into());
                    v
                }
            }
        }
    };
    Ok((v, artifacts))
}

/// The three variants over a pair of regular observation languages.
fn compare_languages(
    query: OpacityQuery,
    pipeline: &str,
    lang_priv: &Nfa,
    lang_pub: &Nfa,
    opts: &DecideOptions,
) -> Outcome {
    let words = |w: Vec<usize>, nfa: &Nfa| -> Vec<String> { nfa.word_names(&w) };
    let v = match query.variant {
        Variant::Exists => {
            let (empty, common) = nfa_intersect_emptiness(lang_priv, lang_pub)?;
            if empty {
                verdict(query, pipeline, VerdictStatus::Fails, None)
            } else {
                verdict(
                    query,
                    pipeline,
                    VerdictStatus::Holds,
                    common.map(|w| Witness::Word { letters: words(w, lang_priv) }),
                )
            }
        }
        Variant::Weak => {
            let (ok, cex) = nfa_inclusion(lang_priv, lang_pub, opts.determinize_cap)?;
            if ok {
                verdict(query, pipeline, VerdictStatus::Holds, None)
            } else {
                verdict(
                    query,
                    pipeline,
                    VerdictStatus::Fails,
                    cex.map(|w| Witness::CounterexampleWord { letters: words(w, lang_priv) }),
                )
            }
        }
        Variant::Full => {
            let (ok_weak, cex) = nfa_inclusion(lang_priv, lang_pub, opts.determinize_cap)?;
            if !ok_weak {
                let mut v = verdict(
                    query,
                    pipeline,
                    VerdictStatus::Fails,
                    cex.map(|w| Witness::CounterexampleWord { letters: words(w, lang_priv) }),
                );
                v.notes.push("a private observation has no public counterpart".into());
                v
            } else {
                let (ok_conv, cex) = nfa_inclusion(lang_pub, lang_priv, opts.determinize_cap)?;
                if ok_conv {
                    verdict(query, pipeline, VerdictStatus::Holds, None)
                } else {
                    let mut v = verdict(
                        query,
                        pipeline,
                        VerdictStatus::Fails,
                        cex.map(|w| Witness::CounterexampleWord { letters: words(w, lang_pub) }),
                    );
                    v.notes.push("a public observation has no private counterpart".into());
                    v
                }
            }
        }
    };
    Ok((v, Artifacts::default()))
}

fn decide_de(meta: &GuardedMeta, query: OpacityQuery, opts: &DecideOptions) -> Outcome {
    let report = classify(meta);
    if !report.is_discrete {
        return is_route(meta, query, opts);
    }
    if report.is_positive {
        let mut prefix = String::new();
        let base = if report.is_guarded {
            prefix.push_str("guard-removal+");
            remove_energy_guards(meta)?
        } else {
            meta.clone()
        };
        if base.energies.len() <= 1 {
            // single energy: plain language comparison over {inc1, t}
            let pipeline = format!("{}de-regional", prefix);
            let split = split_and_relabel(&base, false)?;
            let inst = add_tick_instrumentation(&split, TickMode::De)?;
            let (ra_priv, ra_pub) = regions_of_both_sides(&inst)?;
            let mut counted: Vec<String> = (0..base.energies.len()).map(inc_action).collect();
            counted.push("t".into());
            let lang_priv = ra_priv.project(&counted).eliminate_epsilon().trim();
            let lang_pub = ra_pub.project(&counted).eliminate_epsilon().trim();
            return compare_languages(query, &pipeline, &lang_priv, &lang_pub, opts);
        }
        return match query.variant {
            Variant::Exists => {
                let pipeline = format!("{}parikh-by-block", prefix);
                let split = split_and_relabel(&base, false)?;
                let inst = add_tick_instrumentation(&split, TickMode::De)?;
                let (ra_priv, ra_pub) = regions_of_both_sides(&inst)?;
                let counted: Vec<String> = (0..base.energies.len()).map(inc_action).collect();
                let ticks = vec!["t".to_string(), "f".to_string()];
                let mut keep = counted.clone();
                keep.extend(ticks.iter().cloned());
                let p_priv = parikh_by_block(
                    &ra_priv.project(&keep),
                    &ticks,
                    &counted,
                    opts.parikh_state_cap,
                )?;
                let p_pub = parikh_by_block(
                    &ra_pub.project(&keep),
                    &ticks,
                    &counted,
                    opts.parikh_state_cap,
                )?;
                let (found, path) = pbb_product_check(&p_priv, &p_pub)?;
                let v = if found {
                    verdict(
                        query,
                        &pipeline,
                        VerdictStatus::Holds,
                        path.map(|steps| Witness::PbbPath { inc_alphabet: counted.clone(), steps }),
                    )
                } else {
                    verdict(query, &pipeline, VerdictStatus::Fails, None)
                };
                Ok((v, Artifacts::default()))
            }
            _ => Ok(unsupported(
                query,
                "dispatch",
                "open class: weak and full per-time-unit opacity over several energy variables \
has no known decision procedure",
            )),
        };
    }
    if !report.is_guarded && report.energy_count == 1 {
        // Open class; a sound word-level witness can still prove the
        // existential variant (word-equal implies equal per-tick levels).
        if query.variant != Variant::Exists {
            return Ok(unsupported(
                query,
                "dispatch",
                "open class: per-time-unit opacity for discrete inputs with decrements is only \
supported through a sound existential witness search",
            ));
        }
        let pipeline = "de-word-witness(partial)";
        let split = split_and_relabel(meta, false)?;
        let inst = add_tick_instrumentation(&split, TickMode::De)?;
        let (ra_priv, ra_pub) = regions_of_both_sides(&inst)?;
        let counted = vec![
            inc_action(0),
            opaq_core::transforms::dec_action(0),
            "t".to_string(),
        ];
        let lang_priv = ra_priv.project(&counted).eliminate_epsilon().trim();
        let lang_pub = ra_pub.project(&counted).eliminate_epsilon().trim();
        let product = lang_priv.product(&lang_pub)?;
        let valid = prefix_nonneg_pda(&counted, &counted[0], &counted[1]);
        let constrained = pda_nfa_product(&valid, &product)?;
        let (empty, witness) = pda_emptiness(&constrained);
        if empty {
            return Ok(unsupported(
                query,
                pipeline,
                "open class: no word-level witness found; equal per-tick levels might still be \
realizable through different update interleavings",
            ));
        }
        let letters = witness
            .map(|w| w.iter().map(|s| constrained.input_alphabet[*s].clone()).collect())
            .unwrap_or_default();
        return Ok((
            verdict(query, pipeline, VerdictStatus::Holds, Some(Witness::Word { letters })),
            Artifacts::default(),
        ));
    }
    if report.is_guarded && report.energy_count >= 2 {
        Ok(unsupported(query, "dispatch", UNDECIDABLE_MULTI_GUARDED))
    } else if report.is_guarded {
        Ok(unsupported(
            query,
            "dispatch",
            "open class: guarded single-energy inputs with decrements have no known per-time-unit \
decision procedure",
        ))
    } else {
        Ok(unsupported(query, "dispatch", OPEN_MULTI_NONPOSITIVE))
    }
}

fn decide_bde(meta: &GuardedMeta, query: OpacityQuery, opts: &DecideOptions) -> Outcome {
    let report = classify(meta);
    if !report.is_discrete {
        return Ok(unsupported(
            query,
            "dispatch",
            "buffered per-time-unit opacity is only decided for discrete inputs; the \
integer-switching discretization does not preserve buffered observations",
        ));
    }
    if report.is_positive {
        let mut prefix = String::new();
        let base = if report.is_guarded {
            prefix.push_str("guard-removal+");
            remove_energy_guards(meta)?
        } else {
            meta.clone()
        };
        let pipeline = format!("{}bde-regional", prefix);
        let split = split_and_relabel(&base, false)?;
        let inst = add_tick_instrumentation(&split, TickMode::Bde)?;
        let (ra_priv, ra_pub) = regions_of_both_sides(&inst)?;
        let mut counted: Vec<String> = (0..base.energies.len()).map(inc_action).collect();
        counted.push("t".into());
        counted.push("f".into());
        let lang_priv = ra_priv.project(&counted).eliminate_epsilon().trim();
        let lang_pub = ra_pub.project(&counted).eliminate_epsilon().trim();
        return compare_languages(query, &pipeline, &lang_priv, &lang_pub, opts);
    }
    if report.energy_count == 1 && !report.is_guarded {
        return bde_pda_pipeline(meta, query, opts);
    }
    if report.is_guarded && report.energy_count >= 2 {
        Ok(unsupported(
            query,
            "dispatch",
            "open class: buffered opacity for discrete guarded inputs over several energy \
variables has no known decision procedure (per-time-unit opacity is outright undecidable there)",
        ))
    } else if report.is_guarded {
        Ok(unsupported(
            query,
            "dispatch",
            "open class: buffered opacity for guarded single-energy inputs with decrements has \
no known decision procedure",
        ))
    } else {
        Ok(unsupported(query, "dispatch", OPEN_MULTI_NONPOSITIVE))
    }
}

/// Buffered opacity for single-energy inputs with decrements: region
/// languages may claim invalid words (energy below zero), so every
/// comparison goes through the prefix-nonnegativity language; only the
/// regular side is ever complemented.
fn bde_pda_pipeline(meta: &GuardedMeta, query: OpacityQuery, opts: &DecideOptions) -> Outcome {
    let pipeline = "bde-pda";
    let split = split_and_relabel(meta, false)?;
    let inst = add_tick_instrumentation(&split, TickMode::Bde)?;
    let (ra_priv, ra_pub) = regions_of_both_sides(&inst)?;
    let counted = vec![
        inc_action(0),
        opaq_core::transforms::dec_action(0),
        "t".to_string(),
        "f".to_string(),
    ];
    let lang_priv = ra_priv.project(&counted).eliminate_epsilon().trim();
    let lang_pub = ra_pub.project(&counted).eliminate_epsilon().trim();
    let valid = prefix_nonneg_pda(&counted, &counted[0], &counted[1]);
    let check_empty = |regular: &Nfa| -> Result<(bool, Option<Vec<String>>), PipelineError> {
        let constrained = pda_nfa_product(&valid, regular)?;
        let (empty, witness) = pda_emptiness(&constrained);
        Ok((
            empty,
            witness.map(|w| w.iter().map(|s| constrained.input_alphabet[*s].clone()).collect()),
        ))
    };
    let inclusion_violation =
        |a: &Nfa, b: &Nfa| -> Result<(bool, Option<Vec<String>>), PipelineError> {
            // valid words of a that b does not accept
            let b_complement = opaq_lang::nfa::determinize(b, opts.determinize_cap)?
                .complement()
                .to_nfa();
            let diff = a.product(&b_complement)?;
            check_empty(&diff.trim())
        };
    let v = match query.variant {
        Variant::Exists => {
            let common = lang_priv.product(&lang_pub)?;
            let (empty, witness) = check_empty(&common.trim())?;
            if empty {
                verdict(query, pipeline, VerdictStatus::Fails, None)
            } else {
                verdict(
                    query,
                    pipeline,
                    VerdictStatus::Holds,
                    witness.map(|letters| Witness::Word { letters }),
                )
            }
        }
        Variant::Weak => {
            let (empty, cex) = inclusion_violation(&lang_priv, &lang_pub)?;
            if empty {
                verdict(query, pipeline, VerdictStatus::Holds, None)
            } else {
                verdict(
                    query,
                    pipeline,
                    VerdictStatus::Fails,
                    cex.map(|letters| Witness::CounterexampleWord { letters }),
                )
            }
        }
        Variant::Full => {
            let (empty, cex) = inclusion_violation(&lang_priv, &lang_pub)?;
            if !empty {
                let mut v = verdict(
                    query,
                    pipeline,
                    VerdictStatus::Fails,
                    cex.map(|letters| Witness::CounterexampleWord { letters }),
                );
                v.notes.push("a private observation has no public counterpart".into());
                v
            } else {
                let (empty, cex) = inclusion_violation(&lang_pub, &lang_priv)?;
                if empty {
                    verdict(query, pipeline, VerdictStatus::Holds, None)
                } else {
                    let mut v = verdict(
                        query,
                        pipeline,
                        VerdictStatus::Fails,
                        cex.map(|letters| Witness::CounterexampleWord { letters }),
                    );
                    v.notes.push("a public observation has no private counterpart".into());
                    v
                }
            }
        }
    };
    Ok((v, Artifacts::default()))
}

/// The integer-switching route for non-discrete inputs: check the class,
/// discretize rates into per-tick updates, and delegate to the discrete
/// pipelines.
pub fn is_route(meta: &GuardedMeta, query: OpacityQuery, opts: &DecideOptions) -> Outcome {
    let report = classify(meta);
    if report.is_guarded {
        return Ok(unsupported(
            query,
            "integer-switch",
            "the integer-switching checks and discretization apply to unguarded inputs only",
        ));
    }
    if query.property == Property::Bde {
        return Ok(unsupported(
            query,
            "integer-switch",
            "the integer-switching discretization does not preserve buffered observations",
        ));
    }
    let (is_is, is_iet) = integer_switch_checks(meta)?;
    if !is_is {
        return Ok(unsupported(
            query,
            "integer-switch",
            "energy rates change at non-integer absolute times, so the discretization does not \
apply",
        ));
    }
    if !is_iet {
        return Ok(unsupported(
            query,
            "integer-switch",
            "a final location is reachable at a non-integer absolute time (not iET), so the \
discretization does not preserve final energies",
        ));
    }
    let clause_ok = match query.property {
        Property::En | Property::EtEn => report.is_positive || report.energy_count == 1,
        Property::De => {
            report.is_positive && (report.energy_count <= 1 || query.variant == Variant::Exists)
        }
        Property::Bde => false,
    };
    if !clause_ok {
        return Ok(unsupported(
            query,
            "integer-switch",
            "the integer-switching route covers final-energy opacity for positive or \
single-energy inputs, and per-time-unit opacity for positive inputs (existential only beyond \
one energy)",
        ));
    }
    let discrete = integer_switch_to_discrete(meta)?;
    let (inner, artifacts) = dispatch(&discrete, query, opts)?;
    let mut v = inner;
    v.pipeline = format!("integer-switch+{}", v.pipeline);
    Ok((v, artifacts))
}
