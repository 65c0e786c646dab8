//! The checks behind each acceptance criterion. Each returns a one-line
//! summary on success and the first discrepancy on failure, so the same
//! code serves the per-crate test suites and the acceptance report.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use branchqa_core::eval::{
    align_branches, evaluate_dataset, evaluate_question, normalize_answer, score_question, AliasTable, ErrorFlags,
    FlagState, GoldAnswer, Pooling, Prediction, ScoreOptions, ToolEvent,
};
use branchqa_core::graph::{Direction, Entity, KnowledgeGraph};
use branchqa_core::par::WorkerPool;
use branchqa_core::plan::{
    serialize_plan, typecheck, validate_heuristics, Comparator, HeuristicConfig, Op, Plan, Predicate, Rule, Slot,
};
use branchqa_core::qgen::{
    parse_classification, parse_translation, select_entities, translate, translate_dataset, vet_plan, vet_qa,
    ClientError, PromptKit, StubClient, TranslatePolicy, Verdict,
};
use branchqa_core::synth::{
    build_record, execute_branched, execute_branched_traced, execute_plan, synthesize, Binding, ExecError,
    OracleGreedy, Provenance, QARecord, QuestionSource, Quotas, SelectionRequest, SelectorError, SynthesisConfig,
    VetStatus, DEFAULT_BRANCH,
};

use super::oracle::{self, RawGraph};
use super::*;

pub type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn id_set(graph: &KnowledgeGraph, set: &branchqa_core::synth::EntitySet) -> BTreeSet<String> {
    set.iter().map(|&ix| graph.entity(ix).id.clone()).collect()
}

// ---------------------------------------------------------------------------
// Executor against the reference interpreter.

/// Compare every step of `plan` under every reading of its ambiguous seed,
/// then the branched answer. Returns whether the answer was non-empty.
pub fn compare_with_oracle(plan: &Plan, graph: &KnowledgeGraph, raw: &RawGraph<'_>) -> Result<bool, String> {
    let readings: Vec<(Option<String>, Binding)> = match plan.ambiguous_ref() {
        None => vec![(None, Binding::new())],
        Some((step, surface, slot_type)) => graph
            .ambiguous_candidates(surface, slot_type)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|ix| {
                let id = graph.entity(ix).id.clone();
                (Some(id.clone()), Binding::from([(step, id)]))
            })
            .collect(),
    };
    let mut expected: BTreeMap<Option<String>, BTreeSet<String>> = BTreeMap::new();
    for (entity, binding) in &readings {
        let execution = execute_plan(plan, graph, binding)
            .map_err(|e| format!("executor failed on {}: {e}", serialize_plan(plan)))?;
        for step in 1..=plan.len() {
            let got = id_set(graph, &execution.step(step).set);
            let want = oracle::run_step(plan, raw, binding, step);
            ensure(got == want, || {
                format!(
                    "step {step} of {} under {binding:?}: executor {got:?}, oracle {want:?}",
                    serialize_plan(plan)
                )
            })?;
        }
        let answer = oracle::run(plan, raw, binding);
        if !answer.is_empty() {
            expected.insert(entity.clone(), answer);
        }
    }

    match execute_branched_traced(plan, graph) {
        Err(ExecError::AllBranchesEmpty) => {
            ensure(expected.is_empty(), || format!("branched run empty, oracle {expected:?}"))?;
            Ok(false)
        }
        Err(e) => Err(format!("branched run failed on {}: {e}", serialize_plan(plan))),
        Ok(branched) => {
            let got: BTreeMap<Option<String>, BTreeSet<String>> = branched
                .traces
                .iter()
                .map(|t| (t.entity.clone(), branched.answer.branches[&t.label].clone()))
                .collect();
            ensure(got == expected, || {
                format!("branched answer of {}: {got:?}, oracle {expected:?}", serialize_plan(plan))
            })?;
            ensure(branched.answer.ambiguous == plan.ambiguous_ref().is_some(), || "ambiguity flag".into())?;
            if plan.ambiguous_ref().is_none() {
                ensure(branched.answer.branches.keys().eq([DEFAULT_BRANCH]), || "default label".into())?;
            }
            Ok(true)
        }
    }
}

/// `cases` random plans over random graphs of at most 50 entities.
pub fn executor_matches_oracle(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = SynthesisConfig {
        max_attempts_per_plan: 16,
        max_answer_size: 50,
        ..SynthesisConfig::default()
    };
    let (mut done, mut non_empty, mut ambiguous, mut graphs) = (0, 0, 0, 0);
    let mut kinds = BTreeSet::new();
    while done < cases {
        graphs += 1;
        if graphs > cases * 20 {
            return Err(format!("only {done} plans generated from {graphs} graphs"));
        }
        let g = gen::random_graph(&mut rng, 50);
        let raw = RawGraph {
            triples: &g.triples,
            attributes: &g.attributes,
        };
        for _ in 0..4 {
            let Some(plan) = gen::random_bound_plan(&mut rng, &g.graph, &config) else {
                continue;
            };
            if compare_with_oracle(&plan, &g.graph, &raw)? {
                non_empty += 1;
            }
            ambiguous += usize::from(plan.ambiguous_ref().is_some());
            kinds.extend(plan.op_kinds());
            kinds.extend(plan.predicates().map(|p| match p {
                Predicate::CountAtLeast { .. } => branchqa_core::plan::OpKind::GroupBy,
                _ => branchqa_core::plan::OpKind::Filter,
            }));
            done += 1;
        }
    }
    ensure(kinds.len() == 7, || format!("generator missed operation kinds: {kinds:?}"))?;
    ensure(non_empty * 5 >= done, || format!("only {non_empty}/{done} non-empty answers"))?;
    Ok(format!(
        "{done} plans over {graphs} graphs, 0 mismatches ({non_empty} non-empty, {ambiguous} ambiguous)"
    ))
}

// ---------------------------------------------------------------------------
// Heuristic rules and the worked examples.

use Direction::{Forward, Reverse};

fn films_of(person: &str) -> Op {
    atomic(Slot::entity(person), "cast_member", Reverse)
}

/// Hand-built fixture-schema plans, each breaking exactly one rule.
pub fn rule_breakers() -> Vec<(Rule, Plan)> {
    let genre_filter = |i| filter(i, has("genre", Forward, None));
    let mut nine = vec![films_of("saoirse_ronan")];
    nine.extend((1..=8).map(genre_filter));
    vec![
        (
            Rule::R1,
            plan(
                vec![
                    films_of("saoirse_ronan"),
                    atomic(Slot::entity("quentin_tarantino"), "directed_by", Reverse),
                    Op::Union { left: 1, right: 2 },
                    Op::Union { left: 3, right: 2 },
                ],
                "film",
            ),
        ),
        (
            Rule::R2,
            plan(vec![films_of("saoirse_ronan"), Op::Intersection { left: 1, right: 1 }], "film"),
        ),
        (
            Rule::R3,
            plan(
                vec![
                    films_of("saoirse_ronan"),
                    genre_filter(1),
                    Op::Difference { left: 2, right: 1 },
                ],
                "film",
            ),
        ),
        (
            Rule::R4,
            plan(
                vec![
                    films_of("saoirse_ronan"),
                    join(1, "directed_by", Forward),
                    Op::GroupBy { input: 2 },
                ],
                "director",
            ),
        ),
        (
            Rule::R5,
            plan(
                vec![
                    atomic(Slot::ambiguous("Heat", "film"), "genre", Forward),
                    atomic(Slot::ambiguous("Dune", "film"), "genre", Forward),
                    Op::Union { left: 1, right: 2 },
                ],
                "genre",
            ),
        ),
        (Rule::R6, plan(nine, "film")),
    ]
}

pub fn heuristic_rules_and_examples() -> Check {
    let fixture = fixture_graph();
    let config = HeuristicConfig::default();
    for (rule, p) in rule_breakers() {
        typecheck(&p, fixture.schema()).map_err(|e| format!("{rule} example is ill-typed: {e:?}"))?;
        let rules: BTreeSet<Rule> = match validate_heuristics(&p, &config) {
            Ok(()) => return Err(format!("{rule} example accepted")),
            Err(v) => v.into_iter().map(|v| v.rule).collect(),
        };
        ensure(rules == BTreeSet::from([rule]), || format!("{rule} example rejected by {rules:?}"))?;
    }
    let person = person_graph();
    let rows = [
        ("row 1", table1_row1(), &fixture),
        ("row 2", table1_row2(), &fixture),
        ("row 3", table1_row3(), &person),
        ("row 4", table1_row4(), &fixture),
    ];
    for (name, p, graph) in rows {
        typecheck(&p, graph.schema()).map_err(|e| format!("{name} fails typecheck: {e:?}"))?;
        validate_heuristics(&p, &config).map_err(|e| format!("{name} breaks {e:?}"))?;
    }
    Ok("R1-R6 each rejected with its own rule id; 4 worked examples accepted".into())
}

// ---------------------------------------------------------------------------
// Ambiguity branching.

pub fn heat_branches_expected() -> BTreeMap<String, BTreeSet<String>> {
    BTreeMap::from([
        (
            "Heat (1972 film)".to_string(),
            ids(["andrea_feldman", "joe_dallesandro", "sylvia_miles"]),
        ),
        (
            "Heat (1986 film)".to_string(),
            ids(["burt_reynolds", "karen_young", "peter_macnicol"]),
        ),
        (
            "Heat (1995 film)".to_string(),
            ids([
                "al_pacino",
                "ashley_judd",
                "jon_voight",
                "natalie_portman",
                "robert_de_niro",
                "val_kilmer",
            ]),
        ),
    ])
}

pub fn heat_branching() -> Check {
    let graph = fixture_graph();
    let answer = execute_branched(&heat_plan(), &graph).map_err(|e| e.to_string())?;
    let expected = heat_branches_expected();
    ensure(answer.ambiguous, || "answer not marked ambiguous".into())?;
    ensure(answer.branches == expected, || format!("branches {:?}", answer.branches))?;
    Ok(format!(
        "3 branches: {}",
        answer
            .branches
            .iter()
            .map(|(k, v)| format!("{k}={}", v.len()))
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

// ---------------------------------------------------------------------------
// Scoring.

pub struct ScoreCase {
    pub name: &'static str,
    pub gold: &'static [(&'static str, &'static [&'static str])],
    pub predicted: &'static [(&'static str, &'static [&'static str])],
    pub aliases: &'static [(&'static str, &'static str)],
    pub pooling: Pooling,
    pub lenient: bool,
    /// Precision, recall, exact match.
    pub expected: (f64, f64, bool),
}

const fn case(
    name: &'static str,
    gold: &'static [(&'static str, &'static [&'static str])],
    predicted: &'static [(&'static str, &'static [&'static str])],
    expected: (f64, f64, bool),
) -> ScoreCase {
    ScoreCase {
        name,
        gold,
        predicted,
        aliases: &[],
        pooling: Pooling::Micro,
        lenient: false,
        expected,
    }
}

pub fn score_cases() -> Vec<ScoreCase> {
    const D: &str = "default";
    vec![
        case("half right", &[(D, &["A", "C"])], &[(D, &["A", "B"])], (0.5, 0.5, false)),
        case("exact", &[(D, &["A", "B"])], &[(D, &["B", "A"])], (1.0, 1.0, true)),
        case("subset", &[(D, &["A", "B"])], &[(D, &["A"])], (1.0, 0.5, false)),
        case("superset", &[(D, &["A"])], &[(D, &["A", "B", "C", "D"])], (0.25, 1.0, false)),
        case("no answer", &[(D, &["A"])], &[], (0.0, 0.0, false)),
        case("disjoint", &[(D, &["A"])], &[(D, &["B"])], (0.0, 0.0, false)),
        case(
            "case and spacing",
            &[(D, &["Robert De Niro"])],
            &[(D, &["  robert   DE NIRO "])],
            (1.0, 1.0, true),
        ),
        case("lone label", &[(D, &["A"])], &[("answer", &["A"])], (1.0, 1.0, true)),
        case(
            "missing branch",
            &[("Heat (1995 film)", &["A", "B"]), ("Heat (1986 film)", &["C", "D"])],
            &[("heat (1995 film)", &["A", "B"])],
            (1.0, 0.5, false),
        ),
        case(
            "both branches",
            &[("Heat (1995 film)", &["A", "B"]), ("Heat (1986 film)", &["C"])],
            &[("the 1995 one", &["A", "B"]), ("Heat (1986 film)", &["C"])],
            (1.0, 1.0, true),
        ),
        case(
            "spurious branch",
            &[("X", &["A"]), ("Y", &["B"])],
            &[("X", &["A"]), ("Y", &["B"]), ("Z", &["C"])],
            (2.0 / 3.0, 1.0, false),
        ),
        ScoreCase {
            lenient: true,
            ..case(
                "spurious branch ignored",
                &[("X", &["A"]), ("Y", &["B"])],
                &[("X", &["A"]), ("Y", &["B"]), ("Z", &["C"])],
                (1.0, 1.0, true),
            )
        },
        case(
            "pooled counts",
            &[("X", &["A", "B"]), ("Y", &["C"])],
            &[("X", &["A"]), ("Y", &["C", "D"])],
            (2.0 / 3.0, 2.0 / 3.0, false),
        ),
        ScoreCase {
            pooling: Pooling::Macro,
            ..case(
                "branch average",
                &[("X", &["A", "B"]), ("Y", &["C"])],
                &[("X", &["A"]), ("Y", &["C", "D"])],
                (0.75, 0.75, false),
            )
        },
        ScoreCase {
            aliases: &[("R. De Niro", "Robert De Niro")],
            ..case(
                "alias",
                &[(D, &["Robert De Niro", "Al Pacino"])],
                &[(D, &["R. De Niro", "Al Pacino"])],
                (1.0, 1.0, true),
            )
        },
        case(
            "parenthetical",
            &[(D, &["Heat (1995 film)"])],
            &[(D, &["heat"])],
            (1.0, 1.0, true),
        ),
    ]
}

pub fn run_score_case(c: &ScoreCase) -> (f64, f64, bool) {
    let mut aliases = AliasTable::default();
    for (alias, canonical) in c.aliases {
        aliases.insert(alias, canonical);
    }
    let gold = GoldAnswer {
        id: c.name.into(),
        question: String::new(),
        ambiguous: c.gold.len() > 1,
        branches: c
            .gold
            .iter()
            .map(|(l, v)| (l.to_string(), v.iter().map(|s| normalize_answer(s)).collect()))
            .collect(),
    };
    let prediction = Prediction {
        id: c.name.into(),
        reasoning: String::new(),
        answers: c
            .predicted
            .iter()
            .map(|(l, v)| (l.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect(),
        transcript: None,
    };
    let alignment = align_branches(&prediction.labels(), &gold.labels(), "", None);
    let score = score_question(
        &prediction.normalized(&aliases),
        &gold,
        &alignment,
        ScoreOptions {
            pooling: c.pooling,
            ignore_spurious_branches: c.lenient,
        },
    );
    (score.precision, score.recall, score.exact_match)
}

pub fn small_dataset(seed: u64) -> Result<(KnowledgeGraph, Vec<QARecord>), String> {
    let graph = fixture_graph();
    let config = SynthesisConfig {
        seed,
        ..SynthesisConfig::default()
    };
    let quotas = Quotas {
        ambiguous: 5,
        non_ambiguous: 5,
        ..Quotas::default()
    };
    let out = synthesize(&graph, &config, &quotas, &OracleGreedy, &WorkerPool::sequential(), 100_000)
        .map_err(|e| e.to_string())?;
    Ok((graph, out.records))
}

pub fn gold_as_prediction(records: &[QARecord]) -> Check {
    let predictions: Vec<Prediction> = records.iter().map(Prediction::from_gold).collect();
    let aliases = AliasTable::from_records(records);
    let report = evaluate_dataset(
        records,
        &predictions,
        &aliases,
        None,
        ScoreOptions::default(),
        &WorkerPool::sequential(),
    )
    .map_err(|e| e.to_string())?;
    let o = &report.aggregate.overall;
    ensure((o.precision, o.recall, o.exact_match) == (1.0, 1.0, 1.0), || format!("means {o:?}"))?;
    Ok(format!("gold-as-prediction means (1, 1, 1) over {} records", o.count))
}

pub fn metric_correctness() -> Check {
    let cases = score_cases();
    for c in &cases {
        let (p, r, em) = run_score_case(c);
        let (ep, er, eem) = c.expected;
        ensure((p - ep).abs() < 1e-12 && (r - er).abs() < 1e-12 && em == eem, || {
            format!("{}: got ({p}, {r}, {em}), expected ({ep}, {er}, {eem})", c.name)
        })?;
    }
    let (_, records) = small_dataset(11)?;
    let gold = gold_as_prediction(&records)?;
    Ok(format!("{} hand-scored cases; {gold}", cases.len()))
}

// ---------------------------------------------------------------------------
// Dataset shape, checked on the serialized files only.

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Check record shape and recompute the averages in `stats_json` from the
/// raw records, without the library's record types.
pub fn dataset_shape(records_jsonl: &str, stats_json: &str) -> Check {
    let records: Vec<Value> = records_jsonl
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| format!("records: {e}"))?;
    let stats: Value = serde_json::from_str(stats_json).map_err(|e| format!("stats: {e}"))?;
    ensure(!records.is_empty(), || "no records".into())?;

    let mut subsets: BTreeMap<&str, Vec<[f64; 6]>> = BTreeMap::new();
    for r in &records {
        let id = r["id"].as_str().unwrap_or("?");
        let steps = r["plan"]["steps"].as_array().ok_or("plan without steps")?.len();
        ensure((2..=8).contains(&steps), || format!("{id}: {steps} steps"))?;
        let branches = r["answers"]["branches"].as_object().ok_or("no branches")?;
        let ambiguous = r["answers"]["ambiguous"].as_bool().ok_or("no ambiguity flag")?;
        ensure(!branches.is_empty(), || format!("{id}: no branches"))?;
        for (label, answers) in branches {
            let n = answers.as_array().map_or(0, Vec::len);
            ensure(n > 0, || format!("{id}: branch `{label}` is empty"))?;
        }
        if ambiguous {
            ensure(branches.len() >= 2, || format!("{id}: ambiguous with {} branch", branches.len()))?;
        } else {
            ensure(branches.len() == 1, || format!("{id}: {} branches", branches.len()))?;
        }
        let total: usize = branches.values().map(|a| a.as_array().map_or(0, Vec::len)).sum();
        let words = r["question"].as_str().unwrap_or("").split_whitespace().count();
        let involved = r["stats"]["entities_involved"].as_f64().ok_or("no entities_involved")?;
        subsets
            .entry(if ambiguous { "ambiguous" } else { "non_ambiguous" })
            .or_default()
            .push([
                words as f64,
                total as f64,
                steps as f64,
                involved,
                total as f64 / branches.len() as f64,
                branches.len() as f64,
            ]);
    }

    ensure(stats["total"].as_u64() == Some(records.len() as u64), || "total".into())?;
    let fields = [
        "avg_question_words",
        "avg_answer_size",
        "avg_steps",
        "avg_entities_involved",
        "avg_answer_per_branch",
        "avg_branches",
    ];
    let mut compared = 0;
    for (name, rows) in &subsets {
        let s = &stats[*name];
        ensure(s["count"].as_u64() == Some(rows.len() as u64), || format!("{name} count"))?;
        let n_fields = if *name == "ambiguous" { 6 } else { 4 };
        for (i, field) in fields.iter().enumerate().take(n_fields) {
            let want = mean(&rows.iter().map(|r| r[i]).collect::<Vec<_>>());
            let got = s[*field].as_f64().ok_or_else(|| format!("{name}.{field} missing"))?;
            ensure((got - want).abs() <= 1e-9, || format!("{name}.{field}: file {got}, recomputed {want}"))?;
            compared += 1;
        }
    }
    Ok(format!("{} records well-formed; {compared} averages agree within 1e-9", records.len()))
}

// ---------------------------------------------------------------------------
// Error breakdown.

pub struct ErrorCase {
    pub name: &'static str,
    pub gold: Vec<(&'static str, Vec<&'static str>)>,
    pub predicted: Vec<(&'static str, Vec<&'static str>)>,
    /// `(status, documents)` per tool call; `None` for no transcript.
    pub transcript: Option<Vec<(&'static str, Vec<&'static str>)>>,
    /// Incomplete extraction, incorrect reasoning, wrong tool call.
    pub expected: [FlagState; 3],
}

pub fn error_cases() -> Vec<ErrorCase> {
    use FlagState::{No, Unknown, Yes};
    const D: &str = "default";
    vec![
        ErrorCase {
            name: "answer never retrieved",
            gold: vec![(D, vec!["Al Pacino", "Val Kilmer"])],
            predicted: vec![(D, vec!["Al Pacino"])],
            transcript: Some(vec![("ok", vec!["Heat stars Al Pacino as Vincent Hanna."])]),
            expected: [Yes, No, No],
        },
        ErrorCase {
            name: "answer retrieved but dropped",
            gold: vec![(D, vec!["Al Pacino", "Val Kilmer"])],
            predicted: vec![(D, vec!["Al Pacino"])],
            transcript: Some(vec![("ok", vec!["Al Pacino and Val Kilmer co-star in Heat."])]),
            expected: [No, Yes, No],
        },
        ErrorCase {
            name: "failed search, otherwise correct answers",
            gold: vec![(D, vec!["Al Pacino"])],
            predicted: vec![(D, vec!["Al Pacino", "Robert Duvall"])],
            transcript: Some(vec![("error", vec![]), ("ok", vec!["Al Pacino"])]),
            expected: [No, No, Yes],
        },
        ErrorCase {
            name: "failed search and nothing found",
            gold: vec![(D, vec!["Val Kilmer"])],
            predicted: vec![(D, vec!["Tom Sizemore"])],
            transcript: Some(vec![("malformed", vec!["Tom Sizemore plays Michael Cheritto."])]),
            expected: [Yes, No, Yes],
        },
        ErrorCase {
            name: "one reading ignored",
            gold: vec![("Heat (1995 film)", vec!["Al Pacino"]), ("Heat (1986 film)", vec!["Burt Reynolds"])],
            predicted: vec![("Heat (1995 film)", vec!["Al Pacino"])],
            transcript: Some(vec![("ok", vec!["Heat (1995) stars Al Pacino."])]),
            expected: [Yes, No, No],
        },
        ErrorCase {
            name: "all three",
            gold: vec![("Heat (1995 film)", vec!["Al Pacino", "Val Kilmer"]), ("Heat (1986 film)", vec!["Burt Reynolds"])],
            predicted: vec![("Heat (1995 film)", vec!["Al Pacino"])],
            transcript: Some(vec![("failed", vec![]), ("ok", vec!["Cast: Al Pacino, Val Kilmer."])]),
            expected: [Yes, Yes, Yes],
        },
        ErrorCase {
            name: "name inside a longer word",
            gold: vec![(D, vec!["Heat"])],
            predicted: vec![(D, vec!["Drive"])],
            transcript: Some(vec![("ok", vec!["Heath Ledger filmography."])]),
            expected: [Yes, No, No],
        },
        ErrorCase {
            name: "no transcript, branch missing",
            gold: vec![("Heat (1995 film)", vec!["Al Pacino"]), ("Heat (1986 film)", vec!["Burt Reynolds"])],
            predicted: vec![("Heat (1995 film)", vec!["Al Pacino"])],
            transcript: None,
            expected: [Yes, Unknown, Unknown],
        },
        ErrorCase {
            name: "no transcript, wrong answer",
            gold: vec![(D, vec!["Al Pacino"])],
            predicted: vec![(D, vec!["Robert De Niro"])],
            transcript: None,
            expected: [Unknown, Unknown, Unknown],
        },
    ]
}

pub fn run_error_case(c: &ErrorCase) -> [FlagState; 3] {
    let aliases = AliasTable::default();
    let gold = GoldAnswer {
        id: c.name.into(),
        question: String::new(),
        ambiguous: c.gold.len() > 1,
        branches: c
            .gold
            .iter()
            .map(|(l, v)| (l.to_string(), v.iter().map(|s| aliases.canonical(s)).collect()))
            .collect(),
    };
    let prediction = Prediction {
        id: c.name.into(),
        reasoning: String::new(),
        answers: c
            .predicted
            .iter()
            .map(|(l, v)| (l.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect(),
        transcript: c.transcript.as_ref().map(|events| {
            events
                .iter()
                .map(|(status, docs)| ToolEvent {
                    tool: "search".into(),
                    query: c.name.into(),
                    status: status.to_string(),
                    documents: docs.iter().map(|d| d.to_string()).collect(),
                })
                .collect()
        }),
    };
    let result = evaluate_question(&prediction, &gold, &aliases, None, ScoreOptions::default());
    let flags = result.errors.unwrap_or(ErrorFlags::NONE);
    [
        flags.incomplete_information_extraction,
        flags.incorrect_intermediate_reasoning,
        flags.wrong_tool_call,
    ]
}

pub fn error_breakdown() -> Check {
    let cases = error_cases();
    let mut right = 0;
    let mut wrong = Vec::new();
    for c in &cases {
        let got = run_error_case(c);
        if got == c.expected {
            right += 1;
        } else {
            wrong.push(format!("{}: {got:?} (expected {:?})", c.name, c.expected));
        }
    }
    ensure(wrong.is_empty(), || wrong.join("; "))?;
    Ok(format!("{right}/{} crafted transcripts classified as intended", cases.len()))
}

// ---------------------------------------------------------------------------
// Model-response parsing with a stub client.

pub const EXAMPLE_TRANSLATION: &str = "Analysis: The plan narrows down to films made by both Christopher Nolan and Hans Zimmer, then counts actors and keeps only those appearing in four or more of those collaborations, so the final output is the set of actors meeting that frequency.\nQuestion: Among the movies collaborated on by Hans Zimmer and Christopher Nolan, which actors appeared at least four times?";

pub const VALID_VERDICT: &str = "Your analysis: The plan mirrors the question's intent-identify Nobel literature laureates and filter by Japanese birth.\nClassification:\nValid";

pub const INVALID_VERDICT: &str = "Analysis: The plan retrieves awards, not films, and the answers are award titles rather than movies.\nClassification: Invalid";

/// A toy-graph record for the cast of FilmA.
pub fn toy_record(id: &str) -> (KnowledgeGraph, QARecord) {
    let graph = toy_graph();
    let p = plan(
        vec![
            atomic(Slot::entity("film_a"), "cast_member", Forward),
            filter(1, has("won_award", Forward, Some(Slot::entity("academy_award")))),
        ],
        "actor",
    );
    let execution = execute_branched_traced(&p, &graph).expect("toy plan runs");
    let rendered = branchqa_core::plan::render_steps(&p, &graph).expect("renders");
    let provenance = Provenance {
        seed: 0,
        ordinal: 0,
        selector: "test".into(),
        question_source: QuestionSource::None,
        plan_vetting: VetStatus::Pending,
        qa_vetting: VetStatus::Pending,
        flags: vec![],
    };
    let record = build_record(id.into(), p, rendered, &execution, &graph, provenance);
    (graph, record)
}

fn candidates(n: usize) -> Vec<Entity> {
    (1..=n).map(|i| entity(&format!("Q{i}"), &format!("Film {i}"), "film")).collect()
}

fn select_with(raw: &str, pool: &[&Entity]) -> Result<Vec<String>, SelectorError> {
    let stub = StubClient::default().with("entity_selection", raw);
    let rendered = vec!["(1) Find cast member of {SUBJECT_FILM}.".to_string()];
    let request = SelectionRequest {
        placeholder: "SUBJECT_FILM".into(),
        slot_type: "film",
        candidates: pool,
        rendered_plan: &rendered,
    };
    select_entities(&request, &stub, &PromptKit::builtin())
}

/// Random selector replies mixing pool ids, invented ids and junk; every
/// accepted id must come from the pool.
pub fn selector_output_within_pool(trials: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let owned = candidates(50);
    let mut accepted = 0;
    for _ in 0..trials {
        let mut pool: Vec<&Entity> = owned.iter().collect();
        pool.shuffle(&mut rng);
        pool.truncate(rng.random_range(1..=50));
        let mut picks: Vec<String> = (0..rng.random_range(0..5))
            .map(|_| match rng.random_range(0..3) {
                0 => pool.choose(&mut rng).unwrap().id.clone(),
                1 => format!("Q{}", rng.random_range(1..200)),
                _ => "not an id".into(),
            })
            .collect();
        picks.dedup();
        let raw = serde_json::json!({ "SUBJECT_FILM": picks }).to_string();
        if let Ok(ids) = select_with(&raw, &pool) {
            for id in &ids {
                ensure(pool.iter().any(|e| &e.id == id), || format!("{id} escaped the pool"))?;
            }
            accepted += ids.len();
        }
    }
    Ok(format!("{trials} random replies, {accepted} ids kept, none outside the pool"))
}

pub fn llm_stage_parsing() -> Check {
    // Translation format, plain and decorated.
    let t = parse_translation(EXAMPLE_TRANSLATION).map_err(|e| e.to_string())?;
    ensure(
        t.question == "Among the movies collaborated on by Hans Zimmer and Christopher Nolan, which actors appeared at least four times?",
        || format!("question {:?}", t.question),
    )?;
    let fenced = format!("```\n{}\n```", EXAMPLE_TRANSLATION.replace("Analysis:", "**Analysis:**"));
    ensure(parse_translation(&fenced).is_ok(), || "fenced translation rejected".into())?;
    for bad in ["", "Question only, no labels", "Analysis: fine\nQuestion:", "Question: a?\nAnalysis: b"] {
        ensure(parse_translation(bad).is_err(), || format!("accepted {bad:?}"))?;
    }

    // Classification format.
    ensure(parse_classification(VALID_VERDICT) == Ok(Verdict::Valid), || "valid verdict".into())?;
    ensure(
        matches!(parse_classification(INVALID_VERDICT), Ok(Verdict::Invalid(_))),
        || "invalid verdict".into(),
    )?;
    ensure(
        parse_classification("Analysis: unsure\nClassification: maybe").is_err(),
        || "`maybe` accepted".into(),
    )?;

    // End to end through the stub: translation, fallback, vetting.
    let kit = PromptKit::builtin();
    let (graph, record) = toy_record("q000001");
    let good = StubClient::default().with("translation", EXAMPLE_TRANSLATION);
    let out = translate(&record, &graph, &good, &kit, 3);
    ensure(out.source == QuestionSource::Llm && out.attempts == 1, || format!("{out:?}"))?;
    let junk = StubClient::default().with("translation", "I cannot help with that.");
    let out = translate(&record, &graph, &junk, &kit, 3);
    ensure(
        out.source == QuestionSource::Template
            && out.attempts == 4
            && out.result.question == "Which actors satisfy: cast member of FilmA; has award Academy Award?",
        || format!("fallback {out:?}"),
    )?;
    let vetting = StubClient::default()
        .with("plan_feasibility", VALID_VERDICT)
        .with("qa_feasibility", INVALID_VERDICT);
    ensure(
        vet_plan(&record.rendered_plan, &vetting, &kit, None) == Ok(Verdict::Valid),
        || "vet_plan".into(),
    )?;
    ensure(
        matches!(vet_qa("q?", &record.rendered_plan, "- x", &vetting, &kit, None), Ok(Verdict::Invalid(_))),
        || "vet_qa".into(),
    )?;

    // A vetting outage drops the record under the strict policy.
    let (_, second) = toy_record("q000002");
    let flaky = StubClient::default()
        .with("plan_feasibility", VALID_VERDICT)
        .with("qa_feasibility", VALID_VERDICT)
        .with("translation", EXAMPLE_TRANSLATION)
        .with_error("plan_feasibility/q000002", ClientError::Network("reset".into()));
    let policy = TranslatePolicy {
        offline: false,
        strict: true,
        retries: 3,
    };
    let report = translate_dataset(vec![record, second], &graph, &flaky, &kit, policy, &WorkerPool::sequential());
    ensure(report.records.len() == 1 && report.dropped.len() == 1, || {
        format!("strict run kept {} and dropped {}", report.records.len(), report.dropped.len())
    })?;

    // Entity selection.
    let owned = candidates(3);
    let pool: Vec<&Entity> = owned.iter().collect();
    ensure(select_with(r#"{"SUBJECT_FILM": "Q2"}"#, &pool) == Ok(vec!["Q2".into()]), || "plain pick".into())?;
    ensure(
        select_with(r#"{"SUBJECT_FILM": ["Q999", "Q2"]}"#, &pool) == Ok(vec!["Q2".into()]),
        || "invented id kept".into(),
    )?;
    ensure(
        matches!(select_with(r#"{"SUBJECT_FILM": "Q999"}"#, &pool), Err(SelectorError::Rejected(_))),
        || "invented-only pick accepted".into(),
    )?;
    ensure(
        matches!(select_with("Q2", &pool), Err(SelectorError::Malformed(_))),
        || "non-JSON pick accepted".into(),
    )?;
    let property = selector_output_within_pool(500, 9)?;
    Ok(format!("translation, verdict and selection formats parsed; fallbacks engaged; {property}"))
}

/// A literal comparison helper shared by tests that build attribute filters.
pub fn year_filter(input: usize, comparator: Comparator, year: i64) -> Op {
    filter(
        input,
        Predicate::AttributeCompare {
            attribute: "release_year".into(),
            comparator,
            value: Some(branchqa_core::graph::Literal::Int(year)),
        },
    )
}
