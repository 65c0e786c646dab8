//! Quota-driven synthesis loop.
//!
//! Every plan ordinal owns an rng stream derived from `(seed, ordinal)`, so
//! a candidate depends on nothing but its ordinal. Candidates are produced
//! in parallel batches and accepted strictly in ordinal order, which keeps
//! the output identical for any worker count.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::branch::execute_branched_traced;
use super::realize::realize_entities;
use super::record::{build_record, Provenance, QARecord, QuestionSource, VetStatus};
use super::sample::{sample_plan_skeleton, SeedKind};
use super::select::EntitySelector;
use super::{ConfigError, SynthesisConfig};
use crate::graph::KnowledgeGraph;
use crate::par::WorkerPool;
use crate::plan::{render_steps, serialize_plan};

const BATCH: u64 = 128;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Quotas {
    pub ambiguous: usize,
    pub non_ambiguous: usize,
    /// Upper bound on records per domain, across both subsets.
    pub per_domain: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(
        "quotas unreachable after {ordinals} plan attempts: \
         ambiguous {ambiguous_got}/{ambiguous_want}, non-ambiguous {non_ambiguous_got}/{non_ambiguous_want}"
    )]
    QuotaUnreachable {
        ordinals: u64,
        ambiguous_got: usize,
        ambiguous_want: usize,
        non_ambiguous_got: usize,
        non_ambiguous_want: usize,
    },
}

#[derive(Debug, Clone)]
pub struct SynthesisOutput {
    /// Accepted records in ordinal order.
    pub records: Vec<QARecord>,
    /// Ordinals examined.
    pub ordinals: u64,
    /// Why candidates were rejected, with counts.
    pub rejections: BTreeMap<String, u64>,
}

/// Sample, realize and execute plans until both quotas are met exactly, or
/// fail after `max_ordinals` candidates.
pub fn synthesize(
    graph: &KnowledgeGraph,
    config: &SynthesisConfig,
    quotas: &Quotas,
    selector: &dyn EntitySelector,
    pool: &WorkerPool,
    max_ordinals: u64,
) -> Result<SynthesisOutput, SynthError> {
    config.validate()?;
    let ambiguous_types: Vec<String> = graph
        .schema()
        .entity_types
        .iter()
        .filter(|t| !graph.surfaces_for_type(&t.id, 2).is_empty())
        .map(|t| t.id.clone())
        .collect();

    let mut records = Vec::new();
    let mut seen_plans = BTreeSet::new();
    let mut per_domain: BTreeMap<String, usize> = BTreeMap::new();
    let mut rejections: BTreeMap<String, u64> = BTreeMap::new();
    let (mut amb, mut non) = (0usize, 0usize);
    let done = |amb: usize, non: usize| amb >= quotas.ambiguous && non >= quotas.non_ambiguous;

    let mut next = 0u64;
    let mut examined = 0u64;
    while !done(amb, non) && next < max_ordinals {
        let ordinals: Vec<u64> = (next..(next + BATCH).min(max_ordinals)).collect();
        next += ordinals.len() as u64;
        let candidates = pool.map(&ordinals, |&ordinal| {
            candidate(graph, config, quotas, &ambiguous_types, selector, ordinal)
        });
        for result in candidates {
            if done(amb, non) {
                break;
            }
            examined += 1;
            let record = match result {
                Ok(r) => r,
                Err(reason) => {
                    *rejections.entry(reason).or_default() += 1;
                    continue;
                }
            };
            let reject = if record.is_ambiguous() && amb >= quotas.ambiguous {
                Some("ambiguous quota full")
            } else if !record.is_ambiguous() && non >= quotas.non_ambiguous {
                Some("non-ambiguous quota full")
            } else if quotas
                .per_domain
                .get(&record.domain)
                .is_some_and(|&cap| per_domain.get(&record.domain).copied().unwrap_or(0) >= cap)
            {
                Some("domain quota full")
            } else if !seen_plans.insert(serialize_plan(&record.plan)) {
                Some("duplicate plan")
            } else {
                None
            };
            if let Some(reason) = reject {
                *rejections.entry(reason.to_string()).or_default() += 1;
                continue;
            }
            *per_domain.entry(record.domain.clone()).or_default() += 1;
            if record.is_ambiguous() {
                amb += 1;
            } else {
                non += 1;
            }
            records.push(record);
        }
    }

    if !done(amb, non) {
        return Err(SynthError::QuotaUnreachable {
            ordinals: examined,
            ambiguous_got: amb,
            ambiguous_want: quotas.ambiguous,
            non_ambiguous_got: non,
            non_ambiguous_want: quotas.non_ambiguous,
        });
    }
    Ok(SynthesisOutput {
        records,
        ordinals: examined,
        rejections,
    })
}

/// The rng stream of one plan ordinal.
pub fn ordinal_rng(seed: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal);
    rng
}

fn candidate(
    graph: &KnowledgeGraph,
    config: &SynthesisConfig,
    quotas: &Quotas,
    ambiguous_types: &[String],
    selector: &dyn EntitySelector,
    ordinal: u64,
) -> Result<QARecord, String> {
    let mut rng = ordinal_rng(config.seed, ordinal);
    let ambiguous = match (quotas.ambiguous, quotas.non_ambiguous) {
        (0, _) => false,
        (_, 0) => true,
        _ => rng.random_bool(config.ambiguous_fraction),
    };
    let seed = if ambiguous {
        if ambiguous_types.is_empty() {
            return Err("no ambiguous surfaces".into());
        }
        SeedKind::Ambiguous(ambiguous_types)
    } else {
        SeedKind::Plain
    };
    let skeleton = sample_plan_skeleton(graph.schema(), config, seed, &mut rng).map_err(|_| "sampling exhausted")?;
    let realized = realize_entities(&skeleton, graph, selector, config, &mut rng).map_err(|e| match e {
        super::RealizeError::NoViableBinding { .. } => "no viable binding".to_string(),
        other => other.to_string(),
    })?;
    let plan = realized.plan;
    let execution = execute_branched_traced(&plan, graph).map_err(|e| e.to_string())?;
    if ambiguous {
        let distinct: BTreeSet<_> = execution.answer.branches.values().collect();
        if distinct.len() < 2 {
            return Err("fewer than two distinct branch answers".into());
        }
    }
    if execution
        .answer
        .branches
        .values()
        .any(|b| b.len() > config.max_answer_size)
    {
        return Err("answer too large".into());
    }
    let rendered = render_steps(&plan, graph).map_err(|e| e.to_string())?;
    let provenance = Provenance {
        seed: config.seed,
        ordinal,
        selector: selector.name().to_string(),
        question_source: QuestionSource::None,
        plan_vetting: VetStatus::Pending,
        qa_vetting: VetStatus::Pending,
        flags: Vec::new(),
    };
    Ok(build_record(
        format!("q{ordinal:06}"),
        plan,
        rendered,
        &execution,
        graph,
        provenance,
    ))
}
