//! Plan sampling, entity realization, execution and record assembly.

mod branch;
mod config;
mod driver;
mod exec;
mod realize;
mod record;
mod sample;
mod select;
mod stats;

pub use branch::{
    execute_branched, execute_branched_traced, BranchTrace, BranchedAnswer, BranchedExecution, DEFAULT_BRANCH,
};
pub use config::{ConfigError, SynthesisConfig};
pub use driver::{ordinal_rng, synthesize, Quotas, SynthError, SynthesisOutput};
pub use exec::{execute_plan, Binding, EntitySet, ExecError, Execution, StepResult};
pub use realize::{realize_entities, RealizeError, Realization};
pub use record::{
    build_record, word_count, AnswerEntity, Provenance, QARecord, QuestionSource, RecordStats, VetStatus,
};
pub use sample::{sample_plan_skeleton, SampleError, SeedKind};
pub use select::{retain_in_pool, EntitySelector, OracleGreedy, SelectionRequest, SelectorError};
pub use stats::{compute_dataset_stats, render_stats_table, DatasetStats, Histograms, StatsError, SubsetStats};
