//! Pipeline configuration: one TOML or JSON file, then command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use branchqa_core::eval::{Pooling, ScoreOptions};
use branchqa_core::graph::GraphPaths;
use branchqa_core::qgen::{ClientConfig, ClientKind};
use branchqa_core::synth::{Quotas, SynthesisConfig};

use crate::GlobalArgs;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    /// Try candidates in random order.
    #[default]
    OracleGreedy,
    /// Ask the chat model first.
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory holding `schema.json`, `entities.jsonl`, ... (alternative to `graph`).
    pub graph_dir: Option<PathBuf>,
    /// Explicit graph file locations.
    pub graph: Option<GraphPaths>,
    pub out_dir: PathBuf,
    /// 0 means one per logical core.
    pub workers: usize,
    pub offline: bool,
    pub strict_filter: bool,
    /// Candidate plans examined before giving up on the quotas.
    pub max_ordinals: u64,
    pub selector: SelectorKind,
    /// Directory of prompt overrides; built-in prompts otherwise.
    pub prompts_dir: Option<PathBuf>,
    pub synthesis: SynthesisConfig,
    pub quotas: Quotas,
    pub client: ClientConfig,
    pub evaluation: EvaluationConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub pooling: Pooling,
    /// Do not penalize predicted branches that match no gold branch.
    pub ignore_spurious_branches: bool,
    /// Ask the chat model to align branch labels the text stages missed.
    pub llm_matcher: bool,
}

impl EvaluationConfig {
    pub fn scoring(&self) -> ScoreOptions {
        ScoreOptions {
            pooling: self.pooling,
            ignore_spurious_branches: self.ignore_spurious_branches,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            graph_dir: None,
            graph: None,
            out_dir: PathBuf::from("out"),
            workers: 0,
            offline: false,
            strict_filter: false,
            max_ordinals: 200_000,
            selector: SelectorKind::default(),
            prompts_dir: None,
            synthesis: SynthesisConfig::default(),
            quotas: Quotas {
                ambiguous: 50,
                non_ambiguous: 50,
                ..Quotas::default()
            },
            client: ClientConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Read a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: PipelineConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?,
            _ => toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?,
        };
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(d) = &mut config.graph_dir {
            rebase(base, d);
        }
        if let Some(g) = &mut config.graph {
            rebase(base, &mut g.schema);
            rebase(base, &mut g.entities);
            rebase(base, &mut g.triples);
            for p in [&mut g.attributes, &mut g.ambiguity].into_iter().flatten() {
                rebase(base, p);
            }
        }
        rebase(base, &mut config.out_dir);
        if let Some(p) = &mut config.prompts_dir {
            rebase(base, p);
        }
        if let Some(p) = &mut config.client.stub_fixture {
            rebase(base, p);
        }
        Ok(config)
    }

    /// The file config (or defaults) with command-line flags applied on top.
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let mut config = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some(dir) = &args.graph {
            config.graph_dir = Some(dir.clone());
            config.graph = None;
        }
        if let Some(seed) = args.seed {
            config.synthesis.seed = seed;
        }
        if let Some(w) = args.workers {
            config.workers = w;
        }
        if args.offline {
            config.offline = true;
        }
        if args.strict_filter {
            config.strict_filter = true;
        }
        if let Some(q) = args.quota_ambiguous {
            config.quotas.ambiguous = q;
        }
        if let Some(q) = args.quota_nonambiguous {
            config.quotas.non_ambiguous = q;
        }
        if let Some(out) = &args.out {
            config.out_dir = out.clone();
        }
        if config.offline {
            config.client.kind = ClientKind::Offline;
        }
        config.synthesis.validate()?;
        config.client.validate()?;
        Ok(config)
    }

    pub fn graph_paths(&self) -> Result<GraphPaths> {
        match (&self.graph, &self.graph_dir) {
            (Some(paths), _) => Ok(paths.clone()),
            (None, Some(dir)) => Ok(GraphPaths::in_dir(dir)),
            (None, None) => bail!("no graph configured: set `graph_dir` or `[graph]` in the config, or pass --graph"),
        }
    }
}
