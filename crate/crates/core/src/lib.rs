//! Ambiguity-aware multi-hop question answering over typed knowledge
//! graphs: graph loading, a typed plan algebra, plan synthesis and
//! execution, LLM-backed question generation, and branch-aware scoring.

pub mod canonical;
pub mod eval;
pub mod graph;
pub mod plan;
pub mod par;
pub mod qgen;
pub mod synth;
