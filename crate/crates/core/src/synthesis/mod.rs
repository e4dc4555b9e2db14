//! Synthetic question generation for augmented distillation.

mod generator;
mod sampler;

pub use generator::{
    fit_generator, generate_questions, provenance_path, unique_passages, GeneratorConfig, Provenance,
    QuestionGenerator, SyntheticQuestionSet, TemplateGenerator,
};
pub use sampler::{filter_top_k_top_p, sample_top_k_top_p};
