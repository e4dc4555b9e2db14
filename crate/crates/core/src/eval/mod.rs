//! Scoring and the experimental protocol.

mod aggregate;
mod coverage;
mod f1;
mod io;
mod predict;
pub mod report;
mod select;
mod ttest;

pub use aggregate::{aggregate_runs, macro_f1, mean, sample_sd, MeanSd, MethodRunResult, ModelScores};
pub use coverage::{coverage, Coverage, CoverageReport};
pub use f1::{example_f1, normalize_tokens, token_f1};
pub use io::{read_predictions, read_score_dump, write_predictions, write_score_dump, PredictionRecord, ScoreRecord};
pub use predict::{dataset_f1, predict_dataset, score_dataset, score_predictions};
pub use select::{select_by_score_then_lr, select_checkpoint};
pub use ttest::{incomplete_beta, paired_t_test, t_two_tailed_p, TTest};
