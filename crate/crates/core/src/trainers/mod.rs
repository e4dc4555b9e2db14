//! Training procedures: ERM, distillation, domain-adversarial, episodic and
//! MLDG training, and their combinations.

mod adversarial;
mod cache;
mod config;
mod episodic;
mod losses;
pub mod mldg;
mod optim;
mod run;
mod step;
#[cfg(test)]
mod testutil;

pub use adversarial::{adversarial_step, AdversarialStep};
pub use cache::{cache_teacher_logits, TeacherLogitCache};
pub use config::{Method, OptimizerConfig, TrainConfig};
pub use episodic::{episodic_step, sample_episode, CompanionBank, EpisodicStep};
pub use losses::{kd_loss, kd_span_loss, span_loss, Objective};
pub use mldg::{meta_gradient, meta_objective_value, mldg_step, MetaGradient, MetaObjective, MetaPart, MldgStep, ScalarProbe};
pub use optim::{lr_factor, Optimizer};
pub use run::{
    train, train_companions, train_domain_adversarial, train_episodic, train_erm, train_kd, train_kd_augmented,
    train_kd_with_dil, train_mldg, write_log, Resources, StepRecord, TrainInputs, TrainOutcome,
};
pub use step::{batch_span_grads, mix};
