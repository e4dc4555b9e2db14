use crate::autograd::{Tape, Var};
use crate::data::Window;
use crate::error::{Error, Result};
use crate::model::ForwardOutput;
use crate::tensor::Real;

use super::cache::TeacherLogitCache;

/// `‖z_s − z_t/τ‖²`. Only the teacher logits are divided by the temperature.
pub fn kd_loss(student: &[f64], teacher: &[f64], tau: f64) -> Result<f64> {
    if student.len() != teacher.len() {
        return Err(Error::LengthMismatch {
            left: student.len(),
            right: teacher.len(),
        });
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {tau}")));
    }
    Ok(student
        .iter()
        .zip(teacher)
        .map(|(s, t)| {
            let d = s - t / tau;
            d * d
        })
        .sum())
}

/// Start plus end [`kd_loss`].
pub fn kd_span_loss(
    student: (&[f64], &[f64]),
    teacher: (&[f64], &[f64]),
    tau: f64,
) -> Result<f64> {
    Ok(kd_loss(student.0, teacher.0, tau)? + kd_loss(student.1, teacher.1, tau)?)
}

/// What a span loss is measured against.
#[derive(Clone, Copy)]
pub enum Objective<'a> {
    /// Mean of start and end cross-entropy on the gold labels.
    Gold,
    /// Summed start/end distillation loss against cached teacher logits.
    Distill { cache: &'a TeacherLogitCache, tau: f64 },
}

/// Per-window span loss on the tape.
pub fn span_loss<T: Real>(tape: &mut Tape<T>, out: &ForwardOutput, window: &Window, objective: Objective) -> Result<Var> {
    let n = window.num_tokens;
    match objective {
        Objective::Gold => {
            let (s, e) = window
                .labels()
                .ok_or_else(|| Error::UnlabeledWindow(window.window_id.clone()))?;
            let ls = tape.cross_entropy(out.start, s, n);
            let le = tape.cross_entropy(out.end, e, n);
            let sum = tape.add(ls, le);
            Ok(tape.scale(sum, 0.5))
        }
        Objective::Distill { cache, tau } => {
            let (ts, te) = cache.get(window)?;
            let target = |v: &[f32]| v.iter().map(|&x| T::from_f64(x as f64 / tau)).collect::<Vec<T>>();
            let ls = tape.squared_error(out.start, target(ts));
            let le = tape.squared_error(out.end, target(te));
            Ok(tape.add(ls, le))
        }
    }
}
