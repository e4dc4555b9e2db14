//! Teacher soft targets, computed once and stored per window.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::{self, Reader};
use crate::data::Window;
use crate::error::{Error, Result};
use crate::model::{span_logits, Checkpoint};

const MAGIC: &[u8; 8] = b"DGKDLOGT";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    teacher_id: String,
    tokenizer_id: String,
    count: usize,
}

/// window_id → (start logits, end logits) over the window's non-padding tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct TeacherLogitCache {
    pub teacher_id: String,
    pub tokenizer_id: String,
    entries: BTreeMap<String, (Vec<f32>, Vec<f32>)>,
}

impl TeacherLogitCache {
    pub fn new(teacher_id: impl Into<String>, tokenizer_id: impl Into<String>) -> Self {
        Self {
            teacher_id: teacher_id.into(),
            tokenizer_id: tokenizer_id.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, window_id: &str) -> bool {
        self.entries.contains_key(window_id)
    }

    pub fn insert(&mut self, window_id: impl Into<String>, start: Vec<f32>, end: Vec<f32>) -> Result<()> {
        if start.len() != end.len() {
            return Err(Error::LengthMismatch {
                left: start.len(),
                right: end.len(),
            });
        }
        self.entries.insert(window_id.into(), (start, end));
        Ok(())
    }

    /// Teacher logits for `window`, checked against its token count.
    pub fn get(&self, window: &Window) -> Result<(&[f32], &[f32])> {
        let (s, e) = self
            .entries
            .get(&window.window_id)
            .ok_or_else(|| Error::MissingCacheEntry(window.window_id.clone()))?;
        if s.len() != window.num_tokens {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: window.num_tokens,
            });
        }
        Ok((s, e))
    }

    pub fn extend(&mut self, other: TeacherLogitCache) -> Result<()> {
        if other.tokenizer_id != self.tokenizer_id {
            return Err(Error::TokenizerMismatch {
                expected: self.tokenizer_id.clone(),
                found: other.tokenizer_id,
            });
        }
        self.entries.extend(other.entries);
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            teacher_id: self.teacher_id.clone(),
            tokenizer_id: self.tokenizer_id.clone(),
            count: self.entries.len(),
        };
        let mut payload = Vec::new();
        for (id, (s, e)) in &self.entries {
            payload.extend_from_slice(&(id.len() as u32).to_le_bytes());
            payload.extend_from_slice(id.as_bytes());
            for v in [s, e] {
                payload.extend_from_slice(&(v.len() as u32).to_le_bytes());
                for x in v {
                    payload.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        container::encode(MAGIC, VERSION, &header, &payload)
    }

    /// Returns whether the file changed.
    pub fn save(&self, path: &Path) -> Result<bool> {
        container::write_if_changed(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c = container::read::<Header>(path, MAGIC)?;
        if c.version != VERSION {
            return Err(Error::format(path, format!("unsupported logit cache version {}", c.version)));
        }
        let truncated = || Error::format(path, "truncated logit record");
        let mut r = Reader::new(&c.payload);
        let mut entries = BTreeMap::new();
        for _ in 0..c.header.count {
            let n = r.u32().ok_or_else(truncated)? as usize;
            let id = std::str::from_utf8(r.bytes(n).ok_or_else(truncated)?)
                .map_err(|_| Error::format(path, "window id is not UTF-8"))?
                .to_string();
            let n = r.u32().ok_or_else(truncated)? as usize;
            let s = r.f32s(n).ok_or_else(truncated)?;
            let n = r.u32().ok_or_else(truncated)? as usize;
            let e = r.f32s(n).ok_or_else(truncated)?;
            entries.insert(id, (s, e));
        }
        if !r.is_done() {
            return Err(Error::format(path, "trailing bytes after logit records"));
        }
        Ok(Self {
            teacher_id: c.header.teacher_id,
            tokenizer_id: c.header.tokenizer_id,
            entries,
        })
    }
}

/// Eval-mode teacher logits for every window. Unlabeled (synthetic) windows
/// are fine. `tokenizer_id` is the tokenizer the windows were built with.
pub fn cache_teacher_logits<'a>(
    teacher: &Checkpoint,
    windows: impl IntoIterator<Item = &'a Window>,
    tokenizer_id: &str,
) -> Result<TeacherLogitCache> {
    if teacher.meta.tokenizer_id != tokenizer_id {
        return Err(Error::TokenizerMismatch {
            expected: teacher.meta.tokenizer_id.clone(),
            found: tokenizer_id.to_string(),
        });
    }
    let mut cache = TeacherLogitCache::new(teacher.hash(), tokenizer_id);
    for w in windows {
        let l = span_logits(&teacher.params, w)?;
        let f = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect();
        cache.insert(w.window_id.clone(), f(l.start), f(l.end))?;
    }
    Ok(cache)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CheckpointMeta, ParameterSet, CHECKPOINT_VERSION};
    use crate::trainers::testutil::{tiny_config, tiny_windows};

    fn teacher(tokenizer_id: &str) -> Checkpoint {
        let cfg = tiny_config();
        Checkpoint {
            meta: CheckpointMeta {
                version: CHECKPOINT_VERSION,
                config: cfg.clone(),
                method: "erm".into(),
                epoch: 1,
                seed: 3,
                combo: "all".into(),
                tokenizer_id: tokenizer_id.into(),
                domains: vec![],
            },
            params: ParameterSet::init(&cfg, 0, 3).unwrap(),
        }
    }

    #[test]
    fn one_entry_per_window_including_unlabeled() {
        let mut windows = tiny_windows();
        windows[1].start_label = None;
        windows[1].end_label = None;
        let t = teacher("tok");
        let cache = cache_teacher_logits(&t, &windows, "tok").unwrap();
        assert_eq!(cache.len(), windows.len());
        for w in &windows {
            let (s, e) = cache.get(w).unwrap();
            let l = span_logits(&t.params, w).unwrap();
            assert_eq!(s.len(), w.num_tokens);
            for (a, b) in s.iter().zip(&l.start).chain(e.iter().zip(&l.end)) {
                assert_eq!(*a, *b as f32);
            }
        }
    }

    #[test]
    fn disk_roundtrip_and_idempotent_rebuild() {
        let t = teacher("tok");
        let windows = tiny_windows();
        let cache = cache_teacher_logits(&t, &windows, "tok").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.logits");
        assert!(cache.save(&p).unwrap());
        let again = cache_teacher_logits(&t, &windows, "tok").unwrap();
        assert!(!again.save(&p).unwrap());
        let back = TeacherLogitCache::load(&p).unwrap();
        assert_eq!(back, cache);
        for w in &windows {
            let (s, _) = back.get(w).unwrap();
            let l = span_logits(&t.params, w).unwrap();
            assert!(s.iter().zip(&l.start).all(|(a, b)| (*a as f64 - b).abs() < 1e-6 * b.abs().max(1.0)));
        }
    }

    #[test]
    fn mismatches_are_errors() {
        let t = teacher("tok-a");
        assert!(matches!(
            cache_teacher_logits(&t, &tiny_windows(), "tok-b"),
            Err(Error::TokenizerMismatch { .. })
        ));
        let cache = cache_teacher_logits(&t, &tiny_windows()[..1], "tok-a").unwrap();
        assert!(matches!(cache.get(&tiny_windows()[2]), Err(Error::MissingCacheEntry(_))));
        let mut other = TeacherLogitCache::new("x", "tok-b");
        other.insert("z#0", vec![0.0], vec![0.0]).unwrap();
        let mut c = cache.clone();
        assert!(c.extend(other).is_err());
    }
}
