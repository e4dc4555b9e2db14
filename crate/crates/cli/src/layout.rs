//! Where every artifact lives under the output directory.
//!
//! ```text
//! tokenizer.json
//! plan.json                         leave-one-out plan
//! combos/<combo>.json               one manifest per combination
//! windows/<split>/<dataset>.bin     window caches (train, dev, test, synthetic)
//! synthetic/<domain>.jsonl          generated questions (+ provenance sidecar)
//! teachers/<combo>.ckpt
//! companions/<domain>.ckpt
//! logits/<combo>.bin                teacher logits on train + synthetic windows
//! runs/<method>/<combo>/p<point>-s<seed>/{checkpoint.ckpt,log.jsonl,result.json}
//! sweeps/<method>.{json,md}         selected grid point per combo
//! eval/<method>/<combo>-s<seed>.{preds.json,scores.jsonl,dev.json}
//! reports/{report.md,coverage.csv}
//! ```

use std::path::PathBuf;

use dgkd_core::data::Split;
use dgkd_core::trainers::Method;

#[derive(Clone, Debug)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn tokenizer(&self) -> PathBuf {
        self.root.join("tokenizer.json")
    }

    pub fn plan(&self) -> PathBuf {
        self.root.join("plan.json")
    }

    pub fn combo(&self, combo: &str) -> PathBuf {
        self.root.join("combos").join(format!("{combo}.json"))
    }

    pub fn windows(&self, split: Split, dataset: &str) -> PathBuf {
        self.root.join("windows").join(split.as_str()).join(format!("{dataset}.bin"))
    }

    pub fn synthetic(&self, domain: &str) -> PathBuf {
        self.root.join("synthetic").join(format!("{domain}.jsonl"))
    }

    pub fn teacher(&self, combo: &str) -> PathBuf {
        self.root.join("teachers").join(format!("{combo}.ckpt"))
    }

    pub fn companion(&self, domain: &str) -> PathBuf {
        self.root.join("companions").join(format!("{domain}.ckpt"))
    }

    pub fn logits(&self, combo: &str) -> PathBuf {
        self.root.join("logits").join(format!("{combo}.bin"))
    }

    pub fn run_dir(&self, method: Method, combo: &str, point: usize, seed: u64) -> PathBuf {
        self.root
            .join("runs")
            .join(method.as_str())
            .join(combo)
            .join(format!("p{point}-s{seed}"))
    }

    pub fn sweep(&self, method: Method) -> PathBuf {
        self.root.join("sweeps").join(format!("{}.json", method.as_str()))
    }

    pub fn sweep_table(&self, method: Method) -> PathBuf {
        self.root.join("sweeps").join(format!("{}.md", method.as_str()))
    }

    fn eval_file(&self, method: Method, combo: &str, seed: u64, ext: &str) -> PathBuf {
        self.root.join("eval").join(method.as_str()).join(format!("{combo}-s{seed}.{ext}"))
    }

    pub fn predictions(&self, method: Method, combo: &str, seed: u64) -> PathBuf {
        self.eval_file(method, combo, seed, "preds.json")
    }

    pub fn scores(&self, method: Method, combo: &str, seed: u64) -> PathBuf {
        self.eval_file(method, combo, seed, "scores.jsonl")
    }

    pub fn dev_score(&self, method: Method, combo: &str, seed: u64) -> PathBuf {
        self.eval_file(method, combo, seed, "dev.json")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("reports").join("report.md")
    }

    pub fn coverage(&self) -> PathBuf {
        self.root.join("reports").join("coverage.csv")
    }
}
