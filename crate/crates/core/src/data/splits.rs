use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One training combination: every source except `omitted`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Combo {
    pub id: String,
    pub omitted: String,
    /// Training sources; model selection uses the dev sets of exactly these.
    pub members: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaveOneOutPlan {
    pub source_names: Vec<String>,
    pub combos: Vec<Combo>,
}

impl LeaveOneOutPlan {
    pub fn combo(&self, id: &str) -> Option<&Combo> {
        self.combos.iter().find(|c| c.id == id)
    }
}

pub fn leave_one_out_splits(source_names: &[String]) -> Result<LeaveOneOutPlan> {
    if source_names.len() < 2 {
        return Err(Error::TooFewDomains {
            needed: 2,
            got: source_names.len(),
        });
    }
    let mut seen = HashSet::new();
    for n in source_names {
        if !seen.insert(n) {
            return Err(Error::DuplicateName(n.clone()));
        }
    }
    let combos = source_names
        .iter()
        .map(|omitted| Combo {
            id: format!("wo-{omitted}"),
            omitted: omitted.clone(),
            members: source_names.iter().filter(|n| *n != omitted).cloned().collect(),
        })
        .collect();
    Ok(LeaveOneOutPlan {
        source_names: source_names.to_vec(),
        combos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn two_sources_give_two_singletons() {
        let plan = leave_one_out_splits(&names(&["A", "B"])).unwrap();
        let members: Vec<_> = plan.combos.iter().map(|c| c.members.clone()).collect();
        assert_eq!(members, vec![names(&["B"]), names(&["A"])]);
    }

    #[test]
    fn six_sources_give_six_five_sets() {
        let src = names(&["SQuAD", "NewsQA", "NaturalQuestions", "HotpotQA", "TriviaQA", "SearchQA"]);
        let plan = leave_one_out_splits(&src).unwrap();
        assert_eq!(plan.combos.len(), 6);
        for c in &plan.combos {
            assert_eq!(c.members.len(), 5);
            let mut all: BTreeSet<_> = c.members.iter().cloned().collect();
            assert!(all.insert(c.omitted.clone()));
            assert_eq!(all, src.iter().cloned().collect());
        }
    }

    #[test]
    fn three_sources_match_subset_enumeration() {
        let src = names(&["A", "B", "C"]);
        let plan = leave_one_out_splits(&src).unwrap();
        // oracle: every 2-subset by bitmask enumeration
        let mut expected = BTreeSet::new();
        for mask in 0u32..(1 << src.len()) {
            if mask.count_ones() == 2 {
                let s: BTreeSet<String> = (0..src.len()).filter(|i| mask & (1 << i) != 0).map(|i| src[i].clone()).collect();
                expected.insert(s);
            }
        }
        let got: BTreeSet<BTreeSet<String>> = plan.combos.iter().map(|c| c.members.iter().cloned().collect()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn duplicates_and_singletons_are_rejected() {
        assert!(matches!(leave_one_out_splits(&names(&["A", "A"])), Err(Error::DuplicateName(_))));
        assert!(leave_one_out_splits(&names(&["A"])).is_err());
    }
}
