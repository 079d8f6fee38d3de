//! Deterministic query masking.
//!
//! A query is split on whitespace and `max(1, floor(p * n))` distinct token
//! positions (none when `p == 0`) are replaced by the mask token. Positions
//! come from a generator seeded by `(seed, query id, trial)`.

use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::corpusio::{write_queries_tsv, Query};
use crate::rng::stream;
use crate::{Error, Result};

/// Separator between a query id and its trial index in perturbed ids.
pub const TRIAL_SEPARATOR: &str = "#t";

/// Id of trial `trial` (0-based) of query `query_id`.
pub fn perturbed_id(query_id: &str, trial: usize) -> String {
    format!("{query_id}{TRIAL_SEPARATOR}{trial}")
}

/// Split a perturbed id back into `(query id, trial)`.
pub fn split_perturbed_id(id: &str) -> Option<(&str, usize)> {
    let (qid, trial) = id.rsplit_once(TRIAL_SEPARATOR)?;
    Some((qid, trial.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbConfig {
    pub p: f64,
    pub seed: u64,
    pub trials: usize,
    #[serde(default = "default_mask")]
    pub mask_token: String,
}

fn default_mask() -> String {
    "[MASK]".to_owned()
}

impl PerturbConfig {
    pub fn new(p: f64, seed: u64, trials: usize) -> Result<Self> {
        let cfg = Self {
            p,
            seed,
            trials,
            mask_token: default_mask(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid(format!("mask proportion p={} outside [0, 1]", self.p)));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.mask_token.is_empty() || self.mask_token.contains(char::is_whitespace) {
            return Err(Error::invalid("mask token must be one non-empty word"));
        }
        Ok(())
    }

    /// Number of tokens masked in an `n`-token query.
    pub fn mask_count(&self, n: usize) -> usize {
        if self.p == 0.0 || n == 0 {
            return 0;
        }
        // the epsilon keeps products such as 0.29 * 100 from flooring one short
        let m = (self.p * n as f64 + 1e-9).floor() as usize;
        m.clamp(1, n)
    }
}

/// Mask one query for one trial.
pub fn mask_query(text: &str, cfg: &PerturbConfig, query_id: &str, trial: usize) -> Result<String> {
    cfg.validate()?;
    let mut tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(Error::invalid(format!("query {query_id} has empty text")));
    }
    let m = cfg.mask_count(tokens.len());
    if m > 0 {
        let trial_label = trial.to_string();
        let mut rng = stream(cfg.seed, &["mask", query_id, &trial_label]);
        for pos in index::sample(&mut rng, tokens.len(), m) {
            tokens[pos] = &cfg.mask_token;
        }
    }
    Ok(tokens.join(" "))
}

/// Every query masked `cfg.trials` times, ids suffixed with `#t<trial>`.
/// Output is ordered by query, then trial.
pub fn perturb_queries(queries: &[Query], cfg: &PerturbConfig) -> Result<Vec<Query>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(queries.len() * cfg.trials);
    for q in queries {
        if q.id.contains(TRIAL_SEPARATOR) {
            return Err(Error::invalid(format!(
                "query id {:?} collides with the {TRIAL_SEPARATOR} trial suffix",
                q.id
            )));
        }
        for trial in 0..cfg.trials {
            out.push(Query {
                id: perturbed_id(&q.id, trial),
                text: mask_query(&q.text, cfg, &q.id, trial)?,
            });
        }
    }
    Ok(out)
}

/// [`perturb_queries`] written as a TSV file.
pub fn perturb_file(queries: &[Query], cfg: &PerturbConfig, path: &Path, comments: &[String]) -> Result<Vec<Query>> {
    let out = perturb_queries(queries, cfg)?;
    write_queries_tsv(path, &out, comments)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(p: f64) -> PerturbConfig {
        PerturbConfig::new(p, 42, 3).unwrap()
    }

    #[test]
    fn p_zero_is_identity() {
        let text = "how do  dense retrievers generalise";
        assert_eq!(
            mask_query(text, &cfg(0.0), "q", 0).unwrap(),
            "how do dense retrievers generalise"
        );
    }

    #[test]
    fn half_of_four_tokens() {
        let out = mask_query("a b c d", &cfg(0.5), "q", 0).unwrap();
        assert_eq!(out.split(' ').filter(|t| *t == "[MASK]").count(), 2);
    }

    #[test]
    fn at_least_one_mask_for_positive_p() {
        let out = mask_query("one two three four five", &cfg(0.1), "q", 1).unwrap();
        assert_eq!(out.matches("[MASK]").count(), 1);
    }

    #[test]
    fn deterministic_per_trial() {
        let c = cfg(0.3);
        let text = "the quick brown fox jumps over the lazy dog again";
        assert_eq!(mask_query(text, &c, "q", 2).unwrap(), mask_query(text, &c, "q", 2).unwrap());
    }

    #[test]
    fn empty_text_rejected() {
        assert!(mask_query("   ", &cfg(0.1), "q", 0).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(PerturbConfig::new(1.5, 0, 1).is_err());
        assert!(PerturbConfig::new(0.5, 0, 0).is_err());
    }

    #[test]
    fn file_counts_and_ids() {
        let qs = vec![
            Query { id: "q1".into(), text: "alpha beta".into() },
            Query { id: "q2".into(), text: "gamma".into() },
        ];
        let out = perturb_queries(&qs, &cfg(0.2)).unwrap();
        assert_eq!(out.len(), 6);
        assert_eq!(out[4].id, "q2#t1");
        assert_eq!(split_perturbed_id(&out[4].id), Some(("q2", 1)));
    }

    #[test]
    fn p_zero_single_trial_keeps_texts() {
        let qs = vec![Query { id: "q1".into(), text: "alpha beta".into() }];
        let out = perturb_queries(&qs, &PerturbConfig::new(0.0, 1, 1).unwrap()).unwrap();
        assert_eq!(out[0].text, "alpha beta");
    }

    #[test]
    fn suffix_collision_rejected() {
        let qs = vec![Query { id: "q#t1".into(), text: "x".into() }];
        assert!(perturb_queries(&qs, &cfg(0.1)).is_err());
    }
}
