use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::prompts::{REFLECTION_HINT, VERIFICATION_HINT};
use crate::protocol::extract_boxed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HintConfig {
    pub uncertainty_markers: Vec<String>,
    pub verification_hint_template: String,
    pub reflection_hint_template: String,
    pub seed: u64,
    pub modes: Vec<HintMode>,
}

impl Default for HintConfig {
    fn default() -> Self {
        Self {
            uncertainty_markers: vec!["maybe".into(), "wait".into(), "not sure".into()],
            verification_hint_template: VERIFICATION_HINT.to_string(),
            reflection_hint_template: REFLECTION_HINT.to_string(),
            seed: 0,
            modes: vec![HintMode::LogicalVerification, HintMode::AnswerReflection],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HintMode {
    /// Replace an uncertainty marker and cut the trace there.
    LogicalVerification,
    /// Append a hint after the answer.
    AnswerReflection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintedPrefix {
    pub prefix: String,
    /// Character offset where the hint ends, which is the end of `prefix`.
    pub t_h: usize,
}

fn marker_regex(markers: &[String]) -> Option<Regex> {
    let alts: Vec<String> = markers
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| regex::escape(m))
        .collect();
    if alts.is_empty() {
        return None;
    }
    Regex::new(&format!(r"(?i)\b(?:{})\b", alts.join("|"))).ok()
}

/// Build the prefix a tool-integrated continuation starts from.
pub fn insert_hint(chain_text: &str, hcfg: &HintConfig, mode: HintMode) -> Result<HintedPrefix, SynthesisError> {
    let prefix = match mode {
        HintMode::LogicalVerification => {
            let re = marker_regex(&hcfg.uncertainty_markers).ok_or(SynthesisError::NoSite)?;
            let sites: Vec<usize> = re.find_iter(chain_text).map(|m| m.start()).collect();
            if sites.is_empty() {
                return Err(SynthesisError::NoSite);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(hcfg.seed);
            let at = sites[rng.random_range(0..sites.len())];
            format!("{}{}", &chain_text[..at], hcfg.verification_hint_template)
        }
        HintMode::AnswerReflection => {
            if extract_boxed(chain_text).is_none() {
                return Err(SynthesisError::NoSite);
            }
            format!("{}\n{}", chain_text.trim_end(), hcfg.reflection_hint_template)
        }
    };
    Ok(HintedPrefix {
        t_h: prefix.chars().count(),
        prefix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marker_inside_a_word_is_not_a_site() {
        let r = insert_hint(
            "we await the result",
            &HintConfig::default(),
            HintMode::LogicalVerification,
        );
        assert!(matches!(r, Err(SynthesisError::NoSite)));
    }

    #[test]
    fn seed_chooses_among_sites() {
        let text = "maybe a. maybe b. maybe c. maybe d.";
        let picks: std::collections::BTreeSet<String> = (0..32)
            .map(|seed| {
                let h = HintConfig {
                    seed,
                    ..Default::default()
                };
                insert_hint(text, &h, HintMode::LogicalVerification).unwrap().prefix
            })
            .collect();
        assert!(picks.len() > 1);
    }
}
