use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;

static TEXT_WRAPPER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\\(?:text|textbf|mathrm|mbox|operatorname)\{([^{}]*)\}").unwrap());
static FRAC: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\\[dt]?frac\{(-?\d+)\}\{(-?\d+)\}$").unwrap());
static SLASH: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(-?\d+)/(-?\d+)$").unwrap());

/// Strip LaTeX decoration that does not change the value of an answer.
fn unwrap_latex(s: &str) -> String {
    let mut out = s.trim().to_string();
    loop {
        let next = TEXT_WRAPPER.replace_all(&out, "$1").into_owned();
        if next == out {
            break;
        }
        out = next;
    }
    for junk in ["\\left", "\\right", "\\!", "\\,", "\\;", "\\ ", "\\$", "$", "{,}"] {
        out = out.replace(junk, if junk == "{,}" { "," } else { "" });
    }
    out.trim().to_string()
}

/// Numeric value of an answer, when it is one: plain numbers with optional
/// thousands separators, `a/b` and `\frac{a}{b}`.
pub fn parse_number(s: &str) -> Option<f64> {
    let cleaned: String = unwrap_latex(s)
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .collect();
    let cleaned = cleaned.trim_end_matches('.');
    if cleaned.is_empty() {
        return None;
    }
    if let Some(c) = FRAC.captures(cleaned).or_else(|| SLASH.captures(cleaned)) {
        let num: f64 = c[1].parse().ok()?;
        let den: f64 = c[2].parse().ok()?;
        return (den != 0.0).then(|| num / den);
    }
    if !cleaned
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
    {
        return None;
    }
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Lowercase, drop punctuation and whitespace.
pub fn normalize_answer(s: &str) -> String {
    unwrap_latex(s)
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric())
        .collect()
}

fn same_number(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

pub fn exact_match(pred: &str, gold: &str) -> bool {
    if let (Some(a), Some(b)) = (parse_number(pred), parse_number(gold)) {
        return same_number(a, b);
    }
    let p = normalize_answer(pred);
    !p.is_empty() && p == normalize_answer(gold)
}

fn f1_tokens(s: &str) -> Vec<String> {
    s.to_lowercase()
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// Token-level F1 over lowercased, punctuation-free whitespace tokens.
pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = f1_tokens(pred);
    let g = f1_tokens(gold);
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()).filter(|c| **c > 0) {
            *c -= 1;
            common += 1;
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
