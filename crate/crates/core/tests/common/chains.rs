#![allow(dead_code)]

//! Random well-formed reasoning chains and targeted corruptions of them.

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};

use toolstar_core::protocol::{Segment, TagKind, TagSet, ViolationCode};

const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz ABCXYZ0123456789.,;:=+-*/()[]{}_'\"\n\\";
const LEADS: [&str; 4] = ["", "\n", "\n\n", " "];

pub fn random_text(rng: &mut impl RngCore, max: usize) -> String {
    let n = rng.random_range(0..=max);
    (0..n).map(|_| *ALPHABET.choose(rng).unwrap() as char).collect()
}

fn random_bare(rng: &mut impl RngCore) -> String {
    let mut s = random_text(rng, 24);
    if s.trim().is_empty() {
        s.push('x');
    }
    s
}

/// The segments of a valid chain: think, then rounds of (call, result,
/// think), then a boxed answer, with optional free text between tags.
pub fn random_segments(rng: &mut impl RngCore) -> Vec<Segment> {
    let mut plan = vec![Segment::tagged(TagKind::Think, random_text(rng, 60))];
    for _ in 0..rng.random_range(0..5) {
        let call = if rng.random_bool(0.5) {
            TagKind::Search
        } else {
            TagKind::Python
        };
        plan.push(Segment::tagged(call, random_text(rng, 40)));
        plan.push(Segment::tagged(TagKind::Result, random_text(rng, 40)));
        if rng.random_bool(0.7) {
            plan.push(Segment::tagged(TagKind::Think, random_text(rng, 40)));
        }
    }
    let answer = format!(
        "{}\\boxed{{{}}}",
        random_text(rng, 10).replace(['{', '}', '\\'], ""),
        rng.random_range(0..1000)
    );
    plan.push(Segment::tagged(TagKind::Answer, answer));

    let mut out = Vec::with_capacity(plan.len() * 2);
    for seg in plan {
        // free text may precede any tag except a result, which must follow its call
        if seg.kind != TagKind::Result && rng.random_bool(0.2) {
            out.push(Segment::bare(random_bare(rng)));
            out.push(seg);
        } else {
            out.push(seg.with_lead(*LEADS.choose(rng).unwrap()));
        }
    }
    out
}

pub fn render(segments: &[Segment], trailing: &str, tags: &TagSet) -> String {
    let mut s: String = segments.iter().map(|seg| seg.render(tags)).collect();
    s.push_str(trailing);
    s
}

/// A corrupted chain and the violation code the validator must report first.
pub struct Mutant {
    pub text: String,
    pub expected: ViolationCode,
}

/// Corrupt a valid chain in one of three ways: drop a result so its call
/// dangles, cross two adjacent tag pairs, or drop one closing literal.
pub fn mutate(segments: &[Segment], tags: &TagSet, rng: &mut impl RngCore) -> Mutant {
    let results: Vec<usize> = (0..segments.len())
        .filter(|&i| !segments[i].bare && segments[i].kind == TagKind::Result)
        .collect();
    let crossable: Vec<usize> = (0..segments.len() - 1)
        .filter(|&i| {
            let (a, b) = (&segments[i], &segments[i + 1]);
            !a.bare && !b.bare && a.kind != b.kind
        })
        .collect();
    let choice = rng.random_range(0..3);
    if choice == 0 && !results.is_empty() {
        let drop = *results.choose(rng).unwrap();
        let kept: Vec<Segment> = segments
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != drop)
            .map(|(_, s)| s.clone())
            .collect();
        return Mutant {
            text: render(&kept, "", tags),
            expected: ViolationCode::DanglingToolCall,
        };
    }
    if choice == 1 && !crossable.is_empty() {
        let i = *crossable.choose(rng).unwrap();
        let (a, b) = (&segments[i], &segments[i + 1]);
        let mut text = render(&segments[..i], "", tags);
        text.push_str(&a.lead);
        text.push_str(tags.open(a.kind));
        text.push_str(&a.text);
        text.push_str(&b.lead);
        text.push_str(tags.open(b.kind));
        text.push_str(&b.text);
        text.push_str(tags.close(a.kind));
        text.push_str(tags.close(b.kind));
        text.push_str(&render(&segments[i + 2..], "", tags));
        return Mutant {
            text,
            expected: ViolationCode::TagOrderViolation,
        };
    }
    let tagged: Vec<usize> = (0..segments.len()).filter(|&i| !segments[i].bare).collect();
    let i = *tagged.choose(rng).unwrap();
    let seg = &segments[i];
    let mut text = render(&segments[..i], "", tags);
    text.push_str(&seg.lead);
    text.push_str(tags.open(seg.kind));
    text.push_str(&seg.text);
    text.push_str(&render(&segments[i + 1..], "", tags));
    Mutant {
        text,
        expected: ViolationCode::UnbalancedTag,
    }
}
