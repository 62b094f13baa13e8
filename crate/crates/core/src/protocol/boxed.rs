const BOXED: &str = "\\boxed{";

/// Content of the last top-level `\boxed{...}` in `text`, found by counting
/// raw braces. An unterminated box is ignored in favour of an earlier
/// complete one.
pub fn extract_boxed(text: &str) -> Option<String> {
    let mut last = None;
    let mut from = 0;
    while let Some(pos) = text[from..].find(BOXED) {
        let body_start = from + pos + BOXED.len();
        match matching_brace(&text[body_start..]) {
            Some(len) => {
                last = Some(&text[body_start..body_start + len]);
                from = body_start + len + 1;
            }
            None => from = body_start,
        }
    }
    last.map(str::to_string)
}

/// Byte length of the brace-balanced body that precedes the closing `}`.
fn matching_brace(body: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, b) in body.bytes().enumerate() {
        match b {
            b'{' => depth += 1,
            b'}' if depth == 0 => return Some(i),
            b'}' => depth -= 1,
            _ => {}
        }
    }
    None
}
