//! Chains with a failing tool call: (text, index of the failing call among
//! the tool calls).

#![allow(dead_code)]

pub const FIXTURES: [(&str, usize); 20] = [
    ("think line\n<search>q</search><result>r</result><answer>\\boxed{1}</answer>", 0),
    ("<search>q</search><result></result><answer>\\boxed{1}</answer>", 0),
    ("<think>a</think>\n<search>one</search>\n<result>r1</result>\n<think>b</think>\n<search>two</search>\n<result>r2</result>\n<answer>\\boxed{2}</answer>", 1),
    ("<think>a</think>\n<search>one</search>\n<result>r1</result>\n<think>b</think>\n<search>two</search>\n<result>r2</result>\n<answer>\\boxed{2}</answer>", 0),
    ("<think>compute</think><python>print(1/0)</python><result>ZeroDivisionError</result><answer>\\boxed{0}</answer>", 0),
    ("<think>line one\nline two</think><python>x</python><result>NameError</result><answer>\\boxed{0}</answer>", 0),
    ("<think>a</think>\n\n<python>\nimport math\nprint(math.pi)\n</python>\n<result>3.14</result>\n<answer>\\boxed{3.14}</answer>", 0),
    ("<think>first\n</think><search>s</search><result>x</result>\n<think>second</think> <python>y</python><result>e</result><answer>\\boxed{1}</answer>", 1),
    ("free text before\n<think>t</think><search>s</search><result></result><answer>\\boxed{1}</answer>", 0),
    ("<think>t</think>\r\n<search>crlf</search><result>r</result><answer>\\boxed{1}</answer>", 0),
    ("<think>a</think>\n<python>p1</python>\n<result>ok</result>\n<think>b</think>\n<python>p2</python>\n<result>ok</result>\n<think>c</think>\n<python>p3</python>\n<result>err</result>\n<answer>\\boxed{3}</answer>", 2),
    ("<think>a</think>\n<python>p1</python>\n<result>ok</result>\n<think>b</think>\n<python>p2</python>\n<result>err</result>\n<think>c</think>\n<python>p3</python>\n<result>ok</result>\n<answer>\\boxed{3}</answer>", 1),
    ("<think>ünïcödé ✓\n</think><search>é</search><result>r</result><answer>\\boxed{é}</answer>", 0),
    ("<think>no newline anywhere</think><search>q</search><result>r</result><answer>\\boxed{1}</answer>", 0),
    ("<think>x</think>\n<search>a</search><result>r</result><search>b</search><result></result><answer>\\boxed{1}</answer>", 1),
    ("<think>\n\n\n</think><python>code</python><result>SyntaxError</result><answer>\\boxed{1}</answer>", 0),
    ("<think>a</think>\n<search>q</search>\n<result>r</result>\n<think>b\nc</think>\n<python>z</python>\n<result>e</result>\n<answer>\\boxed{1}</answer>", 1),
    ("  \n  <search>indented</search><result>r</result><answer>\\boxed{1}</answer>", 0),
    ("<think>a</think>\n<search>s1</search>\n<result>r</result>\n<search>s2</search>\n<result>r</result>\n<search>s3</search>\n<result>r</result>\n<answer>\\boxed{1}</answer>", 2),
    ("<think>math</think>\n<python>\ndef f(x):\n    return x\nprint(f(2))\n</python>\n<result>Traceback</result>\n<answer>\\boxed{2}</answer>", 0),
];

/// Byte offset of the open literal of the `n`th tool call.
pub fn nth_call_offset(text: &str, n: usize) -> usize {
    let mut found = Vec::new();
    for lit in ["<search>", "<python>"] {
        found.extend(text.match_indices(lit).map(|(i, _)| i));
    }
    found.sort_unstable();
    found[n]
}

/// Walk back from the open literal to the previous newline, byte by byte.
pub fn expected_rewind(text: &str, open: usize) -> usize {
    let bytes = text.as_bytes();
    let mut i = open;
    while i > 0 {
        i -= 1;
        if bytes[i] == b'\n' {
            return i;
        }
    }
    0
}
