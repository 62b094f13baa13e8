//! Default prompt strings. All of them can be overridden from the engine
//! config file.

/// System instruction for tool-integrated reasoning with search and Python.
pub const TOOL_INSTRUCTION: &str = "You are a helpful assistant that can solve the given question step by step with the help of the wikipedia search tool and python interpreter tool. \
Given a question, you need to first think about the reasoning process in the mind and then provide the answer. \
During thinking, you can invoke the wikipedia search tool to search and python interpreter tool to calculate the math problem for fact information about specific topics if needed. \
The reasoning process and answer are enclosed within <think> </think> and <answer> </answer> tags respectively, \
and the search query and result are enclosed within <search> </search> and <result> </result> tags respectively. \
After receiving the search or python result, you should continue your reasoning process begin with <think>. \
For example, <think> This is the reasoning process. </think> <search> search query here </search> <result> search result here </result> \
<think> This is the reasoning process. </think> <python> python code here </python> <result> python interpreter result here </result> \
<think> This is the reasoning process. </think> <answer> The final answer is \\[ \\boxed{answer\\ here} \\] </answer>. \
In the last part of the answer, the final exact answer is enclosed within \\boxed{} with latex format.";

/// System instruction for tool-integrated reasoning with Python only.
pub const PYTHON_INSTRUCTION: &str = "You are a helpful assistant that can solve the given question step by step with the help of the python interpreter tool. \
Given a question, you need to first think about the reasoning process in the mind and then provide the answer. \
During thinking, you can invoke the python interpreter tool to calculate the math problem for fact information about specific topics if needed. \
The reasoning process and answer are enclosed within <think> </think> and <answer> </answer> tags respectively. \
For example, <think> This is the reasoning process. </think> <python> python code here </python> <result> python interpreter result here </result> \
<think> This is the reasoning process. </think> <answer> The final answer is \\[ \\boxed{answer\\ here} \\] </answer>. \
In the last part of the answer, the final exact answer is enclosed within \\boxed{} with latex format.";

/// Language-only sampling for computational questions. `{question}` is
/// substituted.
pub const DIRECT_MATH_INSTRUCTION: &str = "A conversation between User and Assistant. The user asks a question, and the Assistant solves it. \
Please integrate natural language reasoning with programs to solve the problem above, and put your final answer within \\boxed{}.\n{question}";

/// Language-only sampling for knowledge-intensive questions. `{question}`
/// and `{reference}` are substituted.
pub const DIRECT_QA_INSTRUCTION: &str = "A conversation between User and Assistant. The user asks a question, and the Assistant solves it. \
Please refer to the given document to solve the problem above, and put your final answer within \\boxed{}.\nQuestion: {question}\nReference documents: {reference}";

/// `{code}` and `{error}` are substituted.
pub const DEBUGGER_PROMPT: &str = "You are a code expert. I need you to debug the following code. Below are the code originally generated by the model and the error information that occurred during code execution. Please output ONLY the corrected Python code, without any explanation or markdown formatting:\n\n**Inputs:**\n\n**Original Code:**\n{code}\n\n**Execution Error:**\n{error}\n\nOutput the corrected Python code only, without any explanation or markdown formatting:";

/// `{prompt}` and `{response}` are substituted.
pub const REFINER_PROMPT: &str = "You are an expert in response refinement. Given a prompt and its corresponding response, your task is to compress and restructure the response by removing redundant, repetitive, or irrelevant content. Preserve all key information needed to directly and accurately address the original prompt. Only output your revised response and do not output anything else.\n**Original Prompt:**\n{prompt}\n**Original Response:**\n{response}\n**Revised Response:**";

/// Answer-equivalence check. `{pred}` and `{gold}` are substituted.
pub const JUDGE_PROMPT: &str = "Decide whether the predicted answer is equivalent to the reference answer. Ignore formatting differences such as units written out, LaTeX markup or equivalent numeric forms.\n\nReference answer: {gold}\nPredicted answer: {pred}\n\nReply with a single word: yes or no.";

pub const VERIFICATION_HINT: &str = "Let me verify this step using a tool.";
pub const REFLECTION_HINT: &str = "Let me double-check the answer with a tool.";

/// Replace each `{name}` placeholder with its value.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_substitutes_every_placeholder() {
        let p = fill(
            DEBUGGER_PROMPT,
            &[("code", "print(1/0)"), ("error", "ZeroDivisionError")],
        );
        assert!(p.contains("**Original Code:**\nprint(1/0)\n"));
        assert!(p.contains("**Execution Error:**\nZeroDivisionError\n"));
        assert!(!p.contains("{code}"));
    }

    #[test]
    fn tool_instruction_mentions_every_tag() {
        for tag in ["<think>", "<search>", "<python>", "<result>", "<answer>"] {
            assert!(TOOL_INSTRUCTION.contains(tag));
        }
        assert!(TOOL_INSTRUCTION.contains("\\boxed{}"));
    }
}
