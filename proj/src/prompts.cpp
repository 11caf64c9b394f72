#include "dre/prompts.hpp"

#include <sstream>

namespace dre::prompts {

namespace {

std::string replace_all(std::string text, const std::string& needle, const std::string& value) {
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

}  // namespace

std::string persona_generation(const std::string& domain, int n) {
    std::string t = R"PROMPT(You are a persona generator. For the domain "{{domain}}", generate {{n}} distinct personas.

Requirements:
1. Personas can be ordinary individuals (e.g., students, hobbyists, employees, community members) or domain experts.
2. Each persona must include a clear background: education, career path, interests, or life experience (100-150 words).
3. Each persona should have specific interests or responsibilities related to the domain.

Example subdomains:
Domain: Software Development
Subdomain: Artificial Intelligence/Machine Learning Development & Tools

Domain: Science & Technology
Subdomain: Large Language Models
Subdomain: Artificial Intelligence & Machine Learning

Domain: Sports & Fitness
Subdomain: Professional Sports (Football, Basketball, etc.)

Strictly output the following JSON only, with no extra text:
{
  "domain": "{{domain}}",
  "personas": [
    {
      "name": "First persona name",
      "role": "Role or identity (e.g., university student, software engineer, policy advisor)",
      "affiliation": "Affiliation/Organization/Community (if applicable)",
      "background": "Detailed background, including education, work/interest history, and relevant experience (100-150 words)",
      "subdomain": "subdomain within the domain"
    },
    {
      "name": "Second persona name",
      "role": "Role or identity",
      "affiliation": "Affiliation/Organization/Community (if applicable)",
      "background": "Detailed background (100-150 words)",
      "subdomain": "subdomain within the domain"
    },
    ...
  ]
}
)PROMPT";
    t = replace_all(t, "{{domain}}", domain);
    t = replace_all(t, "{{n}}", std::to_string(n));
    return t;
}

std::string task_generation(const json& persona, int m) {
    std::string t = R"PROMPT(You are a deep research query designer. Based on the persona profile below, generate {{m}} realistic deep research queries that the persona would like to ask, which MUST rely on deep web search, reasoning, and information synthesis to complete.

Persona information:
- Name: {{persona_name}}
- Role: {{persona_role}}
- Affiliation: {{persona_affiliation}}
- Background: {{persona_background}}
- Subdomain: {{subdomain}}

Query requirements:
1. Each query must require multiple rounds of web search (at least 2 rounds from different perspectives).
2. Each query must integrate information from multiple credible sources (e.g., academic papers, industry reports, news articles, policy documents, statistics, online forums).
3. Cover latest developments, data analysis, trend assessment, comparisons, or case studies, aligned with the persona's role and domain interest.
4. Complexity should be proportional to the persona's profile:
   - For experts: advanced analytical or strategic-level queries.
   - For non-experts: practical, decision-making, or problem-solving queries with substantial information gathering.
5. Each query must be concrete, specific, and have clear deliverables.
6. Queries must reflect the persona's realistic needs and challenges.
7. Length: 10-50 words per query.
8. It would be better if query is **tied to a current or emerging hot topic** (e.g., stablecoin regulations in May 2025, AI safety debates, semiconductor export bans) that requires synthesis of conflicting perspectives and time-sensitive evidence.
9. Encourage queries that involve **controversial viewpoints, cross-country comparisons, or forward-looking predictions** (e.g., market impacts, regulatory outcomes, adoption scenarios).

Example queries:
1. My son is about to start his university applications in 2025 for postgraduates but he's still uncertain about both his major and which universities to apply to. Could you help me find the top five universities in each of the five broad subjects from the QS World University Rankings by Subject 2025, and also check their standings in the QS World University Rankings 2025 and the Times Higher Education World University Rankings 2025? And I need the home page of the university's official website, standard application deadline for regular decision as well as the application fee without the fee waiver.
2. Please provide a detailed explanation of the differences and connections between Google's recently released A2A protocol and the MCP protocol. Furthermore, elaborate on the innovative aspects of the A2A protocol and the specific problems it is designed to address.
3. What are the investment philosophies of Duan Yongping, Warren Buffett, and Charlie Munger?
4. How did discussions on stablecoin regulations evolve across US, EU, and Asia in May 2025, and what are the projected implications for financial stability and crypto adoption by 2026?

Strictly output the following JSON only, with no extra text:
{
  "persona_name": "persona_name",
  "tasks": [
    {
      "task_id": "task_1",
      "deep_research_query": "Deep research query (10-50 words)",
      "key_challenges": "Main challenges and why deep search is required",
      "expected_search_rounds": 4,
      "time_sensitivity": true,
      "time_constraint": "Explicit time constraint description"
    },
    {
      "task_id": "task_2",
      "deep_research_query": "Deep research query (10-50 words)",
      "key_challenges": "Main challenges",
      "expected_search_rounds": 3,
      "time_sensitivity": false,
      "time_constraint": null
    },
    ...
  ]
}
)PROMPT";
    t = replace_all(t, "{{m}}", std::to_string(m));
    t = replace_all(t, "{{persona_name}}", persona.value("name", ""));
    t = replace_all(t, "{{persona_role}}", persona.value("role", ""));
    t = replace_all(t, "{{persona_affiliation}}", persona.value("affiliation", ""));
    t = replace_all(t, "{{persona_background}}", persona.value("background", ""));
    t = replace_all(t, "{{subdomain}}", persona.value("subdomain", ""));
    return t;
}

std::string task_qualification(const std::string& query, const std::string& persona_background,
                               const std::string& key_challenges) {
    std::string t = R"PROMPT(You are a deep research query analysis expert. Evaluate whether the following task truly requires deep web search and information synthesis to complete.

Query: {{deep_research_query}}
Persona background: {{persona_background}}
Query challenges: {{key_challenges}}

Evaluation criteria:
1. Requires up-to-date information that cannot be accurately answered using pre-2023 knowledge alone.
2. Requires cross-verification and integration of multiple credible sources (e.g., academic papers, news, industry reports, policy documents, statistics).
3. Requires multi-angle, multi-layered deep investigation.
4. Complexity matches the persona's role and capabilities:
   - For experts: advanced analytical or strategic-level complexity.
   - For non-experts: realistic but still substantial research complexity beyond casual searching.

Strictly output the following JSON only, with no extra text:
{
  "needs_deep_research": (true/false),
  "confidence_score": (0~1),
  "reasoning": "Detailed rationale explaining why deep search is needed and what information collection and synthesis are required (100-150 words)",
  "search_complexity": ("High"/"Medium"/"Low"),
  "information_sources_needed": ["academic papers", "news", "technical reports", "market data", "policy documents"],
  "latest_info_required": (true/false),
  "cross_domain_integration": (true/false)
}
)PROMPT";
    t = replace_all(t, "{{deep_research_query}}", query);
    t = replace_all(t, "{{persona_background}}", persona_background);
    t = replace_all(t, "{{key_challenges}}", key_challenges);
    return t;
}

std::string baseline_answer(const std::string& query, const std::string& persona_background) {
    std::string t = R"PROMPT(Based solely on your existing knowledge, without using any external search tools, answer the following query. Provide the best answer you can.

Persona background: {{persona_background}}

Query: {{deep_research_query}}

Requirements:
1. Provide as detailed and complete an answer as you can, considering the persona's role, knowledge scope, and domain interest.
2. If some information is uncertain or may be outdated, clearly state this.
3. Do not fabricate specific data, dates, or facts you are not confident about.
4. Ensure logical structure and clear organization.
5. Demonstrate appropriate depth of understanding for the persona's role:
   - For experts: in-depth analysis with technical or strategic insights.
   - For non-experts: practical, clear, and well-explained reasoning.
6. If the query involves recent developments, acknowledge any knowledge cutoff limitations.

Please provide your best possible answer:
)PROMPT";
    t = replace_all(t, "{{persona_background}}", persona_background);
    t = replace_all(t, "{{deep_research_query}}", query);
    return t;
}

std::string baseline_assessment(const std::string& query, const std::string& key_challenges,
                                const std::string& persona_background,
                                const std::string& baseline_answer) {
    std::string t = R"PROMPT(You are an answer quality evaluator for deep research queries. Assess the quality and completeness of the following answer for the given query.

Original query: {{deep_research_query}}
Query challenges: {{key_challenges}}
Persona background: {{persona_background}}
No-search answer: {{baseline_answer}}

Evaluation dimensions:
1. Accuracy: Are statements reliable and free of obvious errors?
2. Completeness: Does it cover the core requirements and key aspects of the query?
3. Depth: Is the analysis sufficiently deep and appropriate for the persona's role?
4. Timeliness: Could information be outdated? Does it acknowledge time limitations?
5. Professionalism: Does it meet the expected standards for the persona's role and demonstrate relevant insight?
6. Structure: Is the answer well-organized and logical?

Special focus:
- If the task involves time requirements such as "latest", "recent", or "current", assess whether the answer meets them.
- If the task requires multi-source synthesis, assess whether a single knowledge source is sufficient.
- Assess whether additional search is truly necessary to provide a better answer, based on the persona's role and context.

Strictly output the following JSON only, with no extra text:
{
  "overall_quality": "low",
  "quality_score": 0.3,
  "completeness_score": 0.4,
  "accuracy_score": 0.7,
  "depth_score": 0.2,
  "timeliness_score": 0.1,
  "accuracy_concerns": "Specific accuracy concerns or issues",
  "missing_aspects": "Important aspects and information that are missing",
  "outdated_info": "Potentially outdated content",
  "requires_search": true,
  "search_necessity_reasoning": "Detailed reasoning for why search is needed and what key information is missing (150-200 words)"
}
)PROMPT";
    t = replace_all(t, "{{deep_research_query}}", query);
    t = replace_all(t, "{{key_challenges}}", key_challenges);
    t = replace_all(t, "{{persona_background}}", persona_background);
    t = replace_all(t, "{{baseline_answer}}", baseline_answer);
    return t;
}

std::string dimension_generation(const std::string& task_prompt) {
    std::string t = R"PROMPT(You are an expert evaluator who designs **query-specific meta-evaluation dimensions** for deep research reports. Your goal is to identify unique quality aspects that matter for a given task, beyond the four standard meta-dimensions.

**Standard Meta-Dimensions** (already covered):
1. **Coverage**: Breadth, depth, and relevance of coverage
2. **Insight**: Depth, originality, logic, and value of analysis
3. **Instruction Following**: Accuracy in meeting all requirements
4. **Clarity**: Clarity, fluency, structure, and ease of understanding

**Your Task**: For the research task below, generate **1-3 additional same-level meta-evaluation dimensions** that are:
- Highly specific to this query
- Distinct from the four standard meta-dimensions
- Crucial for assessing quality in this domain
- Actionable and measurable
- Serve as **upper-level meta-dimensions** that can be further expanded into more detailed evaluation standards
- Do NOT include any factuality-related meta-dimensions, since factual accuracy is handled by a separate evaluation system

<research_task>
"{task_prompt}"
</research_task>

**Guidelines**:
1. Analyze the task carefully to understand its domain, methodology, data needs, and unique challenges.
2. Identify domain-specific quality factors (e.g., for finance: market timing; for science: experimental validity; for policy: stakeholder impact).
3. Create meta-dimensions that are:
   - Unique to this query type (not generic)
   - Non-overlapping with the four standard meta-dimensions
   - Focused on specialized aspects relevant to this domain
4. For each meta-dimension, provide:
   - **Name** (1-3 words)
   - **Definition** (short explanation of what it measures and why it matters)

**Output Format**:
Return only a JSON list of meta-dimensions, e.g.:

<json_output>
[
  {
    "meta_dimension_name": "Xxx",
    "definition": "Clear, concise explanation"
  },
  ...
]
</json_output>
)PROMPT";
    return replace_all(t, "{task_prompt}", task_prompt);
}

std::string weight_assignment(const std::string& task_prompt, const json& additional_dimensions) {
    std::string t = R"PROMPT(You are a senior research evaluation expert. Your job is to (1) consider both the four fixed meta-dimensions and the provided query-specific meta-dimensions (each with a name and definition), and (2) assign **dynamic, well-justified weights** to all dimensions so that the total equals **1.0**.

There is a deep research task as follows:
<task>
"{task_prompt}"
</task>

**Fixed Meta-Dimensions (always included):**
[
  {
    "meta_dimension_name": "Coverage",
    "definition": "Breadth, depth, and relevance of coverage."
  },
  {
    "meta_dimension_name": "Insight",
    "definition": "Depth, originality, logic, and value of analysis."
  },
  {
    "meta_dimension_name": "Instruction Following",
    "definition": "Accuracy in meeting all requirements and constraints."
  },
  {
    "meta_dimension_name": "Clarity",
    "definition": "Readability, fluency, structure, and ease of understanding."
  }
]

**Provided Query-Specific Meta-Dimensions (each includes name + definition)**
<additional_meta_dimensions_json>
{additional_dimensions_json}
</additional_meta_dimensions_json>

**Your Goals**
1. **Task-grounded analysis**: Carefully analyze the <task> to identify goals, constraints, risks, and success criteria.
2. **Dynamic weighting**: Assign a weight (0-1) to **each** dimension (fixed + provided).
   - The **sum across all dimensions must be exactly 1.0**.
   - Weights should reflect the **unique characteristics** of the <task> (do not use fixed presets).
3. **Specific justification**: In <analysis>, explicitly justify **each** weight by referencing the <task> and, for the provided meta-dimensions, their **definitions**. Avoid generic statements.

**Constraints & Notes**
- Do **not** introduce new dimensions. Only use the fixed four plus the provided query-specific ones.
- Do **not** include any factuality-related dimensions (factuality is evaluated elsewhere).
- Avoid overlap: if a provided dimension substantially overlaps with a fixed one, explain how you differentiate it in scope and why its weight is still necessary.
- If no additional dimensions are provided (empty list), distribute weights among the four fixed dimensions only.

**Output Format (STRICT)**
First produce a concise yet concrete <analysis> that:
- Explains the task-grounded reasoning behind the overall weighting strategy.
- Gives a 1-3 sentence justification **for each dimension** tying the weight to the task and (for provided ones) their definitions.

Then produce <json_output> containing only the final weights, with keys exactly matching the dimension names:
- Fixed keys (always present): "coverage", "insight", "instruction_following", "clarity"
- For each provided meta-dimension, use its exact "meta_dimension_name" as the key.

Example shape:
<analysis>
(Your reasoning here. One short paragraph about overall trade-offs, then bullet points or short lines justifying each dimension's weight.)
</analysis>

<json_output>
{
  "coverage": 0.xx,
  "insight": 0.xx,
  "instruction_following": 0.xx,
  "clarity": 0.xx,
  "additional_dimension": 0.xx
}
</json_output>

**Validation**
- Ensure all weights are in [0, 1].
- Ensure the sum across all keys equals **1.00** (allowing up to +/-0.001 rounding; otherwise adjust and state the adjustment briefly in <analysis>).
- Do not output anything other than <analysis> and <json_output>.
)PROMPT";
    t = replace_all(t, "{task_prompt}", task_prompt);
    t = replace_all(t, "{additional_dimensions_json}", additional_dimensions.dump(2));
    return t;
}

std::string criteria_generation(const std::string& task_prompt, int num_dimensions,
                                const json& all_dimensions, const std::string& dimension_name) {
    std::string t = R"PROMPT(You are an expert evaluator of research reports. Your job is to break down a meta-evaluation dimension into clear, specific, task-relevant criteria with explanations and weights.

We evaluate a research report written for the task below across {num_dimensions} meta evaluation dimensions:
{meta_dimensions}

<task>
"{task_prompt}"
</task>

<instruction>
Your goal: For the **{dimension_name}** dimension, generate task-specific evaluation criteria.

Steps:
1. **Analyze Task**: Identify the essential areas and coverage needed to satisfy "{dimension_name}".
2. **Formulate Criteria**: Write diverse, non-overlapping criteria items.
3. **Explain Rationale**: Provide a short explanation (`explanation`) for each criterion.
4. **Assign Weights**: Give each criterion a weight (`weight`) so that the total = **1.0**. Adjust the last item if needed.
5. **Focus**: Stay strictly within "{dimension_name}", avoiding overlap with the other dimensions.

Output format:
1. First, provide `<analysis>` explaining your reasoning and weight allocation.
2. Then output `<json_output>` as a list of criteria in the format:

<json_output>
[
  {
    "criterion": "...",
    "explanation": "...",
    "weight": ...
  },
  ...
]
</json_output>

Now begin for the task above and dimension = **{dimension_name}**.
</instruction>
)PROMPT";
    t = replace_all(t, "{num_dimensions}", std::to_string(num_dimensions));
    t = replace_all(t, "{meta_dimensions}", all_dimensions.dump(2));
    t = replace_all(t, "{task_prompt}", task_prompt);
    t = replace_all(t, "{dimension_name}", dimension_name);
    return t;
}

std::string dimension_scoring(const std::string& task_prompt, const std::string& report,
                              const json& criteria_of_one_dimension) {
    std::string t = R"PROMPT(You are a strict, meticulous, and objective evaluator of deep research reports.
You score the report on a **single evaluation dimension** at a time.
You must evaluate strictly according to the provided **criteria under that dimension**.
Do **not** evaluate factual accuracy (handled by a separate system).

**Task**
<task>
{task_prompt}
</task>

**Report to Evaluate**
<Report>
{report}
</Report>

**Evaluation Dimension and Criteria**
Below is the dimension to evaluate. It contains multiple criteria, each with a short explanation.
<criteria_of_one_dimension_json>
{criteria_of_one_dimension_json}
</criteria_of_one_dimension_json>

**Scoring Rules**
- For **each criterion**, assign a **continuous score from 0 to 10** (real number), and provide a concise justification (`analysis`) grounded in the report content.
- **Revised Scale (more discriminative):**
  - **0-2 (Very Poor):** Severe deficiencies; almost entirely fails the criterion.
  - **2-4 (Poor):** Major gaps or flaws; only marginally addresses the criterion.
  - **4-6 (Fair):** Covers the basics but shallow, inconsistent, or with notable weaknesses.
  - **6-7.5 (Good):** Solid attempt; generally clear and adequate, but lacks depth or polish.
  - **7.5-9 (Very Good):** Strong and well-executed with only minor issues; above average.
  - **9-10 (Excellent):** Outstanding; fully satisfies and exceeds expectations in depth, clarity, and execution. Reserved for exceptional cases.
- Scores should reflect only the current criterion, avoiding overlap with other dimensions.
- **Do not** judge factual correctness; only judge coverage, reasoning quality, clarity, structure, domain-appropriateness, etc.
- Be conservative: most typical reports should fall in the **4-8 range**. Scores above 9 should be rare.

**Output Format (STRICT)**
Output `<json_output>` as a list of criteria in a valid JSON object format:

<json_output>
[
    {
        "criterion": "text of the criterion",
        "analysis": "your justification",
        "report_score_0_to_10": x.xx
    },
    {
        "criterion": "text of the criterion",
        "analysis": "your justification",
        "report_score_0_to_10": x.xx
    },
    ...
]
</json_output>

**Validation**
- Use the exact criterion names as keys in the JSON.
- Each score must be a real number in [0,10], rounded to two decimals.
- Ensure the JSON is strictly valid and parseable (no trailing commas, properly escaped characters).
)PROMPT";
    t = replace_all(t, "{task_prompt}", task_prompt);
    t = replace_all(t, "{report}", report);
    t = replace_all(t, "{criteria_of_one_dimension_json}", criteria_of_one_dimension.dump(2));
    return t;
}

std::string report_segmentation(const std::string& report) {
    std::string t = R"PROMPT(You are a text segmentation assistant. Your task is to segment reports into logical parts:
- Avoid single-sentence parts.
- Do NOT alter the original content.
- Titles, headings, or section headers should be combined with the following content as one part.
- If multiple sentences clearly belong to the same section, keep them together in one part instead of splitting them.
- Output must be ONLY a valid JSON list, where each element is one part.

Example output format:
[
  "This is the first part.",
  "This is the second part.",
  "This is the third part."
]

Please segment the following report into logical parts:

{report}
)PROMPT";
    return replace_all(t, "{report}", report);
}

std::string agent_system(const std::string& formatted_date, int max_tool_calls_per_turn) {
    std::string t = R"PROMPT(In this environment you have access to a set of tools you can use to answer the user's question.
Today is: {formatted_date}

# Available Tools

- google_search: web search. Arguments: {"query": "search terms", "num_results": 10}
- scrape_website: retrieve the text content of a webpage. Arguments: {"url": "https://..."}
- wiki_get_page_content: retrieve the content of a specific Wikipedia page. Arguments: {"title": "Page title"}

To call a tool, emit one block per call at the end of your response, top-level, not nested within other tags:

<tool_call>
{"tool": "google_search", "arguments": {"query": "...", "num_results": 10}}
</tool_call>

You may emit up to {max_calls} tool calls per response. Tool results will be returned in the next user message as <tool_result> blocks.

Important Notes:
- Tool-use must be placed **at the end** of your response, **top-level**, and not nested within other tags.
- Always adhere to this format for the tool use to ensure proper parsing and execution.

String and scalar parameters should be specified as is, while lists and objects should use JSON format. Note that spaces for string values are not stripped. The output is not expected to be valid XML and is parsed with regular expressions.

# General Objective

You accomplish a given task iteratively, breaking it down into clear steps and working through them methodically.

## Task Strategy

1. Analyze the user's request and set clear, achievable sub-goals. Prioritize these sub-goals in a logical order.
2. Start with a concise, numbered, step-by-step plan (e.g., 1., 2., 3.) outlining how you will solve the task before taking any action. Each sub-goal should correspond to a distinct step in your task-solving process.
3. Work through these sub-goals sequentially. After each step, the user may provide tool-use feedback, reflect on the results and revise your plan if needed. If you encounter new information or challenges, adjust your approach accordingly. Revisit previous steps to ensure earlier sub-goals or clues have not been overlooked.
4. You have access to a wide range of powerful tools. Use them strategically to accomplish each sub-goal.

## Tool-Use Guidelines

1. Before each tool call:
- Briefly summarize and analyze what is currently known.
- Identify what is missing, uncertain, or unreliable.
- Be concise; do not repeat the same analysis across steps.
- Choose the most relevant tool for the current sub-goal, and explain why this tool is necessary at this point.
- Verify whether all required parameters are either explicitly provided or can be clearly and reasonably inferred from context.
- Do not guess or use placeholder values for missing inputs.
- Skip optional parameters unless they are explicitly specified.
2. All tool queries must include full, self-contained context. Tools do not retain memory between calls. Include all relevant information from earlier steps in each query.
3. Avoid broad, vague, or speculative queries. Every tool call should aim to retrieve new, actionable information that clearly advances the task.
4. Even if a tool result does not directly answer the question, extract and summarize any partial information, patterns, constraints, or keywords that can help guide future steps.

## Tool-Use Communication Rules

1. Do not include tool results in your response; the user will provide them.
2. Do not present the final answer until the entire task is complete.
3. Do not mention tool names.
4. Do not engage in unnecessary back-and-forth or end with vague offers of help. Do not end your responses with questions or generic prompts.
5. Do not use tools that do not exist.
6. Unless otherwise requested, respond in the same language as the user's message.
7. If the task does not require tool use, answer the user directly.

# Agent Specific Objective

You are a task-solving agent that uses tools step-by-step to answer the user's question. Your goal is to provide complete, accurate and well-reasoned answers using additional tools.

Before verifying all the statements, **always** use the tool to search for information of the statement.
)PROMPT";
    t = replace_all(t, "{formatted_date}", formatted_date);
    t = replace_all(t, "{max_calls}", std::to_string(max_tool_calls_per_turn));
    return t;
}

std::string verification_task(const std::string& user_query, const std::string& part) {
    std::string t = R"PROMPT([user query]:
{user_query}

[part]:
{part}

Your task is to perform factual verification of a [part] from an LLM-generated report.
The report is produced in response to a [user query], and both the [user query] and the [part] are provided above.

Task requirements:
1. Use retrieval tools to fact-check key statements in the [part], collecting evidence from reliable sources whenever possible.
2. You should focus on validating key statements, especially those involving numbers, news, events, dates, locations, or people that can be fact-checked with external sources.
3. Do not verify every sentence; focus on the core, publicly verifiable claims.
4. For each checked statement, clearly record:
   - verification: one of [Right, Wrong, Unknown] (choose only one).
     * "Right": the statement matches reliable public information.
     * "Wrong": the statement is contradicted by reliable sources or a statement mixes accurate and inaccurate content.
     * "Unknown": the statement lacks sufficient relevant information, or contains some correct details but other parts can't be verified.
   - evidence: a list of objects, each containing:
     * source: the URL of the supporting or contradicting evidence
     * excerpt: the quoted text or summary from the source that directly relates to the statement
   - reasoning: a clear explanation of the verification reasoning and process, including how the evidence supports the assigned verification result.
)PROMPT";
    t = replace_all(t, "{user_query}", user_query);
    t = replace_all(t, "{part}", part);
    return t;
}

std::string summary_request() {
    return R"PROMPT(This is a direct instruction to you (the assistant), not the result of a tool call.

We are now ending this session, and your conversation history will be deleted.
You must NOT initiate any further tool use. This is your final opportunity to report
*all* of the information gathered during the session.

Summarize the above conversation, and output strictly in the following JSON format, with no additional text, explanations, or casual remarks:

{
  "core_state": [
    {
      "statement": "The statement to be verified",
      "verification": "Right / Wrong / Unknown",
      "evidence": [
        {
          "source": "Evidence source URL or reference",
          "excerpt": "Quoted text or summary from the evidence"
        }
      ],
      "reasoning": "Explanation of the verification reasoning and process"
    },
    ...
  ]
}

Requirements:
1. Do not add any output other than the JSON object.
2. Each `evidence` entry must always include both `source` and `excerpt`; do not omit either field.
3. The `source` and `excerpt` must always be included if content is provided.
4. If multiple pieces of evidence exist, include all of them in the `evidence` array.
)PROMPT";
}

}  // namespace dre::prompts
