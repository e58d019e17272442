// Editable starting points for the Custom Eval prompt editors. Each
// generator class binds one template stage with fixed placeholder names;
// the bodies below follow the service's template format ([USER] splits
// the system text from the user turn).

export interface GeneratorPreset {
  stage: string;
  requires: string[];
  body: string;
  needsCorpus: boolean;
  corpusLabel?: string;
}

export const GENERATOR_PRESETS: Record<string, GeneratorPreset> = {
  direct: {
    stage: "generate",
    requires: ["input"],
    needsCorpus: false,
    body: `You design evaluation checklists. Write yes/no questions that together decide whether a response satisfies the task. One requirement per question.

[USER]
Task:
{input}

Write a checklist of yes/no questions for judging any response to this task.`,
  },
  contrastive: {
    stage: "contrast",
    requires: ["input", "candidates"],
    needsCorpus: false,
    body: `You turn quality differences into criteria. Given a task and candidate responses of varying quality, write yes/no questions that better responses pass more often.

[USER]
Task:
{input}

Candidate responses:
{candidates}

Write yes/no questions capturing what separates the stronger candidates from the weaker ones.`,
  },
  inductive: {
    stage: "extract",
    requires: ["feedback_items"],
    needsCorpus: true,
    corpusLabel: "Feedback items (one per line)",
    body: `You generalize feedback into evaluation criteria. Extract yes/no questions that would have caught each problem or confirmed each strength. Do not copy the feedback verbatim.

[USER]
Feedback items:
{feedback_items}

Extract candidate yes/no checklist questions from this feedback.`,
  },
  deductive: {
    stage: "generate",
    requires: ["dimension", "dimension_description"],
    needsCorpus: false,
    body: `You turn an evaluation dimension into concrete checklist questions. Each question probes one observable aspect of the dimension.

[USER]
Dimension: {dimension}
Description: {dimension_description}

Write yes/no questions that probe this dimension in a response text.`,
  },
  interactive: {
    stage: "extract",
    requires: ["transcript", "dimensions"],
    needsCorpus: true,
    corpusLabel: "Think-aloud transcripts (one per line)",
    body: `You mine evaluation sessions for criteria. Extract the atomic evaluation statements from a think-aloud judging transcript, assigned to the dimension each concerns.

[USER]
Evaluation dimensions:
{dimensions}

Transcript:
{transcript}

List the atomic evaluation statements made in this transcript.`,
  },
};

export const SCORER_PRESETS: Record<string, { requires: string[]; body: string }> = {
  batch: {
    requires: ["target", "checklist"],
    body: `You are a careful evaluator. Judge the response against each checklist question independently. Answer YES only when the response clearly satisfies the question.

[USER]
Task (may be empty):
{input}

Response to evaluate:
{target}

Checklist:
{checklist}

Answer every question with YES or NO.`,
  },
  item: {
    requires: ["target", "question"],
    body: `You are a careful evaluator. Answer a single yes/no question about the response. Be strict.

[USER]
Task (may be empty):
{input}

Response to evaluate:
{target}

Question: {question}

Reply with exactly one line of the form "Answer: YES" or "Answer: NO".`,
  },
};

/** Default builtin scorer template name for each scoring mode. */
export const SCORER_TEMPLATE_NAMES: Record<string, string> = {
  batch: "score_batch",
  item: "score_item",
};
