"""Prompt templates for question generation, answer extraction, and revision.

Each template is a fixed instruction block with named ``{slot}`` placeholders
for the variable inputs. Rendering is pure substitution: nothing else in the
body changes, so tests can pin exact strings and the replay cache keys stay
stable. The UNANSWERABLE sentinel is defined here and nowhere else.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Mapping

from .errors import MissingSlot

UNANSWERABLE = "UNANSWERABLE"


class TemplateId(enum.Enum):
    QA_GENERATION = "qa_generation"
    COVERAGE_ANSWER_EXTRACTION = "coverage_answer_extraction"
    CONSISTENCY_ANSWER_EXTRACTION = "consistency_answer_extraction"
    COVERAGE_REFINE = "coverage_refine"
    CONSISTENCY_REFINE = "consistency_refine"


@dataclass(frozen=True)
class PromptTemplate:
    id: TemplateId
    body: str

    @property
    def slots(self) -> frozenset[str]:
        return frozenset(_SLOT_RE.findall(self.body))


_SLOT_RE = re.compile(r"\{(\w+)\}")


_QA_GENERATION_BODY = """\
Task
Generate questions that capture key information in the given text, extract corresponding answers, and rank questions by importance.

Requirements
- Generate n questions (n = {n_range})
- Use diverse question types: What, When, Where, Who, How, Why
- Focus on key information, not trivial details
- Rank by importance (Rank 1 = most important)

Input
Text T: {text}

Output Format
Question [Rank]: <question_text>
Answer: <answer_text>
...
"""

_COVERAGE_ANSWER_BODY = """\
Task
Extract answers to the given questions from the summary. If a question cannot be answered, respond with "UNANSWERABLE".

Requirements
- Extract concise, accurate answers
- Base answers only on information explicitly present in the summary
- Return "UNANSWERABLE" if information is insufficient or absent
- Do not infer or generate information beyond what is stated

Input
Summary S: {summary}
Questions: {questions}

Output Format
Question: <question_text>
Answer: <answer_text | "UNANSWERABLE">
...
"""

_CONSISTENCY_ANSWER_BODY = """\
Task
Extract ground truth answers to the given questions from the source document for verifying summary consistency.

Requirements
- Extract accurate answers based solely on the document
- Provide concise but complete answers
- Return "UNANSWERABLE" if information is not present in the document
- Do not add information beyond what is explicitly stated

Input
Document D: {document}
Questions: {questions}

Output Format
Question: <question_text>
Answer: <answer_text | "UNANSWERABLE">
...
"""

_COVERAGE_REFINE_BODY = """\
Task
Revise the summary to address key questions from the source document that are not adequately covered.

Context
Your initial summary does not sufficiently cover some important information from the source document.

Requirements
- Address all the questions listed below in your revised summary
- Maintain conciseness and readability
- Ensure all added information is accurate and from the source document
- Preserve the quality of existing content while adding missing information

Input
Document D: {document}
Initial Summary S: {summary}
Missing Information: {feedback}

Output Format
<revised_summary>
"""

_CONSISTENCY_REFINE_BODY = """\
Task
Revise the summary to ensure factual consistency with the source document by correcting inaccurate or inconsistent statements.

Context
Your initial summary contains some facts that do not align with information in the source document.

Requirements
- Ensure all facts align with the ground truth answers provided below
- Correct any inaccurate or inconsistent statements
- Maintain the overall structure and readability of the summary
- Do not add or remove information beyond what is necessary for consistency

Input
Document D: {document}
Initial Summary S: {summary}
Ground Truth Facts: {feedback}

Ground Truth Facts Format
Question: <question_text>
Correct Answer: <ground_truth_answer>
...

Output Format
<revised_summary>
"""

TEMPLATES: dict[TemplateId, PromptTemplate] = {
    TemplateId.QA_GENERATION: PromptTemplate(
        TemplateId.QA_GENERATION, _QA_GENERATION_BODY
    ),
    TemplateId.COVERAGE_ANSWER_EXTRACTION: PromptTemplate(
        TemplateId.COVERAGE_ANSWER_EXTRACTION, _COVERAGE_ANSWER_BODY
    ),
    TemplateId.CONSISTENCY_ANSWER_EXTRACTION: PromptTemplate(
        TemplateId.CONSISTENCY_ANSWER_EXTRACTION, _CONSISTENCY_ANSWER_BODY
    ),
    TemplateId.COVERAGE_REFINE: PromptTemplate(
        TemplateId.COVERAGE_REFINE, _COVERAGE_REFINE_BODY
    ),
    TemplateId.CONSISTENCY_REFINE: PromptTemplate(
        TemplateId.CONSISTENCY_REFINE, _CONSISTENCY_REFINE_BODY
    ),
}


def render_prompt(
    template: PromptTemplate | TemplateId, slots: Mapping[str, str]
) -> str:
    """Fill every placeholder of the template; raise MissingSlot on gaps.

    Substitution is literal (slot values are never re-scanned), and extra
    slot entries that the template does not mention are ignored.
    """
    if isinstance(template, TemplateId):
        template = TEMPLATES[template]
    needed = template.slots
    for name in sorted(needed):
        if name not in slots:
            raise MissingSlot(name)
    return _SLOT_RE.sub(lambda m: str(slots[m.group(1)]), template.body)
