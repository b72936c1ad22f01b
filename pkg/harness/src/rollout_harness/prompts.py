"""Fixed instruction strings prepended to every question.

Two templates: one for open-ended reasoning tasks, one for multiple-choice
QA. Both force the chain of thought into ``<think> </think>`` tags and the
final answer into a ``\\boxed{}`` macro, which is what the anchor locator and
the boxed-answer extractor key on. The wording is fixed configuration, not
something the harness composes.
"""

from .errors import InvalidConfig

OPEN_ENDED = (
    "You FIRST think about the reasoning process as an internal monologue "
    "and then provide the final answer.\n"
    "The reasoning process MUST BE enclosed within <think> </think> tags.\n"
    "The final answer MUST BE put in \\boxed{}."
)

MULTIPLE_CHOICE = (
    "You should FIRST think about the reasoning process as an internal "
    "monologue and then provide the final answer.\n"
    "The reasoning process MUST BE enclosed within <think> </think> tags.\n"
    "The final answer MUST BE a single choice letter (A, B, C, etc.) and "
    "MUST be put in \\boxed{X}, where X is the selected letter."
)

PROMPT_TEMPLATES = {
    "open_ended": OPEN_ENDED,
    "multiple_choice": MULTIPLE_CHOICE,
}


def render_prompt(template_id: str, question: str) -> str:
    """Join the fixed instruction block and the question text."""
    if template_id not in PROMPT_TEMPLATES:
        raise InvalidConfig(
            f"unknown template {template_id!r}, expected one of "
            f"{sorted(PROMPT_TEMPLATES)}"
        )
    if not question or not question.strip():
        raise InvalidConfig("question text must be nonempty")
    return PROMPT_TEMPLATES[template_id] + "\n\n" + question
