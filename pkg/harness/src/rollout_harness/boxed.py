"""Final-answer extraction from a generated completion.

The templates instruct the model to put its answer in a ``\\boxed{}`` macro;
the extractor returns the content of the last such macro whose braces
balance, so nested LaTeX like ``\\boxed{\\frac{1}{2}}`` comes back whole.
"""

from .errors import NoBoxedAnswer

_MARKER = "\\boxed{"


def _balanced_content(text: str, start: int) -> str | None:
    """Content between the brace opened at ``start`` and its match, else None."""
    depth = 1
    for i in range(start, len(text)):
        c = text[i]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return text[start:i]
    return None


def extract_boxed(text: str) -> str:
    """Return the trimmed content of the last balanced boxed macro in ``text``."""
    if not isinstance(text, str):
        raise NoBoxedAnswer(f"expected text, got {type(text).__name__}")
    search_end = len(text)
    while True:
        marker = text.rfind(_MARKER, 0, search_end)
        if marker == -1:
            raise NoBoxedAnswer("no balanced \\boxed{...} macro in completion")
        content = _balanced_content(text, marker + len(_MARKER))
        if content is not None:
            return content.strip()
        search_end = marker
