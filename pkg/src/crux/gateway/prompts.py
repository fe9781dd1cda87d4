"""Packaged instruction prompts.

Placeholders use ``{name}`` syntax and must all be bound at render time.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import UsageError

_QUESTION_GEN = """\
Instruction: Write {n} diverse questions that can reveal the information contained in the given document. Each question should be self-contained and have the necessary context. Write the question within '<q>' and '</q>' tags.

Document: {document}
Questions:
<q>"""

_PASSAGE_GEN = """\
Instruction: Break down the given document into 2-3 standalone passages of approximately 200 words each, providing essential context and information. Use similar wording and phrasing as the original document. Write each passages within '<p>' and '</p>' tags.

Document: {document}
Passages:
<p>"""

_GRADING = """\
Instruction: Determine whether the question can be answered based on the provided context? Rate the context with on a scale from 0 to 5 according to the guideline below. Do not write anything except the rating.

Guideline:
5: The context is highly relevant, complete, and accurate.
4: The context is mostly relevant and complete but may have minor gaps or inaccuracies.
3: The context is partially relevant and complete, with noticeable gaps or inaccuracies.
2: The context has limited relevance and completeness, with significant gaps or inaccuracies.
1: The context is minimally relevant or complete, with substantial shortcomings.
0: The context is not relevant or complete at all.

Question: {question}
Context: {context}
Rating:"""

_QUERY_GEN_DEMO_REPORT = (
    "Whether you dismiss UFOs as a fantasy or believe that extraterrestrials are "
    "visiting the Earth and flying rings around our most sophisticated aircraft, the "
    "U.S. government has been taking them seriously for quite some time. "
    "“Project Blue Book”, commissioned by the U.S. Air Force, studied reports of "
    "“flying saucers” but closed down in 1969 with a conclusion that they did not "
    "present a threat to the country. As the years went by UFO reports continued to be "
    "made and from 2007 to 2012 the Aerospace Threat Identification Program, set up "
    "under the sponsorship of Senator Harry Reid, spent $22 million looking into the "
    "issue once again. Later, the Pentagon formed a “working group for the study of "
    "unidentified aerial phenomena”. This study, staffed with personnel from Naval "
    "Intelligence, was not aimed at finding extraterrestrials, but rather at "
    "determining whether craft were being flown by potential U.S. opponents with new "
    "technologies. In June, 2022, in a report issued by the Office of the Director for "
    "National Intelligence and based on the observations made by members of the U.S. "
    "military and intelligence from 2004 to 2021 it was stated that at that time there "
    "was, with one exception, not enough information to explain the 144 cases of what "
    "were renamed as “Unidentified Aerial Phenomena” examined."
)

_QUERY_GEN_DEMO_REQUEST = (
    "Please produce a report on investigations within the United States in either the "
    "public or private sector into Unidentified Flying Objects (UFOs). The report "
    "should cover only investigative activities into still unidentified phenomena, and "
    "not the phenomena themselves. It should include information on the histories, "
    "costs, goals, and results of such investigations."
)

_QUERY_GEN = (
    "Instruction: Create a statement of report request that corresponds to given "
    "report. Write the report request of approximately 50 words within <r> and </r> "
    "tags.\n\n"
    "Report: " + _QUERY_GEN_DEMO_REPORT + "\n\n"
    "Report request: <r>" + _QUERY_GEN_DEMO_REQUEST + "</r>\n\n"
    "Report: {report}\n\n"
    "Report request: <r>"
)

# Default report-writing prompt. This is artifact configuration, not a faithful
# reproduction of any published instruction; override via PROMPT_TEMPLATES if a
# different generation instruction is needed.
_REPORT_GEN = """\
Instruction: Write a comprehensive report that responds to the request below. Use only information contained in the provided context passages. Write plain prose without headings.

Request: {query}

Context:
{context}

Report:"""


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str

    def render(self, bindings: dict) -> str:
        try:
            return self.body.format_map(bindings)
        except (KeyError, IndexError) as exc:
            raise UsageError(
                f"template {self.template_id!r}: unbound placeholder {exc}"
            ) from exc


PROMPT_TEMPLATES: dict[str, PromptTemplate] = {
    "question_gen": PromptTemplate("question_gen", _QUESTION_GEN),
    "passage_gen": PromptTemplate("passage_gen", _PASSAGE_GEN),
    "grading": PromptTemplate("grading", _GRADING),
    "query_gen": PromptTemplate("query_gen", _QUERY_GEN),
    "report_gen": PromptTemplate("report_gen", _REPORT_GEN),
}


def render_prompt(template_id: str, bindings: dict) -> str:
    try:
        template = PROMPT_TEMPLATES[template_id]
    except KeyError:
        raise UsageError(f"unknown template {template_id!r}") from None
    return template.render(bindings)
