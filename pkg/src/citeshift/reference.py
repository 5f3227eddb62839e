"""Published figures from the 1998/1999 Journal Citation Reports analysis.

They come from proprietary ISI data and cannot be recomputed here. They are
kept as documentation and as format examples for the report writers, never
as expected values: nothing in the package or its tests checks output
against them.
"""

from __future__ import annotations

from typing import NamedTuple


class ReferenceFigure(NamedTuple):
    name: str
    value: float
    unit: str
    note: str


JCR_FIGURES = (
    ReferenceFigure("file_i_cited", 24.324, "millibits", "file-level change, cited dimension"),
    ReferenceFigure("file_i_citing", 87.926, "millibits", "file-level change, citing dimension"),
    ReferenceFigure("positive_contributors_citing", 2375, "journals", "positive delta I, citing"),
    ReferenceFigure("positive_contributors_cited", 3238, "journals", "positive delta I, cited"),
    ReferenceFigure("top_vector_i_cited", 2.019, "bits", "RESTOR NEUROL NEUROS, N = 26"),
    ReferenceFigure("top_matrix_term_cited", 50852, "bits", "J BIOL CHEM"),
    ReferenceFigure("top_category_i_avg", 0.232, "bits", "MINING & MINERAL PROCESSING, 31 journals"),
    ReferenceFigure("relations_covered", 771_045, "relations", "1999 matrix after filtering"),
    ReferenceFigure("citations_covered", 14_264_510, "citations", "1999 matrix after filtering"),
)

REPRODUCIBLE = False


def format_millibits(value_bits: float) -> str:
    """Render a bit value the way the reference tables print it."""
    return f"{value_bits * 1000:.3f} millibits"
