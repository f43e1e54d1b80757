"""Figure rendering for session reports.

The stats report path writes distribution histograms as PNG files next to
the delimited output, mirroring how the headline numbers (attempts to fool,
perturbed characters, question lengths) are usually eyeballed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_histogram(
    values,
    *,
    title: str,
    xlabel: str,
    path,
    ylabel: str = "questions",
) -> Path:
    """Render one histogram to ``path`` and return it.

    Integer samples get one bin per integer so small distributions (most
    sessions fool a model within a handful of attempts) stay readable.
    """
    values = list(values)
    if not values:
        raise ValueError("cannot render a histogram of zero values")
    if all(float(v).is_integer() for v in values):
        lo, hi = int(min(values)), int(max(values))
        bins = [b - 0.5 for b in range(lo, hi + 2)]
    else:
        bins = 20
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        ax.hist(values, bins=bins, color="#4477aa", edgecolor="black")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        fig.tight_layout()
        path = Path(path)
        fig.savefig(path)
    finally:
        plt.close(fig)
    return path


def render_session_figures(
    store,
    model: str,
    out_dir,
    question_chars=None,
) -> list[Path]:
    """Write the distribution figures for one model into ``out_dir``.

    Returns the paths written. ``question_chars`` is an optional sample of
    question lengths; when omitted that figure is skipped.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        save_histogram(
            store.attempts_to_fool_sample(model),
            title=f"Attempts until {model} was fooled",
            xlabel="attempt number of first fooled attempt",
            path=out_dir / f"attempts_to_fool_{model}.png",
        ),
        save_histogram(
            store.perturbed_chars_sample(model),
            title=f"Perturbed characters against {model}",
            xlabel="perturbed characters in first fooled attempt",
            path=out_dir / f"perturbed_chars_{model}.png",
        ),
    ]
    if question_chars:
        written.append(
            save_histogram(
                question_chars,
                title="Question lengths",
                xlabel="characters per question",
                path=out_dir / "question_chars.png",
            )
        )
    return written
