"""Visually similar text perturbations and their legibility.

Renders words with a bitmap font, finds visually confusable characters
by glyph-embedding similarity, perturbs words with seeded randomness,
learns a legibility scorer from pairwise human judgments, evaluates
legibility-filtered attacks against text classifiers alongside word
recovery, and runs a live human-annotation service.

Each concern lives in its own submodule; import what you need:

    atlas      font loading and glyph/string rendering
    index      glyph embeddings and nearest-neighbor tables
    perturb    parameter priors and seeded word perturbation
    dataset    annotations, derived tasks, agreement statistics
    synth      synthetic words and pairs for pipeline checks
    scorer     trainable legibility models and feature extraction
    baselines  majority / logistic-regression / image-dot references
    metrics    classification, ranking, and agreement metrics
    victim     classifier-under-attack protocols and the toy victim
    attack     legibility-filtered attack sweeps and reports
    stem       Porter stemmer used by recovery scoring
    service    annotation rounds, gold checks, event-log replay
    server     HTTP front end for the annotation service
    cli        command-line interface over all of the above
"""

__version__ = "0.1.0"
