"""Shared oracles for the weighting and acceptance tests."""

import numpy as np

from wear import RngStream


def simplex_grid(step, n_components=3):
    """Every weight vector on the simplex whose entries are multiples of step."""
    ticks = int(round(1.0 / step))
    points = []
    for i in range(ticks + 1):
        for j in range(ticks + 1 - i):
            k = ticks - i - j
            points.append((i * step, j * step, k * step))
    return np.asarray(points)


def aggregation_risk_search(variances, step=0.02, n_draws=100_000, seed=0):
    """Monte-Carlo grid search for the lowest-risk opinion weighting.

    Draws labels and opinions from the generative model (opinion = label +
    expert noise), estimates E[(weighted opinion - label)^2] for every grid
    point on the simplex with common draws, and returns the grid minimizer
    together with the inverse-variance point's estimated risk and its
    Monte-Carlo standard error.
    """
    variances = np.asarray(variances, dtype=float)
    J = variances.shape[0]
    gen = RngStream(seed).generator()
    labels = gen.normal(0.0, 3.0, n_draws)
    opinions = labels[:, None] + gen.normal(size=(n_draws, J)) * np.sqrt(variances)

    grid = simplex_grid(step, J)
    # risk(w) = w'Mw - 2w'm + q reproduces mean((opinions @ w - labels)^2)
    M = opinions.T @ opinions / n_draws
    m = opinions.T @ labels / n_draws
    q = labels @ labels / n_draws
    risks = np.einsum("gi,ij,gj->g", grid, M, grid) - 2.0 * grid @ m + q

    best_idx = int(np.argmin(risks))
    best_weights = grid[best_idx]
    best_risk = float(risks[best_idx])

    inverse = (1.0 / variances) / np.sum(1.0 / variances)
    formula_errors = (opinions @ inverse - labels) ** 2
    formula_risk = float(formula_errors.mean())
    formula_se = float(formula_errors.std(ddof=1) / np.sqrt(n_draws))
    return {
        "grid_weights": best_weights,
        "grid_risk": best_risk,
        "formula_weights": inverse,
        "formula_risk": formula_risk,
        "formula_se": formula_se,
        "step": step,
    }
