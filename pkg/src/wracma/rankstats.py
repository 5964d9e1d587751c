"""Rank utilities: tie-corrected Kendall's tau and ranking extraction.

kendall_tau is a direct O(k^2) pair count; the ranking vectors it serves
are population-sized (k around 10), so no subquadratic machinery is
warranted and the integer pair counts keep the statistic reproducible bit
for bit against brute-force enumeration.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ContractError, DegenerateTauError


def kendall_tau(a, b) -> float:
    """Tie-corrected Kendall rank correlation (tau-b) between two lists.

    tau_b = (concordant - discordant) / sqrt(n_a * n_b), where n_a and n_b
    count the pairs not tied in the first and second list respectively.
    Raises ContractError on length mismatch or fewer than two elements, and
    DegenerateTauError when the coefficient is undefined because an input
    list is constant (no discriminating pairs).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError("kendall_tau requires two equal-length 1-D lists")
    if a.size < 2:
        raise ContractError("kendall_tau requires at least two elements")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ContractError("kendall_tau requires finite values")
    sign_a = np.sign(a[:, None] - a[None, :])
    sign_b = np.sign(b[:, None] - b[None, :])
    # every unordered pair appears twice in the full sign matrices
    concordant_minus_discordant = int(np.einsum("ij,ij->", sign_a, sign_b)) // 2
    pairs_a = int(np.count_nonzero(sign_a)) // 2
    pairs_b = int(np.count_nonzero(sign_b)) // 2
    if pairs_a == 0 or pairs_b == 0:
        raise DegenerateTauError("tau undefined: an input list is constant")
    return concordant_minus_discordant / math.sqrt(pairs_a * pairs_b)


def ranking_of(values) -> np.ndarray:
    """Ranks 1..k with rank 1 for the smallest value; ties broken by index."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise ContractError("ranking_of requires a non-empty 1-D list")
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=int)
    ranks[order] = np.arange(1, values.size + 1)
    return ranks
