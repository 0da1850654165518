"""Shared construction helpers for the test suite."""

import numpy as np

from grasslvq import (
    ModelState,
    Prototype,
    SampleOutcome,
    Subspace,
    adaptive_squared_distance,
    orthonormalize_columns,
    principal_decomposition,
)


def random_subspace(rng, D, d):
    return orthonormalize_columns(rng.standard_normal((D, d)))


def random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def pair_with_angles(rng, D, angles):
    """Two subspaces in G(D, d) whose principal angles are exactly `angles`.

    Built from a shared orthonormal 2d-column frame [A | B]: the first
    subspace is span(A), the second has columns cos(t_k) a_k + sin(t_k) b_k.
    """
    angles = np.asarray(angles, dtype=float)
    d = angles.shape[0]
    frame = random_subspace(rng, D, 2 * d).basis
    a, b = frame[:, :d], frame[:, d:]
    first = Subspace(a)
    second = Subspace(a * np.cos(angles) + b * np.sin(angles))
    return first, second


def make_outcome(rng, D, d, weights, low=0.1, high=1.4):
    """A sample plus two winner prototypes with angles confined to (low, high).

    Returns (sample, model-free SampleOutcome, prototype subspaces). Angles are
    drawn distinct so the cost is smooth around the construction point.
    """
    sample, w_plus = pair_with_angles(rng, D, _distinct_angles(rng, d, low, high))
    _, w_minus = pair_with_angles(rng, D, _distinct_angles(rng, d, low, high))
    pd_plus = principal_decomposition(sample, w_plus)
    pd_minus = principal_decomposition(sample, w_minus)
    d_plus = adaptive_squared_distance(pd_plus, weights)
    d_minus = adaptive_squared_distance(pd_minus, weights)
    mu = (d_plus - d_minus) / (d_plus + d_minus)
    outcome = SampleOutcome(0, 1, d_plus, d_minus, mu, pd_plus, pd_minus)
    return sample, outcome, (w_plus, w_minus)


def _distinct_angles(rng, d, low, high):
    while True:
        angles = np.sort(rng.uniform(low, high, size=d))
        if np.min(np.diff(angles)) > 0.05 if d > 1 else True:
            return angles


def two_class_model(rng, D, d, mode="glgq", relevance=None):
    protos = [Prototype(random_subspace(rng, D, d), 1),
              Prototype(random_subspace(rng, D, d), 2)]
    if relevance is None:
        relevance = np.ones(d) if mode == "glgq" else np.full(d, 1.0 / d)
    return ModelState(protos, relevance, mode, d, D)


def synthetic_subspace_dataset(rng, classes=3, D=20, d=3, per_class=10,
                               noise=0.02):
    """Noisy samples around random class-center subspaces (in-memory)."""
    dataset = []
    for c in range(classes):
        center = random_subspace(rng, D, d).basis
        for _ in range(per_class):
            sample = orthonormalize_columns(
                center + noise * rng.standard_normal((D, d)))
            dataset.append((sample, c + 1))
    return dataset
