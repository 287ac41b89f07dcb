"""Shared fixtures and synthetic-data helpers for the test suite."""

from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def e2e_dir() -> Path:
    return FIXTURES / "e2e"


def make_blobs(seed, centers, sigma, counts):
    """Gaussian blobs around the given centers; returns (X, labels)."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=np.float64)
    rows, labels = [], []
    for k, count in enumerate(counts):
        rows.append(rng.normal(centers[k], sigma, size=(count, centers.shape[1])))
        labels.extend([k] * count)
    return np.vstack(rows), np.array(labels, dtype=np.int64)


def separated_means(rng, dim, n_components, min_sep):
    """Random component means with a guaranteed pairwise distance.

    Sequential rejection with an adaptive spread so dense packings (many
    components in few dimensions) still terminate.
    """
    scale = 4.0
    means = []
    while len(means) < n_components:
        for _ in range(200):
            cand = rng.normal(0.0, scale, size=dim)
            if all(np.linalg.norm(cand - m) >= min_sep for m in means):
                means.append(cand)
                break
        else:
            scale *= 1.3
            means = []
    return np.array(means)


def separated_mixture(seed, n_rows, dim, n_components, min_sep=8.0):
    """Well-separated random Gaussian mixture; returns (X, labels)."""
    rng = np.random.default_rng(seed)
    means = separated_means(rng, dim, n_components, min_sep)
    weights = rng.dirichlet(np.full(n_components, 5.0))
    counts = rng.multinomial(n_rows, weights)
    rows, labels = [], []
    for j, count in enumerate(counts):
        shape = rng.normal(0.0, 1.0, size=(dim, dim)) / np.sqrt(2.0 * dim)
        cov = shape @ shape.T + 0.5 * np.eye(dim)
        rows.append(rng.multivariate_normal(means[j], cov, size=count))
        labels.extend([j] * count)
    return np.vstack(rows), np.array(labels, dtype=np.int64)


def corrupt_labels(seed, labels, n_components, fraction):
    """Reassign a fraction of labels uniformly at random."""
    rng = np.random.default_rng(seed)
    out = labels.copy()
    idx = rng.choice(len(labels), size=int(fraction * len(labels)), replace=False)
    out[idx] = rng.integers(0, n_components, size=len(idx))
    return out


def write_word_vectors(path, table):
    """Write {token: vector} rows in the plain text word-vector format."""
    with open(path, "w", encoding="utf-8") as fh:
        for token, values in table.items():
            fh.write(token + " " + " ".join(f"{v:g}" for v in values) + "\n")
    return path


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """List the acceptance-criterion outcomes at the end of the run."""
    try:
        import acceptance_report
    except ImportError:
        return
    if not acceptance_report.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance_report.RESULTS):
        title, passed, detail = acceptance_report.RESULTS[number]
        terminalreporter.write_line(
            acceptance_report.format_line(number, title, passed, detail)
        )
