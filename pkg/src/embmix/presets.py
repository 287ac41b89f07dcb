"""Named per-dataset defaults: class names, templates, iteration caps, and
covariance modes for the five benchmark corpora."""

from __future__ import annotations

from .errors import ConfigError

PRESETS: dict[str, dict] = {
    "agnews": {
        "classes": [["politics"], ["sports"], ["business"], ["technology"]],
        "templates": [
            "The news is about ⟨mask⟩.",
            "The news is related to ⟨mask⟩.",
            "⟨mask⟩ is the topic of the news.",
            "This week's news is about ⟨mask⟩.",
        ],
        "max_iter": 50,
        "cov_mode": "full",
    },
    "dbpedia": {
        "classes": [
            ["company"],
            ["school"],
            ["artist"],
            ["athlete"],
            ["politics"],
            ["transportation"],
            ["building"],
            ["river"],
            ["village"],
            ["animal"],
            ["plant"],
            ["album"],
            ["film"],
            ["book"],
        ],
        "templates": [
            "The object is about ⟨mask⟩.",
            "The object is related to ⟨mask⟩.",
            "⟨mask⟩ is the topic of the object.",
            "⟨mask⟩ is the subject of the object.",
        ],
        "max_iter": 40,
        "cov_mode": "full",
    },
    "yahoo": {
        "classes": [
            ["society", "culture"],
            ["science", "mathematics"],
            ["health"],
            ["education", "reference"],
            ["computers", "internet"],
            ["sports"],
            ["business", "finance"],
            ["entertainment", "music"],
            ["family", "relationships"],
            ["politics", "government"],
        ],
        "templates": [
            "The answer is about ⟨mask⟩.",
            "The answer is related to ⟨mask⟩.",
            "⟨mask⟩ is the topic of the answer.",
            "⟨mask⟩ is involved in the answer.",
        ],
        "max_iter": 20,
        "cov_mode": "full",
    },
    "amazon": {
        "classes": [["bad"], ["good"]],
        "templates": [
            "A ⟨mask⟩ product review.",
            "The product review is ⟨mask⟩.",
            "The reviewer found the product ⟨mask⟩.",
            "The product is ⟨mask⟩.",
        ],
        "max_iter": 50,
        "cov_mode": "tied",
    },
    "imdb": {
        "classes": [["bad"], ["good"]],
        "templates": [
            "A ⟨mask⟩ movie review.",
            "The movie review is ⟨mask⟩.",
            "The reviewer found the movie ⟨mask⟩.",
            "The movie is ⟨mask⟩.",
        ],
        "max_iter": 150,
        "cov_mode": "tied",
    },
}


def get_preset(name: str) -> dict:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
