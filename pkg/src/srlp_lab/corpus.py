"""Named walks used by the test suite, the acceptance checks and ``--builtin``."""

from __future__ import annotations

from .walk import make_walk

SPECS = {
    "periodic": {"family": "constant", "tail": [0.5, 0, 0.5], "label": "periodic"},
    "symmetric_hold": {"family": "constant", "tail": [0.3, 0.4, 0.3], "label": "symmetric_hold"},
    "drift_out": {"family": "constant", "tail": [0.4, 0.4, 0.2], "label": "drift_out"},
    "drift_in": {"family": "constant", "tail": [0.2, 0.4, 0.4], "label": "drift_in"},
    "fading_hold": {
        "family": "linear_rational",
        "params": {"p": {"num": [1], "den": [2]}, "r": {"num": [1], "den": [4, 4, 1]}},
        "label": "fading_hold",
    },
    "rational_drift": {
        "family": "linear_rational",
        "params": {"p": {"num": [2, 3], "den": [4, 5]}, "r": {"num": [1, 1], "den": [10, 5]}},
        "label": "rational_drift",
    },
}

# bases holding only at state 0 and recurrent, each with an alpha > 1
EDGE_RECURRENT_BASES = {
    "holding_origin": (
        {
            "family": "tabular_with_constant_tail",
            "prefix": [[0.5, 0.5, 0]],
            "tail": [0.5, 0, 0.5],
            "label": "holding_origin",
        },
        1.25,
    ),
    "sticky_origin": (
        {
            "family": "tabular_with_constant_tail",
            "prefix": [[0.3, 0.7, 0]],
            "tail": [0.5, 0, 0.5],
            "label": "sticky_origin",
        },
        1.5,
    ),
    "slow_recurrent": (
        {
            "family": "linear_rational",
            "prefix": [[0.6, 0.4, 0]],
            "params": {"p": {"num": [2, 1], "den": [3, 2]}, "r": {"num": [0], "den": [1]}},
            "label": "slow_recurrent",
        },
        2.0,
    ),
}

DEFAULT_EDGE_BASE = "holding_origin"


def builtin_spec(name):
    try:
        return SPECS[name]
    except KeyError:
        raise KeyError(f"unknown builtin walk {name!r}; choose from {sorted(SPECS)}") from None


def builtin_walk(name):
    return make_walk(builtin_spec(name))


def edge_recurrent_walk(name=DEFAULT_EDGE_BASE):
    from .theta_transform import example_44

    spec, alpha = EDGE_RECURRENT_BASES[name]
    return example_44(spec, alpha)


def corpus_walks():
    """All named walks plus the default edge-recurrent walk, in a fixed order."""
    walks = {name: make_walk(spec) for name, spec in SPECS.items()}
    walks["edge_recurrent"] = edge_recurrent_walk()
    return walks
