"""Experiment manifests (JSON in) and reports (JSON out) for the tree machinery."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

from ..cones import build_cone_automaton
from ..words import FreeGroup, GenTuple
from .feasible import (
    ball_words,
    classify_forbidden,
    count_feasible,
    feasible_injectivity_check,
    guaranteed_bound,
    lifted_injectivity_check,
    m_threshold,
    rate_lower_bound_pipeline,
)
from .separators import KernelSpec, conjugate_pair_separators, find_separators

# type-q image checks are skipped above this many feasible words
MAX_IMAGE_WORDS = 200_000


@dataclass
class Manifest:
    """What to run.

    ``tuple`` lists the generator words of ``L``; in kernel mode it is the
    basis of the domain and ``images`` defines the epimorphism onto the
    quotient free group of rank ``quotient_rank``.
    """

    tuple: list
    mode: str = "group"
    ms: list = field(default_factory=lambda: [1, 2, 3, 4])
    q: int = 2
    seed: int = 0
    images: list | None = None
    kernel_element: str | None = None
    quotient_rank: int = 2
    injectivity_m: int | None = 3
    negative_control: bool = False

    @classmethod
    def from_json(cls, text: str) -> "Manifest":
        return cls(**json.loads(text))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1)


def run_manifest(man: Manifest) -> dict:
    t0 = time.time()
    sym = man.mode != "semigroup"
    t = GenTuple.parse(man.tuple, symmetric=sym)
    rank = max(max(w) for w in t.words) // 2 + 1
    kernel = None
    if man.mode == "kernel":
        if not man.images or not man.kernel_element:
            raise ValueError("kernel mode needs images and kernel_element")
        kernel = KernelSpec.parse(man.images, man.kernel_element)
    seps = find_separators(t.words, man.mode, rank=rank, kernel=kernel, seed=man.seed)
    report: dict = {"manifest": asdict(man), "separators": seps.to_dict(), "b": seps.b, "levels": []}
    for m in man.ms:
        ball = ball_words(t, m, rank)
        fr = classify_forbidden(ball, seps, m)
        level = {
            "m": m,
            "beta_m": fr.beta_m,
            "beta_prime": fr.beta_prime,
            "n_forbidden": len(fr.forbidden),
            "fraction": str(fr.fraction),
            "bound": str(fr.bound),
            "ok": fr.ok,
            "forbidden_witnesses": fr.witnesses,
            "feasible_count": count_feasible(fr.beta_prime, man.q),
            "log_rate_lower_bound": rate_lower_bound_pipeline(m, seps.b, fr.beta_prime),
            "guaranteed_log_bound": guaranteed_bound(m, seps.b, fr.beta_m, seps.mode),
        }
        if man.mode != "kernel" and fr.beta_prime**man.q <= MAX_IMAGE_WORDS:
            bad = set(fr.forbidden)
            rep = feasible_injectivity_check(seps, [w for w in ball if w not in bad], man.q)
            level["injectivity"] = rep.to_dict()
        report["levels"].append(level)
    if man.mode == "kernel" and man.injectivity_m:
        quotient = GenTuple(tuple(kernel.images))
        A = build_cone_automaton(FreeGroup.of_rank(man.quotient_rank), quotient, N_validate=8)
        report["lifted_injectivity"] = lifted_injectivity_check(seps, A, quotient.words, man.injectivity_m, man.q).to_dict()
        if man.negative_control:
            bad = conjugate_pair_separators(seps)
            report["negative_control"] = lifted_injectivity_check(bad, A, quotient.words, man.injectivity_m, man.q).to_dict()
    try:
        report["m_threshold"] = m_threshold(max(1, seps.b), 2 * rank - 1)
    except OverflowError as exc:
        report["m_threshold"] = f"overflow: {exc}"
    report["seconds"] = round(time.time() - t0, 3)
    return report
