"""Embedded invariant suite run by ``selfcheck``."""
import itertools
from typing import Callable, List, Tuple

import numpy as np
from pydantic import BaseModel

from app.core.logger import Logger
from app.schemas.bkf import BkfParams
from app.schemas.image import GrayImage
from app.services import bkf, metrics, rr_features, tetrolet

logger = Logger("selfcheck").get_logger()

SEED = 20130917


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


def _tilings() -> Tuple[bool, str]:
    catalog = tetrolet.enumerate_tilings()
    classes = tetrolet.symmetry_classes(catalog)
    shapes = tetrolet.free_shape_names(catalog)
    ok = len(catalog) == 117 and len(classes) == 22 and shapes == ["I", "L", "O", "S", "T"]
    return ok, f"{len(catalog)} tilings, {len(classes)} classes, shapes {''.join(shapes)}"


def _reconstruction() -> Tuple[bool, str]:
    rng = np.random.default_rng(SEED)
    img = GrayImage(pixels=rng.uniform(0.0, 255.0, size=(64, 64)))
    rebuilt = tetrolet.inverse(tetrolet.forward(img, 3))
    err = float(np.max(np.abs(rebuilt.pixels - img.pixels)))
    return err <= 1e-9, f"max error {err:.3g}"


def _haar_equivalence() -> Tuple[bool, str]:
    rng = np.random.default_rng(SEED + 1)
    x = rng.uniform(0.0, 255.0, size=(32, 32))
    level = tetrolet.forward(GrayImage(pixels=x), 1, fixed_tiling=0).levels[0]
    a, b, c, d = x[0::2, 0::2], x[0::2, 1::2], x[1::2, 0::2], x[1::2, 1::2]
    expected = (
        (a + b + c + d) / 2,
        (a + b - c - d) / 2,
        (a - b + c - d) / 2,
        (a - b - c + d) / 2,
    )
    got = (level.lowpass, *level.details)
    err = max(float(np.max(np.abs(g - e))) for g, e in zip(got, expected))
    return err <= 1e-12, f"max deviation from 2x2 Haar {err:.3g}"


def _normalization() -> Tuple[bool, str]:
    worst = 0.0
    for alpha, beta in itertools.product((0.5, 1.0, 3.0), (0.5, 4.0)):
        worst = max(worst, abs(bkf.total_mass(BkfParams.of(alpha, beta)) - 1.0))
    return worst <= 1e-4, f"worst mass error {worst:.3g}"


def _closed_form() -> Tuple[bool, str]:
    worst = 0.0
    for (a1, b1), (a2, b2) in itertools.combinations([(0.5, 1.0), (1.0, 0.5), (2.0, 4.0)], 2):
        p1, p2 = BkfParams.of(a1, b1), BkfParams.of(a2, b2)
        closed = metrics.l2_distance_closed(p1, p2)
        quad = metrics.l2_distance_quadrature(p1, p2)
        worst = max(worst, abs(closed - quad) / quad)
    return worst <= 1e-5, f"worst relative gap {worst:.3g}"


def _payload() -> Tuple[bool, str]:
    rng = np.random.default_rng(SEED + 2)
    yy, xx = np.mgrid[0:80, 0:80]
    pixels = 128 + 60 * np.sin(xx / 5.0) * np.cos(yy / 7.0) + rng.normal(0.0, 8.0, size=(80, 80))
    qf = rr_features.quantize(rr_features.extract(GrayImage(pixels=np.clip(pixels, 0, 255))))
    container = rr_features.serialize(qf)
    ok = len(qf.payload()) == 18 and len(container) == 24
    return ok, f"{len(qf.payload())} payload bytes, {len(container)} container bytes"


CHECKS: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
    ("tilings", _tilings),
    ("reconstruction", _reconstruction),
    ("haar_equivalence", _haar_equivalence),
    ("normalization", _normalization),
    ("l2_closed_form", _closed_form),
    ("payload_size", _payload),
]


def run_selfcheck() -> List[CheckResult]:
    results = []
    for name, check in CHECKS:
        try:
            passed, detail = check()
        except Exception as e:
            logger.error(f"Self-check {name} raised", exc_info=True)
            passed, detail = False, f"{type(e).__name__}: {e}"
        logger.info(f"Self-check {name}: {'ok' if passed else 'FAILED'} ({detail})")
        results.append(CheckResult(name=name, passed=passed, detail=detail))
    return results
