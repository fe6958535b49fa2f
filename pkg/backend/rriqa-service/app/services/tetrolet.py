"""Adaptive Haar-type tetrolet transform on 4x4 blocks.

Each 4x4 block is covered by the tetromino tiling whose twelve Haar detail
coefficients have the smallest l1 norm. The four low-pass values of the
chosen tiling form a 2x2 cell of the next low-pass image; detail
coefficient ``l`` of every tetromino lands in detail subband ``l`` at the
same position.
"""
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.config import settings
from app.core.errors import DimensionNotDivisible, IndexOutOfRange, MalformedDecomposition
from app.core.logger import Logger
from app.schemas.image import GrayImage
from app.schemas.tetrolet import (
    CATALOG_SIZE,
    Cell,
    Tetromino,
    TetroletDecomposition,
    TetroletLevel,
    Tiling,
    TilingCatalog,
)

logger = Logger("tetrolet").get_logger()

# Orthonormal 4-point Haar-type analysis matrix; row 0 is the low-pass filter.
HAAR_MATRIX = 0.5 * np.array(
    [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ]
)

# The 19 fixed tetrominoes, normalised to touch row 0 and column 0.
# O comes first so that the backtracking emits the square tiling first.
FIXED_TETROMINOES: Tuple[Tuple[str, Tuple[Cell, ...]], ...] = (
    ("O", ((0, 0), (0, 1), (1, 0), (1, 1))),
    ("I", ((0, 0), (0, 1), (0, 2), (0, 3))),
    ("I", ((0, 0), (1, 0), (2, 0), (3, 0))),
    ("T", ((0, 0), (0, 1), (0, 2), (1, 1))),
    ("T", ((0, 1), (1, 0), (1, 1), (1, 2))),
    ("T", ((0, 0), (1, 0), (1, 1), (2, 0))),
    ("T", ((0, 1), (1, 0), (1, 1), (2, 1))),
    ("S", ((0, 1), (0, 2), (1, 0), (1, 1))),
    ("S", ((0, 0), (0, 1), (1, 1), (1, 2))),
    ("S", ((0, 0), (1, 0), (1, 1), (2, 1))),
    ("S", ((0, 1), (1, 0), (1, 1), (2, 0))),
    ("L", ((0, 0), (1, 0), (2, 0), (2, 1))),
    ("L", ((0, 1), (1, 1), (2, 0), (2, 1))),
    ("L", ((0, 0), (0, 1), (1, 0), (2, 0))),
    ("L", ((0, 0), (0, 1), (1, 1), (2, 1))),
    ("L", ((0, 0), (0, 1), (0, 2), (1, 0))),
    ("L", ((0, 0), (0, 1), (0, 2), (1, 2))),
    ("L", ((0, 0), (1, 0), (1, 1), (1, 2))),
    ("L", ((0, 2), (1, 0), (1, 1), (1, 2))),
)

SQUARE_PARTITION = frozenset(
    frozenset((r0 + dr, c0 + dc) for dr in (0, 1) for dc in (0, 1))
    for r0 in (0, 2)
    for c0 in (0, 2)
)

# The eight symmetries of the square acting on a cell of the 4x4 board.
BOARD_SYMMETRIES = (
    lambda r, c: (r, c),
    lambda r, c: (c, 3 - r),
    lambda r, c: (3 - r, 3 - c),
    lambda r, c: (3 - c, r),
    lambda r, c: (r, 3 - c),
    lambda r, c: (3 - r, c),
    lambda r, c: (c, r),
    lambda r, c: (3 - c, 3 - r),
)


def _board_cells() -> List[Cell]:
    return [(r, c) for r in range(4) for c in range(4)]


def _enumerate_partitions() -> List[List[Tuple[Cell, ...]]]:
    """Backtracking exact cover: fill the lowest uncovered cell with every shape containing it."""
    solutions: List[List[Tuple[Cell, ...]]] = []
    covered = [[False] * 4 for _ in range(4)]
    placed: List[Tuple[Cell, ...]] = []

    def first_free() -> Optional[Cell]:
        for r, c in _board_cells():
            if not covered[r][c]:
                return r, c
        return None

    def solve():
        target = first_free()
        if target is None:
            solutions.append(list(placed))
            return
        tr, tc = target
        for _, shape in FIXED_TETROMINOES:
            # shape cells are stored in row-major order, so shape[0] is its lowest cell
            dr, dc = tr - shape[0][0], tc - shape[0][1]
            cells = tuple((r + dr, c + dc) for r, c in shape)
            if all(0 <= r <= 3 and 0 <= c <= 3 and not covered[r][c] for r, c in cells):
                for r, c in cells:
                    covered[r][c] = True
                placed.append(cells)
                solve()
                placed.pop()
                for r, c in cells:
                    covered[r][c] = False

    solve()
    return solutions


@lru_cache(maxsize=1)
def enumerate_tilings() -> TilingCatalog:
    """All 117 tetromino tilings of the 4x4 board, square tiling at index 0."""
    partitions = _enumerate_partitions()
    square = [i for i, p in enumerate(partitions) if frozenset(map(frozenset, p)) == SQUARE_PARTITION]
    ordered = [partitions[square[0]]] + [p for i, p in enumerate(partitions) if i != square[0]]
    tilings = tuple(
        Tiling(tetrominoes=tuple(Tetromino(cells=piece) for piece in pieces), index=index)
        for index, pieces in enumerate(ordered)
    )
    catalog = TilingCatalog(tilings=tilings)
    logger.debug(f"Enumerated {len(catalog)} tetromino tilings")
    return catalog


def _canonical(cells: Iterable[Cell]) -> Tuple[Cell, ...]:
    cells = list(cells)
    r0 = min(r for r, _ in cells)
    c0 = min(c for _, c in cells)
    return tuple(sorted((r - r0, c - c0) for r, c in cells))


def _partition_key(partition: Iterable[Iterable[Cell]], symmetry) -> Tuple:
    return tuple(sorted(tuple(sorted(symmetry(r, c) for r, c in piece)) for piece in partition))


def symmetry_classes(catalog: TilingCatalog) -> List[List[int]]:
    """Group catalog indices into classes equivalent under the square's symmetries."""
    classes: Dict[Tuple, List[int]] = {}
    for tiling in catalog.tilings:
        pieces = [piece.cells for piece in tiling.tetrominoes]
        key = min(_partition_key(pieces, sym) for sym in BOARD_SYMMETRIES)
        classes.setdefault(key, []).append(tiling.index)
    return list(classes.values())


def free_shape_names(catalog: TilingCatalog) -> List[str]:
    """Names of the free tetrominoes occurring among the catalog's pieces."""
    lookup = {}
    for name, shape in FIXED_TETROMINOES:
        for sym in BOARD_SYMMETRIES:
            lookup[_canonical(sym(r, c) for r, c in shape)] = name
    found = {lookup[_canonical(piece.cells)] for tiling in catalog.tilings for piece in tiling.tetrominoes}
    return sorted(found)


def format_catalog(catalog: TilingCatalog) -> List[str]:
    """One line per tiling: index, then the tetromino id of each cell in row-major order."""
    return [f"{tiling.index} {''.join(str(s) for s in tiling.labels())}" for tiling in catalog.tilings]


def haar_tetromino(values: Sequence[float]) -> Tuple[float, Tuple[float, float, float]]:
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (4,):
        raise ValueError(f"haar_tetromino expects 4 values, got shape {v.shape}")
    out = HAAR_MATRIX @ v
    return float(out[0]), (float(out[1]), float(out[2]), float(out[3]))


def inverse_haar_tetromino(lowpass: float, details: Sequence[float]) -> np.ndarray:
    return HAAR_MATRIX.T @ np.array([lowpass, *details], dtype=np.float64)


def _analyze_blocks(
    blocks: np.ndarray,
    gather: np.ndarray,
    fixed_tiling: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised block analysis.

    blocks: (n, 16) row-major 4x4 blocks. Returns the chosen tiling per block
    and its coefficients shaped (n, 4 tetrominoes, 4 [low, d1, d2, d3]).
    """
    n = blocks.shape[0]
    if fixed_tiling is not None:
        choice = np.full(n, fixed_tiling, dtype=np.intp)
        pieces = blocks[:, gather[fixed_tiling]]
        return choice, pieces @ HAAR_MATRIX.T

    choice = np.empty(n, dtype=np.intp)
    coeffs = np.empty((n, 4, 4))
    chunk = max(1, settings.BLOCK_CHUNK)
    for start in range(0, n, chunk):
        part = blocks[start:start + chunk]
        # (m, 117, 4, 4): tiling, tetromino, Haar row
        all_coeffs = part[:, gather] @ HAAR_MATRIX.T
        costs = np.abs(all_coeffs[..., 1:]).sum(axis=(2, 3))
        # argmin returns the first minimum, i.e. the smallest catalog index on ties
        best = np.argmin(costs, axis=1)
        choice[start:start + chunk] = best
        coeffs[start:start + chunk] = all_coeffs[np.arange(part.shape[0]), best]
    return choice, coeffs


def tiling_cost(block: np.ndarray, tiling: Tiling) -> float:
    """l1 norm of the twelve detail coefficients of ``block`` under ``tiling``."""
    flat = np.asarray(block, dtype=np.float64).reshape(16)
    total = 0.0
    for piece in tiling.tetrominoes:
        _, details = haar_tetromino(flat[list(piece.flat_indices)])
        total += sum(abs(d) for d in details)
    return total


def analyze_block(block, catalog: Optional[TilingCatalog] = None) -> Tuple[int, np.ndarray, np.ndarray]:
    catalog = catalog or enumerate_tilings()
    arr = np.asarray(block, dtype=np.float64)
    if arr.shape != (4, 4):
        raise ValueError(f"analyze_block expects a 4x4 block, got shape {arr.shape}")
    choice, coeffs = _analyze_blocks(arr.reshape(1, 16), catalog.gather_table())
    lowpass = coeffs[0, :, 0].copy()
    details = coeffs[0, :, 1:].reshape(12).copy()
    return int(choice[0]), lowpass, details


def _pixels(img: Union[GrayImage, np.ndarray]) -> np.ndarray:
    return img.pixels if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)


def _to_blocks(x: np.ndarray) -> np.ndarray:
    h, w = x.shape
    return x.reshape(h // 4, 4, w // 4, 4).transpose(0, 2, 1, 3).reshape(-1, 16)


def _from_blocks(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    return blocks.reshape(h // 4, w // 4, 4, 4).transpose(0, 2, 1, 3).reshape(h, w)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def forward(
    img: Union[GrayImage, np.ndarray],
    J: int,
    catalog: Optional[TilingCatalog] = None,
    fixed_tiling: Optional[int] = None,
) -> TetroletDecomposition:
    """J-level tetrolet decomposition; level 1 is the finest."""
    x = _pixels(img)
    if J < 1:
        raise ValueError(f"level count must be positive, got {J}")
    factor = 2 ** (J + 1)
    h, w = x.shape
    if h % factor or w % factor:
        raise DimensionNotDivisible(
            f"image {w}x{h} is not divisible by {factor} as required for {J} levels"
        )
    if fixed_tiling is not None and not 0 <= fixed_tiling < CATALOG_SIZE:
        raise IndexOutOfRange(f"tiling index {fixed_tiling} outside 0..{CATALOG_SIZE - 1}")

    catalog = catalog or enumerate_tilings()
    gather = catalog.gather_table()
    levels = []
    current = x
    for level in range(1, J + 1):
        h, w = current.shape
        choice, coeffs = _analyze_blocks(_to_blocks(current), gather, fixed_tiling)
        # tetromino s of block (I, J) goes to (2I + s // 2, 2J + s % 2)
        planes = coeffs.reshape(h // 4, w // 4, 2, 2, 4).transpose(0, 2, 1, 3, 4).reshape(h // 2, w // 2, 4)
        lowpass = np.ascontiguousarray(planes[..., 0])
        details = tuple(_readonly(np.ascontiguousarray(planes[..., l])) for l in (1, 2, 3))
        levels.append(
            TetroletLevel(
                lowpass=_readonly(lowpass),
                details=details,
                tiling_choice=_readonly(choice.reshape(h // 4, w // 4)),
            )
        )
        logger.debug(
            f"Level {level}: {h}x{w} -> {h // 2}x{w // 2}, "
            f"{np.count_nonzero(choice)} of {choice.size} blocks left the square tiling"
        )
        current = lowpass
    return TetroletDecomposition(levels=tuple(levels))


def _validate(dec: TetroletDecomposition) -> None:
    if not dec.levels:
        raise MalformedDecomposition("decomposition has no levels")
    for j, level in enumerate(dec.levels, start=1):
        shape = level.lowpass.shape
        if level.lowpass.ndim != 2 or shape[0] % 2 or shape[1] % 2:
            raise MalformedDecomposition(f"level {j}: low-pass shape {shape} is not even 2-D")
        if len(level.details) != 3 or any(np.shape(d) != shape for d in level.details):
            raise MalformedDecomposition(f"level {j}: detail shapes do not match low-pass {shape}")
        tiles = np.asarray(level.tiling_choice)
        if tiles.shape != (shape[0] // 2, shape[1] // 2):
            raise MalformedDecomposition(f"level {j}: tiling_choice shape {tiles.shape} does not match {shape}")
        if tiles.size and (
            not np.issubdtype(tiles.dtype, np.integer) or tiles.min() < 0 or tiles.max() >= CATALOG_SIZE
        ):
            raise MalformedDecomposition(f"level {j}: tiling index outside 0..{CATALOG_SIZE - 1}")
        if j > 1 and level.input_shape != dec.levels[j - 2].lowpass.shape:
            raise MalformedDecomposition(
                f"level {j}: input shape {level.input_shape} differs from level {j - 1} low-pass"
            )


def inverse(dec: TetroletDecomposition, catalog: Optional[TilingCatalog] = None) -> GrayImage:
    """Rebuild the image from the final low-pass, the details and the stored tilings."""
    _validate(dec)
    gather = (catalog or enumerate_tilings()).gather_table()
    current = np.asarray(dec.final_lowpass, dtype=np.float64)
    for level in reversed(dec.levels):
        h, w = current.shape
        planes = np.stack([current, *[np.asarray(d, dtype=np.float64) for d in level.details]], axis=-1)
        coeffs = planes.reshape(h // 2, 2, w // 2, 2, 4).transpose(0, 2, 1, 3, 4).reshape(-1, 4, 4)
        values = coeffs @ HAAR_MATRIX
        idx = gather[np.asarray(level.tiling_choice).reshape(-1)].reshape(-1, 16)
        blocks = np.empty((idx.shape[0], 16))
        blocks[np.arange(idx.shape[0])[:, None], idx] = values.reshape(-1, 16)
        current = _from_blocks(blocks, 2 * h, 2 * w)
    return GrayImage(pixels=current)


def subband(dec: TetroletDecomposition, level: int, detail_index: int) -> np.ndarray:
    if not 1 <= level <= dec.J:
        raise IndexOutOfRange(f"level {level} outside 1..{dec.J}")
    if not 1 <= detail_index <= 3:
        raise IndexOutOfRange(f"detail index {detail_index} outside 1..3")
    return dec.levels[level - 1].details[detail_index - 1]


def band_ids(J: int) -> List[Tuple[int, int]]:
    """Subband addresses in (level, detail_index) lexicographic order."""
    return [(level, detail) for level in range(1, J + 1) for detail in (1, 2, 3)]
