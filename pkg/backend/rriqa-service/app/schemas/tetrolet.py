from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

Cell = Tuple[int, int]

CATALOG_SIZE = 117


class Tetromino(BaseModel):
    """Four edge-connected cells of a 4x4 block, kept in (row, col) order.

    The position of a cell in ``cells`` is its slot in the length-4 Haar
    analysis vector.
    """

    model_config = ConfigDict(frozen=True)

    cells: Tuple[Cell, Cell, Cell, Cell]

    @field_validator("cells", mode="before")
    @classmethod
    def _sorted_cells(cls, value):
        return tuple(sorted(tuple(int(v) for v in cell) for cell in value))

    @field_validator("cells")
    @classmethod
    def _check_cells(cls, cells):
        if len(set(cells)) != 4:
            raise ValueError("tetromino cells must be distinct")
        if any(not (0 <= r <= 3 and 0 <= c <= 3) for r, c in cells):
            raise ValueError("tetromino cells must lie in 0..3 x 0..3")
        seen = {cells[0]}
        frontier = [cells[0]]
        while frontier:
            r, c = frontier.pop()
            for nb in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
                if nb in cells and nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        if len(seen) != 4:
            raise ValueError("tetromino cells must be edge-connected")
        return cells

    @property
    def flat_indices(self) -> Tuple[int, int, int, int]:
        return tuple(4 * r + c for r, c in self.cells)


class Tiling(BaseModel):
    model_config = ConfigDict(frozen=True)

    tetrominoes: Tuple[Tetromino, Tetromino, Tetromino, Tetromino]
    index: int

    @model_validator(mode="after")
    def _check_partition(self):
        if not 0 <= self.index < CATALOG_SIZE:
            raise ValueError(f"tiling index {self.index} outside 0..{CATALOG_SIZE - 1}")
        covered = [cell for piece in self.tetrominoes for cell in piece.cells]
        if sorted(covered) != [(r, c) for r in range(4) for c in range(4)]:
            raise ValueError("tetrominoes must cover the 4x4 block exactly once")
        return self

    def labels(self) -> List[int]:
        """Tetromino id (0..3) of every cell in row-major order."""
        out = [0] * 16
        for s, piece in enumerate(self.tetrominoes):
            for r, c in piece.cells:
                out[4 * r + c] = s
        return out

    def partition(self) -> frozenset:
        return frozenset(frozenset(piece.cells) for piece in self.tetrominoes)


class TilingCatalog(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tilings: Tuple[Tiling, ...]

    @model_validator(mode="after")
    def _check_catalog(self):
        if len(self.tilings) != CATALOG_SIZE:
            raise ValueError(f"catalog must hold {CATALOG_SIZE} tilings, got {len(self.tilings)}")
        if len({t.partition() for t in self.tilings}) != CATALOG_SIZE:
            raise ValueError("catalog tilings must be distinct partitions")
        if any(t.index != i for i, t in enumerate(self.tilings)):
            raise ValueError("tiling index must equal catalog position")
        return self

    def __len__(self) -> int:
        return len(self.tilings)

    def __getitem__(self, index: int) -> Tiling:
        return self.tilings[index]

    def gather_table(self) -> np.ndarray:
        """(117, 4, 4) flat block indices: tiling, tetromino s, cell slot."""
        return np.array(
            [[piece.flat_indices for piece in tiling.tetrominoes] for tiling in self.tilings],
            dtype=np.intp,
        )


class TetroletLevel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lowpass: np.ndarray
    details: Tuple[np.ndarray, np.ndarray, np.ndarray]
    tiling_choice: np.ndarray

    @property
    def input_shape(self) -> Tuple[int, int]:
        h, w = self.lowpass.shape
        return 2 * h, 2 * w


class TetroletDecomposition(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    levels: Tuple[TetroletLevel, ...]

    @property
    def J(self) -> int:
        return len(self.levels)

    @property
    def final_lowpass(self) -> np.ndarray:
        return self.levels[-1].lowpass
