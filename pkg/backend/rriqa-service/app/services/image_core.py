"""Image I/O, geometry normalisation and synthetic distortions."""
import math
import re
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from scipy import ndimage

from app.core.errors import CorruptFile, EmptyImage, ImageTooSmall, InvalidSigma, UnsupportedFormat
from app.core.logger import Logger
from app.schemas.image import GrayImage

logger = Logger("image_core").get_logger()

# Rec. 601 luma weights
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_TOKEN = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments; return them and the payload offset."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        m = _TOKEN.match(data, pos)
        if m is None:
            raise CorruptFile("truncated PGM header")
        tokens.append(m.group(2))
        pos = m.end()
    return tokens, pos


def _parse_pgm(data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise UnsupportedFormat(f"unsupported magic {magic!r}; expected P2 or P5")
    try:
        tokens, pos = _header_tokens(data, 4)
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as e:
        raise CorruptFile(f"bad PGM header: {e}")
    if width == 0 or height == 0:
        raise EmptyImage(f"image has zero size {width}x{height}")
    if width < 0 or height < 0 or not 0 < maxval < 65536:
        raise CorruptFile(f"bad PGM header values width={width}, height={height}, maxval={maxval}")
    n = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        start = pos + 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raster = data[start:start + n * dtype.itemsize]
        if len(raster) < n * dtype.itemsize:
            raise CorruptFile(f"truncated raster: expected {n * dtype.itemsize} bytes, got {len(raster)}")
        values = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    else:
        words = data[pos:].split()
        if len(words) < n:
            raise CorruptFile(f"truncated raster: expected {n} samples, got {len(words)}")
        try:
            values = np.array([int(w) for w in words[:n]], dtype=np.float64)
        except ValueError as e:
            raise CorruptFile(f"non-numeric sample in P2 raster: {e}")

    if values.max(initial=0) > maxval:
        raise CorruptFile(f"sample exceeds maxval {maxval}")
    if maxval != 255:
        values = values * 255.0 / maxval
    return values.reshape(height, width)


def _load_png(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im)
        mode = im.mode
    arr = arr.astype(np.float64)
    if mode in ("I;16", "I;16B", "I"):
        arr = arr * 255.0 / 65535.0
    if arr.ndim == 3:
        arr = arr[..., :3] @ LUMA_WEIGHTS
    return arr


def load_image(path: Union[str, Path]) -> GrayImage:
    path = Path(path)
    data = path.read_bytes()
    if not data:
        raise EmptyImage(f"{path} is empty")
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        try:
            pixels = _load_png(path)
        except ImportError:
            raise UnsupportedFormat("PNG input requires Pillow")
        except OSError as e:
            raise CorruptFile(f"unreadable PNG {path}: {e}")
    elif data[:1] == b"P":
        pixels = _parse_pgm(data)
    else:
        raise UnsupportedFormat(f"{path}: unrecognised image signature {data[:2]!r}")
    if pixels.size == 0:
        raise EmptyImage(f"{path} has no samples")
    logger.debug(f"Loaded {path} ({pixels.shape[1]}x{pixels.shape[0]})")
    return GrayImage(pixels=pixels)


def save_image(img: GrayImage, path: Union[str, Path]) -> Path:
    """Write an 8-bit image: binary PGM (P5), or PNG when the suffix is .png."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raster = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8)
    if path.suffix.lower() == ".png":
        from PIL import Image

        Image.fromarray(raster).save(path)
    else:
        header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
        path.write_bytes(header + raster.tobytes())
    logger.info(f"Wrote {img.width}x{img.height} image to {path}")
    return path


def crop_to_multiple(img: GrayImage, m: int) -> GrayImage:
    """Centred crop to the largest multiples of ``m``; offsets floor((dim mod m) / 2)."""
    if m < 1:
        raise ValueError(f"crop multiple must be positive, got {m}")
    if img.width < m or img.height < m:
        raise ImageTooSmall(f"image {img.width}x{img.height} is smaller than {m}x{m}")
    w = img.width - img.width % m
    h = img.height - img.height % m
    x0 = (img.width % m) // 2
    y0 = (img.height % m) // 2
    if (w, h) == (img.width, img.height):
        return img
    return GrayImage(pixels=img.pixels[y0:y0 + h, x0:x0 + w])


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian of radius ceil(3 sigma)."""
    radius = int(math.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (t / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(img: GrayImage, sigma: float) -> GrayImage:
    if not math.isfinite(sigma) or sigma <= 0:
        raise InvalidSigma(f"blur sigma must be positive and finite, got {sigma}")
    kernel = gaussian_kernel(sigma)
    # mode="reflect" mirrors about the edge, repeating the border sample
    out = ndimage.convolve1d(img.pixels, kernel, axis=0, mode="reflect")
    out = ndimage.convolve1d(out, kernel, axis=1, mode="reflect")
    return GrayImage(pixels=out)


def add_white_noise(img: GrayImage, sigma: float, seed: int) -> GrayImage:
    """Add seeded i.i.d. N(0, sigma^2) noise and clip to [0, 255]."""
    if sigma == 0:
        return img
    if not math.isfinite(sigma) or sigma < 0:
        raise InvalidSigma(f"noise sigma must be non-negative and finite, got {sigma}")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=img.pixels.shape)
    return GrayImage(pixels=np.clip(img.pixels + noise, 0.0, 255.0))
