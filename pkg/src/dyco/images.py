"""Binary PPM/PGM image I/O plus an optional PNG writer via Pillow."""

import numpy as np

from .errors import CorruptFile


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)


def write_ppm(path, img: np.ndarray) -> None:
    """8-bit binary P6; img is (H, W, 3) float in [0, 1]."""
    data = to_uint8(img)
    h, w, _ = data.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(data.tobytes())


def write_pgm(path, mask: np.ndarray) -> None:
    """8-bit binary P5; boolean masks map to {0, 255}."""
    m = np.asarray(mask)
    data = (m.astype(np.uint8) * 255) if m.dtype == bool else to_uint8(m)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(data.tobytes())


def _read_pnm_header(f, magic):
    if f.read(2) != magic:
        raise CorruptFile("not a binary PNM file")
    fields = []
    while len(fields) < 3:
        line = f.readline()
        if not line:
            raise CorruptFile("truncated PNM header")
        text = line.split(b"#")[0]
        fields.extend(int(tok) for tok in text.split())
    w, h, maxval = fields[:3]
    if maxval != 255:
        raise CorruptFile("only 8-bit PNM supported")
    return w, h


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        w, h = _read_pnm_header(f, b"P6")
        buf = f.read(w * h * 3)
        if len(buf) != w * h * 3:
            raise CorruptFile(f"{path}: truncated pixel data")
        return np.frombuffer(buf, dtype=np.uint8).reshape(h, w, 3) / 255.0


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        w, h = _read_pnm_header(f, b"P5")
        buf = f.read(w * h)
        if len(buf) != w * h:
            raise CorruptFile(f"{path}: truncated pixel data")
        return np.frombuffer(buf, dtype=np.uint8).reshape(h, w) / 255.0


def write_png(path, img: np.ndarray) -> None:
    """Lossless PNG via Pillow (optional dependency)."""
    try:
        from PIL import Image
    except ImportError as e:
        raise RuntimeError("PNG output requires Pillow (pip install Pillow)") from e
    Image.fromarray(to_uint8(img)).save(path, format="PNG")


def read_image(path) -> np.ndarray:
    """Read PPM/PGM natively, other formats through Pillow."""
    name = str(path)
    if name.endswith(".ppm"):
        return read_ppm(path)
    if name.endswith(".pgm"):
        return read_pgm(path)
    try:
        from PIL import Image
    except ImportError as e:
        raise RuntimeError(f"reading {name} requires Pillow") from e
    return np.asarray(Image.open(path), dtype=np.float64) / 255.0
