"""Binary PPM (P6) and PGM (P5) image files, 8-bit, maxval 255.

Float images in [0,1] are clipped and rounded on write; reads return
float64 in [0,1]. Headers accept arbitrary whitespace and # comments.
"""

import numpy as np

__all__ = ["write_ppm", "read_ppm", "write_pgm", "read_pgm"]


def _to_bytes(img):
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_ppm(path, img):
    """img is channel-first (3,H,W) float in [0,1]."""
    if img.ndim != 3 or img.shape[0] != 3:
        raise ValueError("PPM wants a (3,H,W) image")
    data = np.moveaxis(_to_bytes(img), 0, 2)  # H,W,3 interleaved
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.shape[2]} {img.shape[1]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_pgm(path, img):
    """img is (H,W) float in [0,1]."""
    if img.ndim != 2:
        raise ValueError("PGM wants an (H,W) image")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(_to_bytes(img).tobytes())


def _read_header(raw, magic):
    if raw[:2] != magic:
        raise ValueError(f"bad magic {raw[:2]!r}; expected {magic!r}")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(raw[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval}")
    return w, h, pos


def read_ppm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    w, h, pos = _read_header(raw, b"P6")
    need = w * h * 3
    data = np.frombuffer(raw[pos : pos + need], dtype=np.uint8)
    if data.size != need:
        raise ValueError("truncated PPM payload")
    return np.moveaxis(data.reshape(h, w, 3), 2, 0).astype(np.float64) / 255.0


def read_pgm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    w, h, pos = _read_header(raw, b"P5")
    need = w * h
    data = np.frombuffer(raw[pos : pos + need], dtype=np.uint8)
    if data.size != need:
        raise ValueError("truncated PGM payload")
    return data.reshape(h, w).astype(np.float64) / 255.0
