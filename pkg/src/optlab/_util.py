import os
import tempfile
import zlib
from pathlib import Path

import numpy as np


def derive_seed(root: int, label: str) -> int:
    """Child seed for one consumer of randomness (sampling, noise, split...).

    Deterministic in ``(root, label)`` and independent across labels.
    """
    seq = np.random.SeedSequence(entropy=int(root), spawn_key=(zlib.crc32(label.encode()),))
    hi, lo = seq.generate_state(2, dtype=np.uint32)
    return ((int(hi) << 32) | int(lo)) & ((1 << 63) - 1)


def atomic_write(path, data) -> Path:
    """Write text or bytes to ``path`` through a temp file + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt_float(x: float) -> str:
    """Round-trip representation with 17 significant digits."""
    return "%.17g" % x


def thread_cap() -> int:
    """Parallelism limit from ``OPTLAB_THREADS`` (default 1)."""
    raw = os.environ.get("OPTLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
