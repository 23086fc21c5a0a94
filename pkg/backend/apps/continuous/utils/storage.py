"""
Binary persistence of sample batches.

Layout: one little-endian header record (θ, N, k, a−, a+, count, seed), then
float64 values level-major: the (count, N) block of top-level particles,
then the (count, N−1) block, down to level k. A ``.json`` sidecar next to the
file carries the potential and the chain diagnostics.
"""

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from .sampler import SampleBatch
from .spec import ContinuousSpec, ContinuousSpecError

logger = logging.getLogger(__name__)

HEADER = np.dtype(
    [
        ("theta", "<f8"),
        ("N", "<i8"),
        ("k", "<i8"),
        ("a_minus", "<f8"),
        ("a_plus", "<f8"),
        ("count", "<i8"),
        ("seed", "<u8"),
    ]
)


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_batch(batch: SampleBatch, path: Union[str, Path]) -> Path:
    """Write the batch and its sidecar; returns the binary path."""
    spec = batch.spec
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array(
        [(spec.theta, spec.N, spec.k, spec.a_minus, spec.a_plus, len(batch), batch.seed)],
        dtype=HEADER,
    )
    with path.open("wb") as handle:
        handle.write(header.tobytes())
        for j in spec.levels:
            handle.write(np.ascontiguousarray(batch.level(j), dtype="<f8").tobytes())

    sidecar = {
        "potential": list(spec.potential),
        "diagnostics": batch.diagnostics(),
    }
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    logger.info(f"Wrote {len(batch)} samples to {path}")
    return path


def read_batch(path: Union[str, Path]) -> SampleBatch:
    """
    Load a batch written by ``write_batch``.

    Raises:
        ContinuousSpecError: if the file is truncated or has trailing bytes, or
            its sidecar is missing or lacks the potential
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER.itemsize:
        raise ContinuousSpecError(f"{path} is too short for a sample header")
    header = np.frombuffer(raw[:HEADER.itemsize], dtype=HEADER)[0]

    sidecar_file = sidecar_path(path)
    if not sidecar_file.exists():
        raise ContinuousSpecError(f"{path} has no sidecar {sidecar_file.name}; the potential is unknown")
    sidecar = json.loads(sidecar_file.read_text())
    if "potential" not in sidecar:
        raise ContinuousSpecError(f"{sidecar_file} does not record the potential")
    diagnostics = sidecar.get("diagnostics", {})
    spec = ContinuousSpec(
        float(header["theta"]),
        int(header["N"]),
        int(header["k"]),
        float(header["a_minus"]),
        float(header["a_plus"]),
        tuple(sidecar["potential"]),
    )
    count = int(header["count"])
    expected = HEADER.itemsize + 8 * count * spec.dimension
    if len(raw) != expected:
        raise ContinuousSpecError(f"{path} holds {len(raw)} bytes, expected {expected}")

    body = np.frombuffer(raw[HEADER.itemsize:], dtype="<f8")
    blocks, position = [], 0
    for j in spec.levels:
        blocks.append(body[position:position + count * j].reshape(count, j))
        position += count * j
    extra = {key: value for key, value in diagnostics.items() if key in ("step", "grid_points", "thin")}
    return SampleBatch(
        spec=spec,
        samples=np.concatenate(blocks, axis=1).astype(float),
        seed=int(header["seed"]),
        chains=int(diagnostics.get("chains", 1)),
        burn_in=int(diagnostics.get("burn_in", 0)),
        acceptance_rate=float(diagnostics.get("acceptance_rate", float("nan"))),
        autocorrelation=float(diagnostics.get("autocorrelation", float("nan"))),
        extra=extra,
    )
