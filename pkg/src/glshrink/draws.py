"""Container for retained posterior draws and its on-disk formats."""
from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = ["DrawMatrix", "BINARY_MAGIC"]

#: first eight bytes of the binary layout
BINARY_MAGIC = b"GLSDRAW1"
# magic, n_chains, n_iter, n_param, has_psi flag, length of the JSON meta blob
_HEADER = struct.Struct("<8sIIIIQ")


@dataclass(eq=False)
class DrawMatrix:
    """Posterior draws indexed ``(chain, iteration, parameter)``.

    Attributes
    ----------
    draws : ndarray, shape (n_chains, n_iter, p)
        Retained theta draws.
    functional_draws : ndarray, shape (n_chains, n_iter), optional
        Draws of the derived quantity psi. Infinite values are allowed only
        when ``functional_kind`` is ``"ratio"``.
    meta : dict
        Sampler name, seeds, warmup length, acceptance rates and warnings.
    """

    draws: np.ndarray
    functional_draws: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    functional_kind: str | None = None

    def __post_init__(self):
        d = np.asarray(self.draws, dtype=float)
        if d.ndim != 3:
            raise ValueError(f"draws must be 3-D (chain, iter, param), got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("theta draws contain NaN or Inf")
        self.draws = d
        if self.functional_draws is not None:
            f = np.asarray(self.functional_draws, dtype=float)
            if f.shape != d.shape[:2]:
                raise ValueError(f"functional_draws shape {f.shape} does not match {d.shape[:2]}")
            if self.functional_kind != "ratio" and np.any(np.isinf(f)):
                raise ValueError("infinite psi draws are only allowed for the ratio functional")
            self.functional_draws = f

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_iter(self) -> int:
        return self.draws.shape[1]

    @property
    def n_params(self) -> int:
        return self.draws.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.draws.shape

    def pooled(self) -> np.ndarray:
        """Theta draws with the chains concatenated, shape ``(chains*iter, p)``."""
        return self.draws.reshape(-1, self.n_params)

    def pooled_psi(self) -> np.ndarray:
        if self.functional_draws is None:
            raise ValueError("no functional draws attached")
        return self.functional_draws.reshape(-1)

    # ------------------------------------------------------------------ CSV
    def to_csv(self, include_psi: bool = True) -> str:
        """Long-format CSV ``chain,iter,param,value``.

        Theta components are named ``theta[i]`` and the functional ``psi``.
        Values use ``repr`` so a round trip is exact.
        """
        buf = io.StringIO()
        buf.write("chain,iter,param,value\n")
        names = [f"theta[{j}]" for j in range(self.n_params)]
        with_psi = include_psi and self.functional_draws is not None
        for c in range(self.n_chains):
            for t in range(self.n_iter):
                row = self.draws[c, t]
                for j, name in enumerate(names):
                    buf.write(f"{c},{t},{name},{float(row[j])!r}\n")
                if with_psi:
                    buf.write(f"{c},{t},psi,{float(self.functional_draws[c, t])!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, functional_kind: str | None = None) -> "DrawMatrix":
        lines = text.strip().splitlines()
        if not lines or lines[0].strip() != "chain,iter,param,value":
            raise ValueError("missing header chain,iter,param,value")
        recs = []
        for ln in lines[1:]:
            c, t, name, v = ln.split(",")
            recs.append((int(c), int(t), name, float(v)))
        n_c = 1 + max(r[0] for r in recs)
        n_t = 1 + max(r[1] for r in recs)
        params = sorted({int(r[2][6:-1]) for r in recs if r[2].startswith("theta[")})
        p = len(params)
        theta = np.full((n_c, n_t, p), np.nan)
        psi = None
        if any(r[2] == "psi" for r in recs):
            psi = np.full((n_c, n_t), np.nan)
        for c, t, name, v in recs:
            if name == "psi":
                psi[c, t] = v
            else:
                theta[c, t, int(name[6:-1])] = v
        return cls(theta, psi, {}, functional_kind)

    # --------------------------------------------------------------- binary
    def to_bytes(self) -> bytes:
        """Compact little-endian layout.

        ``GLSDRAW1`` magic, then uint32 chains, iterations, parameters and a
        psi flag, a uint64 length of a UTF-8 JSON metadata blob, the blob,
        the float64 theta block in C order and, if flagged, the psi block.
        """
        meta = dict(self.meta)
        meta["functional_kind"] = self.functional_kind
        blob = json.dumps(meta, sort_keys=True, default=str).encode()
        has_psi = self.functional_draws is not None
        head = _HEADER.pack(BINARY_MAGIC, self.n_chains, self.n_iter, self.n_params, int(has_psi), len(blob))
        parts = [head, blob, np.ascontiguousarray(self.draws, dtype="<f8").tobytes()]
        if has_psi:
            parts.append(np.ascontiguousarray(self.functional_draws, dtype="<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "DrawMatrix":
        if len(data) < _HEADER.size:
            raise ValueError("truncated draw file")
        magic, n_c, n_t, p, has_psi, n_blob = _HEADER.unpack_from(data, 0)
        if magic != BINARY_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        off = _HEADER.size
        meta = json.loads(data[off: off + n_blob].decode())
        off += n_blob
        n = n_c * n_t * p
        expected = off + 8 * n + (8 * n_c * n_t if has_psi else 0)
        if len(data) != expected:
            raise ValueError(f"draw file has {len(data)} bytes, expected {expected}")
        theta = np.frombuffer(data, dtype="<f8", count=n, offset=off).reshape(n_c, n_t, p).copy()
        off += 8 * n
        psi = None
        if has_psi:
            psi = np.frombuffer(data, dtype="<f8", count=n_c * n_t, offset=off).reshape(n_c, n_t).copy()
        kind = meta.pop("functional_kind", None)
        return cls(theta, psi, meta, kind)
