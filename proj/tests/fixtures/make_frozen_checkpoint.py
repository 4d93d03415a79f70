#!/usr/bin/env python3
"""Writes tests/fixtures/frozen_checkpoint: a 1-layer model whose k-th flattened weight is (k % 17 - 8) / 16,
stored as little-endian float32 regardless of the host byte order."""

import json
import pathlib
import struct

V, E, H = 6, 2, 2
shapes = [("embedding", [V, E]), ("lstm0.w_input", [E, 4 * H]), ("lstm0.w_recurrent", [H, 4 * H]),
          ("lstm0.bias", [4 * H]), ("output.weight", [H, V]), ("output.bias", [V])]

out = pathlib.Path(__file__).with_name("frozen_checkpoint")
out.mkdir(exist_ok=True)
registry, blob, k = [], b"", 0
for name, shape in shapes:
    n = 1
    for d in shape:
        n *= d
    registry.append({"name": name, "shape": shape, "offset": len(blob)})
    for _ in range(n):
        blob += struct.pack("<f", (k % 17 - 8) / 16)
        k += 1
manifest = {
    "format": "newsgen-lstm-lm", "version": 1, "dtype": "float32-le",
    "config": {"vocab_size": V, "embed_dim": E, "layers": 1, "units": H, "seq_len": 4, "batch_size": 1,
               "learning_rate": 0.1, "momentum": 0.9, "grad_clip": 5.0, "init_scale": 0.05, "seed": 0},
    "step_count": 42, "total_bytes": len(blob), "tensors": registry,
}
(out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
(out / "weights.bin").write_bytes(blob)
