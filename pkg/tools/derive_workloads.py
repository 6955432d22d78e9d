"""Regenerate src/rampsim/data/{megatron,dlrm}.ini from the published model tables.

Compute times are frozen inputs. The public tables give model shapes and
partitioning but not the profiled GPU times, so per-iteration compute is
derived here once, from a FLOP count at a fixed fraction of the A100 peak,
and then shipped as data:

* transformer: 8 * params_per_gpu * tokens_per_replica  (forward, backward,
  activation recompute), sequence length 1024;
* DLRM: 6 * mlp_params * local_batch for the MLPs plus three passes of the
  local embedding traffic through HBM.

Run from the repository root: python3 tools/derive_workloads.py
"""

import math
from pathlib import Path

PEAK = 312e12
MFU = 0.5
HBM = 1555e9
SEQ = 1024
OUT = Path(__file__).resolve().parents[1] / "src" / "rampsim" / "data"

# CE loss, hidden, heads, layers, steps, global batch, params, params/GPU, GPUs, DP, MP, DP msg, MP msg
MEGATRON = [
    ("2.5", 1152, 12, 36, 65.6e3, 2480, 574e6, 574e6, 16, 16, 1, 1.14e9, 0),
    ("2.4", 1536, 16, 40, 70.5e3, 3424, 1.13e9, 1.13e9, 32, 32, 1, 2.27e9, 0),
    ("2.2", 2304, 24, 56, 78.9e3, 4896, 3.57e9, 893e6, 128, 32, 4, 1.78e9, 150e6),
    ("2.0", 4096, 32, 50, 87.5e3, 7168, 10.1e9, 1.2e9, 512, 64, 8, 2.52e9, 268e6),
    ("1.8", 6144, 64, 71, 98.1e3, 10880, 32.2e9, 1e9, 2048, 64, 32, 2.01e9, 402e6),
    ("1.7", 8192, 128, 128, 111e3, 16896, 103.1e9, 811e6, 32768, 256, 128, 1.62e9, 1.11e9),
    ("1.5", 16384, 512, 132, 191e3, 14080, 425.2e9, 843e6, 65536, 128, 512, 1.69e9, 3.69e9),
    ("1.3", 32768, 2048, 160, 3.7e6, 1024, 2.06e12, 1.03e9, 65536, 32, 2048, 2.08e9, 2.15e9),
    ("1.2", 131072, 8192, 52, 68e6, 64, 10.7e12, 1.35e9, 65536, 8, 8192, 2.7e9, 2.15e9),
    ("1.0", 262144, 65536, 90, 2.49e9, 4, 74.2e12, 1.27e9, 65536, 1, 65536, 2.55e9, 2.15e9),
]

# GPUs, tables, rows, sparse feature, partitioned feature, batch/GPU, global batch,
# dense feature, hidden, top layers, bottom layers, params, partitioned params
DLRM = [
    (256, 8, 8e7, 4096, 128, 8192, 65536, 16, 1024, 5, 4, 328e9, 1.3e9),
    (1024, 16, 1.6e8, 8192, 128, 4096, 65536, 16, 1024, 5, 4, 1.3e12, 1.3e9),
    (4096, 32, 3.2e8, 16384, 128, 3072, 65536, 16, 1024, 5, 4, 5.2e12, 1.3e9),
    (16384, 128, 1.28e9, 16384, 128, 512, 65536, 16, 1024, 5, 4, 21e12, 1.3e9),
    (65536, 256, 2.56e9, 16384, 64, 256, 65536, 16, 1024, 5, 4, 41.9e12, 0.7e9),
]


def megatron() -> str:
    out = ["# Transformer-encoder workloads partitioned with tensor (mp) and data (dp) parallelism.",
           "# Generated by tools/derive_workloads.py; compute_s is a frozen input.", ""]
    for ce, h, heads, L, steps, batch, params, ppg, gpus, dp, mp, dpm, mpm in MEGATRON:
        local = batch / dp
        compute = 8 * ppg * local * SEQ / (PEAK * MFU)
        calls = []
        if dp > 1:
            calls.append(f"all-reduce dp {int(dpm)} 1")
        if mp > 1:
            micro = max(1, round(mpm / (SEQ * h * 2)))
            n_micro = math.ceil(local / micro)
            # two all-reduces per layer in forward, recompute and backward
            calls.append(f"all-reduce mp {int(mpm)} {6 * L * n_micro}")
        out += [f"[megatron-ce{ce}]",
                "family = megatron",
                f"description = CE loss {ce}, hidden {h}, {heads} heads, {L} layers, {params:.4g} params",
                f"dp = {dp}", f"mp = {mp}",
                f"compute_s = {compute:.6g}",
                f"compute_source = flop model 8*P*tokens at {MFU:g} of {PEAK:.3g} flop/s",
                f"steps = {int(steps)}",
                "collectives = " + "; ".join(calls) if calls else "collectives =", ""]
    return "\n".join(out)


def dlrm() -> str:
    out = ["# Recommendation-model workloads: sharded embeddings, data-parallel MLPs.",
           "# Generated by tools/derive_workloads.py; compute_s is a frozen input.", ""]
    for gpus, tables, rows, feat, part, bpg, gb, dense, hid, top, bot, params, pparams in DLRM:
        mlp = (top + bot) * hid * hid
        emb_bytes = bpg * tables * feat * 2
        compute = 6 * mlp * bpg / (PEAK * MFU) + 3 * emb_bytes / HBM
        calls = [f"all-to-all all {emb_bytes} 2", f"all-reduce all {mlp * 2} 1"]
        out += [f"[dlrm-{gpus}]",
                "family = dlrm",
                f"description = {tables} tables, {params:.4g} params, batch {bpg}/GPU",
                f"dp = {gpus}", "mp = 1",
                f"compute_s = {compute:.6g}",
                f"compute_source = flop model 6*P_mlp*batch at {MFU:g} of peak plus 3 embedding passes over HBM",
                "steps = 1",
                "collectives = " + "; ".join(calls), ""]
    return "\n".join(out)


if __name__ == "__main__":
    (OUT / "megatron.ini").write_text(megatron())
    (OUT / "dlrm.ini").write_text(dlrm())
