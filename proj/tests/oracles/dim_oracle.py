"""Independent log-density oracle for the imitative model, written with torch.

Builds a tiny model from a seeded parameter vector laid out in the same block
order as the C++ registry, evaluates log q(S | phi) for one sample and writes
everything needed to replay it to tests/data/dim_oracle_t2.txt.
"""
import math
import pathlib
import sys

import numpy as np
import torch

TAU, HORIZON, GRID, E, M, H, SIGMA_MIN = 1, 2, 8, 3, 4, 3, 1e-3
CH, POOLED, LAM = 2, 8, 6


def blocks():
    merge_in = E + LAM + 2 * (TAU + 1)
    return [
        ("encoder.0.weight", E, POOLED * POOLED * CH), ("encoder.0.bias", E, 1),
        ("encoder.1.weight", E, E), ("encoder.1.bias", E, 1),
        ("merger.weight", M, merge_in), ("merger.bias", M, 1),
        ("decoder.gru.weight_ih", 3 * H, M + 2), ("decoder.gru.bias_ih", 3 * H, 1),
        ("decoder.gru.weight_hh", 3 * H, H), ("decoder.gru.bias_hh", 3 * H, 1),
        ("decoder.mu.weight", 2, H), ("decoder.mu.bias", 2, 1),
        ("decoder.rho.weight", 2, H), ("decoder.rho.bias", 2, 1),
    ]


def unpack(flat):
    out, off = {}, 0
    for name, r, c in blocks():
        t = torch.tensor(flat[off:off + r * c], dtype=torch.float64)
        out[name] = t.reshape(r, c) if c > 1 else t
        off += r * c
    return out


def log_q(p, grid, lam, past, future):
    g = torch.tensor(grid, dtype=torch.float64).reshape(GRID, GRID, CH).permute(2, 0, 1)
    pooled = torch.nn.functional.adaptive_avg_pool2d(g.unsqueeze(0), POOLED)[0]
    pooled = pooled.permute(1, 2, 0).reshape(-1)  # (row, col, channel) order
    e = torch.tanh(p["encoder.0.weight"] @ pooled + p["encoder.0.bias"])
    e = torch.tanh(p["encoder.1.weight"] @ e + p["encoder.1.bias"])
    x = torch.cat([e, torch.tensor(lam, dtype=torch.float64), torch.tensor(past, dtype=torch.float64)])
    ctx = torch.tanh(p["merger.weight"] @ x + p["merger.bias"])

    cell = torch.nn.GRUCell(M + 2, H).double()
    with torch.no_grad():
        cell.weight_ih.copy_(p["decoder.gru.weight_ih"])
        cell.bias_ih.copy_(p["decoder.gru.bias_ih"])
        cell.weight_hh.copy_(p["decoder.gru.weight_hh"])
        cell.bias_hh.copy_(p["decoder.gru.bias_hh"])

    S = torch.tensor(future, dtype=torch.float64).reshape(HORIZON, 2)
    h = torch.zeros(1, H, dtype=torch.float64)
    prev = torch.zeros(2, dtype=torch.float64)
    total = 0.0
    for t in range(HORIZON):
        h = cell(torch.cat([ctx, prev]).unsqueeze(0), h)
        mu = prev + p["decoder.mu.weight"] @ h[0] + p["decoder.mu.bias"]
        sigma = SIGMA_MIN + torch.nn.functional.softplus(p["decoder.rho.weight"] @ h[0] + p["decoder.rho.bias"])
        dist = torch.distributions.Normal(mu, sigma)
        total += dist.log_prob(S[t]).sum().item()
        prev = S[t]
    return total


def main():
    rng = np.random.default_rng(20240611)
    n = sum(r * c for _, r, c in blocks())
    flat = rng.uniform(-0.6, 0.6, n)
    grid = (rng.random(GRID * GRID * CH) < 0.3).astype(np.float64)
    lam = [3.7, 1.0, 0.0, 0.0, 0.0, 1.0]
    past = [-1.5, 0.1, 0.0, 0.0]
    future = [1.2, 0.05, 2.3, -0.1]
    with torch.no_grad():
        lq = log_q(unpack(flat), grid, lam, past, future)

    def row(vals):
        return " ".join("%.17g" % v for v in vals)

    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent.parent / "data" / "dim_oracle_t2.txt")
    out.write_text(
        f"config {TAU} {HORIZON} {GRID} {E} {M} {H} {SIGMA_MIN!r}\n"
        f"params {n} {row(flat)}\n"
        f"grid {len(grid)} {row(grid)}\n"
        f"lambda {len(lam)} {row(lam)}\n"
        f"past {len(past)} {row(past)}\n"
        f"future {len(future)} {row(future)}\n"
        f"log_q {lq:.17g}\n")
    print(out, lq)
    assert math.isfinite(lq)


if __name__ == "__main__":
    main()
