"""Straight-line reference for the composite CycleGAN loss on tiny networks.

Pure-Python loops, no array library. Networks are 4->3->3->4 generators and
4->3->3->1 discriminators with y = x W^T + b per layer. Writes weights,
batches and the expected terms for several random instances.

Run: python3 tests/oracles/cyclegan_terms.py > tests/data/cyclegan_terms.json
"""
import json
import math
import random

F, H = 4, 3
LAMBDA_CYC, LAMBDA_ID = 10.0, 0.5


def rand_matrix(rng, rows, cols, lo=-0.8, hi=0.8):
    return [[rng.uniform(lo, hi) for _ in range(cols)] for _ in range(rows)]


def rand_net(rng, out_dim):
    dims = [(F, H), (H, H), (H, out_dim)]
    return [
        {"weight": rand_matrix(rng, o, i), "bias": [rng.uniform(-0.3, 0.3) for _ in range(o)]}
        for i, o in dims
    ]


def relu(v):
    return v if v > 0.0 else 0.0


def sigmoid(v):
    return 1.0 / (1.0 + math.exp(-v))


def run(net, acts, x):
    out = []
    for row in x:
        h = row
        for layer, act in zip(net, acts):
            z = []
            for w_row, b in zip(layer["weight"], layer["bias"]):
                s = b
                for wv, hv in zip(w_row, h):
                    s += wv * hv
                z.append(s)
            h = [act(v) for v in z]
        out.append(h)
    return out


def gen(net, x):
    return run(net, [relu, relu, math.tanh], x)


def disc(net, x):
    return run(net, [relu, relu, sigmoid], x)


def mse_to(pred, target):
    n = 0
    s = 0.0
    for row in pred:
        for v in row:
            s += (v - target) ** 2
            n += 1
    return s / n


def l1(pred, target):
    n = 0
    s = 0.0
    for pr, tr in zip(pred, target):
        for p, t in zip(pr, tr):
            s += abs(p - t)
            n += 1
    return s / n


def instance(rng):
    nets = {"g_a": rand_net(rng, F), "g_b": rand_net(rng, F), "d_a": rand_net(rng, 1), "d_b": rand_net(rng, 1)}
    a = rand_matrix(rng, 5, F, -0.9, 0.9)
    b = rand_matrix(rng, 6, F, -0.9, 0.9)
    fake_real = gen(nets["g_a"], a)
    fake_synth = gen(nets["g_b"], b)
    terms = {
        "gan_a": mse_to(disc(nets["d_a"], fake_real), 1.0),
        "gan_b": mse_to(disc(nets["d_b"], fake_synth), 1.0),
        "cyc_a": l1(gen(nets["g_b"], fake_real), a),
        "cyc_b": l1(gen(nets["g_a"], fake_synth), b),
        "id_a": l1(gen(nets["g_b"], a), a),
        "id_b": l1(gen(nets["g_a"], b), b),
    }
    terms["total"] = (terms["gan_a"] + terms["gan_b"]
                      + LAMBDA_CYC * (terms["cyc_a"] + terms["cyc_b"])
                      + LAMBDA_ID * (terms["id_a"] + terms["id_b"]))
    d_a = 0.5 * (mse_to(disc(nets["d_a"], b), 1.0) + mse_to(disc(nets["d_a"], fake_real), 0.0))
    d_b = 0.5 * (mse_to(disc(nets["d_b"], a), 1.0) + mse_to(disc(nets["d_b"], fake_synth), 0.0))
    return {"nets": nets, "a": a, "b": b, "terms": terms, "d_a": d_a, "d_b": d_b}


def main():
    rng = random.Random(20240611)
    out = {"lambda_cyc": LAMBDA_CYC, "lambda_id": LAMBDA_ID, "instances": [instance(rng) for _ in range(5)]}
    print(json.dumps(out))


if __name__ == "__main__":
    main()
