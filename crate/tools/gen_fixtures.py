#!/usr/bin/env python3
"""Regenerate the fixture pack under fixtures/.

Produces a synthetic wine-style ordinal dataset (1500 x 11, labels 0..5),
trains one model per supported family on its training split, and records
reference accuracies plus probe inferences computed by the fixed-point
evaluator in this file.

The evaluator is an independent reimplementation of the toolkit's
quantization and integer inference, kept in lockstep by construction: every
floating-point expression is written in the same operation order, so the
quantized weights, scales, shifts, raw outputs, and accuracies must match the
Rust side bit for bit. The test suite holds the toolkit to these numbers with
zero tolerance.

Run from the repository root:

    python3 tools/gen_fixtures.py
"""

import json
import math
from pathlib import Path

import numpy as np
from sklearn.neural_network import MLPClassifier, MLPRegressor
from sklearn.svm import SVC, LinearSVR

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures"

MASK64 = (1 << 64) - 1

DATASET_SEED = 20260815  # numpy seed for raw data generation only
SPLIT_SEED = 7           # shared with the toolkit: shuffling/splitting
SPLIT_RATIO = 0.8
U_BITS, C_BITS, H_BITS = 4, 8, 8
N_SAMPLES = 1500
N_CLASSES = 6

FEATURES = [
    "fixed acidity", "volatile acidity", "citric acid", "residual sugar",
    "chlorides", "free sulfur dioxide", "total sulfur dioxide", "density",
    "pH", "sulphates", "alcohol",
]


# --------------------------------------------------------------------------
# mirrors of the toolkit's deterministic primitives
# --------------------------------------------------------------------------

def round_half_away(x: float) -> int:
    t = math.trunc(x)
    f = x - t
    if f >= 0.5:
        return t + 1
    if f <= -0.5:
        return t - 1
    return t


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def fisher_yates(items, rng: SplitMix64):
    for i in range(len(items) - 1, 0, -1):
        j = rng.next_u64() % (i + 1)
        items[i], items[j] = items[j], items[i]


def ceil_log2(n: int) -> int:
    assert n >= 1
    return (n - 1).bit_length()


def split_normalize(features, labels, ratio: float, seed: int):
    n = len(features)
    order = list(range(n))
    fisher_yates(order, SplitMix64(seed))
    n_train = min(max(round_half_away(n * ratio), 1), n - 1)
    tr_idx, te_idx = order[:n_train], order[n_train:]
    nf = len(features[0])
    mins = [math.inf] * nf
    maxs = [-math.inf] * nf
    for i in tr_idx:
        for j, v in enumerate(features[i]):
            mins[j] = min(mins[j], v)
            maxs[j] = max(maxs[j], v)

    def norm(rows):
        out = []
        for i in rows:
            r = []
            for j, v in enumerate(features[i]):
                if mins[j] == maxs[j]:
                    r.append(0.0)
                else:
                    r.append(max(0.0, min(1.0, (v - mins[j]) / (maxs[j] - mins[j]))))
            out.append(r)
        return out

    return (
        norm(tr_idx), [labels[i] for i in tr_idx],
        norm(te_idx), [labels[i] for i in te_idx],
    )


def quantize_value(v: float, u: int) -> int:
    umax = (1 << u) - 1
    return max(0, min(umax, round_half_away(v * umax)))


def quantize_inputs(rows, u: int):
    return [[quantize_value(v, u) for v in row] for row in rows]


# --------------------------------------------------------------------------
# fixed-point evaluator (quantization + integer inference)
# --------------------------------------------------------------------------

def acc_width(n: int, in_bits: int) -> int:
    return in_bits + C_BITS + ceil_log2(max(n, 1)) + 1


def quantize_sum(weights, intercept: float, input_scale: float, in_bits: int):
    cmax = (1 << (C_BITS - 1)) - 1
    max_w = 0.0
    for w in weights:
        max_w = max(max_w, abs(w))
    s_w = 1.0 if max_w == 0.0 else cmax / max_w
    q = [max(-cmax, min(cmax, round_half_away(w * s_w))) for w in weights]
    width = acc_width(len(weights), in_bits)
    in_max = (1 << in_bits) - 1
    wsum = sum(abs(w) * in_max for w in q)
    budget = ((1 << (width - 1)) - 1) - wsum
    scale = s_w * input_scale
    b = max(-budget, min(budget, round_half_away(intercept * scale)))
    return {"weights": q, "intercept": b, "scale": scale}


def max_abs_acc(s, in_max: int) -> int:
    return sum(abs(w) * in_max for w in s["weights"]) + abs(s["intercept"])


def requant_shift(max_acc: int, h: int) -> int:
    hmax = (1 << h) - 1
    t = 0
    while (max_acc >> t) > hmax:
        t += 1
    return t


def quantize_model(model: dict):
    u_scale = float((1 << U_BITS) - 1)
    q = {"kind": model["kind"], "layers": [], "classifiers": [], "output_scale": None}
    if model["kind"].startswith("mlp"):
        in_bits = U_BITS
        in_scales = [u_scale] * len(model["layers"][0]["weights"][0])
        for layer in model["layers"]:
            folded = [
                [w / s * u_scale for w, s in zip(row, in_scales)]
                for row in layer["weights"]
            ]
            sums = [
                quantize_sum(row, b, u_scale, in_bits)
                for row, b in zip(folded, layer["intercepts"])
            ]
            if layer["activation"] == "relu":
                shift = requant_shift(
                    max(max_abs_acc(s, (1 << in_bits) - 1) for s in sums), H_BITS
                )
            else:
                shift = 0
            in_scales = [s["scale"] / float(1 << shift) for s in sums]
            q["layers"].append(
                {"sums": sums, "activation": layer["activation"], "shift": shift}
            )
            in_bits = H_BITS
        if model["kind"] == "mlp-regressor":
            q["output_scale"] = q["layers"][-1]["sums"][0]["scale"]
    else:
        for c in model["classifiers"]:
            q["classifiers"].append(
                {
                    "sum": quantize_sum(c["weights"], c["intercept"], u_scale, U_BITS),
                    "class_pair": c.get("class_pair"),
                }
            )
        if model["kind"] == "svm-regressor":
            q["output_scale"] = q["classifiers"][0]["sum"]["scale"]
    return q


def eval_sum(s, x):
    return sum(w * v for w, v in zip(s["weights"], x)) + s["intercept"]


def golden_infer(q, x):
    """Returns (raw words, decision). Classifier decision: class index."""
    hmax = (1 << H_BITS) - 1
    kind = q["kind"]
    if kind.startswith("mlp"):
        vals = list(x)
        for layer in q["layers"]:
            nxt = []
            for s in layer["sums"]:
                acc = eval_sum(s, vals)
                if layer["activation"] == "relu":
                    acc = min(max(acc, 0) >> layer["shift"], hmax)
                nxt.append(acc)
            vals = nxt
        if kind == "mlp-classifier":
            return vals, vals.index(max(vals))  # ties to the lowest index
        return vals, vals[0]
    if kind == "svm-classifier":
        votes = [0] * N_CLASSES
        for c in q["classifiers"]:
            i, j = c["class_pair"]
            if eval_sum(c["sum"], x) >= 0:
                votes[i] += 1
            else:
                votes[j] += 1
        return votes, votes.index(max(votes))
    s = eval_sum(q["classifiers"][0]["sum"], x)
    return [s], s


def accuracy(q, rows_q, labels):
    hits = 0
    for x, label in zip(rows_q, labels):
        _, dec = golden_infer(q, x)
        if q["kind"].endswith("regressor"):
            pred = float(round_half_away(dec / q["output_scale"]))
        else:
            pred = float(dec)
        if pred == label:
            hits += 1
    return hits / len(rows_q)


# --------------------------------------------------------------------------
# dataset
# --------------------------------------------------------------------------

def make_dataset():
    """Wine-shaped synthetic data: physical-looking feature ranges, an ordinal
    quality label driven by a mostly linear latent score."""
    rng = np.random.default_rng(DATASET_SEED)
    n = N_SAMPLES
    cols = {
        "fixed acidity": rng.normal(8.3, 1.7, n).clip(4.0, 16.0),
        "volatile acidity": rng.gamma(4.0, 0.13, n).clip(0.1, 1.6),
        "citric acid": rng.beta(1.3, 3.5, n).clip(0.0, 1.0),
        "residual sugar": rng.gamma(2.2, 1.2, n).clip(0.5, 16.0),
        "chlorides": rng.gamma(3.0, 0.03, n).clip(0.01, 0.6),
        "free sulfur dioxide": rng.gamma(2.5, 6.3, n).clip(1.0, 72.0),
        "total sulfur dioxide": rng.gamma(2.0, 23.0, n).clip(6.0, 289.0),
        "density": rng.normal(0.9967, 0.0019, n).clip(0.990, 1.004),
        "pH": rng.normal(3.31, 0.15, n).clip(2.7, 4.0),
        "sulphates": rng.gamma(6.0, 0.11, n).clip(0.3, 2.0),
        "alcohol": rng.gamma(8.0, 1.31, n).clip(8.4, 14.9),
    }
    X = np.column_stack([cols[f] for f in FEATURES])

    def z(col):
        v = cols[col]
        return (v - v.mean()) / v.std()

    score = (
        1.15 * z("alcohol")
        - 0.95 * z("volatile acidity")
        + 0.55 * z("sulphates")
        + 0.40 * z("citric acid")
        - 0.35 * z("total sulfur dioxide")
        - 0.25 * z("chlorides")
        - 0.20 * z("density")
        + 0.15 * z("fixed acidity")
        - 0.10 * z("pH")
        + 0.45 * rng.normal(0.0, 1.0, n)
    )
    # wine-like imbalance: the two middle grades dominate
    qs = np.quantile(score, [0.008, 0.042, 0.47, 0.88, 0.988])
    labels = np.digitize(score, qs)  # 0..5

    # round through the exact CSV representation so the file is the single
    # source of truth for every later computation
    rows = []
    for i in range(n):
        rows.append([float(f"{v:.4f}") for v in X[i]])
    return rows, [int(l) for l in labels]


def write_csv(rows, labels, path: Path):
    lines = [",".join([f'"{f}"' for f in FEATURES] + ['"quality"'])]
    for r, l in zip(rows, labels):
        lines.append(",".join([f"{v:.4f}" for v in r] + [str(l)]))
    path.write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# training + export
# --------------------------------------------------------------------------

def export_mlp(est, kind: str) -> dict:
    layers = []
    n_layers = len(est.coefs_)
    for li, (w, b) in enumerate(zip(est.coefs_, est.intercepts_)):
        layers.append(
            {
                "weights": [[float(v) for v in row] for row in np.asarray(w).T],
                "intercepts": [float(v) for v in np.asarray(b)],
                "activation": "relu" if li + 1 < n_layers else "linear",
            }
        )
    return {
        "format_version": 1,
        "type": "real-model",
        "kind": kind,
        "n_features": len(FEATURES),
        "n_classes": N_CLASSES if kind.endswith("classifier") else 0,
        "layers": layers,
    }


def ovo_pairs(k: int):
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def export_svc(svc, Xtr, ytr) -> dict:
    """Export one-vs-one linear SVC under the convention that a non-negative
    decision votes the pair's first class; flips signs if sklearn's internal
    convention is the opposite."""
    pairs = ovo_pairs(N_CLASSES)
    coef = np.asarray(svc.coef_)
    intercept = np.asarray(svc.intercept_)
    assert coef.shape == (len(pairs), len(FEATURES)), coef.shape

    def vote_predict(sign: float):
        dec = Xtr @ (sign * coef).T + sign * intercept
        votes = np.zeros((len(Xtr), N_CLASSES), dtype=int)
        for k, (i, j) in enumerate(pairs):
            votes[:, i] += dec[:, k] >= 0
            votes[:, j] += dec[:, k] < 0
        return svc.classes_[np.argmax(votes, axis=1)]

    ref = svc.predict(Xtr)
    agree_pos = float(np.mean(vote_predict(1.0) == ref))
    agree_neg = float(np.mean(vote_predict(-1.0) == ref))
    sign = 1.0 if agree_pos >= agree_neg else -1.0
    agreement = max(agree_pos, agree_neg)
    assert agreement > 0.9, f"vote convention mismatch: {agree_pos} / {agree_neg}"
    print(f"  svc vote convention: sign={sign:+.0f}, predict agreement {agreement:.4f}")

    classifiers = []
    for k, (i, j) in enumerate(pairs):
        classifiers.append(
            {
                "weights": [float(v) for v in sign * coef[k]],
                "intercept": float(sign * intercept[k]),
                "class_pair": [int(svc.classes_[i]), int(svc.classes_[j])],
            }
        )
    return {
        "format_version": 1,
        "type": "real-model",
        "kind": "svm-classifier",
        "n_features": len(FEATURES),
        "n_classes": N_CLASSES,
        "classifiers": classifiers,
    }


def export_svr(est) -> dict:
    return {
        "format_version": 1,
        "type": "real-model",
        "kind": "svm-regressor",
        "n_features": len(FEATURES),
        "n_classes": 0,
        "classifiers": [
            {
                "weights": [float(v) for v in np.ravel(est.coef_)],
                "intercept": float(np.ravel(est.intercept_)[0]),
            }
        ],
    }


def to_eval_model(doc: dict) -> dict:
    """Reparse via JSON so the evaluator sees exactly what the file stores."""
    return json.loads(json.dumps(doc))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rows, labels = make_dataset()
    write_csv(rows, labels, OUT / "dataset.csv")
    print(f"dataset: {len(rows)} samples, label counts "
          f"{[labels.count(c) for c in range(N_CLASSES)]}")

    Xtr, ytr, Xte, yte = split_normalize(rows, labels, SPLIT_RATIO, SPLIT_SEED)
    print(f"split: {len(Xtr)} train / {len(Xte)} test")
    Xtr_np, Xte_np = np.array(Xtr), np.array(Xte)
    ytr_np, yte_np = np.array(ytr), np.array(yte)

    models = {}

    # strong regularization keeps the six output rows at similar magnitudes,
    # which keeps their per-sum quantization scales close: argmax over the
    # integer words then tracks the real argmax much more faithfully
    mlp_c = MLPClassifier(hidden_layer_sizes=(4,), solver="lbfgs", alpha=1.2,
                          max_iter=6000, random_state=6)
    mlp_c.fit(Xtr_np, ytr_np)
    models["mlp_classifier"] = export_mlp(mlp_c, "mlp-classifier")
    print(f"mlp-classifier: float train {mlp_c.score(Xtr_np, ytr_np):.4f} "
          f"test {mlp_c.score(Xte_np, yte_np):.4f}")

    mlp_r = MLPRegressor(hidden_layer_sizes=(3,), solver="lbfgs", alpha=1e-3,
                         max_iter=6000, random_state=5)
    mlp_r.fit(Xtr_np, ytr_np.astype(float))
    acc_f = float(np.mean(np.round(mlp_r.predict(Xte_np)) == yte_np))
    models["mlp_regressor"] = export_mlp(mlp_r, "mlp-regressor")
    print(f"mlp-regressor: float test rounded-accuracy {acc_f:.4f}")

    svc = SVC(kernel="linear", C=2.0, random_state=0)
    svc.fit(Xtr_np, ytr_np)
    print(f"svm-classifier: float train {svc.score(Xtr_np, ytr_np):.4f} "
          f"test {svc.score(Xte_np, yte_np):.4f}")
    models["svm_classifier"] = export_svc(svc, Xtr_np, ytr_np)

    svr = LinearSVR(C=2.0, max_iter=20000, random_state=0)
    svr.fit(Xtr_np, ytr_np.astype(float))
    acc_f = float(np.mean(np.round(svr.predict(Xte_np)) == yte_np))
    models["svm_regressor"] = export_svr(svr)
    print(f"svm-regressor: float test rounded-accuracy {acc_f:.4f}")

    # reference metadata from the fixed-point evaluator
    Xtr_q = quantize_inputs(Xtr, U_BITS)
    Xte_q = quantize_inputs(Xte, U_BITS)
    ytr_f = [float(v) for v in ytr]
    yte_f = [float(v) for v in yte]

    meta = {
        "split_seed": SPLIT_SEED,
        "split_ratio": SPLIT_RATIO,
        "spec": {"input_bits": U_BITS, "coeff_bits": C_BITS, "hidden_bits": H_BITS},
        "dataset": "dataset.csv",
        "label_column": "quality",
        "n_classes": N_CLASSES,
        "models": {},
    }
    for name, doc in models.items():
        path = OUT / f"{name}.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        q = quantize_model(to_eval_model(doc))
        tr_acc = accuracy(q, Xtr_q, ytr_f)
        te_acc = accuracy(q, Xte_q, yte_f)
        probes = []
        for x in Xte_q[:5]:
            raw, dec = golden_infer(q, x)
            key = "raw" if doc["kind"].endswith("regressor") else "class"
            probes.append({"input": x, "raw": raw, "decision": {key: dec}})
        meta["models"][name] = {
            "file": path.name,
            "kind": doc["kind"],
            "ref_train_accuracy": tr_acc,
            "ref_test_accuracy": te_acc,
            "probes": probes,
        }
        print(f"{doc['kind']}: fixed-point train {tr_acc:.4f} test {te_acc:.4f}")

    (OUT / "meta.json").write_text(json.dumps(meta, indent=1) + "\n")
    print(f"wrote {OUT / 'meta.json'}")


if __name__ == "__main__":
    main()
