"""Regenerate the bundled dataset excerpts under src/fdrbench/data/.

The bundled files are small synthetic stand-ins that mirror each public
dataset's schema (column names, label conventions, rough feature scales and
class imbalance) so the full pipeline runs offline. They are NOT samples of
the real data; run scripts/fetch_datasets.py to replace them with excerpts of
the actual datasets.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "fdrbench" / "data"

N_NULL = 1300
N_NOVEL = 60


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({path.stat().st_size / 1024:.0f} KiB, {len(rows)} rows)")


def _fmt(x: float) -> str:
    return format(float(x), ".4g")


def make_shuttle(rng):
    # Nine integer-valued sensor readings; class 1 is nominal, 2-7 anomalous.
    base = np.array([45.0, 0.0, 80.0, 0.0, -5.0, 20.0, 35.0, 45.0, 10.0])
    sd = np.array([8.0, 30.0, 6.0, 40.0, 12.0, 25.0, 10.0, 9.0, 14.0])
    nulls = base + rng.standard_normal((N_NULL, 9)) * sd
    classes = rng.choice([2, 3, 4, 5, 6, 7], size=N_NOVEL)
    novel = base + rng.standard_normal((N_NOVEL, 9)) * sd
    # Every anomalous class drives sensor 3 far off nominal, plus a
    # class-specific pair of secondary sensors.
    offsets = {
        2: (0, 6), 3: (1, 7), 4: (4, 8), 5: (5, 6), 6: (4, 7), 7: (5, 8),
    }
    novel[:, 2] += 6.0 * sd[2] * rng.choice([-1.0, 1.0], size=N_NOVEL)
    for i, cls in enumerate(classes):
        for j in offsets[cls]:
            novel[i, j] += 4.0 * sd[j] * rng.choice([-1.0, 1.0])
    header = [f"a{j}" for j in range(1, 10)] + ["class"]
    rows = [[str(int(round(v))) for v in row] + ["1"] for row in nulls]
    rows += [
        [str(int(round(v))) for v in row] + [str(cls)]
        for row, cls in zip(novel, classes)
    ]
    order = rng.permutation(len(rows))
    _write_csv(OUT_DIR / "shuttle.csv", header, [rows[i] for i in order])


def make_creditcard(rng):
    # Time, 28 decorrelated components, Amount; Class 1 marks fraud.
    time_null = np.sort(rng.uniform(0, 172_000, N_NULL))
    time_novel = rng.uniform(0, 172_000, N_NOVEL)
    v_null = rng.standard_normal((N_NULL, 28))
    v_novel = rng.standard_normal((N_NOVEL, 28))
    # Fraud concentrates in the low-order components.
    v_novel[:, :6] += np.array([-3.4, 2.7, -3.8, 3.0, -2.4, -1.6])
    amt_null = np.round(np.exp(rng.normal(3.2, 1.1, N_NULL)), 2)
    amt_novel = np.round(np.exp(rng.normal(4.4, 1.5, N_NOVEL)), 2)
    header = ["Time"] + [f"V{j}" for j in range(1, 29)] + ["Amount", "Class"]
    rows = [
        [_fmt(t)] + [_fmt(v) for v in vs] + [f"{a:.2f}", "0"]
        for t, vs, a in zip(time_null, v_null, amt_null)
    ]
    rows += [
        [_fmt(t)] + [_fmt(v) for v in vs] + [f"{a:.2f}", "1"]
        for t, vs, a in zip(time_novel, v_novel, amt_novel)
    ]
    order = rng.permutation(len(rows))
    _write_csv(OUT_DIR / "creditcard.csv", header, [rows[i] for i in order])


def make_kddcup99(rng):
    # Numeric connection statistics; 'normal' traffic vs named intrusions.
    header = [
        "duration", "src_bytes", "dst_bytes", "count", "srv_count",
        "serror_rate", "rerror_rate", "same_srv_rate", "diff_srv_rate",
        "dst_host_count", "label",
    ]

    def connections(n, intrusion):
        dur = np.round(np.exp(rng.normal(0.5, 1.5, n))) - 1
        src = np.round(np.exp(rng.normal(5.5, 1.2, n)))
        dst = np.round(np.exp(rng.normal(6.5, 1.6, n)))
        cnt = np.round(np.exp(rng.normal(2.2, 0.9, n)))
        srv = np.maximum(1, np.round(cnt * rng.uniform(0.4, 1.0, n)))
        serror = np.clip(rng.beta(1, 40, n), 0, 1)
        rerror = np.clip(rng.beta(1, 60, n), 0, 1)
        same_srv = np.clip(rng.beta(14, 2, n), 0, 1)
        diff_srv = np.clip(1 - same_srv + rng.normal(0, 0.02, n), 0, 1)
        host_cnt = rng.integers(1, 256, n)
        if intrusion:
            # Flood-style traffic: tiny payloads, huge fan-out, many errors.
            src = np.round(np.exp(rng.normal(2.0, 0.8, n)))
            dst = np.zeros(n)
            cnt = np.round(np.exp(rng.normal(5.2, 0.5, n)))
            srv = np.maximum(1, np.round(cnt * rng.uniform(0.9, 1.0, n)))
            serror = np.clip(rng.beta(30, 2, n), 0, 1)
            same_srv = np.clip(rng.beta(2, 10, n), 0, 1)
            diff_srv = np.clip(rng.beta(8, 3, n), 0, 1)
        return np.column_stack(
            [dur, src, dst, cnt, srv, serror, rerror, same_srv, diff_srv, host_cnt]
        )

    nulls = connections(N_NULL, intrusion=False)
    novel = connections(N_NOVEL, intrusion=True)
    names = rng.choice(["neptune", "smurf", "back", "teardrop"], size=N_NOVEL)
    rows = [[_fmt(v) for v in row] + ["normal"] for row in nulls]
    rows += [[_fmt(v) for v in row] + [name] for row, name in zip(novel, names)]
    order = rng.permutation(len(rows))
    _write_csv(OUT_DIR / "kddcup99.csv", header, [rows[i] for i in order])


def make_mammography(rng):
    # Six shape/texture features; class 1 marks microcalcifications.
    nulls = rng.standard_normal((N_NULL, 6)) * np.array([0.6, 1.0, 0.8, 0.9, 1.0, 0.7])
    novel = rng.standard_normal((N_NOVEL, 6))
    # Calcifications: brighter, higher contrast, larger area -- but with
    # overlap, keeping detection power moderate rather than easy.
    novel[:, :4] += np.array([1.6, 1.9, 1.3, 1.1])
    header = [f"attr{j}" for j in range(1, 7)] + ["class"]
    rows = [[_fmt(v) for v in row] + ["-1"] for row in nulls]
    rows += [[_fmt(v) for v in row] + ["1"] for row in novel]
    order = rng.permutation(len(rows))
    _write_csv(OUT_DIR / "mammography.csv", header, [rows[i] for i in order])


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    make_shuttle(np.random.default_rng(20_240_101))
    make_creditcard(np.random.default_rng(20_240_102))
    make_kddcup99(np.random.default_rng(20_240_103))
    make_mammography(np.random.default_rng(20_240_104))


if __name__ == "__main__":
    main()
