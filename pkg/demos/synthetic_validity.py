"""Coverage check against a known generator.

Draws exchangeable (score row, label) pairs from a softmax-plus-noise
generator, calibrates on one part, and measures how often prediction
sets capture the true class on the other.  Because the generator is
known and scores are continuous, empirical coverage should track
1 - epsilon closely -- this is the package's end-to-end sanity check.

Run with:  python3 demos/synthetic_validity.py
"""

from icptext import SyntheticSpec, run_synthetic_validity

EPSILONS = (0.01, 0.05, 0.1, 0.2, 0.25, 0.5)


def main():
    spec = SyntheticSpec(
        n_classes=8,
        noise_scale=1.0,
        n_train=1,
        n_cal=2000,
        n_test=4000,
        seed=7,
    )
    rows = run_synthetic_validity(spec, epsilons=EPSILONS, repetitions=3)

    print(
        f"{spec.n_classes} classes, {spec.n_cal} calibration / "
        f"{spec.n_test} test examples, 3 repetitions\n"
    )
    print(f"{'epsilon':>8} {'nominal':>8} {'empirical':>10} {'stderr':>8}")
    for row in rows:
        if row["seed"] != "summary":
            continue
        eps = row["epsilon"]
        print(
            f"{eps:>8} {1 - eps:>8.3f} {row['coverage']:>10.4f} "
            f"{row['stderr']:>8.4f}"
        )

    worst = max(
        abs(row["coverage"] - (1 - row["epsilon"]))
        for row in rows
        if row["seed"] == "summary"
    )
    print(f"\nlargest |empirical - nominal| gap: {worst:.4f}")


if __name__ == "__main__":
    main()
