"""
Train a small recurrent load forecaster on synthetic ERCOT-shaped data,
then hit its held-out windows with PGD at a few perturbation budgets.

The attacker may move each past demand/temperature reading by at most
eps * |reading|; the extras (calendar features) are off limits.
"""

import numpy as np

from gridgauntlet import (AttackBudget, TrainConfig, attack_series, evaluate,
                          fit_normalizer, make_windows, split_windows, train)
from gridgauntlet import synthetic


def main():
    ds = synthetic.ercot_like(hours=1500, seed=7)
    windows = make_windows(ds, history_hours=24)
    train_w, test_w = split_windows(windows)
    norm = fit_normalizer(train_w)

    print(f"training on {len(train_w)} windows, evaluating on {len(test_w)}")
    params, history = train(train_w, TrainConfig(epochs=150, learning_rate=0.05,
                                                 hidden_size=24, seed=0), norm)
    test_mape, _ = evaluate(params, test_w, norm)
    print(f"final train MSE (normalized): {history[-1]:.4f}")
    print(f"clean test MAPE: {test_mape:.2f}%")

    print("\neps    mean clean MAPE   mean attacked MAPE")
    for eps in (0.0, 0.01, 0.03, 0.05):
        budget = AttackBudget(eps_demand=eps, eps_temp=eps, iterations=20)
        records = attack_series(params, test_w[:200], budget, norm)
        clean = np.mean([r.mape_clean for r in records])
        attacked = np.mean([r.mape_attacked for r in records])
        print(f"{eps:<6g} {clean:>12.2f}% {attacked:>18.2f}%")


if __name__ == "__main__":
    main()
