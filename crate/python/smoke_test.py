"""Quick end-to-end check of the gandi_py extension.

Build and install it first:

    pip install --no-build-isolation ./crates/python
"""

import math
import os
import tempfile

import gandi_py as g


def main():
    cfg = g.Config("domain = gmm\nseed = 3\n")
    cfg.set("toy.on_target", "64")
    cfg.set("toy.off_target", "128")
    cfg.set("train.epochs", "5")
    cfg.set("train.checkpoint_every", "5")
    cfg.set("importance.epochs", "5")
    assert len(cfg.hash()) == 64
    try:
        cfg.set("planner.k", "0")
    except ValueError:
        pass
    else:
        raise AssertionError("k = 0 must be rejected")

    eps, rho, first, second = g.check_bounds([0.25] * 4, [0.25] * 4, [1.1] * 4)
    assert abs(eps - 0.1) < 1e-12 and abs(rho - 1.0) < 1e-12
    assert first[2] and second[2]
    assert second[0] <= math.log(1 / 0.9) + 1e-12

    assert g.discrete_kl([0.5, 0.5], [0.5, 0.5]) == 0.0
    rate, lo, hi = g.success_interval(100, 70)
    assert lo <= rate <= hi
    assert g.bootstrap_probabilities([1.0, 3.0]) == [0.25, 0.75]

    on = [([], [0.1])] * 3
    off = [([], [0.1]), ([], [0.9])]
    model = g.ImportanceModel.fit_tabular(on, off, 2, [0.0], [1.0])
    assert model.weight([], [0.2]) == 3.0 and model.weight([], [0.8]) == 0.0

    with tempfile.TemporaryDirectory() as root:
        rows, rejected, violations = g.verify(g.Config("verify.instances = 20\nverify.lemma_instances = 5\n"), os.path.join(root, "verify"))
        assert violations == 0, (rows, rejected, violations)

        attempts, solved, n_on, n_off = g.collect(cfg, root)
        assert (n_on, n_off) == (64, 128)
        models = g.train(cfg, root)
        assert len(models) == 1
        gen = g.Generator.load(str(models[0][3]), seed=1)
        assert (gen.context_dim, gen.action_dim) == (0, 2)
        action, _ = gen.sample([])
        assert len(action) == 2
    print("gandi_py smoke test passed")


if __name__ == "__main__":
    main()
