"""Smoke test for the grover_portfolio_py extension.

Build first with `cargo build --release -p grover-portfolio-py`; the script
loads target/release/libgrover_portfolio_py.so under the module name.
"""

import importlib.util
import json
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "crates" / "core" / "fixtures" / "frontier8.csv"


def load_module():
    lib = ROOT / "target" / "release" / "libgrover_portfolio_py.so"
    if not lib.exists():
        sys.exit(f"missing {lib}; run `cargo build --release -p grover-portfolio-py`")
    spec = importlib.util.spec_from_file_location("grover_portfolio_py", lib)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    gp = load_module()

    assert gp.t_for_resolution(0.01) == 7
    assert gp.oracle_qubits(3, 7) == (18, 37)
    assert gp.quantize(0.99, 7) == 127
    assert gp.iteration_count(4, 1) == 1
    assert gp.compare(3, 5, 3) == (True, False, False)
    assert gp.compare(3, 4, 4) == (False, False, True)

    dist = gp.grover_distribution(2, {2}, 1)
    assert abs(dist[2] - 1.0) < 1e-9
    dense = gp.grover_distribution(2, {2}, 1, backend="dense")
    assert all(abs(a - b) < 1e-9 for a, b in zip(dist, dense))

    counts = gp.counting_distribution(2, {0, 3}, 2)
    assert abs(counts[1] + counts[3] - 1.0) < 1e-9

    found, calls = gp.exponential_search(6, {5}, seed=1)
    assert found == 5 and calls <= 40
    assert gp.exponential_search(6, set(), seed=1) == (None, 40)

    frontier = gp.Frontier.from_csv(str(FIXTURE))
    assert len(frontier) == 8 and frontier.padded_n == 3
    ratios = [r / s for _, r, s in
              ((0, 0.04, 0.05), (1, 0.06, 0.07), (2, 0.075, 0.09), (3, 0.095, 0.12),
               (4, 0.11, 0.15), (5, 0.125, 0.19), (6, 0.14, 0.24), (7, 0.15, 0.30))]
    argmax = max(range(8), key=ratios.__getitem__)
    best, sharpe, _ = frontier.max_sharpe(seed=3, repetitions=5)
    assert best == argmax and math.isclose(sharpe, ratios[argmax])
    assert frontier.slice(0.07, 0.2, seed=2) == frontier.classical_filter(0.07, 0.2)

    small = gp.Frontier([(10, 0.1, 0.2), (11, 0.3, 0.4), (12, 0.05, 0.5)])
    assert len(small) == 3 and small.padded_n == 2
    assert small.slice(0.0, 0.45) == [10, 11]

    try:
        gp.Frontier([(0, 0.1, 0.0)])
    except ValueError as e:
        assert "std_dev" in str(e)
    else:
        raise AssertionError("zero std_dev accepted")

    code, out, _ = gp.run_cli(["max-sharpe", "--input", str(FIXTURE), "--seed", "1"])
    assert code == 0 and json.loads(out)["qubit_layout"]["total"] == 18
    assert gp.run_cli(["slice", "--input", "/nonexistent.csv"])[0] == 1

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
