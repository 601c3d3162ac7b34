"""Sequential knot and variable selection on f(x) = x1/2 + atan(10 x2).

The target is monotone in both inputs but almost all of its curvature sits
along the second one, so the procedure should activate that variable first
and place most knots on it.  Run with ``python demos/atan2d_selection.py``.
"""
import numpy as np

from maxmodgp import MaxMod, MaxModConfig, Monotonicity, KernelModel
from maxmodgp.bench import EnergyMonitor, atan2d, maximin_lhd


def main(seed: int = 0) -> None:
    f = atan2d()
    X = maximin_lhd(40, 2, seed=seed).points
    y = f(X)
    var_y = float(np.var(y))
    model = KernelModel("squared-exponential", var_y, (0.5, 0.5), 1e-3 * var_y)
    monitor = EnergyMonitor(f, 2)

    driver = MaxMod(X, y, Monotonicity(), MaxModConfig(seed=seed, tolerance=1e-5),
                    model=model, monitor=monitor)
    state = driver.run()

    print(f"initial variable: x{state.initial_sub.active[0] + 1}, E_n = {state.initial_energy:.3e}")
    for rec in state.history:
        m = rec.move
        what = f"knot x{m.var + 1} @ {m.t:.4f}" if hasattr(m, "t") else f"activate x{m.var + 1}"
        print(f"{rec.iteration:3d}  {what:24s} knots={rec.grid_size:3d}  "
              f"criterion={rec.criterion:.2e}  E_n={rec.energy:.2e}")
    print(f"stopped: {state.stop_reason}; knots per variable:",
          {f"x{v + 1}": len(state.sub.knots(v)) for v in state.sub.active})


if __name__ == "__main__":
    main()
