"""Smoke test for the lightray Python extension.

Uses an installed ``lightray`` module if there is one. Otherwise it loads the
shared library built by

    cargo build --release -p lightray-py --features extension-module

from target/release (override the path with LIGHTRAY_LIB).
"""

import importlib.machinery
import importlib.util
import math
import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "crates" / "cli" / "scenarios"


def load_module():
    try:
        import lightray

        return lightray
    except ImportError:
        pass
    lib = Path(os.environ.get("LIGHTRAY_LIB", ROOT / "target" / "release" / "liblightray.so"))
    if not lib.exists():
        sys.exit(f"extension not found at {lib}; build it first")
    loader = importlib.machinery.ExtensionFileLoader("lightray", str(lib))
    spec = importlib.util.spec_from_loader("lightray", loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    lr = load_module()

    st = lr.Spacetime.load(str(SCENARIOS / "static.toml"))
    assert st.genus == 2
    events = st.simulate()
    assert len(events) == 8, len(events)
    for e in events:
        p = e["params"]
        # static spacetime with tip at the origin: Δt = t(e^ρ − 1)
        expected = e["t_e"] * math.expm1(p["rho"])
        assert abs(e["dt"] - expected) < 1e-9 * max(1.0, expected), e
        assert 0.0 < e["freq_ratio"] < 1.0
        assert abs(p["nu"]) < 1e-12

    rec = lr.reconstruct_csv(st.events_csv(), "static")
    assert len(rec["sides"]) == 8, rec["sides"]
    assert rec["relator_residual"] < 1e-6
    print(f"static: {len(events)} events, {len(rec['sides'])} sides, roundtrip {st.roundtrip():.2e}")

    gr = lr.Spacetime.load(str(SCENARIOS / "grafted.toml"))
    dev = gr.roundtrip()
    assert dev < 1e-5, dev
    a1 = gr.relative_params("a1")
    assert a1["rho"] > 0 and a1["nu"] != 0.0
    print(f"grafted: {len(gr.simulate())} events, roundtrip {dev:.2e}, a1 = {a1}")

    # identity Lorentz part with a spatial translation is not hyperbolic
    try:
        lr.relative_params([1, 0, 0], [0, 0, 0], [[1, 0, 0], [0, 1, 0], [0, 0, 1]], [0, 1, 0])
    except lr.LightrayError as exc:
        print(f"rejected identity: {exc}")
    else:
        raise AssertionError("identity accepted")

    try:
        lr.Spacetime.from_toml("schema_version = 1\ngenus = \n")
    except lr.LightrayError as exc:
        print(f"rejected bad toml: {str(exc).splitlines()[0]}")
    else:
        raise AssertionError("bad toml accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
