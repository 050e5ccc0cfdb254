"""The numpy fallback selected by the environment flag runs every hot path."""
import json
import math
import os
import subprocess
import sys

SCRIPT = r"""
import json, numpy as np
from critical_hawkes import _accel
from critical_hawkes.analytics import LaplaceQuery, solve_gT
from critical_hawkes.model import ModelSpec
from critical_hawkes.primitives import MittagLeffler, StableBranching, mittag_leffler
from critical_hawkes.resolvent import resolvent_renewal_mc, resolvent_volterra
from critical_hawkes.simulator import sample_counts
spec = ModelSpec(1.0, MittagLeffler(0.5, 1.0), StableBranching(0.5))
q = LaplaceQuery((1.0,), (1.0,))
c, _ = sample_counts(spec, 2.0, [1.0, 2.0], 4000, 1)
print(json.dumps({
    "backend": _accel.backend(),
    "gT": solve_gT(q, 20.0, spec).laplace_value,
    "gT_meta": solve_gT(q, 20.0, spec).meta["backend"],
    "IR": float(resolvent_volterra(MittagLeffler(0.5, 1.0), 4.0, 0.001).I_R_at(4.0)),
    "mc": resolvent_renewal_mc(MittagLeffler(0.5, 1.0), 4.0, 4000, 2).estimate,
    "mc_se": resolvent_renewal_mc(MittagLeffler(0.5, 1.0), 4.0, 4000, 2).std_error,
    "ml": float(mittag_leffler(-30.0, 0.5)),
    "mean": c.mean(axis=0).tolist(),
    "se": (c.std(axis=0, ddof=1) / np.sqrt(c.shape[0])).tolist(),
}))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("CRITICAL_HAWKES_DISABLE_NUMBA", None)
    if disable:
        env["CRITICAL_HAWKES_DISABLE_NUMBA"] = "1"
    r = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True,
                       timeout=600)
    assert r.returncode == 0, r.stderr
    return json.loads(r.stdout.strip().splitlines()[-1])


def test_environment_flag_selects_numpy_and_results_agree():
    fast, slow = _run(False), _run(True)
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"
    assert slow["gT_meta"] == "numpy"
    assert abs(fast["gT"] - slow["gT"]) <= 1e-12
    assert abs(fast["IR"] - slow["IR"]) <= 1e-10
    assert abs(fast["ml"] - slow["ml"]) <= 1e-14
    # Monte Carlo paths use different generators per backend; means must agree statistically
    assert abs(fast["mc"] - slow["mc"]) <= 4 * math.hypot(fast["mc_se"], slow["mc_se"])
    for a, b, sa, sb in zip(fast["mean"], slow["mean"], fast["se"], slow["se"]):
        assert abs(a - b) <= 4 * math.hypot(sa, sb)
