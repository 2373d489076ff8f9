"""Python access to the spk library.

Reports come back as plain dicts; grid fields come back as numpy arrays
indexed [rho or x, theta or y].
"""

import json

from ._spk import SpkError
from . import _spk

__all__ = [
    "SpkError",
    "existence_check",
    "h_space_dim",
    "load_structure",
    "main",
    "pipeline",
    "sample_section",
    "solve_hyperbolic",
    "verify_model",
    "verify_structure",
]


def _data(genus=0, betas=(), ell=0, points=None, tau=None):
    d = {"genus": genus, "betas": list(betas), "ell": ell}
    if points is not None:
        d["points"] = ["inf" if p == "inf" else [complex(p).real, complex(p).imag] for p in points]
    if tau is not None:
        d["tau"] = [complex(tau).real, complex(tau).imag]
    return json.dumps(d)


def existence_check(betas, ell=0, genus=0, points=None, tau=None):
    return json.loads(_spk.existence_check(_data(genus, betas, ell, points, tau)))


def h_space_dim(betas, ell=0, genus=0, points=None, tau=None):
    return _spk.h_space_dim(_data(genus, betas, ell, points, tau))


def sample_section(betas, seed, ell=0, points=None):
    return json.loads(_spk.sample_section(_data(0, betas, ell, points), seed))


def verify_model(kind, k=1, b=1.0, beta=0.0, n=256, r_min=0.1, r_max=0.8):
    return json.loads(_spk.verify_model(kind, k, complex(b), beta, n, r_min, r_max))


def solve_hyperbolic(prescriptions, disc_radius=0.0, n=128, tol=1e-8):
    out = _spk.solve_hyperbolic(json.dumps(prescriptions), disc_radius, n, tol)
    out["stats"] = json.loads(out["stats"])
    for g in out["grids"]:
        g["chart"] = json.loads(g["chart"])
    return out


def verify_structure(sidecar, thresholds=None):
    return json.loads(_spk.verify_structure(str(sidecar), json.dumps(thresholds) if thresholds else ""))


def load_structure(sidecar):
    out = _spk.load_structure(str(sidecar))
    out["xi"] = json.loads(out["xi"])
    for c in out["charts"]:
        c["chart"] = json.loads(c["chart"])
    return out


def pipeline(betas, ell=0, points=None, seed=1, n=256, thresholds=None):
    return json.loads(
        _spk.pipeline(_data(0, betas, ell, points), seed, n, json.dumps(thresholds) if thresholds else "")
    )


def main(args):
    """Run the command-line tool in-process; returns its exit code."""
    return _spk.run_cli([str(a) for a in args])
