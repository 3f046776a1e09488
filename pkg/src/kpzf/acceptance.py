"""Acceptance checks shared by ``kpzf verify`` and the test suite.

Each check returns a :class:`CheckResult` with the measured quantity next to
its tolerance. Checks never adjust their thresholds; ``quick`` only reduces
Monte Carlo sample counts, and the critical values follow the sample counts.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import distributions as ds
from . import kernels as kn
from . import polymer_sim as ps
from .fredholm import det_nystrom
from .scaling import constants_from_theta, f_inf_formulation, g_function, theta_from_kappa
from .specfun import polygamma


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    title: str
    passed: bool
    measured: str
    tolerance: str
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"{self.check_id} {tag}: {self.title}; measured {self.measured}; tolerance {self.tolerance}"
        return s + (f" [{self.detail}]" if self.detail else "")


def _fmt(x: float) -> str:
    return f"{x:.3g}"


# --- identities ------------------------------------------------------------------


def gauss_hermite_laplace_n1(tau: float, u: float, a: float, nodes: int = 60) -> float:
    """E[exp(-u e^{B(tau) + a tau})] with B(tau) ~ Normal(0, tau), by Gauss-Hermite."""
    t, w = np.polynomial.hermite.hermgauss(nodes)
    x = math.sqrt(2.0 * tau) * t + a * tau
    return float(np.sum(w * np.exp(-u * np.exp(x))) / math.sqrt(math.pi))


def ac1(quick: bool = False) -> CheckResult:
    worst = 0.0
    for tau, u, a in ((1.0, 1.0, 0.0), (1.0, 0.5, 0.3), (2.0, 2.0, -0.2)):
        exact = ds.semidiscrete_laplace(1, tau, (a,), math.log(u))
        worst = max(worst, abs(exact - gauss_hermite_laplace_n1(tau, u, a)))
    return CheckResult("AC-1", "N=1 Laplace identity vs Gauss-Hermite", worst <= 1e-6, _fmt(worst), "1e-06")


def ac2(quick: bool = False, Ns=(2, 3), samples: int | None = None, seed: int = 2024) -> CheckResult:
    n_samp = samples or (20000 if quick else 100000)
    worst = 0.0
    rows = []
    for N in Ns:
        res = ps.simulate(ps.SimConfig(N=N, tau=1.0, M=4096, samples=n_samp, seed=seed))
        for u in (0.5, 1.0, 2.0):
            exact = ds.semidiscrete_laplace(N, 1.0, None, math.log(u)).real
            est, se = ps.empirical_laplace(res, math.log(u))
            z = abs(est - exact) / se
            worst = max(worst, z)
            rows.append(f"N={N},u={u}:z={z:.2f}")
    return CheckResult(
        "AC-2", f"N={','.join(map(str, Ns))} Laplace identity vs MC ({n_samp} samples)",
        worst <= 3.0, f"max z={worst:.2f}", "3 std errors", " ".join(rows),
    )


def ac10(quick: bool = False) -> CheckResult:
    e_psi = e_g = e_f = 0.0
    for kappa in (0.25, 1.0, 4.0):
        sc = theta_from_kappa(kappa)
        e_psi = max(e_psi, abs(float(polygamma(1, sc.theta)) - kappa))
        e_g = max(e_g, abs(g_function(sc.theta, sc)[1]))
        e_f = max(e_f, abs(sc.f - f_inf_formulation(kappa)))
    ok = e_psi <= 1e-12 and e_g <= 1e-10 and e_f <= 1e-8
    return CheckResult(
        "AC-10", "scaling-constant identities", ok,
        f"|Psi'-kappa|={_fmt(e_psi)}, |G'|={_fmt(e_g)}, |f-inf|={_fmt(e_f)}", "1e-12, 1e-10, 1e-08",
    )


# --- reformulations ------------------------------------------------------------------


def ac3(quick: bool = False) -> CheckResult:
    diffs = {}
    for r in (-2.0, 0.0, 1.0):
        diffs[f"Airy r={r:g}"] = abs(ds.f_gue_result(r, 1e-10, "real").value - ds.f_gue_result(r, 1e-10, "contour").value)
    b = (0.5, -0.5)
    diffs["BBP r=0"] = abs(ds.f_bbp_result(0.0, b, 1e-10, "real").value - ds.f_bbp_result(0.0, b, 1e-10, "contour").value)
    for T in (1.0, 10.0):
        diffs[f"CDRP T={T:g}"] = abs(ds.cdrp_laplace(T, 1.0, (), 1e-10, "contour") - ds.cdrp_laplace(T, 1.0, (), 1e-10, "real_line"))
    worst = max(diffs.values())
    detail = " ".join(f"{k}:{_fmt(v)}" for k, v in diffs.items())
    return CheckResult("AC-3", "contour forms vs L^2 forms", worst <= 1e-6, _fmt(worst), "1e-06", detail)


# --- limits --------------------------------------------------------------------------


def ac4(quick: bool = False) -> CheckResult:
    rs = np.arange(-6.0, 4.0 + 1e-9, 0.25)
    vals = np.array([ds.f_gue(r) for r in rs])
    imag = max(abs(ds.f_gue_result(r, 1e-10, "contour").value.imag) for r in rs)
    conv = 0.0
    for r in rs:
        if r >= kn.AIRY_CUTOFF + 2.0:
            continue

        def kernel(x, y):
            return kn.airy_product_matrix(x.real, y.real)

        a = det_nystrom(kernel, ds._half_line_grid(r, kn.AIRY_CUTOFF, 16), -1).value
        b = det_nystrom(kernel, ds._half_line_grid(r, kn.AIRY_CUTOFF, 32), -1).value
        conv = max(conv, abs(a - b))
    in_range = bool(np.all(vals >= -1e-8) and np.all(vals <= 1 + 1e-8))
    mono = bool(np.all(np.diff(vals) >= 0))
    tails = vals[0] <= 1e-3 and vals[-1] >= 1 - 1e-4
    ok = in_range and mono and tails and imag <= 1e-8 and conv <= 1e-7
    return CheckResult(
        "AC-4", "F_GUE shape on [-6, 4]", ok,
        f"range={in_range}, monotone={mono}, F(-6)={vals[0]:.3g}, 1-F(4)={1 - vals[-1]:.3g}, "
        f"max|Im|={_fmt(imag)}, doubling={_fmt(conv)}",
        "[0,1]+-1e-8, nondecreasing, <=1e-3, <=1e-4, 1e-8, 1e-7",
    )


def ac5(quick: bool = False) -> CheckResult:
    identical = all(ds.f_bbp(r, ()) == ds.f_gue(r) for r in (-3.0, -1.0, 0.0, 1.5))
    g0 = ds.f_gue(0.0)
    d40 = abs(ds.f_bbp(0.0, (-40.0,)) - g0)
    d80 = abs(ds.f_bbp(0.0, (-80.0,)) - g0)
    ok = identical and d40 <= 1e-4 and d80 < d40
    return CheckResult(
        "AC-5", "BBP reductions", ok,
        f"bit-identical={identical}, |b=-40 diff|={_fmt(d40)}, |b=-80 diff|={_fmt(d80)}",
        "identical, 1e-04, improving",
    )


def ac6(quick: bool = False) -> CheckResult:
    base = ds.cdrp_laplace(2.0, 1.0, (0.3,))
    d = {B: abs(ds.cdrp_laplace(2.0, B, (0.3, -B)) - base) for B in (50.0, 100.0)}
    ok = d[50.0] <= 1e-3 and d[100.0] < d[50.0]
    return CheckResult(
        "AC-6", "CDRP spike decoupling", ok,
        f"B=50: {_fmt(d[50.0])}, B=100: {_fmt(d[100.0])}", "1e-03 at B=50, smaller at B=100",
    )


def crossover_distance(T: float) -> float:
    return max(abs(ds.cdrp_smoothed_cdf(T, r) - ds.f_gue(r)) for r in (-3.0, -1.5, 0.0, 1.5))


def ac7(quick: bool = False) -> CheckResult:
    d = {T: crossover_distance(T) for T in (10.0, 100.0, 1000.0)}
    ok = d[10.0] > d[100.0] > d[1000.0] and d[1000.0] <= 0.05
    return CheckResult(
        "AC-7", "CDRP to GUE crossover", ok,
        ", ".join(f"d({T:g})={v:.4g}" for T, v in d.items()), "decreasing, d(1000)<=0.05",
    )


# --- Monte Carlo ---------------------------------------------------------------------


def gue_table(lo: float = -8.0, hi: float = 6.0, step: float = 0.05) -> ds.CdfTable:
    rs = np.arange(lo, hi + step / 2, step)
    return ds.tabulate(ds.f_gue, rs, dist="gue")


def ac8(quick: bool = False, seed: int = 8) -> CheckResult:
    n_samp = 1000 if quick else 4000
    table = gue_table()
    sc = theta_from_kappa(1.0)
    ks = {}
    for N in (8, 16, 32):
        res = ps.simulate(ps.kappa_config(N, 1.0, n_samp, seed=seed))
        ks[N] = ps.ks_statistic(ps.rescaled_free_energy(res, sc, N), table)
    ok = ks[8] > ks[16] > ks[32] and ks[32] <= 0.1
    return CheckResult(
        "AC-8", f"semi-discrete free energy vs F_GUE ({n_samp} samples)", ok,
        ", ".join(f"KS(N={N})={v:.4f}" for N, v in ks.items()), "decreasing, KS(32)<=0.1",
    )


def ac9(quick: bool = False, seed: int = 9) -> CheckResult:
    n_samp = 2000 if quick else 10000
    g = ps.simulate(ps.SimConfig(N=8, tau=1.0, M=4096, samples=n_samp, seed=seed), "ground-state")
    e = ps.simulate(ps.SimConfig(N=8, tau=1.0, samples=n_samp, seed=seed), "gue")
    ks = ps.ks_two_sample(g.values, e.values)
    crit = ps.ks_critical_two_sample(n_samp, n_samp)
    return CheckResult(
        "AC-9", f"ground state vs GUE top eigenvalue, N=8 ({n_samp} samples)", ks < crit,
        f"KS={ks:.4f}", f"1% critical value {crit:.4f}",
    )


def ac11(quick: bool = False) -> CheckResult:
    from . import cli

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        outs = []
        for run in (1, 2):
            sim = tmp / f"sim{run}"
            tab = tmp / f"tab{run}.csv"
            cli.main(["simulate", "--model", "polymer", "--n", "4", "--kappa", "1", "--samples", "200",
                      "--seed", "11", "--threads", "2", "--out", str(sim)])
            cli.main(["tabulate", "--dist", "gue", "--grid=-3:1:0.5", "--no-cache", "--out", str(tab)])
            outs.append(tuple(p.read_bytes() for p in (Path(f"{sim}.json"), Path(f"{sim}.csv"), tab)))
    same = outs[0] == outs[1]
    return CheckResult("AC-11", "byte-identical simulate and tabulate outputs", same, f"identical={same}", "identical")


SUITES: dict[str, list[Callable[..., CheckResult]]] = {
    "identities": [ac1, ac2, ac10],
    "reformulations": [ac3],
    "limits": [ac4, ac5, ac6, ac7],
    "montecarlo": [ac8, ac9, ac11],
}
SUITES["all"] = [f for name in ("identities", "reformulations", "limits", "montecarlo") for f in SUITES[name]]
