"""Independent numerical oracles for every closed form the solvers return.

Each check builds its own reference (bisection, grid scans, golden-section
search, a discretised LP or direct integration) and compares. Failures are
collected into an OracleReport; nothing here raises on a mismatch.
"""
from __future__ import annotations

import logging
import math
import time
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from sav_bottleneck.analytics import departure_time, fare_equilibria, first_best, second_best, stability
from sav_bottleneck.core.config import Settings, settings as default_settings
from sav_bottleneck.core.params import ModelParams, derive
from sav_bottleneck.schemas.checks import CheckResult, OracleReport
from sav_bottleneck.utils.numerics import bracketed_roots, relative_gap

logger = logging.getLogger(__name__)


BASE_PARAMS = ModelParams(
    n_total=1000.0,
    mu=0.025,
    kappa=0.01,
    theta=0.7,
    beta=0.4,
    gamma=0.4,
    t_f=10.0,
    f_n=1.0,
    f_a=129600.0,
    m=100.0,
)

PARADOX_PARAMS = BASE_PARAMS.with_updates(n_total=250.0, mu=0.02, f_a=30000.0)

# (full, quick) batch sizes
BATCH: Dict[str, tuple] = {
    "closed_form": (500, 60),
    "stability": (6, 2),
    "lp": (20, 3),
    "pareto": (50, 10),
    "second_best": (50, 10),
    "axiom_states": (100_000, 10_000),
    "profile": (30, 5),
}


def draw_params(
    rng: np.random.Generator,
    kappa_range: tuple = (0.05, 0.95),
    b_share: tuple = (0.05, 0.8),
    f_a_share: tuple = (0.05, 0.9),
    gamma_ratio: tuple = (0.5, 4.0),
) -> ModelParams:
    """Random interior parameters with two distinct positive AC roots.

    B is drawn as a share of AN and F_a as a share of (AN - B)^2 / 4A, so
    every draw sits strictly inside the region where AC1 and AC2 exist.
    """
    theta = rng.uniform(0.3, 0.9)
    beta = rng.uniform(0.05, 0.9) * theta
    gamma = beta * rng.uniform(*gamma_ratio)
    kappa = rng.uniform(*kappa_range)
    mu = rng.uniform(0.01, 1.0)
    n_total = rng.uniform(200.0, 5000.0)
    t_f = rng.uniform(0.0, 20.0)
    f_n = rng.uniform(0.0, 10.0)

    a_coef = beta * gamma / (mu * (beta + gamma)) * (1.0 - theta)
    b_coef = rng.uniform(*b_share) * a_coef * n_total
    gap = a_coef * n_total - b_coef
    return ModelParams(
        n_total=n_total,
        mu=mu,
        kappa=kappa,
        theta=theta,
        beta=beta,
        gamma=gamma,
        t_f=t_f,
        f_n=f_n,
        f_a=rng.uniform(*f_a_share) * gap * gap / (4.0 * a_coef),
        m=b_coef + t_f + f_n - theta * t_f,
    )


def _with_b(p: ModelParams, b_coef: float) -> ModelParams:
    """Same scenario with m moved so that B takes the given value."""
    return p.with_updates(m=b_coef + p.t_f + p.f_n - p.theta * p.t_f)


def _regime_social_costs(p: ModelParams) -> Dict[str, float]:
    """N c* - pi per regime, straight from the equilibrium solvers."""
    eqs = [fare_equilibria.solve_mc(p), fare_equilibria.solve_monopoly(p)] + fare_equilibria.solve_ac(p)
    values = {e.regime: second_best.regime_sc(p, e) for e in eqs}
    values.setdefault("AC2", math.nan)
    return values


def _timed(name: str, fn: Callable[[], CheckResult]) -> CheckResult:
    start = time.perf_counter()
    try:
        result = fn()
    except Exception as exc:  # a crash inside an oracle is a failed check
        logger.exception("oracle %s crashed", name)
        result = CheckResult(name=name, passed=False, detail=f"crashed: {exc}")
    result = result.model_copy(update={"elapsed": time.perf_counter() - start})
    if not result.passed:
        logger.warning("oracle %s failed: worst=%.3g %s", name, result.worst, result.detail)
    return result


class OracleSuite:
    def __init__(self, cfg: Optional[Settings] = None, seed: Optional[int] = None, quick: bool = False) -> None:
        self.cfg = cfg or default_settings
        self.seed = self.cfg.seed if seed is None else seed
        self.quick = quick

    def _size(self, key: str) -> int:
        full, quick = BATCH[key]
        return quick if self.quick else full

    def _rng(self, offset: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, offset])

    def closed_form_vs_bisection(self) -> CheckResult:
        rng = self._rng(1)
        draws = self._size("closed_form")
        worst = 0.0
        for _ in range(draws):
            p = draw_params(rng)
            d = derive(p)
            a, b, n = d.a_coef, d.b_coef, p.n_total

            def gap_mc(x):
                return a * (n - x) - b

            def gap_ac(x):
                x = np.asarray(x, dtype=float)
                return a * (n - x) - b - p.f_a / x

            def marginal_profit(x):
                h = 1e-3 * n
                profit = lambda y: gap_mc(y) * y - p.f_a  # noqa: E731
                return (profit(x + h) - profit(x - h)) / (2.0 * h)

            root_mc = brentq(gap_mc, 0.0, n, xtol=1e-12 * n)
            roots_ac = bracketed_roots(gap_ac, 1e-9 * n, n, samples=401, xtol=1e-12 * n, vectorized=True)
            root_m = brentq(marginal_profit, 0.0, n, xtol=1e-12 * n)

            eqs = {e.regime: e for e in fare_equilibria.all_equilibria(p, self.cfg.threshold_tol)}
            if len(roots_ac) != 2 or "AC1" not in eqs or "AC2" not in eqs:
                return CheckResult(
                    name="closed_form_vs_bisection",
                    passed=False,
                    draws=draws,
                    detail=f"expected two AC roots, scan found {roots_ac} for {p}",
                )
            errors = [
                abs(eqs["MC"].split.n_a - root_mc),
                abs(eqs["AC1"].split.n_a - roots_ac[0]),
                abs(eqs["AC2"].split.n_a - roots_ac[1]),
                abs(eqs["Monopoly"].split.n_a - root_m),
            ]
            worst = max(worst, max(errors) / n)
        return CheckResult(
            name="closed_form_vs_bisection",
            passed=worst <= 1e-8,
            draws=draws,
            worst=worst,
            detail="max |closed form - bisection root| / N over MC, AC1, AC2, Monopoly",
        )

    def ordering_chain(self) -> CheckResult:
        rng = self._rng(2)
        draws = self._size("closed_form")
        tol = self.cfg.threshold_tol
        failures: List[str] = []
        worst = math.inf
        for _ in range(draws):
            report = fare_equilibria.ordering_check(draw_params(rng), tol)
            worst = min([worst] + [c.slack for c in report.checks])
            if not report.entry_viable or not report.passed:
                failures += [c.name for c in report.checks if not c.passed] or ["entry_viable"]

        # coincident roots: F_a placed exactly on the discriminant boundary
        p = draw_params(rng)
        d = derive(p)
        gap = d.a_coef * p.n_total - d.b_coef
        edge = fare_equilibria.ordering_check(p.with_updates(f_a=gap * gap / (4.0 * d.a_coef)), tol)
        if not edge.coincident or not edge.passed:
            failures.append("coincident-root equalities")
        return CheckResult(
            name="ordering_chain",
            passed=not failures,
            draws=draws + 1,
            worst=worst,
            detail="smallest slack; failed: " + ", ".join(sorted(set(failures))) if failures else "smallest slack",
        )

    def reference_scenario(self) -> CheckResult:
        p = BASE_PARAMS
        eqs = {e.regime: e for e in fare_equilibria.all_equilibria(p, self.cfg.threshold_tol)}
        expected = {
            "n_mc": (eqs["MC"].split.n_a, 960.0),
            "n_ac1": (eqs["AC1"].split.n_a if "AC1" in eqs else math.nan, 60.0),
            "n_ac2": (eqs["AC2"].split.n_a if "AC2" in eqs else math.nan, 900.0),
            "n_m": (eqs["Monopoly"].split.n_a, 480.0),
            "p_m": (eqs["Monopoly"].fare, 1252.0),
        }
        gaps = {k: relative_gap(got, want) for k, (got, want) in expected.items()}
        worst = max(gaps.values()) if all(math.isfinite(v) for v in gaps.values()) else math.inf
        return CheckResult(
            name="reference_scenario",
            passed=worst <= 1e-9,
            draws=1,
            worst=worst,
            detail=" ".join(f"{k}={expected[k][0]:.10g}" for k in expected),
        )

    def stability_classes(self) -> CheckResult:
        rng = self._rng(4)
        draws = self._size("stability")
        expected = {"AC0": "stable", "AC1": "unstable", "AC2": "stable"}
        failures: List[str] = []
        worst = 0.0
        for i in range(draws):
            # keep roots well apart so the perturbation stays inside one basin
            p = draw_params(rng, f_a_share=(0.2, 0.7))
            n1 = fare_equilibria.ac_roots(p)[0]
            for protocol in stability.PROTOCOLS:
                report = stability.classify(p, stability.AVERAGE_COST, protocol, self.cfg)
                got = {rp.label: rp.status for rp in report.rest_points}
                if got != expected:
                    failures.append(f"draw {i} {protocol}: {got}")
                if self.quick and protocol != "Smith":
                    continue
                threshold = stability.locate_basin_threshold(p, protocol, self.cfg)
                err = abs(threshold - n1) / n1
                worst = max(worst, err)
                if err > 2e-3:
                    failures.append(f"draw {i} {protocol}: basin threshold off by {err:.3g}")
        return CheckResult(
            name="stability_classes",
            passed=not failures,
            draws=draws,
            worst=worst,
            detail="; ".join(failures) if failures else "max relative basin-threshold error",
        )

    def paradox_signs(self) -> CheckResult:
        base = PARADOX_PARAMS
        failures: List[str] = []
        flips = 0
        previous = None
        for mu in np.linspace(0.004, 0.0225, 50):
            p = base.with_updates(mu=float(mu))
            for regime in ("MC", "Monopoly"):
                rep = fare_equilibria.capacity_sensitivity(p, regime, self.cfg)
                if not (rep.dc_dmu < 0.0 and rep.dc_dmu_fd < 0.0):
                    failures.append(f"{regime} dc/dmu >= 0 at mu={mu:.5g}")
            rep = fare_equilibria.capacity_sensitivity(p, "AC2", self.cfg)
            scale = derive(p).a_prime * p.n_total / p.mu
            if abs(rep.dc_dmu) > 1e-6 * scale and (rep.dc_dmu > 0.0) != (rep.dc_dmu_fd > 0.0):
                failures.append(f"AC2 sign mismatch at mu={mu:.5g}")
            if previous is not None and previous != rep.paradox:
                flips += 1
            previous = rep.paradox
        return CheckResult(
            name="paradox_signs",
            passed=not failures,
            draws=50,
            worst=float(flips),
            detail="; ".join(failures) if failures else "number of paradox-flag flips along the sweep",
        )

    def first_best_lp(self) -> CheckResult:
        rng = self._rng(6)
        draws = self._size("lp")
        failures: List[str] = []
        worst = {"objective": 0.0, "n_a_cells": 0.0, "dual": 0.0}
        for case in ("mixed", "nv_only"):
            for i in range(draws):
                p = draw_params(rng, kappa_range=(0.05, 0.6), gamma_ratio=(0.5, 2.0))
                d = derive(p)
                if case == "mixed":
                    ceiling = min(1.0, 0.9 * (1.0 - p.kappa) / p.kappa)
                    share = rng.uniform(0.1, ceiling)
                    p = _with_b(p, share * p.kappa * d.a_prime * p.n_total)
                else:
                    p = _with_b(p, rng.uniform(1.1, 3.0) * (1.0 - p.kappa) * d.a_prime * p.n_total)
                if first_best.solve_first_best(p).case_label != case:
                    failures.append(f"{case} draw {i} landed in another case")
                    continue
                stats = first_best.lp_agreement(p, cfg=self.cfg)
                worst["objective"] = max(worst["objective"], stats["objective_rel_gap"])
                worst["n_a_cells"] = max(worst["n_a_cells"], stats["n_a_gap_cells"])
                worst["dual"] = max(worst["dual"], stats["dual_max_rel_error"])
        passed = not failures and worst["objective"] <= 1e-3 and worst["n_a_cells"] <= 2.0 and worst["dual"] <= 1e-2
        return CheckResult(
            name="first_best_lp",
            passed=passed,
            draws=2 * draws,
            worst=worst["dual"],
            detail="; ".join(failures) or " ".join(f"{k}={v:.3g}" for k, v in worst.items()),
        )

    def pareto_gap(self) -> CheckResult:
        rng = self._rng(7)
        draws = self._size("pareto")
        failures: List[str] = []
        worst = 0.0
        for i in range(draws):
            p = draw_params(rng, kappa_range=(0.05, 0.6))
            d = derive(p)
            p = _with_b(p, rng.uniform(0.1, 0.9) * (1.0 - p.kappa) * d.a_prime * p.n_total)
            report = first_best.pareto_check(p, self.cfg.threshold_tol)
            if report.case_label != "mixed":
                continue
            worst = max(worst, relative_gap(report.cost_gap, report.expected_gap))
            if not report.passed:
                failures.append(f"draw {i}")

        # sign flip across eta = 1, built by moving kappa around theta
        p = BASE_PARAMS.with_updates(kappa=0.5, theta=0.6, m=60.0)
        below = first_best.pareto_check(p.with_updates(kappa=0.62))
        above = first_best.pareto_check(p.with_updates(kappa=0.58))
        at_one = first_best.pareto_check(p.with_updates(kappa=0.6))
        if not (below.cost_gap < 0.0 < above.cost_gap and abs(at_one.cost_gap) <= 1e-9 * at_one.cost_mc):
            failures.append(f"no sign flip at eta=1: {below.cost_gap}, {at_one.cost_gap}, {above.cost_gap}")
        return CheckResult(
            name="pareto_gap",
            passed=not failures and worst <= 1e-9,
            draws=draws + 3,
            worst=worst,
            detail="; ".join(failures) or "max relative error of c_mc - c_fb against (eta - 1) B",
        )

    def self_financing(self) -> CheckResult:
        rng = self._rng(8)
        draws = self._size("pareto")
        worst = 0.0
        for _ in range(draws):
            p = draw_params(rng)
            d = derive(p)
            p = _with_b(p, rng.uniform(0.1, 2.0) * (1.0 - p.kappa) * d.a_prime * p.n_total)
            worst = max(worst, first_best.self_financing_check(p).relative_gap)
        return CheckResult(
            name="self_financing",
            passed=worst <= 1e-6,
            draws=draws,
            worst=worst,
            detail="max relative gap between exact and trapezoid toll revenue",
        )

    def second_best(self) -> CheckResult:
        rng = self._rng(9)
        draws = self._size("second_best")
        failures: List[str] = []
        worst = 0.0
        checked = 0
        for i in range(draws):
            # eta < 1 keeps the stationary point inside (0, N)
            p = draw_params(rng)
            p = p.with_updates(kappa=rng.uniform(p.theta + 0.1 * (1.0 - p.theta), 0.99))
            sb = second_best.solve_second_best(p)
            if sb.clamped != "none":
                continue
            checked += 1
            d = derive(p)
            scale = max(1.0, d.a_prime * p.n_total, abs(d.b_coef))
            if abs(second_best.sc_derivative(p, sb.n_a_sb)) > 1e-9 * scale:
                failures.append(f"draw {i}: not stationary")
            res = minimize_scalar(
                lambda x: second_best.sc_of_split(p, x),
                bounds=(0.0, p.n_total),
                method="bounded",
                options={"xatol": 1e-9 * p.n_total},
            )
            err = abs(res.x - sb.n_a_sb) / p.n_total
            worst = max(worst, err)
            if err > 1e-6:
                failures.append(f"draw {i}: golden-section minimiser off by {err:.3g}")

        p = BASE_PARAMS
        kappas = [p.kappa + (1.0 - p.kappa) * (1.0 - 0.5**k) for k in range(10)]
        distances = []
        for kappa in kappas:
            q = p.with_updates(kappa=kappa)
            d = derive(q)
            distances.append(abs(second_best.solve_second_best(q).n_a_sb - (d.a_coef * q.n_total - d.b_coef) / (2.0 * d.a_coef)))
        if any(b > a + 1e-9 * p.n_total for a, b in zip(distances, distances[1:])):
            failures.append(f"second best does not approach monopoly as kappa -> 1: {distances}")
        return CheckResult(
            name="second_best",
            passed=not failures and checked > 0,
            draws=checked,
            worst=worst,
            detail="; ".join(failures) or "max |golden-section - closed form| / N",
        )

    def _threshold_configs(self) -> List[ModelParams]:
        base = BASE_PARAMS
        configs = [base.with_updates(kappa=0.64), base.with_updates(kappa=0.775)]
        low = base.with_updates(kappa=0.91)
        f_a_c = second_best.critical_thresholds(low)["f_a_c"].value
        configs += [low.with_updates(f_a=0.5 * f_a_c), low.with_updates(f_a=3.0 * f_a_c)]
        return configs

    def welfare_thresholds(self) -> CheckResult:
        failures: List[str] = []
        worst = 0.0
        pairs = {
            "n_c_mc_ac": ("AC2", "MC"),
            "n_c_mc_m": ("Monopoly", "MC"),
            "n_c_ac_m": ("Monopoly", "AC2"),
        }
        configs = self._threshold_configs()
        for p in configs:
            th = second_best.critical_thresholds(p)
            lo = th["n_min"].value * (1.0 + 1e-6)
            crossings = [th[k].value for k in pairs if th[k].value is not None]
            hi = 4.0 * max(crossings + [lo])

            for key, (first, second) in pairs.items():

                def sc_gap(n: float, first=first, second=second) -> float:
                    values = _regime_social_costs(p.with_updates(n_total=n))
                    return values[first] - values[second]

                roots = bracketed_roots(sc_gap, lo, hi, samples=401, xtol=1e-9 * hi)
                value = th[key].value
                if value is None or value <= lo:
                    if roots:
                        failures.append(f"{key}: scan found {roots} where none expected")
                    continue
                if len(roots) != 1:
                    failures.append(f"{key}: scan found {roots}, expected {value}")
                    continue
                err = relative_gap(roots[0], value)
                worst = max(worst, err)
                if err > 1e-3:
                    failures.append(f"{key}: scan {roots[0]:.6g} vs closed form {value:.6g}")

            f_a_c = th["f_a_c"].value
            if f_a_c is not None:
                # above F_a,c AC2 already beats MC at the entry population N_min
                def entry_gap(f_a: float) -> float:
                    q = p.with_updates(f_a=f_a)
                    values = _regime_social_costs(q.with_updates(n_total=derive(q).n_min * (1.0 + 1e-6)))
                    return values["AC2"] - values["MC"]

                roots = bracketed_roots(entry_gap, 1e-6 * f_a_c, 10.0 * f_a_c, samples=401)
                if len(roots) != 1 or relative_gap(roots[0], f_a_c) > 1e-3:
                    failures.append(f"f_a_c: scan {roots} vs closed form {f_a_c:.6g}")
                else:
                    worst = max(worst, relative_gap(roots[0], f_a_c))

            # ranking chain away from every threshold
            marks = np.array(crossings)
            for n in np.geomspace(lo * 1.01, hi, 25):
                if marks.size and np.min(np.abs(marks - n) / marks) < 1e-2:
                    continue
                table = second_best.regime_social_costs(p.with_updates(n_total=float(n)))
                if not table.chain_holds:
                    failures.append(f"{table.eta_regime} N={n:.6g}: {table.ranking} != {table.expected_ranking}")
        return CheckResult(
            name="welfare_thresholds",
            passed=not failures,
            draws=len(configs),
            worst=worst,
            detail="; ".join(failures) or "max relative gap between scanned and closed-form thresholds",
        )

    def dynamics_axioms(self) -> CheckResult:
        rng = self._rng(11)
        total = self._size("axiom_states")
        batches = 100
        per_batch = total // batches
        violations = 0
        for _ in range(batches):
            p = draw_params(rng)
            rules = [stability.AVERAGE_COST, stability.fixed_fare(p.m), stability.fixed_fare(p.m * rng.uniform(0.5, 2.0))]
            rule = rules[int(rng.integers(len(rules)))]
            states = rng.uniform(0.0, p.n_total, per_batch)
            states = states[(states > 0.0) & (states < p.n_total)]
            g = stability.cost_gap_path(p, rule, states, self.cfg)
            rest = np.array([n for _, n, _ in stability.rest_points(p, rule, self.cfg)])
            for protocol in stability.PROTOCOLS:
                v = np.asarray(stability.velocity(p, rule, states, protocol, self.cfg))
                # positive correlation and Nash stationarity in one test
                violations += int(np.sum(np.sign(v) != np.sign(g)))
                at_rest = np.asarray(stability.velocity(p, rule, rest, protocol, self.cfg))
                violations += int(np.sum(np.abs(at_rest) >= 1e-12))
        return CheckResult(
            name="dynamics_axioms",
            passed=violations == 0,
            draws=batches * per_batch,
            worst=float(violations),
            detail="states where sign(V) != sign(c_n - c_a), plus rest points with |V| >= 1e-12",
        )

    def profile_oracle(self) -> CheckResult:
        rng = self._rng(12)
        draws = self._size("profile")
        failures: List[str] = []
        worst = 0.0
        for i in range(draws):
            p = draw_params(rng)
            for eq in fare_equilibria.all_equilibria(p, self.cfg.threshold_tol):
                if math.isinf(eq.fare):
                    continue
                prof = departure_time.build_profile(p, eq.split)
                report = departure_time.verify_profile(p, prof, eq.fare, cfg=self.cfg)
                worst = max(worst, report.nv_in_window_residual / report.tolerance, report.sav_in_window_residual / report.tolerance)
                if not report.passed:
                    failures.append(f"draw {i} {eq.regime}")
        return CheckResult(
            name="profile_oracle",
            passed=not failures,
            draws=draws,
            worst=worst,
            detail="; ".join(failures) or "max in-window residual in units of the tolerance",
        )

    def run(self) -> OracleReport:
        checks = [
            ("closed_form_vs_bisection", self.closed_form_vs_bisection),
            ("ordering_chain", self.ordering_chain),
            ("reference_scenario", self.reference_scenario),
            ("stability_classes", self.stability_classes),
            ("paradox_signs", self.paradox_signs),
            ("first_best_lp", self.first_best_lp),
            ("pareto_gap", self.pareto_gap),
            ("self_financing", self.self_financing),
            ("second_best", self.second_best),
            ("welfare_thresholds", self.welfare_thresholds),
            ("dynamics_axioms", self.dynamics_axioms),
            ("profile_oracle", self.profile_oracle),
        ]
        results = []
        for name, fn in checks:
            logger.info("running oracle %s", name)
            results.append(_timed(name, fn))
        return OracleReport(seed=self.seed, quick=self.quick, checks=results)


def run_oracle_suite(cfg: Optional[Settings] = None, seed: Optional[int] = None, quick: bool = False) -> OracleReport:
    return OracleSuite(cfg, seed, quick).run()


__all__ = [
    "BASE_PARAMS",
    "PARADOX_PARAMS",
    "draw_params",
    "OracleSuite",
    "run_oracle_suite",
]
