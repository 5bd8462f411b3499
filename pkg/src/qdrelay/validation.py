"""Acceptance checks, shared by ``qdrelay validate`` and the test suite.

Each check returns a :class:`CheckResult` carrying the numbers it compared,
so the written report doubles as a record of what the model produces.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import formulas as fm
from .chain import QdSource, RelayChain, chain_fidelity
from .numerics import TimeGrid, faddeeva
from .states import (
    PAULI_X,
    PAULI_Z,
    PHI_PLUS_STATE,
    PSI_MINUS,
    PSI_PLUS,
    ValidityAudit,
    bell_diagonal,
    bsm_swap,
    fidelity_to_bell,
    validity_audit,
    werner,
    werner_parameter,
)
from .sweep import ResultTable, is_unimodal, preset_spec, run_sweep, table_csv
from .wavepacket.grid import (
    FilterSpec,
    cascade_joint_amplitude,
    exponential_packet,
    mode_overlap,
    product_amplitude,
    purity,
    reduced_density,
)

FIG2C_CELL = {"delta_e": 0.2, "filter_fwhm": 4.0}
FIG2C_TARGETS = {2: 0.93, 3: 0.85}
FIG2C_TOL = 0.05
FULL_SWEEP_BUDGET_S = 600.0


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool = True
    details: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def expect(self, ok: bool, text: str):
        self.passed &= bool(ok)
        self.details.append(("ok    " if ok else "FAIL  ") + text)

    def note(self, text: str):
        self.details.append("note  " + text)

    @property
    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.number}: {self.title}"


def brute_force_swap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Two-pair swap from the full 16x16 density matrix (independent oracle)."""
    big = np.kron(a, b)  # qubit order A0 A1 B0 B1
    out = np.zeros((4, 4), dtype=complex)
    for bell, corr in ((PSI_PLUS, PAULI_X), (PSI_MINUS, PAULI_Z @ PAULI_X)):
        P = np.kron(np.kron(np.eye(2), np.outer(bell, bell.conj())), np.eye(2))
        t = (P @ big @ P).reshape([2] * 8)
        red = np.einsum("xmnyzmnw->xyzw", t).reshape(4, 4)
        U = np.kron(np.eye(2), corr)
        out += U @ red @ U.conj().T
    return out / np.trace(out).real


class Validator:
    """Runs the checks; sweep tables are computed once and shared."""

    def __init__(self, threads: int = 1, grid_points: int = 1024, seed: int = 20240501):
        self.threads = threads
        self.grid_points = grid_points
        self.seed = seed
        self.audit = ValidityAudit()
        self.timings: dict[str, float] = {}

    def _timed_sweep(self, name: str, threads: int) -> ResultTable:
        t0 = time.perf_counter()
        table = run_sweep(preset_spec(name), threads=threads)
        self.timings[f"{name} threads={threads}"] = time.perf_counter() - t0
        return table

    def _audited(self, fn):
        with validity_audit() as audit:
            out = fn()
        a = self.audit
        a.count += audit.count
        a.hermiticity = max(a.hermiticity, audit.hermiticity)
        a.min_eigenvalue = min(a.min_eigenvalue, audit.min_eigenvalue)
        a.trace_error = max(a.trace_error, audit.trace_error)
        a.failures.extend(audit.failures)
        return out

    @cached_property
    def tables_serial(self) -> dict[str, ResultTable]:
        return {p: self._audited(lambda p=p: self._timed_sweep(p, 1)) for p in ("fig2a", "fig2b", "fig2c")}

    @cached_property
    def fig2c_parallel(self) -> ResultTable:
        return self._timed_sweep("fig2c", max(2, self.threads))

    # -- criterion 1 ---------------------------------------------------------
    def check_eq1(self) -> CheckResult:
        r = CheckResult(1, "pair fidelity closed form")
        f1 = fm.fidelity_max(fm.SourceSpectral(S=0.4, T1_X=270.0))
        f2 = fm.fidelity_max(fm.SourceSpectral(S=0.0, g2=8e-5))
        r.expect(abs(f1 - 0.993402) <= 1e-6, f"fidelity_max(S=0.4, T1_X=270, g2=0) = {f1:.7f}, target 0.993402 +- 1e-6")
        r.expect(abs(f2 - 0.99994) <= 1e-6, f"fidelity_max(S=0, g2=8e-5) = {f2:.7f}, target 0.99994 +- 1e-6")
        return r

    # -- criterion 2 ---------------------------------------------------------
    def check_eq2(self) -> CheckResult:
        r = CheckResult(2, "PMD fidelity anchors")
        tau = fm.pmd_tau(0.1, 200.0)
        f120 = fm.fidelity_pmd(2.8284, 120.0)
        f1 = fm.fidelity_pmd(2.8284, 1.0)
        f10 = fm.fidelity_pmd(2.8284, 10.0)
        r.note(f"tau = 2 D sqrt(l) for D=0.1, l=200 km: {tau:.6f} ps")
        r.expect(f120 > 0.99, f"fidelity_pmd(2.8284, 120) = {f120:.7f} > 0.99")
        r.expect(abs(f1 - 0.7935) <= 0.005, f"fidelity_pmd(2.8284, 1) = {f1:.6f}, target 0.7935 +- 0.005")
        r.expect(
            abs(f10 - 0.9954) <= 0.001,
            f"fidelity_pmd(2.8284, 10) = {f10:.6f} by literal evaluation (0.9954 +- 0.001); "
            "a reference value of about 0.98 for this case does not follow from the closed form",
        )
        return r

    # -- criterion 3 ---------------------------------------------------------
    def check_eq3(self) -> CheckResult:
        r = CheckResult(3, "cascade visibility and grid oracle")
        t0 = time.perf_counter()
        v = fm.visibility_cascade(120.0, 270.0)
        r.expect(abs(v - 0.6923) <= 1e-4, f"visibility_cascade(120, 270) = {v:.6f}, target 0.6923 +- 1e-4")
        rng = np.random.default_rng(self.seed)
        worst = 0.0
        for a, b in rng.uniform(50.0, 500.0, size=(20, 2)):
            grid = TimeGrid.for_lifetimes(a, b, n_points=self.grid_points)
            p = purity(reduced_density(cascade_joint_amplitude(a, b, grid), "X"))
            worst = max(worst, abs(p - fm.visibility_cascade(a, b)))
        r.seconds = time.perf_counter() - t0
        r.expect(worst <= 1e-3, f"grid purity vs visibility_cascade, 20 random pairs in [50, 500] ps: max error {worst:.2e} <= 1e-3")
        r.expect(r.seconds < 10.0, f"runtime {r.seconds:.2f} s < 10 s")
        return r

    # -- criterion 4 ---------------------------------------------------------
    def check_eq4(self) -> CheckResult:
        r = CheckResult(4, "jitter visibility and sigma convention")
        r.expect(fm.visibility_jitter(0.0, 270.0) == 1.0, "visibility_jitter(0, T1) == 1 exactly")
        xs = np.linspace(0.0, 10.0, 201)
        err_real = max(abs(faddeeva(complex(x)).real - math.exp(-x * x)) / math.exp(-x * x) for x in xs)
        err_imag = max(
            abs(faddeeva(1j * y).real - math.exp(y * y) * math.erfc(y)) / (math.exp(y * y) * math.erfc(y)) for y in xs
        )
        r.expect(err_real <= 1e-10, f"Re w(x) = exp(-x^2) on [0, 10]: max relative error {err_real:.1e}")
        r.expect(err_imag <= 1e-10, f"w(iy) = exp(y^2) erfc(y) on [0, 10]: max relative error {err_imag:.1e}")

        T1 = 270.0
        grid = TimeGrid.for_lifetimes(T1, n_points=self.grid_points)
        f = exponential_packet(grid, T1)
        rho = reduced_density(product_amplitude(grid, f, f), "X")
        worst_printed = worst_angular = 0.0
        rows = []
        for dE in (0.25, 0.5, 1.0, 2.0, 4.0):
            printed = fm.visibility_jitter(dE, T1)
            angular = fm.visibility_jitter(dE, T1, "angular")
            m_printed = mode_overlap(rho, rho, dE, dE, convention=fm.JITTER_PRINTED)
            m_per_photon = mode_overlap(rho, rho, dE, dE, convention=fm.JITTER_PHYSICAL)
            m_relative = mode_overlap(rho, rho, dE / math.sqrt(2), dE / math.sqrt(2), convention=fm.JITTER_PHYSICAL)
            worst_printed = max(worst_printed, abs(m_printed - printed))
            worst_angular = max(worst_angular, abs(m_relative - angular))
            rows.append((dE, printed, m_printed, angular, m_relative, m_per_photon))
        r.expect(
            worst_printed <= 1e-3,
            f"mode_overlap under the resolved convention reproduces the literal jitter formula: max error {worst_printed:.1e}",
        )
        r.expect(
            worst_angular <= 1e-3,
            f"mode_overlap with relative std sigma reproduces the angular variant: max error {worst_angular:.1e}",
        )
        r.note("convention finding:")
        r.note("  The literal jitter formula equals the physical overlap integral only if the relative detuning")
        r.note("  of the two photons has standard deviation 2 pi sigma, sigma = dE / (2 sqrt(2 ln 2)).")
        r.note("  Read literally (dE = FWHM of the relative detuning in energy units) the physical overlap")
        r.note("  is the angular variant, which has no 2 pi in z. The literal form is therefore the angular")
        r.note("  form evaluated at 2 pi dE. The chain follows the literal form by default ('printed'): each photon")
        r.note("  gets std sqrt(2) pi sigma, so two independent sources give relative std 2 pi sigma.")
        r.note("  dE     printed   overlap(printed conv.)   angular   overlap(relative sigma)   overlap(per-photon FWHM dE)")
        for row in rows:
            r.note("  {:<5g}  {:.5f}   {:.5f}                  {:.5f}   {:.5f}                   {:.5f}".format(*row))
        v_casc = fm.visibility_cascade(120.0, 270.0)
        per_photon_4 = rows[-1][5]
        r.note(
            f"  measured remote-dot visibility 0.51(5) at dE ~ 4 ueV compares with printed {rows[-1][1]:.3f}, "
            f"physical per-photon {per_photon_4:.3f}, physical x cascade ceiling {per_photon_4 * v_casc:.3f}"
        )
        return r

    # -- criterion 5 ---------------------------------------------------------
    def check_swap(self) -> CheckResult:
        r = CheckResult(5, "Bell-measurement swap oracle")
        t0 = time.perf_counter()

        def body():
            rng = np.random.default_rng(self.seed + 5)
            worst = 0.0
            for _ in range(50):
                a = bell_diagonal(rng.dirichlet(np.ones(4)))
                b = bell_diagonal(rng.dirichlet(np.ones(4)))
                worst = max(worst, float(np.abs(bsm_swap(a, b, 1.0).state.matrix - brute_force_swap(a.matrix, b.matrix)).max()))
            w = werner(werner_parameter(0.95))
            fw = fidelity_to_bell(bsm_swap(w, w, 1.0).state)
            floor = fidelity_to_bell(bsm_swap(PHI_PLUS_STATE, PHI_PLUS_STATE, 0.0).state)
            return worst, fw, floor

        worst, fw, floor = self._audited(body)
        r.seconds = time.perf_counter() - t0
        r.expect(worst <= 1e-9, f"50 random Bell-diagonal pairs vs 16x16 projection: max deviation {worst:.1e}")
        p = werner_parameter(0.95)
        exact = (3.0 * p * p + 1.0) / 4.0
        r.expect(abs(fw - exact) <= 1e-6, f"Werner(0.95) swapped: fidelity {fw:.7f}, target (3p^2+1)/4 = {exact:.7f} +- 1e-6")
        r.expect(floor == 0.25, f"M = 0 floor for phi+ inputs: fidelity {floor!r} == 0.25")
        r.expect(r.seconds < 10.0, f"runtime {r.seconds:.2f} s < 10 s")
        return r

    # -- criterion 6 ---------------------------------------------------------
    def check_fig2_endpoints(self) -> CheckResult:
        r = CheckResult(6, "fig2c endpoints at L=2 and L=3")
        t0 = time.perf_counter()
        table = self.fig2c_parallel
        r.seconds = time.perf_counter() - t0
        spec = table.spec
        i = int(np.argmin(np.abs(spec.axis1.values - FIG2C_CELL["filter_fwhm"])))
        j = int(np.argmin(np.abs(spec.axis2.values - FIG2C_CELL["delta_e"])))
        r.note(f"cell: filter_fwhm = {spec.axis1.values[i]:g} ueV, delta_e = {spec.axis2.values[j]:g} ueV, P_X=2, P_XX=10, S=0.05 ueV")
        for L, target in FIG2C_TARGETS.items():
            f = table.grid(L)[j, i]
            r.expect(abs(f - target) <= FIG2C_TOL, f"L={L}: fidelity {f:.4f}, target {target} +- {FIG2C_TOL}")
            below = table.grid(L)[: j + 1, i]
            r.expect(
                below.min() >= target - FIG2C_TOL,
                f"L={L}: fidelity over delta_e in [0, 0.2] spans {below.min():.4f} .. {below.max():.4f} "
                f"(lower bound {target - FIG2C_TOL:.2f})",
            )
        src = QdSource(S=0.05, delta_E=FIG2C_CELL["delta_e"], P_X=2.0, P_XX=10.0)
        vals = [
            chain_fidelity(
                RelayChain.homogeneous(L, src, filter=FilterSpec(4.0), jitter_convention=fm.JITTER_PHYSICAL)
            ).fidelity
            for L in (2, 3)
        ]
        r.note(f"same cell with the physical jitter convention: L=2 {vals[0]:.4f}, L=3 {vals[1]:.4f}")
        r.expect(r.seconds < FULL_SWEEP_BUDGET_S, f"full 25x25x3 fig2c sweep in {r.seconds:.1f} s < {FULL_SWEEP_BUDGET_S:g} s")
        return r

    # -- criterion 7 ---------------------------------------------------------
    def check_fig2_shapes(self) -> CheckResult:
        r = CheckResult(7, "preset lattice shape properties")
        t0 = time.perf_counter()
        tables = self.tables_serial
        r.seconds = time.perf_counter() - t0
        tol = 1e-12
        for name, t in tables.items():
            depths = t.spec.depths
            worst_de = max(float(np.max(np.diff(t.grid(L), axis=0))) for L in depths)
            r.expect(worst_de <= tol, f"{name}: fidelity non-increasing in delta_e (largest step up {worst_de:.1e})")
            worst_l = max(float(np.max(t.grid(b) - t.grid(a))) for a, b in zip(depths[:-1], depths[1:]))
            r.expect(worst_l <= tol, f"{name}: fidelity non-increasing in L (largest increase {worst_l:.1e})")
        b0 = tables["fig2b"]
        worst_p = max(float(-np.min(np.diff(b0.grid(L)[0]))) for L in b0.spec.depths)
        r.expect(worst_p <= tol, f"fig2b: fidelity non-decreasing in P at delta_e = 0 (largest drop {worst_p:.1e})")
        dom = min(float(np.min(tables["fig2b"].grid(L) - tables["fig2a"].grid(L))) for L in b0.spec.depths)
        r.expect(dom >= -tol, f"fig2b dominates fig2a pointwise (smallest margin {dom:.2e})")
        c = tables["fig2c"]
        de = c.spec.axis2.values
        for L in c.spec.depths:
            g = c.grid(L)
            unimodal = sum(is_unimodal(row) for row in g)
            interior = [0 < int(np.argmax(row)) < len(row) - 1 for row in g]
            rows = [k for k in range(len(de)) if de[k] >= 0.025]
            r.expect(unimodal == len(g), f"fig2c L={L}: unimodal along filter_fwhm in {unimodal}/{len(g)} rows")
            r.expect(
                all(interior[k] for k in rows),
                f"fig2c L={L}: interior optimum in all {len(rows)} rows with delta_e >= 0.025 "
                f"({sum(interior)}/{len(g)} rows overall)",
            )
        r.note("without jitter the narrowest filter is best, so rows with delta_e -> 0 peak at the axis start")
        r.expect(r.seconds < 300.0, f"property sweeps in {r.seconds:.1f} s < 300 s")
        return r

    # -- criterion 8 ---------------------------------------------------------
    def check_state_validity(self) -> CheckResult:
        r = CheckResult(8, "state validity across acceptance runs")
        self.tables_serial
        a = self.audit
        r.expect(a.count > 0, f"{a.count} two-qubit states audited in-process")
        r.expect(a.hermiticity <= 1e-12, f"max Hermiticity deviation {a.hermiticity:.1e} <= 1e-12")
        r.expect(a.min_eigenvalue >= -1e-9, f"min eigenvalue {a.min_eigenvalue:.1e} >= -1e-9")
        r.expect(a.trace_error <= 1e-9, f"max trace error {a.trace_error:.1e} <= 1e-9")
        r.expect(not a.failures, f"{len(a.failures)} construction failures")
        r.note("worker processes run the same constructor checks, which raise on any violation")
        return r

    # -- criterion 9 ---------------------------------------------------------
    def check_determinism(self) -> CheckResult:
        r = CheckResult(9, "determinism across thread counts")
        serial = table_csv(self.tables_serial["fig2c"]).encode()
        parallel = table_csv(self.fig2c_parallel).encode()
        n = max(2, self.threads)
        r.expect(serial == parallel, f"fig2c CSV with 1 and {n} workers: {len(serial)} bytes, identical={serial == parallel}")
        return r

    def checks(self):
        return [
            self.check_eq1,
            self.check_eq2,
            self.check_eq3,
            self.check_eq4,
            self.check_swap,
            self.check_fig2_endpoints,
            self.check_fig2_shapes,
            self.check_state_validity,
            self.check_determinism,
        ]

    def run_all(self) -> list[CheckResult]:
        return [check() for check in self.checks()]


def format_report(results: list[CheckResult], timings: dict[str, float] | None = None) -> str:
    out = ["qdrelay validation report", ""]
    for res in results:
        out.append(res.line)
        out.extend("    " + d for d in res.details)
        out.append("")
    if timings:
        out.append("sweep timings:")
        out.extend(f"    {k}: {v:.2f} s" for k, v in sorted(timings.items()))
        out.append("")
    passed = sum(r.passed for r in results)
    out.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(out) + "\n"


__all__ = ["CheckResult", "Validator", "brute_force_swap", "format_report"]
