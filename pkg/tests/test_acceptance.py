"""Acceptance criteria 1-10, each printing one PASS/FAIL line (also collected in the terminal summary)."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from paralab.exponents import gamma_exponent, iterate_gamma, sumset_exponent, zeta_exponent
from paralab.fourier import (
    fourier_lp_norm,
    mollify,
    power_spectrum,
    riesz_energy_fourier,
    spatial_energy_grid,
    spectrum_l2_on_disk,
)
from paralab.measures import cantor_parabola_measure, lattice_parabola_measure
from paralab.pipelines import run
from paralab.psi import line_of_translated_parabola, psi, tangent_line


def report(number: int, ok: bool, detail: str, elapsed: float, budget: float) -> None:
    ok = bool(ok) and elapsed < budget
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} (runtime {elapsed:.2f}s, budget {budget:g}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def verdict(record, name):
    return next(v for v in record.verdicts if v.name == name)


def test_criterion_01_psi_identities():
    start = time.perf_counter()
    rng = np.random.default_rng(20240101)
    z = rng.uniform(-2, 2, size=(100_000, 2))
    back = psi(psi(z))
    involution = float(np.max(np.abs(back - z)))
    # closed form of both line families: slope 2 z_x, intercept -z_x^2 - z_y (image line of z + parabola)
    # and slope 2 z_x, intercept z_y - 2 z_x^2 (tangent line at z); the library builders must agree
    slopes = 2.0 * z[:, 0]
    icpts = -z[:, 0] ** 2 - z[:, 1]
    tang_icpts = z[:, 1] - 2.0 * z[:, 0] ** 2
    builders = 0.0
    for i in range(0, len(z), 100):
        ln, tn = line_of_translated_parabola(z[i]), tangent_line(z[i])
        builders = max(builders, abs(ln.slope - slopes[i]), abs(ln.intercept - icpts[i]),
                       abs(tn.slope - slopes[i]), abs(tn.intercept - tang_icpts[i]))
    u = rng.uniform(-1, 1, len(z))
    img = psi(np.column_stack([z[:, 0] + u, z[:, 1] + u * u]))
    to_line = float(np.max(np.abs(img[:, 1] - (slopes * img[:, 0] + icpts))))
    x = rng.uniform(-2, 2, len(z))
    img2 = psi(np.column_stack([x, slopes * x + tang_icpts]))
    c = psi(z)
    to_parabola = float(np.max(np.abs(img2[:, 1] - (c[:, 1] + (img2[:, 0] - c[:, 0]) ** 2))))
    worst = max(involution, to_line, to_parabola, builders)
    elapsed = time.perf_counter() - start
    report(1, worst <= 1e-12,
           f"involution {involution:.2e}, parabola->line {to_line:.2e}, line->parabola {to_parabola:.2e}, "
           f"line builders {builders:.2e} on 1e5 samples (tol 1e-12)", elapsed, 1.0)


def test_criterion_02_even_exponent_identity():
    start = time.perf_counter()
    m = lattice_parabola_measure(2.0**-6, 0.5)
    errs = {}
    for n in (2, 3):
        spec = power_spectrum(m, n, 2.0**-8)
        lhs = fourier_lp_norm(m, 2 * n, 64.0, freq_spacing=spec.freq_spacing) ** (2 * n)
        rhs = spectrum_l2_on_disk(spec, 64.0)
        errs[n] = abs(lhs - rhs) / rhs
    elapsed = time.perf_counter() - start
    report(2, max(errs.values()) <= 1e-4,
           f"relative errors n=2 {errs[2]:.2e}, n=3 {errs[3]:.2e} (tol 1e-4)", elapsed, 60.0)


def test_criterion_03_sharpness_slopes():
    start = time.perf_counter()
    parts = []
    ok = True
    for s in (0.4, 0.5, 0.7):
        rec = run("sharpness", {"s": s, "levels": [6, 7, 8, 9, 10, 11], "tolerance": 0.15})
        v = verdict(rec, "l2_slope")
        ok &= v.passed
        parts.append(f"s={s}: slope {v.measured:.3f} vs {v.predicted:.3f}")
    elapsed = time.perf_counter() - start
    report(3, ok, "; ".join(parts) + " (tol 0.15)", elapsed, 300.0)


def test_criterion_04_sumset_growth():
    start = time.perf_counter()
    rec = run("sumset-growth", {"digits": [0, 3], "base": 4, "ns": [2, 3], "tolerance": 0.15})
    v2, v3 = verdict(rec, "box_slope_n2"), verdict(rec, "box_slope_n3")
    elapsed = time.perf_counter() - start
    ok = v2.measured >= 0.85 and v3.measured >= 1.10 and rec.passed
    report(4, ok, f"n=2 slope {v2.measured:.3f} (>= 0.85), n=3 slope {v3.measured:.3f} (>= 1.10)",
           elapsed, 300.0)


@pytest.fixture(scope="module")
def vinogradov_record():
    start = time.perf_counter()
    rec = run("vinogradov", {"s": 0.5, "n": 3, "levels": [5, 6, 7, 8], "margin": 0.2,
                             "oracle_instances": 20, "seed": 0})
    return rec, time.perf_counter() - start


def test_criterion_05_vinogradov_counts(vinogradov_record):
    rec, elapsed = vinogradov_record
    mism = verdict(rec, "oracle_mismatches").measured
    row = next(r for r in rec.rows if r[0] == 2.0**-8)
    ratio = row[3]
    report(5, mism == 0 and ratio <= 10.0,
           f"oracle mismatches {int(mism)}/20, count/(delta^1.3 |P|^6) at delta=2^-8 is {ratio:.3f} (<= 10)",
           elapsed, 180.0)


def test_criterion_06_count_energy(vinogradov_record):
    rec, elapsed = vinogradov_record
    worst = max(r[6] for r in rec.rows)
    gap = verdict(rec, "energy_slope_gap").measured
    report(6, worst <= 1e3 and abs(gap) <= 0.2,
           f"max count/energy ratio {worst:.2f} (<= 1e3), slope gap {gap:+.3f} (within 0.2)", elapsed, 180.0)


def test_criterion_07_fu_ren():
    start = time.perf_counter()
    rec = run("fu-ren", {"instances": 50, "levels": [6, 7, 8, 9, 10], "eps": 0.1, "constant": 10.0,
                         "seed": 0})
    kinds = {r[1] for r in rec.rows}
    violations = sum(1 for r in rec.rows if r[-1] > 10.0)
    v = verdict(rec, "max_ratio")
    elapsed = time.perf_counter() - start
    report(7, rec.passed and violations == 0 and kinds == {"tube", "parabola"} and len(rec.rows) == 50,
           f"50 instances ({', '.join(sorted(kinds))}), max counted/rhs {v.measured:.3f}, "
           f"violations {violations}", elapsed, 300.0)


def test_criterion_08_flattening():
    start = time.perf_counter()
    rec = run("flattening-monotone", {"r_levels": [4, 6], "kmax": 3, "tolerance": 1e-6})
    parts = [f"{v.name}={v.measured:.4g}" for v in rec.verdicts]
    elapsed = time.perf_counter() - start
    report(8, rec.passed, ", ".join(parts), elapsed, 120.0)


def test_criterion_09_energy_identities():
    start = time.perf_counter()
    measures = {
        "lattice": lattice_parabola_measure(2.0**-4, 0.5),
        "cantor": cantor_parabola_measure(4.0**-3, [0, 3], 4),
    }
    spreads = {}
    monotone_ok = True
    for name, m in measures.items():
        fourier_side = {}
        ratios = []
        for k in (5, 6, 7, 8):
            d = 2.0**-k
            fourier_side[k] = riesz_energy_fourier(m, 1.0, d).value
            f = mollify(m, d, 1.5, h=min(d / 4, 2.0**-7))
            ratios.append(fourier_side[k] / spatial_energy_grid(f, 1.0, use_fft=True))
        spreads[name] = max(ratios) / min(ratios) - 1.0
        # coarser mollification never carries more energy than 64 times a finer one
        for r in fourier_side:
            for d in fourier_side:
                if d >= r:
                    monotone_ok &= fourier_side[r] <= 64.0 * fourier_side[d]
    m = measures["lattice"]
    powers = [riesz_energy_fourier(m, 1.0, 2.0**-5, method="grid", power=k).value for k in (1, 2, 3)]
    power_ok = all(b <= a * (1 + 1e-6) for a, b in zip(powers, powers[1:]))
    elapsed = time.perf_counter() - start
    ok = max(spreads.values()) <= 0.15 and power_ok and monotone_ok
    report(9, ok,
           f"ratio spread lattice {spreads['lattice']:.3f}, cantor {spreads['cantor']:.3f} (<= 0.15); "
           f"power energies {', '.join(f'{v:.3f}' for v in powers)}; I^r <= 64 I^delta {monotone_ok}",
           elapsed, 120.0)


def test_criterion_10_exponent_coherence():
    start = time.perf_counter()
    grid_err = max(abs(iterate_gamma(i / 10, n) - sumset_exponent(i / 10, n))
                   for i in range(1, 11) for n in range(1, 13))
    spots = [
        abs(gamma_exponent(1.0, 2.0) - 2.0),
        abs(zeta_exponent(2 / 3, 4 / 3) - 5 / 3),
    ]
    diag = max(abs(zeta_exponent(s, min(2 * s, 2.0 - 1e-12)) - (s + 1))
               for s in np.linspace(2 / 3, 1.0, 11))
    elapsed = time.perf_counter() - start
    report(10, grid_err <= 1e-12 and max(spots) <= 1e-12 and diag <= 1e-9,
           f"grid error {grid_err:.1e}, spot errors {max(spots):.1e}, zeta(s,2s)-(s+1) {diag:.1e}",
           elapsed, 1.0)
