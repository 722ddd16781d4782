"""Acceptance suite: one test per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -s``; a PASS/FAIL line per criterion
is printed at the end of the session and by each test.
"""

import time

import numpy as np
import pytest

from freemax import (
    Atomic, Frechet, Gumbel, RngStream, Uniform, classical_max_conv,
    free_max_conv, kth_root, lambda_vee, per_coordinate_ks,
)
from freemax.cli import main
from freemax.distributions import EmpiricalStep
from freemax.harness import spectral_convergence_table
from freemax.limitlaw import (
    brute_force_ranked, sample_limit_matrix, sample_limit_ranked,
)
from freemax.maxstable import (
    doa_check, matrix_max_id_test, matrix_max_stability_test,
)
from freemax.spectral import eig, rotate_diag, spectral_max, spectral_projector, top_n_merge
from oracles import limit_density_mass, order_stats_histogram_gap

U01 = Uniform(0, 1)
BERNOULLI = Atomic([(0.0, 0.5), (1.0, 0.5)])
ANALYTIC = [U01, Gumbel(0, 1), Frechet(2, 0, 1)]


def report(n, ok, detail, t0):
    print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - t0:.1f} s)")


@pytest.mark.criterion(1, "morphism identity lambda_vee(FG) == lambda_vee(F) free-max lambda_vee(G)")
def test_c1_morphism_identity():
    t0 = time.perf_counter()
    laws = ANALYTIC + [BERNOULLI]
    worst = 0.0
    for F in laws:
        for G in laws:
            lo = min(F.bounds(1e-9)[0], G.bounds(1e-9)[0]) - 1
            hi = max(F.bounds(1e-9)[1], G.bounds(1e-9)[1]) + 1
            x = np.linspace(lo, hi, 10_000)
            lhs = lambda_vee(classical_max_conv(F, G))(x)
            rhs = free_max_conv(lambda_vee(F), lambda_vee(G))(x)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    ok = worst <= 1e-12
    report(1, ok, f"max gap {worst:.3g} (<= 1e-12)", t0)
    assert ok


@pytest.mark.criterion(2, "discrete free max-convolution equals top-N merge exactly")
def test_c2_discrete_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    bad = 0
    for trial in range(1000):
        N = int(rng.integers(1, 33))
        # small integer lattices force ties within and across the two multisets
        span = int(rng.integers(1, 3 * N + 2))
        a = rng.integers(0, span, N).astype(float)
        b = rng.integers(0, span, N).astype(float)
        if trial % 4 == 0:
            a, b = rng.random(N), rng.random(N)
        got = free_max_conv(EmpiricalStep(a), EmpiricalStep(b))
        want = EmpiricalStep(top_n_merge(np.concatenate((a, b)), N))
        x = np.concatenate((want.points, got.points, np.arange(-1.0, span + 1, 0.5)))
        same = (isinstance(got, EmpiricalStep)
                and np.array_equal(got.samples, want.samples)
                and np.array_equal(got.counts, want.counts)
                and np.array_equal(got(x), want(x)))
        bad += not same
    report(2, bad == 0, f"{1000 - bad}/1000 exact matches", t0)
    assert bad == 0


@pytest.mark.criterion(3, "spectral max has the top-N merged spectrum and maximal cut ranks")
def test_c3_spectral_max_top_n():
    t0 = time.perf_counter()
    failures = []
    for N in (2, 4, 8, 16):
        rng = RngStream(3, N)
        for trial in range(1000):
            if trial % 2:
                a, b = rng.random(N), rng.random(N)
            else:
                a = rng.integers(0, 4, N).astype(float)
                b = rng.integers(0, 4, N).astype(float)
            a, b = np.sort(a)[::-1], np.sort(b)[::-1]
            M = spectral_max(rotate_diag(a, rng), rotate_diag(b, rng))
            want = top_n_merge(np.concatenate((a, b)), N)
            err = float(np.max(np.abs(eig(M).values - want)))
            distinct = np.unique(np.concatenate((a, b)))
            rank_ok = all(
                spectral_projector(M, t).rank == min(N, int(np.sum(a > t)) + int(np.sum(b > t)))
                for t in 0.5 * (distinct[1:] + distinct[:-1])
            )
            if err > 1e-8 or not rank_ok:
                failures.append((N, trial, err, rank_ok))
    ok = not failures
    report(3, ok, f"{4000 - len(failures)}/4000 trials match to 1e-8 with maximal ranks", t0)
    assert ok, failures[:5]


@pytest.mark.criterion(4, "exact limit sampler agrees with the brute-force oracle (k=2000)")
@pytest.mark.parametrize("F", ANALYTIC, ids=repr)
def test_c4_exact_vs_brute_force(F):
    t0 = time.perf_counter()
    n = 100_000
    worst, moments_ok = 0.0, True
    for N in (1, 2, 3, 5):
        seed = 40 + 10 * ANALYTIC.index(F) + N
        exact = sample_limit_ranked(F, N, RngStream(seed, 0), size=n)
        brute = brute_force_ranked(F, N, 2000, RngStream(seed, 1), size=n)
        worst = max(worst, float(per_coordinate_ks(exact, brute).max()))
        # u_N = -log F(t_N) ~ Gamma(N, rate N): mean 1, variance 1/N
        u = -np.log(F(exact[:, -1]))
        moments_ok &= abs(u.mean() - 1) <= 0.01 and abs(u.var(ddof=1) * N - 1) <= 0.1
    ok = worst <= 0.02 and moments_ok
    report(4, ok, f"{F!r}: max KS {worst:.4f} (<= 0.02), Gamma moments {'ok' if moments_ok else 'off'}", t0)
    assert ok


@pytest.mark.criterion(5, "semigroup at vector and matrix level")
@pytest.mark.parametrize("N", [2, 4])
def test_c5_semigroup(N):
    t0 = time.perf_counter()
    F, G = U01, Gumbel(0, 1)
    n = 10_000
    ref = sample_limit_ranked(classical_max_conv(F, G), N, RngStream(50 + N, 0), size=n)
    a = sample_limit_ranked(F, N, RngStream(50 + N, 1), size=n)
    b = sample_limit_ranked(G, N, RngStream(50 + N, 2), size=n)
    vec = -np.sort(-np.concatenate((a, b), axis=1), axis=1)[:, :N]
    ks_vec = float(per_coordinate_ks(vec, ref).max())
    rng = RngStream(50 + N, 3)
    mat = np.array([eig(spectral_max(sample_limit_matrix(F, N, rng), sample_limit_matrix(G, N, rng))).values
                    for _ in range(n)])
    ks_mat = float(per_coordinate_ks(mat, ref).max())
    ok = ks_vec <= 0.03 and ks_mat <= 0.03
    report(5, ok, f"N={N}: vector KS {ks_vec:.4f}, matrix KS {ks_mat:.4f} (<= 0.03)", t0)
    assert ok


@pytest.mark.criterion(6, "empirical spectral law converges to lambda_vee(Uniform)")
def test_c6_spectral_convergence():
    t0 = time.perf_counter()
    Ns = [50, 200, 1000, 2000, 4000]
    med = np.median(spectral_convergence_table(U01, Ns, 20, 6), axis=1)
    path = med[[0, 1, 2, 4]]
    ok = med[1] < 0.12 and med[3] < 0.05 and bool(np.all(np.diff(path) < 0))
    table = ", ".join(f"N={N}: {m:.4f}" for N, m in zip(Ns, med))
    report(6, ok, f"median KS {table}", t0)
    assert ok


@pytest.mark.criterion(7, "matrix max-infinite-divisibility and max-stability")
@pytest.mark.parametrize("p", [2, 4])
def test_c7_max_id_and_stability(p):
    t0 = time.perf_counter()
    reps = {
        "max-id Uniform": matrix_max_id_test(U01, 2, p, 10_000, RngStream(70, p)),
        "stable Frechet(2)": matrix_max_stability_test(Frechet(2, 0, 1), 2, p, 10_000, RngStream(71, p)),
        "stable Gumbel": matrix_max_stability_test(Gumbel(0, 1), 2, p, 10_000, RngStream(72, p)),
    }
    ok = all(r.ks.max() <= 0.03 for r in reps.values())
    detail = ", ".join(f"{k}: {r.ks.max():.4f}" for k, r in reps.items())
    report(7, ok, f"p={p}: {detail} (<= 0.03)", t0)
    assert ok


@pytest.mark.criterion(8, "free domain-of-attraction bound for max-root sequences")
def test_c8_domain_of_attraction():
    t0 = time.perf_counter()
    ks = list(range(2, 257, 2))
    finals, ok = [], True
    for F in ANALYTIC:
        rep = doa_check(lambda k: kth_root(F, k), F, ks)
        ok &= all(e <= 3 * c + 10 / k for k, c, e in zip(rep.ks, rep.e_cls, rep.e_free))
        ok &= rep.e_free[-1] <= 0.01
        finals.append(rep.e_free[-1])
    report(8, ok, "e_free(256) = " + ", ".join(f"{e:.4f}" for e in finals) + " (<= 0.01)", t0)
    assert ok


@pytest.mark.criterion(9, "limit density normalisation and order-statistics histogram")
def test_c9_densities():
    t0 = time.perf_counter()
    mass = limit_density_mass(U01, 2000)
    gap = order_stats_histogram_gap()
    ok = abs(mass - 1) <= 1e-3 and gap <= 0.03
    report(9, ok, f"mass {mass:.6f} (1 +- 1e-3), histogram gap {gap:.4f} (<= 0.03)", t0)
    assert ok


def _csv_bytes(path):
    return {p.name: p.read_bytes() for p in sorted(path.glob("*.csv"))}


@pytest.mark.criterion(10, "byte-identical CSVs across FREEMAX_THREADS")
def test_c10_determinism(tmp_path, monkeypatch):
    t0 = time.perf_counter()
    runs = [
        ["conv-demo"],
        ["matrix-max", "--draws", "50"],
        ["limit-sampler-check", "--N", "1,3", "--k", "100", "--draws", "5000"],
        ["semigroup", "--N", "2", "--draws", "1500"],
        ["spectral-convergence", "--N", "50,200", "--draws", "3"],
        ["max-stable", "--draws", "500"],
        ["max-id", "--draws", "500"],
        ["doa", "--k", "32"],
        ["sample", "--N", "4", "--draws", "3000"],
    ]
    diffs = []
    for argv in runs:
        outs = []
        for threads in ("1", "3", "8"):
            monkeypatch.setenv("FREEMAX_THREADS", threads)
            out = tmp_path / argv[0] / threads
            main(argv + ["--seed", "10", "--out", str(out)])
            outs.append(_csv_bytes(out))
        if not outs[0] or any(o != outs[0] for o in outs[1:]):
            diffs.append(argv[0])
    ok = not diffs
    report(10, ok, f"{len(runs) - len(diffs)}/{len(runs)} experiments identical at 1, 3, 8 threads", t0)
    assert ok, diffs
