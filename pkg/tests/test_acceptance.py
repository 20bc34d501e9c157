"""Acceptance criteria 1-9 at their stated tolerances.

Each test prints one ``PASS`` or ``FAIL`` line, then asserts.
"""

import json
import time

from fourierlab.cli import RunConfig, main
from fourierlab.funcexpr import Bump, Measure, inner_product
from fourierlab.quadrature import QuadConfig, fourier_transform, integrate_interval
from fourierlab.suites import SUITES, RunContext, run_suite

SEED = RunConfig().seed
CTX = RunContext(seed=SEED, max_n_heis=3, max_n_su2=4)

# [DERIVED] scipy.integrate.quad values, frozen
ORACLES = {
    "bump_integral": (lambda cfg: integrate_interval(
        lambda t: Bump(0, 1).derivs(t)[0], (-1, 1), cfg).value, 0.44399381616807937),
    "bump_ft": (lambda cfg: fourier_transform(
        lambda t: Bump(0, 1).derivs(t)[0], [(-1, 1)], 1.0, cfg), -0.04285753888556289),
    "bump_sq": (lambda cfg: inner_product(Bump(0, 1), Bump(0, 1), Measure.LEBESGUE_LINE, cfg),
                0.1330861208449943),
    "haar_sq": (lambda cfg: inner_product(Bump(1.5, 0.5), Bump(1.5, 0.5),
                                          Measure.HAAR_HALFLINE, cfg), 0.04494554765741706),
}


def _run(*ids):
    out, secs = {}, {}
    for sid in ids:
        t0 = time.perf_counter()
        out[sid] = run_suite(SUITES[sid], CTX)["records"]
        secs[sid] = time.perf_counter() - t0
    return out, secs


def _summary(records):
    bad = [r for r in records if not r.passed]
    worst = max((r.residual / r.tolerance for r in records), default=0.0)
    return bad, worst


def _report(capsys, n, title, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {n} ({title}): {detail}")


def _suite_detail(out, secs):
    parts = []
    for sid, recs in out.items():
        bad, worst = _summary(recs)
        parts.append(f"{sid} {len(recs) - len(bad)}/{len(recs)} "
                     f"worst residual/tol {worst:.2g} in {secs[sid]:.1f}s")
    return "; ".join(parts)


def _all_pass(out):
    return all(r.passed for recs in out.values() for r in recs)


def test_criterion_1_axb_orthogonality(capsys):
    out, secs = _run("axb.orthogonality")
    recs = out["axb.orthogonality"]
    labels = {r.id.rsplit(".", 1)[1] for r in recs}
    ok = _all_pass(out) and labels == {"plus", "minus", "cross", "tail_certificate"} \
        and len(recs) == 4 * 20
    _report(capsys, 1, "ax+b orthogonality", ok, _suite_detail(out, secs))
    assert ok


def test_criterion_2_madb_finite_differences(capsys):
    out, secs = _run("axb.madb_fd")
    ok = _all_pass(out) and len(out["axb.madb_fd"]) == 50
    _report(capsys, 2, "M_a d_b vs central differences", ok, _suite_detail(out, secs))
    assert ok


def test_criterion_3_axb_key_estimate(capsys):
    out, secs = _run("axb.key_estimate", "axb.nonvanishing")
    ok = _all_pass(out) and len(out["axb.key_estimate"]) == 2 * 200
    _report(capsys, 3, "ax+b key estimate, cyclicity, tightness", ok, _suite_detail(out, secs))
    assert ok


def test_criterion_4_axb_leibniz(capsys):
    out, secs = _run("axb.leibniz")
    recs = out["axb.leibniz"]
    products = sum(r.id.endswith(".product") for r in recs)
    nontrivial = sum(abs(r.lhs) > 0 for r in recs)
    ok = _all_pass(out) and len(recs) == 50 and products >= 20 and nontrivial == len(recs)
    _report(capsys, 4, "ax+b Leibniz rule", ok,
            f"{_suite_detail(out, secs)}; {products} two-factor products, "
            f"{nontrivial} non-zero D(fg, h)")
    assert ok


def test_criterion_5_heis_square_integrable(capsys):
    out, secs = _run("heis.square_integrable", "heis.cross_orthogonality")
    orders = {r.id.rsplit(".", 1)[1] for r in out["heis.square_integrable"]}
    ok = _all_pass(out) and orders == {f"n{s}{k}" for k in (1, 2, 3) for s in "+-"} \
        and len(out["heis.square_integrable"]) == 6 * 20
    _report(capsys, 5, "Heisenberg square integrability", ok, _suite_detail(out, secs))
    assert ok


def test_criterion_6_heis_derivation(capsys):
    out, secs = _run("heis.nonvanishing", "heis.lambda0_zero", "heis.key_estimate")
    orders = {int(r.id.rsplit(".n", 1)[1]) for r in out["heis.nonvanishing"]}
    ok = _all_pass(out) and {1, 2, 3} <= orders and len(out["heis.key_estimate"]) == 2 * 100
    _report(capsys, 6, "Heisenberg derivation, lambda_0, key estimate", ok,
            _suite_detail(out, secs))
    assert ok


def test_criterion_7_su2(capsys):
    out, secs = _run("su2.schur", "su2.f_pi_bound", "su2.key_estimate", "su2.nonvanishing")
    ok = _all_pass(out) and len(out["su2.key_estimate"]) == 2 * 200 \
        and len(out["su2.schur"]) == 25
    _report(capsys, 7, "SU(2) Schur, weight operator, key estimate, i/3", ok,
            _suite_detail(out, secs))
    assert ok


def test_criterion_8_decompositions(capsys):
    out, secs = _run("decomp.ftw", "decomp.lambda_conv", "decomp.heis_translation",
                     "decomp.w_isometry")
    identity = [r for r in out["decomp.lambda_conv"] if r.id.endswith(".identity")]
    ok = _all_pass(out) and len(identity) == 3
    _report(capsys, 8, "decomposition identities", ok, _suite_detail(out, secs))
    assert ok


def _monotone_errors(oracle):
    f, exact = oracle
    errs = []
    for tol in (1e-3, 1e-5, 1e-7, 1e-9, 1e-11, 1e-13):
        errs.append(abs(f(QuadConfig(rel_tol=tol, abs_tol=0.0)) - exact))
    return errs


def test_criterion_9_infrastructure(tmp_path, capsys):
    args = ["verify", "--suite", "su2.*", "--suite", "decomp.heis_translation",
            "--suite", "axb.madb_fd", "--corpus-size", "5", "--seed", "11"]
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    codes = [main(args + ["--out", str(p)]) for p in paths]

    def strip(p):
        text = p.read_text()
        rep = json.loads(text)
        for r in rep["records"]:
            r["wall_time_ms"] = 0
        for s in rep["suites"].values():
            s["wall_time_ms"] = 0
        return json.dumps(rep, sort_keys=True)

    deterministic = strip(paths[0]) == strip(paths[1])
    fail = main(["verify", "--suite", "su2.nonvanishing", "--tol-scale", "1e-30",
                 "--out", str(tmp_path / "c.json")])
    bad = main(["verify", "--suite", "nosuch.*", "--out", str(tmp_path / "d.json")])
    exit_ok = codes == [0, 0] and fail == 1 and bad == 2

    floor = 1e-14
    monotone = {}
    for name, oracle in ORACLES.items():
        errs = _monotone_errors(oracle)
        monotone[name] = all(b <= max(a, floor) for a, b in zip(errs, errs[1:])) \
            and errs[-1] < 1e-12
    ok = deterministic and exit_ok and all(monotone.values())
    _report(capsys, 9, "determinism, exit codes, refinement monotonicity", ok,
            f"byte-identical={deterministic}, exit codes {codes + [fail, bad]}, "
            f"monotone on {sum(monotone.values())}/{len(monotone)} oracles")
    assert ok
