"""Acceptance gate: one test per numbered criterion.

Each test runs the identical named recipe the CLI exposes through
--recipe, so CI and the command line execute the same code path with the
same frozen seeds.  A failure message lists every failed sub-check with
its observed and required values.
"""

from stablemv.recipes import run_recipe


def _assert_recipe(name):
    report = run_recipe(name)
    lines = [
        f"criterion {report['criterion']} [{name}]: "
        f"{'PASS' if report['passed'] else 'FAIL'}"
    ]
    for check in report["checks"]:
        mark = "pass" if check["passed"] else "FAIL"
        lines.append(
            f"  [{mark}] {check['name']}: observed={check['observed']} "
            f"required={check['required']}"
        )
    print("\n".join(lines))
    assert report["passed"], "\n".join(lines)


def test_criterion_01_stable_sampler_char_fn():
    _assert_recipe("stable_cf")


def test_criterion_02_cauchy_fractional_moment():
    _assert_recipe("cauchy_moment")


def test_criterion_03_subordination_identity():
    _assert_recipe("subordination")


def test_criterion_04_wasserstein_exactness():
    _assert_recipe("wasserstein_exact")


def test_criterion_05_euler_exactness_and_refinement():
    _assert_recipe("euler_scheme")


def test_criterion_06_picard_contraction():
    _assert_recipe("picard_contraction")


def test_criterion_07_gradient_decay_exponent():
    _assert_recipe("grad_decay")


def test_criterion_08_fractional_derivative_decay_exponent():
    _assert_recipe("frac_decay")


def test_criterion_09_counterexample_end_to_end():
    _assert_recipe("counterexample")


def test_criterion_10_moment_bound_form():
    _assert_recipe("moment_bound")


def test_criterion_11_reproducibility():
    _assert_recipe("reproducibility")
