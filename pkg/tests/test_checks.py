import time

from icflow import background as bg
from icflow import checks


class _BrokenProfile:
    """Delegating wrapper with a sign error in the second warp derivative."""

    def __init__(self, inner):
        self._inner = inner
        self.params = inner.params

    def __getattr__(self, name):
        return getattr(self._inner, name)

    def lambda_pp_of_lambda(self, lam):
        return -self._inner.lambda_pp_of_lambda(lam)


def test_suite_passes_and_is_fast(capsys):
    t0 = time.time()
    assert checks.run_all()
    elapsed = time.time() - t0
    assert elapsed < 60.0
    out = capsys.readouterr().out
    assert out.count("PASS") == len(checks.ALL_CHECKS) + 1
    assert "FAIL" not in out


def test_contraction_check_detects_broken_warp():
    prof = bg.build_warp_profile(bg.BackgroundParams(m=1.0, n=2), 8.0)
    ok, _ = checks.check_contraction_identity(profile=_BrokenProfile(prof))
    assert not ok
