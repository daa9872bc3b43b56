"""One pass/fail line per acceptance criterion; run with ``-s`` to see them."""

import pytest

from spinflip_lgi.acceptance import CHECKS


@pytest.mark.parametrize("check", CHECKS, ids=[c.__name__.removeprefix("check_") for c in CHECKS])
def test_acceptance(check):
    res = check()
    print(res.line())
    assert res.passed, res.line()
