import pytest

from _geweke import ALL_CHECKS


@pytest.mark.parametrize("name", list(ALL_CHECKS))
def test_joint_distribution(name):
    result = ALL_CHECKS[name]()
    assert result.passed, result.describe()
