import numpy as np
import pytest

from dynqueue import ServiceProfile, critical_rate

TAU = 1.0

# family/params pairs exercised across the suite; the constant entry is
# the degenerate case on purpose
PROFILE_MATRIX = (
    ("constant", (2.0,)),
    ("affine", (1.0, 1.0)),
    ("quadratic", (4.0, 0.5, 1.0)),
    ("quadratic", (2.0, 0.3, 0.5)),
    ("quadratic", (9.0, 0.0, 1.0)),
    ("quadratic", (3.0, 0.7, 2.0)),
    ("piecewise-linear", (0.0, 2.0, 0.5, 1.0, 1.0, 3.0)),
    ("piecewise-linear", (0.0, 1.0, 1.0, 2.5)),
    ("piecewise-linear", (0.0, 3.0, 0.6, 0.8, 1.0, 4.0)),
    ("piecewise-linear", (0.0, 2.0, 0.3, 1.2, 0.7, 1.0, 1.0, 2.8)),
)


@pytest.fixture(scope="session")
def ref_profile():
    return ServiceProfile("quadratic", (4.0, 0.5, 1.0))


@pytest.fixture(scope="session")
def ref_critical(ref_profile):
    return critical_rate(ref_profile, TAU)


@pytest.fixture(scope="session")
def profile_matrix():
    return tuple(ServiceProfile(f, p) for f, p in PROFILE_MATRIX)


def independent_service_values(profile: ServiceProfile, xs: np.ndarray) -> np.ndarray:
    """Test-side evaluation of S on a grid, independent of the library path."""
    fam, par = profile.family, profile.params
    if fam == "constant":
        return np.full_like(xs, par[0])
    if fam == "affine":
        return par[0] * xs + par[1]
    if fam == "quadratic":
        return par[2] + par[0] * (xs - par[1]) ** 2
    return np.interp(xs, par[0::2], par[1::2])


def grid_rate_oracle(profile: ServiceProfile, tau: float, n: int = 1_000_000):
    """Best one-task cycle rate over a dense state grid.

    Enumerates 1/(S(x) + idle-return time) on n points of (0, 1]; the
    maximum is an independent estimate of the critical rate and its
    argmax of the critical threshold.
    """
    xs = np.linspace(0.0, 1.0, n + 1)[1:]
    s = independent_service_values(profile, xs)
    x_end = 1.0 - (1.0 - xs) * np.exp(-s / tau)
    cycle = s + tau * (np.log(x_end) - np.log(xs))
    i = int(np.argmax(1.0 / cycle))
    return 1.0 / cycle[i], xs[i]
