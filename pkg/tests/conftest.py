import numpy as np
import pytest

from graphdiff.synth import complete_graph, erdos_renyi, path_graph, star_graph


@pytest.fixture(scope="session")
def p2():
    return path_graph(2)


@pytest.fixture(scope="session")
def p3():
    return path_graph(3)


@pytest.fixture(scope="session")
def k3():
    return complete_graph(3)


@pytest.fixture(scope="session")
def s4():
    return star_graph(4)


@pytest.fixture(scope="session")
def er_small():
    return erdos_renyi(60, 0.1, seed=7)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile the numba kernels once so timed blocks measure runs, not builds."""
    import warnings

    from graphdiff.global_solvers import chebyshev, gauss_seidel, gradient_descent
    from graphdiff.local_solvers import local_ch, local_gd, local_gs, local_hk
    from graphdiff.systems import make_ppr_system

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = complete_graph(3)
        sys_ = make_ppr_system(g, 0.5, 0, 0.05)
        local_gs(sys_)
        local_gd(sys_)
        local_gd(sys_, parallel=True)
        local_ch(sys_)
        local_hk(g, 0.5, 0, 0.05)
        gauss_seidel(sys_)
        gradient_descent(sys_)
        chebyshev(sys_)


def random_simple_graph(n, p, seed):
    return erdos_renyi(n, p, seed=seed)


def rng_for(seed):
    return np.random.default_rng(seed)
