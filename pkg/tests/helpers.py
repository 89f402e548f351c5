"""Shared fixtures and cached searches for the test suite."""
import functools

import numpy as np

from metrised import constructions as cons
from metrised.search import SearchConfig, search

ACCEPTANCE_LINES: list[str] = []


def random_spd(m, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((m, m))
    f = M @ M.T / m + 0.5 * np.eye(m)
    return (f + f.T) / 2


@functools.lru_cache(maxsize=None)
def cached_search(key, multistart=None, include_conjugates=True):
    A = FIXTURES[key]()
    cfg = SearchConfig(multistart_count=multistart, include_conjugates=include_conjugates)
    return A, search(A, cfg)


FIXTURES = {
    "rsquare": cons.rsquare,
    "rsquare4": lambda: cons.rsquare().with_gram(4.0 * np.eye(2)),
    "sym2": lambda: cons.sym_jordan(2),
    "sym3": lambda: cons.sym_jordan(3),
    "sym4": lambda: cons.sym_jordan(4),
    "R+sym2": lambda: cons.direct_sum(cons.real_line(), cons.sym_jordan(2)),
    **{f"spin{m}": functools.partial(cons.spin_factor, np.eye(m)) for m in range(1, 10)},
    **{f"spinf{m}": (lambda m=m: cons.spin_factor(random_spd(m, m))) for m in range(1, 10)},
}
