"""Shared hypothesis strategies for small realized instances."""
from hypothesis import strategies as st

from delchoice.core import RealizedInstance, Solution

# Grid utilities keep expected-utility sums exact enough for equality checks
# and mirror the instances the floor census draws.
grid_values = st.sampled_from([i / 10.0 for i in range(1, 11)])


@st.composite
def small_instances(draw, min_n=1, max_n=3, max_k=3):
    n = draw(st.integers(min_n, max_n))
    agents = []
    for _ in range(n):
        k = draw(st.integers(1, max_k))
        agents.append(
            tuple(Solution(draw(grid_values), draw(grid_values)) for _ in range(k))
        )
    return RealizedInstance(tuple(agents))
