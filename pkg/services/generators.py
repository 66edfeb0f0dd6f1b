"""Seeded constructors for the random instance families."""
import logging
import math
from typing import List, Tuple

import numpy as np

from schemas.generators import ButterflyRouting, Family, GeneratedInstance, GeneratorSpec
from schemas.instances import FractionalPoint, PackingInstance
from services.errors import GeneratorParameterError
from services.rng import RNG_ID, Purpose, check_seed, stream

logger = logging.getLogger(__name__)


def _floyd_subsets(rng: np.random.Generator, count: int, n: int, k: int) -> List[Tuple[int, ...]]:
    """Draw `count` independent uniform k-subsets of [0, n) with Floyd's algorithm."""
    draws = [rng.integers(0, j + 1, size=count).tolist() for j in range(n - k, n)]
    subsets = []
    for r in range(count):
        chosen = set()
        for j, column in zip(range(n - k, n), draws):
            t = column[r]
            chosen.add(j if t in chosen else t)
        subsets.append(tuple(sorted(chosen)))
    return subsets


def random_k_sparse(m: int, n: int, k: int, seed: int) -> PackingInstance:
    """
    Random matrix with exactly k ones per row in uniformly chosen columns.

    Args:
        m: Number of rows
        n: Number of columns (variables)
        k: Ones per row, 2 <= k <= n - 1
        seed: 64-bit seed

    Returns:
        PackingInstance with unit rhs and unit weights
    """
    if m < 1 or n < 3 or not 2 <= k <= n - 1:
        raise GeneratorParameterError(f"need m >= 1 and 2 <= k <= n - 1, got m={m}, n={n}, k={k}")
    rng = stream(check_seed(seed), Purpose.GENERATOR)
    rows = _floyd_subsets(rng, m, n, k)
    return PackingInstance.create(rows, n)


def bernoulli_sparse(m: int, n: int, prob: float, seed: int) -> PackingInstance:
    """
    Random matrix with every entry independently 1 with probability prob.

    Empty rows are dropped; the dropped count is logged.
    """
    if m < 1 or n < 1:
        raise GeneratorParameterError(f"need m, n >= 1, got m={m}, n={n}")
    if not 0 < prob < 1:
        raise GeneratorParameterError(f"prob must lie in (0, 1), got {prob}")
    rng = stream(check_seed(seed), Purpose.GENERATOR)
    rows = []
    for _ in range(m):
        row = np.flatnonzero(rng.random(n) < prob)
        if len(row):
            rows.append(row.tolist())
    dropped = m - len(rows)
    if dropped:
        logger.warning(f"[GEN] bernoulli_sparse dropped {dropped} empty row(s) of {m}")
    return PackingInstance.create(rows, n)


def hypergraph_bmatch(
    n_vertices: int,
    m_edges: int,
    k: int,
    b: int,
    seed: int,
    certify: bool = False,
) -> Tuple[PackingInstance, FractionalPoint]:
    """
    Random k-uniform hypergraph as a b-matching packing program.

    Rows are vertices, variables are hyperedges, rhs is b. The returned
    point has every coordinate n/(m k) clipped to [0, 1]. That point meets the
    capacities only in expectation; with certify=True it is scaled down so
    that the busiest vertex carries exactly b.

    Returns:
        (instance, point)
    """
    if n_vertices < 1 or m_edges < 1 or not 1 <= k <= n_vertices or b < 1:
        raise GeneratorParameterError(
            f"need 1 <= k <= n_vertices, m_edges >= 1, b >= 1; got n={n_vertices}, m={m_edges}, k={k}, b={b}"
        )
    rng = stream(check_seed(seed), Purpose.GENERATOR)
    edges = _floyd_subsets(rng, m_edges, n_vertices, k)
    incident: List[List[int]] = [[] for _ in range(n_vertices)]
    for e, edge in enumerate(edges):
        for v in edge:
            incident[v].append(e)
    instance = PackingInstance.create(incident, m_edges, rhs=[float(b)] * n_vertices)

    value = min(1.0, n_vertices / (m_edges * k))
    if certify:
        busiest = max(len(row) for row in incident)
        if busiest * value > b:
            value = b / busiest
    return instance, FractionalPoint.uniform(m_edges, value)


def _forward_trail(source: int, target: int, levels: int, num_inputs: int) -> List[int]:
    trail, row = [], source
    for level in range(levels):
        bit = 1 << level
        kind = int((row & bit) != (target & bit))
        trail.append(level * 2 * num_inputs + 2 * row + kind)
        row ^= kind << level
    return trail


def _backward_trail(source: int, target: int, levels: int, num_inputs: int) -> List[int]:
    trail, row = [], source
    for level in reversed(range(levels)):
        bit = 1 << level
        kind = int((row & bit) != (target & bit))
        lower = row ^ (kind << level)
        trail.append(level * 2 * num_inputs + 2 * lower + kind)
        row = lower
    return trail


def butterfly_routing(num_inputs: int, seed: int) -> ButterflyRouting:
    """
    Route num_inputs * L pairs through random intermediate outputs.

    Every input is the source of L pairs and every input is the destination of
    L pairs (a random permutation of that multiset). Each pair goes forward
    along the canonical path to a uniform random output, then back along the
    canonical path to its destination.
    """
    if num_inputs < 2 or num_inputs & (num_inputs - 1):
        raise GeneratorParameterError(f"num_inputs must be a power of 2 >= 2, got {num_inputs}")
    levels = num_inputs.bit_length() - 1
    rng = stream(check_seed(seed), Purpose.GENERATOR)
    sources = [s for s in range(num_inputs) for _ in range(levels)]
    destinations = rng.permutation(np.array(sources)).tolist()
    intermediates = rng.integers(0, num_inputs, size=len(sources)).tolist()
    paths = [
        _forward_trail(s, r, levels, num_inputs) + _backward_trail(r, t, levels, num_inputs)
        for s, r, t in zip(sources, intermediates, destinations)
    ]
    return ButterflyRouting(
        num_inputs=num_inputs,
        levels=levels,
        sources=sources,
        destinations=destinations,
        intermediates=intermediates,
        paths=paths,
    )


def is_trail(routing: ButterflyRouting, path: int) -> bool:
    """Whether the path's edges form a connected walk from its source to its destination."""
    node = (0, routing.sources[path])
    for edge in routing.paths[path]:
        low, high = routing.edge_endpoints(edge)
        if node == low:
            node = high
        elif node == high:
            node = low
        else:
            return False
    return node == (0, routing.destinations[path])


def butterfly_instance(num_inputs: int, seed: int) -> Tuple[PackingInstance, FractionalPoint]:
    """
    Edge-by-path incidence program of a random two-phase butterfly routing.

    Rows are edges (capacity 1), variables are paths. Every path gets flow
    1/(c L) with c = ceil(max edge congestion / L), so the point is feasible
    by construction.
    """
    routing = butterfly_routing(num_inputs, seed)
    rows: List[set] = [set() for _ in range(routing.num_edges)]
    for p, trail in enumerate(routing.paths):
        for edge in trail:
            rows[edge].add(p)
    congestion = max(len(row) for row in rows)
    c = max(1, math.ceil(congestion / routing.levels))
    n_paths = len(routing.paths)
    instance = PackingInstance.create([sorted(row) for row in rows], n_paths)
    logger.debug(f"[GEN] butterfly N={num_inputs} congestion={congestion} c={c}")
    return instance, FractionalPoint.uniform(n_paths, 1.0 / (c * routing.levels))


def generate(spec: GeneratorSpec) -> GeneratedInstance:
    """Build the instance (and fractional point, if the family has one) for a spec."""
    family = Family(spec.family)
    point = None
    if family == Family.K_SPARSE_EXACT:
        instance = random_k_sparse(spec.m, spec.n, spec.k, spec.seed)
    elif family == Family.K_SPARSE_BERNOULLI:
        prob = spec.prob if spec.prob is not None else spec.k / spec.n
        instance = bernoulli_sparse(spec.m, spec.n, prob, spec.seed)
    elif family == Family.HYPERGRAPH_BMATCH:
        # m counts hyperedges (variables), n counts vertices (rows)
        instance, point = hypergraph_bmatch(spec.n, spec.m, spec.k, spec.b, spec.seed, spec.certify)
    else:
        instance, point = butterfly_instance(spec.inputs, spec.seed)
    dropped = spec.m - instance.m if family == Family.K_SPARSE_BERNOULLI else 0
    return GeneratedInstance(spec=spec, instance=instance, point=point, dropped_rows=dropped, rng=RNG_ID)


def default_point(instance: PackingInstance, scale: float = 1.0) -> FractionalPoint:
    """Uniform point min(rhs)/k scaled by `scale`; feasible for every row of size <= k."""
    k = max(instance.max_row_size, 1)
    base = min(instance.rhs, default=1.0) / k
    return FractionalPoint.uniform(instance.n_vars, min(1.0, base * scale))