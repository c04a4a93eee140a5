"""The private sector's causal model as a Gaussian Bayesian network.

A :class:`Dag` over the six model variables is fitted to an objective joint
by running one linear regression per node on its parents. Composing those
regressions with independent residuals gives the subjective joint, and the
inflation forecast is the conditional mean of ``pi`` given the signal under
that subjective joint.

DAG files are JSON objects ``{"nodes": [...], "edges": [[from, to], ...]}``
with lowercase labels from :data:`LABELS`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .linalg_gauss import PSD_RTOL, AffineFunction, GaussianJoint, condition, regress

LABELS = ("theta", "a", "t", "e", "pi", "y")
_ORDER = {lab: i for i, lab in enumerate(LABELS)}


@dataclass(frozen=True)
class Dag:
    """Node set plus parent map ``R``.

    When ``t`` is omitted the action ``a`` stands in for the signal; this is
    only meaningful when the signal is the identity ``t = a``.
    """

    nodes: frozenset[str]
    parents: Mapping[str, frozenset[str]]
    _order: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        unknown = nodes - set(LABELS)
        if unknown:
            raise ValueError(f"unknown labels {sorted(unknown)}; allowed {LABELS}")
        parents = {n: frozenset(self.parents.get(n, ())) for n in nodes}
        extra = set(self.parents) - nodes
        if extra:
            raise ValueError(f"parents given for non-nodes {sorted(extra)}")
        for child, pa in parents.items():
            missing = pa - nodes
            if missing:
                raise ValueError(f"parents {sorted(missing)} of {child!r} are not nodes")
            if child in pa:
                raise ValueError(f"self-loop on {child!r}")
        required = {"pi", "y"}
        if not required <= nodes:
            raise ValueError("a DAG must contain 'pi' and 'y'")
        if "t" not in nodes and "a" not in nodes:
            raise ValueError("a DAG must contain the signal 't' (or 'a' standing in for it)")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "_order", tuple(self._kahn()))  # raises on cycles

    @classmethod
    def from_edges(cls, nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> "Dag":
        nodes = set(nodes)
        parents: dict[str, set[str]] = {n: set() for n in nodes}
        for src, dst in edges:
            if dst not in parents:
                raise ValueError(f"edge target {dst!r} is not a node")
            parents[dst].add(src)
        return cls(frozenset(nodes), {k: frozenset(v) for k, v in parents.items()})

    @classmethod
    def from_json(cls, obj) -> "Dag":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "nodes" not in obj:
            raise ValueError('DAG JSON must be an object with "nodes" and "edges"')
        edges = obj.get("edges", [])
        for edge in edges:
            if not (isinstance(edge, list) and len(edge) == 2):
                raise ValueError(f"malformed edge {edge!r}")
        return cls.from_edges(obj["nodes"], [tuple(e) for e in edges])

    def to_json(self) -> dict:
        return {"nodes": self.ordered_nodes(), "edges": [list(e) for e in self.edges()]}

    def ordered_nodes(self) -> list[str]:
        return sorted(self.nodes, key=_ORDER.__getitem__)

    def ordered_parents(self, node: str) -> list[str]:
        return sorted(self.parents[node], key=_ORDER.__getitem__)

    def edges(self) -> list[tuple[str, str]]:
        return [(p, c) for c in self.ordered_nodes() for p in self.ordered_parents(c)]

    def topological_order(self) -> list[str]:
        return list(self._order)

    def _kahn(self) -> list[str]:
        # Kahn's algorithm; ties broken by the canonical label order.
        remaining = {n: set(pa) for n, pa in self.parents.items()}
        order = []
        while remaining:
            ready = sorted((n for n, pa in remaining.items() if not pa), key=_ORDER.__getitem__)
            if not ready:
                raise ValueError(f"graph has a cycle among {sorted(remaining)}")
            node = ready[0]
            order.append(node)
            del remaining[node]
            for pa in remaining.values():
                pa.discard(node)
        return order

    def ancestors(self, node: str) -> set[str]:
        seen: set[str] = set()
        stack = list(self.parents[node])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self.parents[n])
        return seen

    @property
    def signal_node(self) -> str:
        """Variable the forecast conditions on: ``t``, or ``a`` under the alias."""
        return "t" if "t" in self.nodes else "a"


def _dag(edges, nodes=None) -> Dag:
    if nodes is None:
        nodes = {n for e in edges for n in e}
    return Dag.from_edges(nodes, edges)


# The signal block theta -> a, (theta, a) -> t, t -> e is modelled correctly
# in every preset that keeps t. case1 and case2 drop t and e as in the
# identity-signal diagrams, so they need t = a.
_SIGNAL_BLOCK = [("theta", "a"), ("theta", "t"), ("a", "t"), ("t", "e")]

PRESETS: dict[str, Dag] = {
    "true": _dag(_SIGNAL_BLOCK + [("a", "pi"), ("pi", "y"), ("e", "y")]),
    "case1": _dag([("theta", "a"), ("a", "pi"), ("y", "pi")]),
    "case2": _dag([("theta", "a"), ("a", "y"), ("y", "pi")]),
    "rigid": _dag(_SIGNAL_BLOCK + [("y", "pi")], nodes=set(LABELS)),
    "re-equivalent": _dag(_SIGNAL_BLOCK + [("a", "pi"), ("y", "pi"), ("a", "y")]),
}


def preset(name: str) -> Dag:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown DAG preset {name!r}; choose from {sorted(PRESETS)}") from None


def load_dag(source: str) -> Dag:
    """Resolve a preset name, or ``@path`` / a path to a JSON DAG file."""
    if source in PRESETS:
        return PRESETS[source]
    path = Path(source[1:] if source.startswith("@") else source)
    if not path.is_file():
        raise ValueError(f"unknown DAG preset or file {source!r}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed DAG JSON in {path}: {exc}") from None
    return Dag.from_json(obj)


@dataclass(frozen=True, eq=False)
class LinearGaussianCPD:
    """``child = intercept + coefficients @ parents + N(0, residual_variance)``."""

    child: str
    parents: tuple[str, ...]
    coefficients: np.ndarray
    intercept: float
    residual_variance: float

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float).reshape(-1)
        if coef.shape != (len(self.parents),) or not np.isfinite(coef).all():
            raise ValueError(f"bad coefficients for {self.child!r}: {coef}")
        rv = float(self.residual_variance)
        if rv < -1e-12:
            raise ValueError(f"negative residual variance {rv} for {self.child!r}")
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "residual_variance", max(rv, 0.0))

    @property
    def mean_function(self) -> AffineFunction:
        return AffineFunction(self.parents, self.coefficients, self.intercept)


@dataclass(frozen=True, eq=False)
class GaussianBN:
    dag: Dag
    cpds: tuple[LinearGaussianCPD, ...]

    def __post_init__(self):
        order = self.dag.topological_order()
        if [c.child for c in self.cpds] != order:
            raise ValueError("CPDs must cover the DAG nodes in topological order")
        for c in self.cpds:
            if set(c.parents) != self.dag.parents[c.child]:
                raise ValueError(f"CPD parents for {c.child!r} do not match the DAG")

    def cpd(self, child: str) -> LinearGaussianCPD:
        for c in self.cpds:
            if c.child == child:
                return c
        raise ValueError(f"no CPD for {child!r}")


def fit(dag: Dag, joint: GaussianJoint) -> GaussianBN:
    """Regress every node on its parents under ``joint``."""
    missing = dag.nodes - set(joint.vars)
    if missing:
        raise ValueError(f"DAG nodes {sorted(missing)} are not in the joint")
    cpds = []
    pos = {v: i for i, v in enumerate(joint.vars)}
    for node in dag.topological_order():
        pa = dag.ordered_parents(node)
        i = pos[node]
        coef, intercept, resid = regress(joint, [i], [pos[p] for p in pa])
        rv = float(resid[0, 0])
        # Schur complements of large variances carry absolute round-off.
        if -PSD_RTOL * max(joint.cov[i, i], 1.0) <= rv < 0.0:
            rv = 0.0
        cpds.append(LinearGaussianCPD(node, tuple(pa), coef[0], intercept[0], rv))
    return GaussianBN(dag, tuple(cpds))


def bn_joint(bn: GaussianBN) -> GaussianJoint:
    """Compose the CPDs with mutually independent residuals."""
    order = [c.child for c in bn.cpds]
    pos = {n: i for i, n in enumerate(order)}
    k = len(order)
    # x = B x + c + u  =>  x = (I - B)^{-1} (c + u), B strictly lower triangular.
    b = np.zeros((k, k))
    c = np.zeros(k)
    r = np.zeros(k)
    for i, cpd in enumerate(bn.cpds):
        for p, w in zip(cpd.parents, cpd.coefficients):
            b[i, pos[p]] = w
        c[i] = cpd.intercept
        r[i] = cpd.residual_variance
    a = np.linalg.solve(np.eye(k) - b, np.eye(k))
    labels = bn.dag.ordered_nodes()
    idx = [pos[n] for n in labels]
    a = a[idx]
    return GaussianJoint.from_factor(tuple(labels), a @ c, a, r)


def forecast_rule(dag: Dag, joint: GaussianJoint, signal: str | None = None) -> AffineFunction:
    """Subjective conditional mean of ``pi`` given the signal, as an affine map."""
    signal = dag.signal_node if signal is None else signal
    for lab in ("pi", signal):
        if lab not in dag.nodes:
            raise ValueError(f"{lab!r} is not a node of the DAG")
    believed = bn_joint(fit(dag, joint))
    maps, _ = condition(believed, ["pi"], [signal])
    return maps["pi"]


def is_consistent(dag: Dag, joint: GaussianJoint, tol: float = 1e-9) -> bool:
    believed = bn_joint(fit(dag, joint))
    return believed.max_distance(joint.marginal(believed.vars)) <= tol
