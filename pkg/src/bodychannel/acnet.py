"""Generic linear AC networks and a modified-nodal-analysis solver.

This is the brute-force oracle for every closed-form result in
:mod:`bodychannel.channel`: any channel configuration can be rendered as a
netlist and solved exactly, node by node.

The MNA system stacks node-voltage unknowns (every node except the earth
reference, node 0) with one branch-current unknown per voltage source:

    [ Y  B ] [ v ]   [ 0 ]
    [ B' 0 ] [ i ] = [ e ]

Y holds admittance stamps (1/R, j*w*C, 1/(j*w*L)), B the source incidence,
and e the source phasors.  Networks here have fewer than ten nodes, so a
dense direct solve with partial pivoting (plus one step of iterative
refinement) is both exact enough for 1e-9 oracle comparisons and simple.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .channel import (
    BodyModel,
    GroundedTx,
    ReceiverParams,
    ResonantWearableTx,
    SourceModel,
    TWO_PI,
    WearableTx,
    v_in_rms,
)

NodeId = Hashable

#: Earth-ground reference node id.
GROUND: NodeId = 0


class NetlistError(ValueError):
    """Raised for structural problems: missing ground, disconnected nodes, bad probe."""


class SingularElementError(ValueError):
    """Raised for element values that have no finite impedance (e.g. C = 0)."""


class SingularNetworkError(RuntimeError):
    """Raised when the MNA system cannot be solved; names the offending node if known."""


class Kind(enum.Enum):
    RESISTOR = "R"
    CAPACITOR = "C"
    INDUCTOR = "L"
    VSOURCE = "V"


@dataclass(frozen=True)
class Element:
    """One two-terminal element.  ``value`` is ohms, farads, henries, or
    source amplitude in volts; ``phase`` (radians) applies to sources only."""

    kind: Kind
    node_a: NodeId
    node_b: NodeId
    value: float
    phase: float = 0.0


def resistor(a: NodeId, b: NodeId, ohms: float) -> Element:
    return Element(Kind.RESISTOR, a, b, ohms)


def capacitor(a: NodeId, b: NodeId, farads: float) -> Element:
    return Element(Kind.CAPACITOR, a, b, farads)


def inductor(a: NodeId, b: NodeId, henries: float) -> Element:
    return Element(Kind.INDUCTOR, a, b, henries)


def vsource(a: NodeId, b: NodeId, volts: float, phase: float = 0.0) -> Element:
    """Ideal voltage source driving node ``a`` positive relative to ``b``."""
    return Element(Kind.VSOURCE, a, b, volts, phase)


@dataclass(frozen=True)
class Netlist:
    """Immutable element list with an output probe (v_plus, v_minus).

    Construction validates the structural invariants: node 0 present and
    reachable from every node, at least one voltage source, declared nodes
    only, and positive values for passive elements.
    """

    nodes: tuple
    elements: tuple
    output_probe: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "output_probe", tuple(self.output_probe))
        declared = set(self.nodes)
        if GROUND not in declared:
            raise NetlistError("netlist must declare the earth reference node 0")
        if len(declared) != len(self.nodes):
            raise NetlistError("duplicate node ids in node list")
        if not any(e.kind is Kind.VSOURCE for e in self.elements):
            raise NetlistError("netlist needs at least one voltage source")
        for e in self.elements:
            if e.node_a not in declared or e.node_b not in declared:
                raise NetlistError(f"element {e} references an undeclared node")
            if e.node_a == e.node_b:
                raise NetlistError(f"element {e} is shorted to itself")
            if e.kind is not Kind.VSOURCE and not e.value > 0.0:
                raise NetlistError(
                    f"{e.kind.name} between {e.node_a!r} and {e.node_b!r} "
                    f"must have value > 0, got {e.value!r}"
                )
        if len(self.output_probe) != 2:
            raise NetlistError("output_probe must be a (v_plus, v_minus) pair")
        for n in self.output_probe:
            if n not in declared:
                raise NetlistError(f"probe node {n!r} is not declared")
        # Every node must reach ground; a floating island makes the system singular.
        adjacency: dict = {n: set() for n in self.nodes}
        for e in self.elements:
            adjacency[e.node_a].add(e.node_b)
            adjacency[e.node_b].add(e.node_a)
        seen = {GROUND}
        stack = [GROUND]
        while stack:
            for nxt in adjacency[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        floating = declared - seen
        if floating:
            raise NetlistError(f"nodes not connected to ground: {sorted(map(str, floating))}")

    def describe(self) -> str:
        """Debug rendering, one element per line: ``KIND node_a node_b value``.

        Diagnostic only; this is not a parse format.
        """
        return "\n".join(
            f"{e.kind.name} {e.node_a} {e.node_b} {e.value!r}" for e in self.elements
        )


@dataclass(frozen=True)
class SolveResult:
    """Solved state at one frequency.  ``node_voltages`` maps every node id
    (including ground) to its complex phasor; ``source_current`` is the
    current through the first voltage source, flowing a -> b externally."""

    frequency: float
    node_voltages: dict
    source_current: complex
    probe_voltage: complex


def impedance(element: Element, f: float):
    """Complex impedance of a passive element at frequency ``f`` in hertz."""
    if not f > 0.0:
        raise ValueError(f"frequency must be > 0, got {f!r}")
    w = TWO_PI * f
    if element.kind is Kind.RESISTOR:
        return complex(element.value, 0.0)
    if element.kind is Kind.CAPACITOR:
        if element.value == 0.0:
            raise SingularElementError("capacitor with C = 0 has no finite impedance")
        return 1.0 / (1j * w * element.value)
    if element.kind is Kind.INDUCTOR:
        return 1j * w * element.value
    raise ValueError(f"{element.kind.name} has no impedance")


def solve(netlist: Netlist, f: float) -> SolveResult:
    """Solve node voltages and source currents at one frequency.

    Raises :class:`SingularNetworkError` if the system cannot be solved or
    the solution fails the KCL residual check (residual at every node below
    1e-9 of the largest branch-current magnitude).
    """
    if not f > 0.0:
        raise ValueError(f"frequency must be > 0, got {f!r}")
    w = TWO_PI * f

    unknown_nodes = [n for n in netlist.nodes if n != GROUND]
    index = {n: i for i, n in enumerate(unknown_nodes)}
    sources = [e for e in netlist.elements if e.kind is Kind.VSOURCE]
    n, m = len(unknown_nodes), len(sources)

    a = np.zeros((n + m, n + m), dtype=complex)
    rhs = np.zeros(n + m, dtype=complex)

    for e in netlist.elements:
        if e.kind is Kind.VSOURCE:
            continue
        y = 1.0 / impedance(e, f)
        ia = index.get(e.node_a)
        ib = index.get(e.node_b)
        if ia is not None:
            a[ia, ia] += y
        if ib is not None:
            a[ib, ib] += y
        if ia is not None and ib is not None:
            a[ia, ib] -= y
            a[ib, ia] -= y

    for k, e in enumerate(sources):
        row = n + k
        ia = index.get(e.node_a)
        ib = index.get(e.node_b)
        if ia is not None:
            a[ia, row] += 1.0
            a[row, ia] += 1.0
        if ib is not None:
            a[ib, row] -= 1.0
            a[row, ib] -= 1.0
        rhs[row] = e.value * cmath.exp(1j * e.phase)

    try:
        x = np.linalg.solve(a, rhs)
        # One step of iterative refinement keeps oracle comparisons at the
        # 1e-9 level even for badly scaled admittance spreads.
        x += np.linalg.solve(a, rhs - a @ x)
    except np.linalg.LinAlgError:
        raise SingularNetworkError(_diagnose_singular(a, unknown_nodes)) from None

    if not np.all(np.isfinite(x.view(float))):
        raise SingularNetworkError(_diagnose_singular(a, unknown_nodes))

    voltages = {GROUND: 0j}
    for node, i in index.items():
        voltages[node] = complex(x[i])

    _check_kcl(netlist, f, voltages, x[n:], index)

    v_plus, v_minus = netlist.output_probe
    return SolveResult(
        frequency=f,
        node_voltages=voltages,
        source_current=complex(x[n]) if m else 0j,
        probe_voltage=voltages[v_plus] - voltages[v_minus],
    )


def _diagnose_singular(a: np.ndarray, unknown_nodes: list) -> str:
    dead = [i for i in range(len(unknown_nodes)) if not np.any(a[i])]
    if dead:
        names = ", ".join(repr(unknown_nodes[i]) for i in dead)
        return f"singular network: node(s) {names} have no admittance to the rest"
    return "singular network: MNA matrix is not invertible (check for source loops)"


def _check_kcl(netlist, f, voltages, source_currents, index) -> None:
    residual = {n: 0j for n in index}
    max_branch = 0.0
    for e in netlist.elements:
        if e.kind is Kind.VSOURCE:
            continue
        i_branch = (voltages[e.node_a] - voltages[e.node_b]) / impedance(e, f)
        max_branch = max(max_branch, abs(i_branch))
        if e.node_a in residual:
            residual[e.node_a] += i_branch
        if e.node_b in residual:
            residual[e.node_b] -= i_branch
    for k, e in enumerate(x for x in netlist.elements if x.kind is Kind.VSOURCE):
        i_src = source_currents[k]
        max_branch = max(max_branch, abs(i_src))
        if e.node_a in residual:
            residual[e.node_a] += i_src
        if e.node_b in residual:
            residual[e.node_b] -= i_src
    worst = max((abs(r) for r in residual.values()), default=0.0)
    if max_branch > 0.0 and worst > 1e-9 * max_branch:
        raise SingularNetworkError(
            f"KCL residual {worst:.3e} exceeds 1e-9 of max branch current "
            f"{max_branch:.3e} at {f:.6g} Hz; system is ill conditioned"
        )


def sweep(netlist: Netlist, freqs: Sequence[float]) -> list:
    """Solve at each frequency of a strictly increasing positive grid,
    returning one :class:`SolveResult` per point in order."""
    freqs = list(freqs)
    if not freqs:
        raise ValueError("frequency list must be nonempty")
    arr = np.asarray(freqs, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("all sweep frequencies must be > 0")
    if np.any(np.diff(arr) <= 0.0):
        raise ValueError("sweep frequencies must be strictly increasing")
    out = []
    for f in freqs:
        try:
            out.append(solve(netlist, f))
        except SingularNetworkError as exc:
            raise SingularNetworkError(f"sweep failed at {f:.6g} Hz: {exc}") from exc
    return out


def linear_frequencies(lo: float, hi: float, points: int) -> np.ndarray:
    """Linearly spaced frequency grid, endpoints included."""
    _check_grid(lo, hi, points)
    return np.linspace(lo, hi, points)


def log_frequencies(lo: float, hi: float, points: int) -> np.ndarray:
    """Log-spaced frequency grid, endpoints included."""
    _check_grid(lo, hi, points)
    return np.logspace(math.log10(lo), math.log10(hi), points)


def _check_grid(lo: float, hi: float, points: int) -> None:
    if not (lo > 0.0 and hi > lo):
        raise ValueError(f"need 0 < lo < hi, got lo={lo!r}, hi={hi!r}")
    if points < 2:
        raise ValueError(f"need at least 2 points, got {points!r}")


class _Chain:
    """Series element builder that merges nodes across omitted (zero) elements."""

    def __init__(self, elements: list, prefix: str):
        self.elements = elements
        self.prefix = prefix
        self.pending = []
        self.counter = 0

    def add(self, kind: Kind, value: float) -> None:
        self.pending.append((kind, value))

    def connect(self, start: NodeId, end: NodeId) -> NodeId:
        """Lay the pending elements in series from ``start`` to ``end``.
        With no pending elements the two node ids merge (returns ``start``)."""
        if not self.pending:
            return start
        prev = start
        for i, (kind, value) in enumerate(self.pending):
            last = i == len(self.pending) - 1
            if last:
                nxt = end
            else:
                self.counter += 1
                nxt = f"{self.prefix}{self.counter}"
            self.elements.append(Element(kind, prev, nxt, value))
            prev = nxt
        self.pending = []
        return end


def _stamp_transmit_side(elements: list, chain: "_Chain", src: SourceModel, body: BodyModel) -> None:
    """Source, its series coupling, body resistance, and c_b down to ground.

    The source amplitude is the rms drive voltage; the resonant wearable
    variant folds its boost factor q into the amplitude.
    """
    if isinstance(src, GroundedTx):
        amplitude = v_in_rms(src)
        if src.r_src > 0.0:
            chain.add(Kind.RESISTOR, src.r_src)
    elif isinstance(src, WearableTx):
        amplitude = v_in_rms(src)
        chain.add(Kind.CAPACITOR, src.c_ret_tx)
    elif isinstance(src, ResonantWearableTx):
        amplitude = v_in_rms(src) * src.q
        chain.add(Kind.CAPACITOR, src.c_ret_tx)
    else:
        raise TypeError(f"unknown source model {type(src).__name__}")
    if body.r_b > 0.0:
        chain.add(Kind.RESISTOR, body.r_b)

    drive = chain.connect("vin", "body")
    if drive == "vin":
        # No series elements on the transmit side: the source pins the body node.
        elements.append(vsource("body", GROUND, amplitude))
    else:
        elements.insert(0, vsource("vin", GROUND, amplitude))
    elements.append(capacitor("body", GROUND, body.c_b))


def _collect_nodes(elements: list) -> tuple:
    nodes: list = [GROUND]
    for e in elements:
        for node in (e.node_a, e.node_b):
            if node not in nodes:
                nodes.append(node)
    return tuple(nodes)


def build_channel_netlist(
    rx: ReceiverParams, src: SourceModel, body: BodyModel
) -> Netlist:
    """Render the full channel as a netlist with the probe across the load.

    Topology: source (with its series coupling) through the body resistance
    to the body node; c_b from body to ground; receiver branch body -> r_s
    -> L -> output node; load (r_l parallel c_l) from output to the floating
    ground node; c_gb floating ground -> body; c_ret floating ground ->
    ground.  Zero-valued optional elements are omitted: resistors become
    shorts (nodes merge) and capacitors become opens, avoiding artificial
    poles from epsilon-valued parts.
    """
    elements: list = []
    chain = _Chain(elements, "n")
    _stamp_transmit_side(elements, chain, src, body)

    if rx.r_s > 0.0:
        chain.add(Kind.RESISTOR, rx.r_s)
    if rx.l > 0.0:
        chain.add(Kind.INDUCTOR, rx.l)
    out = "out" if chain.pending else "body"
    chain.connect("body", out)

    elements.append(resistor(out, "fg", rx.r_l))
    if rx.c_l > 0.0:
        elements.append(capacitor(out, "fg", rx.c_l))
    if rx.c_gb > 0.0:
        elements.append(capacitor("fg", "body", rx.c_gb))
    elements.append(capacitor("fg", GROUND, rx.c_ret))

    return Netlist(nodes=_collect_nodes(elements), elements=tuple(elements), output_probe=(out, "fg"))


def build_body_netlist(src: SourceModel, body: BodyModel) -> Netlist:
    """Source and body only (no receiver branch), probed at the body node.

    Useful for body-potential and contact-current checks where the receiver
    loading is irrelevant or deliberately excluded.
    """
    elements: list = []
    chain = _Chain(elements, "n")
    _stamp_transmit_side(elements, chain, src, body)
    return Netlist(nodes=_collect_nodes(elements), elements=tuple(elements), output_probe=("body", GROUND))


def build_multi_receiver_netlist(
    receivers: Sequence[ReceiverParams], src: SourceModel, body: BodyModel
):
    """All receiver branches on one shared body node, for mutual-loading studies.

    Returns ``(netlist, probes)`` where ``probes[i]`` is the (output,
    floating-ground) node pair of receiver ``i``.  The netlist's own probe
    points at receiver 0.
    """
    if not receivers:
        raise NetlistError("need at least one receiver")
    elements: list = []
    chain = _Chain(elements, "n")
    _stamp_transmit_side(elements, chain, src, body)

    probes = []
    for i, rx in enumerate(receivers):
        if rx.r_s > 0.0:
            chain.add(Kind.RESISTOR, rx.r_s)
        if rx.l > 0.0:
            chain.add(Kind.INDUCTOR, rx.l)
        out = f"out{i}" if chain.pending else "body"
        chain.connect("body", out)
        fg = f"fg{i}"
        elements.append(resistor(out, fg, rx.r_l))
        if rx.c_l > 0.0:
            elements.append(capacitor(out, fg, rx.c_l))
        if rx.c_gb > 0.0:
            elements.append(capacitor(fg, "body", rx.c_gb))
        elements.append(capacitor(fg, GROUND, rx.c_ret))
        probes.append((out, fg))

    netlist = Netlist(
        nodes=_collect_nodes(elements), elements=tuple(elements), output_probe=probes[0]
    )
    return netlist, probes
