"""Zero-knowledge proof of a graph 3-colouring on top of bit commitment.

Each round the prover relabels her colouring with a fresh random
permutation, commits to it as ``2N`` bits (``R=00``, ``Y=01``, ``B=10``),
and opens the two endpoints of an edge the verifier picks uniformly. A
prover whose colouring is proper on a fraction ``p`` of the edges survives
``n`` rounds with probability ``p**n``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from .adversary import AttackModel
from .channels import NoiseParams
from .link import LinkParams
from .protocol import CommitPhase, Honest, ProtocolConfig, ProtocolError, commit_phase, open_phase
from .quantum import ValidationError
from .verifier import Thresholds, verify_transcript

COLORS = ("R", "Y", "B")
ENCODING = {0: (0, 0), 1: (0, 1), 2: (1, 0)}
DECODING = {bits: color for color, bits in ENCODING.items()}


class GraphFormatError(ValidationError):
    pass


@dataclass(frozen=True)
class Graph:
    vertex_count: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.vertex_count < 0:
            raise ValidationError("vertex_count must be non-negative")
        normalized = set()
        for e in self.edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise ValidationError(f"self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValidationError(f"edge ({u}, {v}) has an endpoint outside 0..{self.vertex_count - 1}")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @property
    def edge_list(self) -> list[tuple[int, int]]:
        """Edges in sorted order, so that edge challenges are reproducible."""
        return sorted(self.edges)

    def neighbours(self, v: int) -> list[int]:
        return sorted({b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v})

    def degree(self, v: int) -> int:
        return len(self.neighbours(v))


@dataclass(frozen=True)
class Coloring:
    """Colours ``0, 1, 2`` (``R, Y, B``) for every vertex."""

    colors: tuple

    def __post_init__(self):
        cols = []
        for x in self.colors:
            if isinstance(x, str):
                if x not in COLORS:
                    raise ValidationError(f"unknown colour {x!r}")
                x = COLORS.index(x)
            x = int(x)
            if x not in ENCODING:
                raise ValidationError(f"colour index {x} outside 0..2")
            cols.append(x)
        object.__setattr__(self, "colors", tuple(cols))

    def __len__(self) -> int:
        return len(self.colors)

    def __str__(self) -> str:
        return "".join(COLORS[c] for c in self.colors)

    def permuted(self, perm: Sequence[int]) -> "Coloring":
        return Coloring(tuple(int(perm[c]) for c in self.colors))


def _check_total(g: Graph, c: Coloring) -> None:
    if len(c) != g.vertex_count:
        raise ValidationError(f"colouring covers {len(c)} vertices, graph has {g.vertex_count}")


def is_proper(g: Graph, c: Coloring) -> bool:
    _check_total(g, c)
    return all(c.colors[u] != c.colors[v] for u, v in g.edges)


def proper_fraction(g: Graph, c: Coloring) -> float:
    """Fraction of edges whose endpoints differ: the per-round pass rate."""
    _check_total(g, c)
    if not g.edges:
        return 1.0
    return sum(c.colors[u] != c.colors[v] for u, v in g.edges) / len(g.edges)


def encode(c: Coloring) -> np.ndarray:
    return np.array([bit for col in c.colors for bit in ENCODING[col]], dtype=np.int8)


def decode_pair(bits: Sequence[int]) -> Optional[int]:
    """Colour for a 2-bit code, ``None`` for the invalid code ``11``."""
    return DECODING.get((int(bits[0]), int(bits[1])))


# --- graphs -----------------------------------------------------------------


def parse_graph(lines: Iterable[str]) -> Graph:
    """Read ``N`` on the first data line, then one ``u v`` edge per line.

    Blank lines and ``#`` comments are skipped. Errors carry the line number.
    """
    n = None
    edges = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            values = [int(p) for p in parts]
        except ValueError:
            raise GraphFormatError(f"line {lineno}: expected integers, got {line!r}") from None
        if n is None:
            if len(values) != 1 or values[0] < 0:
                raise GraphFormatError(f"line {lineno}: header must be a single vertex count")
            n = values[0]
            continue
        if len(values) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {line!r}")
        u, v = values
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"line {lineno}: vertex out of range 0..{n - 1}")
        edges.append((u, v))
    if n is None:
        raise GraphFormatError("empty graph file: missing vertex count")
    return Graph(n, frozenset(edges))


def read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh)


def format_graph(g: Graph) -> str:
    return "\n".join([str(g.vertex_count)] + [f"{u} {v}" for u, v in g.edge_list]) + "\n"


BUNDLED_GRAPHS = ("petersen", "dense20")


def sample_graph(name: str = "petersen") -> Graph:
    """A bundled graph: ``petersen`` (3-colourable) or ``dense20`` (not)."""
    if name not in BUNDLED_GRAPHS:
        raise ValidationError(f"no bundled graph {name!r}")
    text = resources.files("qbitcommit").joinpath(f"data/{name}.txt").read_text(encoding="utf-8")
    return parse_graph(text.splitlines())


def triangle() -> Graph:
    return Graph(3, frozenset({(0, 1), (1, 2), (0, 2)}))


def random_graph(n: int, edge_prob: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi graph ``G(n, edge_prob)``."""
    if not 0.0 <= edge_prob <= 1.0:
        raise ValidationError("edge_prob must lie in [0, 1]")
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < edge_prob
    return Graph(n, frozenset(zip(iu[keep].tolist(), ju[keep].tolist())))


def planted_graph(n: int, edge_prob: float, rng: np.random.Generator) -> tuple[Graph, Coloring]:
    """Random graph built around a hidden proper colouring."""
    colors = rng.integers(0, 3, size=n)
    iu, ju = np.triu_indices(n, k=1)
    keep = (rng.random(iu.size) < edge_prob) & (colors[iu] != colors[ju])
    return Graph(n, frozenset(zip(iu[keep].tolist(), ju[keep].tolist()))), Coloring(tuple(colors.tolist()))


def three_coloring(g: Graph) -> Optional[Coloring]:
    """Backtracking search for a proper colouring; ``None`` if none exists."""
    adj = [g.neighbours(v) for v in range(g.vertex_count)]
    order = sorted(range(g.vertex_count), key=lambda v: -len(adj[v]))
    colors = [-1] * g.vertex_count

    def place(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        used = {colors[w] for w in adj[v]}
        for col in range(3):
            if col not in used:
                colors[v] = col
                if place(i + 1):
                    return True
        colors[v] = -1
        return False

    return Coloring(tuple(colors)) if place(0) else None


def greedy_partial_coloring(g: Graph, sweeps: int = 10) -> Coloring:
    """Colouring with many proper edges, for a prover without a solution.

    Vertices are coloured in decreasing degree with the least conflicting
    colour, then improved by a few deterministic min-conflict sweeps.
    """
    adj = [g.neighbours(v) for v in range(g.vertex_count)]
    colors = [0] * g.vertex_count
    done = [False] * g.vertex_count

    def conflicts(v: int, col: int) -> int:
        return sum(1 for w in adj[v] if done[w] and colors[w] == col)

    for v in sorted(range(g.vertex_count), key=lambda v: (-len(adj[v]), v)):
        colors[v] = min(range(3), key=lambda col: conflicts(v, col))
        done[v] = True
    for _ in range(sweeps):
        changed = False
        for v in range(g.vertex_count):
            best = min(range(3), key=lambda col: (conflicts(v, col), col != colors[v]))
            if best != colors[v]:
                colors[v] = best
                changed = True
        if not changed:
            break
    return Coloring(tuple(colors))


# --- commitment backends ----------------------------------------------------


class CommitmentBackend(Protocol):
    name: str

    def commit(self, bits: np.ndarray, rng: np.random.Generator, *, cheating: bool = False): ...

    def reveal(self, handle, positions: Sequence[int], claimed: Sequence[int], rng: np.random.Generator) -> tuple[bool, str]: ...


class IdealLocker:
    """Perfectly binding and concealing: opened bits must equal the stored ones."""

    name = "ideal"

    def commit(self, bits, rng, *, cheating=False):
        return np.array(bits, dtype=np.int8)

    def reveal(self, handle, positions, claimed, rng):
        for pos, bit in zip(positions, claimed):
            if int(handle[pos]) != int(bit):
                return False, f"opening of bit {pos} inconsistent with commitment"
        return True, ""


def default_quantum_config() -> ProtocolConfig:
    """A small session (1000 pulses, about 100 detections) for per-bit commitments."""
    link = LinkParams(mu_photon=0.2, eta_det=1.0)
    return ProtocolConfig(n_pulses=1000, noise=NoiseParams.white_noise(0.1), link=link)


class QuantumBackend:
    """Every bit is one simulated quantum commitment, checked by Bob's test.

    A cheating committer uses the discrimination attack so that she can open
    either value; an honest one can only open what she committed to.
    """

    name = "quantum"

    def __init__(self, cfg: Optional[ProtocolConfig] = None, thresholds: Thresholds = Thresholds()):
        self.cfg = cfg or default_quantum_config()
        self.thresholds = thresholds

    def commit(self, bits, rng, *, cheating=False):
        attack = AttackModel.breidbart()
        return [commit_phase(self.cfg, attack if cheating else Honest(int(b)), rng) for b in bits]

    def reveal(self, handle: list[CommitPhase], positions, claimed, rng):
        for pos, bit in zip(positions, claimed):
            try:
                transcript = open_phase(handle[pos], int(bit), self.cfg)
            except ProtocolError as exc:
                return False, f"bit {pos}: {exc}"
            verdict = verify_transcript(transcript, self.cfg, self.thresholds)
            if not verdict.accepted:
                return False, f"bit {pos}: {verdict.reason}"
        return True, ""


BACKENDS = {"ideal": IdealLocker, "quantum": QuantumBackend}


def make_backend(name: str) -> CommitmentBackend:
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValidationError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None


# --- protocol ---------------------------------------------------------------


@dataclass(frozen=True)
class RoundRecord:
    commitments: object
    edge: tuple[int, int]
    opened: tuple[Optional[int], Optional[int]]
    accepted: bool
    reason: str = ""


@dataclass(frozen=True)
class ZKResult:
    accepted: bool
    rounds: tuple[RoundRecord, ...]

    @property
    def rounds_run(self) -> int:
        return len(self.rounds)


def zk_round(
    g: Graph,
    coloring: Coloring,
    rng: np.random.Generator,
    backend: Optional[CommitmentBackend] = None,
    rechoose: bool = False,
) -> RoundRecord:
    """One commit / challenge / open round.

    With ``rechoose`` the prover commits in a way that lets her change her
    answer and, when the challenged edge is monochromatic, opens a different
    colour for its second endpoint.
    """
    _check_total(g, coloring)
    edges = g.edge_list
    if not edges:
        raise ValidationError("graph has no edges to challenge")
    backend = backend or IdealLocker()
    shown = coloring.permuted(rng.permutation(3))
    bits = encode(shown)
    handle = backend.commit(bits, rng, cheating=rechoose)

    u, v = edges[int(rng.integers(len(edges)))]
    claimed = bits.copy()
    if rechoose and shown.colors[u] == shown.colors[v]:
        claimed[2 * v : 2 * v + 2] = ENCODING[(shown.colors[v] + 1) % 3]
    positions = [2 * u, 2 * u + 1, 2 * v, 2 * v + 1]
    opened_bits = [int(claimed[p]) for p in positions]
    ok, reason = backend.reveal(handle, positions, opened_bits, rng)
    cu, cv = decode_pair(opened_bits[:2]), decode_pair(opened_bits[2:])
    if not ok:
        return RoundRecord(handle, (u, v), (cu, cv), False, reason)
    if cu is None or cv is None:
        return RoundRecord(handle, (u, v), (cu, cv), False, "invalid colour code 11")
    if cu == cv:
        return RoundRecord(handle, (u, v), (cu, cv), False, "adjacent vertices share a colour")
    return RoundRecord(handle, (u, v), (cu, cv), True)


def zk_session(
    g: Graph,
    coloring: Coloring,
    rounds: int,
    rng: np.random.Generator,
    backend: Optional[CommitmentBackend] = None,
    rechoose: bool = False,
) -> ZKResult:
    """Run up to ``rounds`` rounds, stopping at the first failure."""
    if rounds < 0:
        raise ValidationError("rounds must be non-negative")
    if rounds == 0:
        warnings.warn("zero rounds: the verifier accepts without any evidence", stacklevel=2)
        return ZKResult(True, ())
    log = []
    for _ in range(rounds):
        rec = zk_round(g, coloring, rng, backend, rechoose)
        log.append(rec)
        if not rec.accepted:
            return ZKResult(False, tuple(log))
    return ZKResult(True, tuple(log))


def pass_probability(p: float, rounds: int) -> float:
    return p**rounds


def pass_sigma(p: float, rounds: int, sessions: int) -> float:
    q = pass_probability(p, rounds)
    return math.sqrt(q * (1.0 - q) / sessions)
