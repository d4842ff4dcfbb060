"""Term frequencies, term-by-day heatmaps, bigram models and word classes."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from crisisnet.errors import ConfigError, ContractError, UnseenTransitionError
from crisisnet.ingest import day_range
from crisisnet.textprep import Document


def _tokens(doc) -> Sequence[str]:
    return doc.tokens if isinstance(doc, Document) else doc


# --- term frequency ----------------------------------------------------------


def top_terms(docs: Iterable, k: int) -> list[tuple[str, int, float]]:
    """Most frequent terms as ``(term, count, cumulative share of all tokens)``.

    Ties are broken lexicographically. ``k`` is clamped to the vocabulary.
    """
    if k < 1:
        raise ContractError("k must be >= 1")
    counts = Counter(tok for doc in docs for tok in _tokens(doc))
    total = sum(counts.values())
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    out = []
    running = 0
    for term, n in ranked:
        running += n
        out.append((term, n, running / total))
    return out


@dataclass
class TermTimeMatrix:
    terms: list[str]
    days: list[date]
    counts: np.ndarray  # shape (len(terms), len(days))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["term", *(d.isoformat() for d in self.days)])
            for term, row in zip(self.terms, self.counts):
                w.writerow([term, *(int(c) for c in row)])


def term_time_matrix(docs: Sequence[Document], terms: Sequence[str]) -> TermTimeMatrix:
    if not terms:
        raise ContractError("terms must be non-empty")
    terms = list(terms)
    row_of = {t: i for i, t in enumerate(terms)}
    days = day_range(doc.day for doc in docs)
    col_of = {d: j for j, d in enumerate(days)}
    counts = np.zeros((len(terms), len(days)), dtype=np.int64)
    for doc in docs:
        j = col_of[doc.day]
        for tok in doc.tokens:
            i = row_of.get(tok)
            if i is not None:
                counts[i, j] += 1
    return TermTimeMatrix(terms, days, counts)


# --- bigram model ------------------------------------------------------------


@dataclass
class BigramModel:
    unigrams: Counter = field(default_factory=Counter)
    bigrams: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return sum(self.unigrams.values())

    @property
    def vocab(self) -> list[str]:
        return sorted(self.unigrams)

    def history_totals(self) -> Counter:
        out: Counter = Counter()
        for (v, _), n in self.bigrams.items():
            out[v] += n
        return out

    def successor_totals(self) -> Counter:
        out: Counter = Counter()
        for (_, w), n in self.bigrams.items():
            out[w] += n
        return out

    def conditional(self, v: str) -> dict[str, float]:
        """MLE ``P(w | v)`` over successors of ``v``; empty if ``v`` has no successors."""
        succ = {w: n for (h, w), n in self.bigrams.items() if h == v}
        total = sum(succ.values())
        return {w: n / total for w, n in succ.items()} if total else {}

    def merge(self, other: "BigramModel") -> "BigramModel":
        return BigramModel(self.unigrams + other.unigrams, self.bigrams + other.bigrams)


def fit_bigrams(docs: Iterable) -> BigramModel:
    model = BigramModel()
    for doc in docs:
        toks = _tokens(doc)
        model.unigrams.update(toks)
        model.bigrams.update(zip(toks, toks[1:]))
    return model


def sequence_logprob(model: BigramModel, seq: Sequence[str]) -> float:
    """Natural-log probability of ``seq`` under the unsmoothed bigram chain."""
    if not seq:
        raise ContractError("sequence must be non-empty")
    for tok in seq:
        if tok not in model.unigrams:
            raise ContractError(f"token {tok!r} not in vocabulary")
    hist = model.history_totals()
    logp = math.log(model.unigrams[seq[0]] / model.total)
    for v, w in zip(seq, seq[1:]):
        n = model.bigrams.get((v, w), 0)
        if n == 0:
            raise UnseenTransitionError(f"unseen transition ({v!r}, {w!r})")
        logp += math.log(n / hist[v])
    return logp


# --- word classes --------------------------------------------------------------


@dataclass
class ClassMap:
    classes: dict[str, int]
    num_classes: int

    def __post_init__(self):
        for w, c in self.classes.items():
            if not 0 <= c < self.num_classes:
                raise ContractError(f"class {c} of {w!r} outside [0, {self.num_classes})")

    def members(self) -> list[list[str]]:
        groups: list[list[str]] = [[] for _ in range(self.num_classes)]
        for w in sorted(self.classes):
            groups[self.classes[w]].append(w)
        return groups


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def _class_term(C: np.ndarray) -> float:
    """Sum of C[g,h] * log(C[g,h] / (rowsum[g] * colsum[h])) with 0 log 0 = 0."""
    rows = C.sum(axis=1)
    cols = C.sum(axis=0)
    return float(_xlogx(C).sum() - _xlogx(rows).sum() - _xlogx(cols).sum())


def class_bigram_objective(model: BigramModel, classes: ClassMap | Mapping[str, int]) -> float:
    """Class-bigram log-likelihood criterion for a word classing.

    ``sum_w N(w) log N(w) + sum_{g,h} N(g,h) log[N(g,h) / (N(g) N(h))]`` where
    ``N(g)`` counts bigrams whose history falls in ``g`` and ``N(h)`` counts
    bigrams whose successor falls in ``h``.
    """
    cmap = classes.classes if isinstance(classes, ClassMap) else classes
    missing = [w for w in model.unigrams if w not in cmap]
    if missing:
        raise ContractError(f"classing does not cover {missing[:5]}")
    first = float(_xlogx(list(model.unigrams.values())).sum())
    if not model.bigrams:
        return first
    ids = {c: i for i, c in enumerate(sorted(set(cmap[w] for w in model.unigrams)))}
    C = np.zeros((len(ids), len(ids)))
    for (v, w), n in model.bigrams.items():
        C[ids[cmap[v]], ids[cmap[w]]] += n
    return first + _class_term(C)


def _word_class_matrices(model: BigramModel, vocab: list[str]):
    idx = {w: i for i, w in enumerate(vocab)}
    B = np.zeros((len(vocab), len(vocab)))
    for (v, w), n in model.bigrams.items():
        B[idx[v], idx[w]] += n
    return B


def greedy_exchange(
    model: BigramModel,
    num_classes: int,
    seed: int = 0,
    init: Mapping[str, int] | None = None,
    trace: list | None = None,
    max_moves: int | None = None,
) -> ClassMap:
    """Hill-climb a word classing by single-word moves.

    Starts from a seeded random assignment (or ``init``) and repeatedly
    applies the one word move with the largest gain in
    :func:`class_bigram_objective`, stopping when no move improves it.
    Objective values after every move are appended to ``trace`` if given.
    """
    vocab = model.vocab
    V = len(vocab)
    if num_classes < 1:
        raise ConfigError("number of classes must be >= 1")
    if num_classes > V:
        raise ConfigError(f"{num_classes} classes requested for a vocabulary of {V} words")
    if num_classes == 1:
        return ClassMap({w: 0 for w in vocab}, 1)

    if init is not None:
        assign = np.array([init[w] for w in vocab], dtype=np.int64)
    else:
        assign = np.random.default_rng(seed).integers(num_classes, size=V)

    B = _word_class_matrices(model, vocab)
    first = float(_xlogx(list(model.unigrams.values())).sum())

    def class_counts(a):
        onehot = np.zeros((V, num_classes))
        onehot[np.arange(V), a] = 1.0
        return onehot.T @ B @ onehot, onehot

    C, onehot = class_counts(assign)
    current = _class_term(C)
    if trace is not None:
        trace.append(first + current)

    tol = 1e-10 * max(1.0, abs(current))
    moves = 0
    while max_moves is None or moves < max_moves:
        # out_w[c] = bigrams w -> class c; in_w[c] = bigrams class c -> w
        out_c = B @ onehot
        in_c = B.T @ onehot
        best_gain, best = tol, None
        for i in range(V):
            g = assign[i]
            self_n = B[i, i]
            for h in range(num_classes):
                if h == g:
                    continue
                # C' = C + d out^T + in d^T + B_ii d d^T  with d = e_h - e_g
                D = C.copy()
                D[h, :] += out_c[i]
                D[g, :] -= out_c[i]
                D[:, h] += in_c[i]
                D[:, g] -= in_c[i]
                D[h, h] += self_n
                D[g, g] += self_n
                D[h, g] -= self_n
                D[g, h] -= self_n
                gain = _class_term(D) - current
                if gain > best_gain:
                    best_gain, best = gain, (i, h, D)
        if best is None:
            break
        i, h, D = best
        onehot[i, assign[i]] = 0.0
        onehot[i, h] = 1.0
        assign[i] = h
        C = D
        current = _class_term(C)
        moves += 1
        if trace is not None:
            trace.append(first + current)
    return ClassMap({w: int(assign[i]) for i, w in enumerate(vocab)}, num_classes)


# --- bigram network --------------------------------------------------------------


@dataclass
class BigramGraph:
    edges: list[tuple[str, str, int]]
    degree: dict[str, int]

    @property
    def nodes(self) -> list[str]:
        return sorted(self.degree)

    def to_networkx(self):
        import networkx as nx

        g = nx.DiGraph()
        for n in self.nodes:
            g.add_node(n, degree=self.degree[n])
        for v, w, n in self.edges:
            g.add_edge(v, w, weight=n)
        return g


def bigram_graph(model: BigramModel, top_k: int) -> BigramGraph:
    """The ``top_k`` most frequent bigrams as a weighted word network.

    Ties in count are broken lexicographically on ``(first, second)``.
    Node degree counts incident selected edges (in plus out).
    """
    if top_k < 1:
        raise ContractError("top_k must be >= 1")
    ranked = sorted(model.bigrams.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    edges = [(v, w, n) for (v, w), n in ranked]
    degree: Counter = Counter()
    for v, w, _ in edges:
        degree[v] += 1
        degree[w] += 1
    return BigramGraph(edges, dict(degree))


def write_edge_csv(edges: Iterable[tuple[str, str, int]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "weight"])
        for row in edges:
            w.writerow(row)
