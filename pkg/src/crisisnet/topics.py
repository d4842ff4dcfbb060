"""LDA by collapsed Gibbs sampling, UMass coherence and topic-count selection."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

from crisisnet.errors import ContractError, LdaStateError
from crisisnet.textprep import Document


def _tokens(doc) -> Sequence[str]:
    return doc.tokens if isinstance(doc, Document) else doc


@dataclass(frozen=True)
class LdaConfig:
    """Sampler settings. ``alpha=None`` means the usual ``50 / n_topics``."""

    n_topics: int
    alpha: float | None = None
    beta: float = 0.01
    sweeps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 1:
            raise ContractError("n_topics must be >= 1")
        if self.alpha is not None and not self.alpha > 0:
            raise ContractError("alpha must be > 0")
        if not self.beta > 0:
            raise ContractError("beta must be > 0")
        if self.sweeps < 1:
            raise ContractError("sweeps must be >= 1")

    @property
    def doc_prior(self) -> float:
        return 50.0 / self.n_topics if self.alpha is None else float(self.alpha)


@dataclass
class LdaState:
    vocab: list[str]
    doc_of: np.ndarray  # token -> document index
    word_of: np.ndarray  # token -> word index
    z: np.ndarray  # token -> topic
    ndt: np.ndarray
    ntw: np.ndarray
    nd: np.ndarray
    nt: np.ndarray
    rng: np.random.Generator = field(repr=False)

    @property
    def n_tokens(self) -> int:
        return len(self.z)

    @property
    def n_docs(self) -> int:
        return self.ndt.shape[0]

    @property
    def n_topics(self) -> int:
        return self.ndt.shape[1]

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def check(self) -> None:
        """Recount from ``z`` and raise :class:`LdaStateError` on any mismatch."""
        T = self.n_topics
        if self.n_tokens and (self.z.min() < 0 or self.z.max() >= T):
            raise LdaStateError("topic assignment out of range")
        ndt = np.zeros_like(self.ndt)
        ntw = np.zeros_like(self.ntw)
        np.add.at(ndt, (self.doc_of, self.z), 1)
        np.add.at(ntw, (self.z, self.word_of), 1)
        if not (np.array_equal(ndt, self.ndt) and np.array_equal(ntw, self.ntw)):
            raise LdaStateError("count matrices disagree with z")
        if not (
            np.array_equal(ndt.sum(axis=1), self.nd)
            and np.array_equal(ntw.sum(axis=1), self.nt)
            and self.nt.sum() == self.n_tokens
        ):
            raise LdaStateError("marginal totals disagree with z")


@dataclass
class LdaPosterior:
    theta: np.ndarray  # documents x topics
    phi: np.ndarray  # topics x words
    vocab: list[str]


def build_vocab(docs: Iterable) -> list[str]:
    return sorted({tok for doc in docs for tok in _tokens(doc)})


def init_state(docs: Sequence, config: LdaConfig, vocab: Sequence[str] | None = None) -> LdaState:
    """Assign every token a uniformly random topic and tally the counts.

    ``vocab`` may list words beyond those present; it defaults to the sorted
    set of corpus tokens.
    """
    vocab = list(vocab) if vocab is not None else build_vocab(docs)
    index = {w: i for i, w in enumerate(vocab)}
    doc_of, word_of = [], []
    for d, doc in enumerate(docs):
        for tok in _tokens(doc):
            if tok not in index:
                raise ContractError(f"token {tok!r} missing from vocabulary")
            doc_of.append(d)
            word_of.append(index[tok])
    if not doc_of:
        raise ContractError("cannot fit LDA on an empty corpus")

    T = config.n_topics
    rng = np.random.default_rng(config.seed)
    doc_arr = np.asarray(doc_of, dtype=np.int64)
    word_arr = np.asarray(word_of, dtype=np.int64)
    z = rng.integers(T, size=len(doc_arr)).astype(np.int64)
    ndt = np.zeros((len(docs), T), dtype=np.int64)
    ntw = np.zeros((T, len(vocab)), dtype=np.int64)
    np.add.at(ndt, (doc_arr, z), 1)
    np.add.at(ntw, (z, word_arr), 1)
    return LdaState(
        vocab=vocab,
        doc_of=doc_arr,
        word_of=word_arr,
        z=z,
        ndt=ndt,
        ntw=ntw,
        nd=ndt.sum(axis=1),
        nt=ntw.sum(axis=1),
        rng=rng,
    )


def gibbs_conditional(state: LdaState, d: int, w: int, alpha: float, beta: float) -> np.ndarray:
    """Full conditional over topics for one token of word ``w`` in document ``d``.

    The token being resampled must already be removed from every count.
    """
    T, W = state.n_topics, state.vocab_size
    ndt, ntw, nd, nt = state.ndt[d], state.ntw[:, w], state.nd[d], state.nt
    if ndt.min() < 0 or ntw.min() < 0 or nd < 0 or nt.min() < 0:
        raise LdaStateError(f"negative count at document {d}, word {w}")
    p = (ndt + alpha) / (nd + T * alpha) * (ntw + beta) / (nt + W * beta)
    return p / p.sum()


def _draw(p: np.ndarray, u: float) -> int:
    cum = np.cumsum(p)
    k = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(k, len(p) - 1)


def sweep_python(state: LdaState, alpha: float, beta: float, uniforms: np.ndarray) -> None:
    """One pass over tokens in corpus order; slow reference for :func:`_sweep`."""
    for i in range(state.n_tokens):
        d, w, t = state.doc_of[i], state.word_of[i], state.z[i]
        state.ndt[d, t] -= 1
        state.ntw[t, w] -= 1
        state.nd[d] -= 1
        state.nt[t] -= 1
        t = _draw(gibbs_conditional(state, d, w, alpha, beta), uniforms[i])
        state.z[i] = t
        state.ndt[d, t] += 1
        state.ntw[t, w] += 1
        state.nd[d] += 1
        state.nt[t] += 1


@njit(cache=True)
def _sweep(doc_of, word_of, z, ndt, ntw, nd, nt, alpha, beta, uniforms):  # pragma: no cover
    T = ndt.shape[1]
    W = ntw.shape[1]
    p = np.empty(T)
    for i in range(z.shape[0]):
        d = doc_of[i]
        w = word_of[i]
        t = z[i]
        ndt[d, t] -= 1
        ntw[t, w] -= 1
        nd[d] -= 1
        nt[t] -= 1
        if ndt[d, t] < 0 or ntw[t, w] < 0 or nd[d] < 0 or nt[t] < 0:
            return i
        denom_d = nd[d] + T * alpha
        total = 0.0
        for k in range(T):
            p[k] = (ndt[d, k] + alpha) / denom_d * (ntw[k, w] + beta) / (nt[k] + W * beta)
            total += p[k]
        target = uniforms[i] * total
        acc = 0.0
        t = T - 1
        for k in range(T):
            acc += p[k]
            if target < acc:
                t = k
                break
        z[i] = t
        ndt[d, t] += 1
        ntw[t, w] += 1
        nd[d] += 1
        nt[t] += 1
    return -1


def run_gibbs(state: LdaState, config: LdaConfig, on_sweep=None, reference: bool = False) -> LdaState:
    """Run ``config.sweeps`` Gibbs passes in place and return the state.

    ``on_sweep(sweep_index, state)`` is called after each pass.
    ``reference=True`` uses the pure-Python sweep (same draws, much slower).
    """
    alpha, beta = config.doc_prior, float(config.beta)
    for s in range(config.sweeps):
        uniforms = state.rng.random(state.n_tokens)
        if reference:
            sweep_python(state, alpha, beta, uniforms)
        else:
            bad = _sweep(
                state.doc_of, state.word_of, state.z, state.ndt, state.ntw,
                state.nd, state.nt, alpha, beta, uniforms,
            )
            if bad >= 0:
                raise LdaStateError(f"negative count while resampling token {bad}")
        if on_sweep is not None:
            on_sweep(s, state)
    return state


def posterior(state: LdaState, config: LdaConfig) -> LdaPosterior:
    T, W = state.n_topics, state.vocab_size
    alpha, beta = config.doc_prior, float(config.beta)
    theta = (state.ndt + alpha) / (state.nd[:, None] + T * alpha)
    phi = (state.ntw + beta) / (state.nt[:, None] + W * beta)
    return LdaPosterior(theta=theta, phi=phi, vocab=list(state.vocab))


def fit_lda(docs: Sequence, config: LdaConfig) -> tuple[LdaState, LdaPosterior]:
    state = run_gibbs(init_state(docs, config), config)
    return state, posterior(state, config)


# --- evaluation ------------------------------------------------------------------


class DocFrequency:
    """Document and co-document frequencies over a training corpus."""

    def __init__(self, docs: Iterable):
        self._postings: dict[str, set[int]] = {}
        for i, doc in enumerate(docs):
            for tok in set(_tokens(doc)):
                self._postings.setdefault(tok, set()).add(i)

    def df(self, w: str) -> int:
        return len(self._postings.get(w, ()))

    def co_df(self, w1: str, w2: str) -> int:
        a, b = self._postings.get(w1, set()), self._postings.get(w2, set())
        if len(a) > len(b):
            a, b = b, a
        return sum(1 for d in a if d in b)


def top_words(phi: np.ndarray, vocab: Sequence[str], t: int, k: int) -> list[tuple[str, float]]:
    """Highest-probability words of topic ``t``; equal probabilities sort by word."""
    if k < 1:
        raise ContractError("k must be >= 1")
    row = phi[t]
    order = sorted(range(len(vocab)), key=lambda i: (-row[i], vocab[i]))
    return [(vocab[i], float(row[i])) for i in order[:k]]


def umass_coherence(
    phi: np.ndarray,
    vocab: Sequence[str],
    t: int,
    docs: Iterable | DocFrequency,
    m: int = 10,
) -> float:
    """UMass coherence of topic ``t`` over its top ``m`` words.

    Sum over ranked pairs (l > j) of ``log((D(w_l, w_j) + 1) / D(w_j))``.
    Words absent from every training document are never candidates.
    """
    if m < 2:
        raise ContractError("m must be >= 2")
    freq = docs if isinstance(docs, DocFrequency) else DocFrequency(docs)
    row = phi[t]
    ranked = sorted(
        (i for i in range(len(vocab)) if freq.df(vocab[i]) > 0),
        key=lambda i: (-row[i], vocab[i]),
    )
    words = [vocab[i] for i in ranked[:m]]
    score = 0.0
    for j, l in combinations(range(len(words)), 2):
        score += math.log((freq.co_df(words[l], words[j]) + 1) / freq.df(words[j]))
    return score


def mean_coherence(post: LdaPosterior, freq: DocFrequency, m: int = 10) -> float:
    T = post.phi.shape[0]
    return sum(umass_coherence(post.phi, post.vocab, t, freq, m) for t in range(T)) / T


def select_topic_count(
    docs: Sequence,
    k_values: Iterable[int],
    template: LdaConfig,
    m: int = 10,
) -> tuple[int, dict[int, float]]:
    """Fit one model per topic count and keep the one with the best mean coherence.

    Each fit is seeded with ``template.seed + K``. Ties go to the smaller K.
    """
    ks = sorted(set(k_values))
    if not ks:
        raise ContractError("topic-count range is empty")
    freq = DocFrequency(docs)
    scores: dict[int, float] = {}
    for k in ks:
        cfg = topic_config(template, k)
        _, post = fit_lda(docs, cfg)
        scores[k] = mean_coherence(post, freq, m)
    best = max(ks, key=lambda k: (scores[k], -k))
    return best, scores


def topic_config(template: LdaConfig, k: int) -> LdaConfig:
    return replace(template, n_topics=k, seed=template.seed + k)


# --- reports ------------------------------------------------------------------------


def write_topic_report(
    rows: Iterable[tuple[str, int, int, str, float]], path: str | Path
) -> None:
    """Write ``community,topic,rank,word,probability`` rows (3-decimal probabilities)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["community", "topic", "rank", "word", "probability"])
        for community, topic, rank, word, prob in rows:
            w.writerow([community, topic, rank, word, f"{prob:.3f}"])


def write_coherence_report(
    scores: Mapping[str, Mapping[int, float]], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["community", "K", "mean_coherence"])
        for community, per_k in scores.items():
            for k, score in per_k.items():
                w.writerow([community, k, f"{score:.6f}"])
