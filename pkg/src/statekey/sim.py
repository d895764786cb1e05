"""Desk-scale simulation of the random-binning key-agreement schemes.

Two modes are implemented at tiny block lengths:

* ``no_discussion``: a codebook of u-sequences is drawn i.i.d. and randomly
  partitioned into key bins; the encoder picks a codeword jointly typical
  with the state sequence, the decoder looks for a unique codeword jointly
  typical with its channel output, and both sides declare the codeword's bin
  index as the key.
* ``one_round_discussion``: the sender transmits x ~ p(x|s); the receiver
  publishes the bin index of its output sequence, the sender reconstructs
  that sequence from (x, s, bin) by unique joint typicality, and both declare
  the sub-bin index as the key.  Leakage accounting includes the public bin
  index in the eavesdropper's view.

Typicality is the strong (empirical-count) kind: every cell of the joint
empirical distribution must lie within ``epsilon`` of the model pmf, and
cells with zero model probability must be unoccupied.  Decode and
reconstruction ambiguity count as errors; there is no likelihood fallback.
When the encoder finds no typical codeword it falls back to a uniformly
random codeword (counted in ``encode_failure_rate``); the exact-leakage
enumeration applies the same fallback law.

Every operation is a pure function of (inputs, seed): replays are
bit-identical, and each trial derives its own random stream from
(seed, trial index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .channel import (AuxiliaryEncoderPolicy, InputPolicy, StateChannel,
                      entropy_bits, induce_input_joint, induce_joint,
                      mutual_information)

MAX_CODEBOOK = 2 ** 20
MAX_ENUM_ATOMS = 10 ** 8


class BudgetError(RuntimeError):
    """An enumeration or codebook size limit was exceeded."""


@dataclass(frozen=True)
class SimConfig:
    """Block length, typicality slack, rate backoff, and trial budget."""

    n: int
    epsilon: float
    rate_margin: float
    trials: int
    seed: int
    mode: str = "no_discussion"

    def __post_init__(self):
        if not 1 <= self.n <= 24:
            raise ValueError("n must lie in [1, 24] (Monte Carlo ceiling)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.rate_margin <= 0:
            raise ValueError("rate_margin must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mode not in ("no_discussion", "one_round_discussion"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class CodebookRates:
    total_rate: float
    key_rate: float
    per_bin_rate: float


@dataclass(frozen=True)
class BinningCodebook:
    """u-sequence codebook with its random bin structure.

    ``sequences`` has shape (count, n); ``bin_of`` maps sequence index to bin
    index.  Rates are bits per symbol with total_rate = key_rate + per_bin_rate.
    """

    sequences: np.ndarray
    bin_of: np.ndarray
    num_bins: int
    rates: CodebookRates

    def __post_init__(self):
        seqs = np.array(self.sequences, dtype=np.int64, copy=True)
        bins = np.array(self.bin_of, dtype=np.int64, copy=True)
        if seqs.ndim != 2 or bins.shape != (seqs.shape[0],):
            raise ValueError("sequences must be (count, n) and bin_of (count,)")
        if self.num_bins < 1:
            raise ValueError("num_bins must be >= 1")
        if bins.size and (bins.min() < 0 or bins.max() >= self.num_bins):
            raise ValueError("bin indices out of range")
        if seqs.shape[0] >= self.num_bins and np.unique(bins).size != self.num_bins:
            raise ValueError("every bin must be nonempty when count >= num_bins")
        seqs.setflags(write=False)
        bins.setflags(write=False)
        object.__setattr__(self, "sequences", seqs)
        object.__setattr__(self, "bin_of", bins)

    @property
    def count(self) -> int:
        return self.sequences.shape[0]

    @property
    def n(self) -> int:
        return self.sequences.shape[1]

    def with_singleton_bins(self) -> "BinningCodebook":
        """View of the same codebook keyed by the codeword index itself."""
        total = math.log2(max(1, self.count)) / self.n
        return BinningCodebook(
            sequences=self.sequences,
            bin_of=np.arange(self.count),
            num_bins=max(1, self.count),
            rates=CodebookRates(total, total, 0.0))


@dataclass(frozen=True)
class EncodeResult:
    index: int
    u_seq: np.ndarray
    x_seq: np.ndarray


@dataclass(frozen=True)
class DecodeResult:
    index: int
    u_seq: np.ndarray
    key: int


@dataclass(frozen=True)
class SimReport:
    """Aggregate outcome of a simulation run.

    ``leakage_method`` is "exact" when leakage came from full enumeration and
    "estimate" for the plug-in Monte Carlo estimator.  In one-round mode
    ``encode_failure_rate`` carries the sender-reconstruction failure rate
    (also present in diagnostics under an explicit name).
    """

    disagreement_prob: float
    leakage_bits_per_symbol: float
    achieved_key_rate: float
    encode_failure_rate: float
    leakage_method: str
    diagnostics: dict = field(default_factory=dict)


def _rng_stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _joint_counts_rows(rows: np.ndarray, fixed: np.ndarray, a_size: int,
                       b_size: int) -> np.ndarray:
    """Per-row joint (a, b) cell counts of (rows[i, :], fixed)."""
    m, _ = rows.shape
    flat = rows * b_size + fixed[None, :]
    offsets = (np.arange(m) * (a_size * b_size))[:, None]
    counts = np.bincount((flat + offsets).ravel(),
                         minlength=m * a_size * b_size)
    return counts.reshape(m, a_size * b_size)


def _typical_mask(counts: np.ndarray, pmf: np.ndarray, n: int,
                  eps: float) -> np.ndarray:
    """Strong-typicality test per row of cell counts against a flattened pmf."""
    flat = pmf.ravel()
    emp = counts / n
    ok = np.abs(emp - flat[None, :]).max(axis=1) <= eps + 1e-12
    zero_cells = flat <= 0
    if zero_cells.any():
        ok &= (counts[:, zero_cells] == 0).all(axis=1)
    return ok


def is_jointly_typical(a_seq, b_seq, pmf: np.ndarray, eps: float) -> bool:
    """Strong joint typicality of one sequence pair against pmf[a, b]."""
    a_seq = np.asarray(a_seq, dtype=np.int64)
    b_seq = np.asarray(b_seq, dtype=np.int64)
    counts = _joint_counts_rows(a_seq[None, :], b_seq, pmf.shape[0], pmf.shape[1])
    return bool(_typical_mask(counts, pmf, len(a_seq), eps)[0])


def _joint_u_s(channel: StateChannel, policy: AuxiliaryEncoderPolicy) -> np.ndarray:
    """p(u, s), shape (u, s)."""
    return (channel.state_pmf[:, None] * policy.u_given_s).T


def _joint_u_yr(channel: StateChannel, policy: AuxiliaryEncoderPolicy) -> np.ndarray:
    """p(u, yr), shape (u, yr)."""
    return np.einsum("us,usx,xsr->ur", _joint_u_s(channel, policy),
                     policy.x_given_us, channel.receiver_kernel())


def _sample_rows(cdf_rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row of cumulative pmfs."""
    u = rng.random(cdf_rows.shape[0])
    return (cdf_rows < u[:, None]).sum(axis=1)


def build_codebook(channel: StateChannel, policy: AuxiliaryEncoderPolicy,
                   cfg: SimConfig,
                   rng: np.random.Generator | None = None) -> BinningCodebook:
    """Draw the i.i.d. u-sequence codebook and randomly partition it into bins.

    The sequence count is ceil(2^(n (I(U;Yr) - margin))) and the bin count
    ceil(2^(n (I(U;Yr) - I(U;Ye) - margin))), so each bin holds about
    2^(n I(U;Ye)) sequences.  A nonpositive key exponent collapses to a single
    bin (key rate 0); the simulator still runs and reports zero leakage then.
    """
    if rng is None:
        rng = _rng_stream(cfg.seed, 0)
    joint = induce_joint(channel, policy)
    i_uyr = mutual_information(joint, ["U"], ["Yr"])
    i_uye = mutual_information(joint, ["U"], ["Ye"])
    n = cfg.n
    count = math.ceil(2.0 ** (n * (i_uyr - cfg.rate_margin)))
    if count > MAX_CODEBOOK:
        raise BudgetError(
            f"codebook would need {count} sequences (limit {MAX_CODEBOOK}); "
            "reduce n or increase rate_margin")
    count = max(1, count)
    bins = max(1, math.ceil(2.0 ** (n * (i_uyr - i_uye - cfg.rate_margin))))
    bins = min(bins, count)
    p_u = np.einsum("s,su->u", channel.state_pmf, policy.u_given_s)
    p_u = p_u / p_u.sum()
    sequences = rng.choice(policy.u_size, size=(count, n), p=p_u)
    bin_of = np.empty(count, dtype=np.int64)
    bin_of[rng.permutation(count)] = np.arange(count) % bins
    total_rate = math.log2(count) / n
    key_rate = math.log2(bins) / n
    return BinningCodebook(
        sequences=sequences, bin_of=bin_of, num_bins=bins,
        rates=CodebookRates(total_rate, key_rate, total_rate - key_rate))


def _sample_x(policy: AuxiliaryEncoderPolicy, u_seq, s_seq,
              rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(policy.x_given_us, axis=2)
    return _sample_rows(cdf[u_seq, s_seq], rng)


def encode(codebook: BinningCodebook, channel: StateChannel,
           policy: AuxiliaryEncoderPolicy, s_seq, epsilon: float,
           rng: np.random.Generator) -> EncodeResult | None:
    """Pick a codeword jointly typical with s_seq, then sample x per symbol.

    The codeword is drawn uniformly from the typical candidates.  Returns
    None when no codeword qualifies (an encode failure, counted by callers
    rather than raised).
    """
    s_seq = np.asarray(s_seq, dtype=np.int64)
    if s_seq.shape != (codebook.n,):
        raise ValueError(f"s_seq must have length {codebook.n}")
    counts = _joint_counts_rows(codebook.sequences, s_seq,
                                policy.u_size, channel.s_size)
    mask = _typical_mask(counts, _joint_u_s(channel, policy),
                         codebook.n, epsilon)
    candidates = np.flatnonzero(mask)
    if candidates.size == 0:
        return None
    index = int(candidates[rng.integers(candidates.size)])
    u_seq = codebook.sequences[index]
    return EncodeResult(index=index, u_seq=u_seq,
                        x_seq=_sample_x(policy, u_seq, s_seq, rng))


def decode(codebook: BinningCodebook, channel: StateChannel,
           policy: AuxiliaryEncoderPolicy, yr_seq,
           epsilon: float) -> DecodeResult | None:
    """Return the unique codeword jointly typical with yr_seq and its bin.

    Zero or two-or-more qualifying codewords is a decode failure (None).
    """
    yr_seq = np.asarray(yr_seq, dtype=np.int64)
    if yr_seq.shape != (codebook.n,):
        raise ValueError(f"yr_seq must have length {codebook.n}")
    counts = _joint_counts_rows(codebook.sequences, yr_seq,
                                policy.u_size, channel.yr_size)
    mask = _typical_mask(counts, _joint_u_yr(channel, policy),
                         codebook.n, epsilon)
    candidates = np.flatnonzero(mask)
    if candidates.size != 1:
        return None
    index = int(candidates[0])
    return DecodeResult(index=index, u_seq=codebook.sequences[index],
                        key=int(codebook.bin_of[index]))


def transmit(channel: StateChannel, x_seq, s_seq,
             rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample (yr, ye) per symbol from the memoryless kernel."""
    x_seq = np.asarray(x_seq, dtype=np.int64)
    s_seq = np.asarray(s_seq, dtype=np.int64)
    flat = channel.kernel.reshape(channel.x_size, channel.s_size, -1)
    cdf = np.cumsum(flat, axis=2)
    pair = _sample_rows(cdf[x_seq, s_seq], rng)
    return pair // channel.ye_size, pair % channel.ye_size


def _matrix_mi_bits(table: np.ndarray) -> float:
    """I(row; col) in bits from an unnormalized nonnegative joint table."""
    total = table.sum()
    if total <= 0:
        return 0.0
    j = table / total
    pr = j.sum(axis=1)
    pc = j.sum(axis=0)
    mask = j > 0
    outer = np.outer(pr, pc)[mask]
    return max(0.0, float((j[mask] * (np.log2(j[mask]) - np.log2(outer))).sum()))


def _leakage_budget(channel: StateChannel, codebook: BinningCodebook) -> int:
    return (channel.s_size ** codebook.n) * codebook.count \
        * (channel.ye_size ** codebook.n)


def exact_leakage(codebook: BinningCodebook, channel: StateChannel,
                  policy: AuxiliaryEncoderPolicy, cfg: SimConfig) -> float:
    """Exact I(K; Ye^n) / n in bits per symbol for the binned key.

    Sums the joint law of (K, Ye^n) induced by the i.i.d. state, the
    encoder's typical-set selection (uniform over candidates, uniform over
    the whole codebook on encode failure), the per-symbol x sampling, and the
    memoryless kernel.  This is the module's ground-truth secrecy oracle.
    """
    atoms = _leakage_budget(channel, codebook)
    if atoms > MAX_ENUM_ATOMS:
        raise BudgetError(
            f"exact leakage enumeration needs {atoms} atoms "
            f"(limit {MAX_ENUM_ATOMS}); reduce n or the codebook size")
    n = codebook.n
    p_us = _joint_u_s(channel, policy)
    # p(ye | u, s) with x marginalized per symbol.
    p_ye_us = np.einsum("usx,xse->use", policy.x_given_us,
                        channel.eavesdropper_kernel())
    table = np.zeros((codebook.num_bins, channel.ye_size ** n))
    log_ps = np.log(np.maximum(channel.state_pmf, 1e-300))
    for s_tuple in product(range(channel.s_size), repeat=n):
        s_seq = np.asarray(s_tuple, dtype=np.int64)
        prob_s = float(np.exp(log_ps[s_seq].sum()))
        if prob_s == 0.0:
            continue
        counts = _joint_counts_rows(codebook.sequences, s_seq,
                                    policy.u_size, channel.s_size)
        mask = _typical_mask(counts, p_us, n, cfg.epsilon)
        k = int(mask.sum())
        weights = mask / k if k else np.full(codebook.count, 1.0 / codebook.count)
        for c in np.flatnonzero(weights):
            vec = np.ones(1)
            for i in range(n):
                vec = np.kron(vec, p_ye_us[codebook.sequences[c, i], s_seq[i]])
            table[codebook.bin_of[c]] += prob_s * weights[c] * vec
    return _matrix_mi_bits(table) / n


def _plugin_mi_bits(pairs: dict, trials: int) -> float:
    """Plug-in MI estimate in bits from (key, observation) pair counts."""
    keys = {}
    obs = {}
    for (k, y), c in pairs.items():
        keys[k] = keys.get(k, 0) + c
        obs[y] = obs.get(y, 0) + c
    total = float(trials)
    mi = 0.0
    for (k, y), c in pairs.items():
        p = c / total
        mi += p * math.log2(p / ((keys[k] / total) * (obs[y] / total)))
    return max(0.0, mi)


def run_no_discussion(channel: StateChannel, policy: AuxiliaryEncoderPolicy,
                      cfg: SimConfig) -> SimReport:
    """Monte Carlo episodes of {draw state, encode, transmit, decode}.

    Disagreement counts decode failures (no unique typical codeword) as well
    as key mismatches.  Exact leakage is attached when the enumeration budget
    permits, otherwise a plug-in estimate is flagged.
    """
    codebook = build_codebook(channel, policy, cfg, _rng_stream(cfg.seed, 0))
    n = cfg.n
    state_cdf = np.cumsum(channel.state_pmf)
    disagreements = 0
    encode_failures = 0
    key_counts = np.zeros(codebook.num_bins)
    exact_ok = _leakage_budget(channel, codebook) <= MAX_ENUM_ATOMS
    pair_counts: dict = {}
    for t in range(cfg.trials):
        rng = _rng_stream(cfg.seed, 1, t)
        s_seq = (state_cdf[None, :].repeat(n, axis=0) <
                 rng.random(n)[:, None]).sum(axis=1)
        enc = encode(codebook, channel, policy, s_seq, cfg.epsilon, rng)
        if enc is None:
            encode_failures += 1
            index = int(rng.integers(codebook.count))
            u_seq = codebook.sequences[index]
            enc = EncodeResult(index=index, u_seq=u_seq,
                               x_seq=_sample_x(policy, u_seq, s_seq, rng))
        yr_seq, ye_seq = transmit(channel, enc.x_seq, s_seq, rng)
        key = int(codebook.bin_of[enc.index])
        key_counts[key] += 1
        dec = decode(codebook, channel, policy, yr_seq, cfg.epsilon)
        if dec is None or dec.key != key:
            disagreements += 1
        if not exact_ok:
            pair = (key, tuple(int(v) for v in ye_seq))
            pair_counts[pair] = pair_counts.get(pair, 0) + 1
    if exact_ok:
        leakage = exact_leakage(codebook, channel, policy, cfg)
        method = "exact"
    else:
        leakage = _plugin_mi_bits(pair_counts, cfg.trials) / n
        method = "estimate"
    probs = key_counts[key_counts > 0] / cfg.trials
    achieved = float(-(probs * np.log2(probs)).sum()) / n
    return SimReport(
        disagreement_prob=disagreements / cfg.trials,
        leakage_bits_per_symbol=leakage,
        achieved_key_rate=achieved,
        encode_failure_rate=encode_failures / cfg.trials,
        leakage_method=method,
        diagnostics={
            "num_sequences": float(codebook.count),
            "num_bins": float(codebook.num_bins),
            "total_rate": codebook.rates.total_rate,
            "key_rate": codebook.rates.key_rate,
            "trials": float(cfg.trials),
        })


# ---------------------------------------------------------------------------
# one-round discussion scheme
# ---------------------------------------------------------------------------

def _enumerate_sequences(alphabet: int, n: int) -> np.ndarray:
    if alphabet ** n > MAX_CODEBOOK:
        raise BudgetError(
            f"enumerating {alphabet}^{n} output sequences exceeds the "
            f"{MAX_CODEBOOK} limit; reduce n")
    grids = np.indices((alphabet,) * n).reshape(n, -1).T
    return grids.astype(np.int64)


@dataclass(frozen=True)
class _OneRoundTables:
    """Receiver-sequence partition and single-letter laws for one-round runs."""

    all_yr: np.ndarray          # (|Yr|^n, n)
    bin_of: np.ndarray          # public bin per sequence (overflow = num_bins)
    sub_of: np.ndarray          # key sub-bin per sequence
    num_bins: int
    num_subbins: int
    typical: np.ndarray         # marginal-typicality mask
    p_xsyr: np.ndarray          # p(x, s, yr) single-letter
    key_rate_target: float


def _one_round_tables(channel: StateChannel, policy: InputPolicy,
                      cfg: SimConfig) -> _OneRoundTables:
    joint = induce_input_joint(channel, policy)
    h_yr_given_xs = (entropy_bits(joint, ["X", "S", "Yr"])
                     - entropy_bits(joint, ["X", "S"]))
    i_xs = mutual_information(joint, ["Yr"], ["X", "S"])
    i_e = mutual_information(joint, ["Yr"], ["Ye"])
    n = cfg.n
    num_bins = max(1, math.ceil(2.0 ** (n * (h_yr_given_xs + cfg.rate_margin))))
    key_exponent = i_xs - i_e - cfg.rate_margin
    num_subbins = max(1, math.ceil(2.0 ** (n * key_exponent))) \
        if key_exponent > 0 else 1
    all_yr = _enumerate_sequences(channel.yr_size, cfg.n)
    p_yr = joint.probs.sum(axis=(0, 1, 3))
    counts = np.stack([(all_yr == v).sum(axis=1) for v in range(channel.yr_size)],
                      axis=1)
    typical = _typical_mask(counts, p_yr, n, cfg.epsilon)
    typ_idx = np.flatnonzero(typical)
    num_bins = min(num_bins, max(1, typ_idx.size))
    rng = _rng_stream(cfg.seed, 0)
    order = rng.permutation(typ_idx.size)
    bin_of = np.full(all_yr.shape[0], num_bins, dtype=np.int64)   # overflow bin
    sub_of = np.zeros(all_yr.shape[0], dtype=np.int64)
    fill = np.zeros(num_bins, dtype=np.int64)
    for rank, pos in enumerate(order):
        seq_index = typ_idx[pos]
        b = rank % num_bins
        bin_of[seq_index] = b
        sub_of[seq_index] = fill[b] % num_subbins
        fill[b] += 1
    p_xsyr = np.einsum("s,sx,xsr->xsr", channel.state_pmf, policy.x_given_s,
                       channel.receiver_kernel())
    return _OneRoundTables(all_yr=all_yr, bin_of=bin_of, sub_of=sub_of,
                           num_bins=num_bins, num_subbins=num_subbins,
                           typical=typical, p_xsyr=p_xsyr,
                           key_rate_target=max(0.0, key_exponent))


def _reconstruct(tables: _OneRoundTables, channel: StateChannel,
                 x_seq: np.ndarray, s_seq: np.ndarray, published_bin: int,
                 epsilon: float) -> int | None:
    """Unique member of the published bin jointly typical with (x, s)."""
    members = np.flatnonzero(tables.bin_of == published_bin)
    if members.size == 0:
        return None
    rows = tables.all_yr[members]
    n = rows.shape[1]
    pair = (x_seq * channel.s_size + s_seq).astype(np.int64)
    counts = _joint_counts_rows(rows, pair,
                                channel.yr_size,
                                channel.x_size * channel.s_size)
    # Reorder cells: counts are (yr, (x,s)) but the pmf is (x, s, yr).
    pmf = np.moveaxis(tables.p_xsyr.reshape(channel.x_size * channel.s_size,
                                            channel.yr_size), 0, 1)
    mask = _typical_mask(counts, pmf, n, epsilon)
    hits = np.flatnonzero(mask)
    if hits.size != 1:
        return None
    return int(members[hits[0]])


def one_round_exact_leakage(tables: _OneRoundTables, channel: StateChannel,
                            policy: InputPolicy, cfg: SimConfig) -> float:
    """Exact I(K; Ye^n, public bin) / n for the one-round scheme.

    Uses the factorization of (Yr^n, Ye^n) into an i.i.d. per-symbol joint
    (x and s are marginalized per symbol), so the enumeration cost is
    |Yr|^n * |Ye|^n atoms.
    """
    n = cfg.n
    atoms = (channel.yr_size ** n) * (channel.ye_size ** n)
    if atoms > MAX_ENUM_ATOMS:
        raise BudgetError(
            f"exact leakage enumeration needs {atoms} atoms "
            f"(limit {MAX_ENUM_ATOMS}); reduce n")
    m = np.einsum("s,sx,xsre->re", channel.state_pmf, policy.x_given_s,
                  channel.kernel)
    rows = (tables.num_bins + 1) * tables.num_subbins
    table = np.zeros((rows, channel.ye_size ** n))
    for idx in range(tables.all_yr.shape[0]):
        seq = tables.all_yr[idx]
        vec = np.ones(1)
        for i in range(n):
            vec = np.kron(vec, m[seq[i]])
        row = int(tables.bin_of[idx]) * tables.num_subbins + int(tables.sub_of[idx])
        table[row] += vec
    # Rows are (bin, sub) pairs; leakage couples the key (sub) against the
    # pair (bin, ye^n), so fold the bin coordinate into the observation axis.
    folded = table.reshape(tables.num_bins + 1, tables.num_subbins, -1)
    key_vs_view = np.moveaxis(folded, 1, 0).reshape(tables.num_subbins, -1)
    return _matrix_mi_bits(key_vs_view) / n


def run_one_round_discussion(channel: StateChannel, policy: InputPolicy,
                             cfg: SimConfig) -> SimReport:
    """Simulate the one-round public-discussion scheme.

    Per trial: the sender draws x^n from p(x|s); the receiver observes yr^n,
    publishes its bin index (an overflow marker when yr^n is atypical), and
    keeps its sub-bin index as the key; the sender reconstructs yr^n from
    (x^n, s^n, bin) by unique joint typicality and declares the reconstructed
    sub-bin.  Reconstruction failures count as disagreements and are reported
    through ``encode_failure_rate``.
    """
    if policy.s_size != channel.s_size or policy.x_size != channel.x_size:
        raise ValueError("input policy alphabets do not match the channel")
    atoms = (channel.yr_size ** cfg.n) * (channel.ye_size ** cfg.n)
    if atoms > MAX_ENUM_ATOMS:
        # Fail before the trial loop: this mode always attaches exact leakage.
        raise BudgetError(
            f"exact leakage enumeration needs {atoms} atoms "
            f"(limit {MAX_ENUM_ATOMS}); reduce n")
    tables = _one_round_tables(channel, policy, cfg)
    n = cfg.n
    state_cdf = np.cumsum(channel.state_pmf)
    x_cdf = np.cumsum(policy.x_given_s, axis=1)
    powers = channel.yr_size ** np.arange(n - 1, -1, -1)
    disagreements = 0
    recon_failures = 0
    unique_lookups = 0
    unique_correct = 0
    key_counts = np.zeros(tables.num_subbins)
    for t in range(cfg.trials):
        rng = _rng_stream(cfg.seed, 1, t)
        s_seq = (state_cdf[None, :].repeat(n, axis=0) <
                 rng.random(n)[:, None]).sum(axis=1)
        x_seq = _sample_rows(x_cdf[s_seq], rng)
        yr_seq, _ = transmit(channel, x_seq, s_seq, rng)
        yr_index = int((yr_seq * powers).sum())
        published = int(tables.bin_of[yr_index])
        receiver_key = int(tables.sub_of[yr_index])
        key_counts[receiver_key] += 1
        recon = _reconstruct(tables, channel, x_seq, s_seq, published,
                             cfg.epsilon)
        if recon is None:
            recon_failures += 1
            disagreements += 1
            continue
        unique_lookups += 1
        if recon == yr_index:
            unique_correct += 1
        if int(tables.sub_of[recon]) != receiver_key:
            disagreements += 1
    leakage = one_round_exact_leakage(tables, channel, policy, cfg)
    probs = key_counts[key_counts > 0] / cfg.trials
    achieved = float(-(probs * np.log2(probs)).sum()) / n
    return SimReport(
        disagreement_prob=disagreements / cfg.trials,
        leakage_bits_per_symbol=leakage,
        achieved_key_rate=achieved,
        encode_failure_rate=recon_failures / cfg.trials,
        leakage_method="exact",
        diagnostics={
            "reconstruction_failure_rate": recon_failures / cfg.trials,
            "reconstruction_success_rate": 1.0 - recon_failures / cfg.trials,
            "unique_lookups": float(unique_lookups),
            "unique_and_correct": float(unique_correct),
            "num_public_bins": float(tables.num_bins),
            "num_subbins": float(tables.num_subbins),
            "key_rate_target": tables.key_rate_target,
            "trials": float(cfg.trials),
        })
