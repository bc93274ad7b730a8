"""Monte-Carlo checks of Haar-unitary moments and random-state typicality.

Samples come from the QR decomposition of complex Ginibre matrices with the
phases of R's diagonal absorbed into Q, which is exactly Haar distributed.
Every check compares a sample mean against a closed-form prediction and
reports the deviation in units of the standard error of the mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

import numpy as np

from .errors import DomainError

DEFAULT_CHUNK = 4096
DEFAULT_SIGMA_GATE = 4.0
# absolute slack for entries whose estimator has (numerically) zero variance
ZERO_VARIANCE_ATOL = 1e-12


class HaarSampler:
    """Seeded stream of d x d Haar unitaries drawn from a Philox counter-based generator."""

    def __init__(self, d: int, seed: int = 0):
        if int(d) < 2:
            raise DomainError(f"Haar sampling needs d >= 2, got {d}")
        self.d = int(d)
        self.seed = int(seed)
        self._rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed)))

    def draw(self, n: int) -> np.ndarray:
        """Next ``n`` unitaries, shape (n, d, d)."""
        shape = (n, self.d, self.d)
        z = (self._rng.standard_normal(shape) + 1j * self._rng.standard_normal(shape)) / np.sqrt(2.0)
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r, axis1=1, axis2=2)
        return q * (diag / np.abs(diag))[:, None, :]


def sample_haar(sampler: HaarSampler) -> np.ndarray:
    return sampler.draw(1)[0]


def monte_carlo(sampler: HaarSampler, n_samples: int, statistic, chunk: int = DEFAULT_CHUNK):
    """Sample mean and standard error of ``statistic(batch) -> (m, k)`` complex values.

    Sums are accumulated chunk by chunk in a fixed order, so results depend
    only on the seed, ``n_samples`` and ``chunk``.
    """
    if n_samples < 2:
        raise DomainError("need at least two samples for a standard error")
    total = total_sq_re = total_sq_im = None
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        vals = np.asarray(statistic(sampler.draw(m)), dtype=complex).reshape(m, -1)
        s, sr, si = vals.sum(0), (vals.real ** 2).sum(0), (vals.imag ** 2).sum(0)
        if total is None:
            total, total_sq_re, total_sq_im = s, sr, si
        else:
            total, total_sq_re, total_sq_im = total + s, total_sq_re + sr, total_sq_im + si
        done += m
    n = n_samples
    mean = total / n
    var_re = np.maximum(total_sq_re / n - mean.real ** 2, 0.0) * n / (n - 1)
    var_im = np.maximum(total_sq_im / n - mean.imag ** 2, 0.0) * n / (n - 1)
    return mean, np.sqrt((var_re + var_im) / n)


@dataclass(frozen=True)
class MomentEntry:
    label: str
    estimate: complex
    prediction: complex
    std_error: float

    @property
    def deviation(self) -> float:
        return abs(self.estimate - self.prediction)

    @property
    def sigmas(self) -> float:
        if self.std_error > 0:
            return self.deviation / self.std_error
        return 0.0 if self.deviation <= ZERO_VARIANCE_ATOL else float("inf")

    def within(self, gate: float = DEFAULT_SIGMA_GATE) -> bool:
        return self.deviation <= gate * self.std_error + ZERO_VARIANCE_ATOL

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "estimate_re": float(np.real(self.estimate)),
            "estimate_im": float(np.imag(self.estimate)),
            "prediction_re": float(np.real(self.prediction)),
            "prediction_im": float(np.imag(self.prediction)),
            "std_error": float(self.std_error),
            "sigmas": float(self.sigmas),
        }


@dataclass(frozen=True)
class MomentCheckReport:
    name: str
    d: int
    n_samples: int
    entries: list
    exact_checks: dict = field(default_factory=dict)

    def passed(self, gate: float = DEFAULT_SIGMA_GATE) -> bool:
        return all(e.within(gate) for e in self.entries) and all(self.exact_checks.values())

    def worst_sigmas(self) -> float:
        return max((e.sigmas for e in self.entries), default=0.0)

    def to_dict(self) -> dict:
        return {"d": self.d, "n_samples": self.n_samples,
                "entries": [e.to_dict() for e in self.entries]}


def _entries(labels, means, ses, predictions):
    return [MomentEntry(lab, complex(m), complex(p), float(s))
            for lab, m, s, p in zip(labels, means, ses, predictions)]


# -------------------------------------------------------------- first moment

def check_first_moment(d: int, n_samples: int, X, seed: int = 0,
                       chunk: int = DEFAULT_CHUNK) -> MomentCheckReport:
    """E[U X U^dagger] = (Tr X / d) I, entry by entry."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (d, d):
        raise DomainError(f"X must be {d}x{d}, got {X.shape}")
    sampler = HaarSampler(d, seed)

    def stat(U):
        return (U @ X @ np.conj(np.swapaxes(U, 1, 2))).reshape(len(U), -1)

    mean, se = monte_carlo(sampler, n_samples, stat, chunk)
    pred = (np.trace(X) / d * np.eye(d)).ravel()
    labels = [f"UXU+[{i},{j}]" for i in range(d) for j in range(d)]
    return MomentCheckReport("first_moment", d, n_samples, _entries(labels, mean, se, pred))


# ------------------------------------------------------------- second moment

S2 = ((0, 1), (1, 0))  # identity and swap


def _cycles(perm) -> int:
    seen, count = set(), 0
    for start in range(len(perm)):
        if start in seen:
            continue
        count += 1
        k = start
        while k not in seen:
            seen.add(k)
            k = perm[k]
    return count


def _compose_inverse(s, t):
    """s o t^{-1}."""
    inv = [0] * len(t)
    for k, v in enumerate(t):
        inv[v] = k
    return tuple(s[inv[k]] for k in range(len(s)))


def gram_matrix(d: int) -> list[list[Fraction]]:
    """Q[s][t] = d^{#cycles(s t^{-1})} over S_2 = {I, S}."""
    return [[Fraction(d) ** _cycles(_compose_inverse(s, t)) for t in S2] for s in S2]


def weingarten_matrix(d: int) -> list[list[Fraction]]:
    """C = Q^{-1} = 1/(d^2-1) [[1, -1/d], [-1/d, 1]] in exact arithmetic."""
    if d < 2:
        raise DomainError("Weingarten matrix needs d >= 2")
    d = Fraction(d)
    pre = 1 / (d * d - 1)
    return [[pre, -pre / d], [-pre / d, pre]]


def _matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))]
            for i in range(len(A))]


def second_moment_prediction(d: int, i, j, k, l) -> Fraction:
    """E[U_{i1 j1} U_{i2 j2} conj(U_{k1 l1}) conj(U_{k2 l2})] by the Weingarten sum.

    Sum over s, t in S_2 of delta(i, k o s) delta(j, l o t) C[s][t].
    """
    C = weingarten_matrix(d)
    total = Fraction(0)
    for si, s in enumerate(S2):
        if any(i[m] != k[s[m]] for m in range(2)):
            continue
        for ti, t in enumerate(S2):
            if all(j[m] == l[t[m]] for m in range(2)):
                total += C[si][ti]
    return total


# (label, (i1,i2), (j1,j2), (k1,k2), (l1,l2)) with 0-based indices
SECOND_MOMENT_BATTERY = (
    ("|U11|^4", (0, 0), (0, 0), (0, 0), (0, 0)),
    ("|U11|^2 |U22|^2", (0, 1), (0, 1), (0, 1), (0, 1)),
    ("|U11|^2 |U12|^2", (0, 0), (0, 1), (0, 0), (0, 1)),
    ("|U11|^2 |U21|^2", (0, 1), (0, 0), (0, 1), (0, 0)),
    ("U11 U22 conj(U12) conj(U21)", (0, 1), (0, 1), (0, 1), (1, 0)),
    ("U11 U11 conj(U11) conj(U12)", (0, 0), (0, 0), (0, 0), (0, 1)),
)


def check_second_moment(d: int, n_samples: int, seed: int = 0,
                        chunk: int = DEFAULT_CHUNK) -> MomentCheckReport:
    """Degree-(2,2) moments against the Weingarten formula, plus Q C = I exactly."""
    sampler = HaarSampler(d, seed)
    battery = SECOND_MOMENT_BATTERY
    if d < 2:
        raise DomainError("second moment needs d >= 2")

    def stat(U):
        cols = []
        for _, i, j, k, l in battery:
            cols.append(U[:, i[0], j[0]] * U[:, i[1], j[1]]
                        * np.conj(U[:, k[0], l[0]]) * np.conj(U[:, k[1], l[1]]))
        return np.stack(cols, axis=1)

    mean, se = monte_carlo(sampler, n_samples, stat, chunk)
    preds = [float(second_moment_prediction(d, i, j, k, l)) for _, i, j, k, l in battery]
    identity = [[Fraction(int(r == c)) for c in range(2)] for r in range(2)]
    exact = {
        "QC == I": _matmul(gram_matrix(d), weingarten_matrix(d)) == identity,
        "E|U11|^4 == 2/(d(d+1))": second_moment_prediction(d, (0, 0), (0, 0), (0, 0), (0, 0))
        == Fraction(2, d * (d + 1)),
    }
    return MomentCheckReport("second_moment", d, n_samples,
                             _entries([b[0] for b in battery], mean, se, preds), exact)


# ------------------------------------------------------ typicality scaling

def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + z.conj().T) / 2


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def typicality_prediction(O, a, b, q: int) -> complex:
    """Haar average of the q-thermal-index chain between fixed states a and b.

    q=1: <a|O^2|b> / d.  q=2: (<a|O^3|b> - <a|O^2|b> Tr O / d) / (d^2 - 1).
    """
    O = np.asarray(O, dtype=complex)
    d = O.shape[0]
    ac = np.conj(a)
    o2 = ac @ O @ O @ b
    if q == 1:
        return complex(o2 / d)
    if q == 2:
        o3 = ac @ O @ O @ O @ b
        return complex((o3 - o2 * np.trace(O) / d) / (d * d - 1))
    raise DomainError(f"typicality scaling supports q in {{1,2}}, got {q}")


def check_typicality_scaling(d: int, n_samples: int, O, a, b, q: int, seed: int = 0,
                             chunk: int = DEFAULT_CHUNK) -> MomentCheckReport:
    """Chains through Haar-rotated basis states u_1 = U e_1, u_2 = U e_2.

    q=1 samples <a|O|u_1><u_1|O|b>; q=2 samples <a|O|u_1><u_1|O|u_2><u_2|O|b>.
    """
    if q not in (1, 2):
        raise DomainError(f"typicality scaling supports q in {{1,2}}, got {q}")
    O = np.asarray(O, dtype=complex)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if O.shape != (d, d) or a.shape != (d,) or b.shape != (d,):
        raise DomainError("O must be d x d and a, b length-d vectors")
    sampler = HaarSampler(d, seed)
    left = np.conj(a) @ O          # <a|O
    right = O @ b                  # O|b>

    def stat(U):
        u1 = U[:, :, 0]
        first = u1 @ left          # <a|O|u1>
        last_1 = np.conj(u1) @ right
        if q == 1:
            return (first * last_1)[:, None]
        u2 = U[:, :, 1]
        middle = np.einsum("ni,ij,nj->n", np.conj(u1), O, u2)
        last_2 = np.conj(u2) @ right
        return (first * middle * last_2)[:, None]

    mean, se = monte_carlo(sampler, n_samples, stat, chunk)
    pred = typicality_prediction(O, a, b, q)
    label = "<a|O|u1><u1|O|b>" if q == 1 else "<a|O|u1><u1|O|u2><u2|O|b>"
    return MomentCheckReport(f"typicality_q{q}", d, n_samples, _entries([label], mean, se, [pred]))
