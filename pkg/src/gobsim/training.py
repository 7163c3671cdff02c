"""Downlink beam training, LMMSE effective-channel estimation, and feedback.

The training model is Y_k = rho * W_k^H H_k V S + W_k^H N_k with orthogonal
pilot rows (S S^H = I) built from cyclic shifts of a Zadoff-Chu sequence.
The LMMSE estimator and its error covariance operate on vec(H_bar_k) with
A = S^T kron I_{M_UE} and Gamma = I_tau kron W_k^H.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalDomainError

__all__ = [
    "TrainingConfig",
    "PilotMatrix",
    "EffectiveChannel",
    "pilot_matrix",
    "received_training",
    "lmmse_estimate",
    "lmmse_error_covariance",
    "quantize_feedback",
    "unvec",
]


@dataclass(frozen=True)
class TrainingConfig:
    """Pilot block length, frame budget, and power/noise figures.

    rho = sqrt(power / t_total) is the per-RE training amplitude and
    kappa = rho^2 / noise_var the resulting SNR; both are derived here so
    the identity kappa = rho^2 / noise_var holds exactly.
    """

    tau: int
    t_total: int
    power: float
    noise_var: float = 1.0
    rho: float = field(init=False)
    kappa: float = field(init=False)

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.t_total <= self.tau:
            raise ValueError("t_total must exceed tau")
        if self.power < 0 or self.noise_var < 0:
            raise ValueError("power and noise_var must be >= 0")
        object.__setattr__(self, "rho", math.sqrt(self.power / self.t_total))
        kappa = self.rho**2 / self.noise_var if self.noise_var > 0 else math.inf
        object.__setattr__(self, "kappa", kappa)

    @classmethod
    def for_snr(
        cls, snr_db: float, tau: int, t_total: int, noise_var: float = 1.0
    ) -> "TrainingConfig":
        """Pick the transmit power that lands kappa at the given SNR."""
        kappa = 10.0 ** (snr_db / 10.0)
        return cls(
            tau=tau, t_total=t_total, power=kappa * noise_var * t_total, noise_var=noise_var
        )


@dataclass(frozen=True)
class PilotMatrix:
    """Orthogonal pilot rows, M_BS x tau, with S S^H = I."""

    s: np.ndarray

    @property
    def m_bs(self) -> int:
        return self.s.shape[0]

    @property
    def tau(self) -> int:
        return self.s.shape[1]


@dataclass(frozen=True)
class EffectiveChannel:
    """True and estimated effective channel for one UE, with error covariance."""

    h_bar: np.ndarray
    h_hat: np.ndarray
    err_cov: np.ndarray | None = None


def pilot_matrix(m_bs: int, tau: int, root: int = 1) -> PilotMatrix:
    """Pilot rows as distinct cyclic shifts of a length-tau Zadoff-Chu sequence.

    Any root coprime with tau gives an ideal periodic autocorrelation, so
    the m_bs shifted rows are exactly orthogonal after 1/sqrt(tau) scaling.
    """
    if m_bs < 1:
        raise ValueError(f"m_bs must be >= 1, got {m_bs}")
    if tau < m_bs:
        raise ValueError(f"tau={tau} < m_bs={m_bs}: orthogonal rows are impossible")
    if math.gcd(root, tau) != 1:
        raise ValueError(f"root {root} must be coprime with tau {tau}")
    n = np.arange(tau)
    if tau % 2:
        z = np.exp(-1j * np.pi * root * n * (n + 1) / tau)
    else:
        z = np.exp(-1j * np.pi * root * n * n / tau)
    s = np.empty((m_bs, tau), dtype=complex)
    for i in range(m_bs):
        s[i] = np.roll(z, -i)
    return PilotMatrix(s=s / math.sqrt(tau))


def received_training(
    h: np.ndarray,
    v: np.ndarray,
    w_k: np.ndarray,
    s: PilotMatrix,
    cfg: TrainingConfig,
    rng=None,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """Received training block Y_k = rho W^H H V S + W^H N, N iid CN(0, noise_var).

    Pass either an rng to draw the noise or a precomputed N_UE x tau noise
    matrix (shared noise lets several combiners see the same realization).
    """
    if noise is None:
        if rng is None:
            raise ValueError("provide rng or an explicit noise matrix")
        n_ue = h.shape[0]
        noise = (
            rng.standard_normal((n_ue, s.tau)) + 1j * rng.standard_normal((n_ue, s.tau))
        ) * math.sqrt(cfg.noise_var / 2.0)
    return cfg.rho * (w_k.conj().T @ h @ v @ s.s) + w_k.conj().T @ noise


def _pilot_combiner_gram(s: PilotMatrix, w_k: np.ndarray) -> tuple:
    """Q = A^H (Gamma Gamma^H)^{-1} A = conj(S S^H) kron (W^H W)^{-1}, plus (W^H W)^{-1}."""
    g = w_k.conj().T @ w_k
    try:
        g_inv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalDomainError("combiner W_k is rank-deficient") from exc
    ssh = s.s @ s.s.conj().T
    return np.kron(ssh.conj(), g_inv), g_inv


def lmmse_estimate(
    y: np.ndarray,
    sigma_bar: np.ndarray,
    s: PilotMatrix,
    w_k: np.ndarray,
    cfg: TrainingConfig,
) -> np.ndarray:
    """LMMSE estimate of vec(H_bar_k) from the training block.

    Implements rho Sigma_bar A^H (rho^2 A Sigma_bar A^H + noise_var
    Gamma Gamma^H)^{-1} vec(Y). The tau*M_UE-dimensional inverse is folded
    into M_BS*M_UE dimensions through the push-through identity
    A^H (rho^2 C^{-1} A Sigma A^H + I c)^{-1} = (rho^2 Q Sigma + I c)^{-1} A^H
    with C = Gamma Gamma^H and Q = A^H C^{-1} A, which is exact for any
    pilot matrix and full-column-rank combiner.
    """
    q, g_inv = _pilot_combiner_gram(s, w_k)
    z = (g_inv @ y @ s.s.conj().T).reshape(-1, order="F")
    m = cfg.rho**2 * (q @ sigma_bar) + cfg.noise_var * np.eye(q.shape[0])
    try:
        return cfg.rho * (sigma_bar @ np.linalg.solve(m, z))
    except np.linalg.LinAlgError as exc:
        raise NumericalDomainError("singular LMMSE inner matrix") from exc


def lmmse_error_covariance(
    sigma_bar: np.ndarray, s: PilotMatrix, w_k: np.ndarray, kappa: float
) -> np.ndarray:
    """Estimation error covariance (Sigma_bar^{-1} + kappa Q)^{-1}.

    Evaluated as (I + kappa Sigma_bar Q)^{-1} Sigma_bar, which never forms
    Sigma_bar^{-1}; a singular Sigma_bar is nudged by eps*tr/dim on the
    diagonal first (eps = 1e-10). A zero prior returns a zero error.
    """
    dim = sigma_bar.shape[0]
    tr = float(np.real(np.trace(sigma_bar)))
    if tr <= 0:
        return np.zeros_like(sigma_bar)
    sigma_reg = sigma_bar
    try:
        np.linalg.cholesky(sigma_bar)
    except np.linalg.LinAlgError:
        sigma_reg = sigma_bar + (1e-10 * tr / dim) * np.eye(dim)
    q, _ = _pilot_combiner_gram(s, w_k)
    try:
        err = np.linalg.solve(np.eye(dim) + kappa * (sigma_reg @ q), sigma_reg)
    except np.linalg.LinAlgError as exc:
        raise NumericalDomainError("singular error-covariance system") from exc
    return 0.5 * (err + err.conj().T)


def quantize_feedback(m: np.ndarray, q_bits: int) -> np.ndarray:
    """Element-wise uniform mid-rise quantization of real and imaginary parts.

    Both parts share the range [-a, a] with a = max absolute real/imag
    entry (the scale itself is assumed conveyed losslessly), split into
    2^q_bits levels.
    """
    if q_bits < 1:
        raise ValueError(f"q_bits must be >= 1, got {q_bits}")
    a = max(np.abs(m.real).max(), np.abs(m.imag).max()) if m.size else 0.0
    if a == 0.0:
        return np.zeros_like(m)
    step = 2.0 * a / (2**q_bits)

    def levels(x):
        q = step * (np.floor(x / step) + 0.5)
        return np.clip(q, -a + step / 2.0, a - step / 2.0)

    return levels(m.real) + 1j * levels(m.imag)


def unvec(vec: np.ndarray, m_ue: int, m_bs: int) -> np.ndarray:
    """Undo column stacking: vec of length M_UE*M_BS back to M_UE x M_BS."""
    return vec.reshape(m_ue, m_bs, order="F")
