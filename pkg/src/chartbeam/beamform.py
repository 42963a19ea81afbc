"""Precoder construction, correlation metric, and evaluation exports.

A model's 2A real outputs become a unit-norm complex precoder; quality
against a target channel is the normalized correlation eta in [0, 1].
Reports carry per-user values, the empirical CDF, spatial records, and
the latent-transfer overhead bookkeeping, and export to CSV/JSON with
bit-stable formatting.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroChannelError, ZeroPrecoderError

ZERO_NORM_FLOOR = 1e-30


@dataclass
class Precoder:
    values: np.ndarray  # (A,) complex128, unit l2 norm
    source: str = ""


def complexify_batch(w_raw):
    """(B, 2A) real -> (B, A) complex, re half then im half."""
    w_raw = np.atleast_2d(np.asarray(w_raw, dtype=np.float64))
    a = w_raw.shape[1] // 2
    return w_raw[:, :a] + 1j * w_raw[:, a:]


def complexify_normalize(w_raw, source=""):
    """Map raw 2A real outputs to a unit-norm complex precoder."""
    w_c = complexify_batch(w_raw)[0]
    norm = np.linalg.norm(w_c)
    if norm < ZERO_NORM_FLOOR:
        raise ZeroPrecoderError()
    return Precoder(values=w_c / norm, source=source)


def normalize_precoders(w_raw):
    """Batch version of complexify_normalize; returns (B, A) unit rows."""
    w_c = complexify_batch(w_raw)
    norms = np.linalg.norm(w_c, axis=1)
    bad = np.nonzero(norms < ZERO_NORM_FLOOR)[0]
    if bad.size:
        raise ZeroPrecoderError(index=int(bad[0]))
    return w_c / norms[:, None]


def eta(w, g):
    """Normalized correlation |w^H g|^2 / ||g||^2 between precoder and channel."""
    w = np.asarray(getattr(w, "values", w), dtype=np.complex128).ravel()
    g = np.asarray(g, dtype=np.complex128).ravel()
    g_norm2 = float(np.real(np.vdot(g, g)))
    if np.sqrt(g_norm2) < ZERO_NORM_FLOOR:
        raise ZeroChannelError()
    return float(np.abs(np.vdot(w, g)) ** 2 / g_norm2)


def spectral_efficiency(eta_value, snr_opt):
    """Achievable rate log2(1 + eta * SNR_opt) in bits/s/Hz."""
    if snr_opt < 0:
        raise ValueError("snr_opt must be nonnegative")
    return float(np.log2(1.0 + eta_value * snr_opt))


@dataclass
class EvalReport:
    variant: str
    eta_values: np.ndarray  # per evaluated user, input order
    locations: np.ndarray  # (M, 3)
    los: np.ndarray  # (M, 2) uint8
    transfer_dim: int  # real numbers shared per user for this variant
    raw_floats_per_user: int  # 2*A*S, the channel it replaces
    excluded: int = 0  # users dropped for zero target channels
    snr_opt_db: float = 10.0
    meta: dict = field(default_factory=dict)

    def cdf(self):
        """Sorted (eta, empirical probability) pairs; monotone, ends at 1."""
        order = np.sort(self.eta_values)
        prob = np.arange(1, order.size + 1) / order.size
        return order, prob

    def overhead(self):
        return {
            "floats_per_user": self.transfer_dim,
            "raw_floats_per_user": self.raw_floats_per_user,
            "ratio": self.transfer_dim / self.raw_floats_per_user,
        }

    def summary(self):
        values = self.eta_values
        snr = 10.0 ** (self.snr_opt_db / 10.0)
        se = np.log2(1.0 + values * snr)
        return {
            "variant": self.variant,
            "num_evaluated": int(values.size),
            "num_excluded": int(self.excluded),
            "eta_mean": float(values.mean()),
            "eta_median": float(np.median(values)),
            "eta_p10": float(np.percentile(values, 10)),
            "spectral_efficiency": {
                "snr_opt_db": self.snr_opt_db,
                "mean": float(se.mean()),
                "median": float(np.median(se)),
            },
            "overhead": self.overhead(),
            "meta": self.meta,
        }

    def save(self, out_dir):
        """Write cdf_<v>.csv, spatial_<v>.csv and summary.json."""
        out_dir.mkdir(parents=True, exist_ok=True)
        x, p = self.cdf()
        write_csv(out_dir / f"cdf_{self.variant}.csv", ["eta", "cdf"],
                  np.column_stack([x, p]))
        spatial = np.column_stack([
            self.locations[:, 0], self.locations[:, 1], self.eta_values,
            self.los[:, 0].astype(np.float64), self.los[:, 1].astype(np.float64),
        ])
        write_csv(out_dir / f"spatial_{self.variant}.csv",
                  ["x", "y", "eta", "los_bs1", "los_bs2"], spatial)
        with open(out_dir / "summary.json", "w") as f:
            json.dump(self.summary(), f, indent=2, sort_keys=True)


def write_csv(path, header, rows):
    """CSV with fixed '%.17g' formatting so identical data gives identical bytes."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(format(v, ".17g") for v in row) + "\n")


def evaluate(model, inputs, targets, locations, los, variant,
             transfer_dim, num_subcarriers, snr_opt_db=10.0, meta=None):
    """Run the beamformer on test inputs and score against target channels.

    `targets` holds central-subcarrier channels (M, A). Users with a zero
    target are excluded from the statistics and counted in the report.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.complex128)
    g_norm = np.linalg.norm(targets, axis=1)
    keep = g_norm >= ZERO_NORM_FLOOR
    excluded = int((~keep).sum())
    w_raw = model.forward(inputs[keep])
    w_hat = normalize_precoders(w_raw)
    g_kept = targets[keep]
    inner = np.einsum("ba,ba->b", w_hat.conj(), g_kept)
    # Cauchy-Schwarz bounds eta by 1; clip the ~1e-16 float spill so the
    # reported values honor the [0, 1] invariant exactly
    eta_values = np.clip(np.abs(inner) ** 2 / (g_norm[keep] ** 2), 0.0, 1.0)
    a = targets.shape[1]
    return EvalReport(
        variant=variant,
        eta_values=eta_values,
        locations=np.asarray(locations)[keep],
        los=np.asarray(los)[keep],
        transfer_dim=transfer_dim,
        raw_floats_per_user=2 * a * num_subcarriers,
        excluded=excluded,
        snr_opt_db=snr_opt_db,
        meta=meta or {},
    )
