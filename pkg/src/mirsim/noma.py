"""User pairing, power allocation, SINR, and per-slot rates.

Users are sorted by total effective gain (direct plus reflected) and the
k-th weakest is paired with the k-th strongest; each pair shares one
sub-band.  Within a pair the fractional transmit power allocation gives the
weaker channel the larger share (decay exponent beta; beta=0 splits power
equally).  The weak user decodes under the strong user's interference; the
strong user cancels the weak signal first and sees noise only.  Reflected
gains enter SINR numerators unscaled by the power fractions.  An odd user
count leaves the middle user alone on its band at full sub-band power.

The OMA baseline gives each user half the resource at full power.

``evaluate_batch`` does all of this for a whole batch of candidate
placements at once; ``slot_sum_rate`` / ``oma_slot_sum_rate`` wrap the
single-placement case and assemble a SlotResult.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import channel
from .scenario import ScenarioConfig, derive, linear_to_db


@dataclass
class NomaPair:
    """One sub-band: weak/strong user indices and their power fractions.

    strong is None for the unpaired user of an odd count; it transmits
    alone with alpha_weak = 1.
    """

    weak: int
    strong: Optional[int]
    alpha_weak: float = 1.0
    alpha_strong: float = 0.0


@dataclass
class SlotResult:
    """Per-user SINRs, power fractions, rates, and the slot sum rate."""

    sinr: np.ndarray
    rate: np.ndarray
    alpha: np.ndarray
    pair_id: np.ndarray
    feasible: np.ndarray
    sum_rate: float
    pairs: list[NomaPair] = field(default_factory=list)

    @property
    def any_feasible(self) -> bool:
        return bool(np.any(self.feasible))

    @property
    def all_feasible(self) -> bool:
        return bool(np.all(self.feasible))


def pair_users(gains) -> list[NomaPair]:
    """Pair the k-th weakest user with the k-th strongest (ties break by index)."""
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0:
        raise ValueError("cannot pair an empty user set")
    order = np.argsort(gains, kind="stable")
    n = gains.size
    half = n // 2
    pairs = [NomaPair(weak=int(order[k]), strong=int(order[n - 1 - k]))
             for k in range(half)]
    if n % 2:
        pairs.append(NomaPair(weak=int(order[half]), strong=None,
                              alpha_weak=1.0, alpha_strong=0.0))
    return pairs


def ftpa_allocate(gain_weak: float, gain_strong: float, noise_linear: float,
                  decay: float, favor_strong: bool = False) -> tuple[float, float]:
    """Split a pair's power by normalized channel gain to the power -decay.

    Returns (alpha_weak, alpha_strong), summing to 1.  decay=0 gives an
    equal split; larger decay shifts power toward the weaker channel.
    favor_strong=True flips the exponent sign so the stronger channel
    wins instead (comparison mode).
    """
    if gain_weak <= 0 or gain_strong <= 0:
        raise ValueError("channel gains must be > 0")
    exponent = decay if favor_strong else -decay
    x_weak = (gain_weak / noise_linear) ** exponent
    x_strong = (gain_strong / noise_linear) ** exponent
    total = x_weak + x_strong
    return x_weak / total, x_strong / total


def sinr(role: str, pair: NomaPair, uav_gains, irs_gains, rho: float) -> float:
    """SINR of one pair member.

    role "weak": decodes under the strong user's allocated interference.
    role "strong": perfect cancellation leaves noise only.
    role "solo": unpaired user, full sub-band power, no interference.
    """
    gu = np.asarray(uav_gains, dtype=float)
    gi = np.asarray(irs_gains, dtype=float)
    if role == "weak":
        signal = pair.alpha_weak * gu[pair.weak] + gi[pair.weak]
        interference = pair.alpha_strong * gu[pair.strong]
        return float(signal / (interference + 1.0 / rho))
    if role == "strong":
        return float((pair.alpha_strong * gu[pair.strong] + gi[pair.strong]) * rho)
    if role == "solo":
        return float((gu[pair.weak] + gi[pair.weak]) * rho)
    raise ValueError(f"unknown role {role!r}")


def evaluate_batch(uav_gain, irs_gain, *, rho: float, gamma_th: float,
                   noise_linear: float, decay: float, favor_strong: bool = False,
                   access: str = "noma") -> dict:
    """Vectorized pairing/allocation/SINR/rates for (P, U) gain arrays.

    Returns a dict of arrays: sinr, rate, alpha, pair_id (all (P, U)),
    sum_rate and deficit (both (P,)), feasible (P, U), plus the pairing
    index arrays weak/strong ((P, K)) and the per-pair fractions.
    """
    gu = np.atleast_2d(np.asarray(uav_gain, dtype=float))
    gi = np.atleast_2d(np.asarray(irs_gain, dtype=float))
    if gu.shape != gi.shape:
        raise ValueError("gain arrays must have matching shapes")
    batch, n = gu.shape
    if n == 0:
        raise ValueError("at least one user required")
    heff = gu + gi
    order = np.argsort(heff, axis=1, kind="stable")
    half = n // 2
    rows = np.arange(batch)[:, None]
    weak = order[:, :half]
    strong = order[:, ::-1][:, :half]

    pair_id = np.empty((batch, n), dtype=int)
    if half:
        pair_id[rows, weak] = np.arange(half)[None, :]
        pair_id[rows, strong] = np.arange(half)[None, :]
    mid = order[:, half] if n % 2 else None
    if mid is not None:
        pair_id[np.arange(batch), mid] = half

    alpha = np.ones((batch, n), dtype=float)
    alpha_weak = alpha_strong = None
    if access == "noma":
        sinr_arr = np.empty((batch, n), dtype=float)
        if half:
            exponent = decay if favor_strong else -decay
            x_weak = (heff[rows, weak] / noise_linear) ** exponent
            x_strong = (heff[rows, strong] / noise_linear) ** exponent
            total = x_weak + x_strong
            alpha_weak = x_weak / total
            alpha_strong = x_strong / total
            sig_weak = alpha_weak * gu[rows, weak] + gi[rows, weak]
            sinr_arr[rows, weak] = sig_weak / (alpha_strong * gu[rows, strong] + 1.0 / rho)
            sinr_arr[rows, strong] = (alpha_strong * gu[rows, strong]
                                      + gi[rows, strong]) * rho
            alpha[rows, weak] = alpha_weak
            alpha[rows, strong] = alpha_strong
        if mid is not None:
            mrows = np.arange(batch)
            sinr_arr[mrows, mid] = (gu[mrows, mid] + gi[mrows, mid]) * rho
        rate = np.log2(1.0 + sinr_arr)
    elif access == "oma":
        sinr_arr = heff * rho
        rate = 0.5 * np.log2(1.0 + sinr_arr)
    else:
        raise ValueError(f"unknown access mode {access!r}")

    return {
        "sinr": sinr_arr,
        "rate": rate,
        "alpha": alpha,
        "pair_id": pair_id,
        "feasible": sinr_arr >= gamma_th,
        "sum_rate": rate.sum(axis=1),
        "deficit": np.maximum(0.0, gamma_th - sinr_arr).sum(axis=1),
        "weak": weak,
        "strong": strong,
        "alpha_weak": alpha_weak,
        "alpha_strong": alpha_strong,
        "mid": mid,
    }


def _gains_for_kind(placement: channel.Placement, users_xy, cfg: ScenarioConfig,
                    scenario_kind: str):
    """Resolve the reflected-link handling for a scenario variant."""
    if scenario_kind == "no-irs":
        return channel.link_gains(np.asarray(placement.uav), np.asarray(placement.irs),
                                  users_xy, cfg, irs_enabled=False)
    if scenario_kind == "s-irs":
        irs = cfg.s_irs_position if cfg.s_irs_position is not None else placement.irs
    elif scenario_kind == "m-irs":
        irs = placement.irs
    else:
        raise ValueError(f"unknown scenario kind {scenario_kind!r}")
    return channel.link_gains(np.asarray(placement.uav), np.asarray(irs), users_xy, cfg)


def _slot_result(placement, users_xy, cfg, scenario_kind, access) -> SlotResult:
    gu, gi = _gains_for_kind(placement, users_xy, cfg, scenario_kind)
    d = derive(cfg)
    ev = evaluate_batch(gu[None, :], gi[None, :], rho=d.rho_linear,
                        gamma_th=d.gamma_th_linear, noise_linear=d.noise_linear_mw,
                        decay=cfg.power.ftpa_decay,
                        favor_strong=cfg.power.ftpa_favor_strong, access=access)
    pairs = []
    half = ev["weak"].shape[1]
    for k in range(half):
        if access == "noma":
            aw = float(ev["alpha_weak"][0, k])
            a_s = float(ev["alpha_strong"][0, k])
        else:
            aw = a_s = 1.0  # orthogonal halves, full power each
        pairs.append(NomaPair(weak=int(ev["weak"][0, k]), strong=int(ev["strong"][0, k]),
                              alpha_weak=aw, alpha_strong=a_s))
    if ev["mid"] is not None:
        pairs.append(NomaPair(weak=int(ev["mid"][0]), strong=None,
                              alpha_weak=1.0, alpha_strong=0.0))
    return SlotResult(
        sinr=ev["sinr"][0], rate=ev["rate"][0], alpha=ev["alpha"][0],
        pair_id=ev["pair_id"][0], feasible=ev["feasible"][0],
        sum_rate=float(ev["sum_rate"][0]), pairs=pairs,
    )


def slot_sum_rate(placement: channel.Placement, users_xy, cfg: ScenarioConfig,
                  scenario_kind: str = "m-irs") -> SlotResult:
    """Full NOMA slot evaluation at one placement.

    scenario_kind picks the reflected-link source: the placement's vehicle
    position ("m-irs"), the configured or frozen fixed position ("s-irs"),
    or no reflected link at all ("no-irs").
    """
    return _slot_result(placement, users_xy, cfg, scenario_kind, "noma")


def oma_slot_sum_rate(placement: channel.Placement, users_xy, cfg: ScenarioConfig,
                      scenario_kind: str = "m-irs") -> SlotResult:
    """Orthogonal baseline: each user gets half the resource at full power."""
    return _slot_result(placement, users_xy, cfg, scenario_kind, "oma")


def slot_result_rows(result: SlotResult, slot: int, scenario: str) -> list[list]:
    """Flatten a SlotResult into CSV rows: slot, scenario, user, pair_id, alpha, sinr_db, rate."""
    rows = []
    for user in range(len(result.rate)):
        s = float(result.sinr[user])
        rows.append([slot, scenario, user, int(result.pair_id[user]),
                     float(result.alpha[user]),
                     float(linear_to_db(s)) if s > 0 else float("-inf"),
                     float(result.rate[user])])
    return rows
