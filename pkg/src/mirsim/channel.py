"""Geometry, pathloss, blockage, and link gains.

The UAV-to-user link uses a blockage-averaged pathloss: the line-of-sight
probability weights separate LoS/NLoS log-distance laws, and the averaged
dB value converts to a linear power gain.  The vehicle-mounted reflecting
surface serves each user through N elements in the horizontal plane at a
fixed mounting height; its per-element NLoS gain combines coherently, so the
aggregate scales as N^2.  All functions are pure and broadcast over leading
axes, so a batch of candidate placements evaluates in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import (BlockageParams, ChannelParams, ScenarioConfig,
                       db_to_linear)

_TINY = np.finfo(float).tiny  # keeps LoS probability strictly positive


@dataclass(frozen=True)
class Placement:
    """UAV 3D position and vehicle 2D position, meters."""

    uav: tuple[float, float, float]
    irs: tuple[float, float]


@dataclass(frozen=True)
class LinkGains:
    """Per-user linear power gains for one slot: direct link and reflected link."""

    uav_gain: np.ndarray
    irs_gain: np.ndarray


def _as_users(users_xy):
    """Normalize to a (U, 2) array; remembers whether input was a single point."""
    users = np.asarray(users_xy, dtype=float)
    if users.ndim == 1:
        return users[None, :], True
    return users, False


def distance_3d(uav_xyz, users_xy):
    """Slant distance from the UAV to ground users (users at z=0)."""
    uav = np.asarray(uav_xyz, dtype=float)
    users, single = _as_users(users_xy)
    dx = uav[..., 0, None] - users[:, 0]
    dy = uav[..., 1, None] - users[:, 1]
    d = np.sqrt(dx * dx + dy * dy + uav[..., 2, None] ** 2)
    if single:
        d = d[..., 0]
    return float(d) if d.ndim == 0 else d


def horizontal_distance(uav_xyz, users_xy):
    """2D distance between the UAV's ground projection and each user."""
    uav = np.asarray(uav_xyz, dtype=float)
    users, single = _as_users(users_xy)
    q = np.hypot(uav[..., 0, None] - users[:, 0], uav[..., 1, None] - users[:, 1])
    if single:
        q = q[..., 0]
    return float(q) if q.ndim == 0 else q


def pathloss_los(d, p: ChannelParams):
    """LoS pathloss in dB at distance d (meters)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("pathloss distance must be > 0")
    return p.a_los_db + 10.0 * p.b_los * np.log10(d)


def pathloss_nlos(d, p: ChannelParams):
    """NLoS pathloss in dB at distance d (meters)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("pathloss distance must be > 0")
    return p.a_nlos_db + 10.0 * p.b_nlos * np.log10(d)


def blockage_prob(q, z, b: BlockageParams):
    """Probability the link is unblocked by human bodies.

    q is the horizontal UAV-user distance, z the UAV altitude; the result
    lies in (0, 1] and decays exponentially in q.
    """
    q = np.asarray(q, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("altitude must be > 0")
    if np.any(q < 0):
        raise ValueError("horizontal distance must be >= 0")
    exponent = b.blocker_density * b.blocker_diameter * q * b.blocker_height / z
    return np.maximum(np.exp(-exponent), _TINY)


def sigmoid_los_prob(q, z, p: ChannelParams):
    """Elevation-angle LoS probability (alternative model)."""
    q = np.asarray(q, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("altitude must be > 0")
    theta_deg = np.degrees(np.arctan2(z, q))
    return 1.0 / (1.0 + p.sigmoid_alpha * np.exp(-p.sigmoid_beta * (theta_deg - p.sigmoid_alpha)))


def los_probability(q, z, p: ChannelParams, b: BlockageParams):
    if p.los_model == "sigmoid":
        return sigmoid_los_prob(q, z, p)
    return blockage_prob(q, z, b)


def uav_link_pathloss(uav_xyz, users_xy, p: ChannelParams, b: BlockageParams):
    """Blockage-averaged UAV-user pathloss in dB.

    L = P_los * L_los(d) + (1 - P_los) * L_nlos(d), evaluated at the slant
    distance d; broadcasts over leading placement axes.
    """
    uav = np.asarray(uav_xyz, dtype=float)
    d = distance_3d(uav, users_xy)
    q = horizontal_distance(uav, users_xy)
    z = uav[..., 2, None] if uav.ndim >= 2 else uav[..., 2]
    p_los = los_probability(q, z, p, b)
    return p_los * pathloss_los(d, p) + (1.0 - p_los) * pathloss_nlos(d, p)


def irs_combined_gain(irs_xy, uav_xyz, users_xy, p: ChannelParams, irs_height: float):
    """Coherently combined reflected-link power gain per user.

    Per-element gain is the linear NLoS gain at the element-to-user 3D
    distance (elements sit at irs_height above the vehicle position); N
    elements combine coherently into N^2 times that, scaled by the power
    reflection coefficient.  When the UAV-to-surface leg is enabled the
    product additionally includes the LoS gain of that hop.
    """
    irs = np.asarray(irs_xy, dtype=float)
    users, single = _as_users(users_xy)
    dx = irs[..., 0, None] - users[:, 0]
    dy = irs[..., 1, None] - users[:, 1]
    d_iu = np.sqrt(dx * dx + dy * dy + irs_height * irs_height)
    if np.any(d_iu <= 0):
        raise ValueError("degenerate surface-to-user distance")
    per_element = db_to_linear(-pathloss_nlos(d_iu, p))
    n = p.irs_elements_per_user
    gain = p.irs_reflection_coeff * (n * n) * per_element
    if p.irs_uav_leg_enabled:
        uav = np.asarray(uav_xyz, dtype=float)
        d_ui = np.sqrt((uav[..., 0] - irs[..., 0]) ** 2
                       + (uav[..., 1] - irs[..., 1]) ** 2
                       + (uav[..., 2] - irs_height) ** 2)
        if np.any(d_ui <= 0):
            raise ValueError("degenerate UAV-to-surface distance")
        gain = gain * np.asarray(db_to_linear(-pathloss_los(d_ui, p)))[..., None]
    if single:
        gain = gain[..., 0]
    return float(gain) if gain.ndim == 0 else gain


def link_gains(uav_xyz, irs_xy, users_xy, cfg: ScenarioConfig, irs_enabled: bool = True):
    """Direct and reflected linear gains for every user; broadcasts over placements."""
    uav_gain = db_to_linear(-uav_link_pathloss(uav_xyz, users_xy, cfg.channel, cfg.blockage))
    if irs_enabled:
        irs_gain = irs_combined_gain(irs_xy, uav_xyz, users_xy, cfg.channel,
                                     cfg.ga.irs_height)
        irs_gain = np.broadcast_to(irs_gain, uav_gain.shape).copy()
    else:
        irs_gain = np.zeros_like(uav_gain)
    return uav_gain, irs_gain


def compute_link_gains(placement: Placement, users_xy, cfg: ScenarioConfig,
                       irs_enabled: bool = True) -> LinkGains:
    """LinkGains for a single placement."""
    uav_gain, irs_gain = link_gains(np.asarray(placement.uav), np.asarray(placement.irs),
                                    users_xy, cfg, irs_enabled=irs_enabled)
    return LinkGains(uav_gain=uav_gain, irs_gain=irs_gain)


def validate_placement(placement: Placement, cfg: ScenarioConfig) -> None:
    """Raises if the placement leaves the region or the altitude band."""
    x, y, z = placement.uav
    if not cfg.region.contains(x, y):
        raise ValueError(f"UAV ({x}, {y}) outside region")
    if not (cfg.ga.uav_alt_min - 1e-9 <= z <= cfg.ga.uav_alt_max + 1e-9):
        raise ValueError(f"UAV altitude {z} outside "
                         f"[{cfg.ga.uav_alt_min}, {cfg.ga.uav_alt_max}]")
    ix, iy = placement.irs
    if not cfg.region.contains(ix, iy):
        raise ValueError(f"vehicle position ({ix}, {iy}) outside region")


def channel_debug_table(placement: Placement, users_xy, cfg: ScenarioConfig) -> list[dict]:
    """Per-user channel breakdown for the CLI inspection dump."""
    users = np.asarray(users_xy, dtype=float)
    uav = np.asarray(placement.uav, dtype=float)
    d = distance_3d(uav, users)
    q = horizontal_distance(uav, users)
    p_los = los_probability(q, uav[2], cfg.channel, cfg.blockage)
    loss = uav_link_pathloss(uav, users, cfg.channel, cfg.blockage)
    gains = compute_link_gains(placement, users, cfg)
    rows = []
    for i in range(len(users)):
        rows.append({
            "user": i,
            "x": float(users[i, 0]),
            "y": float(users[i, 1]),
            "distance_3d_m": float(d[i]),
            "horizontal_m": float(q[i]),
            "p_los": float(p_los[i]),
            "avg_pathloss_db": float(loss[i]),
            "uav_gain": float(gains.uav_gain[i]),
            "irs_gain": float(gains.irs_gain[i]),
        })
    return rows
