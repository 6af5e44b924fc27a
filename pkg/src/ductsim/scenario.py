"""Scenario construction: cell geometry, UE placement, pilot assignment,
duct angle sets, and per-trial channel realizations.

Each system is a hexagonal lattice of cells with the BS at the center;
the aggressor lattice is the victim lattice mirrored at the system
separation. UEs fall uniformly in their hexagon outside a restricted
radius around the BS. Cross-system duct links get one arrival angle at
the victim and one departure angle at the aggressor per BS pair, drawn
uniformly within the angular spread around broadside.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import channels
from .config import SystemConfig


def hex_centers(count, side):
    """Centers of the first count cells of a flat-top hexagonal lattice,
    enumerated center-out ring by ring. Returns (count, 2) meters."""
    # axial coordinates (q, r) -> cartesian for flat-top hexagons
    def to_xy(q, r):
        return (1.5 * side * q, np.sqrt(3.0) * side * (r + 0.5 * q))

    found = [(0, 0)]
    ring = 1
    while len(found) < count:
        q, r = ring, 0
        for dq, dr in ((-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1)):
            for _ in range(ring):
                found.append((q, r))
                q, r = q + dq, r + dr
        ring += 1
    return np.array([to_xy(q, r) for (q, r) in found[:count]], dtype=np.float64)


def in_hexagon(xy, side):
    """True where points (.., 2) lie inside a flat-top hexagon of the
    given side length centered at the origin."""
    xy = np.asarray(xy, dtype=np.float64)
    x = np.abs(xy[..., 0])
    y = np.abs(xy[..., 1])
    h = np.sqrt(3.0) * side
    return (y <= h / 2.0 + 1e-12) & (np.sqrt(3.0) * x + y <= h + 1e-12)


def place_ues(rng, count, side, restricted_radius):
    """Drop count UEs uniformly in the hexagon, at least restricted_radius
    from the center. Rejection sampling; returns (count, 2) meters."""
    out = np.empty((count, 2))
    placed = 0
    while placed < count:
        cand = rng.uniform(-side, side, size=(4 * count, 2))
        ok = in_hexagon(cand, side) & (np.hypot(cand[:, 0], cand[:, 1]) >= restricted_radius)
        good = cand[ok]
        take = min(count - placed, good.shape[0])
        out[placed:placed + take] = good[:take]
        placed += take
    return out


def assign_pilots(cells, pilot_len, unique=False):
    """Assign pilot indices to UEs cell by cell.

    Default is cyclic reuse: UEs across the whole system take indices
    0, 1, 2, ... modulo pilot_len in cell order, so same-cell UEs are
    always distinct and copilot UEs sit in different cells. With
    unique=True indices are globally distinct (requires enough pilots).

    Parameters
    ----------
    cells : sequence of int
        UE count per cell, in system order.
    pilot_len : int
        Number of orthogonal pilots available.
    unique : bool
        Globally unique assignment instead of cyclic reuse.

    Returns
    -------
    list of ndarray
        Per-cell integer pilot indices.
    """
    total = 0
    out = []
    for count in cells:
        if count > pilot_len:
            raise ValueError(
                f"assign_pilots: cell with {count} UEs exceeds pilot_len {pilot_len}")
        idx = total + np.arange(count)
        if unique:
            if total + count > pilot_len:
                raise ValueError(
                    "assign_pilots: unique assignment needs "
                    f"{total + count} pilots, have {pilot_len}")
            out.append(idx)
        else:
            out.append(idx % pilot_len)
        total += count
    return out


@dataclass(frozen=True)
class Scenario:
    """Geometry, pilot plan, duct angles, and (once realized) channels.

    Position arrays are meters. victim_h[r, c, u] is the channel from
    victim BS r to the u-th UE of victim cell c; aggressor_h likewise on
    the aggressor side. duct_h[r, s] is the (M, M) duct channel from
    aggressor BS s into victim BS r; duct_aoa[r, s] / duct_aod[r, s] are
    its arrival (victim side) and departure (aggressor side) angles in
    radians. Realization fields are None until realize_channels runs.
    """

    config: SystemConfig
    victim_bs_xy: np.ndarray
    aggressor_bs_xy: np.ndarray
    victim_ue_xy: np.ndarray
    aggressor_ue_xy: np.ndarray
    victim_pilots: np.ndarray
    aggressor_pilots: np.ndarray
    duct_aoa: np.ndarray
    duct_aod: np.ndarray
    victim_beta: np.ndarray | None = None
    victim_psi: np.ndarray | None = None
    victim_h: np.ndarray | None = None
    aggressor_beta: np.ndarray | None = None
    aggressor_psi: np.ndarray | None = None
    aggressor_h: np.ndarray | None = None
    duct_nlos: np.ndarray | None = None
    duct_h: np.ndarray | None = None

    @property
    def victim_betapsi(self):
        return self.victim_beta * self.victim_psi

    @property
    def aggressor_betapsi(self):
        return self.aggressor_beta * self.aggressor_psi

    def reverse_duct(self):
        """Duct channels seen at the aggressors, (S, R, M, M); entry
        [s, r] is the reverse link of duct_h[r, s]."""
        cfg = self.config
        r_n, s_n = cfg.num_victim_bs, cfg.num_aggressor_bs
        m = cfg.antennas_per_bs
        out = np.empty((s_n, r_n, m, m), dtype=np.complex128)
        for r in range(r_n):
            for s in range(s_n):
                out[s, r] = channels.reverse_duct_matrix(
                    self.duct_nlos[r, s], self.duct_aoa[r, s],
                    self.duct_aod[r, s], cfg.rician_k, cfg.duct_loss,
                    cfg.antenna_spacing_ratio)
        return out


def _link_distances_km(bs_xy, ue_xy):
    """Distances from every BS to every UE, (B, C, U) in kilometers."""
    diff = ue_xy[None, :, :, :] - bs_xy[:, None, None, :]
    return np.hypot(diff[..., 0], diff[..., 1]) / 1000.0


def build_scenario(config, seed):
    """Draw the geometry for one trial.

    Draw order (fixed for reproducibility): victim UE positions cell by
    cell, aggressor UE positions cell by cell, duct arrival angles, duct
    departure angles.
    """
    cfg = config
    rng = np.random.default_rng(seed)
    r_n, s_n, u_n = cfg.num_victim_bs, cfg.num_aggressor_bs, cfg.ues_per_cell

    victim_bs = hex_centers(r_n, cfg.cell_side)
    sep_m = cfg.system_separation * 1000.0
    aggressor_bs = hex_centers(s_n, cfg.cell_side).copy()
    aggressor_bs[:, 0] = sep_m - aggressor_bs[:, 0]

    victim_ue = np.empty((r_n, u_n, 2))
    for r in range(r_n):
        victim_ue[r] = victim_bs[r] + place_ues(
            rng, u_n, cfg.cell_side, cfg.restricted_radius)
    aggressor_ue = np.empty((s_n, u_n, 2))
    for s in range(s_n):
        aggressor_ue[s] = aggressor_bs[s] + place_ues(
            rng, u_n, cfg.cell_side, cfg.restricted_radius)

    half = np.deg2rad(cfg.angular_spread) / 2.0
    if cfg.single_duct_angle:
        aoa = np.broadcast_to(rng.uniform(-half, half, r_n)[:, None], (r_n, s_n)).copy()
        aod = np.broadcast_to(rng.uniform(-half, half, s_n)[None, :], (r_n, s_n)).copy()
    else:
        aoa = rng.uniform(-half, half, (r_n, s_n))
        aod = rng.uniform(-half, half, (r_n, s_n))

    victim_pilots = np.array(assign_pilots([u_n] * r_n, cfg.pilot_len, cfg.unique_pilots))
    aggressor_pilots = np.array(assign_pilots([u_n] * s_n, cfg.pilot_len, cfg.unique_pilots))

    return Scenario(
        config=cfg,
        victim_bs_xy=victim_bs,
        aggressor_bs_xy=aggressor_bs,
        victim_ue_xy=victim_ue,
        aggressor_ue_xy=aggressor_ue,
        victim_pilots=victim_pilots,
        aggressor_pilots=aggressor_pilots,
        duct_aoa=aoa,
        duct_aod=aod,
    )


def realize_channels(scenario, rng):
    """Draw all channel realizations for one coherence block.

    Draw order (fixed): victim shadowing, victim fading, aggressor
    shadowing, aggressor fading, duct NLoS. Returns a new Scenario with
    the realization fields filled.
    """
    cfg = scenario.config
    rng = np.random.default_rng(rng)
    r_n, s_n, u_n = cfg.num_victim_bs, cfg.num_aggressor_bs, cfg.ues_per_cell
    m = cfg.antennas_per_bs

    v_dist = _link_distances_km(scenario.victim_bs_xy, scenario.victim_ue_xy)
    v_beta = channels.path_loss(v_dist)
    v_psi = channels.draw_shadowing(rng, cfg.shadowing_sigma_db, v_dist.shape)
    v_g = channels.complex_normal(rng, v_dist.shape + (m,))
    v_h = np.sqrt(v_beta * v_psi)[..., None] * v_g

    a_dist = _link_distances_km(scenario.aggressor_bs_xy, scenario.aggressor_ue_xy)
    a_beta = channels.path_loss(a_dist)
    a_psi = channels.draw_shadowing(rng, cfg.shadowing_sigma_db, a_dist.shape)
    a_g = channels.complex_normal(rng, a_dist.shape + (m,))
    a_h = np.sqrt(a_beta * a_psi)[..., None] * a_g

    nlos = channels.complex_normal(rng, (r_n, s_n, m, m))
    duct_h = np.empty_like(nlos)
    for r in range(r_n):
        for s in range(s_n):
            duct_h[r, s] = channels.duct_matrix(
                scenario.duct_aoa[r, s], scenario.duct_aod[r, s],
                cfg.rician_k, cfg.duct_loss, nlos[r, s],
                cfg.antenna_spacing_ratio)

    return dataclasses.replace(
        scenario,
        victim_beta=v_beta, victim_psi=v_psi, victim_h=v_h,
        aggressor_beta=a_beta, aggressor_psi=a_psi, aggressor_h=a_h,
        duct_nlos=nlos, duct_h=duct_h)
