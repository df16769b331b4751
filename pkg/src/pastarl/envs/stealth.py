"""Stealth visual search: a Dubins-dynamics robot scanning hidden targets.

Three objectives: r_score rewards discovering and tracking unscanned targets,
r_stealth rewards hugging the arena borders (the central zone is risky), and
r_expl rewards movement.  The agent senses through a 2x3 vision grid over a
98-degree field of view plus a 20-ray lidar; observation layout is
[x, y, cos th, sin th] ++ 6 grid cells ++ 20 lidar ranges (dim 30).
"""

from __future__ import annotations

import numpy as np

from pastarl.envs.base import MomdpEnv, register_reward_fn


def stealth_rewards(snap: dict) -> np.ndarray:
    """Pure reward computation from a flat snapshot (used by step and replay)."""
    r_score = np.clip(
        10.0 * snap["n_new"] + 0.05 * snap["vision_sum"], 0.0, 10.0 * snap["n_targets"]
    )
    r_stealth = np.clip(1.0 - snap["d_risk"] / snap["d_max"] - snap["collided"], 0.0, 1.0)
    r_expl = np.clip(2.0 * snap["displacement"], 0.0, 1.0)
    return np.array([r_score, r_stealth, r_expl])


register_reward_fn("stealth", stealth_rewards)


class StealthWorld(MomdpEnv):
    name = "stealth"
    observation_dim = 30
    action_dim = 2
    m = 3

    def __init__(
        self,
        n_targets: int = 5,
        n_circles: int = 3,
        n_rects: int = 2,
        episode_cap: int = 1000,
        scan_range: float = 0.3,
        safe_frac: float = 0.75,
    ):
        self.half_dims = np.array([1.0, 1.0])
        self.agent_radius = 0.05
        self.target_radius = 0.05
        self.dt = 0.05
        self.v_scale = 1.0
        self.omega_scale = np.pi
        self.fov = 1.715
        self.sensor_range = 0.6
        self.n_lidar = 20
        self.lidar_range = 0.35
        self.circle_radius = 0.12
        self.rect_half = np.array([0.12, 0.09])
        self.n_targets = n_targets
        self.n_circles = n_circles
        self.n_rects = n_rects
        self.episode_cap = episode_cap
        self.scan_range = scan_range
        self.l_safe = safe_frac * self.half_dims
        # d_risk peaks at the arena center where both safe margins are widest.
        self.d_max = float(min(self.l_safe))
        self._rng = None

    # -- geometry helpers ---------------------------------------------------

    def _collides(self, p: np.ndarray) -> bool:
        r = self.agent_radius
        if np.any(np.abs(p) + r > self.half_dims):
            return True
        for c in self.circles:
            if np.linalg.norm(p - c) < r + self.circle_radius:
                return True
        for c in self.rects:
            closest = np.clip(p, c - self.rect_half, c + self.rect_half)
            if np.linalg.norm(p - closest) < r:
                return True
        return False

    def _sample_free_point(self, rng: np.random.Generator, clearance: float) -> np.ndarray:
        for _ in range(1000):
            p = rng.uniform(-self.half_dims + clearance, self.half_dims - clearance)
            ok = all(
                np.linalg.norm(p - c) >= clearance + self.circle_radius for c in self.circles
            ) and all(
                np.linalg.norm(p - np.clip(p, c - self.rect_half, c + self.rect_half)) >= clearance
                for c in self.rects
            )
            if ok:
                return p
        raise RuntimeError("rejection sampling failed to place a free point")

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self._rng = rng
        self.circles = [
            rng.uniform(-self.half_dims + 0.3, self.half_dims - 0.3) for _ in range(self.n_circles)
        ]
        self.rects = [
            rng.uniform(-self.half_dims + 0.3, self.half_dims - 0.3) for _ in range(self.n_rects)
        ]
        self.targets = np.array(
            [self._sample_free_point(rng, self.target_radius) for _ in range(self.n_targets)]
        )
        self.scanned = np.zeros(self.n_targets, dtype=bool)
        self.pos = self._sample_free_point(rng, self.agent_radius)
        self.theta = rng.uniform(-np.pi, np.pi)
        self.steps = 0
        return self._observation()

    def step(self, action: np.ndarray):
        a = np.clip(np.asarray(action, dtype=np.float64), 0.0, 1.0)
        v = a[0] * self.v_scale
        omega = (2.0 * a[1] - 1.0) * self.omega_scale
        self.theta = self.theta + omega * self.dt
        prev = self.pos.copy()
        candidate = self.pos + v * self.dt * np.array([np.cos(self.theta), np.sin(self.theta)])
        collided = self._collides(candidate)
        if not collided:
            self.pos = candidate
        displacement = float(np.linalg.norm(self.pos - prev))

        n_new = self._scan_targets()
        grid, lidar = self.sensors()
        d_risk = self._d_risk(self.pos)
        snap = {
            "n_new": int(n_new),
            "vision_sum": float(grid.sum()),
            "n_targets": int(self.n_targets),
            "d_risk": float(d_risk),
            "d_max": float(self.d_max),
            "collided": int(collided),
            "displacement": displacement,
        }
        reward = stealth_rewards(snap)
        self.steps += 1
        done = self.steps >= self.episode_cap
        obs = np.concatenate(
            [[self.pos[0], self.pos[1], np.cos(self.theta), np.sin(self.theta)], grid, lidar]
        )
        info = {"reward_snapshot": snap, "events": {"collision": collided, "n_new": int(n_new)}}
        return obs, reward, done, info

    def _d_risk(self, p: np.ndarray) -> float:
        return float(max(0.0, min(self.l_safe[0] - abs(p[0]), self.l_safe[1] - abs(p[1]))))

    def _scan_targets(self) -> int:
        """Unscanned targets inside the FOV wedge within scan_range become scanned."""
        n_new = 0
        for k in range(self.n_targets):
            if self.scanned[k]:
                continue
            rel = self.targets[k] - self.pos
            dist = np.linalg.norm(rel)
            if dist > self.scan_range:
                continue
            bearing = self._wrap(np.arctan2(rel[1], rel[0]) - self.theta)
            if abs(bearing) <= self.fov / 2.0:
                self.scanned[k] = True
                n_new += 1
        return n_new

    @staticmethod
    def _wrap(a: float) -> float:
        return (a + np.pi) % (2.0 * np.pi) - np.pi

    def sensors(self) -> tuple[np.ndarray, np.ndarray]:
        """(vision_grid 6-vector, lidar 20-vector) for the current world state."""
        counts = np.zeros(6)
        for k in range(self.n_targets):
            if self.scanned[k]:
                continue
            rel = self.targets[k] - self.pos
            dist = np.linalg.norm(rel)
            if dist > self.sensor_range:
                continue
            bearing = self._wrap(np.arctan2(rel[1], rel[0]) - self.theta)
            if abs(bearing) > self.fov / 2.0:
                continue
            band = 0 if dist < self.sensor_range / 2.0 else 1
            sector = min(2, int((bearing + self.fov / 2.0) / (self.fov / 3.0)))
            counts[band * 3 + sector] += 1
        grid = np.minimum(1.0, 0.5 * counts)
        return grid, self._lidar()

    def _lidar(self) -> np.ndarray:
        angles = self.theta + 2.0 * np.pi * np.arange(self.n_lidar) / self.n_lidar
        out = np.ones(self.n_lidar)
        for i, ang in enumerate(angles):
            u = np.array([np.cos(ang), np.sin(ang)])
            t_hit = self._ray_walls(u)
            for c in self.circles:
                t_hit = min(t_hit, self._ray_circle(u, c, self.circle_radius))
            for k in range(self.n_targets):
                if not self.scanned[k]:
                    t_hit = min(t_hit, self._ray_circle(u, self.targets[k], self.target_radius))
            for c in self.rects:
                t_hit = min(t_hit, self._ray_rect(u, c))
            if t_hit <= self.lidar_range:
                out[i] = t_hit / self.lidar_range
        return out

    def _ray_walls(self, u: np.ndarray) -> float:
        best = np.inf
        for axis in (0, 1):
            if abs(u[axis]) < 1e-12:
                continue
            for wall in (-self.half_dims[axis], self.half_dims[axis]):
                t = (wall - self.pos[axis]) / u[axis]
                if t > 0:
                    other = self.pos[1 - axis] + t * u[1 - axis]
                    if abs(other) <= self.half_dims[1 - axis] + 1e-12:
                        best = min(best, t)
        return best

    def _ray_circle(self, u: np.ndarray, center: np.ndarray, radius: float) -> float:
        rel = center - self.pos
        b = float(rel @ u)
        disc = b * b - float(rel @ rel) + radius * radius
        if disc < 0:
            return np.inf
        t = b - np.sqrt(disc)
        return t if t > 0 else np.inf

    def _ray_rect(self, u: np.ndarray, center: np.ndarray) -> float:
        lo, hi = center - self.rect_half, center + self.rect_half
        t_near, t_far = -np.inf, np.inf
        for axis in (0, 1):
            if abs(u[axis]) < 1e-12:
                if not lo[axis] <= self.pos[axis] <= hi[axis]:
                    return np.inf
                continue
            t1 = (lo[axis] - self.pos[axis]) / u[axis]
            t2 = (hi[axis] - self.pos[axis]) / u[axis]
            t_near = max(t_near, min(t1, t2))
            t_far = min(t_far, max(t1, t2))
        if t_near > t_far or t_far < 0:
            return np.inf
        return t_near if t_near > 0 else np.inf

    def _observation(self) -> np.ndarray:
        grid, lidar = self.sensors()
        return np.concatenate(
            [[self.pos[0], self.pos[1], np.cos(self.theta), np.sin(self.theta)], grid, lidar]
        )
