"""Deterministic street-canyon scene: user locations to multipath MIMO-OFDM channels.

Two wall-mounted base stations with uniform planar arrays face a
rectangular user region. Propagation uses free-space line of sight plus
first-order image-source reflections off the two street walls and the
ground; axis-aligned vertical rectangles block rays. Every draw is
counter-based so the same config yields bit-identical datasets.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    EmptyPathSetError,
    FrontHalfspaceError,
    ShadowedSceneError,
)

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0

UPLINK_BS1 = "uplink_bs1"
DOWNLINK_BS2 = "downlink_bs2"
BANDS = (UPLINK_BS1, DOWNLINK_BS2)


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned vertical rectangle in the plane {axis == coord}.

    `lo`/`hi` bound the other horizontal coordinate, `z_lo`/`z_hi` the height.
    """

    axis: str
    coord: float
    lo: float
    hi: float
    z_lo: float
    z_hi: float

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ConfigError(f"obstacle axis must be 'x' or 'y', got {self.axis!r}")
        if self.lo >= self.hi or self.z_lo >= self.z_hi:
            raise ConfigError("obstacle extents must be nonempty")


@dataclass(frozen=True)
class Orientation:
    """BS array mounting: unit outward normal plus the array's up direction."""

    normal: tuple
    up: tuple

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        u = np.asarray(self.up, dtype=float)
        if not (np.isclose(np.linalg.norm(n), 1.0, atol=1e-9)
                and np.isclose(np.linalg.norm(u), 1.0, atol=1e-9)):
            raise ConfigError("orientation vectors must be unit length")
        if abs(float(n @ u)) > 1e-9:
            raise ConfigError("normal and up must be orthogonal")


@dataclass(frozen=True)
class SceneConfig:
    bs_positions: tuple  # two 3D points, meters
    wall_planes_y: tuple  # two y = const planes bounding the street, or None
    ground_height: float  # z = const reflector, or None to disable
    obstacles: tuple
    reflection_coefficient: float
    uplink_carrier_hz: float
    downlink_carrier_hz: float
    bandwidth_hz: float
    num_subcarriers: int
    array_shape: tuple  # (nx, ny), nx*ny antennas
    array_orientations: tuple  # one Orientation per BS
    num_users: int
    user_region: tuple  # (xmin, xmax, ymin, ymax) at user_height
    user_height: float
    rng_seed: int

    def __post_init__(self):
        nx, ny = self.array_shape
        if nx < 1 or ny < 1:
            raise ConfigError("array_shape entries must be positive")
        if self.num_subcarriers < 1:
            raise ConfigError("num_subcarriers must be >= 1")
        if self.uplink_carrier_hz <= 0 or self.downlink_carrier_hz <= 0:
            raise ConfigError("carriers must be positive")
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth must be positive")
        if not 0 < self.reflection_coefficient <= 1:
            raise ConfigError("reflection_coefficient must be in (0, 1]")
        if len(self.bs_positions) != 2 or len(self.array_orientations) != 2:
            raise ConfigError("exactly two base stations are modeled")
        xmin, xmax, ymin, ymax = self.user_region
        if xmin >= xmax or ymin >= ymax:
            raise ConfigError("user_region must be a nonempty rectangle")
        if self.wall_planes_y is not None:
            w0, w1 = sorted(self.wall_planes_y)
            if not (w0 < ymin and ymax < w1):
                raise ConfigError("user_region must lie strictly between the walls")
        if self.num_users < 1:
            raise ConfigError("num_users must be >= 1")

    @property
    def num_antennas(self):
        return self.array_shape[0] * self.array_shape[1]

    def carrier_for_bs(self, bs_index):
        return (self.uplink_carrier_hz, self.downlink_carrier_hz)[bs_index]

    def to_dict(self):
        d = asdict(self)
        d["obstacles"] = [asdict(o) for o in self.obstacles]
        d["array_orientations"] = [asdict(o) for o in self.array_orientations]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["obstacles"] = tuple(Obstacle(**o) for o in d["obstacles"])
        d["array_orientations"] = tuple(
            Orientation(normal=tuple(o["normal"]), up=tuple(o["up"]))
            for o in d["array_orientations"]
        )
        d["bs_positions"] = tuple(tuple(p) for p in d["bs_positions"])
        if d["wall_planes_y"] is not None:
            d["wall_planes_y"] = tuple(d["wall_planes_y"])
        d["array_shape"] = tuple(d["array_shape"])
        d["user_region"] = tuple(d["user_region"])
        return cls(**d)


def default_scene(num_users=2000, rng_seed=101):
    """Desk-scale street canyon.

    An elevated screen in front of BS2 shadows a wedge of users from its
    line of sight (mixed LoS/NLoS targets) while sitting in a height band
    that BS2's wall and ground bounces miss, so no user is fully
    shadowed. Every BS1 path clears it by construction: the charted
    uplink channels live on one connected manifold.
    """
    return SceneConfig(
        bs_positions=((20.0, 2.0, 8.0), (100.0, 18.0, 8.0)),
        wall_planes_y=(0.0, 20.0),
        ground_height=0.0,
        obstacles=(Obstacle(axis="y", coord=14.0, lo=86.0, hi=96.0,
                            z_lo=5.6, z_hi=6.5),),
        reflection_coefficient=0.7,
        uplink_carrier_hz=3.5e9,
        downlink_carrier_hz=28e9,
        bandwidth_hz=20e6,
        num_subcarriers=16,
        array_shape=(8, 8),
        array_orientations=(
            Orientation(normal=(0.0, 1.0, 0.0), up=(0.0, 0.0, 1.0)),
            Orientation(normal=(0.0, -1.0, 0.0), up=(0.0, 0.0, 1.0)),
        ),
        num_users=num_users,
        user_region=(10.0, 110.0, 4.0, 13.5),
        user_height=1.5,
        rng_seed=rng_seed,
    )


# ---------------------------------------------------------------------------
# array response
# ---------------------------------------------------------------------------

def steering_vector(array_shape, orientation, carrier_hz, azimuth, elevation):
    """UPA response for a departure direction, half-wavelength spacing.

    Element (m, n) of the nx-by-ny grid contributes exp(j*pi*(m*u + n*v))
    where (u, v) are the direction cosines along the array's horizontal
    and up axes; m varies fastest in the returned vector. Directions
    behind the array plane are rejected, never clipped.
    """
    if carrier_hz <= 0:
        raise ConfigError("carrier must be positive")
    nx, ny = array_shape
    normal = np.asarray(orientation.normal, dtype=float)
    up = np.asarray(orientation.up, dtype=float)
    d = np.array([
        np.cos(elevation) * np.cos(azimuth),
        np.cos(elevation) * np.sin(azimuth),
        np.sin(elevation),
    ])
    if float(d @ normal) <= 0.0:
        raise FrontHalfspaceError(
            f"departure direction az={azimuth:.4f}, el={elevation:.4f} is behind the array"
        )
    e_x = np.cross(normal, up)
    e_x /= np.linalg.norm(e_x)
    u = float(d @ e_x)
    v = float(d @ up)
    m = np.arange(nx)
    n = np.arange(ny)
    phase = np.pi * (m[None, :] * u + n[:, None] * v)  # [n, m], m fastest
    return np.exp(1j * phase).ravel()


# ---------------------------------------------------------------------------
# image-source path tracing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Path:
    delay: float  # seconds
    gain: complex
    azimuth: float  # departure at the BS, global frame, radians
    elevation: float
    num_reflections: int
    kind: str  # 'los' | 'wall' | 'ground'


@dataclass
class PathSet:
    paths: list
    bs_index: int

    @property
    def has_los(self):
        return any(p.kind == "los" for p in self.paths)


def _segment_blocked(p, q, obstacles):
    """True if the open segment p->q crosses any obstacle rectangle."""
    for ob in obstacles:
        ax = 0 if ob.axis == "x" else 1
        other = 1 - ax
        pa, qa = p[ax], q[ax]
        if (pa - ob.coord) * (qa - ob.coord) >= 0.0:
            continue
        t = (ob.coord - pa) / (qa - pa)
        hit = p + t * (q - p)
        if ob.lo <= hit[other] <= ob.hi and ob.z_lo <= hit[2] <= ob.z_hi:
            return True
    return False


def _angles(direction):
    az = float(np.arctan2(direction[1], direction[0]))
    el = float(np.arctan2(direction[2], np.hypot(direction[0], direction[1])))
    return az, el


def trace_paths(scene, user_location, bs_index, carrier_hz=None,
                restrict_to_front=True):
    """LoS plus first-order wall/ground image-source paths BS -> user.

    Gain of a path of total length d with r reflections is
    (lambda / (4*pi*d)) * Gamma**r; the delay is d / c. Paths whose
    departure falls behind the BS array plane are dropped when
    `restrict_to_front` is set (the array cannot radiate backwards);
    pass False to inspect the raw reflection geometry.
    """
    user = np.asarray(user_location, dtype=float)
    xmin, xmax, ymin, ymax = scene.user_region
    if not (xmin <= user[0] <= xmax and ymin <= user[1] <= ymax):
        raise ValueError(f"user {user} outside user_region")
    bs = np.asarray(scene.bs_positions[bs_index], dtype=float)
    if carrier_hz is None:
        carrier_hz = scene.carrier_for_bs(bs_index)
    lam = SPEED_OF_LIGHT / carrier_hz
    gamma = scene.reflection_coefficient
    normal = np.asarray(scene.array_orientations[bs_index].normal, dtype=float)

    def make_path(total_len, direction, reflections, kind):
        az, el = _angles(direction)
        gain = (lam / (4.0 * np.pi * total_len)) * gamma**reflections
        return Path(delay=total_len / SPEED_OF_LIGHT, gain=complex(gain),
                    azimuth=az, elevation=el, num_reflections=reflections,
                    kind=kind)

    paths = []

    # line of sight
    if not _segment_blocked(bs, user, scene.obstacles):
        direction = user - bs
        dist = float(np.linalg.norm(direction))
        paths.append(make_path(dist, direction / dist, 0, "los"))

    # single-bounce reflections via mirrored user images
    images = []
    if scene.wall_planes_y is not None:
        for wy in scene.wall_planes_y:
            img = user.copy()
            img[1] = 2.0 * wy - img[1]
            images.append((img, 1, "wall"))
    if scene.ground_height is not None:
        img = user.copy()
        img[2] = 2.0 * scene.ground_height - img[2]
        images.append((img, 2, "ground"))

    for img, plane_axis, kind in images:
        denom = img[plane_axis] - bs[plane_axis]
        if denom == 0.0:
            continue  # BS lies in the reflector plane: degenerate
        plane_coord = 0.5 * (img[plane_axis] + user[plane_axis])
        t = (plane_coord - bs[plane_axis]) / denom
        if not 0.0 < t < 1.0:
            continue  # no geometric bounce between BS and user
        bounce = bs + t * (img - bs)
        if _segment_blocked(bs, bounce, scene.obstacles):
            continue
        if _segment_blocked(bounce, user, scene.obstacles):
            continue
        total_len = float(np.linalg.norm(img - bs))
        direction = (img - bs) / total_len
        paths.append(make_path(total_len, direction, 1, kind))

    if restrict_to_front:
        paths = [
            p for p in paths
            if np.cos(p.elevation) * np.cos(p.azimuth) * normal[0]
            + np.cos(p.elevation) * np.sin(p.azimuth) * normal[1]
            + np.sin(p.elevation) * normal[2] > 0.0
        ]

    if not paths:
        raise EmptyPathSetError(f"all paths blocked for user {user}, BS {bs_index}")
    return PathSet(paths=paths, bs_index=bs_index)


# ---------------------------------------------------------------------------
# channel synthesis
# ---------------------------------------------------------------------------

@dataclass
class ChannelVector:
    """Vectorized channel of length A*S, antenna index fastest."""

    values: np.ndarray
    carrier_hz: float
    bs_index: int
    shadowed: bool = False


def subcarrier_frequencies(scene, carrier_hz):
    s = np.arange(scene.num_subcarriers)
    delta = scene.bandwidth_hz / scene.num_subcarriers
    return carrier_hz + (s - (scene.num_subcarriers - 1) / 2.0) * delta


def synthesize_channel(paths, scene, carrier_hz):
    """Sum path contributions over subcarriers and antennas.

    Entry [a + s*A] is sum_p gain_p * exp(-2j*pi*f_s*delay_p) * steer_p[a];
    steering is evaluated at the carrier (narrowband array). An empty
    PathSet yields an all-zero shadowed channel.
    """
    a_count = scene.num_antennas
    s_count = scene.num_subcarriers
    if not paths.paths:
        return ChannelVector(
            values=np.zeros(a_count * s_count, dtype=np.complex128),
            carrier_hz=carrier_hz, bs_index=paths.bs_index, shadowed=True)
    freqs = subcarrier_frequencies(scene, carrier_hz)
    orientation = scene.array_orientations[paths.bs_index]
    gains = np.array([p.gain for p in paths.paths])
    delays = np.array([p.delay for p in paths.paths])
    steer = np.stack([
        steering_vector(scene.array_shape, orientation, carrier_hz,
                        p.azimuth, p.elevation)
        for p in paths.paths
    ])  # (P, A)
    phase = np.exp(-2j * np.pi * freqs[:, None] * delays[None, :])  # (S, P)
    grid = np.einsum("p,sp,pa->sa", gains, phase, steer)
    return ChannelVector(values=grid.ravel(), carrier_hz=carrier_hz,
                         bs_index=paths.bs_index, shadowed=False)


# ---------------------------------------------------------------------------
# dataset generation and persistence
# ---------------------------------------------------------------------------

@dataclass
class Dataset:
    """Aligned per-user triplets: location, BS1 uplink channel, BS2 downlink channel."""

    locations: np.ndarray  # (U, 3) float64
    uplink_bs1: np.ndarray  # (U, A*S) complex128
    downlink_bs2: np.ndarray  # (U, A*S) complex128
    los: np.ndarray  # (U, 2) uint8
    scene: SceneConfig
    access_log: dict = field(default=None, repr=False, compare=False)
    _hash: str = field(default=None, repr=False, compare=False)

    @property
    def num_users(self):
        return self.locations.shape[0]

    def channels(self, band, idx=None):
        """Channel rows for a band; the access log records requested rows."""
        if band not in BANDS:
            raise ValueError(f"unknown band {band!r}")
        arr = self.uplink_bs1 if band == UPLINK_BS1 else self.downlink_bs2
        if idx is None:
            idx = np.arange(self.num_users)
        idx = np.asarray(idx)
        if self.access_log is not None:
            self.access_log.setdefault(band, set()).update(int(i) for i in idx)
        return arr[idx]

    def central_subcarrier(self, band, idx=None):
        """Central-subcarrier A-vector per user (subcarrier index S // 2)."""
        a = self.scene.num_antennas
        s_c = self.scene.num_subcarriers // 2
        return self.channels(band, idx)[:, s_c * a:(s_c + 1) * a]

    def content_hash(self):
        if self._hash is None:
            digest = hashlib.sha256()
            for arr in (self.locations, self.uplink_bs1, self.downlink_bs2, self.los):
                digest.update(np.ascontiguousarray(arr).tobytes())
            self._hash = digest.hexdigest()
        return self._hash

    def save(self, out_dir):
        out_dir.mkdir(parents=True, exist_ok=True)
        np.ascontiguousarray(self.locations, dtype="<f8").tofile(out_dir / "locations.f64")
        for band, arr in ((UPLINK_BS1, self.uplink_bs1), (DOWNLINK_BS2, self.downlink_bs2)):
            np.ascontiguousarray(arr, dtype="<c16").view("<f8").tofile(
                out_dir / f"{band}.f64")
        np.ascontiguousarray(self.los, dtype=np.uint8).tofile(out_dir / "los.u8")
        manifest = {
            "kind": "dataset",
            "num_users": self.num_users,
            "num_antennas": self.scene.num_antennas,
            "num_subcarriers": self.scene.num_subcarriers,
            "layout": "antenna index fastest, subcarrier slowest",
            "endianness": "little",
            "channel_encoding": "interleaved (re, im) float64 pairs",
            "scene": self.scene.to_dict(),
            "content_hash": self.content_hash(),
            "files": {
                "locations": "locations.f64",
                UPLINK_BS1: f"{UPLINK_BS1}.f64",
                DOWNLINK_BS2: f"{DOWNLINK_BS2}.f64",
                "los": "los.u8",
            },
        }
        with open(out_dir / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)

    @classmethod
    def load(cls, in_dir):
        with open(in_dir / "manifest.json") as f:
            manifest = json.load(f)
        if manifest.get("kind") != "dataset":
            raise ConfigError(f"{in_dir} is not a dataset directory")
        scene = SceneConfig.from_dict(manifest["scene"])
        u = manifest["num_users"]
        length = manifest["num_antennas"] * manifest["num_subcarriers"]
        locations = np.fromfile(in_dir / manifest["files"]["locations"],
                                dtype="<f8").reshape(u, 3)
        channels = {}
        for band in BANDS:
            raw = np.fromfile(in_dir / manifest["files"][band], dtype="<f8")
            channels[band] = raw.view("<c16").reshape(u, length).astype(np.complex128)
        los = np.fromfile(in_dir / manifest["files"]["los"], dtype=np.uint8).reshape(u, 2)
        ds = cls(locations=locations, uplink_bs1=channels[UPLINK_BS1],
                 downlink_bs2=channels[DOWNLINK_BS2], los=los, scene=scene)
        if ds.content_hash() != manifest["content_hash"]:
            raise ConfigError(f"dataset {in_dir} blobs do not match their manifest hash")
        return ds


def _user_location(scene, j):
    """Counter-based draw: user j's location is independent of all others."""
    rng = np.random.Generator(np.random.Philox(key=scene.rng_seed, counter=[0, 0, j, 0]))
    xmin, xmax, ymin, ymax = scene.user_region
    x = rng.uniform(xmin, xmax)
    y = rng.uniform(ymin, ymax)
    return np.array([x, y, scene.user_height])


def generate_dataset(scene):
    """Sample users and synthesize both bands; fails on heavy shadowing.

    Per-user work is independent (counter-based RNG) and assembled in
    user-index order, so any parallel execution would produce identical
    bytes.
    """
    u = scene.num_users
    length = scene.num_antennas * scene.num_subcarriers
    locations = np.empty((u, 3))
    uplink = np.empty((u, length), dtype=np.complex128)
    downlink = np.empty((u, length), dtype=np.complex128)
    los = np.zeros((u, 2), dtype=np.uint8)
    shadow_counts = [0, 0]
    for j in range(u):
        loc = _user_location(scene, j)
        locations[j] = loc
        for bs_index, (store, carrier) in enumerate((
            (uplink, scene.uplink_carrier_hz),
            (downlink, scene.downlink_carrier_hz),
        )):
            try:
                paths = trace_paths(scene, loc, bs_index, carrier_hz=carrier)
            except EmptyPathSetError:
                paths = PathSet(paths=[], bs_index=bs_index)
                shadow_counts[bs_index] += 1
            ch = synthesize_channel(paths, scene, carrier)
            store[j] = ch.values
            los[j, bs_index] = 1 if paths.has_los else 0
    for bs_index, count in enumerate(shadow_counts):
        if count > 0.05 * u:
            raise ShadowedSceneError(
                f"{count}/{u} users fully shadowed toward BS {bs_index + 1}; "
                "scene is misconfigured"
            )
    if any(shadow_counts):
        logger.info("fully shadowed users per BS: %s", shadow_counts)
    return Dataset(locations=locations, uplink_bs1=uplink, downlink_bs2=downlink,
                   los=los, scene=scene)
