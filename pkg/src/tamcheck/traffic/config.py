"""Configuration for the traffic monitoring network.

A `Scenario` names which viewing ranges are congested in the injected
sequence, which cameras undergo a silent failure, and which of those later
recover.  `TrafficConfig` bundles a scenario with the camera/car counts and
timing constants.

Scenario files are UTF-8 key=value text, one pair per line: `n_cameras=6`,
`jam=2,3,4`, `stop=2`, `start=`, plus optional constant overrides
(`capacity=2`, `car_gap=3`, `cam_time=10`, `wait_time=5`, `alive_time=15`,
`recover_time=500`, `n_cars=4`).  Blank lines and `#`/`//` comments are
ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Scenario:
    """Injected traffic conditions, as camera-id sets (clipped to the
    configured camera count when the network is built)."""

    jam: tuple = ()
    stop: tuple = ()
    start: tuple = ()

    def clipped(self, n_cameras: int) -> "Scenario":
        keep = lambda ids: tuple(sorted(i for i in set(ids) if 0 <= i < n_cameras))
        return Scenario(keep(self.jam), keep(self.stop), keep(self.start))

    def jam_vector(self, n_cameras: int) -> list:
        return [i in self.jam for i in range(n_cameras)]

    def stop_vector(self, n_cameras: int) -> list:
        return [i in self.stop for i in range(n_cameras)]

    def start_vector(self, n_cameras: int) -> list:
        return [i in self.start for i in range(n_cameras)]


def scenario_presets() -> dict:
    """Built-in scenarios.

    fig7:    ranges 1,2,3 congested, camera 1 fails and later recovers.
    paper-R: ranges 2,3,4 congested, camera 2 fails for good; the failing
             camera ends up mastering the merged organization, so its death
             exercises failure detection, master election and re-merging.
    quiet:   nothing injected; only cars and ping rounds.
    """
    return {
        "fig7": Scenario(jam=(1, 2, 3), stop=(1,), start=(1,)),
        "paper-R": Scenario(jam=(2, 3, 4), stop=(2,), start=()),
        "quiet": Scenario(),
    }


@dataclass(frozen=True)
class TrafficConfig:
    n_cameras: int = 6
    capacity: int = 2          # cars per viewing range before congestion
    n_cars: int | None = None  # default: 2 * capacity
    car_gap: int = 3           # release interval bound
    cam_time: int = 10         # time a car spends per viewing range
    wait_time: int = 5         # ping period
    alive_time: int = 15       # echo timeout
    recover_time: int = 500    # failure recovery delay
    scenario: Scenario = field(default_factory=Scenario)

    @property
    def cars(self) -> int:
        return self.n_cars if self.n_cars is not None else 2 * self.capacity

    def validated(self) -> "TrafficConfig":
        if self.n_cameras < 2:
            raise ConfigError(f"n_cameras must be >= 2, got {self.n_cameras}")
        for name in ("capacity", "car_gap", "cam_time", "wait_time",
                     "alive_time", "recover_time"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.cars < 1:
            raise ConfigError("n_cars must be >= 1")
        if self.capacity >= self.cars:
            raise ConfigError(
                f"capacity ({self.capacity}) must be below the car count ({self.cars}), "
                "otherwise congestion is unreachable")
        if self.alive_time < 2 * self.wait_time:
            raise ConfigError(
                f"alive_time ({self.alive_time}) must be at least twice wait_time "
                f"({self.wait_time}) so a ping round elapses before a timeout")
        return self


_INT_KEYS = {"n_cameras", "n_cars", "capacity", "car_gap", "cam_time",
             "wait_time", "alive_time", "recover_time"}
_LIST_KEYS = {"jam", "stop", "start"}


def parse_scenario_text(text: str) -> TrafficConfig:
    values: dict = {}
    lists = {k: () for k in _LIST_KEYS}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("//"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in _INT_KEYS:
            try:
                values[key] = int(val)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} needs an integer, got {val!r}")
        elif key in _LIST_KEYS:
            if not val:
                lists[key] = ()
            else:
                try:
                    lists[key] = tuple(int(v) for v in val.split(","))
                except ValueError:
                    raise ConfigError(f"line {lineno}: {key} needs comma-separated ids")
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    cfg = TrafficConfig(scenario=Scenario(lists["jam"], lists["stop"], lists["start"]))
    if values:
        cfg = replace(cfg, **values)
    return cfg.validated()


def load_scenario_file(path: str) -> TrafficConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read())


def preset_config(name: str, n_cameras: int = 6, **overrides) -> TrafficConfig:
    presets = scenario_presets()
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(presets))}")
    cfg = TrafficConfig(n_cameras=n_cameras, scenario=presets[name], **overrides)
    return cfg.validated()
