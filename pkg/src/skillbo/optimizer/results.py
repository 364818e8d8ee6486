"""Append-only JSON-lines results persistence.

One record per line: a header first, then one trial per evaluated
configuration, and finally a pareto-front record. Interrupted runs resume by
counting trial records; the header's config hash guards against resuming
with a different setup. Wall-clock metadata lives in dedicated fields so
records stay byte-identical across reruns.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field


@dataclass
class WorldResult:
    world: int
    seed: int
    objectives: dict[str, float]
    success: bool
    aborted: bool = False


@dataclass
class Trial:
    iteration: int
    configuration: dict
    objectives: dict[str, float]  # maximization frame, mean over worlds
    raw_objectives: dict[str, float]  # declared sense, mean over worlds
    worlds: list[WorldResult] = field(default_factory=list)
    seed: int = 0
    all_worlds_aborted: bool = False

    def objective_array(self, names) -> list[float]:
        return [self.objectives[n] for n in names]

    def success_rate(self) -> float:
        if not self.worlds:
            return 0.0
        return sum(1 for w in self.worlds if w.success) / len(self.worlds)

    def to_record(self) -> dict:
        d = asdict(self)
        d["type"] = "trial"
        return d

    @classmethod
    def from_record(cls, rec: dict) -> "Trial":
        return cls(
            iteration=rec["iteration"],
            configuration=rec["configuration"],
            objectives=rec["objectives"],
            raw_objectives=rec["raw_objectives"],
            worlds=[WorldResult(**w) for w in rec.get("worlds", [])],
            seed=rec.get("seed", 0),
            all_worlds_aborted=rec.get("all_worlds_aborted", False),
        )


class ResultsError(Exception):
    pass


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class ResultsFile:
    def __init__(self, path):
        self.path = os.fspath(path)

    # -- writing ------------------------------------------------------------

    def start(self, config_hash: str, meta: dict | None = None, extra: dict | None = None) -> None:
        header = {"type": "header", "config_hash": config_hash, "meta": meta or {}}
        if extra:
            header.update(extra)
        with open(self.path, "w") as fh:
            fh.write(_dump(header) + "\n")

    def append_trial(self, trial: Trial) -> None:
        with open(self.path, "a") as fh:
            fh.write(_dump(trial.to_record()) + "\n")

    def write_front(self, indices: list[int], meta: dict | None = None) -> None:
        rec = {"type": "front", "trial_indices": list(indices), "meta": meta or {}}
        with open(self.path, "a") as fh:
            fh.write(_dump(rec) + "\n")

    # -- reading -------------------------------------------------------------

    def exists(self) -> bool:
        return os.path.exists(self.path)

    def read(self) -> tuple[dict, list[Trial], list[int] | None]:
        if not self.exists():
            raise ResultsError(f"no results file at {self.path}")
        header = None
        trials: list[Trial] = []
        front = None
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec["type"] == "header":
                    header = rec
                elif rec["type"] == "trial":
                    trials.append(Trial.from_record(rec))
                elif rec["type"] == "front":
                    front = rec["trial_indices"]
        if header is None:
            raise ResultsError(f"{self.path}: missing header record")
        return header, trials, front

    def resume_point(self, config_hash: str) -> int:
        """Number of completed trials, verifying the config hash matches."""
        header, trials, _ = self.read()
        if header["config_hash"] != config_hash:
            raise ResultsError(
                f"{self.path} was produced by a different configuration "
                f"({header['config_hash'][:12]} != {config_hash[:12]})"
            )
        return len(trials)
