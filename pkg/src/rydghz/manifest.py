"""Reproducible run manifests: what ran, with what, producing which bytes.

A manifest records the exact command, the resolved configuration, the
master seed, and digests of every input and output file. Re-running the
stored command against the same build must reproduce the output digests
bit for bit; timing fields are informational and excluded from that
contract.
"""

from __future__ import annotations

import shlex
import time
from dataclasses import dataclass, field

from .errors import ValidationError
from .fileio import atomic_write_text, read_json, stable_json

MANIFEST_FORMAT = "rydghz-run-manifest"
MANIFEST_VERSION = 1


def code_version():
    from rydghz import __version__

    return __version__


def utc_stamp(seconds=None):
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(seconds))


@dataclass
class RunManifest:
    """Complete provenance for one command-line run."""

    subcommand: str
    argv: tuple
    config: dict
    seed: int
    version: str = field(default_factory=code_version)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    started_utc: str = field(default_factory=utc_stamp)
    duration_s: float = 0.0

    @property
    def command(self):
        return shlex.join(["rydghz", *self.argv])

    def to_json(self):
        return stable_json({
            "format": MANIFEST_FORMAT,
            "format_version": MANIFEST_VERSION,
            "command": self.command,
            "subcommand": self.subcommand,
            "argv": list(self.argv),
            "config": self.config,
            "seed": self.seed,
            "code_version": self.version,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
            "started_utc": self.started_utc,
            "duration_s": self.duration_s,
        })

    @classmethod
    def from_dict(cls, payload):
        if payload.get("format") != MANIFEST_FORMAT:
            raise ValidationError(f"not a {MANIFEST_FORMAT} document")
        if payload.get("format_version") != MANIFEST_VERSION:
            raise ValidationError(
                f"unsupported manifest version {payload.get('format_version')}"
            )
        return cls(
            subcommand=payload["subcommand"],
            argv=tuple(payload["argv"]),
            config=dict(payload["config"]),
            seed=int(payload["seed"]),
            version=payload["code_version"],
            inputs=dict(payload["inputs"]),
            outputs=dict(payload["outputs"]),
            started_utc=payload["started_utc"],
            duration_s=float(payload["duration_s"]),
        )

    def write(self, path):
        return atomic_write_text(path, self.to_json())

    @classmethod
    def read(cls, path):
        return cls.from_dict(read_json(path))
