"""
Run configuration: sectioned ``key = value`` files validated per command.

    [measure]
    theta = 0.7
    N = 3
    M = 5
    weight = krawtchouk

    [run]
    seed = 7

Each command accepts a fixed set of sections; a section it does not use, an
unknown section or an unknown key is an error. Command-line flags override
the ``[run]`` section.
"""

import configparser
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

from django.conf import settings

from apps.continuous.utils import resolve_seed

from ..serializers import SECTION_SERIALIZERS

logger = logging.getLogger(__name__)

COMMAND_SECTIONS = {
    "enumerate": ("measure", "run"),
    "measure": ("measure", "sampling", "run"),
    "verify-nekrasov": ("measure", "family", "contour", "run"),
    "verify-bijection": ("measure", "family", "run"),
    "verify-jack": ("jack", "run"),
    "verify-discrete-loop": ("measure", "family", "observables", "contour", "run"),
    "sample-continuous": ("continuous", "sampling", "run"),
    "verify-continuous-loop": ("continuous", "observables", "contour", "sampling", "run"),
    "diffuse-limit": ("continuous", "sampling", "run"),
    "verify-cumulants": ("measure", "observables", "run"),
}


class RunConfigError(Exception):
    """Raised when a run configuration cannot be parsed or validated."""
    pass


@dataclass
class RunConfig:
    """A validated command invocation."""
    command: str
    sections: Dict[str, dict]
    seed: int
    threads: int
    tol: Optional[float] = None
    out: Optional[Path] = None
    format: str = "json"
    source: Optional[Path] = field(default=None, compare=False)

    def section(self, name: str) -> dict:
        if name not in self.sections:
            raise RunConfigError(f"{self.command} has no [{name}] section")
        return self.sections[name]

    @property
    def report_path(self) -> Path:
        """``--out`` when it names a .json file, else ``<dir>/<command>.json``."""
        if self.out is None:
            return Path(settings.CORNERS_LAB_REPORT_DIR) / f"{self.command}.json"
        if self.out.suffix == ".json":
            return self.out
        return self.out / f"{self.command}.json"

    def artifact_path(self, suffix: str) -> Path:
        return self.report_path.with_suffix(suffix)

    def parameters(self) -> dict:
        """Everything that determines the results; thread counts excluded."""
        sections = {name: values for name, values in self.sections.items() if name != "run"}
        return {"seed": self.seed, "tol": self.tol, "sections": sections}


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(
        interpolation=None,
        inline_comment_prefixes=("#", ";"),
        default_section="__defaults__",
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise RunConfigError(f"cannot parse {source}: {e}") from e
    return {name: dict(parser.items(name)) for name in parser.sections()}


def read_config_file(path: Union[str, Path]) -> Dict[str, Dict[str, str]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise RunConfigError(f"cannot read {path}: {e}") from e
    return parse_config_text(text, source=str(path))


def _flatten(errors) -> str:
    if isinstance(errors, Mapping):
        return " ".join(f"{key}: {_flatten(value)}" for key, value in errors.items())
    if isinstance(errors, (list, tuple)):
        return " ".join(_flatten(value) for value in errors)
    return str(errors)


def _format_errors(section: str, errors: Mapping) -> str:
    messages = []
    for key, value in errors.items():
        where = f"[{section}]" if key == "non_field_errors" else f"[{section}] {key}"
        messages.append(f"{where}: {_flatten(value)}")
    return "; ".join(messages)


def validate_sections(command: str, raw: Mapping[str, Mapping[str, str]]) -> Dict[str, dict]:
    """
    Run every section a command accepts through its serializer.

    Raises:
        RunConfigError: for an unknown command, an unknown or unused section,
            unknown keys or invalid values
    """
    if command not in COMMAND_SECTIONS:
        raise RunConfigError(f"unknown command {command!r}")
    allowed = COMMAND_SECTIONS[command]
    for name in raw:
        if name not in SECTION_SERIALIZERS:
            raise RunConfigError(f"unknown section [{name}]")
        if name not in allowed:
            raise RunConfigError(f"section [{name}] is not used by {command}")

    sections, problems = {}, []
    for name in allowed:
        serializer = SECTION_SERIALIZERS[name](data=dict(raw.get(name, {})))
        if serializer.is_valid():
            sections[name] = dict(serializer.validated_data)
        else:
            problems.append(_format_errors(name, serializer.errors))
    if problems:
        raise RunConfigError("; ".join(problems))
    return sections


def load_config(
    command: str,
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, object]] = None,
    text: Optional[str] = None,
) -> RunConfig:
    """
    Build a RunConfig from a file (or text) plus command-line overrides.

    ``overrides`` holds the flag values (seed, tol, threads, out, format);
    None means the flag was not given. A missing seed is drawn fresh and
    recorded so the run can be repeated.
    """
    if path is not None:
        raw = read_config_file(path)
    elif text is not None:
        raw = parse_config_text(text)
    else:
        raw = {}

    run_section = dict(raw.get("run", {}))
    for key, value in (overrides or {}).items():
        if value is not None:
            run_section[key] = str(value)
    if run_section:
        raw = {**raw, "run": run_section}

    sections = validate_sections(command, raw)
    run = sections["run"]
    seed = resolve_seed(run.get("seed"))
    config = RunConfig(
        command=command,
        sections=sections,
        seed=seed,
        threads=run.get("threads") or settings.CORNERS_LAB_THREADS,
        tol=run.get("tol"),
        out=Path(run["out"]) if run.get("out") else None,
        format=run["format"],
        source=Path(path) if path is not None else None,
    )
    logger.debug(f"Loaded {command} config: seed={seed}, threads={config.threads}, sections={sorted(sections)}")
    return config
