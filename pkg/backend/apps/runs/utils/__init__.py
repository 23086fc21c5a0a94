from .config import (
    COMMAND_SECTIONS,
    RunConfig,
    RunConfigError,
    load_config,
    parse_config_text,
    read_config_file,
    validate_sections,
)
from .reports import (
    SCHEMA_VERSION,
    Table,
    build_report,
    meta_path,
    render_report,
    to_jsonable,
    write_report,
    write_table,
)
from .commands import CONFIG_ERRORS, HANDLERS, CommandResult, execute
from .processor import (
    EXIT_CONFIG,
    EXIT_FAILED,
    EXIT_PASSED,
    RunOutcome,
    RunProcessor,
    create_run,
    process_run,
)

__all__ = [
    "COMMAND_SECTIONS",
    "RunConfig",
    "RunConfigError",
    "load_config",
    "parse_config_text",
    "read_config_file",
    "validate_sections",
    "SCHEMA_VERSION",
    "Table",
    "build_report",
    "meta_path",
    "render_report",
    "to_jsonable",
    "write_report",
    "write_table",
    "CONFIG_ERRORS",
    "HANDLERS",
    "CommandResult",
    "execute",
    "EXIT_CONFIG",
    "EXIT_FAILED",
    "EXIT_PASSED",
    "RunOutcome",
    "RunProcessor",
    "create_run",
    "process_run",
]
