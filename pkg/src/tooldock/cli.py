"""Command-line front door: manifest validation, suite runs, reports, agent
runs, and serving.

Exit codes: 0 success, 1 usage, 2 validation failure, 3 runtime/tool
failure, 4 state corruption.  In json output mode every command emits
exactly one JSON document on stdout; human mode writes tables to stdout and
diagnostics to stderr.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import community, reliability
from .agents import PolicyConfig, run_agent, select_tools
from .llm import BackendError, BackendRegistry, load_script
from .runtime import RegistrationError
from .schema import ManifestInvalid, validate_manifest
from .service import ENV_AUTH_TOKEN, ENV_STATE_DIR, ServiceConfig, serve as serve_service
from .store import StateCorruption, StateStore, seed_state

EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_STATE = 4


class CliError(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _emit(ctx: click.Context, document, human_lines=None) -> None:
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        for line in human_lines if human_lines is not None else [json.dumps(document, indent=2, sort_keys=True)]:
            click.echo(line)


def _store(ctx: click.Context, must_exist: bool = True) -> StateStore:
    store = StateStore(ctx.obj["state_dir"])
    if must_exist and not store.initialized():
        raise CliError(
            f"state dir {store.root} is not initialized; run `tooldock init` first", EXIT_USAGE
        )
    return store


@click.group()
@click.option(
    "--state-dir",
    "-s",
    default=lambda: os.environ.get(ENV_STATE_DIR, "state"),
    show_default="state (or $OPENTOOLS_STATE_DIR)",
    help="Root directory holding tools/, tests/, and state/.",
)
@click.option("--format", "output_format", type=click.Choice(["human", "json"]), default="human")
@click.pass_context
def cli(ctx: click.Context, state_dir: str, output_format: str):
    """Tool reliability evaluation and agent runs."""
    ctx.ensure_object(dict)
    ctx.obj["state_dir"] = state_dir
    ctx.obj["format"] = output_format


@cli.command()
@click.option("--empty", is_flag=True, help="Create the layout without the seed toolbox.")
@click.pass_context
def init(ctx: click.Context, empty: bool):
    """Create the state layout, seeded with the reference toolbox."""
    if empty:
        store = StateStore(ctx.obj["state_dir"]).init_layout()
    else:
        store = seed_state(ctx.obj["state_dir"])
    n_tools = len(store.load_descriptors())
    _emit(
        ctx,
        {"state_dir": str(store.root), "tools": n_tools},
        [f"initialized {store.root} with {n_tools} tools"],
    )


@cli.group()
def tools():
    """Inspect and validate tool manifests."""


@tools.command(name="list")
@click.pass_context
def tools_list(ctx: click.Context):
    store = _store(ctx)
    registry = store.build_registry()
    cards = [d.to_dict() for d in registry.descriptors()]
    lines = [f"{'NAME':24} {'CATEGORY':10} {'VERSION':9} ACCURACY"]
    for card in cards:
        summary = card.get("accuracy_summary")
        shown = f"{summary['accuracy']:.3f} (n={summary['suite_size']})" if summary else "unevaluated"
        lines.append(f"{card['name']:24} {card['category']:10} {card['version']:9} {shown}")
    _emit(ctx, cards, lines)


@tools.command(name="validate")
@click.argument("manifest_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def tools_validate(ctx: click.Context, manifest_file: str):
    raw = Path(manifest_file).read_text(encoding="utf-8")
    try:
        descriptor = validate_manifest(raw)
    except ManifestInvalid as exc:
        document = {"valid": False, "violations": [v.to_dict() for v in exc.violations]}
        if ctx.obj["format"] == "json":
            click.echo(json.dumps(document, indent=2, sort_keys=True))
        else:
            for violation in exc.violations:
                click.echo(f"{violation.field}: {violation.message}", err=True)
        sys.exit(EXIT_VALIDATION)
    _emit(ctx, {"valid": True, "name": descriptor.name}, [f"{descriptor.name}: valid manifest"])


@cli.group()
def tests():
    """Submit community test cases."""


@tests.command(name="submit")
@click.argument("case_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--submitter", default="cli")
@click.pass_context
def tests_submit(ctx: click.Context, case_file: str, submitter: str):
    store = _store(ctx)
    registry = store.build_registry()
    try:
        payload = json.loads(Path(case_file).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"{case_file}: invalid JSON: {exc}", EXIT_VALIDATION) from None
    try:
        submission = community.submit(store, registry, "test_case", payload, submitter)
    except community.SubmissionRejected as exc:
        document = {"accepted": False, "violations": exc.violations}
        if ctx.obj["format"] == "json":
            click.echo(json.dumps(document, indent=2, sort_keys=True))
        else:
            for violation in exc.violations:
                click.echo(f"{violation['field']}: {violation['message']}", err=True)
        sys.exit(EXIT_VALIDATION)
    _emit(
        ctx,
        {"submission_id": submission["id"], "status": submission["status"]},
        [f"submission {submission['id']} is pending review"],
    )


@cli.command()
@click.argument("submission_id")
@click.option("--accept", "decision", flag_value="accept")
@click.option("--reject", "decision", flag_value="reject")
@click.option("--reviewer", default="cli")
@click.option("--reason", default="")
@click.pass_context
def review(ctx: click.Context, submission_id: str, decision: str | None, reviewer: str, reason: str):
    """Decide a pending submission (exactly once)."""
    if decision is None:
        raise CliError("pass --accept or --reject", EXIT_USAGE)
    store = _store(ctx)
    registry = store.build_registry()
    try:
        submission = community.review(store, registry, submission_id, decision, reviewer, reason)
    except community.UnknownSubmission:
        raise CliError(f"no submission {submission_id!r}", EXIT_USAGE) from None
    except community.ReviewConflict as exc:
        raise CliError(str(exc), EXIT_RUNTIME) from None
    _emit(ctx, submission, [f"submission {submission_id}: {submission['status']}"])


@cli.group(name="eval")
def eval_group():
    """Evaluation rounds."""


@eval_group.command(name="run")
@click.option("--parallelism", default=4, show_default=True)
@click.pass_context
def eval_run(ctx: click.Context, parallelism: int):
    """Run every tool's accepted suite and persist one round."""
    if parallelism < 1:
        raise CliError("parallelism must be a positive integer", EXIT_USAGE)
    store = _store(ctx)
    registry = store.build_registry()
    backends = BackendRegistry.from_env()
    try:
        round_ = reliability.run_round(registry, store, parallelism, backends=backends)
    except reliability.RoundError as exc:
        raise CliError(str(exc), EXIT_RUNTIME) from None
    doc = round_.to_dict()
    lines = [f"round {round_.round_id} (suite {round_.suite_version[:12]})"]
    for tool_name in sorted(round_.per_tool):
        summary = round_.per_tool[tool_name]
        accuracy = "n/a" if summary.accuracy is None else f"{summary.accuracy:.3f}"
        lines.append(
            f"  {tool_name:24} pass={summary.n_pass} fail={summary.n_fail} "
            f"error={summary.n_error} accuracy={accuracy}"
        )
    _emit(ctx, doc, lines)


@cli.command()
@click.option("--tool", "tool_name", default=None, help="Limit the report to one tool.")
@click.pass_context
def report(ctx: click.Context, tool_name: str | None):
    """Emit the reliability report for the latest round."""
    store = _store(ctx)
    registry = store.build_registry()
    round_ = reliability.latest_round(store)
    profiles = reliability.load_profiles(store)
    document = reliability.generate_report(profiles, round_, registry)
    if tool_name is not None:
        entries = [t for t in document["tools"] if t["name"] == tool_name]
        if not entries:
            raise CliError(f"no tool named {tool_name!r}", EXIT_USAGE)
        document = {**document, "tools": entries}
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False))
        return
    lines = [f"round: {document['round_id']}  suite: {str(document['suite_version'])[:12]}"]
    for entry in document["tools"]:
        if entry["status"] == "unevaluated":
            lines.append(f"  {entry['name']:24} unevaluated")
        else:
            accuracy = entry.get("accuracy")
            shown = "n/a" if accuracy is None else f"{accuracy:.3f}"
            lines.append(
                f"  {entry['name']:24} accuracy={shown} availability={entry['availability']:.3f} "
                f"n={entry['n_cases']} regressions={len(entry['regressions'])}"
            )
    _emit(ctx, document, lines)


def _parse_select(value: str | None) -> tuple[int, str] | None:
    if value is None:
        return None
    parts = dict(part.split("=", 1) for part in value.split(",") if "=" in part)
    try:
        k = int(parts.get("k", "3"))
    except ValueError:
        raise CliError("--select k must be an integer", EXIT_USAGE) from None
    mode = parts.get("mode", "lexical")
    if mode not in ("lexical", "llm_ranked"):
        raise CliError(f"--select mode must be lexical or llm_ranked, not {mode!r}", EXIT_USAGE)
    return k, mode


@cli.group()
def agent():
    """Agent runs."""


@agent.command(name="run")
@click.option("--policy", "policy_kind", required=True)
@click.option("--query", required=True)
@click.option("--tools", "tool_csv", default=None, help="Comma-separated toolbox subset.")
@click.option("--select", "select_spec", default=None, help="k=K,mode=lexical|llm_ranked")
@click.option("--mock-script", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--backend", "backend_id", default=None)
@click.option("--max-steps", default=10, show_default=True)
@click.option("--routing/--no-routing", "reliability_routing", default=False)
@click.pass_context
def agent_run(
    ctx: click.Context,
    policy_kind: str,
    query: str,
    tool_csv: str | None,
    select_spec: str | None,
    mock_script: str | None,
    backend_id: str | None,
    max_steps: int,
    reliability_routing: bool,
):
    """Execute one agent run and print the answer."""
    store = _store(ctx)
    registry = store.build_registry()
    backends = BackendRegistry.from_env()
    if mock_script is not None:
        backends.register("mock", load_script(mock_script))
        if backend_id is None:
            backend_id = "mock"
    config = PolicyConfig(
        kind=policy_kind,
        max_steps=max_steps,
        backend_id=backend_id or "default",
        reliability_routing=reliability_routing,
    )

    toolbox = [name.strip() for name in tool_csv.split(",")] if tool_csv else None
    if toolbox:
        for name in toolbox:
            if name not in registry:
                raise CliError(f"--tools references unknown tool {name!r}", EXIT_USAGE)

    from .trace import ExecutionTrace
    from .agents import new_run_id

    run_id = new_run_id()
    trace = ExecutionTrace(run_id=run_id)
    selection = _parse_select(select_spec)
    if selection is not None and config.uses_toolbox:
        k, mode = selection
        if not 1 <= k <= len(registry):
            raise CliError(f"--select k must lie in [1, {len(registry)}]", EXIT_USAGE)
        toolbox = select_tools(
            registry, query, k, mode, reliability_routing,
            backends=backends, backend_id=config.backend_id, trace=trace,
        )
        trace.append("policy_step", {"phase": "tool_selection", "mode": mode, "k": k, "selected": toolbox})

    run, trace = run_agent(query, config, registry, backends, toolbox, run_id=run_id, trace=trace)
    store.save_trace(trace)
    store.save_run(run.to_dict())

    document = {
        "run_id": run.run_id,
        "answer": run.answer,
        "status": run.status,
        "trace_id": trace.trace_id,
    }
    _emit(ctx, document, [run.answer])
    if run.status == "failed":
        sys.exit(EXIT_RUNTIME)


@cli.command()
@click.option("--port", default=8800, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--auth-token", default=lambda: os.environ.get(ENV_AUTH_TOKEN) or None)
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def serve(ctx: click.Context, port: int, host: str, auth_token: str | None, ui_dir: str | None):
    """Serve the HTTP API (and the web UI when built)."""
    store = _store(ctx)
    if ui_dir is None:
        bundled = Path(__file__).resolve().parents[2].parent / "frontend" / "dist"
        ui_dir = str(bundled) if bundled.is_dir() else None
    config = ServiceConfig(state_dir=store.root, auth_token=auth_token, ui_dir=ui_dir)
    click.echo(f"serving {store.root} on http://{host}:{port}", err=True)
    serve_service(config, host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except CliError as exc:
        click.echo(f"error: {exc.message}", err=True)
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except SystemExit as exc:
        return int(exc.code or 0)
    except ManifestInvalid as exc:
        click.echo(f"validation error: {exc}", err=True)
        return EXIT_VALIDATION
    except community.SubmissionRejected as exc:
        click.echo(f"validation error: {exc}", err=True)
        return EXIT_VALIDATION
    except StateCorruption as exc:
        click.echo(f"state corruption: {exc}", err=True)
        return EXIT_STATE
    except (RegistrationError, BackendError, reliability.RoundError) as exc:
        click.echo(f"runtime error: {exc}", err=True)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
