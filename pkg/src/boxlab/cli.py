"""The boxlab command line: ingest, import-boxes, label, eval, export, cost, serve.

Every data command works against a project root directory (--project; the
directory layout is what save/load produce). `label` followed by `eval`
with a mock provider fixture is deterministic end to end, which is how the
recorded-fixture evaluations in the test suite run.

Provider credentials are read from the environment (BOXLAB_API_KEY, and
optionally BOXLAB_API_BASE); there is deliberately no flag for them.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .core import AnnotationStatus
from .errors import (
    BoxlabError,
    CorruptProjectError,
    EmptyEvaluationError,
    ProjectIOError,
)
from .evaluation import (
    CostParams,
    agreement_stats,
    cost_roi,
    evaluate_annotations,
    render_accuracy_text,
    render_cost_text,
)
from .jobs import select_annotations
from .pipeline import LiveProvider, MockProvider, label_batch
from .store import (
    Project,
    export_coco,
    import_boxes,
    load,
    read_truth_table,
    resolve_truth,
    save,
)
from .taxonomy import MatchPolicy

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".gif")

POLICY_BY_NAME = {
    "exact": MatchPolicy.EXACT,
    "base": MatchPolicy.BASE_CLASS,
    "hier": MatchPolicy.HIERARCHICAL,
}


def _open_project(root: str, create: bool = False) -> Project:
    path = Path(root)
    if (path / "project.manifest").is_file():
        return load(path)
    if create:
        return Project.new(path.name or "project")
    raise click.ClickException(f"no project at {root} (run ingest first)")


def _parse_filter(text: Optional[str]) -> dict:
    """Parse 'status=BoxDrawn' / 'ids=a,b' (comma lists, space-separated pairs)."""
    if not text:
        return {"status": AnnotationStatus.BOX_DRAWN.value}
    spec: dict = {}
    for pair in text.split():
        if "=" not in pair:
            raise click.ClickException(f"bad filter term {pair!r}; expected key=value")
        key, value = pair.split("=", 1)
        if key == "status":
            parts = value.split(",")
            spec["status"] = parts[0] if len(parts) == 1 else parts
        elif key == "ids":
            spec["ids"] = value.split(",")
        else:
            raise click.ClickException(f"unknown filter key {key!r}")
    return spec


def _make_provider(spec: str):
    if spec == "live":
        return LiveProvider()
    if spec.startswith("mock:"):
        fixture = spec[len("mock:") :]
        if not fixture:
            raise click.ClickException("mock provider needs a fixture path: mock:<file>")
        try:
            return MockProvider.from_file(fixture)
        except (OSError, ValueError) as exc:
            raise click.ClickException(f"cannot read mock fixture: {exc}")
    raise click.ClickException(f"unknown provider {spec!r}; use mock:<fixture> or live")


project_option = click.option(
    "--project",
    "-p",
    "project_root",
    default="project",
    show_default=True,
    help="Project root directory.",
)


@click.group()
def main():
    """Collaborative bounding-box labeling with an AI assistant."""


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@project_option
@click.option(
    "--whole-image",
    is_flag=True,
    help="Also create one whole-image annotation per ingested image.",
)
def ingest(directory, project_root, whole_image):
    """Ingest every image file in DIRECTORY into the project."""
    project = _open_project(project_root, create=True)
    ingested = 0
    annotated = 0
    for path in sorted(Path(directory).iterdir()):
        if path.suffix.lower() not in IMAGE_SUFFIXES or not path.is_file():
            continue
        record = project.add_image(path.read_bytes(), path.name)
        ingested += 1
        if whole_image and not project.annotations_for(record.id):
            project.create_box(record.id)
            annotated += 1
    save(project, project_root)
    click.echo(f"ingested {ingested} images ({len(project.images)} total)")
    if whole_image:
        click.echo(f"created {annotated} whole-image annotations")


@main.command("import-boxes")
@click.argument("document", type=click.Path(exists=True, dir_okay=False))
@project_option
def import_boxes_command(document, project_root):
    """Import bounding boxes from a COCO-style JSON DOCUMENT."""
    project = _open_project(project_root)
    try:
        data = json.loads(Path(document).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise click.ClickException(f"cannot parse {document}: {exc}")
    try:
        created = import_boxes(data, project)
    except BoxlabError as exc:
        raise click.ClickException(str(exc))
    save(project, project_root)
    click.echo(f"imported {len(created)} annotations")


@main.command()
@project_option
@click.option("--filter", "filter_text", default=None, help="Selection, e.g. 'status=BoxDrawn'.")
@click.option(
    "--provider",
    "provider_spec",
    default="live",
    show_default=True,
    help="mock:<fixture file> or live (credentials from the environment).",
)
def label(project_root, filter_text, provider_spec):
    """Request AI labels for the selected annotations."""
    project = _open_project(project_root)
    provider = _make_provider(provider_spec)
    try:
        selection = select_annotations(project.annotations, _parse_filter(filter_text))
    except BoxlabError as exc:
        raise click.ClickException(str(exc))
    if not selection:
        click.echo("nothing to label")
        return
    outcomes = label_batch(project.config, selection, project.images, provider)
    applied = project.commit_outcomes(outcomes)
    save(project, project_root)
    failed = [o for o in outcomes if not o.ok]
    click.echo(f"labeled {applied} of {len(selection)} annotations")
    for outcome in failed:
        click.echo(f"  failed {outcome.annotation_id}: {outcome.error}", err=True)
    if failed:
        sys.exit(1)


@main.command("eval")
@project_option
@click.option("--truth", "truth_path", default=None, help="Ground-truth TSV (key<TAB>label).")
@click.option(
    "--policy",
    default="base",
    show_default=True,
    type=click.Choice(sorted(POLICY_BY_NAME)),
    help="Match policy for scoring.",
)
def eval_command(project_root, truth_path, policy):
    """Score AI labels against ground truth and print the report.

    Exit status: 0 on success, 1 when there is nothing to evaluate,
    2 on missing or corrupt inputs.
    """
    try:
        project = _open_project(project_root)
    except (CorruptProjectError, ProjectIOError, click.ClickException) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if truth_path is not None:
        try:
            table = read_truth_table(truth_path)
        except (OSError, CorruptProjectError) as exc:
            click.echo(f"error: cannot read truth table: {exc}", err=True)
            sys.exit(2)
        truth = resolve_truth(project, table)
    else:
        truth = dict(project.truth)
    try:
        report, matrix = evaluate_annotations(
            list(project.annotations.values()),
            truth,
            POLICY_BY_NAME[policy],
            project.taxonomy,
        )
    except EmptyEvaluationError as exc:
        click.echo(f"nothing to evaluate: {exc}", err=True)
        sys.exit(1)
    click.echo(render_accuracy_text(report, matrix), nl=False)


@main.command()
@project_option
@click.option(
    "--level",
    default="fine",
    show_default=True,
    type=click.Choice(["base", "fine"]),
    help="Category granularity for export.",
)
@click.option("--out", "out_path", default=None, help="Write JSON here instead of stdout.")
def export(project_root, level, out_path):
    """Export confirmed annotations as a COCO-style JSON document."""
    project = _open_project(project_root)
    try:
        document = export_coco(project, category_level=level)
    except BoxlabError as exc:
        raise click.ClickException(str(exc))
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--n", "n_items", type=int, required=True, help="Number of items to annotate.")
@click.option("--full-sec", type=float, required=True, help="Seconds per item, human labels alone.")
@click.option("--box-sec", type=float, required=True, help="Seconds per item, human draws box only.")
@click.option("--wage", type=float, required=True, help="Hourly wage in dollars.")
@click.option("--api-cost", type=float, required=True, help="Provider cost per item in dollars.")
def cost(n_items, full_sec, box_sec, wage, api_cost):
    """Compare human-only annotation cost against the AI-assisted split."""
    params = CostParams(
        n_items=n_items,
        human_full_seconds=full_sec,
        human_box_seconds=box_sec,
        wage_per_hour=wage,
        api_cost_per_item=api_cost,
    )
    try:
        report = cost_roi(params)
    except BoxlabError as exc:
        raise click.ClickException(str(exc))
    click.echo(render_cost_text(params, report), nl=False)


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--root",
    "service_root",
    default="projects",
    show_default=True,
    help="Directory holding one subdirectory per project.",
)
@click.option(
    "--provider",
    "provider_spec",
    default="live",
    show_default=True,
    help="mock:<fixture file> or live (credentials from the environment).",
)
@click.option("--static", "static_dir", default=None, help="Static UI bundle to serve at /.")
def serve(port, host, service_root, provider_spec, static_dir):
    """Run the annotation service (and UI, when --static is given)."""
    import uvicorn

    from .service import ServiceState, create_app

    state = ServiceState(service_root, provider=_make_provider(provider_spec))
    loaded = state.load_existing()
    click.echo(f"serving {loaded} projects from {service_root} on {host}:{port}")
    uvicorn.run(create_app(state, static_dir=static_dir), host=host, port=port)


if __name__ == "__main__":
    main()
