"""Command-line interface for gazemodal."""

import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from gazemodal import __version__
from gazemodal.config import RunConfig, build_run_config, write_config_echo
from gazemodal.core.models import ArchitectureId, Label, StudyRecord, TextSource
from gazemodal.data.loader import load_dataset
from gazemodal.data.synthetic import CORPUS_PATH, GenerationConfig, generate_synthetic_dataset
from gazemodal.errors import ArgumentError, ConfigError, DataError
from gazemodal.evaluation.experiments import (
    ExperimentDataset,
    ExperimentResult,
    ExperimentSpec,
    experiment_matrix,
    find_experiment,
    run_cv_experiment,
)
from gazemodal.evaluation.reports import (
    auc_table,
    emit_overlap_summaries,
    emit_reports,
    overlap_table,
    score_attention_dir,
    summarize_reports,
    write_summary,
)
from gazemodal.text import (
    EmbeddingModel,
    build_vocabulary,
    load_embeddings,
    pca_project,
    plot_projection,
    save_embeddings,
    sentence_embedding,
    tokenize,
    train_skipgram,
)
from gazemodal.utils.logger import get_logger

logger = get_logger(__name__)
console = Console()

app = typer.Typer(
    name="gazemodal",
    help="Multi-modal chest X-ray, eye-gaze and report classification experiments",
    add_completion=False,
    no_args_is_help=True,
)

EMBEDDINGS_FILE = "embeddings.txt"

# typer may vendor its own click; usage errors are the base of typer.BadParameter.
_USAGE_ERROR = next(cls for cls in typer.BadParameter.__mro__ if cls.__name__ == "UsageError")

ConfigOption = typer.Option(None, "--config", help="Flat key = value configuration file")
OutOption = typer.Option(None, "--out", help="Output directory (default: $GAZEMODAL_OUT)")
SeedOption = typer.Option(None, "--seed", help="Global seed")
DataOption = typer.Option(None, "--data", help="Dataset directory or manifest.csv")
EmbeddingsOption = typer.Option(None, "--embeddings", help="Saved embedding table")


@contextmanager
def _exit_on_error() -> Iterator[None]:
    """Map configuration problems to exit 1 and data or I/O problems to exit 2."""
    try:
        yield
    except ConfigError as exc:
        console.print(f"[red]Configuration error: {exc}[/red]")
        raise typer.Exit(1) from exc
    except (DataError, OSError) as exc:
        console.print(f"[red]Data error: {exc}[/red]")
        raise typer.Exit(2) from exc


def _load_records(cfg: RunConfig) -> List[StudyRecord]:
    return load_dataset(cfg.manifest, strict=cfg.strict)


def _train_embedding(corpus_path: Path, cfg: RunConfig) -> EmbeddingModel:
    try:
        lines = corpus_path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise DataError(f"embedding corpus not found: {corpus_path}") from None
    corpus = [tokenize(line) for line in lines]
    vocab = build_vocabulary(corpus, cfg.min_count)
    return train_skipgram(
        corpus,
        vocab,
        dim=cfg.embedding_dim,
        window=cfg.window,
        negatives=cfg.negatives,
        epochs=cfg.embedding_epochs,
        seed=cfg.seed,
    )


def _resolve_embedding(cfg: RunConfig, specs: Sequence[ExperimentSpec]) -> Optional[EmbeddingModel]:
    """Saved table if given, otherwise trained from the dataset corpus when any run needs text."""
    if not any(spec.text_source is not None for spec in specs):
        return None
    if cfg.embeddings is not None:
        return load_embeddings(cfg.embeddings)
    return _train_embedding(cfg.data_root / CORPUS_PATH, cfg)


def _single_spec(cfg: RunConfig) -> ExperimentSpec:
    if cfg.experiment:
        try:
            return find_experiment(cfg.experiment)
        except KeyError:
            known = ", ".join(spec.experiment_id for spec in experiment_matrix())
            raise ConfigError(f"unknown experiment {cfg.experiment!r}; known: {known}") from None
    if not cfg.arch:
        raise ConfigError("run-exp needs --arch or --experiment")
    try:
        arch = ArchitectureId(cfg.arch.upper())
        source = TextSource(cfg.text_source) if cfg.text_source else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    key = (arch, source, cfg.heatmap_loss)
    for spec in experiment_matrix():
        if spec.key == key:
            return spec
    try:
        return ExperimentSpec(
            experiment_id="_".join(p for p in (arch.value.lower(), source and source.value) if p),
            title=arch.value,
            architecture=arch,
            text_source=source,
            heatmap_loss=cfg.heatmap_loss,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _run_one(
    spec: ExperimentSpec, dataset: ExperimentDataset, cfg: RunConfig
) -> ExperimentResult:
    try:
        result = run_cv_experiment(spec, dataset, k=cfg.folds, seed=cfg.seed, overrides=cfg.model_overrides())
    except (ArgumentError, ValidationError) as exc:
        raise ConfigError(f"{spec.experiment_id}: {exc}") from exc
    emit_reports(result, cfg.out, records=dataset.records, composites=cfg.composites)
    return result


def _rich_table(title: str, rows: Dict[str, List[float]], columns: Sequence[str]) -> Table:
    table = Table(title=title)
    table.add_column("", style="cyan")
    for column in columns:
        table.add_column(column, justify="right")
    for name, values in rows.items():
        table.add_row(name, *(f"{v:.3f}" for v in values))
    return table


@app.command()
def version():
    """Show version information."""
    console.print("[bold blue]gazemodal[/bold blue]")
    console.print(f"Version: {__version__}")


@app.command("gen-data")
def gen_data(
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    n_studies: Optional[int] = typer.Option(None, "--n-studies", help="Number of studies"),
    image_size: Optional[int] = typer.Option(None, "--image-size", help="Image side in pixels"),
    temporal_frames: Optional[int] = typer.Option(None, "--frames", help="Temporal heatmap frames"),
    annotation_fraction: Optional[float] = typer.Option(None, help="Share of Pneumonia studies with boxes"),
    missing_gaze_fraction: Optional[float] = typer.Option(None, help="Share of studies without gaze files"),
    corpus_size: Optional[int] = typer.Option(None, help="Reports in the embedding corpus"),
    config: Optional[Path] = ConfigOption,
):
    """Generate a seeded synthetic dataset with its embedding corpus and annotations."""
    with _exit_on_error():
        cfg = build_run_config(
            config,
            out=out,
            seed=seed,
            n_studies=n_studies,
            image_size=image_size,
            temporal_frames=temporal_frames,
            annotation_fraction=annotation_fraction,
            missing_gaze_fraction=missing_gaze_fraction,
            corpus_size=corpus_size,
        )
        generation = GenerationConfig(
            n_studies=cfg.n_studies,
            image_size=cfg.image_size,
            temporal_frames=cfg.temporal_frames,
            annotation_fraction=cfg.annotation_fraction,
            missing_gaze_fraction=cfg.missing_gaze_fraction,
            corpus_size=cfg.corpus_size,
        )
        manifest = generate_synthetic_dataset(generation, cfg.seed, cfg.out)
        write_config_echo(cfg, cfg.out)
    console.print(f"[green]Wrote {manifest.n_studies} studies to {manifest.root}[/green]")


@app.command("train-embed")
def train_embed(
    data: Optional[Path] = DataOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    dim: Optional[int] = typer.Option(None, "--dim", help="Embedding size"),
    window: Optional[int] = typer.Option(None, help="Context window"),
    negatives: Optional[int] = typer.Option(None, help="Negative samples per pair"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="Training epochs"),
    min_count: Optional[int] = typer.Option(None, help="Minimum token count"),
    config: Optional[Path] = ConfigOption,
):
    """Train skip-gram embeddings on the report corpus and plot study embeddings."""
    with _exit_on_error():
        cfg = build_run_config(
            config,
            data=data,
            out=out,
            seed=seed,
            embedding_dim=dim,
            window=window,
            negatives=negatives,
            embedding_epochs=epochs,
            min_count=min_count,
        )
        model = _train_embedding(cfg.data_root / CORPUS_PATH, cfg)
        path = save_embeddings(model, cfg.out / EMBEDDINGS_FILE)
        (cfg.out / "embedding_loss.csv").write_text(
            "epoch,loss\n" + "".join(f"{i + 1},{loss!r}\n" for i, loss in enumerate(model.loss_trace)),
            encoding="utf-8",
        )
        if cfg.manifest.is_file():
            records = _load_records(cfg)
            labels: List[Label] = [r.label for r in records]
            for source in TextSource:
                vectors = [sentence_embedding(r.text(source), model).vector for r in records]
                if len(vectors) >= 2:
                    plot_projection(
                        pca_project(vectors, k=2),
                        labels,
                        cfg.out / f"pca_{source.value}.svg",
                        title=f"{source.value} embeddings",
                    )
        write_config_echo(cfg, cfg.out)
    console.print(f"[green]Embeddings for {len(model.vocabulary)} words written to {path}[/green]")


@app.command("run-exp")
def run_exp(
    arch: Optional[str] = typer.Option(None, "--arch", help="Architecture id, e.g. IMG"),
    experiment: Optional[str] = typer.Option(None, "--experiment", help="Named experiment from the matrix"),
    text_source: Optional[str] = typer.Option(None, "--text-source", help="indication or full"),
    heatmap_loss: Optional[bool] = typer.Option(None, "--heatmap-loss/--no-heatmap-loss", help="Supervise attention"),
    data: Optional[Path] = DataOption,
    embeddings: Optional[Path] = EmbeddingsOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    folds: Optional[int] = typer.Option(None, "--folds", help="Cross-validation folds"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="Training epochs"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size", help="Mini-batch size"),
    lr: Optional[float] = typer.Option(None, "--lr", help="Adam learning rate"),
    image_size: Optional[int] = typer.Option(None, "--image-size", help="Model input size"),
    composites: Optional[int] = typer.Option(None, "--composites", help="SVG overlays to draw"),
    config: Optional[Path] = ConfigOption,
):
    """Run one patient-grouped cross-validation experiment."""
    with _exit_on_error():
        cfg = build_run_config(
            config,
            arch=arch,
            experiment=experiment,
            text_source=text_source,
            heatmap_loss=heatmap_loss,
            data=data,
            embeddings=embeddings,
            out=out,
            seed=seed,
            folds=folds,
            epochs=epochs,
            batch_size=batch_size,
            lr=lr,
            image_size=image_size,
            composites=composites,
        )
        spec = _single_spec(cfg)
        records = _load_records(cfg)
        dataset = ExperimentDataset(records=records, embedding=_resolve_embedding(cfg, [spec]))
        result = _run_one(spec, dataset, cfg)
        write_config_echo(cfg, cfg.out)

    table = auc_table(result.auc)
    console.print(_rich_table(spec.title, {name: list(row) for name, row in table.iterrows()}, table.columns))
    if result.overlap is not None:
        console.print(f"Attention overlap: mean {result.overlap.mean:.4f}, median {result.overlap.median:.4f}")


@app.command("eval-attn")
def eval_attn(
    attention: Path = typer.Option(..., "--attention", help="Directory of <study_id>.pgm attention maps"),
    data: Optional[Path] = DataOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
):
    """Score saved attention maps against the annotated bounding boxes."""
    with _exit_on_error():
        cfg = build_run_config(config, data=data, out=out)
        records = _load_records(cfg)
        report = score_attention_dir(attention, records, experiment_id=attention.name)
        cfg.out.mkdir(parents=True, exist_ok=True)
        overlap_table(report).to_csv(
            cfg.out / "attention_scores.csv", index=False, float_format="%.6f", lineterminator="\n"
        )
        write_config_echo(cfg, cfg.out)
    console.print(
        f"Scored {len(report.per_study)} studies: mean {report.mean:.4f}, median {report.median:.4f}"
    )


@app.command("run-matrix")
def run_matrix(
    data: Optional[Path] = DataOption,
    embeddings: Optional[Path] = EmbeddingsOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    folds: Optional[int] = typer.Option(None, "--folds", help="Cross-validation folds"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="Training epochs"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size", help="Mini-batch size"),
    image_size: Optional[int] = typer.Option(None, "--image-size", help="Model input size"),
    composites: Optional[int] = typer.Option(None, "--composites", help="SVG overlays per experiment"),
    jobs: int = typer.Option(1, "--jobs", min=1, help="Experiments run concurrently"),
    config: Optional[Path] = ConfigOption,
):
    """Run every classification and explainability experiment."""
    with _exit_on_error():
        cfg = build_run_config(
            config,
            data=data,
            embeddings=embeddings,
            out=out,
            seed=seed,
            folds=folds,
            epochs=epochs,
            batch_size=batch_size,
            image_size=image_size,
            composites=composites,
        )
        specs = experiment_matrix()
        records = _load_records(cfg)
        dataset = ExperimentDataset(records=records, embedding=_resolve_embedding(cfg, specs))

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, spec, dataset, cfg) for spec in specs]
            results = {spec.experiment_id: future.result() for spec, future in zip(specs, futures)}

        emit_overlap_summaries(results, cfg.out)
        write_summary(summarize_reports(cfg.out), cfg.out)
        write_config_echo(cfg, cfg.out)
    console.print(f"[green]Ran {len(results)} experiments into {cfg.out}[/green]")


@app.command()
def report(
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
):
    """Aggregate experiment AUC tables into summary.csv."""
    with _exit_on_error():
        cfg = build_run_config(config, out=out)
        summary = summarize_reports(cfg.out)
        path = write_summary(summary, cfg.out)

    table = _rich_table("Average AUC per experiment", {k: list(v) for k, v in summary.iterrows()}, summary.columns)
    console.print(table)
    console.print(f"Summary written to {path}")


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line and return its exit code: 0 ok, 1 usage, 2 data."""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = app(args=args, prog_name="gazemodal", standalone_mode=False)
    except _USAGE_ERROR as exc:
        console.print(f"[red]{exc.format_message()}[/red]")
        if exc.ctx is not None:
            console.print(exc.ctx.get_help())
        return 1
    except typer.Abort:
        return 1
    return result if isinstance(result, int) else 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":  # pragma: no cover
    main()
