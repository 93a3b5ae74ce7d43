"""Command-line interface.

Conventions: stdout carries only the delimited payload of each command
(JSONL, CSV, or exact prompt bytes) so output can be piped; summaries and
figure paths go to stderr. Figures are optional and land next to whatever
delimited output the command produced.
"""

from __future__ import annotations

import dataclasses
import functools
import json

import click

from .backends import BackendDescriptor, BackendError
from .config import ConfigError, backend_descriptor, decoding_params, evaluation_thresholds, load_config
from .corpus import (
    CorpusFormatError,
    DelimiterConfig,
    corpus_stats,
    load_corpus,
    read_training_blocks,
    serialize_corpus,
    write_training_text,
)
from .decoder import DecodingParams
from .evaluator import ConceptCandidate, evaluate_candidate, rank_and_filter
from .prompting import (
    DEFAULT_ANALOGY_STOP,
    AnalogyPrompt,
    ProblemPrompt,
    build_analogy_prompt,
    build_problem_prompt,
    bundled_bank_path,
    load_example_bank,
)
from .reference_lm import ModelFormatError, load as load_model, perplexity, prepare_sequences, save as save_model, train
from .session import IdeationService, SessionStore, candidate_to_dict
from .textkit import BOS_ID, EOS_ID, encode, tokenize


def _friendly(fn):
    """Turn domain errors into clean CLI errors instead of tracebacks."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (CorpusFormatError, ModelFormatError, ConfigError, BackendError, ValueError, OSError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="TOML-style config file with default settings.")
@click.pass_context
def main(ctx, config_path):
    """Verbal design-concept generation toolkit."""
    try:
        ctx.obj = load_config(config_path) if config_path else {}
    except ConfigError as exc:
        raise click.ClickException(f"{config_path}: {exc}")


# ---------------------------------------------------------------------------
# corpus

@main.group()
def corpus():
    """Inspect and prepare design corpora."""


@corpus.command("ingest")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write canonical JSONL here instead of stdout.")
@_friendly
def corpus_ingest(file, out):
    """Validate FILE and emit it in canonical JSONL form."""
    records = load_corpus(file)
    text = serialize_corpus(records)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(f"ingested {len(records)} records -> {out}", err=True)
    else:
        click.echo(text, nl=False)


@corpus.command("stats")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--plot", type=click.Path(dir_okay=False), default=None,
              help="Also render a composition figure to this PNG.")
@_friendly
def corpus_stats_cmd(file, plot):
    """Print corpus composition as CSV."""
    stats = corpus_stats(load_corpus(file))
    lines = [
        f"total,{stats.total}",
        f"token_count,{stats.token_count}",
        f"mean_description_tokens,{stats.mean_description_tokens:.4f}",
    ]
    lines += [f"kind,{k},{stats.by_kind[k]}" for k in sorted(stats.by_kind)]
    lines += [f"year,{y},{stats.by_year[y]}" for y in sorted(stats.by_year)]
    lines += [f"category,{c},{stats.by_category[c]}" for c in sorted(stats.by_category)]
    click.echo("\n".join(lines))
    if plot:
        from .report import save_corpus_stats

        save_corpus_stats(stats, plot)
        click.echo(f"figure -> {plot}", err=True)


@corpus.command("format")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--no-delims", is_flag=True, help="Omit the start/end markers.")
@_friendly
def corpus_format(file, out, no_delims):
    """Render FILE as delimited training text blocks."""
    records = load_corpus(file)
    delims = DelimiterConfig.none() if no_delims else DelimiterConfig()
    write_training_text(records, out, delims)
    click.echo(f"formatted {len(records)} records -> {out}", err=True)


# ---------------------------------------------------------------------------
# lm

@main.group()
def lm():
    """Train and evaluate the local reference language model."""


@lm.command("train")
@click.argument("training_text", type=click.Path(exists=True, dir_okay=False))
@click.option("--order", type=int, default=3, show_default=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--lambda", "lam", type=float, default=0.7, show_default=True)
@click.option("--passes", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--trace-csv", type=click.Path(dir_okay=False), default=None,
              help="Also write the loss trace CSV to this file.")
@click.option("--plot", type=click.Path(dir_okay=False), default=None,
              help="Also render the loss curve to this PNG.")
@_friendly
def lm_train(training_text, order, alpha, lam, passes, out, trace_csv, plot):
    """Train on TRAINING_TEXT (delimited blocks) and save the model."""
    blocks = read_training_blocks(training_text)
    if not blocks:
        raise click.ClickException(f"{training_text} contains no training blocks")
    sequences, vocab = prepare_sequences(blocks)
    model, trace = train(sequences, vocab, order=order, alpha=alpha, lam=lam, passes=passes)
    save_model(model, out)
    click.echo(trace.to_csv(), nl=False)
    click.echo(
        f"trained order-{order} model on {len(sequences)} blocks "
        f"({len(vocab)} vocab) -> {out}",
        err=True,
    )
    if trace_csv:
        with open(trace_csv, "w", encoding="utf-8") as fh:
            fh.write(trace.to_csv())
        click.echo(f"trace -> {trace_csv}", err=True)
    if plot:
        from .report import save_loss_curve

        save_loss_curve(trace, plot)
        click.echo(f"figure -> {plot}", err=True)


@lm.command("eval")
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("heldout", type=click.Path(exists=True, dir_okay=False))
@click.option("--plot", type=click.Path(dir_okay=False), default=None,
              help="Render the stored training loss curve to this PNG.")
@_friendly
def lm_eval(model_path, heldout, plot):
    """Print perplexity on HELDOUT plus the stored training trace."""
    model = load_model(model_path)
    blocks = read_training_blocks(heldout)
    if not blocks:
        raise click.ClickException(f"{heldout} contains no text blocks")
    sequences = [[BOS_ID] + encode(model.vocab, tokenize(b)) + [EOS_ID] for b in blocks]
    click.echo(f"perplexity,{perplexity(model, sequences):.6f}")
    if model.trace is not None:
        click.echo(model.trace.to_csv(), nl=False)
    if plot:
        if model.trace is None:
            raise click.ClickException("model file carries no training trace to plot")
        from .report import save_loss_curve

        save_loss_curve(model.trace, plot)
        click.echo(f"figure -> {plot}", err=True)


# ---------------------------------------------------------------------------
# prompt

@main.group()
def prompt():
    """Build prompts exactly as they are sent to a backend."""


@prompt.command("problem")
@click.option("--category", required=True)
@click.option("--problem", "problem_statement", required=True)
@click.option("--no-delims", is_flag=True, help="Omit the start marker.")
@_friendly
def prompt_problem(category, problem_statement, no_delims):
    """Print the problem-driven prompt bytes."""
    delims = DelimiterConfig.none() if no_delims else DelimiterConfig()
    text = build_problem_prompt(ProblemPrompt(category, problem_statement), delims)
    click.echo(text, nl=False)


@prompt.command("analogy")
@click.option("--bank", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Example bank JSONL; omit for the bundled bank.")
@click.option("--source", required=True)
@click.option("--target", required=True)
@_friendly
def prompt_analogy(bank, source, target):
    """Print the few-shot analogy prompt bytes."""
    examples = load_example_bank(bank or bundled_bank_path())
    text = build_analogy_prompt(AnalogyPrompt(tuple(examples), source, target))
    click.echo(text, nl=False)


# ---------------------------------------------------------------------------
# evaluate

@main.command("evaluate")
@click.option("--pool", type=click.Path(exists=True, dir_okay=False), required=True,
              help="JSONL of candidates: {id, text[, mode]} per line.")
@click.option("--bank", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Example bank whose descriptions act as novelty references.")
@click.option("--anchor", required=True, help="Relevance anchor text.")
@click.option("--novelty-threshold", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--plot", type=click.Path(dir_okay=False), default=None,
              help="Also render the score scatter to this PNG.")
@click.pass_context
@_friendly
def evaluate_cmd(ctx, pool, bank, anchor, novelty_threshold, out, plot):
    """Score and rank a candidate pool; emit ranked JSONL."""
    thresholds = evaluation_thresholds(ctx.obj, novelty_threshold=novelty_threshold)
    references = []
    if bank:
        references = [ex.description for ex in load_example_bank(bank)]
    candidates = []
    with open(pool, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            cand = ConceptCandidate(
                id=str(obj["id"]),
                text=obj["text"],
                mode=obj.get("mode", "problem_driven"),
                inputs=tuple(obj.get("inputs", {}).items()),
            )
            candidates.append(evaluate_candidate(cand, references, anchor, thresholds))
    ranked = rank_and_filter(candidates, thresholds)
    payload = "".join(
        json.dumps(candidate_to_dict(c), ensure_ascii=False) + "\n" for c in ranked
    )
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        click.echo(f"ranked {len(ranked)}/{len(candidates)} candidates -> {out}", err=True)
    else:
        click.echo(payload, nl=False)
    if plot:
        from .report import save_score_scatter

        save_score_scatter(candidates, plot)
        click.echo(f"figure -> {plot}", err=True)


# ---------------------------------------------------------------------------
# generate / serve

def _decoding_options(fn):
    options = [
        click.option("--max-tokens", type=int, default=None),
        click.option("--temperature", type=float, default=None),
        click.option("--top-k", type=int, default=None),
        click.option("--top-p", type=float, default=None),
        click.option("--presence-penalty", type=float, default=None),
        click.option("--frequency-penalty", type=float, default=None),
        click.option("--stop", multiple=True, help="Stop string (repeatable)."),
        click.option("--seed", type=int, default=None),
        click.option("--n", type=int, default=None, help="Candidates per batch."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _backend_options(fn):
    options = [
        click.option("--model", "model_path", type=click.Path(dir_okay=False),
                     default=None, help="Local reference model file."),
        click.option("--remote-base", default=None, help="Remote completion API base URL."),
        click.option("--remote-model", default=None, help="Remote model name."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _resolve_backend(config, model_path, remote_base, remote_model) -> BackendDescriptor:
    if remote_base or remote_model:
        if not (remote_base and remote_model):
            raise click.ClickException("--remote-base and --remote-model go together")
        return BackendDescriptor(kind="remote", base_url=remote_base, model=remote_model)
    if model_path:
        return BackendDescriptor(kind="local", model_path=model_path)
    configured = backend_descriptor(config)
    if configured is not None:
        return configured
    raise click.ClickException("no backend: pass --model or --remote-base/--remote-model")


def _build_params(config, max_tokens, temperature, top_k, top_p,
                  presence_penalty, frequency_penalty, stop, seed, n) -> DecodingParams:
    return decoding_params(
        config,
        max_tokens=max_tokens,
        temperature=temperature,
        top_k=top_k,
        top_p=top_p,
        presence_penalty=presence_penalty,
        frequency_penalty=frequency_penalty,
        stop=tuple(stop) if stop else None,
        seed=seed,
        n_candidates=n,
    )


def _run_one_shot(config, mode, inputs, params, backend, data_dir, session_id):
    service = IdeationService(
        SessionStore(data_dir), thresholds=evaluation_thresholds(config)
    )
    session = service.create_session(mode, inputs, params, backend, session_id=session_id)
    candidates = service.generate_batch(session.id, params.n_candidates)
    click.echo(f"session {session.id}: {len(candidates)} candidates", err=True)
    for cand in candidates:
        click.echo(json.dumps(candidate_to_dict(cand), ensure_ascii=False))


@main.group()
def generate():
    """One-shot generation: create a session and run one batch."""


@generate.command("problem")
@click.option("--category", required=True)
@click.option("--problem", "problem_statement", required=True)
@_decoding_options
@_backend_options
@click.option("--data-dir", type=click.Path(file_okay=False), default="./data", show_default=True)
@click.option("--session-id", default=None)
@click.pass_context
@_friendly
def generate_problem(ctx, category, problem_statement, model_path, remote_base,
                     remote_model, data_dir, session_id, **flags):
    """Generate concepts for a problem statement."""
    params = _build_params(ctx.obj, **flags)
    backend = _resolve_backend(ctx.obj, model_path, remote_base, remote_model)
    inputs = ProblemPrompt(category, problem_statement)
    _run_one_shot(ctx.obj, "problem_driven", inputs, params, backend, data_dir, session_id)


@generate.command("analogy")
@click.option("--bank", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Example bank JSONL; omit for the bundled bank.")
@click.option("--source", required=True)
@click.option("--target", required=True)
@_decoding_options
@_backend_options
@click.option("--data-dir", type=click.Path(file_okay=False), default="./data", show_default=True)
@click.option("--session-id", default=None)
@click.pass_context
@_friendly
def generate_analogy(ctx, bank, source, target, model_path, remote_base,
                     remote_model, data_dir, session_id, **flags):
    """Generate concepts by projecting a source domain onto a target."""
    params = _build_params(ctx.obj, **flags)
    if not params.stop:
        # few-shot continuations run into the next scaffold unless stopped
        params = dataclasses.replace(params, stop=(DEFAULT_ANALOGY_STOP,))
    backend = _resolve_backend(ctx.obj, model_path, remote_base, remote_model)
    examples = load_example_bank(bank or bundled_bank_path())
    inputs = AnalogyPrompt(tuple(examples), source, target)
    _run_one_shot(ctx.obj, "analogy", inputs, params, backend, data_dir, session_id)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None, help="Defaults to 8080 or [server] port.")
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="Defaults to ./data or [server] data_dir.")
@_backend_options
@click.pass_context
@_friendly
def serve(ctx, host, port, data_dir, model_path, remote_base, remote_model):
    """Run the HTTP ideation service."""
    import uvicorn

    from .server import create_app

    server_cfg = ctx.obj.get("server", {})
    port = port if port is not None else int(server_cfg.get("port", 8080))
    data_dir = data_dir or server_cfg.get("data_dir", "./data")
    try:
        default_backend = _resolve_backend(ctx.obj, model_path, remote_base, remote_model)
    except click.ClickException:
        default_backend = None  # clients must then name a backend per session
    service = IdeationService(
        SessionStore(data_dir), thresholds=evaluation_thresholds(ctx.obj)
    )
    app = create_app(service, default_backend=default_backend)
    click.echo(f"serving on http://{host}:{port} (data in {data_dir})", err=True)
    uvicorn.run(app, host=host, port=port, log_level="warning")
