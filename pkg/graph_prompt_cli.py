#!/usr/bin/env python3
"""
Command-line interface for heterogeneous graph prompt pruning.

Per-phase subcommands (synth, pretrain, tasks, tune, prune, retune, eval)
exchange JSON files; `run` and `sweep` drive whole experiments from a config.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from prompt_pruning import (PromptPipelineError, PretrainConfig, RunConfig, SynthSpec, TuningConfig,
                            build_context, compute_metrics, create_config_file, emit_report, encode,
                            evaluate_and_prune, load_checkpoint, load_graph, load_prompts, load_run_config,
                            load_synth_spec, load_tasks, predict_nodes, retune, run_pipeline, run_pretrain,
                            run_block_sweep, run_shot_sweep, sample_tasks, save_checkpoint, save_graph,
                            save_prompts, save_tasks, synth_graph, tune_prompts)
from prompt_pruning.errors import ContractError, PipelineIOError
from prompt_pruning.pipeline import resolve_graph
from prompt_pruning.pruning import save_importance_report


def _write_json(path: str, document) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2)
    except OSError as exc:
        raise PipelineIOError(f"cannot write {path}: {exc}") from exc


def _context(args):
    graph = load_graph(args.graph)
    embeddings = encode(graph, load_checkpoint(args.ckpt))
    return build_context(graph, embeddings, args.hops)


def _task(args):
    tasks = load_tasks(args.task)
    if not 0 <= args.task_index < len(tasks):
        raise ContractError(f"task index {args.task_index} outside 0..{len(tasks) - 1}")
    return tasks[args.task_index]


def cmd_synth(args) -> int:
    spec = load_synth_spec(args.spec) if args.spec else SynthSpec()
    graph = synth_graph(spec, seed=args.seed)
    save_graph(graph, args.out)
    print(f"✅ Generated graph: {graph.node_count} nodes, {graph.edge_count} edges, "
          f"{graph.type_count} node types -> {args.out}")
    return 0


def cmd_pretrain(args) -> int:
    graph = load_graph(args.graph)
    config = PretrainConfig(tau=args.tau, epochs=args.epochs, learning_rate=args.lr, seed=args.seed,
                            hops=args.hops, triplet_count=args.triplets, hidden_dim=args.hidden_dim,
                            init=args.init)
    result = run_pretrain(graph, config)
    save_checkpoint(result.params, args.out, metadata={"seed": args.seed, "best_epoch": result.best_epoch,
                                                       "tau": args.tau, "hops": args.hops})
    log_path = args.log or f"{os.path.splitext(args.out)[0]}.log.json"
    _write_json(log_path, result.history)
    print(f"✅ Checkpoint from epoch {result.best_epoch} saved to {args.out}")
    print(f"📊 Training log: {log_path}")
    return 0


def cmd_tasks(args) -> int:
    graph = load_graph(args.graph)
    tasks = sample_tasks(graph, args.k, args.n_tasks, args.seed)
    save_tasks(tasks, args.out)
    print(f"✅ Sampled {len(tasks)} {args.k}-shot tasks -> {args.out}")
    return 0


def cmd_tune(args) -> int:
    ctx = _context(args)
    task = _task(args)
    config = TuningConfig(tau=args.tau, epochs=args.epochs, learning_rate=args.lr, seed=args.seed)
    result = tune_prompts(ctx, task.support, config, validation=task.validation)
    save_prompts(result.prompts, args.out)
    print(f"✅ Tuned {result.prompts.parameter_count} prompt parameters "
          f"(best epoch {result.best_epoch}) -> {args.out}")
    return 0


def cmd_prune(args) -> int:
    ctx = _context(args)
    task = _task(args)
    prompts = load_prompts(args.prompts)
    report, pruned = evaluate_and_prune(ctx, prompts, task.support, task.importance_data, args.tau,
                                        delta=args.delta, beta=args.beta, blocks=args.blocks,
                                        seed=args.seed, strategy=args.strategy)
    save_importance_report(report, args.report)
    save_prompts(pruned, args.out)
    print(f"✅ Kept {report.masks.retained_tokens}/{report.masks.semantic.size} semantic tokens and "
          f"{report.masks.retained_blocks}/{report.masks.feature.size} feature blocks")
    print(f"📊 Parameters: {report.parameters_before} -> {report.parameters_after}")
    return 0


def cmd_retune(args) -> int:
    ctx = _context(args)
    task = _task(args)
    pruned = load_prompts(args.pruned)
    tuned_epochs = int(pruned.provenance.get("epochs", RunConfig().tune_epochs))
    config = TuningConfig(tau=args.tau, epochs=tuned_epochs, learning_rate=args.lr, seed=args.seed)
    result = retune(ctx, pruned, task.support, config, validation=task.validation, epochs=args.epochs)
    out = args.out or args.pruned
    save_prompts(result.prompts, out)
    print(f"✅ Retuned {result.prompts.parameter_count} prompt parameters -> {out}")
    return 0


def cmd_eval(args) -> int:
    ctx = _context(args)
    task = _task(args)
    prompts = load_prompts(args.prompts)
    predictions = predict_nodes(ctx, prompts, task.support, task.query.nodes)
    metrics = compute_metrics(predictions, task.query.labels, task.classes,
                              parameter_count=prompts.parameter_count)
    print(f"📊 Micro-F {metrics.micro_f:.4f}  Macro-F {metrics.macro_f:.4f}  "
          f"({metrics.parameter_count} prompt parameters)")
    if args.out:
        _write_json(args.out, metrics.to_dict(include_timing=False))
    return 0


def cmd_run(args) -> int:
    config = load_run_config(args.config)
    graph = resolve_graph(config)
    result = run_pipeline(graph, config)
    emit_report(result, args.out)
    summary = result.aggregate
    print(f"📊 {config.variant}: Micro-F {summary['micro_f_mean']:.4f} ± {summary['micro_f_std']:.4f}, "
          f"Macro-F {summary['macro_f_mean']:.4f} ± {summary['macro_f_std']:.4f} over {summary['tasks']} tasks")
    print(f"✅ Report written to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    config = load_run_config(args.config)
    graph = resolve_graph(config)
    result = run_pipeline(graph, config)
    if args.kind == "shots":
        emit_report(result, args.out, shots=run_shot_sweep(graph, config))
    else:
        emit_report(result, args.out, blocks=run_block_sweep(graph, config))
    print(f"✅ {args.kind} sweep written to {args.out}")
    return 0


def cmd_create_config(args) -> int:
    create_config_file(args.out)
    print(f"✅ Configuration file created: {args.out}")
    return 0


def _add_phase_inputs(sub: argparse.ArgumentParser, prompts: Optional[str] = None) -> None:
    sub.add_argument("--graph", required=True, help="Graph file (JSON lines)")
    sub.add_argument("--ckpt", required=True, help="Encoder checkpoint")
    sub.add_argument("--task", required=True, help="Task file written by the tasks command")
    sub.add_argument("--task-index", type=int, default=0, help="Which task in the file (default: 0)")
    sub.add_argument("--hops", type=int, default=1, help="Ego subgraph radius (default: 1)")
    sub.add_argument("--tau", type=float, default=0.5, help="Temperature (default: 0.5)")
    sub.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    if prompts:
        sub.add_argument(f"--{prompts}", required=True, help="Prompt file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Heterogeneous graph prompt tuning, pruning and retuning")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging and full tracebacks")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("synth", help="Generate a planted-partition heterogeneous graph")
    sub.add_argument("--spec", help="Generator spec JSON (default: built-in spec)")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True)
    sub.set_defaults(handler=cmd_synth)

    sub = commands.add_parser("pretrain", help="Link-prediction pre-training of the encoder")
    sub.add_argument("--graph", required=True)
    sub.add_argument("--out", required=True, help="Checkpoint path")
    sub.add_argument("--tau", type=float, default=0.5)
    sub.add_argument("--epochs", type=int, default=100)
    sub.add_argument("--lr", type=float, default=1e-2)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--hops", type=int, default=1)
    sub.add_argument("--triplets", type=int, default=256)
    sub.add_argument("--hidden-dim", type=int, default=64)
    sub.add_argument("--init", choices=["glorot", "identity"], default="glorot")
    sub.add_argument("--log", help="Training log path (default: next to the checkpoint)")
    sub.set_defaults(handler=cmd_pretrain)

    sub = commands.add_parser("tasks", help="Sample k-shot tasks")
    sub.add_argument("--graph", required=True)
    sub.add_argument("--k", type=int, default=1)
    sub.add_argument("--n-tasks", type=int, default=10)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True)
    sub.set_defaults(handler=cmd_tasks)

    sub = commands.add_parser("tune", help="Tune feature and semantic prompts on a task")
    _add_phase_inputs(sub)
    sub.add_argument("--epochs", type=int, default=100)
    sub.add_argument("--lr", type=float, default=1e-2)
    sub.add_argument("--out", required=True, help="Prompt file to write")
    sub.set_defaults(handler=cmd_tune)

    sub = commands.add_parser("prune", help="Score prompt units and prune the unimportant ones")
    _add_phase_inputs(sub, prompts="prompts")
    sub.add_argument("--delta", type=float, default=0.6)
    sub.add_argument("--beta", type=float, default=0.4)
    sub.add_argument("--blocks", type=int, default=16)
    sub.add_argument("--strategy", choices=["importance", "random"], default="importance")
    sub.add_argument("--report", required=True, help="Pruning report JSON")
    sub.add_argument("--out", required=True, help="Pruned prompt file")
    sub.set_defaults(handler=cmd_prune)

    sub = commands.add_parser("retune", help="Retune pruned prompts")
    _add_phase_inputs(sub, prompts="pruned")
    sub.add_argument("--epochs", type=int, help="Default: half the tuning epochs")
    sub.add_argument("--lr", type=float, default=1e-2)
    sub.add_argument("--out", help="Default: overwrite the pruned prompt file")
    sub.set_defaults(handler=cmd_retune)

    sub = commands.add_parser("eval", help="Score prompts on a task's query set")
    _add_phase_inputs(sub, prompts="prompts")
    sub.add_argument("--out", help="Metrics JSON")
    sub.set_defaults(handler=cmd_eval)

    sub = commands.add_parser("run", help="Run a full experiment from a config file")
    sub.add_argument("--config", required=True)
    sub.add_argument("--out", required=True, help="Report directory")
    sub.set_defaults(handler=cmd_run)

    sub = commands.add_parser("sweep", help="Shot-count or block-count sweep")
    sub.add_argument("--config", required=True)
    sub.add_argument("--kind", choices=["shots", "blocks"], required=True)
    sub.add_argument("--out", required=True)
    sub.set_defaults(handler=cmd_sweep)

    sub = commands.add_parser("create-config", help="Write a config file holding the defaults")
    sub.add_argument("--out", default="run_config.json")
    sub.set_defaults(handler=cmd_create_config)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except PromptPipelineError as exc:
        if args.verbose:
            logging.getLogger(__name__).exception("command failed")
        print(f"❌ {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
