"""
Command dispatch over the output directory.

``train`` writes the checkpoint and per-phase loss curves; ``eval``, ``robust``
and ``bench`` merge their section into metrics.json and re-emit the report;
``report`` re-emits the tables and figures from metrics.json alone.
"""
import csv
import logging
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from hcc.baseline import BigramBaseline
from hcc.benchmark import benchmark_throughput
from hcc.checkpoint import load_checkpoint, save_checkpoint
from hcc.config import EffectiveSettings
from hcc.corpus import CodeSample, CorpusSplit, TokenizedSample, load_corpus, split_corpus, tokenize_samples
from hcc.errors import ArgumentError, DataError, EmptyEvaluationError, UsageError
from hcc.fusion import HybridModel
from hcc.generator import NextTokenModel, completion_text, generate
from hcc.lexer import tokenize_code
from hcc.metrics import (
    accuracy, code_executability, corpus_bleu, count_predictions, precision_recall_f1, semantic_consistency
)
from hcc.remote import RemoteClient, RemoteModel
from hcc.report import emit_report, load_metrics, update_metrics
from hcc.robustness import greedy_predictions, run_robustness_suite
from hcc.schemas.command import CommandRequest, CommandResult
from hcc.schemas.config import RunConfig
from hcc.schemas.reports import AccuracyRow, PerformanceRow, PhaseReport, QualityReport, QualityRow
from hcc.training import Example, make_examples, train_model
from hcc.vocabulary import BOS, EOS, PAD, build_vocabulary


logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "model.hcc"
LOGS_DIR = "logs"

BASELINE = "Baseline"
ENCODER_ROW = "CodeBERT"
GENERATOR_ROW = "GPT-3.5"
HYBRID_ROW = "Hybrid Model"
REMOTE_ROW = "Remote"

System = Tuple[str, NextTokenModel]


class Pipeline:
    def __init__(self, config: RunConfig, settings: EffectiveSettings):
        self.config = config
        self.settings = settings
        self.output = Path(config.output)

    @property
    def checkpoint_path(self) -> Path:
        return self.output / CHECKPOINT_FILE

    def process(self, request: CommandRequest) -> CommandResult:
        if request.command == "train":
            return self._handle_train(request)

        elif request.command == "complete":
            return self._handle_complete(request)

        elif request.command == "eval":
            return self._handle_eval(request)

        elif request.command == "robust":
            return self._handle_robust(request)

        elif request.command == "bench":
            return self._handle_bench(request)

        elif request.command == "report":
            return self._handle_report(request)

        raise UsageError(f"Command '{request.command}' not supported")

    # shared loading

    def _load_samples(self) -> List[CodeSample]:
        path = Path(self.config.corpus)
        if not path.is_file():
            raise DataError(f"corpus file not found: {path}")
        return load_corpus(path)

    def _split(self) -> CorpusSplit:
        return split_corpus(self._load_samples(), self.config.split.ratios, self.settings.seed)

    def _load_model(self) -> HybridModel:
        if not self.checkpoint_path.is_file():
            raise DataError(f"no checkpoint at {self.checkpoint_path}; run train first")
        model = load_checkpoint(self.checkpoint_path)
        if model.provenance.seed != self.settings.seed:
            logger.warning(
                "checkpoint was trained with seed %d but the effective seed is %d; the test split differs",
                model.provenance.seed, self.settings.seed,
            )
        return model

    def _test_data(self, model: HybridModel) -> Tuple[List[TokenizedSample], List[TokenizedSample], List[Example]]:
        split = self._split()
        train = tokenize_samples(split.train, model.vocab)
        test = tokenize_samples(split.test, model.vocab)
        examples = make_examples(test, self.config.training.context_window)
        if not examples:
            raise EmptyEvaluationError("the test split yields no next-token examples")
        return train, test, examples

    def _systems(self, model: HybridModel, train: Sequence[TokenizedSample]) -> List[System]:
        baseline = BigramBaseline(model.vocab_size).fit([s.ids for s in train])
        systems: List[System] = [
            (BASELINE, baseline),
            (ENCODER_ROW, model.path("encoder")),
            (GENERATOR_ROW, model.path("generator")),
            (HYBRID_ROW, model.path("hybrid")),
        ]
        if self.config.metrics.include_remote:
            systems.append((REMOTE_ROW, RemoteModel(RemoteClient(self.settings.remote), model.vocab)))
        return systems

    def _emit(self, command: str, **sections) -> CommandResult:
        doc = update_metrics(self.output, **sections)
        files = emit_report(doc, self.output)
        return CommandResult(command=command, files=[str(f) for f in files])

    # train

    def _write_loss_curve(self, report: PhaseReport) -> Path:
        path = self.output / LOGS_DIR / f"train_phase{report.phase}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["epoch", "loss"])
            writer.writerows([epoch, repr(loss)] for epoch, loss in enumerate(report.losses, start=1))
        return path

    def _handle_train(self, request: CommandRequest) -> CommandResult:
        seed = self.settings.seed
        split = self._split()
        vocab = build_vocabulary(
            (tokenize_code(s.code) for s in split.train),
            self.config.vocabulary.max_size,
            self.config.vocabulary.min_freq,
        )
        train = tokenize_samples(split.train, vocab)
        examples = make_examples(train, self.config.training.context_window)
        logger.info(
            "training on %d samples (%d examples), vocabulary %d, seed %d",
            len(train), len(examples), vocab.size, seed,
        )

        model = HybridModel(vocab, self.config.encoder, self.config.generator, self.config.fusion.mode, seed=seed)
        reports = train_model(model, examples, self.config.training, seed)
        save_checkpoint(model, self.checkpoint_path)

        files = [self.checkpoint_path] + [self._write_loss_curve(r) for r in reports]
        return CommandResult(command=request.command, files=[str(f) for f in files])

    # complete

    def _handle_complete(self, request: CommandRequest) -> CommandResult:
        prompt = request.params.get("prompt")
        max_new = request.params.get("max_new", self.config.metrics.completion_tokens)
        backend = request.params.get("backend", "local")
        if prompt is None:
            raise UsageError("complete requires --prompt")
        if max_new < 0:
            raise ArgumentError(f"--max-new must be >= 0, got {max_new}")

        if backend == "remote":
            text = RemoteClient(self.settings.remote).complete(prompt, max_new)
            return CommandResult(command=request.command, output=text)

        model = self._load_model()
        ids = generate(model, model.vocab.encode(tokenize_code(prompt)), max_new)
        return CommandResult(command=request.command, output=completion_text(ids, model.vocab))

    # eval

    @staticmethod
    def _accuracy_row(name: str, system: NextTokenModel, examples: Sequence[Example]) -> AccuracyRow:
        counts = count_predictions(greedy_predictions(system, [e.prefix for e in examples]), [e.label for e in examples])
        precision, recall, f1 = precision_recall_f1(counts)
        return AccuracyRow(
            model=name, accuracy=accuracy(counts), precision=precision, recall=recall, f1=f1, counts=counts
        )

    @staticmethod
    def _complete_ids(system: NextTokenModel, prefix: Sequence[int], k: int) -> List[int]:
        ids = system.complete(prefix, k) if isinstance(system, RemoteModel) else generate(system, prefix, k)
        return [i for i in ids if i not in (PAD, BOS, EOS)]

    def _quality(self, system: NextTokenModel, test: Sequence[TokenizedSample], model: HybridModel) -> QualityReport:
        window = self.config.training.context_window
        pairs, passes, consistency = [], [], []
        for sample in test:
            if len(sample.ids) < 2:
                continue
            k = min(self.config.metrics.completion_tokens, len(sample.ids) - 1)
            prefix = sample.ids[:-k][-window:]
            reference = sample.ids[-k:]
            candidate = self._complete_ids(system, prefix, k)

            pairs.append((candidate, reference))
            passes.append(code_executability(model.vocab.decode(prefix), model.vocab.decode(candidate)))
            consistency.append(semantic_consistency(candidate, reference, model.encoder))

        breakdown = corpus_bleu(pairs, self.config.metrics.bleu_max_n)
        return QualityReport(
            bleu=breakdown.score,
            executability=float(np.mean(passes)),
            semantic_consistency=float(np.mean(consistency)),
            samples=len(pairs),
            bleu_breakdown=breakdown,
        )

    def _handle_eval(self, request: CommandRequest) -> CommandResult:
        model = self._load_model()
        train, test, examples = self._test_data(model)
        systems = self._systems(model, train)

        accuracy_rows = [self._accuracy_row(name, system, examples) for name, system in systems]
        quality_rows = [QualityRow(model=name, report=self._quality(system, test, model)) for name, system in systems]
        for row in accuracy_rows:
            logger.info("%s: accuracy %.4f F1 %.4f", row.model, row.accuracy, row.f1)

        return self._emit(request.command, accuracy=accuracy_rows, quality=quality_rows)

    # robust

    def _handle_robust(self, request: CommandRequest) -> CommandResult:
        model = self._load_model()
        _, _, examples = self._test_data(model)
        report = run_robustness_suite(
            model.path("hybrid"), examples, model.vocab_size, self.config.robustness, self.settings.seed, HYBRID_ROW
        )
        return self._emit(request.command, robustness=report)

    # bench

    def _bench_prompts(self, test: Sequence[TokenizedSample]) -> List[List[int]]:
        usable = [s for s in test if s.ids]
        if not usable:
            raise EmptyEvaluationError("the test split has no non-empty samples to prompt with")
        window = self.config.training.context_window
        prompts = []
        for i in range(self.config.metrics.bench_prompts):
            ids = usable[i % len(usable)].ids
            prompts.append(ids[:max(1, len(ids) // 2)][-window:])
        return prompts

    def _handle_bench(self, request: CommandRequest) -> CommandResult:
        model = self._load_model()
        train, test, _ = self._test_data(model)
        prompts = self._bench_prompts(test)

        rows = []
        for name, system in self._systems(model, train):
            result = benchmark_throughput(system, prompts, self.config.metrics.bench_max_new)
            rows.append(PerformanceRow(
                model=name,
                average_response_time_ms=result.latency.art_ms,
                memory_bytes=result.memory_bytes,
                memory_gb=result.memory_gb,
                tokens_per_second=result.tokens_per_second,
                generated_tokens=result.generated_tokens,
                latency=result.latency,
            ))
        return self._emit(request.command, performance=rows)

    # report

    def _handle_report(self, request: CommandRequest) -> CommandResult:
        files = emit_report(load_metrics(self.output), self.output)
        return CommandResult(command=request.command, files=[str(f) for f in files])
