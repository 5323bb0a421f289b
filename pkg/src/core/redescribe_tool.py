#!/usr/bin/env python3
"""
Redescribe - Multi-view Redescription Mining Engine
Command-line controller

Commands:
    mine      run the multi-view framework over all restarts
    naive     run the pairwise-join baseline over all restarts
    evaluate  score a redescription file against a dataset
    compare   compare two run reports with a one-sided signed-rank test
    synth     write a synthetic dataset, its ground truth and a config
"""

import argparse
import logging
import sys
from dataclasses import asdict, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml
from joblib import Parallel, delayed

from core.reporting import (
    ReportError, ResourceMonitor, RunRecord, compare_reports, config_digest,
    read_report, resources_row, write_comparison, write_report,
)
from engine.framework import run_framework
from engine.metrics import metric_table, set_scores
from engine.naive import run_naive
from engine.query import QueryError
from engine.redescription import load_redescriptions, save_redescriptions
from utils.config_parser import (
    ConfigError, Constraints, RunConfig, Settings, config_to_dict, dump_config,
    load_run_config,
)
from utils.dataset import Dataset, DatasetError, load_dataset, save_dataset
from utils.seeding import child_seed
from utils.synthetic import SyntheticSpec, SyntheticSpecError, generate_synthetic
from utils.tracing import create_tracer

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EMPTY = 3
EXIT_IO = 4

PROJECT_ROOT = Path(__file__).parent.parent.parent


def read_version(root: Path = PROJECT_ROOT) -> str:
    """Read version from VERSION file"""
    try:
        return (root / 'VERSION').read_text().strip()
    except OSError:
        return "unknown"


class RedescribeTool:
    """Main controller: loads inputs, runs the miners and writes outputs."""

    def __init__(self, out_dir: Path, jobs: int = 1, trace: bool = False):
        self.out_dir = Path(out_dir).absolute()
        self.jobs = max(1, int(jobs))
        self.trace = trace
        self.root = PROJECT_ROOT

        self.version = read_version(self.root)
        self.setup_logging()

    def setup_logging(self):
        """Log to <out>/logs and to stdout"""
        log_dir = self.out_dir / 'logs'
        log_dir.mkdir(parents=True, exist_ok=True)

        log_file = log_dir / (
            f"redescribe_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"
        )

        logging.basicConfig(
            level=logging.INFO,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(log_file),
                logging.StreamHandler(sys.stdout)
            ],
            force=True,
        )

        self.logger = logging.getLogger('RedescribeTool')
        self.logger.info(f"Redescribe version: {self.version}")

    def load(
        self, config_path: Path, seed: Optional[int] = None, pairs: Optional[int] = None
    ) -> Tuple[RunConfig, Dataset]:
        """Configuration with command-line overrides applied, and its dataset."""
        config = load_run_config(config_path)
        settings = config.settings
        if seed is not None:
            settings = replace(settings, rng_seed=int(seed))
        if pairs is not None:
            settings = replace(settings, view_pairs=int(pairs))
        settings.validate()
        config.settings = settings

        if config.views:
            dataset = load_dataset(config.views, config.align)
        elif config.synthetic is not None:
            dataset, _ = generate_synthetic(config.synthetic)
        else:
            raise ConfigError("Configuration names neither dataset views nor a synthetic spec")
        config.constraints = config.constraints.resolve(dataset.n_entities)
        self.logger.info(
            f"Dataset: {dataset.n_entities} entities, views "
            f"{[v.name for v in dataset.views]}"
        )
        return config, dataset

    def _tracer(self, run: int, command: str):
        if not self.trace:
            return create_tracer(None)
        return create_tracer(self.out_dir / f"run_{run}" / f"{command}_trace.log")

    def _restart_seeds(self, config: RunConfig) -> List[int]:
        seed = config.settings.rng_seed
        return [
            child_seed(seed, 'restart', r)
            for r in range(config.settings.n_random_restarts)
        ]

    def _inner_jobs(self, n_runs: int) -> int:
        return 1 if n_runs > 1 and self.jobs > 1 else self.jobs

    def _mine_once(self, config: RunConfig, dataset: Dataset, run: int, seed: int,
                   n_jobs: int) -> Dict[str, Any]:
        monitor = ResourceMonitor()
        tracer = self._tracer(run, 'mine')
        try:
            result = run_framework(
                dataset, config.constraints, config.settings, seed,
                tracer=tracer, monitor=monitor, n_jobs=n_jobs,
            )
        finally:
            tracer.close()
        return {'result': result, 'usage': monitor.stop()}

    def _finish(self, config: RunConfig, records: List[RunRecord],
                resources: List[Dict[str, Any]]) -> Dict[str, Path]:
        resolved = self.out_dir / 'config.resolved.yaml'
        dump_config(config, resolved)
        paths = write_report(self.out_dir, records, resources)
        paths['config'] = resolved
        return paths

    def mine(self, config_path: Path, seed: Optional[int] = None,
             pairs: Optional[int] = None) -> int:
        config, dataset = self.load(config_path, seed, pairs)
        settings = config.settings
        seeds = self._restart_seeds(config)
        digest = config_digest(config_to_dict(config))
        inner = self._inner_jobs(len(seeds))

        outcomes = Parallel(n_jobs=self.jobs if len(seeds) > 1 else 1, prefer='threads')(
            delayed(self._mine_once)(config, dataset, run, run_seed, inner)
            for run, run_seed in enumerate(seeds)
        )

        records: List[RunRecord] = []
        resources: List[Dict[str, Any]] = []
        produced = 0
        for run, (run_seed, outcome) in enumerate(zip(seeds, outcomes)):
            result = outcome['result']
            run_dir = self.out_dir / f"run_{run}"
            run_dir.mkdir(parents=True, exist_ok=True)
            for w, (row, members) in enumerate(zip(settings.weights, result.sets)):
                scores = set_scores(
                    members, row, settings.expected_out_size, settings.k_c, dataset
                )
                save_redescriptions(
                    run_dir / f"set_{w}.yaml", members, dataset, scores,
                    extra={'run': run, 'seed': run_seed, 'weights': list(row),
                           'pairs': [list(p) for p in result.pairs]},
                )
                records.append(RunRecord(
                    'mine', run, run_seed, w, result.store_peak, scores, digest,
                    master_seed=settings.rng_seed,
                ))
                produced += len(members)
            resources.append(resources_row(
                'mine', run, run_seed, outcome['usage'], result.store_peak
            ))
            self.logger.info(
                f"Run {run} (seed {run_seed}): {len(result.complete)} complete, "
                f"sets of sizes {[len(s) for s in result.sets]}"
            )

        paths = self._finish(config, records, resources)
        print(f"✅ Mining finished: {produced} redescriptions in {len(seeds)} run(s)")
        print(f"   → report: {paths['report']}")
        return EXIT_OK if produced else EXIT_EMPTY

    def naive(self, config_path: Path, seed: Optional[int] = None) -> int:
        config, dataset = self.load(config_path, seed)
        settings = config.settings
        seeds = self._restart_seeds(config)
        digest = config_digest(config_to_dict(config))
        inner = self._inner_jobs(len(seeds))

        def naive_once(run: int, run_seed: int):
            monitor = ResourceMonitor()
            tracer = self._tracer(run, 'naive')
            try:
                result = run_naive(
                    dataset, config.constraints, settings, run_seed, tracer, inner
                )
            finally:
                tracer.close()
            return result, monitor.stop()

        outcomes = Parallel(n_jobs=self.jobs if len(seeds) > 1 else 1, prefer='threads')(
            delayed(naive_once)(run, run_seed) for run, run_seed in enumerate(seeds)
        )

        records: List[RunRecord] = []
        resources: List[Dict[str, Any]] = []
        produced = 0
        for run, (run_seed, (result, usage)) in enumerate(zip(seeds, outcomes)):
            run_dir = self.out_dir / f"run_{run}"
            run_dir.mkdir(parents=True, exist_ok=True)
            row = settings.weights[0]
            scores = set_scores(
                result.members, row, settings.expected_out_size, settings.k_c, dataset
            )
            save_redescriptions(
                run_dir / 'naive.yaml', result.members, dataset, scores,
                extra={'run': run, 'seed': run_seed, 'stats': result.stats()},
            )
            records.append(RunRecord(
                'naive', run, run_seed, 0, result.peak, scores, digest,
                master_seed=settings.rng_seed,
            ))
            resources.append(resources_row('naive', run, run_seed, usage, result.peak))
            produced += len(result.members)

        paths = self._finish(config, records, resources)
        print(f"✅ Naive mining finished: {produced} redescriptions in {len(seeds)} run(s)")
        print(f"   → report: {paths['report']}")
        return EXIT_OK if produced else EXIT_EMPTY

    def evaluate(self, redescriptions: Path, config_path: Path,
                 r_out: Optional[int] = None,
                 weights: Optional[Sequence[float]] = None) -> int:
        config, dataset = self.load(config_path)
        settings = config.settings
        members = load_redescriptions(redescriptions, dataset)
        row = list(weights) if weights is not None else settings.weights[0]
        if len(row) != 5 or abs(sum(row) - 1.0) > 1e-9:
            raise ConfigError(f"weights must be 5 values summing to 1, got {row}")
        table = metric_table(
            members, row, r_out or settings.expected_out_size, settings.k_c,
            dataset, set_label=Path(redescriptions).stem,
        )
        path = self.out_dir / 'evaluation.csv'
        table.to_csv(path, index=False, float_format='%.12g', lineterminator='\n')
        print(table.to_string(index=False))
        print(f"✅ Evaluated {len(members)} redescriptions → {path}")
        return EXIT_OK

    def compare(self, report_a: Path, report_b: Path) -> int:
        comparison = compare_reports(read_report(report_a), read_report(report_b))
        path = write_comparison(comparison, self.out_dir / 'comparison.csv')
        print(comparison.to_string(index=False))
        print(f"✅ Comparison written to {path}")
        return EXIT_OK

    def synth(self, config_path: Optional[Path] = None,
              seed: Optional[int] = None) -> int:
        if config_path is not None:
            config = load_run_config(config_path)
            spec = config.synthetic or SyntheticSpec()
        else:
            config = RunConfig(Constraints(), Settings())
            spec = SyntheticSpec()
        if seed is not None:
            spec = replace(spec, seed=int(seed))
        dataset, blocks = generate_synthetic(spec)

        data_dir = self.out_dir / 'data'
        config.views = save_dataset(dataset, data_dir)
        config.align = 'id'
        config.synthetic = None
        dump_config(config, self.out_dir / 'config.yaml')
        planted = {
            'spec': asdict(spec),
            'blocks': [b.to_record(dataset) for b in blocks],
        }
        (self.out_dir / 'planted.yaml').write_text(
            yaml.safe_dump(planted, sort_keys=False)
        )
        print(f"✅ Synthetic dataset with {len(blocks)} planted blocks in {self.out_dir}")
        return EXIT_OK


def _weights(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f"weights must be comma-separated numbers: {text}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', type=Path, default=Path('out'), help='Output directory')
    common.add_argument('--jobs', type=int, default=1, help='Parallel workers')
    common.add_argument('--trace', action='store_true', help='Write per-run trace logs')

    parser = argparse.ArgumentParser(
        prog='redescribe',
        description='Redescribe - multi-view redescription mining engine',
    )
    parser.add_argument('--version', '-v', action='store_true', help='Show version and exit')
    commands = parser.add_subparsers(dest='command')

    mine = commands.add_parser('mine', parents=[common], help='Run the multi-view framework')
    mine.add_argument('--config', type=Path, required=True)
    mine.add_argument('--seed', type=int)
    mine.add_argument('--pairs', type=int, help='Number of sampled view pairs')

    naive = commands.add_parser('naive', parents=[common], help='Run the naive baseline')
    naive.add_argument('--config', type=Path, required=True)
    naive.add_argument('--seed', type=int)

    evaluate = commands.add_parser('evaluate', parents=[common], help='Score a redescription file')
    evaluate.add_argument('redescriptions', type=Path)
    evaluate.add_argument('--config', type=Path, required=True)
    evaluate.add_argument('--r-out', type=int, dest='r_out')
    evaluate.add_argument('--weights', type=_weights)

    compare = commands.add_parser('compare', parents=[common], help='Compare two run reports')
    compare.add_argument('report_a', type=Path)
    compare.add_argument('report_b', type=Path)

    synth = commands.add_parser('synth', parents=[common], help='Write a synthetic dataset')
    synth.add_argument('--config', type=Path)
    synth.add_argument('--seed', type=int)
    return parser


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG

    if args.version:
        print(f"Redescribe - Multi-view Redescription Mining Engine v{read_version()}")
        return EXIT_OK
    if args.command is None:
        build_parser().print_help()
        return EXIT_CONFIG

    try:
        tool = RedescribeTool(args.out, args.jobs, args.trace)
        if args.command == 'mine':
            return tool.mine(args.config, args.seed, args.pairs)
        if args.command == 'naive':
            return tool.naive(args.config, args.seed)
        if args.command == 'evaluate':
            return tool.evaluate(args.redescriptions, args.config, args.r_out, args.weights)
        if args.command == 'compare':
            return tool.compare(args.report_a, args.report_b)
        return tool.synth(args.config, args.seed)

    except (ConfigError, SyntheticSpecError, ReportError) as e:
        print(f"❌ Error: {e}")
        return EXIT_CONFIG
    except (DatasetError, QueryError, OSError) as e:
        print(f"❌ Error: {e}")
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
