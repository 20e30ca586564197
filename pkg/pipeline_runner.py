"""
Command-line pipeline for regime libraries and sparse-sensing classification.
"""
import sys
from typing import Any, Dict, Optional

import click

from config.experiments import ExperimentConfig, load_experiment, merge_overrides
from config.suites import suite_registry
from processors.metrics_processors import (
    ConfusionProcessor, MetricsProcessor, MuBSweepProcessor, SweepProcessor,
)
from processors.offline_processors import BuildLibraryProcessor, ObserveProcessor, SynthProcessor
from processors.online_processors import ClassifyProcessor, ReconstructProcessor
from rscope import __version__
from rscope.exceptions import RscopeError
from rscope.models import SensingOperator
from utils.logger import logger

PROCESSOR_CLASSES = {
    'synth': SynthProcessor,
    'build-lib': BuildLibraryProcessor,
    'observe': ObserveProcessor,
    'classify': ClassifyProcessor,
    'reconstruct': ReconstructProcessor,
    'metrics': MetricsProcessor,
    'confusion': ConfusionProcessor,
    'mu-b-sweep': MuBSweepProcessor,
    'sweep': SweepProcessor,
}


def report_error(error: Exception) -> int:
    """Print the machine-parseable error line and return the exit code."""
    code = error.exit_code if isinstance(error, RscopeError) else 1
    message = " ".join(str(error).split())
    click.echo(f"error code={code} kind={type(error).__name__} message={message}", err=True)
    return code


def run_pipeline(config: ExperimentConfig, command: str) -> Dict[str, Any]:
    """Run one subcommand for a validated configuration."""
    processor_class = PROCESSOR_CLASSES.get(command)
    if not processor_class:
        raise click.UsageError(f"Unknown command '{command}'. Available: {list(PROCESSOR_CLASSES)}")
    processor = processor_class(config.validate())
    result = processor.process()
    processor.log_summary(result)
    return result


def _parse_list(text: Optional[str], cast):
    if not text:
        return ()
    try:
        return tuple(cast(item) for item in text.split(",") if item.strip())
    except ValueError:
        raise click.BadParameter(f"'{text}' is not a comma-separated list")


def experiment_options(func):
    """Flags shared by every subcommand."""
    options = [
        click.option('--config', 'config_path', type=click.Path(dir_okay=False),
                     help='Experiment JSON file; explicit flags override it'),
        click.option('--library', type=click.Path(file_okay=False), help='Persisted library directory'),
        click.option('--data', type=click.Path(file_okay=False), help='Snapshot directory written by synth'),
        click.option('--suite', help=f'Suite name {suite_registry.get_suite_names()} or JSON path'),
        click.option('--sensing', 'kind', type=click.Choice(SensingOperator.KINDS), help='Sensing kind'),
        click.option('--p', type=int, help='Sensor count for point/random/tomographic sensing'),
        click.option('--pt', type=int, help='Boundary sensors on the scalar field'),
        click.option('--pv', type=int, help='Boundary sensors on the velocity fields'),
        click.option('--snr-db', type=float, help='Measurement SNR in dB (noiseless when omitted)'),
        click.option('--j', type=int, help='Time augmentation depth'),
        click.option('--trials', type=int, help='Monte-Carlo trials per test set'),
        click.option('--seed', type=int, help='Master seed'),
        click.option('--out', type=click.Path(file_okay=False), help='Output directory'),
        click.option('--rank-policy', help="'fixed:R' or 'energy:T'"),
        click.option('--train-fraction', type=float, help='Share of each regime used for training'),
        click.option('--j-max', type=int, help='Largest depth the test split must support'),
        click.option('--p-list', help='Comma-separated p values (sweep)'),
        click.option('--pt-list', help='Comma-separated p_T values (sweep)'),
        click.option('--pv-list', help='Comma-separated p_v values (sweep)'),
        click.option('--j-list', help='Comma-separated j values (sweep, mu-b-sweep)'),
        click.option('--snr-list', help='Comma-separated SNR values in dB (sweep)'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _build_config(params: Dict[str, Any]) -> ExperimentConfig:
    params = dict(params)
    config_path = params.pop('config_path')
    base = load_experiment(config_path) if config_path else ExperimentConfig()
    for key, cast in (('p_list', int), ('pt_list', int), ('pv_list', int), ('j_list', int),
                      ('snr_list', float)):
        params[key] = _parse_list(params.get(key), cast)
    return merge_overrides(base, params)


def _command(name: str, params: Dict[str, Any]):
    try:
        run_pipeline(_build_config(params), name)
    except RscopeError as error:
        sys.exit(report_error(error))
    except (click.ClickException, click.exceptions.Exit):
        raise
    except Exception as error:
        logger.exception(f"Fatal error in {name}: {str(error)}")
        sys.exit(report_error(error))


@click.group()
@click.version_option(version=__version__, message="%(version)s")
def main():
    """
    Regime library pipeline

    Offline: synth, build-lib, observe. Online: classify, reconstruct.
    Diagnostics: metrics, confusion, mu-b-sweep, sweep.

    Examples:
        # Generate the default suite and build a rank-10 library
        rscope synth --out run
        rscope build-lib --data run --rank-policy fixed:10 --out run

        # Classify with 20 point sensors, 3 extra time steps, 20 dB noise
        rscope classify --library run/library --data run --sensing point --p 20 --j 3 --snr-db 20 --out run
    """


def _register(name: str, help_text: str):
    @main.command(name=name, help=help_text)
    @experiment_options
    def command(**params):
        _command(name, params)
    return command


_register('synth', 'Generate the synthetic suite (snapshots/*.rsnp, suite.csv).')
_register('build-lib', 'Build and save the regime library (library/, spectra.csv).')
_register('observe', 'Build the sensing operator and observed library report.')
_register('classify', 'Classify random test windows (classification.csv).')
_register('reconstruct', 'Reconstruct full states from every regime (reconstruction.csv).')
_register('metrics', 'Write eta, gamma, kappa and coherence diagnostics.')
_register('confusion', 'Monte-Carlo confusion matrix (confusion.csv).')
_register('mu-b-sweep', 'Block coherence versus augmentation depth (mu_b_sweep.csv).')
_register('sweep', 'Accuracy over sensor counts, depths and noise levels (sweep.csv).')


if __name__ == '__main__':
    main()
