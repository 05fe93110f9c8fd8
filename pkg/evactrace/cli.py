# -*- test-case-name: evactrace.test.test_cli -*-
"""The C{evactrace} command.

Subcommands run one pipeline stage each, or all of them in order::

  evactrace clean --config run.txt --outdir out
  evactrace infer-homes --config run.txt --pings out/clean_pings.csv --outdir out
  evactrace classify --config run.txt --pings out/clean_pings.csv \\
      --homes out/homes.csv --outdir out
  evactrace metrics --config run.txt --classifications out/classifications.csv \\
      --homes out/homes.csv --outdir out
  evactrace synth --template basic --n 200 --seed 7 --outdir bundle
  evactrace run-all --config bundle/config.txt --outdir out

Input flags override the paths named in the config file. Every
subcommand writes C{manifest.json} next to its outputs.

Exit status is 0 on success, 2 for usage, schema, config, scenario and
missing-input errors, and 1 for any other failure.
"""

__all__ = ['main', 'buildParser']

import argparse
import contextlib
import logging
import os
import sys

from evactrace import __version__
from evactrace import formats
from evactrace import ingest
from evactrace import kvform
from evactrace import pipeline
from evactrace import synth
from evactrace.config import ConfigError, loadConfig, parseOverrides
from evactrace.evutil import workerCount
from evactrace.scenario import ScenarioError
from evactrace.store.filestore import OutputStore

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(name)s %(levelname)s %(message)s'

ERROR_LOG = 'parse_errors.log'

# Errors in what the user handed us rather than in the run itself
USAGE_ERRORS = (ConfigError, ScenarioError, ingest.SchemaError,
                formats.FormatError, kvform.KVFormError,
                pipeline.MissingInputError, synth.GenerationError)


def _loadConfig(args):
    return loadConfig(args.config, parseOverrides(args.set), args.strict)


def _input(flag, config, key):
    """A flag's path, else the config's path for C{key}."""
    if flag:
        return flag
    return config.path(key)


def _workers(args, config):
    return workerCount(args.workers or config.workers)


@contextlib.contextmanager
def _errorLog(config, outdir):
    """Send malformed-row reports to the configured error log."""
    path = config.path('error_log') or os.path.join(outdir, ERROR_LOG)
    handler = logging.FileHandler(path, delay=True, encoding='utf-8')
    handler.setFormatter(logging.Formatter('%(message)s'))
    error_logger = logging.getLogger('evactrace.ingest.errors')
    error_logger.addHandler(handler)
    try:
        yield path
    finally:
        error_logger.removeHandler(handler)
        handler.close()


def cmdClean(args):
    config = _loadConfig(args)
    store = OutputStore(args.outdir)
    manifest = pipeline.RunManifest('clean', config)
    with _errorLog(config, store.directory):
        pipeline.stage_clean(config, _input(args.pings, config, 'pings'),
                             store, manifest)
    manifest.write(store)
    return 0


def cmdInferHomes(args):
    config = _loadConfig(args)
    store = OutputStore(args.outdir)
    manifest = pipeline.RunManifest('infer-homes', config)
    pipeline.stage_infer_homes(config, _input(args.pings, config, 'pings'),
                               store, manifest)
    manifest.write(store)
    return 0


def cmdClassify(args):
    config = _loadConfig(args)
    store = OutputStore(args.outdir)
    manifest = pipeline.RunManifest('classify', config)
    pipeline.stage_classify(config, _input(args.pings, config, 'pings'),
                            args.homes, _input(args.zones, config, 'zones'),
                            _input(args.tracts, config, 'tracts'), store,
                            manifest, _workers(args, config))
    manifest.write(store)
    return 0


def cmdMetrics(args):
    config = _loadConfig(args)
    store = OutputStore(args.outdir)
    manifest = pipeline.RunManifest('metrics', config)
    pipeline.stage_metrics(config, args.classifications,
                           _input(args.zones, config, 'zones'),
                           _input(args.tracts, config, 'tracts'), store,
                           manifest, args.homes, args.pings)
    manifest.write(store)
    return 0


def cmdSynth(args):
    mix = synth.parseMix(args.mix) if args.mix else synth.DEFAULT_MIX
    manifest = pipeline.RunManifest('synth', None)
    store = pipeline.stage_synth(args.template, args.n, mix, args.seed,
                                 args.outdir, manifest, args.noise,
                                 args.rate, args.inaccurate_rate,
                                 args.duplicate_rate)
    manifest.config = loadConfig(store.path('config.txt'))
    manifest.write(store)
    return 0


def cmdRunAll(args):
    config = _loadConfig(args)
    store = OutputStore(args.outdir)
    with _errorLog(config, store.directory):
        pipeline.run_all(config, store, _workers(args, config))
    return 0


def _common(parser):
    parser.add_argument('--config', help='key = value settings file')
    parser.add_argument('--set', action='append', default=[],
                        metavar='KEY=VALUE',
                        help='override one setting; repeatable')
    parser.add_argument('--strict', action='store_true',
                        help='reject unknown settings and malformed lines')
    parser.add_argument('--workers', type=int,
                        help='worker processes (EVACTRACE_WORKERS wins)')
    parser.add_argument('--outdir', '--out', dest='outdir', required=True,
                        help='directory for the outputs')


def _mixArg(text):
    try:
        synth.checkMix(synth.parseMix(text))
    except ValueError as why:
        raise argparse.ArgumentTypeError(str(why))
    return text


def buildParser():
    parser = argparse.ArgumentParser(
        prog='evactrace',
        description='Infer homes and wildfire-evacuation behavior from '
        'GPS pings.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    parser.add_argument('--log-level', default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('clean', help='parse and clean raw pings')
    _common(p)
    p.add_argument('--pings', help='raw ping CSV, optionally gzipped')
    p.set_defaults(func=cmdClean)

    p = sub.add_parser('infer-homes', help='select residents, infer homes')
    _common(p)
    p.add_argument('--pings', help='cleaned ping CSV')
    p.set_defaults(func=cmdInferHomes)

    p = sub.add_parser('classify', help='label residents')
    _common(p)
    p.add_argument('--pings', help='cleaned ping CSV')
    p.add_argument('--homes', required=True, help='homes CSV')
    p.add_argument('--zones', help='zones GeoJSON')
    p.add_argument('--tracts', help='tracts GeoJSON')
    p.set_defaults(func=cmdClassify)

    p = sub.add_parser('metrics', help='compliance, curves and sampling')
    _common(p)
    p.add_argument('--classifications', required=True,
                   help='classifications CSV')
    p.add_argument('--zones', help='zones GeoJSON')
    p.add_argument('--tracts', help='tracts GeoJSON')
    p.add_argument('--homes', help='homes CSV, for the sampling tables')
    p.add_argument('--pings', help='cleaned ping CSV, for signal counts')
    p.set_defaults(func=cmdMetrics)

    p = sub.add_parser('synth', help='write a synthetic bundle')
    p.add_argument('--outdir', '--out', dest='outdir', required=True)
    p.add_argument('--template', default='basic',
                   choices=[t.value for t in synth.Template])
    p.add_argument('--n', type=int, default=200, help='number of agents')
    p.add_argument('--mix', type=_mixArg,
                   help='label=share,... over resident labels')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--noise', type=float, default=30.0,
                   help='position noise sigma, meters')
    p.add_argument('--rate', type=float, default=4.0,
                   help='pings per hour')
    p.add_argument('--inaccurate-rate', type=float, default=0.0)
    p.add_argument('--duplicate-rate', type=float, default=0.0)
    p.set_defaults(func=cmdSynth)

    p = sub.add_parser('run-all', help='run every stage in order')
    _common(p)
    p.set_defaults(func=cmdRunAll)
    return parser


def main(argv=None):
    """Run the command line; returns the exit status."""
    parser = buildParser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format=LOG_FORMAT)
    try:
        return args.func(args)
    except USAGE_ERRORS as why:
        logger.error('%s: %s', args.command, why)
        return 2
    except Exception:
        logger.exception('%s failed', args.command)
        return 1


if __name__ == '__main__':
    sys.exit(main())
