# -*- test-case-name: evactrace.test.test_pipeline -*-
"""
The pipeline stages as file-to-file steps, and the run manifest that
records them.

Each stage reads its inputs from files and writes its outputs through
an C{L{OutputStore}}, so running the stages one at a time gives the
same files as L{run_all}. A stage that fails leaves none of its
outputs behind.
"""

__all__ = [
    'MissingInputError',
    'RunManifest',
    'CLEANED_PINGS',
    'HOMES',
    'CLASSIFICATIONS',
    'stage_clean',
    'stage_infer_homes',
    'stage_classify',
    'stage_metrics',
    'stage_synth',
    'acceptance',
    'run_all',
]

import contextlib
import json
import logging
import os
import time

import evactrace
from evactrace import config as config_mod
from evactrace import formats
from evactrace import geo
from evactrace import ingest
from evactrace import kvform
from evactrace import metrics
from evactrace import plot
from evactrace import scenario as scenario_mod
from evactrace import synth
from evactrace.classifier import ResidentLabel, classify_all
from evactrace.evutil import sha256File, toText
from evactrace.home_inference import NightWindow, infer_all_homes

logger = logging.getLogger(__name__)

CLEANED_PINGS = 'clean_pings.csv'
CLEANING_REPORT = 'cleaning_report.txt'
HOMES = 'homes.csv'
CLASSIFICATIONS = 'classifications.csv'
MANIFEST = 'manifest.json'
ACCEPTANCE = 'acceptance.txt'


class MissingInputError(ValueError):
    """An input the stage needs is not named or does not exist."""


class RunManifest(object):
    """What one run read, did and wrote.

    @ivar command: subcommand name
    @ivar config: effective configuration
    @ivar inputs: name to (path, sha256)
    @ivar stages: dicts with C{name}, C{counts} and C{seconds}
    """

    def __init__(self, command, config):
        self.command = command
        self.config = config
        self.inputs = {}
        self.stages = []

    def addInput(self, name, path):
        self.inputs[name] = (os.path.abspath(path), sha256File(path))

    @contextlib.contextmanager
    def timed(self, name):
        """Time the block and record the counts it fills in."""
        counts = {}
        started = time.perf_counter()
        yield counts
        seconds = time.perf_counter() - started
        self.stages.append({
            'name': name,
            'counts': counts,
            'seconds': round(seconds, 3)
        })
        logger.info('Stage %s finished in %.2fs: %s', name, seconds,
                    ', '.join('%s=%s' % item for item in sorted(
                        counts.items())))

    def counts(self, name):
        for stage in self.stages:
            if stage['name'] == name:
                return stage['counts']
        raise KeyError(name)

    def toJSON(self, outputs=()):
        doc = {
            'command': self.command,
            'version': evactrace.__version__,
            'config': toText(self.config.toKV()),
            'inputs': dict((name, {
                'path': path,
                'sha256': digest
            }) for name, (path, digest) in self.inputs.items()),
            'stages': self.stages,
            'outputs': list(outputs),
        }
        return json.dumps(doc, indent=1, sort_keys=True).encode('utf-8')

    def write(self, store):
        store.writeBytes(MANIFEST, self.toJSON(store.written))


def _existing(path, what):
    if path is None:
        raise MissingInputError('no %s input given' % (what, ))
    if not os.path.exists(path):
        raise MissingInputError('%s input %s does not exist' % (what, path))
    return path


def _loadScenario(config, zones_path, tracts_path, manifest):
    _existing(zones_path, 'zones')
    manifest.addInput('zones', zones_path)
    if tracts_path is not None:
        _existing(tracts_path, 'tracts')
        manifest.addInput('tracts', tracts_path)
    return scenario_mod.load_scenario(zones_path, tracts_path, config)


def stage_clean(config, pings_path, store, manifest, errors=None):
    """Parse and clean raw pings into C{clean_pings.csv} with its
    cleaning report.

    @rtype: CleaningReport
    """
    _existing(pings_path, 'pings')
    manifest.addInput('pings', pings_path)
    errors = errors if errors is not None else ingest.ParseErrorLog()
    with manifest.timed('clean') as counts, store.stage('clean'):
        pings = ingest.read_pings(pings_path,
                                  ingest.PingSchema.fromConfig(config), errors)
        window = config.study_window
        if None in window:
            window = None
        cleaned, report = ingest.clean_pings(pings, config.accuracy_max_m,
                                             window)
        with store.open(CLEANED_PINGS, text=True) as f:
            formats.writePings(f, cleaned)
        store.writeBytes(CLEANING_REPORT, report.toKV())

        counts['parse_errors'] = len(errors)
        for field in report.fields:
            counts[field] = getattr(report, field)
    return report


def stage_infer_homes(config, pings_path, store, manifest):
    """Select daily-frequent users among cleaned pings and infer their
    homes into C{homes.csv}.

    @rtype: L{evactrace.home_inference.HomeInferenceResult}
    """
    config.require('ignition', 'study_start')
    _existing(pings_path, 'cleaned pings')
    manifest.addInput('cleaned_pings', pings_path)
    with manifest.timed('infer-homes') as counts, \
            store.stage('infer-homes'):
        pings = ingest.read_pings(pings_path)
        pre_fire, _ = ingest.split_pre_post_fire(pings, config.ignition)
        days = ingest.pre_fire_days(config.study_start, config.ignition,
                                    config.tz)
        if not days:
            raise config_mod.ConfigError(
                'no whole local day lies between study_start and ignition')
        residents = ingest.filter_frequent_users(pre_fire, days,
                                                 config.min_daily_signals,
                                                 config.tz)
        if not residents:
            logger.warning('No daily-frequent users among %d devices',
                           pre_fire['device_id'].nunique())
        result = infer_all_homes(residents, pre_fire,
                                 NightWindow.fromConfig(config),
                                 cell_size_m=config.cell_size_m)
        with store.open(HOMES, text=True) as f:
            formats.writeHomes(f, result.homes)

        counts['pre_fire_days'] = len(days)
        counts['residents'] = len(residents)
        counts['homes'] = len(result.homes)
        counts['excluded'] = len(result.excluded)
    return result


def stage_classify(config, pings_path, homes_path, zones_path, tracts_path,
                   store, manifest, workers=1):
    """Label every in-scope resident into C{classifications.csv}.

    @rtype: L{evactrace.classifier.ClassificationResults}
    """
    config.require('ignition')
    _existing(pings_path, 'cleaned pings')
    _existing(homes_path, 'homes')
    manifest.addInput('cleaned_pings', pings_path)
    manifest.addInput('homes', homes_path)
    s = _loadScenario(config, zones_path, tracts_path, manifest)
    with manifest.timed('classify') as counts, store.stage('classify'):
        homes = formats.readHomes(homes_path)
        placements = scenario_mod.place_homes(homes, s)
        pings = ingest.read_pings(pings_path)
        pre_fire, post_fire = ingest.split_pre_post_fire(pings, s.ignition)
        results = classify_all(homes.keys(), homes, placements, post_fire, s,
                               NightWindow.fromConfig(config),
                               config.departure_anchor, config.cell_size_m,
                               pre_fire=pre_fire, workers=workers)
        with store.open(CLASSIFICATIONS, text=True) as f:
            formats.writeClassifications(f, results)

        counts['homes'] = len(homes)
        counts['classified'] = len(results)
        counts['out_of_scope'] = results.omitted
        for label in ResidentLabel:
            counts[label.value] = sum(1 for r in results if r.label is label)
    return results


def _writeProportions(store, results):
    proportions = []
    for universe in metrics.Universe:
        try:
            proportions.append(metrics.group_proportions(results, universe))
        except metrics.EmptyUniverseError:
            logger.info('No residents in universe %s', universe.value)
    with store.open('proportions.csv', text=True) as f:
        formats.writeProportions(f, proportions)
    with store.open('compositions.csv', text=True) as f:
        formats.writeCompositions(f, metrics.tract_compositions(results))


def _writeSampling(config, store, s, homes_path, pings_path, counts):
    homes = formats.readHomes(homes_path)
    placements = scenario_mod.place_homes(homes, s)
    per_tract = metrics.homes_per_tract(placements, s)
    signals = {}
    if pings_path is not None:
        signals = metrics.signal_counts_by_tract(
            ingest.read_pings(pings_path), placements)
    pairs = dict((t.tract_id, (per_tract[t.tract_id], t.population))
                 for t in s.tracts)
    low = metrics.low_sample_tracts(per_tract, config.min_tract_homes)
    with store.open('sampling.csv', text=True) as f:
        formats.writeSampling(f, s, per_tract, signals,
                              metrics.sampling_rates(pairs), low)

    overall = metrics.overall_sampling_rate(pairs)
    summary = [('overall_sampling_rate', '' if overall is metrics.UNDEFINED
                else repr(float(overall))),
               ('low_sample_tracts', len(low))]
    try:
        fit = metrics.sampling_bias_regression(
            [pairs[t.tract_id] for t in s.tracts])
    except metrics.DegenerateFitError as why:
        logger.warning('Sampling bias regression skipped: %s', why)
        summary.append(('status', 'degenerate'))
    else:
        summary.append(('status', 'ok'))
        summary.extend(fit.toPairs())
    store.writeBytes('regression.txt', kvform.seqToKV(summary))
    counts['tracts'] = len(s.tracts)
    counts['low_sample_tracts'] = len(low)


def stage_metrics(config, classifications_path, zones_path, tracts_path,
                  store, manifest, homes_path=None, pings_path=None):
    """Compliance, response curves, proportions and, given homes and a
    tract layer, the sampling tables."""
    config.require('ignition')
    _existing(classifications_path, 'classifications')
    manifest.addInput('classifications', classifications_path)
    s = _loadScenario(config, zones_path, tracts_path, manifest)
    if homes_path is not None:
        _existing(homes_path, 'homes')
        manifest.addInput('homes', homes_path)

    with manifest.timed('metrics') as counts, store.stage('metrics'):
        results = formats.readClassifications(classifications_path)
        period = metrics.default_period(s.ignition, config.horizon_days)
        records = metrics.compliance_table(results, s, period,
                                           config.compliance_area,
                                           config.categorized_only)
        with store.open('compliance.csv', text=True) as f:
            formats.writeCompliance(f, records)
        store.writeBytes(
            'compliance.geojson',
            formats.complianceGeoJSON(records, s, config.compliance_area))

        curves = metrics.response_curves(results, s.ignition,
                                         config.horizon_days,
                                         config.curve_bins, s.tz)
        with store.open('curves.csv', text=True) as f:
            formats.writeCurves(f, curves)
        store.writeBytes('curves.svg', plot.curvesSVG(curves))

        _writeProportions(store, results)
        if homes_path is not None and s.tracts:
            _writeSampling(config, store, s, homes_path, pings_path, counts)
        else:
            logger.info('No homes or tracts given; skipping sampling tables')

        counts['results'] = len(results)
        counts['evacuees'] = sum(1 for r in results if r.label.is_evacuee)
        counts['areas'] = len(records)
    return records


def stage_synth(template, n_agents, mix, seed, outdir, manifest,
                position_noise_m=30.0, ping_rate_per_hour=4.0,
                inaccurate_rate=0.0, duplicate_rate=0.0):
    """Generate a scenario and dataset and write the bundle.

    @returns: the store holding the bundle
    """
    with manifest.timed('synth') as counts:
        s = synth.generate_scenario(template, seed)
        dataset = synth.generate_dataset(
            n_agents, mix, s, seed, ping_rate_per_hour=ping_rate_per_hour,
            position_noise_m=position_noise_m,
            inaccurate_rate=inaccurate_rate, duplicate_rate=duplicate_rate)
        store = synth.write_bundle(dataset, s, outdir)
        counts['agents'] = len(dataset.specs)
        counts['pings'] = len(dataset.pings)
    return store


def acceptance(truth, homes, grid, results):
    """Compare a run against ground truth.

    @param truth: agent_id to TruthRecord
    @param homes: device_id to HomeLocation
    @param grid: the grid homes were inferred on
    @param results: classification results

    @returns: (key, value) pairs
    """
    by_id = dict((r.device_id, r) for r in results)
    recovered = agreed = 0
    worst = None
    for agent_id, record in sorted(truth.items()):
        home = homes.get(agent_id)
        if home is not None and grid is not None:
            try:
                if geo.cell_index(record.home, grid) == home.cell:
                    recovered += 1
            except geo.OutOfGridError:
                pass
        result = by_id.get(agent_id)
        if result is None:
            continue
        if result.label is record.label:
            agreed += 1
        if record.t_e is not None and result.t_e is not None:
            error = abs(result.t_e - record.t_e)
            worst = error if worst is None else max(worst, error)
        if result.label is not record.label:
            logger.info('Agent %s: expected %s, got %s (%s)', agent_id,
                        record.label.value, result.label.value,
                        result.reason_code)

    n = len(truth)

    def share(k):
        return repr(k / float(n)) if n else ''

    return [
        ('truth_agents', n),
        ('home_cell_recovered', recovered),
        ('home_cell_recovery', share(recovered)),
        ('label_agreed', agreed),
        ('label_agreement', share(agreed)),
        ('max_departure_error_s', '' if worst is None else worst),
    ]


def run_all(config, store, workers=1, errors=None):
    """Clean, infer homes, classify and compute metrics, each stage
    reading what the previous one wrote. With a truth file configured,
    also write C{acceptance.txt}.

    @returns: the run manifest, already written
    @rtype: RunManifest
    """
    config.require('pings', 'zones')
    manifest = RunManifest('run-all', config)
    zones = config.path('zones')
    tracts = config.path('tracts')

    stage_clean(config, config.path('pings'), store, manifest, errors)
    cleaned = store.path(CLEANED_PINGS)
    inferred = stage_infer_homes(config, cleaned, store, manifest)
    results = stage_classify(config, cleaned, store.path(HOMES), zones,
                             tracts, store, manifest, workers)
    stage_metrics(config, store.path(CLASSIFICATIONS), zones, tracts, store,
                  manifest, store.path(HOMES), cleaned)

    truth_path = config.path('truth')
    if truth_path is not None:
        _existing(truth_path, 'truth')
        manifest.addInput('truth', truth_path)
        with manifest.timed('acceptance') as counts, \
                store.stage('acceptance'):
            pairs = acceptance(formats.readTruth(truth_path), inferred.homes,
                               inferred.grid, results)
            store.writeBytes(ACCEPTANCE, kvform.seqToKV(pairs))
            counts.update((k, v) for k, v in pairs if isinstance(v, int))

    manifest.write(store)
    return manifest
