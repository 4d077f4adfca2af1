"""Pipeline stages over one run directory

Every stage reads the normalized output of the stage before it from the run
directory and writes its own next to it::

    <out>/RunManifest.json
    <out>/ingest/      fire_events.csv  weather.csv  ndvi.csv  drops.json
    <out>/fuse/        fused.csv  exclusions.json
    <out>/features/    train.csv  test.csv  metadata.json
    <out>/models/      <family>.json  cv_results.csv  threshold.json
    <out>/evaluation/  metrics.json
    <out>/reports/     rendered tables and plots
    <out>/predict/     predictions.csv
    <out>/raw/         synthetic input trio (`synth --raw`)

`synth` writes `fuse/fused.csv` directly, so `featurize` can follow it.
"""
import hashlib
import logging
import os
import time
import zlib

import numpy as np
import pandas as pd

from .ensemble import check_threshold_source, optimize_threshold, \
    random_search
from .ensemble.core import resample_rows
from .ensemble.search import search_table_rows
from .exceptions import PrerequisiteError
from .features import SplitSpec, featurize, read_features, split, \
    write_features
from .geofusion import fuse, read_fused, write_fused
from .ingest import parse_fire_events, parse_ndvi, parse_weather, \
    write_fire_events, write_frame, write_ndvi, write_weather
from .metrics import correlation_matrix, report, roc_auc, roc_curve, \
    vif_table
from .models import ModelArtifact, load_artifact, make_model, \
    predict_proba
from .parallel import derive_seed
from .records import ExclusionSummary
from .report import dump_json, frp_by_precipitation, load_json, \
    monthly_counts, render
from .synth import synth_fused, synth_raw

logger = logging.getLogger(__name__)


def file_digest(path):
    sha = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 20), b''):
            sha.update(block)
    return sha.hexdigest()


def family_seed(seed, family, *path):
    """Seed of a model family, independent of the order families are listed
    """
    return derive_seed(seed, zlib.crc32(family.encode('utf-8')), *path)


class RunManifest(object):
    """Provenance of a run directory

    Parameters
    ----------
    config_hash: str
        `PipelineConfig.config_hash()` of the run
    inputs: dict
        Input path -> sha256
    stages: dict
        Stage name -> {'counts', 'seconds', 'artifacts'}
    """
    FILENAME = 'RunManifest.json'

    def __init__(self, config_hash, inputs=None, stages=None):
        self.config_hash = config_hash
        self.inputs = dict(inputs or {})
        self.stages = dict(stages or {})

    @classmethod
    def load(cls, directory, config_hash):
        path = os.path.join(directory, cls.FILENAME)
        if not os.path.exists(path):
            return cls(config_hash)
        data = load_json(path)
        if data.get('config_hash') != config_hash:
            logger.warning('configuration changed since the last run in %s; '
                           'earlier stage records are kept', directory)
        return cls(config_hash, data.get('inputs'), data.get('stages'))

    def record(self, stage, counts, seconds, artifacts):
        self.stages[stage] = {'counts': counts,
                              'seconds': round(float(seconds), 3),
                              'artifacts': sorted(artifacts)}

    def to_dict(self):
        return {'config_hash': self.config_hash, 'inputs': self.inputs,
                'stages': self.stages}

    def save(self, directory):
        dump_json(self.to_dict(), os.path.join(directory, self.FILENAME))


class Runner(object):
    """Run pipeline stages for one configuration

    Parameters
    ----------
    config: PipelineConfig
    """
    def __init__(self, config):
        self.config = config
        self.out = config.out
        self.threads = config.threads
        self.manifest = RunManifest.load(self.out, config.config_hash())

    def path(self, *parts):
        return os.path.join(self.out, *parts)

    def _require(self, path, stage):
        if not os.path.exists(path):
            raise PrerequisiteError(f'{path} is missing; run `firerisk '
                                    f'{stage}` first')
        return path

    def _finish(self, stage, started, counts, artifacts):
        self.manifest.record(stage, counts, time.perf_counter() - started,
                             [os.path.relpath(p, self.out)
                              for p in artifacts])
        self.manifest.save(self.out)
        logger.info('%s finished in %.1fs', stage,
                    time.perf_counter() - started)

    def _window(self):
        return self.config.window.start, self.config.window.end

    def ingest(self):
        """Parse the input trio into normalized files"""
        started = time.perf_counter()
        inputs = self.config.inputs
        sources = {'fire': inputs.fire, 'weather': inputs.weather,
                   'ndvi': inputs.ndvi}
        for key, path in sources.items():
            if path is None:
                raise PrerequisiteError(f'inputs.{key} is not set')
            if not os.path.isfile(path):
                raise FileNotFoundError(f'input file not found: {path}')
        fire = parse_fire_events(inputs.fire)
        weather = parse_weather(inputs.weather, self._window())
        ndvi = parse_ndvi(inputs.ndvi)
        if not fire.records:
            logger.warning('%s holds no usable fire events', inputs.fire)
        outputs = {'fire': self.path('ingest', 'fire_events.csv'),
                   'weather': self.path('ingest', 'weather.csv'),
                   'ndvi': self.path('ingest', 'ndvi.csv')}
        write_fire_events(fire.records, outputs['fire'])
        write_weather(weather.records, outputs['weather'])
        write_ndvi(ndvi.records, outputs['ndvi'])
        counts = {'fire': fire.drops.to_dict(),
                  'weather': weather.drops.to_dict(),
                  'ndvi': ndvi.drops.to_dict()}
        drops = self.path('ingest', 'drops.json')
        dump_json(counts, drops)
        self.manifest.inputs = {path: file_digest(path)
                                for path in sources.values()}
        self._finish('ingest', started, counts,
                     list(outputs.values()) + [drops])
        return counts

    def fuse(self):
        """Join normalized events with station weather and NDVI"""
        started = time.perf_counter()
        paths = [self._require(self.path('ingest', name), 'ingest')
                 for name in ('fire_events.csv', 'weather.csv', 'ndvi.csv')]
        events = parse_fire_events(paths[0]).records
        weather = parse_weather(paths[1], self._window()).records
        ndvi = parse_ndvi(paths[2]).records
        records, summary = fuse(events, weather, ndvi, self.config.join,
                                self.threads)
        return self._write_fused(records, summary, 'fuse', started)

    def _write_fused(self, records, summary, stage, started):
        fused = self.path('fuse', 'fused.csv')
        exclusions = self.path('fuse', 'exclusions.json')
        write_fused(records, fused)
        dump_json(summary.to_dict(), exclusions)
        counts = summary.to_dict()
        self._finish(stage, started, counts, [fused, exclusions])
        return counts

    def synth(self, raw=False):
        """Synthetic fused records, or a raw input trio with `raw`"""
        started = time.perf_counter()
        if raw:
            events, weather, ndvi = synth_raw(self.config.synth,
                                              self.config.seed)
            outputs = [self.path('raw', 'fire.csv'),
                       self.path('raw', 'weather.csv'),
                       self.path('raw', 'ndvi.csv')]
            write_fire_events(events, outputs[0])
            write_weather(weather, outputs[1])
            write_ndvi(ndvi, outputs[2])
            counts = {'events': len(events), 'weather': len(weather),
                      'ndvi': len(ndvi)}
            self._finish('synth', started, counts, outputs)
            return counts
        records = synth_fused(self.config.synth, self.config.seed)
        summary = ExclusionSummary('synth')
        summary.rows = summary.kept = len(records)
        return self._write_fused(records, summary, 'synth', started)

    def featurize(self):
        """Engineer, cap, label, split and scale the fused records"""
        started = time.perf_counter()
        fused = self._require(self.path('fuse', 'fused.csv'), 'fuse')
        parsed = read_fused(fused)
        config = self.config
        feature_set = featurize(parsed.records, config.labels,
                                SplitSpec(config.split.test_fraction,
                                          config.seed),
                                config.labels.cap_quantile,
                                config.features.raw_weather)
        train = self.path('features', 'train.csv')
        test = self.path('features', 'test.csv')
        write_features(feature_set.train, train, feature_set.features)
        write_features(feature_set.test, test, feature_set.features)
        scheme = feature_set.scheme
        metadata = {'features': list(feature_set.features),
                    'mode': scheme.mode,
                    'thresholds': list(scheme.thresholds),
                    'class_names': list(scheme.class_names),
                    'frp_cap': float(feature_set.cap),
                    'scaler': feature_set.scaler.to_dict()}
        metadata_path = self.path('features', 'metadata.json')
        dump_json(metadata, metadata_path)
        counts = {'rows': len(parsed.records),
                  'dropped': parsed.drops.to_dict(),
                  'train': len(feature_set.train),
                  'test': len(feature_set.test),
                  'train_classes': _class_counts(feature_set.train['label']),
                  'test_classes': _class_counts(feature_set.test['label'])}
        self._finish('featurize', started, counts,
                     [train, test, metadata_path])
        return counts

    def _matrix(self, name):
        path = self._require(self.path('features', f'{name}.csv'),
                             'featurize')
        metadata = load_json(self._require(
            self.path('features', 'metadata.json'), 'featurize'))
        return read_features(path), metadata

    def _resample(self):
        if not self.config.resample.enabled:
            return None
        return self.config.resample.model_dump()

    def _tuned_params(self, family, X, y, resample, cache, cv_rows):
        if family in cache:
            return cache[family]
        config = self.config
        params = config.models.params(family)
        if config.search.enabled and family in config.search.families:
            search = config.search.model_copy(update={
                'seed': family_seed(config.seed, family, config.search.seed)})
            result = random_search(X, y, search, family, params, resample,
                                   self.threads,
                                   self.path('logs', 'search', family))
            params = dict(result.best_params)
            cv_rows.extend(search_table_rows(family, result))
        cache[family] = params
        return params

    def _stack_params(self, X, y, resample, cache, cv_rows):
        config = self.config
        learners = [(family, self._tuned_params(family, X, y, resample,
                                                cache, cv_rows))
                    for family in config.stack.base_learners]
        return {'base_learners': learners, 'meta_l2': config.stack.meta_l2,
                'n_folds': config.stack.n_folds, 'resample': resample}

    def _stack_seed(self):
        return family_seed(self.config.seed, 'stack', self.config.stack.seed)

    def _fit_family(self, family, X, y, resample, cache, cv_rows):
        if family == 'stack':
            params = self._stack_params(X, y, resample, cache, cv_rows)
            model = make_model('stack', params, seed=self._stack_seed())
            return model.fit(X, y, threads=self.threads)
        params = self._tuned_params(family, X, y, resample, cache, cv_rows)
        seed = family_seed(self.config.seed, family)
        X_fit, y_fit = resample_rows(X, y, resample, seed)
        model = make_model(family, params, seed=seed,
                           log_dir=self.path('logs', family))
        return model.fit(X_fit, y_fit, threads=self.threads)

    def _threshold(self, stack, X, y, resample, cache, cv_rows):
        """Decision threshold of the stack from training data only"""
        config = self.config.threshold
        if config.source == 'oof':
            probs = stack.oof_proba_[:, 1]
            labels = y == stack.classes_[1]
        else:
            train, held_out = split(y, SplitSpec(config.validation_fraction,
                                                 self._stack_seed()))
            params = self._stack_params(X, y, resample, cache, cv_rows)
            holdout = make_model('stack', params, seed=self._stack_seed())
            holdout.fit(X[train], y[train], threads=self.threads)
            probs = holdout.predict_proba(X[held_out])[:, 1]
            labels = y[held_out] == holdout.classes_[1]
        result = optimize_threshold(probs, labels, config.step, config.low,
                                    config.high)
        logger.info('threshold %.2f chosen on %s data (F1 %.4f)',
                    result.threshold, config.source, result.f1)
        return result

    def train(self):
        """Search, resample and fit every configured family"""
        started = time.perf_counter()
        config = self.config
        matrix, metadata = self._matrix('train')
        X, y = matrix.X, matrix.y
        class_names = metadata['class_names']
        binary = len(class_names) == 2
        tune = config.threshold.enabled and binary
        if tune:
            check_threshold_source(config.threshold.source)
        resample = self._resample()
        families = list(config.train.families)
        if config.train.baseline and 'prior' not in families:
            families.insert(0, 'prior')
        cache, cv_rows, artifacts, counts = {}, [], [], {}
        threshold = None
        for family in families:
            if family == 'prior':
                model = make_model('prior', seed=config.seed).fit(X, y)
            else:
                model = self._fit_family(family, X, y, resample, cache,
                                         cv_rows)
            chosen = None
            if family == 'stack' and tune:
                threshold = self._threshold(model, X, y, resample, cache,
                                            cv_rows)
                chosen = threshold.threshold
            path = self.path('models', f'{family}.json')
            ModelArtifact.from_model(model, matrix.features, class_names,
                                     chosen).save(path)
            artifacts.append(path)
            counts[family] = {'flags': list(model.flags_)}
            logger.info('trained %s', family)
        if tune and threshold is None:
            logger.warning('threshold tuning applies to the stack, which is '
                           'not among train.families; skipped')
        if threshold is not None:
            path = self.path('models', 'threshold.json')
            dump_json({'source': config.threshold.source,
                       'threshold': threshold.threshold,
                       'f1': threshold.f1, 'curve': threshold.curve}, path)
            artifacts.append(path)
        if cv_rows:
            path = self.path('models', 'cv_results.csv')
            write_frame(pd.DataFrame(cv_rows), path)
            artifacts.append(path)
        dump_json({'families': families},
                  self.path('models', 'trained.json'))
        artifacts.append(self.path('models', 'trained.json'))
        counts['train_rows'] = int(len(X))
        self._finish('train', started, counts, artifacts)
        return counts

    def _entry(self, artifact, X, y, features, threshold_override=False):
        n_classes = len(artifact.classes)
        proba = predict_proba(artifact, X, features)
        if threshold_override:
            predictions = (proba[:, 1] >= 0.5).astype(np.int64)
        else:
            predictions = artifact.predict(X, features)
        result = report(y, predictions, list(range(n_classes)),
                        artifact.classes)
        entry = {'report': result.to_dict(), 'auc': None, 'roc': None,
                 'threshold': 0.5 if threshold_override
                 else artifact.threshold}
        if n_classes == 2:
            positive = y == 1
            entry['auc'] = roc_auc(proba[:, 1], positive)
            curve = roc_curve(proba[:, 1], positive)
            entry['roc'] = {'fpr': curve.fpr.tolist(),
                            'tpr': curve.tpr.tolist(),
                            'threshold': curve.thresholds.tolist()}
        return entry

    def evaluate(self):
        """Score every trained model on the test partition"""
        started = time.perf_counter()
        trained = load_json(self._require(
            self.path('models', 'trained.json'), 'train'))
        test, metadata = self._matrix('test')
        train, _ = self._matrix('train')
        evaluation = {'class_names': metadata['class_names'],
                      'features': list(test.features),
                      'n_test': int(len(test.X)),
                      'models': {}, 'order': []}
        for family in trained['families']:
            artifact = load_artifact(self._require(
                self.path('models', f'{family}.json'), 'train'))
            evaluation['models'][family] = self._entry(
                artifact, test.X, test.y, test.features)
            evaluation['order'].append(family)
            if artifact.threshold is not None:
                name = f'{family}_default'
                evaluation['models'][name] = self._entry(
                    artifact, test.X, test.y, test.features, True)
                evaluation['order'].append(name)
        threshold_path = self.path('models', 'threshold.json')
        evaluation['threshold'] = load_json(threshold_path) \
            if os.path.exists(threshold_path) else None
        evaluation['vif'] = None
        evaluation['correlation'] = None
        try:
            evaluation['vif'] = [list(row) for row in
                                 vif_table(train.X, list(train.features))]
            matrix, constant = correlation_matrix(train.X)
            evaluation['correlation'] = {
                'features': list(train.features),
                'matrix': matrix.tolist(),
                'constant': [name for name, flag in
                             zip(train.features, constant) if flag]}
        except ValueError as exc:
            logger.warning('feature diagnostics skipped: %s', exc)
        fused = self.path('fuse', 'fused.csv')
        evaluation['eda'] = None
        if os.path.exists(fused):
            records = read_fused(fused).records
            evaluation['eda'] = {
                'monthly': monthly_counts(records),
                'frp_by_prcp': frp_by_precipitation(records)}
        path = self.path('evaluation', 'metrics.json')
        dump_json(evaluation, path)
        files = render(evaluation, self.path('reports'))
        counts = {name: {'accuracy': entry['report']['accuracy'],
                         'macro_f1': entry['report']['macro_avg']['f1']}
                  for name, entry in evaluation['models'].items()}
        self._finish('evaluate', started, counts, [path] + files)
        return evaluation

    def report(self):
        """Re-render the report files from a persisted evaluation"""
        started = time.perf_counter()
        evaluation = load_json(self._require(
            self.path('evaluation', 'metrics.json'), 'evaluate'))
        files = render(evaluation, self.path('reports'))
        self._finish('report', started, {'files': len(files)}, files)
        return files

    def predict(self, features_path, family='stack', output=None):
        """Apply a persisted model and its threshold to new feature rows

        Parameters
        ----------
        features_path: str
            Feature matrix written by `featurize` (labels optional)
        family: str
            Which artifact under `models/` to apply
        output: str, optional
            Destination; defaults to `<out>/predict/predictions.csv`
        """
        started = time.perf_counter()
        artifact = load_artifact(self._require(
            self.path('models', f'{family}.json'), 'train'))
        matrix = read_features(features_path)
        proba = predict_proba(artifact, matrix.X, matrix.features)
        predictions = artifact.predict(matrix.X, matrix.features)
        frame = pd.DataFrame(proba, columns=[f'p_{name}' for name in
                                             artifact.classes])
        frame['predicted'] = [artifact.classes[i] for i in predictions]
        output = output or self.path('predict', 'predictions.csv')
        write_frame(frame, output)
        counts = {'rows': int(len(frame)),
                  'predicted': _class_counts(frame['predicted'])}
        self._finish('predict', started, counts, [output])
        return frame


def _class_counts(values):
    counts = pd.Series(values).value_counts()
    return {str(k): int(v) for k, v in sorted(counts.items())}
