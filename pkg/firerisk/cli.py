"""Command line entry point

    firerisk [--config run.toml] [--seed N] [--threads N] [--out DIR]
             [--set key=value ...] [--verbose] <command>

Commands: ingest, fuse, featurize, train, evaluate, predict, synth, report.
Exit status is 0 on success, 1 for validation and leakage errors and 2 for
I/O, schema and stage-order errors.
"""
import argparse
import json
import logging
import sys

from pydantic import ValidationError

from .config import load_config
from .exceptions import FireRiskError
from .runner import Runner

logger = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='firerisk',
        description='Fire-intensity risk pipeline: ingest, fuse, featurize, '
                    'train, evaluate',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument('--config', help='TOML run configuration')
    parser.add_argument('--seed', type=int, help='master seed')
    parser.add_argument('--threads', type=int, help='worker count')
    parser.add_argument('--out', help='run directory')
    parser.add_argument('--set', dest='overrides', action='append',
                        default=[], metavar='KEY=VALUE',
                        help='override a dotted configuration key')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='debug logging')
    commands = parser.add_subparsers(dest='command', required=True)
    for name in ('ingest', 'fuse', 'featurize', 'train', 'evaluate',
                 'report'):
        commands.add_parser(name)
    predict = commands.add_parser('predict')
    predict.add_argument('features', help='feature matrix file')
    predict.add_argument('--model', default='stack',
                         help='model family under <out>/models')
    predict.add_argument('--output', help='predictions file')
    synth = commands.add_parser('synth')
    synth.add_argument('--raw', action='store_true',
                       help='write a raw fire/weather/NDVI trio instead of '
                            'fused records')
    return parser


def run(args):
    config = load_config(args.config, args.overrides, seed=args.seed,
                         threads=args.threads, out=args.out)
    runner = Runner(config)
    if args.command == 'predict':
        runner.predict(args.features, args.model, args.output)
        return None
    if args.command == 'synth':
        return runner.synth(raw=args.raw)
    result = getattr(runner, args.command)()
    if args.command == 'evaluate':
        return {name: entry['report']['macro_avg']
                for name, entry in result['models'].items()}
    return result


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        summary = run(args)
    except FireRiskError as exc:
        logger.error('%s', exc)
        return exc.exit_code
    except ValidationError as exc:
        logger.error('invalid configuration:\n%s', exc)
        return 1
    except OSError as exc:
        logger.error('%s', exc)
        return 2
    if summary is not None:
        print(json.dumps(summary, sort_keys=True, indent=1))
    return 0


if __name__ == '__main__':
    sys.exit(main())
