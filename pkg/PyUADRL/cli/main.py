'''
Command line interface of PyUADRL.

    pyuadrl train --config <file> --seed <u64> --out <dir>
    pyuadrl map --checkpoint <file> [--rule greedy] [--normalize]
    pyuadrl scatter --checkpoint <file> --episodes <n>
    pyuadrl replicate --figure {1a,1b,2b} --seed <u64>

Exit codes: 0 success, 2 configuration error, 3 I/O error.

@date: 19/10/2026
'''

import argparse
import sys

from PyUADRL.cli.checkpoint import (CorruptFile, FormatVersionMismatch,
                                    check_fits, read_checkpoint)
from PyUADRL.cli.config import (ConfigInvalid, ExperimentConfig, FIGURES,
                                load_config, preset)
from PyUADRL.cli.exports import write_map_csv, write_scatter_csv
from PyUADRL.cli.render import ShapeMismatch, render_ascii
from PyUADRL.cli.runner import OutputIOError, build_environment, run
from PyUADRL.general import streams
from PyUADRL.general.printers import ConsolePrinter
from PyUADRL.uncertainty.maps import (normalize, state_map,
                                      visitation_epistemic_correlation)


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _seed(text):
    seed = int(text)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError('seed must be an unsigned 64 bit '
                                         'integer')
    return seed


def build_parser():
    parser = argparse.ArgumentParser(
        prog='pyuadrl',
        description=(
            'Uncertainty-decomposed distributional RL on tabular MDPs:\n'
            'train anchored quantile ensembles, render epistemic and\n'
            'aleatoric uncertainty maps, replicate the grid world and\n'
            'synthetic clinical experiments.'),
        formatter_class=argparse.RawTextHelpFormatter)
    commands = parser.add_subparsers(dest='command', required=True)

    train = commands.add_parser('train', help='run an experiment config')
    train.add_argument('--config', required=True,
                       help='experiment config file (.json or .toml)')
    train.add_argument('--seed', type=_seed, required=True)
    train.add_argument('--out', required=True, help='output directory')
    train.add_argument('--n-steps', type=int, default=None,
                       help='override the number of training steps')

    umap = commands.add_parser('map', help='uncertainty map of a checkpoint')
    umap.add_argument('--checkpoint', required=True)
    umap.add_argument('--rule', default='greedy',
                      choices=['greedy', 'fixed', 'behavior'])
    umap.add_argument('--action', type=int, default=None,
                      help="action of the 'fixed' rule")
    umap.add_argument('--normalize', action='store_true',
                      help='min-max normalise both components')
    umap.add_argument('--csv', default=None,
                      help='write the map to this CSV file')

    scatter = commands.add_parser(
        'scatter', help='visitation vs epistemic uncertainty of a checkpoint')
    scatter.add_argument('--checkpoint', required=True)
    scatter.add_argument('--episodes', type=int, required=True)
    scatter.add_argument('--seed', type=_seed, default=None,
                         help='rollout seed (default: training seed)')
    scatter.add_argument('--csv', default=None,
                         help='write the scatter rows to this CSV file')

    replicate = commands.add_parser('replicate',
                                    help='run a built-in experiment')
    replicate.add_argument('--figure', required=True, choices=sorted(FIGURES))
    replicate.add_argument('--seed', type=_seed, required=True)
    replicate.add_argument('--out', default=None, help='output directory')
    replicate.add_argument('--n-steps', type=int, default=None,
                           help='override the number of training steps')
    return parser


def _load(checkpoint):
    '''Ensemble, ExperimentConfig and rebuilt environment of a
    checkpoint written by a run.'''
    ensemble, train_config, experiment = read_checkpoint(checkpoint)
    if experiment is None:
        raise ConfigInvalid('checkpoint {} carries no experiment config, the '
                            'environment cannot be rebuilt'.format(checkpoint))
    config = ExperimentConfig.from_dict(experiment)
    mdp, dataset = build_environment(config)
    check_fits(ensemble, mdp)
    return ensemble, config, mdp, dataset


def _command_train(args, printer):
    config = load_config(args.config).with_overrides(
        seed=args.seed, outputs=args.out, n_steps=args.n_steps)
    manifest = run(config, printer=printer)
    printer.prints('Manifest written to {}/manifest.json'.format(args.out))
    return manifest


def _command_replicate(args, printer):
    config = preset(args.figure, args.seed, outputs=args.out)
    if args.n_steps is not None:
        config = config.with_overrides(n_steps=args.n_steps)
    return run(config, printer=printer)


def _command_map(args, printer):
    ensemble, config, mdp, dataset = _load(args.checkpoint)
    try:
        umap = state_map(ensemble, mdp, rule=args.rule, action=args.action,
                         dataset=dataset)
    except ValueError as err:
        raise ConfigInvalid(str(err))
    if args.normalize:
        umap = normalize(umap)
    if config.is_grid:
        printer.prints(render_ascii(umap, config.env))
    if args.csv is not None:
        write_map_csv(umap, args.csv)
    else:
        for estimate in umap.estimates:
            printer.prints('{:d} {:d} {!r} {!r}'.format(
                estimate.state, estimate.action, estimate.epistemic,
                estimate.aleatoric))
    return umap


def _command_scatter(args, printer):
    ensemble, config, mdp, _ = _load(args.checkpoint)
    if args.episodes < 1:
        raise ConfigInvalid('--episodes must be positive')
    seed = config.seed if args.seed is None else args.seed
    correlation = visitation_epistemic_correlation(
        ensemble, mdp, args.episodes,
        streams.make_rng(seed, streams.ROLLOUT),
        max_steps=config.train.max_episode_steps)
    if args.csv is not None:
        write_scatter_csv(correlation, mdp.terminal_mask, args.csv)
    printer.prints('spearman rho {!r} over {:d} visited states ({:d} '
                   'unvisited)'.format(correlation.rho,
                                       len(correlation.visited),
                                       len(correlation.unvisited)))
    return correlation


COMMANDS = {'train': _command_train, 'replicate': _command_replicate,
            'map': _command_map, 'scatter': _command_scatter}


def main(argv=None, printer=None):
    '''Entry point of the pyuadrl console script, returns the exit
    code.'''
    printer = ConsolePrinter() if printer is None else printer
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args, printer)
    except (ConfigInvalid, FormatVersionMismatch, ShapeMismatch) as err:
        printer.prints('*** PyUADRL ERROR! ' + str(err))
        return EXIT_CONFIG
    except (OutputIOError, CorruptFile, OSError) as err:
        printer.prints('*** PyUADRL ERROR! ' + str(err))
        return EXIT_IO
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
