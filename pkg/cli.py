"""
Command-line driver.

    gnog-sph run --scene oscillating_plate --ratio 20 --method gnog --out plate
    gnog-sph run --config plate.ini --xi 2
    gnog-sph scenes

Settings are resolved as scene defaults < GNOGSPH_* environment variables <
config file < command-line flags. Exit codes: 0 success, 1 usage or
configuration error, 2 numerical abort.
"""
import argparse
import configparser
import logging
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

import scenes
from diagnostics import energy_reports, momentum_report, uniformity_metric
from errors import ConfigError, SimulationAbort
from forces import METHODS, forces_for
from integrator import Solver
from save_and_load import load_state, restore, save_state
from snapshot import FORMATS, TimeSeries, read_time_series, write_snapshot

logger = logging.getLogger(__name__)

ENV_PREFIX = 'GNOGSPH_'
EXIT_OK, EXIT_USAGE, EXIT_ABORT = 0, 1, 2

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')

# run settings and their types; scene parameters live in the scene registry
RUN_KEYS = {
    'scene': str, 'method': str, 'xi': float, 'out': str, 'snapshot_every': int, 'threads': int,
    'deterministic': bool, 'format': str, 'plot': bool, 'resume': str, 'dissipation': bool,
    'log_level': str,
}
# run settings forwarded to the scene
SCENE_KEYS = ('ratio', 'dp', 'end_time', 'output_interval')

TIME_SERIES = 'time_series.csv'
RESUME_FILE = 'resume.pkl'


@dataclass
class RunConfig:
    scene: str
    method: str = 'gnog'
    xi: float = None
    out: str = 'output'
    snapshot_every: int = 10
    threads: int = 1
    deterministic: bool = True
    format: str = 'csv'
    plot: bool = False
    resume: str = None
    dissipation: bool = True
    log_level: str = 'INFO'
    scene_params: dict = field(default_factory=dict)
    material: dict = field(default_factory=dict)
    body_materials: dict = field(default_factory=dict)

    def provenance(self):
        """flat {key: value} description of the run for output headers"""
        header = {k: v for k, v in asdict(self).items()
                  if k not in ('scene_params', 'material', 'body_materials', 'log_level', 'resume')}
        for k, v in sorted(self.scene_params.items()):
            header['scene.%s' % k] = v
        for k, v in sorted(self.material.items()):
            header['material.%s' % k] = v
        for body, values in sorted(self.body_materials.items()):
            for k, v in sorted(values.items()):
                header['material.%s.%s' % (body, k)] = v
        return header


def convert(key, value, kind):
    """convert a raw setting, raising ConfigError naming the key and the expected type"""
    if value is None or isinstance(value, kind) and not (kind is int and isinstance(value, bool)):
        return value
    try:
        if kind is bool:
            lowered = str(value).strip().lower()
            if lowered not in ('1', '0', 'true', 'false', 'yes', 'no', 'on', 'off'):
                raise ValueError(value)
            return lowered in ('1', 'true', 'yes', 'on')
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError('%s expects %s, got %r' % (key, kind.__name__, value), key=key)


class UsageParser(argparse.ArgumentParser):
    """argument parser raising ConfigError instead of exiting"""

    def error(self, message):
        flags = sorted(s for s in self._option_string_actions if s.startswith('--'))
        raise ConfigError('%s (valid flags: %s)' % (message, ' '.join(flags)))


def build_parser():
    parser = UsageParser(prog='gnog-sph', description='updated Lagrangian SPH for elastic and plastic solids')
    sub = parser.add_subparsers(dest='command', parser_class=UsageParser)
    add_run_arguments(sub.add_parser('run', help='run a benchmark scene'))
    sub.add_parser('scenes', help='list the scenes and their parameters')
    return parser


def add_run_arguments(run):
    run.add_argument('--scene', help='scene name, see "gnog-sph scenes"')
    run.add_argument('--config', help='INI file with [run], [scene], [material] sections')
    run.add_argument('--ratio', help='resolution ratio of the scene (H/dp, L/dp or R/dp)')
    run.add_argument('--dp', help='particle spacing, for scenes declaring dp')
    run.add_argument('--method', help='discretisation: %s' % ', '.join(METHODS))
    run.add_argument('--xi', help='hourglass coefficient for every material')
    run.add_argument('--end-time', dest='end_time')
    run.add_argument('--output-interval', dest='output_interval', help='time between samples')
    run.add_argument('--snapshot-every', dest='snapshot_every', help='write a snapshot every N samples')
    run.add_argument('--out', help='output directory')
    run.add_argument('--threads', help='threads for the neighbor search')
    run.add_argument('--deterministic', action=argparse.BooleanOptionalAction, default=None,
                     help='canonical neighbor order independent of the thread count')
    run.add_argument('--dissipation', action=argparse.BooleanOptionalAction, default=None,
                     help='Riemann impedance term in the pressure force')
    run.add_argument('--format', help='snapshot format: %s' % ', '.join(FORMATS))
    run.add_argument('--plot', action=argparse.BooleanOptionalAction, default=None,
                     help='save a history plot at the end of the run')
    run.add_argument('--resume', help='resume file written by an earlier run')
    run.add_argument('--set', action='append', default=[], metavar='KEY=VALUE', help='scene parameter')
    run.add_argument('--log-level', dest='log_level', help='one of %s' % ', '.join(LOG_LEVELS))
    return run


def _split_assignment(text):
    key, sep, value = text.partition('=')
    if not sep or not key.strip():
        raise ConfigError('expected KEY=VALUE, got %r' % (text,), key=text)
    return key.strip(), value.strip()


def read_config_file(path):
    """
    :return: (run settings, scene parameters, common material keys, {body: material keys})
    """
    if not os.path.exists(path):
        raise ConfigError('config file %s does not exist' % path, key='config')
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError('cannot parse %s: %s' % (path, e), key='config') from e
    run, scene, common, bodies = {}, {}, {}, {}
    for section in parser.sections():
        values = dict(parser.items(section))
        if section == 'run':
            for key in values:
                if key not in RUN_KEYS and key not in SCENE_KEYS:
                    raise ConfigError('unknown key %r in [run] of %s' % (key, path), key=key)
            run.update(values)
        elif section == 'scene':
            scene.update(values)
        elif section == 'material':
            common.update(values)
        elif section.startswith('material.'):
            bodies[section[len('material.'):]] = values
        else:
            raise ConfigError('unknown section [%s] in %s' % (section, path), key=section)
    return run, scene, common, bodies


def _material_values(values, where):
    converted = {}
    for key, value in values.items():
        if key not in scenes.MATERIAL_KEYS:
            raise ConfigError('unknown material key %r in %s, expected one of %s'
                              % (key, where, ', '.join(scenes.MATERIAL_KEYS)), key=key)
        converted[key] = convert(key, value, scenes.MATERIAL_KEYS[key])
    return converted


def parse_config(argv=None, environ=None):
    """
    resolve a RunConfig from flags, an optional config file and the environment
    :param argv: arguments after the 'run' subcommand
    :param environ: mapping used for GNOGSPH_* variables, defaults to os.environ
    """
    environ = os.environ if environ is None else environ
    args = add_run_arguments(UsageParser(prog='gnog-sph run')).parse_args(list(argv or []))
    settings, scene_params, common, bodies = {}, {}, {}, {}

    for key in list(RUN_KEYS) + list(SCENE_KEYS) + ['config']:
        env = environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            settings[key] = env

    config_path = args.config or settings.pop('config', None)
    settings.pop('config', None)
    if config_path:
        run, scene, common, bodies = read_config_file(config_path)
        settings.update(run)
        scene_params.update(scene)

    for key in list(RUN_KEYS) + list(SCENE_KEYS):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    for text in args.set:
        key, value = _split_assignment(text)
        scene_params[key] = value

    for key in SCENE_KEYS:
        if key in settings:
            scene_params[key] = settings.pop(key)
    if 'xi' in settings:
        common['xi'] = settings.pop('xi')

    if not settings.get('scene'):
        raise ConfigError('no scene given, choose one of %s' % ', '.join(sorted(scenes.SCENES)), key='scene')
    resolved = {key: convert(key, value, RUN_KEYS[key]) for key, value in settings.items()}
    config = RunConfig(**resolved)
    config.method = config.method.lower()
    if config.method not in METHODS:
        raise ConfigError('method %r not implemented, choose one of {%s}' % (config.method, ', '.join(METHODS)),
                          key='method')
    if config.format not in FORMATS:
        raise ConfigError('format %r not supported, choose one of %s' % (config.format, ', '.join(FORMATS)),
                          key='format')
    if config.log_level.upper() not in LOG_LEVELS:
        raise ConfigError('log_level must be one of %s' % ', '.join(LOG_LEVELS), key='log_level')
    if config.threads < 1 or config.snapshot_every < 1:
        raise ConfigError('threads and snapshot_every must be >= 1', key='threads')
    if config.scene not in scenes.SCENES:
        raise ConfigError('unknown scene %r, choose one of %s' % (config.scene, ', '.join(sorted(scenes.SCENES))),
                          key='scene')
    entry = scenes.SCENES[config.scene]
    config.scene_params = {key: entry.param(key).convert(value) for key, value in scene_params.items()}
    config.material = _material_values(common, '[material]')
    config.xi = config.material.get('xi')
    config.body_materials = {body: _material_values(values, '[material.%s]' % body)
                             for body, values in bodies.items()}
    return config


def sample_row(solver, observers):
    """one time-series row: energies per body, momenta, uniformity and observer channels"""
    s, t = solver.system, solver.t
    row = {'time': t}
    for name, report in energy_reports(s, t).items():
        row['%s_kinetic' % name] = report.kinetic
        row['%s_strain' % name] = report.strain
        row['%s_energy' % name] = report.total
    linear, angular = momentum_report(s)
    for axis, value in zip('xyz', linear):
        row['p%s' % axis] = float(value)
    if np.ndim(angular) == 0:
        row['angular'] = angular
    else:
        for axis, value in zip('xyz', angular):
            row['L%s' % axis] = float(value)
    if solver.table is not None:
        solver.table.refresh(s.position, solver.kernel)
        row['uniformity'] = uniformity_metric(s, solver.table)
    for observer in observers:
        values = observer.record(s, t)
        row.update({k: v for k, v in values.items() if k != 'time'})
    return row


def make_solver(scene, config):
    kernel = scene.kernel()
    system = scene.build_system()
    solver = Solver(system, kernel, workers=config.threads, deterministic=config.deterministic)
    for force in forces_for(config.method, kernel, config.dissipation):
        solver.add(force)
    return solver


def run(config):
    """
    execute a resolved RunConfig
    :return: exit code, 0 on completion and 2 on numerical abort
    """
    scene = scenes.build(config.scene, config.scene_params)
    scene.override_materials(config.material, config.body_materials)
    solver = make_solver(scene, config)
    header = dict(config.provenance(), dp=scene.dp, dim=scene.dim, particles=len(solver.system))
    os.makedirs(config.out, exist_ok=True)

    series = TimeSeries()
    series_path = os.path.join(config.out, TIME_SERIES)
    if config.resume:
        restore(solver, load_state(config.resume))
        if os.path.exists(series_path):
            previous = read_time_series(series_path)
            series.rows = previous[previous['time'] <= solver.t * (1 + 1e-12)].to_dict('records')
        logger.info('resumed %s at t=%g', config.scene, solver.t)

    count = {'samples': len(series)}
    interval = scene.output_interval

    def write_sample(index, suffix=None):
        name = 'snap_%05d.%s' % (index, config.format) if suffix is None else '%s.%s' % (suffix, config.format)
        write_snapshot(solver.system, os.path.join(config.out, name), config.format,
                       dict(header, time=repr(solver.t)))

    def on_sample(active):
        index = count['samples']
        series.append(sample_row(active, scene.observers))
        if index % config.snapshot_every == 0:
            write_sample(index)
            save_state(active, os.path.join(config.out, RESUME_FILE))
        count['samples'] += 1

    logger.info('running %s (%s) to t=%g with %d particles', config.scene, config.method,
                scene.end_time, len(solver.system))
    try:
        solver.run(scene.end_time, interval, on_sample)
        if not series.rows or series.rows[-1]['time'] < solver.t * (1 - 1e-12):
            on_sample(solver)
        save_state(solver, os.path.join(config.out, RESUME_FILE))
    except SimulationAbort as e:
        logger.error('numerical abort at t=%s, particle %s: %s', e.time, e.particle, e)
        write_sample(0, 'abort')
        series.write(series_path, header)
        return EXIT_ABORT
    series.write(series_path, header)
    if config.plot:
        from visualization import plot_history
        plot_history(series.frame(), os.path.join(config.out, 'history.png'), config.scene)
    logger.info('finished %s at t=%g after %d acoustic steps', config.scene, solver.t,
                solver.schedule.total_substeps)
    return EXIT_OK


def list_scenes(stream=None):
    stream = stream or sys.stdout
    for name in sorted(scenes.SCENES):
        entry = scenes.SCENES[name]
        stream.write('%s: %s\n' % (name, entry.description))
        for p in entry.params:
            choices = ' {%s}' % ','.join(map(str, p.choices)) if p.choices else ''
            stream.write('    %-16s %-6s default %r%s %s\n' % (p.name, p.type.__name__, p.default, choices, p.help))


def setup_logging(level):
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if not argv or argv[0] not in ('run', 'scenes'):
            build_parser().parse_args(argv)
            build_parser().print_help()
            return EXIT_USAGE
        if argv[0] == 'scenes':
            list_scenes()
            return EXIT_OK
        config = parse_config(argv[1:])
    except ConfigError as e:
        setup_logging(os.environ.get(ENV_PREFIX + 'LOG_LEVEL', 'INFO'))
        logger.error('%s', e)
        return EXIT_USAGE
    setup_logging(config.log_level)
    try:
        return run(config)
    except ConfigError as e:
        logger.error('%s', e)
        return EXIT_USAGE
    except OSError as e:
        logger.error('%s', e)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
