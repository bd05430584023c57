"""Entry point of the incentive design toolchain.

Usage:
    python -m nbs_logistics.main baseline --config=lunar_nominal
    python -m nbs_logistics.main scenario --scenario=2 --alpha=0.6
    python -m nbs_logistics.main sweep --spec=configs/alpha_theta.json \
        --out=/tmp/contour
    python -m nbs_logistics.main curves export --out=/tmp/curves

Flags not given on the command line may be set through
NBS_LOGISTICS_<FLAG_NAME_UPPER> environment variables.
"""

import os
from typing import Mapping, Optional

from absl import app, flags

from nbs_logistics import logger, manager

ENV_PREFIX = 'NBS_LOGISTICS_'

FLAGS: flags.FlagValues = flags.FLAGS


def apply_environment_overrides(flag_values: flags.FlagValues,
                                environ: Optional[Mapping[str, str]] = None):
    """Sets every flag absent from the command line from its environment
    variable.

    Raises:
        manager.UsageError: a variable does not parse as its flag.
    """
    if environ is None:
        environ = os.environ
    for name in list(flag_values):
        flag = flag_values[name]
        variable = ENV_PREFIX + name.upper()
        if flag.present or variable not in environ:
            continue
        try:
            flag.parse(environ[variable])
        except (flags.Error, ValueError) as error:
            raise manager.UsageError(f'{variable}: {error}') from error
        logger.log(f'{name} = {flag.value} from {variable}')


def main(argv):
    """Runs the command in argv[1:] and returns its exit code."""
    logger.initialize_start_time()
    try:
        apply_environment_overrides(FLAGS)
    except manager.UsageError as error:
        logger.log(f'Error: {error}')
        return manager.EXIT_CONFIG
    return manager.run_command(argv, FLAGS)


if __name__ == '__main__':
    app.run(main)
