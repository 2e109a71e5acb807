import json
import logging

from django.core.management.base import BaseCommand, CommandError

from pricing.exceptions import InvariantViolation, TrancheRiskError

from .config import load_run_config

logger = logging.getLogger(__name__)

EXIT_ASSERTION_FAILED = 1
EXIT_INPUT_ERROR = 2


class RunConfigCommand(BaseCommand):
    """
    Management command driven by a run configuration.

    Input errors exit with status 2 and failed checks with status 1.
    """
    check_flag = False

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Run configuration file (TOML)')
        parser.add_argument('--portfolio', help='Portfolio CSV or JSON file; demo portfolio if omitted')
        parser.add_argument('--out', help='Output directory')
        parser.add_argument(
            '--model',
            action='append',
            dest='models',
            help='Recovery model spec, e.g. deterministic or stochastic:regularized,alpha=1 (repeatable)',
        )
        parser.add_argument('--seed', type=int, help='Random seed')
        parser.add_argument('--nodes', type=int, help='Factor quadrature nodes')
        parser.add_argument('--pmax', type=float, help='Near-default probability cap')
        if self.check_flag:
            parser.add_argument('--check', action='store_true', help='Exit nonzero if a check fails')

    def handle(self, *args, **options):
        try:
            config = load_run_config(
                options.get('config'),
                portfolio=options.get('portfolio'),
                out=options.get('out'),
                models=options.get('models'),
                seed=options.get('seed'),
                nodes=options.get('nodes'),
                pmax=options.get('pmax'),
            )
            self.run(config, **options)
        except InvariantViolation as e:
            for failure in e.failures:
                self.stderr.write(self.style.ERROR(f'  ✗ {failure}'))
            raise CommandError(str(e), returncode=EXIT_ASSERTION_FAILED)
        except TrancheRiskError as e:
            raise CommandError(str(e), returncode=EXIT_INPUT_ERROR)
        except OSError as e:
            raise CommandError(f'I/O error: {e}', returncode=EXIT_INPUT_ERROR)

    def run(self, config, /, **options):
        raise NotImplementedError('subclasses of RunConfigCommand must provide a run() method')

    def write_json(self, payload, path=None):
        text = json.dumps(payload, indent=2, sort_keys=True)
        if path is not None:
            path.write_text(text + '\n')
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
        else:
            self.stdout.write(text)
