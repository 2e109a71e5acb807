from reports.command_base import RunConfigCommand
from reports.figures import cmd_figure4


class Command(RunConfigCommand):
    help = 'Emit the regularized recovery cap R_m(p) (figure4.csv)'

    def run(self, config, /, **options):
        path = cmd_figure4(config)
        self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
