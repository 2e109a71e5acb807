from reports.command_base import RunConfigCommand
from reports.figures import cmd_figure2


class Command(RunConfigCommand):
    help = 'Emit VOD curves of one name for each recovery model (figure2.csv)'

    def run(self, config, /, **options):
        path = cmd_figure2(config)
        self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
