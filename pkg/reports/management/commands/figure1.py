from reports.command_base import RunConfigCommand
from reports.figures import cmd_figure1


class Command(RunConfigCommand):
    help = 'Emit recovery variance given default against default probability (figure1.csv)'

    def run(self, config, /, **options):
        path = cmd_figure1(config)
        self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
