from django.apps import AppConfig


class SimulatorConfig(AppConfig):
    name = 'simulator'
    verbose_name = 'Singlet NMR quantum computer simulator'
