from src.base import Pipeline
from src.osad.config import RunConfig
from src.osad.setup.design import cmd_design
from src.osad.setup.detect import cmd_run
from src.osad.setup.evaluate import cmd_eval
from src.osad.setup.learn import cmd_learn
from src.osad.setup.report import cmd_report
from src.osad.setup.synth import cmd_synth


class OsadPipeline(Pipeline):
    name = "osad"
    project_name = "osad-toolkit"

    def __init__(self, cfg: RunConfig):
        super().__init__(cfg)

    def synth(self):
        cmd_synth(self.cfg)

    def learn(self):
        cmd_learn(self.cfg)

    def design(self):
        cmd_design(self.cfg)

    def detect(self):
        cmd_run(self.cfg)

    def evaluate(self):
        cmd_eval(self.cfg)

    def report(self):
        cmd_report(self.cfg)
