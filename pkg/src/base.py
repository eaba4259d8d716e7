from abc import ABC, abstractmethod
from typing import Any

from utils.config import setup_project


class Pipeline(ABC):
    name: str            # slug, e.g. "osad"
    project_name: str    # LangSmith project traced stages report to
    stages: tuple = ("synth", "learn", "design", "run", "eval", "report")

    def __init__(self, cfg: Any):
        self.cfg = cfg
        setup_project(self.project_name)

    @abstractmethod
    def synth(self) -> None: ...

    @abstractmethod
    def learn(self) -> None: ...

    @abstractmethod
    def design(self) -> None: ...

    @abstractmethod
    def detect(self) -> None: ...

    @abstractmethod
    def evaluate(self) -> None: ...

    def report(self) -> None:
        pass  # Override if needed

    def stage(self, verb: str) -> None:
        {
            "synth": self.synth,
            "learn": self.learn,
            "design": self.design,
            "run": self.detect,
            "eval": self.evaluate,
            "report": self.report,
        }[verb]()

    def run(self) -> None:
        for verb in self.stages:
            self.stage(verb)
            print()
