# MIT License
#
# Copyright (c) 2026 vr-leakage contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""
Run-wide settings: the environment gives the defaults, command-line flags override them.
"""
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from vr_leakage.errors import InvalidConfig

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class RunSettings:
    """
    :param seed: master seed (folds, generator, privacy noise)
    :param folds: cross-validation fold count
    :param workers: experiments run concurrently (1 = inline)
    :param log_level: logging level name
    :param out_dir: where outputs go
    """

    seed: int = 0
    folds: int = 4
    workers: int = 1
    log_level: str = "INFO"
    out_dir: Path = Path(".")

    def __post_init__(self):
        if self.folds < 2:
            raise InvalidConfig(f"'folds' {self.folds} must be >= 2")
        if self.workers < 1:
            raise InvalidConfig(f"'workers' {self.workers} must be >= 1")
        level = str(self.log_level).upper()
        if not isinstance(logging.getLevelName(level), int):
            raise InvalidConfig(f"'log_level' {self.log_level} is not a logging level")
        object.__setattr__(self, "log_level", level)
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    def override(self, **changes) -> "RunSettings":
        """
        :param changes: field values; *None* means "keep"
        :return: the updated settings
        """
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def configure_logging(self) -> None:
        """
        Set up the root logger once for a command-line run.
        """
        logging.basicConfig(level=self.log_level, format=LOG_FORMAT, force=True)


# pylint: disable=R0903
class SettingsFactory:
    """
    Creates **RunSettings** from the ENV and some defaults.
    """

    @staticmethod
    def from_env(environ: Optional[dict] = None) -> RunSettings:
        """
        :param environ: variables to read (defaults to ``os.environ``)
        :return: the settings
        """
        env = os.environ if environ is None else environ
        try:
            return RunSettings(
                seed=int(env.get("VRLEAK_SEED", "0")),
                folds=int(env.get("VRLEAK_FOLDS", "4")),
                workers=int(env.get("VRLEAK_WORKERS", "1")),
                log_level=env.get("VRLEAK_LOG_LEVEL", "INFO"),
                out_dir=Path(env.get("VRLEAK_OUT", ".")),
            )
        except ValueError as e:
            if isinstance(e, InvalidConfig):
                raise
            raise InvalidConfig(f"bad VRLEAK_* environment value: {e}") from e
