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
Everything that can go wrong, in two piles: bad data and bad configuration.

Both derive from **ValueError** so that callers treating contract violations as value errors
keep working. The CLI maps *ConfigError* to exit code 2 and *DataError* to exit code 3.
"""


class LeakageError(ValueError):
    """
    Root of all the errors raised by this package.
    """


class DataError(LeakageError):
    """
    The data (recordings, windows, scores) cannot support the requested operation.
    """


class ConfigError(LeakageError):
    """
    A configuration, schema or experiment specification is not valid.
    """


# pylint: disable=C0115
# data problems
class MissingColumn(DataError):
    pass


class EmptyDataset(DataError):
    pass


class RateMismatch(DataError):
    pass


class EmptySession(DataError):
    pass


class NoHeadStream(DataError):
    pass


class MissingEstimate(DataError):
    pass


class MissingStream(DataError):
    pass


class TooShort(DataError):
    pass


class NoTrainingData(DataError):
    pass


class ArityMismatch(DataError):
    pass


class EmptyEnrollment(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyGallery(DataError):
    pass


class TooFewSubjects(DataError):
    pass


class EmptyScores(DataError):
    pass


class EmptyTrials(DataError):
    pass


class InsufficientSessions(DataError):
    pass


class LeakageAuditError(DataError):
    """
    A runtime audit caught train/test contamination or a NaN in a window.
    """


class IoFailure(DataError):
    pass


# configuration problems
class InvalidConfig(ConfigError):
    pass


class InvalidB(ConfigError):
    pass


class InvalidBounds(ConfigError):
    pass


class ParityViolation(ConfigError):
    pass


class EmptySelection(ConfigError):
    pass


class DuplicateExperiment(ConfigError):
    pass
