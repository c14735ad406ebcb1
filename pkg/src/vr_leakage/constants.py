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
String vocabularies used across the package. These are plain classes with string attributes
rather than enums so that values round-trip through JSON/CSV untouched.
"""
from typing import List

from vr_leakage.errors import InvalidConfig


class ConstantList:
    """
    Uses reflection to check for what's been defined. Typically, the class would be:

    | class Foo(ConstantList):
    |    BAR = "bar"
    |    BAZ = "baz"

    """

    @classmethod
    def list(cls) -> List[str]:
        """
        Get a list of the string attributes of the *child* class, in declaration order.
        :return: the string things (see above)
        """
        name_list = []
        for klass in reversed(cls.__mro__):
            for name, attr in vars(klass).items():
                if name.startswith("_") or not isinstance(attr, str):
                    continue
                if attr not in name_list:
                    name_list.append(attr)
        return name_list

    @classmethod
    def require(cls, value: str, what: str) -> str:
        """
        Check a value against the list.

        :param value: candidate value
        :param what: name used in the error message
        :return: the value, unchanged
        """
        if value not in cls.list():
            raise InvalidConfig(f"'{what}' {value!r} must be one of {cls.list()}")
        return value


# pylint: disable=R0903
class StreamKind(ConstantList):
    """
    The four telemetry streams a session can carry.
    """

    GAZE = "gaze"
    HEAD = "head"
    LEFT_HAND = "left_hand"
    RIGHT_HAND = "right_hand"


class StreamState(ConstantList):
    """
    How an experiment uses a stream: not at all, as recorded, or after the privacy mechanism.
    """

    UNUSED = "unused"
    UNMODIFIED = "unmodified"
    PRIVATIZED = "privatized"


class ReportFormat(ConstantList):
    """
    Output formats for experiment reports.
    """

    JSON = "json"
    CSV = "csv"


# head/hand position component indices (meters, world space)
HORIZONTAL = 0
VERTICAL = 1
DEPTH = 2

DEFAULT_RATE_HZ = 90.0
