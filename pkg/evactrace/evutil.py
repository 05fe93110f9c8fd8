"""Small helpers shared by the pipeline stages."""

__all__ = ['Symbol', 'sha256File', 'toText', 'workerCount']

import hashlib
import logging
import os

logger = logging.getLogger(__name__)

WORKERS_ENV = 'EVACTRACE_WORKERS'

# Read files in 1 MiB blocks when digesting
_DIGEST_BLOCK = 1 << 20


def toText(value):
    """Coerce C{value} to str, decoding bytes as UTF-8.

    @param value: bytes, str or anything str() accepts

    @rtype: str
    """
    if isinstance(value, bytes):
        return value.decode('utf-8')
    return str(value)


def sha256File(path):
    """Hex sha256 digest of the file at C{path}, read in blocks.

    @param path: file to digest
    @type path: str

    @rtype: str
    """
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        while True:
            block = f.read(_DIGEST_BLOCK)
            if not block:
                break
            h.update(block)
    return h.hexdigest()


def workerCount(requested=None):
    """Decide how many worker processes a stage may use.

    The C{EVACTRACE_WORKERS} environment variable wins over
    C{requested}; with neither, use every logical core.

    @rtype: int
    """
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            logger.warning('Ignoring non-integer %s=%r', WORKERS_ENV, env)
        else:
            return max(1, n)

    if requested:
        return max(1, int(requested))

    return os.cpu_count() or 1


class Symbol(object):
    """A named marker value, equal only to markers of its own type that
    share its name. Used where a table cell must say "no number here"
    without colliding with any real value.
    """

    def __init__(self, name):
        self.name = name

    def __eq__(self, other):
        return type(self) is type(other) and self.name == other.name

    def __hash__(self):
        return hash((type(self), self.name))

    def __repr__(self):
        return '<%s %s>' % (type(self).__name__, self.name)
