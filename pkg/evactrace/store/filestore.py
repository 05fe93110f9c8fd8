"""
This module contains C{L{OutputStore}}, a directory of run outputs in
which no reader ever sees a half-written file.

Each file is written to a temporary file in the destination directory,
synced, and renamed into place. A stage groups the files it writes so
that a failing stage leaves none of them behind.
"""

__all__ = ['OutputStore', 'atomicWrite']

import contextlib
import io
import logging
import os
import os.path

from tempfile import mkstemp

logger = logging.getLogger(__name__)


def _removeIfPresent(filename):
    """Delete C{filename} if it is there.

    @returns: whether a file was deleted
    @rtype: bool
    """
    try:
        os.unlink(filename)
    except FileNotFoundError:
        return False
    return True


def _ensureDir(dir_name):
    """Create C{dir_name} and its parents unless it is already a
    directory. Raises OSError when the name is taken by a file."""
    os.makedirs(dir_name, exist_ok=True)


def _mktemp(dir_name):
    """Open a fresh binary temporary file inside C{dir_name}, which
    keeps the final rename on one filesystem.

    str -> (file, str)
    """
    fd, name = mkstemp(dir=dir_name, prefix='.tmp-')
    try:
        return os.fdopen(fd, 'wb'), name
    except BaseException:
        os.close(fd)
        _removeIfPresent(name)
        raise


@contextlib.contextmanager
def atomicWrite(filename, text=False):
    """Open C{filename} for writing through a temporary file.

    The file appears under its final name only when the block exits
    normally; on error the temporary file is removed.

    @param text: yield a UTF-8 text stream instead of a binary one
    """
    dir_name = os.path.dirname(os.path.abspath(filename))
    _ensureDir(dir_name)
    tmp_file, tmp = _mktemp(dir_name)
    stream = None
    try:
        try:
            if text:
                stream = io.TextIOWrapper(tmp_file, encoding='utf-8',
                                          newline='')
                yield stream
                stream.flush()
            else:
                yield tmp_file
            tmp_file.flush()
            os.fsync(tmp_file.fileno())
        finally:
            if stream is not None:
                stream.detach()
            tmp_file.close()
        os.replace(tmp, filename)
    except BaseException:
        # Never leave the temporary file behind
        _removeIfPresent(tmp)
        raise


class OutputStore(object):
    """
    The output directory of one run.

    Methods of this object can raise OSError if unexpected filesystem
    conditions, such as bad permissions, occur.

    @ivar directory: absolute path of the output directory
    @ivar written: names written so far, in order
    """

    def __init__(self, directory):
        self.directory = os.path.normpath(os.path.abspath(directory))
        _ensureDir(self.directory)
        self.written = []
        self._stage_files = None

    def path(self, name):
        return os.path.join(self.directory, name)

    @contextlib.contextmanager
    def open(self, name, text=False):
        """Write the output called C{name} atomically."""
        filename = self.path(name)
        with atomicWrite(filename, text=text) as f:
            yield f
        self._record(name)

    def writeBytes(self, name, data):
        with self.open(name) as f:
            f.write(data)

    def _record(self, name):
        if name not in self.written:
            self.written.append(name)
        if self._stage_files is not None and name not in self._stage_files:
            self._stage_files.append(name)

    @contextlib.contextmanager
    def stage(self, label):
        """Group the writes of one pipeline stage.

        If the block raises, every file written inside it is removed
        before the exception propagates.
        """
        outer = self._stage_files
        self._stage_files = []
        try:
            yield self
        except BaseException:
            for name in self._stage_files:
                if _removeIfPresent(self.path(name)):
                    logger.info('Removed partial output %s of failed '
                                'stage %s', name, label)
                if name in self.written:
                    self.written.remove(name)
            raise
        finally:
            if outer is not None:
                outer.extend(n for n in self._stage_files if n not in outer)
            self._stage_files = outer

    def remove(self, name):
        if name in self.written:
            self.written.remove(name)
        return _removeIfPresent(self.path(name))
