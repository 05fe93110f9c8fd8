#!/usr/bin/env python3
"""
Print the next release version of evactrace. Pass `--major`, `--minor` or
`--patch` for the part to increment; the others reset to zero below it.

The version is read from `evactrace/__init__.py` as text, so this runs
without the package's dependencies installed.
"""
import re
import sys
from os.path import abspath, join, dirname

VERSION_RE = re.compile(r'^version_info = \((\d+), (\d+), (\d+)\)', re.M)

if __name__ == '__main__':
    init = abspath(join(dirname(__file__), '..', 'evactrace', '__init__.py'))
    with open(init, encoding='utf8') as f:
        match = VERSION_RE.search(f.read())
    if match is None:
        print('No version_info in {}'.format(init), file=sys.stderr)
        sys.exit(1)

    major, minor, patch = map(int, match.groups())
    pieces = None

    if '--major' in sys.argv:
        pieces = (major + 1, 0, 0)
    elif '--minor' in sys.argv:
        pieces = (major, minor + 1, 0)
    elif '--patch' in sys.argv:
        pieces = (major, minor, patch + 1)

    if pieces:
        print('.'.join(map(str, pieces)), end='')
    else:
        print('Major, minor, or patch?', file=sys.stderr)
        sys.exit(1)
