#!/usr/bin/env python3
"""
Set the `version_info` of evactrace to the given MAJOR.MINOR.PATCH and
open a heading for it at the top of CHANGES.md.
"""
import re
import sys
from os.path import abspath, join, dirname

ROOT = abspath(join(dirname(__file__), '..'))
VERSION_RE = re.compile(r'^version_info = \(.*\)$', re.M)


def rewrite(path, edit):
    with open(path, 'r', encoding='utf8') as f:
        text = f.read()
    new = edit(text)
    if new == text:
        return False
    with open(path, 'w', encoding='utf8') as f:
        f.write(new)
    return True


if __name__ == '__main__':
    try:
        major, minor, patch = map(int, sys.argv[1].split('.'))
    except (IndexError, ValueError):
        print('Need version string in form MAJOR.MINOR.PATCH', file=sys.stderr)
        sys.exit(1)

    version = '{}.{}.{}'.format(major, minor, patch)
    v_info = 'version_info = ({}, {}, {})'.format(major, minor, patch)
    init = join(ROOT, 'evactrace', '__init__.py')
    if not rewrite(init, lambda text: VERSION_RE.sub(v_info, text, 1)):
        print('version_info unchanged in {}'.format(init), file=sys.stderr)
        sys.exit(1)

    heading = 'As of {}:\n\n'.format(version)
    rewrite(join(ROOT, 'CHANGES.md'),
            lambda text: text if text.startswith(heading) else heading + text)
