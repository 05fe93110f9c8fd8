"""Line-oriented C{key = value} text, used for config files and for the
small report files (cleaning report, regression summary, acceptance).

Blank lines and lines starting with C{#} are ignored when parsing.
"""
import logging

logger = logging.getLogger(__name__)

__all__ = ['seqToKV', 'kvToSeq', 'dictToKV', 'kvToDict', 'KVFormError']

SEPARATOR = '='


class KVFormError(ValueError):
    pass


def _field(what, value, err):
    """The text of one key or value; newlines are never allowed, and
    the separator only in values."""
    if isinstance(value, bytes):
        value = value.decode('utf-8')
    elif not isinstance(value, str):
        value = str(value)

    if '\n' in value:
        raise KVFormError('%s %r spans more than one line' % (what, value))
    if what == 'key' and SEPARATOR in value:
        raise KVFormError('key %r contains %r' % (value, SEPARATOR))
    if value.strip() != value:
        err('%s %r has whitespace at beginning or end' % (what, value))
    return value


def seqToKV(seq, strict=False):
    """Represent a sequence of pairs as newline-terminated
    C{key = value} lines, in the order given. Keys and values that are
    not strings are converted with C{str}.

    @type seq: [(str, object)]

    @param strict: raise instead of warning on suspicious input

    @rtype: bytes

    @raises KVFormError: for a newline anywhere, or the separator in a
        key
    """

    def err(msg):
        if strict:
            raise KVFormError(msg)
        logger.warning('seqToKV: %s', msg)

    return ''.join('%s %s %s\n' % (_field('key', k, err), SEPARATOR,
                                   _field('value', v, err))
                   for k, v in seq).encode('utf-8')


def kvToSeq(data, strict=False):
    """Parse C{key = value} lines into a list of pairs, in file order.

    Whitespace around keys and values is insignificant, and values may
    themselves contain the separator. Lines without a separator and
    lines with an empty key are reported with their line number and
    skipped.

    Parsing what L{seqToKV} wrote gives back the pairs, stripped::

        kvToSeq(seqToKV(seq)) == [(k, str(v).strip()) for k, v in seq]

    @param data: text or UTF-8 bytes
    @rtype: [(str, str)]
    """

    def err(msg):
        if strict:
            raise KVFormError(msg)
        logger.warning('kvToSeq: %s', msg)

    if isinstance(data, bytes):
        data = data.decode('utf-8')

    pairs = []
    for line_num, line in enumerate(data.split('\n'), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue

        key, sep, value = stripped.partition(SEPARATOR)
        key = key.strip()
        if not sep:
            err('Line %d does not contain %r' % (line_num, SEPARATOR))
        elif not key:
            err('Line %d has an empty key' % (line_num, ))
        else:
            pairs.append((key, value.strip()))
    return pairs


def dictToKV(d):
    return seqToKV(sorted(d.items()))


def kvToDict(s, strict=False):
    """Parse into a dict; a repeated key keeps its last value, with a
    warning."""
    d = {}
    for k, v in kvToSeq(s, strict=strict):
        if k in d:
            msg = 'Key %r given more than once; keeping the last value' % k
            if strict:
                raise KVFormError(msg)
            logger.warning(msg)
        d[k] = v
    return d
