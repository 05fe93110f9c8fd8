"""SVG chart of cumulative response curves."""

__all__ = ['curvesSVG']

import io
import logging

import matplotlib

matplotlib.use('Agg')

from matplotlib.backends.backend_svg import FigureCanvasSVG  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

logger = logging.getLogger(__name__)

_STYLES = {
    'self_evacuee': ('#1b9e77', '-'),
    'shadow_evacuee': ('#d95f02', '-'),
    'evacuee_under_warning': ('#7570b3', '-'),
    'ordered_evacuee': ('#e7298a', '-'),
    'ALL': ('#333333', '--'),
}


def curvesSVG(curves, title='Cumulative evacuation response'):
    """Render curves as a line chart, one line per group.

    The output carries no timestamp and fixed element ids, so equal
    curves give byte-equal files.

    @rtype: bytes
    """
    fig = Figure(figsize=(7, 4.5))
    FigureCanvasSVG(fig)
    ax = fig.add_subplot(1, 1, 1)
    for curve in curves:
        color, style = _STYLES.get(curve.name, ('black', '-'))
        ax.plot(range(len(curve.cumulative)), curve.cumulative, style,
                color=color, marker='o', markersize=3, label=curve.name)
    ax.set_xlabel('days since ignition')
    ax.set_ylabel('cumulative departures')
    ax.set_title(title)
    ax.set_ylim(bottom=0)
    ax.grid(True, alpha=0.3)
    ax.legend(loc='upper left', fontsize='small')
    fig.tight_layout()

    out = io.BytesIO()
    with matplotlib.rc_context({'svg.hashsalt': 'evactrace',
                                'svg.fonttype': 'none'}):
        fig.savefig(out, format='svg', metadata={'Date': None})
    return out.getvalue()
