"""Figure rendering for scenario results.

Figures are derived views of the CSV data: user counts, allocated-resource
fractions and response times over the zone count, one line per model.
Everything is written as self-contained SVG with pinned metadata so that
repeated runs produce identical files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "vmra"

_STYLE = {
    "VMRA": {"color": "#2980b9", "marker": "o"},
    "MCU": {"color": "#e74c3c", "marker": "s"},
    "CMCU": {"color": "#f39c12", "marker": "^"},
    "FixedNodes": {"color": "#27ae60", "marker": "D"},
}
_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def _by_model(cells):
    grouped = {}
    for cell in cells:
        grouped.setdefault(cell.model.value, []).append(cell)
    for rows in grouped.values():
        rows.sort(key=lambda c: c.zones)
    return grouped


def _new_axes(ylabel, title):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.set_xlabel("zones")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    return fig, ax


def _legend(ax, **kw):
    if ax.get_legend_handles_labels()[0]:
        ax.legend(**kw)


def user_count_figure(cells, path, total=False):
    """Users served per zone (or across all zones) vs. zone count."""
    which = "total users served" if total else "max users per zone"
    fig, ax = _new_axes(which, which)
    for tag, rows in _by_model(cells).items():
        ys = [c.total_users if total else c.max_users_per_zone for c in rows]
        ax.plot([c.zones for c in rows], ys, label=tag, **_STYLE[tag])
    _legend(ax)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def allocation_figure(cells, path):
    """Average and maximum allocated fraction of data-center resources."""
    fig, ax = _new_axes("allocated fraction", "allocated resources")
    for tag, rows in _by_model(cells).items():
        zs = [c.zones for c in rows]
        style = _STYLE[tag]
        ax.plot(zs, [c.avg_alloc_fraction for c in rows],
                label=f"{tag} avg", **style)
        ax.plot(zs, [c.max_alloc_fraction for c in rows],
                label=f"{tag} max", linestyle="--", color=style["color"])
    _legend(ax, fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def response_figure(cells, path, with_violation=False):
    """Average response time per model; optionally the share of response
    time beyond the QoS threshold on a twin axis."""
    fig, ax = _new_axes("avg response (ms)", "mixing response time")
    for tag, rows in _by_model(cells).items():
        ax.plot([c.zones for c in rows], [c.avg_response_ms for c in rows],
                label=tag, **_STYLE[tag])
    if with_violation:
        twin = ax.twinx()
        twin.set_ylabel("QoS violation ratio")
        for tag, rows in _by_model(cells).items():
            twin.plot([c.zones for c in rows],
                      [c.violation_ratio for c in rows],
                      linestyle=":", color=_STYLE[tag]["color"])
    _legend(ax)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
