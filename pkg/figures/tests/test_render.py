from pathlib import Path

import matplotlib.pyplot as plt
import pytest

from mfg_figures import FigureSpec, SchemaError, read_columns, render
from mfg_figures.cli import main
from mfg_figures.render import SWITCH_MARKER_GID

FIXTURES = Path(__file__).parent / "fixtures"


def data_lines(fig):
    """All plotted data lines across subplots, regime markers excluded."""
    lines = []
    for ax in fig.axes:
        lines.extend(l for l in ax.get_lines() if l.get_gid() != SWITCH_MARKER_GID)
    return lines


def marker_lines(fig):
    return [l for ax in fig.axes for l in ax.get_lines()
            if l.get_gid() == SWITCH_MARKER_GID]


@pytest.fixture(autouse=True)
def close_figures():
    yield
    plt.close("all")


def test_exploitability_curve_contract(tmp_path):
    out = tmp_path / "fig1.png"
    fig = render(FigureSpec("exploitability-curve", FIXTURES / "exploitability.csv", out))
    assert out.exists() and out.stat().st_size > 0
    lines = data_lines(fig)
    assert len(lines) == 1
    assert len(lines[0].get_xdata()) == 100


def test_meanfield_heatlines_contract(tmp_path):
    out = tmp_path / "fig2.png"
    fig = render(FigureSpec("meanfield-heatlines", FIXTURES / "meanfield.csv", out))
    assert out.exists()
    # two states, and a 4-point grid collapses the default five indices to 4
    assert len(fig.axes[:2]) == 2
    assert len(data_lines(fig)) == 2 * 4
    assert not marker_lines(fig)


def test_meanfield_alpha_subset_option(tmp_path):
    out = tmp_path / "fig2b.png"
    fig = render(FigureSpec("meanfield-heatlines", FIXTURES / "meanfield.csv", out,
                            alphas=(0.2, 0.8)))
    assert len(data_lines(fig)) == 2 * 2


def test_convergence_ci_contract(tmp_path):
    out = tmp_path / "fig3.png"
    fig = render(FigureSpec("convergence-ci", FIXTURES / "convergence.csv", out))
    assert out.exists()
    ax = fig.axes[0]
    assert ax.get_xscale() == "log"
    container = ax.containers[0]
    assert len(container.lines[0].get_xdata()) == 3  # one CI bar per row
    (bars,) = container.lines[2]
    assert len(bars.get_paths()) == 3


def test_adaptive_heatlines_contract(tmp_path):
    out = tmp_path / "fig4.png"
    fig = render(FigureSpec("adaptive-heatlines", FIXTURES / "adaptive_meanfield.csv", out))
    assert out.exists()
    assert len(data_lines(fig)) == 2 * 4
    markers = marker_lines(fig)
    assert len(markers) == len(fig.axes) - (1 if fig.legends else 0) or len(markers) >= 1
    # switch marker sits at half the final time (T = 10 in the fixture)
    assert markers[0].get_xdata()[0] == 5.0


def test_missing_column_is_diagnosed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("iteration,value\n1,0.5\n")
    with pytest.raises(SchemaError, match="exploitability"):
        render(FigureSpec("exploitability-curve", bad, tmp_path / "x.png"))


def test_missing_file_and_empty_file(tmp_path):
    with pytest.raises(SchemaError, match="not found"):
        read_columns(tmp_path / "nope.csv", ("a",))
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(SchemaError, match="empty"):
        read_columns(empty, ("a",))
    header_only = tmp_path / "header.csv"
    header_only.write_text("a,b\n")
    with pytest.raises(SchemaError, match="no data"):
        read_columns(header_only, ("a", "b"))


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        FigureSpec("pie", FIXTURES / "exploitability.csv", tmp_path / "x.png")


def test_rendering_is_deterministic(tmp_path):
    first = tmp_path / "a.png"
    second = tmp_path / "b.png"
    render(FigureSpec("convergence-ci", FIXTURES / "convergence.csv", first))
    render(FigureSpec("convergence-ci", FIXTURES / "convergence.csv", second))
    assert first.read_bytes() == second.read_bytes()


def test_cli_renders_each_kind(tmp_path):
    cases = [
        ("exploitability-curve", "exploitability.csv"),
        ("meanfield-heatlines", "meanfield.csv"),
        ("convergence-ci", "convergence.csv"),
        ("adaptive-heatlines", "adaptive_meanfield.csv"),
    ]
    for kind, fixture in cases:
        out = tmp_path / f"{kind}.png"
        assert main([kind, "--in", str(FIXTURES / fixture), "--out", str(out)]) == 0
        assert out.exists() and out.stat().st_size > 0


def test_cli_schema_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    code = main(["convergence-ci", "--in", str(bad), "--out", str(tmp_path / "o.png")])
    assert code == 2
    assert "delta_mu_mean" in capsys.readouterr().err


def test_cli_alpha_flag(tmp_path):
    out = tmp_path / "subset.png"
    code = main(["meanfield-heatlines", "--in", str(FIXTURES / "meanfield.csv"),
                 "--out", str(out), "--alphas", "0.3", "0.9"])
    assert code == 0
    assert out.exists()
