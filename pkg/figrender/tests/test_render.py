"""Renderer tests: deterministic SVG output for every bundled preset
layout, spec-driven rendering, and the error paths.

The input CSVs come from the ssmclab CLI (the renderer's only interface
to the simulator); a synthetic writer covers schema-level cases.
"""

import hashlib
import json
import shutil
import subprocess

import numpy as np
import pytest

from figrender import (EmptyTraceError, FigureSpec, MissingColumnError,
                       PRESETS, render_figure, render_preset)
from figrender.render import SWEEP_PRESETS, TRACE_COLUMNS, minmax_decimate

SSMCLAB = shutil.which("ssmclab")

pytestmark = pytest.mark.skipif(SSMCLAB is None,
                                reason="ssmclab CLI not installed")


def write_synthetic_trace(path, n=5000, t_di=10e-6):
    """Schema-conformant trace.csv with plausible waveforms."""
    t = np.arange(n) * t_di
    x_d = 155.0 * np.sin(2 * np.pi * 50.0 * t)
    u_o = x_d + 2.0 * np.sin(2 * np.pi * 50.0 * t + 1.0)
    s = 20e3 * np.sin(2 * np.pi * 5000.0 * t)
    cols = {
        "time": t, "u_o": u_o, "i_f": 20.0 * np.sin(2 * np.pi * 50.0 * t),
        "i_o": np.zeros(n), "x_d": x_d, "s_raw": s, "s_used": s,
        "s_error": np.zeros(n), "x_comp": np.zeros(n),
        "t_level": np.where(np.sin(2 * np.pi * 5000.0 * t) > 0, 1, -1),
        "v_dc": np.full(n, 290.0), "region_margin": np.full(n, 1e9),
        "region_ok": np.ones(n),
    }
    with open(path, "w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for k in range(n):
            fh.write(",".join(repr(float(cols[c][k])) for c in TRACE_COLUMNS) + "\n")


@pytest.fixture(scope="session")
def preset_outputs(tmp_path_factory):
    """Run the simulator CLI once per preset layout the renderer knows."""
    root = tmp_path_factory.mktemp("runs")
    dirs = {}
    for preset in PRESETS:
        out = root / preset
        if preset in SWEEP_PRESETS:
            cmd = [SSMCLAB, "sweep", "--config", "region_sweep",
                   "--out", str(out), "--axis", "vdc.v0",
                   "--values", "150,180,200,250,300,400", "--quiet"]
        else:
            cmd = [SSMCLAB, "run", "--config", preset, "--out", str(out),
                   "--quiet"]
        subprocess.run(cmd, check=True)
        dirs[preset] = out
    return dirs


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- preset layouts -------------------------------------------------------------

def test_every_preset_renders_deterministic_svg(preset_outputs, tmp_path):
    for preset, in_dir in preset_outputs.items():
        out_a = tmp_path / f"{preset}_a.svg"
        out_b = tmp_path / f"{preset}_b.svg"
        render_preset(preset, in_dir, out_a)
        render_preset(preset, in_dir, out_b)
        assert out_a.exists() and out_a.stat().st_size > 1000
        assert sha256(out_a) == sha256(out_b), f"{preset}: svg not reproducible"


def test_trace_layout_has_three_panels_and_labels(preset_outputs, tmp_path):
    out = tmp_path / "fig4.svg"
    render_preset("fig4", preset_outputs["fig4"], out)
    svg = out.read_text()
    assert svg.count("<g id=\"axes_") == 3
    for label in ("u_o", "reference", "s_raw", "s_used", "v_dc",
                  "sliding value [V/s]", "dc link [V]"):
        assert label in svg, f"panel label {label!r} missing from svg"


def test_sweep_layout_marks_dc_floor(preset_outputs, tmp_path):
    out = tmp_path / "fig3.svg"
    render_preset("fig3", preset_outputs["fig3"], out)
    svg = out.read_text()
    assert svg.count("<g id=\"axes_") == 1
    assert "headroom" in svg  # legend text for the 181 V marker


def test_png_output(preset_outputs, tmp_path):
    out = tmp_path / "fig4.png"
    render_preset("fig4", preset_outputs["fig4"], out, image_format="png")
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


# -- spec-driven rendering ---------------------------------------------------------

def test_render_figure_from_spec(tmp_path):
    csv = tmp_path / "trace.csv"
    write_synthetic_trace(csv)
    spec = FigureSpec(figure_id="custom",
                      inputs=((str(csv), "u_o", 0, "voltage"),
                              (str(csv), "x_d", 0, "reference"),
                              (str(csv), "s_used", 1, "sliding")),
                      out_path=str(tmp_path / "custom.svg"))
    out = render_figure(spec)
    assert out.exists()
    svg = out.read_text()
    assert svg.count("<g id=\"axes_") == 2


def test_spec_json_roundtrip(tmp_path):
    csv = tmp_path / "trace.csv"
    write_synthetic_trace(csv, n=1000)
    blob = {"figure_id": "demo", "out": str(tmp_path / "demo.svg"),
            "format": "svg",
            "inputs": [{"path": str(csv), "column": "u_o", "axis": 0,
                        "label": "u_o"}]}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(blob))
    spec = FigureSpec.from_json(spec_path)
    assert render_figure(spec).exists()


# -- error paths ----------------------------------------------------------------------

def test_missing_column_is_named_error(tmp_path):
    csv = tmp_path / "bad.csv"
    csv.write_text("time,u_o\n0.0,1.0\n")
    spec = FigureSpec(figure_id="x",
                      inputs=((str(csv), "s_used", 0, "s"),),
                      out_path=str(tmp_path / "x.svg"))
    with pytest.raises(MissingColumnError) as exc_info:
        render_figure(spec)
    assert "s_used" in str(exc_info.value)
    assert not (tmp_path / "x.svg").exists()  # no partial file


def test_empty_trace_errors_without_partial_file(tmp_path):
    (tmp_path / "trace.csv").write_text(",".join(TRACE_COLUMNS) + "\n")
    with pytest.raises(EmptyTraceError):
        render_preset("fig4", tmp_path, tmp_path / "fig4.svg")
    assert not (tmp_path / "fig4.svg").exists()


def test_unknown_preset_rejected(tmp_path):
    with pytest.raises(ValueError):
        render_preset("fig99", tmp_path, tmp_path / "x.svg")


def test_bad_format_rejected():
    with pytest.raises(ValueError):
        FigureSpec(figure_id="x", out_path="x.gif", image_format="gif")


# -- decimation helper -------------------------------------------------------------

def test_minmax_decimation_preserves_envelope():
    rng = np.random.default_rng(1)
    t = np.linspace(0.0, 1.0, 100000)
    y = np.sin(2 * np.pi * 3000 * t) * (1 + 0.5 * np.sin(2 * np.pi * 2 * t))
    td, yd = minmax_decimate(t, y, max_points=2000)
    assert len(td) <= 2000
    assert yd.max() == pytest.approx(y.max(), rel=1e-6)
    assert yd.min() == pytest.approx(y.min(), rel=1e-6)
    assert np.all(np.diff(td) >= 0)


def test_short_series_untouched():
    t = np.arange(100.0)
    y = np.sin(t)
    td, yd = minmax_decimate(t, y, max_points=4000)
    assert np.array_equal(td, t) and np.array_equal(yd, y)


# -- CLI ---------------------------------------------------------------------------

def test_cli_render_preset(preset_outputs, tmp_path):
    from figrender.cli import main
    out = tmp_path / "cli_fig4.svg"
    code = main(["render", "--preset", "fig4",
                 "--in", str(preset_outputs["fig4"]), "--out", str(out)])
    assert code == 0
    assert out.exists()


def test_cli_error_exit_code(tmp_path):
    from figrender.cli import main
    code = main(["render", "--preset", "fig4", "--in", str(tmp_path),
                 "--out", str(tmp_path / "x.svg")])
    assert code == 1
