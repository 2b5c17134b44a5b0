import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xducer.fields import (EPS0, FieldDataError, MaterialConstants, VolumeData, flat_surface,
                           gaussian_closed_form, gaussian_volume, om_coupling_moving_boundary,
                           om_coupling_photoelastic, optical_norm, overlap_integral,
                           parse_surface_file, parse_volume_file, piezo_coupling,
                           sinusoidal_line, sinusoidal_overlap_continuum,
                           sinusoidal_overlap_exact, uniform_closed_forms, uniform_volume,
                           voigt_to_tensor, write_surface_file, write_volume_file)

MAT = MaterialConstants()


def test_uniform_overlap_and_piezo():
    v = uniform_volume(5, 0.5e-6, "LN", d=2e-3 + 1e-3j, e=3e5 - 2e5j)
    cf = uniform_closed_forms(2e-3 + 1e-3j, 3e5 - 2e5j, 1.0, 0.0, 0.5e-6)
    assert overlap_integral(v, "Dm", "Eq", "LN") == pytest.approx(cf["overlap"], rel=1e-12)
    g = piezo_coupling(v, 1e-21, 2e-21, 5.1e9)
    ref = 5.1e9 / (4 * math.sqrt(2 * 1e-21 * 2e-21)) * cf["overlap"]
    assert g == pytest.approx(ref, rel=1e-12)


def test_empty_region_gives_zero():
    v = uniform_volume(3, 1.0, "Si")
    assert piezo_coupling(v, 1.0, 1.0, 5e9) == 0.0
    assert om_coupling_photoelastic(uniform_volume(3, 1.0, "LN", strain=1e-3), MAT, 1.0, 1e14) == 0.0


def test_photoelastic_uniform_closed_form():
    E0, s, half = 2.0 + 1.0j, 1e-4, 1e-6
    v = uniform_volume(4, half, "Si", E0=E0, strain=s, eps=MAT.eps_si)
    denom = optical_norm(v)
    assert denom == pytest.approx(MAT.eps_si * abs(E0) ** 2 * (2 * half) ** 3, rel=1e-12)
    g = om_coupling_photoelastic(v, MAT, denom, 194e12)
    p11, p12 = -0.094, 0.017
    num = abs(E0) ** 2 * s * (p11 + 2 * p12) * (2 * half) ** 3
    assert g == pytest.approx(194e12 * EPS0 * 3.48 ** 4 / 2 * num / denom, rel=1e-12)


def test_moving_boundary_flat_patch():
    surf = flat_surface(4, 2e-6, q=1e-12, e_par=1.5, d_perp=2e-11)
    g = om_coupling_moving_boundary(surf, MAT, 1e-20, 194e12)
    inner = MAT.delta_eps * 1.5 ** 2 - MAT.delta_inv_eps * (2e-11) ** 2
    assert g == pytest.approx(-194e12 / 2 * 1e-12 * inner * 4e-12 / 1e-20, rel=1e-12)
    tang = flat_surface(4, 2e-6, q=1e-12, e_par=1.5, tangential_q=True)
    assert om_coupling_moving_boundary(tang, MAT, 1e-20, 194e12) == 0.0


@pytest.mark.parametrize("n,delta", [(64, 0.0), (100, 0.5), (333, 1.25), (50, 3.0)])
def test_sinusoidal_midpoint_closed_form(n, delta):
    v = sinusoidal_line(n, 10e-6, 1e-6, delta, d=2.0, e=0.5, area=1e-12)
    exact = sinusoidal_overlap_exact(n, 10e-6, delta, 2.0, 0.5, 1e-12)
    assert overlap_integral(v, "Dm", "Eq", "LN") == pytest.approx(exact, rel=1e-12, abs=1e-30)


def test_sinusoidal_converges_to_continuum():
    cont = sinusoidal_overlap_continuum(10e-6, 0.5)
    errs = [abs(sinusoidal_overlap_exact(n, 10e-6, 0.5) - cont) for n in (50, 100, 200)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.01)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.01)


def test_gaussian_refinement_is_second_order():
    exact = gaussian_closed_form()
    err = [abs(overlap_integral(gaussian_volume(n), "E", "E", "Si") - exact) for n in (6, 12, 24)]
    assert err[0] / err[1] >= 3.5 and err[1] / err[2] >= 3.5


def test_voigt_order():
    t = voigt_to_tensor(np.array([[1.0, 2, 3, 4, 5, 6]]))[0]
    assert t.tolist() == [[1, 6, 5], [6, 2, 4], [5, 4, 3]]


def test_material_validation():
    with pytest.raises(ValueError):
        MaterialConstants(n=0.5)
    with pytest.raises(ValueError):
        MaterialConstants(eps_si=EPS0, eps_air=2 * EPS0)
    with pytest.raises(ValueError):
        om_coupling_photoelastic(uniform_volume(2, region="Si"), MAT, 0.0, 1e14)


def test_missing_group():
    v = VolumeData(np.zeros((1, 3)), np.ones(1), np.array(["LN"]))
    with pytest.raises(FieldDataError, match="Dm"):
        overlap_integral(v, "Dm", "Eq", "LN")


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_order_independence(seed):
    rng = np.random.default_rng(seed)
    n = 500
    vol = VolumeData(rng.normal(size=(n, 3)), np.exp(rng.normal(0, 3, n)),
                     np.array(["LN", "Si", "other"])[rng.integers(0, 3, n)],
                     rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3)),
                     rng.normal(size=(n, 3)) * np.exp(rng.normal(0, 5, (n, 1))) + 0j)
    a = overlap_integral(vol, "Dm", "Eq", "LN")
    b = overlap_integral(vol.take(rng.permutation(n)), "Dm", "Eq", "LN")
    assert a == b


def test_volume_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    n = 200
    v = VolumeData(rng.normal(size=(n, 3)) * 1e-6, np.exp(rng.normal(-40, 5, n)),
                   np.array(["LN", "Si", "other"])[rng.integers(0, 3, n)],
                   Dm=rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3)),
                   S=rng.normal(size=(n, 6)) * 1e-5)
    write_volume_file(tmp_path / "v.dat", v)
    w = parse_volume_file(tmp_path / "v.dat")
    for k in ("position", "dV", "region", "Dm", "S"):
        assert np.array_equal(getattr(w, k), getattr(v, k))
    assert w.Eq is None and w.E is None


def test_surface_file_round_trip(tmp_path):
    s = flat_surface(3, 1e-6, q=2e-12, e_par=0.3 - 0.4j, d_perp=1e-11 + 2e-11j)
    write_surface_file(tmp_path / "s.dat", s)
    t = parse_surface_file(tmp_path / "s.dat")
    for k in ("position", "dS", "normal", "Q", "Epar", "Dperp"):
        assert np.array_equal(getattr(t, k), getattr(s, k))


def _lines(path):
    return path.read_text().splitlines()


def _write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def small_file(tmp_path):
    p = tmp_path / "v.dat"
    write_volume_file(p, uniform_volume(2, 0.5, "LN"))
    return p


def test_tolerant_whitespace_and_comments(small_file):
    lines = _lines(small_file)
    lines[2] = "\t" + lines[2].replace(" ", "   ") + "   # trailing note"
    lines.insert(3, "# full-line comment")
    lines.insert(4, "")
    _write_lines(small_file, lines)
    v = parse_volume_file(small_file)
    assert len(v) == 8 and np.array_equal(v.Dm, uniform_volume(2, 0.5, "LN").Dm)


def test_error_bad_number_reports_line(small_file):
    lines = _lines(small_file)
    parts = lines[4].split()
    parts[0] = "1.0.0"
    lines[4] = " ".join(parts)
    _write_lines(small_file, lines)
    with pytest.raises(FieldDataError) as exc:
        parse_volume_file(small_file)
    assert exc.value.line == 5 and "'x'" in str(exc.value)


def test_error_wrong_column_count(small_file):
    lines = _lines(small_file)
    lines[3] = lines[3] + " 7.0"
    _write_lines(small_file, lines)
    with pytest.raises(FieldDataError) as exc:
        parse_volume_file(small_file)
    assert exc.value.line == 4


def test_error_unknown_region(small_file):
    lines = _lines(small_file)
    lines[6] = lines[6].replace(" LN ", " GaAs ")
    _write_lines(small_file, lines)
    with pytest.raises(FieldDataError, match="region") as exc:
        parse_volume_file(small_file)
    assert exc.value.line == 7


def test_error_nonpositive_weight(small_file):
    lines = _lines(small_file)
    parts = lines[2].split()
    parts[3] = "-0.125"
    lines[2] = " ".join(parts)
    _write_lines(small_file, lines)
    with pytest.raises(FieldDataError, match="dV") as exc:
        parse_volume_file(small_file)
    assert exc.value.line == 3


def test_error_header(tmp_path):
    p = tmp_path / "x.dat"
    p.write_text("x y z\n1 2 3\n")
    with pytest.raises(FieldDataError, match="#fields"):
        parse_volume_file(p)
    p.write_text("#fields: x,y,z,dV\n")
    with pytest.raises(FieldDataError, match="region"):
        parse_volume_file(p)
    p.write_text("#fields: x,y,z,dV,region,re_Dm_x\n0 0 0 1 LN 1\n")
    with pytest.raises(FieldDataError, match="incomplete"):
        parse_volume_file(p)


def test_header_only_file(tmp_path):
    p = tmp_path / "e.dat"
    p.write_text("#fields: x,y,z,dV,region\n")
    assert len(parse_volume_file(p)) == 0


def test_surface_normal_checked(tmp_path):
    s = flat_surface(2)
    s.normal[1] = [0.0, 0.0, 2.0]
    write_surface_file(tmp_path / "s.dat", s)
    with pytest.raises(FieldDataError, match="normal") as exc:
        parse_surface_file(tmp_path / "s.dat")
    assert exc.value.line == 3
