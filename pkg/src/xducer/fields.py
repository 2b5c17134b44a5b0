"""Coupling rates from sampled field data by weighted quadrature.

Field data is a column-oriented set of samples, each with a quadrature
weight (``dV`` or ``dS``).  Complex vector fields are stored as ``(N, 3)``
complex arrays; pairings take the real part of ``conj(a) . b``.  All sums
go through :func:`math.fsum`, which makes them exactly rounded and hence
independent of sample order.

Frequencies passed in are ordinary frequencies (Hz) and so are the results.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import polars as pl

EPS0 = 8.8541878128e-12
REGIONS = ("LN", "Si", "other")
VECTOR_GROUPS = {"volume": ("Dm", "Eq", "E", "D"), "surface": ("Epar",)}


class FieldDataError(ValueError):
    """Malformed or invalid field data; carries the 1-based line when known."""

    def __init__(self, message: str, line: int | None = None, path=None):
        loc = f"{path}:" if path is not None else ""
        loc += f"{line}: " if line is not None else (" " if loc else "")
        super().__init__(loc + message)
        self.line = line


@dataclass
class VolumeData:
    position: np.ndarray
    dV: np.ndarray
    region: np.ndarray
    Dm: np.ndarray | None = None
    Eq: np.ndarray | None = None
    E: np.ndarray | None = None
    D: np.ndarray | None = None
    S: np.ndarray | None = None

    def __len__(self):
        return len(self.dV)

    def region_mask(self, tag: str) -> np.ndarray:
        return self.region == tag

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise FieldDataError(f"missing field group(s): {', '.join(missing)}")

    def region_counts(self) -> dict[str, int]:
        return {r: int(np.count_nonzero(self.region == r)) for r in REGIONS}

    def take(self, idx) -> "VolumeData":
        kw = {k: (None if v is None else v[idx]) for k, v in self.__dict__.items()}
        return VolumeData(**kw)


@dataclass
class SurfaceData:
    position: np.ndarray
    dS: np.ndarray
    normal: np.ndarray
    Q: np.ndarray
    Epar: np.ndarray
    Dperp: np.ndarray

    def __len__(self):
        return len(self.dS)

    def take(self, idx) -> "SurfaceData":
        return SurfaceData(**{k: v[idx] for k, v in self.__dict__.items()})


@dataclass(frozen=True)
class MaterialConstants:
    n: float = 3.48
    p: np.ndarray = field(default_factory=lambda: cubic_photoelastic(-0.094, 0.017, -0.051))
    eps_si: float = 11.7 * EPS0
    eps_air: float = EPS0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (6, 6):
            raise ValueError("photoelastic tensor must be 6x6 (Voigt)")
        object.__setattr__(self, "p", p)
        if not self.n > 1:
            raise ValueError("refractive index must be > 1")
        if not self.eps_si > self.eps_air > 0:
            raise ValueError("need eps_si > eps_air > 0")

    @property
    def delta_eps(self) -> float:
        return self.eps_si - self.eps_air

    @property
    def delta_inv_eps(self) -> float:
        return 1.0 / self.eps_si - 1.0 / self.eps_air


def cubic_photoelastic(p11: float, p12: float, p44: float) -> np.ndarray:
    p = np.zeros((6, 6))
    p[:3, :3] = p12
    np.fill_diagonal(p[:3, :3], p11)
    p[3, 3] = p[4, 4] = p[5, 5] = p44
    return p


def _fsum_real(values: np.ndarray) -> float:
    return math.fsum(np.real(values).tolist())


def _pair(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", a.conj(), b)


# ---------------------------------------------------------------------------
# coupling integrals

def overlap_integral(volume: VolumeData, a: str, b: str, region: str) -> float:
    """Re sum over ``region`` of conj(a).b dV."""
    volume.require(a, b)
    m = volume.region_mask(region)
    if not np.any(m):
        return 0.0
    return _fsum_real(_pair(getattr(volume, a)[m], getattr(volume, b)[m]) * volume.dV[m])


def piezo_coupling(volume: VolumeData, U_m: float, U_q: float, omega_m: float) -> float:
    """Piezoelectric coupling from the LN overlap of D_m and E_q.

    g = omega_m / (4 sqrt(2 U_m U_q)) * Re int_LN D_m . E_q dV.
    """
    if not (U_m > 0 and U_q > 0):
        raise ValueError("U_m and U_q must be > 0")
    volume.require("Dm", "Eq")
    return omega_m / (4.0 * math.sqrt(2.0 * U_m * U_q)) * overlap_integral(volume, "Dm", "Eq", "LN")


def voigt_to_tensor(v: np.ndarray) -> np.ndarray:
    """(N, 6) Voigt vectors -> (N, 3, 3) symmetric tensors (xx, yy, zz, yz, xz, xy)."""
    t = np.empty(v.shape[:-1] + (3, 3), dtype=v.dtype)
    t[..., 0, 0], t[..., 1, 1], t[..., 2, 2] = v[..., 0], v[..., 1], v[..., 2]
    t[..., 1, 2] = t[..., 2, 1] = v[..., 3]
    t[..., 0, 2] = t[..., 2, 0] = v[..., 4]
    t[..., 0, 1] = t[..., 1, 0] = v[..., 5]
    return t


def optical_norm(volume: VolumeData) -> float:
    """Re int D . E dV over all samples."""
    volume.require("D", "E")
    return _fsum_real(_pair(volume.D, volume.E) * volume.dV)


def om_coupling_photoelastic(volume: VolumeData, mat: MaterialConstants, denom: float,
                             omega_o: float) -> float:
    if not denom > 0:
        raise ValueError("normalization integral must be > 0")
    volume.require("E", "S")
    m = volume.region_mask("Si")
    if not np.any(m):
        return 0.0
    E = volume.E[m]
    pS = voigt_to_tensor(volume.S[m] @ mat.p.T)
    num = _fsum_real(np.einsum("ni,nij,nj->n", E.conj(), pS, E) * volume.dV[m])
    return omega_o * EPS0 * mat.n ** 4 / 2.0 * num / denom


def om_coupling_moving_boundary(surface: SurfaceData, mat: MaterialConstants, denom: float,
                                omega_o: float, normal_tol: float = 1e-9) -> float:
    if not denom > 0:
        raise ValueError("normalization integral must be > 0")
    bad = np.flatnonzero(np.abs(np.linalg.norm(surface.normal, axis=1) - 1.0) > normal_tol)
    if bad.size:
        raise FieldDataError(f"non-unit surface normal at sample {int(bad[0])}")
    qn = np.einsum("ij,ij->i", surface.Q, surface.normal)
    e2 = np.sum(np.abs(surface.Epar) ** 2, axis=1)
    d2 = np.abs(surface.Dperp) ** 2
    num = math.fsum((qn * (mat.delta_eps * e2 - mat.delta_inv_eps * d2) * surface.dS).tolist())
    return -omega_o / 2.0 * num / denom


def total_om_coupling(pe: float, mb: float) -> float:
    return pe + mb


# ---------------------------------------------------------------------------
# columnar file format

def _read_columns(path: Path, kind: str):
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline()
    if not header.startswith("#fields:"):
        raise FieldDataError("first line must be '#fields: <columns>'", 1, path)
    cols = [c.strip() for c in header[len("#fields:"):].split(",") if c.strip()]
    if len(set(cols)) != len(cols):
        raise FieldDataError("duplicate column names in header", 1, path)
    weight = "dV" if kind == "volume" else "dS"
    required = ["x", "y", "z", weight] + (["region"] if kind == "volume" else ["nx", "ny", "nz"])
    missing = [c for c in required if c not in cols]
    if missing:
        raise FieldDataError(f"header lacks required column(s) {missing}", 1, path)
    df = _read_fast(path, cols)
    if df is None:
        df = _read_slow(path, cols)
    if "region" in df:
        bad = np.flatnonzero(~np.isin(df["region"], REGIONS))
        if bad.size:
            r = int(bad[0])
            raise FieldDataError("unknown region tag (expected LN|Si|other)", _line_of(path, r), path)
    return df, cols


def _read_fast(path: Path, cols: list[str]):
    """Columnar read with polars; None when the file needs the tolerant reader."""
    # unknown region tags fail the Enum cast and take the slow path for a line number
    schema = {c: (pl.Enum(REGIONS) if c == "region" else pl.Float64) for c in cols}
    try:
        frame = pl.read_csv(path, separator=" ", has_header=False, comment_prefix="#",
                            schema=schema, encoding="utf8")
    except Exception:  # noqa: BLE001 - any failure falls back to the line-aware reader
        return None
    if frame.height == 0 or frame.null_count().sum_horizontal().item():
        return None
    df = {c: frame[c].to_numpy() for c in cols if c != "region"}
    if "region" in cols:
        df["region"] = np.array(REGIONS)[frame["region"].to_physical().to_numpy()]
    return df


def _read_slow(path: Path, cols: list[str]):
    """Whitespace-tolerant reader that reports the offending line on errors."""
    conv = {}
    if "region" in cols:
        codes = {r: float(i) for i, r in enumerate(REGIONS)}
        conv[cols.index("region")] = lambda tok: codes.get(tok, math.nan)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # header-only file
            arr = np.loadtxt(path, skiprows=1, comments="#", dtype=float, converters=conv or None,
                             ndmin=2, encoding="utf-8")
    except ValueError as exc:
        line, msg = _locate_bad_row(path, cols)
        raise FieldDataError(msg or f"unparseable data ({exc})", line, path) from None
    if arr.size == 0:
        arr = np.empty((0, len(cols)))
    if arr.shape[1] != len(cols):
        raise FieldDataError(f"expected {len(cols)} columns, found {arr.shape[1]}", 2, path)
    df = {c: arr[:, i] for i, c in enumerate(cols)}
    if "region" in df:
        codes = df["region"]
        names = np.array(REGIONS + ("?",))
        df["region"] = names[np.where(np.isnan(codes), len(REGIONS), codes).astype(int)]
    return df


def _line_of(path: Path, row: int) -> int:
    """1-based file line holding data row ``row``."""
    count = -1
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if lineno == 1:
                continue
            s = text.strip()
            if not s or s.startswith("#"):
                continue
            count += 1
            if count == row:
                return lineno
    return -1


def _locate_bad_row(path: Path, cols: list[str]):
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if lineno == 1:
                continue
            s = text.split("#", 1)[0].strip()
            if not s:
                continue
            parts = s.split()
            if len(parts) != len(cols):
                return lineno, f"expected {len(cols)} columns, found {len(parts)}"
            for name, tok in zip(cols, parts):
                if name == "region":
                    continue
                try:
                    float(tok)
                except ValueError:
                    return lineno, f"column {name!r}: cannot parse {tok!r} as a number"
    return None, None


def _stack(df, *names) -> np.ndarray:
    return np.column_stack([df[n] for n in names]) if len(df[names[0]]) else np.empty((0, len(names)))


def _complex_group(df, cols, group: str, kind_required=False):
    re_cols = [f"re_{group}_{c}" for c in "xyz"]
    if not all(c in cols for c in re_cols):
        if any(c in cols for c in re_cols) or kind_required:
            raise FieldDataError(f"incomplete column group {group!r}")
        return None
    out = np.column_stack([df[c] for c in re_cols]).astype(complex)
    im_cols = [f"im_{group}_{c}" for c in "xyz"]
    present = [c in cols for c in im_cols]
    if any(present) and not all(present):
        raise FieldDataError(f"incomplete imaginary columns for {group!r}")
    if all(present):
        out.imag = np.column_stack([df[c] for c in im_cols])
    return out


def parse_volume_file(path) -> VolumeData:
    path = Path(path)
    df, cols = _read_columns(path, "volume")
    dV = df["dV"]
    bad = np.flatnonzero(~(dV > 0))
    if bad.size:
        raise FieldDataError(f"dV must be > 0 (row {int(bad[0]) + 1})", _line_of(path, int(bad[0])), path)
    region = df["region"]
    try:
        groups = {g: _complex_group(df, cols, g) for g in VECTOR_GROUPS["volume"]}
    except FieldDataError as exc:
        raise FieldDataError(str(exc), None, path) from None
    S = None
    s_cols = [f"S{i}" for i in range(1, 7)]
    if any(c in cols for c in s_cols):
        if not all(c in cols for c in s_cols):
            raise FieldDataError("strain needs all of S1..S6", 1, path)
        S = np.column_stack([df[c] for c in s_cols])
    return VolumeData(_stack(df, "x", "y", "z"), dV, region, S=S, **groups)


def parse_surface_file(path, normal_tol: float = 1e-9) -> SurfaceData:
    path = Path(path)
    df, cols = _read_columns(path, "surface")
    dS = df["dS"]
    bad = np.flatnonzero(~(dS > 0))
    if bad.size:
        raise FieldDataError(f"dS must be > 0 (row {int(bad[0]) + 1})", _line_of(path, int(bad[0])), path)
    normal = _stack(df, "nx", "ny", "nz")
    bad = np.flatnonzero(np.abs(np.linalg.norm(normal, axis=1) - 1.0) > normal_tol)
    if bad.size:
        raise FieldDataError("surface normal is not unit length", _line_of(path, int(bad[0])), path)
    for c in ("Qx", "Qy", "Qz"):
        if c not in cols:
            raise FieldDataError("surface file needs Qx, Qy, Qz", 1, path)
    try:
        Epar = _complex_group(df, cols, "Epar", kind_required=True)
    except FieldDataError as exc:
        raise FieldDataError(str(exc), 1, path) from None
    if "re_Dperp" not in cols:
        raise FieldDataError("surface file needs re_Dperp", 1, path)
    Dperp = df["re_Dperp"].astype(complex)
    if "im_Dperp" in cols:
        Dperp.imag = df["im_Dperp"]
    return SurfaceData(_stack(df, "x", "y", "z"), dS, normal, _stack(df, "Qx", "Qy", "Qz"),
                       Epar, Dperp)


def _write(path, cols: list[str], columns: list) -> None:
    frame = pl.DataFrame({c: (v if isinstance(v, list) else np.asarray(v, float))
                          for c, v in zip(cols, columns)})
    with Path(path).open("wb") as fh:
        fh.write(("#fields: " + ",".join(cols) + "\n").encode("utf-8"))
        # shortest round-trip float formatting; the reader recovers every bit
        frame.write_csv(fh, separator=" ", include_header=False, line_terminator="\n")


def write_volume_file(path, data: VolumeData) -> None:
    cols = ["x", "y", "z", "dV", "region"]
    columns = [data.position[:, 0], data.position[:, 1], data.position[:, 2], data.dV,
               data.region.astype(str).tolist()]
    for g in VECTOR_GROUPS["volume"]:
        arr = getattr(data, g)
        if arr is None:
            continue
        for i, c in enumerate("xyz"):
            cols += [f"re_{g}_{c}", f"im_{g}_{c}"]
            columns += [arr[:, i].real, arr[:, i].imag]
    if data.S is not None:
        cols += [f"S{i}" for i in range(1, 7)]
        columns += [data.S[:, i] for i in range(6)]
    _write(path, cols, columns)


def write_surface_file(path, data: SurfaceData) -> None:
    cols = ["x", "y", "z", "dS", "nx", "ny", "nz", "Qx", "Qy", "Qz"]
    columns = [*data.position.T, data.dS, *data.normal.T, *data.Q.T]
    for i, c in enumerate("xyz"):
        cols += [f"re_Epar_{c}", f"im_Epar_{c}"]
        columns += [data.Epar[:, i].real, data.Epar[:, i].imag]
    cols += ["re_Dperp", "im_Dperp"]
    columns += [data.Dperp.real, data.Dperp.imag]
    _write(path, cols, columns)


# ---------------------------------------------------------------------------
# synthetic datasets with closed-form integrals

def _cell_centers(n: int, half: float) -> np.ndarray:
    h = 2.0 * half / n
    return -half + (np.arange(n) + 0.5) * h


def _box_grid(n: int, half: float):
    c = _cell_centers(n, half)
    X, Y, Z = np.meshgrid(c, c, c, indexing="ij")
    pos = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    return pos, np.full(len(pos), (2.0 * half / n) ** 3)


def _vec(n: int, comp: complex, axis: int = 0) -> np.ndarray:
    v = np.zeros((n, 3), dtype=complex)
    v[:, axis] = comp
    return v


def uniform_volume(n: int = 4, half: float = 0.5, region: str = "LN", d: complex = 1.0,
                   e: complex = 1.0, E0: complex = 1.0, strain: float = 0.0,
                   eps: float = EPS0) -> VolumeData:
    """Uniform fields on an ``n^3`` cube of side ``2*half``.

    D_m = (d,0,0), E_q = (e,0,0), E = (E0,0,0), D = eps*E, S = (s,s,s,0,0,0).
    """
    pos, dV = _box_grid(n, half)
    N = len(pos)
    return VolumeData(pos, dV, np.full(N, region), _vec(N, d), _vec(N, e), _vec(N, E0),
                      _vec(N, eps * E0), np.tile([strain] * 3 + [0.0] * 3, (N, 1)))


def uniform_closed_forms(d, e, E0, strain, half, eps=EPS0) -> dict[str, float]:
    V = (2.0 * half) ** 3
    return {"overlap": (np.conj(d) * e).real * V, "E2": abs(E0) ** 2 * V,
            "strain": strain, "denom": eps * abs(E0) ** 2 * V}


def sinusoidal_line(n: int, length: float, period: float, delta: float, d: float = 1.0,
                    e: float = 1.0, area: float = 1.0, region: str = "LN") -> VolumeData:
    """Phase-matched (delta=0) or mismatched plane-wave overlap along x.

    D_m = d exp(i k x), E_q = e exp(i (k + dk) x) with dk = 2 pi delta / length
    on x in [-L/2, L/2]; delta counts the extra cycles over the slab.
    """
    h = length / n
    x = _cell_centers(n, length / 2.0)
    k = 2.0 * np.pi / period
    dk = 2.0 * np.pi * delta / length
    pos = np.column_stack([x, np.zeros(n), np.zeros(n)])
    Dm = _vec(n, 0)
    Dm[:, 0] = d * np.exp(1j * k * x)
    Eq = _vec(n, 0)
    Eq[:, 0] = e * np.exp(1j * (k + dk) * x)
    return VolumeData(pos, np.full(n, h * area), np.full(n, region), Dm, Eq)


def sinusoidal_overlap_exact(n: int, length: float, delta: float, d=1.0, e=1.0, area=1.0) -> float:
    """Midpoint-rule value of the mismatched overlap, in closed form."""
    if delta == 0:
        return d * e * length * area
    h = length / n
    dk = 2.0 * np.pi * delta / length
    return d * e * area * h * math.sin(dk * length / 2.0) / math.sin(dk * h / 2.0)


def sinusoidal_overlap_continuum(length: float, delta: float, d=1.0, e=1.0, area=1.0) -> float:
    """d e L A sin(pi delta)/(pi delta)."""
    return d * e * length * area * float(np.sinc(delta))


def gaussian_volume(n: int, half: float = 1.0, sigma: float = 1.0, amp: float = 1.0,
                    strain: float = 1e-3, region: str = "Si", eps: float = EPS0) -> VolumeData:
    """Separable Gaussian fields exp(-r^2 / (2 sigma^2)) on a cube.

    The box is kept comparable to ``sigma`` so that the midpoint rule shows
    its second-order error instead of converging spectrally.
    """
    pos, dV = _box_grid(n, half)
    g = amp * np.exp(-np.sum(pos ** 2, axis=1) / (2.0 * sigma ** 2))
    N = len(pos)
    E = _vec(N, 0)
    E[:, 0] = g
    return VolumeData(pos, dV, np.full(N, region), E.copy(), E.copy(), E, eps * E,
                      np.tile([strain] * 3 + [0.0] * 3, (N, 1)))


def gaussian_closed_form(half: float = 1.0, sigma: float = 1.0, amp: float = 1.0) -> float:
    """int over the cube of amp^2 exp(-r^2 / sigma^2)."""
    one = sigma * math.sqrt(math.pi) * math.erf(half / sigma)
    return amp * amp * one ** 3


def flat_surface(n: int = 4, side: float = 1.0, q: float = 1.0, e_par: complex = 1.0,
                 d_perp: complex = 0.0, tangential_q: bool = False) -> SurfaceData:
    """Flat ``side x side`` patch in the z=0 plane with normal +z and uniform fields."""
    c = _cell_centers(n, side / 2.0)
    X, Y = np.meshgrid(c, c, indexing="ij")
    N = X.size
    pos = np.column_stack([X.ravel(), Y.ravel(), np.zeros(N)])
    normal = np.tile([0.0, 0.0, 1.0], (N, 1))
    Q = np.tile([q, 0.0, 0.0] if tangential_q else [0.0, 0.0, q], (N, 1))
    return SurfaceData(pos, np.full(N, (side / n) ** 2), normal, Q, _vec(N, e_par),
                       np.full(N, d_perp, dtype=complex))
