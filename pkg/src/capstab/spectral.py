"""Discrete quadratic forms Q and Q_E, eigensolves, indices, heat traces.

The parametric grid is triangulated (consistent quad split) and forms are
assembled with P1 elements.  On conformal charts the Dirichlet part of Q
is the flat parameter stiffness matrix (conformal invariance); metric
factors enter only mass-type and boundary terms.

Q (scalar, per node):

    Q(f, f) = int |grad f|^2 - |A|^2 f^2 dSigma
              + sum_wall oint rho_R f^2 dtau,
    rho_R   = -cot(theta) <A(n,n), nu> + (1/ sin theta) <A^{dM}(nu_hat,nu_hat), N>.

Q_E (vector, 3 dofs per node, wall-ring nodes constrained to T dM):
``boundary_model="admissible"`` (default) assembles the honest admissible
Hessian of E^{h,theta}: flat stiffness + skew-symmetrized h-volume block +
the wetting sweep term + the wall constraint-curvature term.  The model
``"paper-display"`` replaces the boundary terms with the literal
-sin(theta) <A^{dM}(gamma_dot, gamma_dot), N> |v|^2 line for comparison;
it does not reproduce finite differences of E^{h,theta} (see the decisions
ledger) and is kept for reporting only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from .geometry import GeometryField
from .hessians import robin_coefficient

__all__ = ["AssembledForm", "SpectrumReport", "assemble_Q", "assemble_QE",
           "assemble_scalar_robin", "eigs", "morse_index", "heat_trace",
           "counting_check", "dump_form", "spectrum_csv"]

DENSE_CEILING = 8000


# -- triangulation -----------------------------------------------------------

def triangulate(grid) -> np.ndarray:
    """Triangle node-index array (n_tri, 3) with a consistent diagonal."""
    tris = []
    for i in range(grid.n_r - 1):
        for j in range(grid.n_phi):
            jn = (j + 1) % grid.n_phi
            a = grid.node_index(i, j)
            b = grid.node_index(i + 1, j)
            c = grid.node_index(i + 1, jn)
            d = grid.node_index(i, jn)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return np.array(tris, dtype=int)


def _tri_geometry(grid, tris):
    x = grid.x.ravel()
    y = grid.y.ravel()
    p = np.stack([x[tris], y[tris]], axis=-1)  # (n_tri, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0):
        raise ValueError("degenerate or inverted triangle in the parametric mesh")
    area = 0.5 * det
    # P1 gradients: grad phi_a constant per triangle
    b_ = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1],
                   p[:, 0, 1] - p[:, 1, 1]], axis=1)
    c_ = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0],
                   p[:, 1, 0] - p[:, 0, 0]], axis=1)
    gradx = b_ / det[:, None]
    grady = c_ / det[:, None]
    return area, gradx, grady


_P1_MASS = (np.full((3, 3), 1.0) + np.eye(3)) / 12.0


def _assemble_scalar(grid, coeff_nodes, kind, tris, area, gradx, grady):
    """COO triplets for stiffness or weighted mass."""
    n = grid.n_nodes
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    if kind == "stiffness":
        blocks = (np.einsum("ta,tb->tab", gradx, gradx)
                  + np.einsum("ta,tb->tab", grady, grady)) * area[:, None, None]
    else:
        cvals = coeff_nodes.ravel()[tris].mean(axis=1)  # centroid coefficient
        blocks = (cvals * area)[:, None, None] * _P1_MASS[None, :, :]
    return sps.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _boundary_mass(geom: GeometryField, ring_coeffs: dict[int, np.ndarray]) -> sps.csr_matrix:
    """Lumped boundary mass: sum over ring nodes of arc_w * c * f^2."""
    g = geom.grid
    n = g.n_nodes
    rows, vals = [], []
    for i_ring, c in ring_coeffs.items():
        rd = geom.rings[i_ring]
        for j in range(g.n_phi):
            rows.append(g.node_index(i_ring, j))
            vals.append(rd.arc_w[j] * c[j])
    return sps.coo_matrix((vals, (rows, rows)), shape=(n, n)).tocsr()


@dataclass(frozen=True)
class AssembledForm:
    S: sps.csr_matrix = field(repr=False)
    M: sps.csr_matrix = field(repr=False)
    dof_map: str = "scalar"                   # "scalar" | "vector"
    meta: dict = field(default_factory=dict)
    projector: sps.csr_matrix | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.S.shape[0]

    def symmetry_residual(self) -> float:
        d = self.S - self.S.T
        smax = np.max(np.abs(self.S.data)) if self.S.nnz else 1.0
        return float(np.max(np.abs(d.data)) / smax) if d.nnz else 0.0

    def contract(self, vec: np.ndarray) -> float:
        return float(vec @ (self.S @ vec))

    def project_field(self, field_grid: np.ndarray) -> np.ndarray:
        """Reduce a gridded nodal field to the form's dof vector."""
        if self.dof_map == "scalar":
            return field_grid.ravel()
        flat = field_grid.reshape(-1, 3).ravel()
        if self.projector is None:
            return flat
        # least-squares restriction: P has orthonormal columns per node
        return self.projector.T @ flat


def assemble_Q(geom: GeometryField, theta: float, potential: str | float = "jacobi",
               robin: str | float | None = "capillary") -> AssembledForm:
    """Scalar capillary stability form.

    ``potential``: "jacobi" uses -|A|^2 (flat ambient Ricci = 0), "none"
    drops it, a float adds the constant shift c (S -> S + c M).
    ``robin``: "capillary" uses rho_R, "none" drops boundary terms, a float
    is used as a constant Robin coefficient on wall rings.
    """
    if not geom.conformal:
        raise ValueError("assemble_Q requires a conformal chart")
    if geom.chart.branch_order > 0:
        raise ValueError("branched charts are not admitted in spectral assembly")
    g = geom.grid
    tris = triangulate(g)
    area, gradx, grady = _tri_geometry(g, tris)
    K = _assemble_scalar(g, None, "stiffness", tris, area, gradx, grady)
    M = _assemble_scalar(g, geom.e2l, "mass", tris, area, gradx, grady)
    S = K.copy()
    ledger = {"stiffness": True}
    if potential == "jacobi":
        W = _assemble_scalar(g, geom.normA2 * geom.e2l, "mass", tris, area, gradx, grady)
        S = S - W
        ledger["potential"] = "-|A|^2"
    elif potential == "none":
        ledger["potential"] = "none"
    else:
        S = S + float(potential) * M
        ledger["potential"] = f"shift {float(potential)}"
    if robin == "capillary":
        coeffs = {rd.ring.i_r: robin_coefficient(rd, theta) for rd in geom.wall_rings()}
        S = S + _boundary_mass(geom, coeffs)
        ledger["robin"] = "capillary rho_R"
    elif robin in (None, "none"):
        ledger["robin"] = "none"
    else:
        coeffs = {rd.ring.i_r: np.full(g.n_phi, float(robin)) for rd in geom.wall_rings()}
        S = S + _boundary_mass(geom, coeffs)
        ledger["robin"] = f"constant {float(robin)}"
    S = 0.5 * (S + S.T)
    return AssembledForm(S=S.tocsr(), M=M, dof_map="scalar",
                         meta={"theta": theta, "ledger": ledger,
                               "grid": (g.n_r, g.n_phi), "topology": g.topology})


def assemble_scalar_robin(geom: GeometryField, coefficient: float) -> AssembledForm:
    """Laplacian with the Robin condition d f/d n = coefficient * f.

    Weak form: int |grad f|^2 - oint coefficient f^2; used for the heat
    kernel comparison spectra.
    """
    return assemble_Q(geom, theta=np.pi / 2, potential="none",
                      robin=-float(coefficient))


def assemble_QE(geom: GeometryField, h: float, theta: float,
                boundary_model: str = "admissible") -> AssembledForm:
    """Vector energy form with wall-ring nodes constrained to T dM."""
    if not geom.conformal:
        raise ValueError("assemble_QE requires a conformal chart")
    if geom.chart.branch_order > 0:
        raise ValueError("branched charts are not admitted in spectral assembly")
    g = geom.grid
    n = g.n_nodes
    tris = triangulate(g)
    area, gradx, grady = _tri_geometry(g, tris)
    K = _assemble_scalar(g, None, "stiffness", tris, area, gradx, grady)
    Msc = _assemble_scalar(g, geom.e2l, "mass", tris, area, gradx, grady)
    S3 = sps.kron(K, sps.eye(3), format="lil")
    M3 = sps.kron(Msc, sps.eye(3), format="csr")

    if h != 0.0:
        # skew pairing h int det(v, w_x, u_y) - det(v, w_y, u_x) dx dy, then
        # symmetrized; 3-point edge-midpoint quadrature (exact, quadratic)
        ux = geom.ux.reshape(-1, 3)
        uy = geom.uy.reshape(-1, 3)
        eps3 = np.zeros((3, 3, 3))
        eps3[0, 1, 2] = eps3[1, 2, 0] = eps3[2, 0, 1] = 1.0
        eps3[0, 2, 1] = eps3[1, 0, 2] = eps3[2, 1, 0] = -1.0
        mid = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        uy_t = uy[tris]  # (n_tri, 3, 3)
        ux_t = ux[tris]
        rows, cols, vals = [], [], []
        for q in range(3):
            wq = area / 3.0
            phis = mid[q]
            uyq = np.einsum("a,tak->tk", phis, uy_t)
            uxq = np.einsum("a,tak->tk", phis, ux_t)
            # E[(a,i),(b,j)] += h wq phi_a(q) [gradx_b uy_q - grady_b ux_q]_k eps_{ijk}
            for a in range(3):
                for b in range(3):
                    coef = h * phis[a] * wq[:, None] * (gradx[:, b][:, None] * uyq
                                                        - grady[:, b][:, None] * uxq)  # (t, k)
                    Eij = np.einsum("tk,ijk->tij", coef, eps3)
                    for i in range(3):
                        for j in range(3):
                            rows.append(3 * tris[:, a] + i)
                            cols.append(3 * tris[:, b] + j)
                            vals.append(Eij[:, i, j])
        G = sps.coo_matrix((np.concatenate(vals),
                            (np.concatenate(rows), np.concatenate(cols))),
                           shape=(3 * n, 3 * n)).tocsr()
        S3 = (S3.tocsr() + 0.5 * (G + G.T)).tolil()

    ledger = {"h_block": h != 0.0, "boundary_model": boundary_model}
    rows, cols, vals = [], [], []
    if boundary_model == "admissible":
        for rd in geom.wall_rings():
            i = rd.ring.i_r
            # wetting sweep term cos(theta) oint [<v,gd><v',nh> - <v,nh><v',gd>]
            # assembled on ring edges (P1 along the ring, gamma_dot oriented)
            ct = np.cos(theta)
            nphi = g.n_phi
            for j in range(nphi):
                jn = (j + 1) % nphi
                L = 0.5 * (rd.arc_w[j] + rd.arc_w[jn])
                gd = 0.5 * (rd.gamma_dot[j] + rd.gamma_dot[jn])
                nh = 0.5 * (rd.nu_hat[j] + rd.nu_hat[jn])
                gd /= np.linalg.norm(gd)
                nh /= np.linalg.norm(nh)
                n1, n2 = g.node_index(i, j), g.node_index(i, jn)
                # v_mid = (v1 + v2)/2, v' = eps (v2 - v1)/L
                for (na, wa) in ((n1, 0.5), (n2, 0.5)):
                    for (nb, wb) in ((n1, -1.0), (n2, 1.0)):
                        fac = ct * L * wa * (rd.eps * wb / L)
                        blk = fac * (np.outer(gd, nh) - np.outer(nh, gd))
                        for ii in range(3):
                            for jj in range(3):
                                rows.append(3 * na + ii)
                                cols.append(3 * nb + jj)
                                vals.append(blk[ii, jj])
            # wall constraint curvature sin(theta) oint A^{dM}(v, v) (lumped)
            dN = geom.ambient.normal_jacobian(geom.u[i])
            for j in range(g.n_phi):
                blk = -np.sin(theta) * rd.arc_w[j] * 0.5 * (dN[j] + dN[j].T)
                node = g.node_index(i, j)
                for ii in range(3):
                    for jj in range(3):
                        rows.append(3 * node + ii)
                        cols.append(3 * node + jj)
                        vals.append(blk[ii, jj])
    elif boundary_model == "paper-display":
        for rd in geom.wall_rings():
            i = rd.ring.i_r
            for j in range(g.n_phi):
                c = -np.sin(theta) * rd.ApM_gg[j] * rd.arc_w[j]
                node = g.node_index(i, j)
                for ii in range(3):
                    rows.append(3 * node + ii)
                    cols.append(3 * node + ii)
                    vals.append(c)
    else:
        raise ValueError(f"unknown boundary model {boundary_model!r}")
    if rows:
        Bmat = sps.coo_matrix((np.array(vals, dtype=float),
                               (np.array(rows), np.array(cols))),
                              shape=(3 * n, 3 * n)).tocsr()
        S3 = S3.tocsr() + 0.5 * (Bmat + Bmat.T)

    # tangency constraint: wall-ring nodes keep the (gamma_dot, nu_hat) plane
    blocks_rows, blocks_cols, blocks_vals = [], [], []
    col = 0
    wall_nodes = {}
    for rd in geom.wall_rings():
        for j in range(g.n_phi):
            wall_nodes[g.node_index(rd.ring.i_r, j)] = (rd.gamma_dot[j], rd.nu_hat[j])
    for node in range(n):
        if node in wall_nodes:
            gd, nh = wall_nodes[node]
            for comp, vec in enumerate((gd, nh)):
                for ii in range(3):
                    blocks_rows.append(3 * node + ii)
                    blocks_cols.append(col + comp)
                    blocks_vals.append(vec[ii])
            col += 2
        else:
            for ii in range(3):
                blocks_rows.append(3 * node + ii)
                blocks_cols.append(col + ii)
                blocks_vals.append(1.0)
            col += 3
    P = sps.coo_matrix((blocks_vals, (blocks_rows, blocks_cols)),
                       shape=(3 * n, col)).tocsr()
    S_red = (P.T @ S3.tocsr() @ P).tocsr()
    M_red = (P.T @ M3 @ P).tocsr()
    S_red = 0.5 * (S_red + S_red.T)
    return AssembledForm(S=S_red, M=M_red, dof_map="vector",
                         meta={"theta": theta, "h": h, "ledger": ledger,
                               "grid": (g.n_r, g.n_phi), "topology": g.topology},
                         projector=P)


# -- eigensolves --------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    n_dof: int
    k_requested: int | str
    tol_null: float
    meta: dict = field(default_factory=dict)

    @property
    def negative_count(self) -> int:
        return int(np.sum(self.eigenvalues < -self.tol_null))

    @property
    def null_count(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= self.tol_null))


def _null_scale(form: AssembledForm) -> float:
    smax = np.max(np.abs(form.S.data)) if form.S.nnz else 1.0
    mmax = np.max(np.abs(form.M.data)) if form.M.nnz else 1.0
    return smax / mmax


def eigs(form: AssembledForm, k: int | str = 12, tol_null: float | None = None,
         dense_ceiling: int = DENSE_CEILING) -> SpectrumReport:
    """Generalized symmetric eigenvalues of (S, M), ascending."""
    n = form.n
    if tol_null is None:
        tol_null = 1e-6 * _null_scale(form)
    if k == "all" or (isinstance(k, (int, np.integer)) and k >= n) or n <= 400:
        if n > dense_ceiling:
            raise ValueError(f"dense solve refused for n={n} > ceiling {dense_ceiling}")
        Sd = form.S.toarray()
        Md = form.M.toarray()
        vals, vecs = scipy.linalg.eigh(Sd, Md)
        kk = n if k == "all" else min(int(k), n)
        vals, vecs = vals[:kk], vecs[:, :kk]
    else:
        kk = int(k)
        sigma = -1e-2 * _null_scale(form)
        v0 = np.full(n, 1.0 / np.sqrt(n))
        vals, vecs = spsla.eigsh(form.S, k=kk, M=form.M, sigma=sigma,
                                 which="LM", v0=v0)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    res = np.zeros(len(vals))
    scale = _null_scale(form)
    for i, lam in enumerate(vals):
        x = vecs[:, i]
        r = form.S @ x - lam * (form.M @ x)
        denom = np.linalg.norm(form.S @ x) + (abs(lam) + 1e-8 * scale) * np.linalg.norm(form.M @ x)
        res[i] = np.linalg.norm(r) / denom
    return SpectrumReport(eigenvalues=vals, residuals=res, n_dof=n,
                          k_requested=k, tol_null=tol_null,
                          meta=dict(form.meta))


def eigenpairs(form: AssembledForm, k: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Lowest-k eigenpairs (values, vectors as dof columns)."""
    n = form.n
    if n <= 2500:
        vals, vecs = scipy.linalg.eigh(form.S.toarray(), form.M.toarray())
        return vals[:k], vecs[:, :k]
    sigma = -1e-2 * _null_scale(form)
    v0 = np.full(n, 1.0 / np.sqrt(n))
    vals, vecs = spsla.eigsh(form.S, k=k, M=form.M, sigma=sigma, which="LM", v0=v0)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def morse_index(form: AssembledForm, tol_null: float | None = None,
                k_start: int = 16) -> dict:
    """Count negative and near-zero eigenvalues, adaptively increasing k."""
    if tol_null is None:
        tol_null = 1e-6 * _null_scale(form)
    n = form.n
    k = min(k_start, n)
    while True:
        rep = eigs(form, k=k, tol_null=tol_null)
        vals = rep.eigenvalues
        if len(vals) >= n or vals[-1] > tol_null:
            break
        k = min(2 * k, n)
    index = int(np.sum(vals < -tol_null))
    nullity = int(np.sum(np.abs(vals) <= tol_null))
    # stability of the counts under doubling the null tolerance
    index2 = int(np.sum(vals < -2 * tol_null))
    stable = index2 == index
    return {"index": index, "nullity": nullity, "tol_null": tol_null,
            "tol_stable": stable, "eigenvalues": vals[: index + nullity + 3]}


# -- heat traces --------------------------------------------------------------

def heat_trace(report: SpectrumReport, t: float, surface_area: float | None = None) -> dict:
    """Sum of exp(-lambda t) over the computed spectrum plus a Weyl tail bound.

    The tail estimate (Area / (4 pi t)) exp(-lambda_max t) documents what a
    truncated spectrum can contribute; complete discrete spectra (k="all")
    carry a zero tail.
    """
    if t <= 0:
        raise ValueError("heat trace needs t > 0")
    lam = report.eigenvalues
    value = float(np.sum(np.exp(-lam * t)))
    complete = report.k_requested == "all" or len(lam) >= report.n_dof
    if complete:
        tail = 0.0
    else:
        if surface_area is None:
            raise ValueError("incomplete spectrum: pass surface_area for the tail bound")
        tail = float(surface_area / (4.0 * np.pi * t) * np.exp(-lam[-1] * t))
    return {"t": t, "trace": value, "tail_bound": tail, "complete": complete}


def counting_check(report: SpectrumReport, c: float, t: float) -> dict:
    """#{lambda <= c} <= e^{c t} * trace(t), evaluated on the spectrum."""
    lam = report.eigenvalues
    count = int(np.sum(lam <= c))
    bound = float(np.exp(c * t) * np.sum(np.exp(-lam * t)))
    return {"c": c, "t": t, "count": count, "bound": bound,
            "holds": count <= bound * (1.0 + 1e-12)}


# -- export -------------------------------------------------------------------

def dump_form(form: AssembledForm, path: str) -> None:
    """Coordinate-triplet text dump: header, then 'i j value' per entry."""
    coo = form.S.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# symmetric form matrix, n={form.n}, dof={form.dof_map}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")


def spectrum_csv(report: SpectrumReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,eigenvalue,residual\n")
        for i, (lam, r) in enumerate(zip(report.eigenvalues, report.residuals)):
            fh.write(f"{i},{lam:.17g},{r:.3e}\n")
