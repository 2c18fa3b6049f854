"""Complex-valued nodal Lagrange finite elements on tagged triangle meshes.

Degrees 1-3 on straight triangles, Dunavant volume quadrature and
Gauss-Legendre edge quadrature.  Linear constraints (Dirichlet, periodic
ties, prescribed inter-face jumps) are eliminated through a sparse
prolongation u_full = C u_free + d before the direct solve.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import OutsideRegion, SingularSystem
from .mesh import Mesh

__all__ = ["Space", "Constraints", "Field", "stiffness", "mass",
           "boundary_mass", "boundary_load", "volume_load", "solve",
           "tie_periodic"]


# -- reference element ------------------------------------------------------------

def _ref_nodes(p):
    """Lattice nodes on the reference triangle in local dof order."""
    verts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    nodes = list(verts)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        for i in range(1, p):
            t = i / p
            nodes.append((verts[a][0] + t * (verts[b][0] - verts[a][0]),
                          verts[a][1] + t * (verts[b][1] - verts[a][1])))
    if p == 3:
        nodes.append((1.0 / 3.0, 1.0 / 3.0))
    return np.array(nodes)


def _monomials(p, x, y):
    cols = [np.ones_like(x)]
    for deg in range(1, p + 1):
        for j in range(deg + 1):
            cols.append(x ** (deg - j) * y ** j)
    return np.column_stack(cols)


def _monomial_grads(p, x, y):
    gx = [np.zeros_like(x)]
    gy = [np.zeros_like(x)]
    for deg in range(1, p + 1):
        for j in range(deg + 1):
            i = deg - j
            gx.append(i * x ** max(i - 1, 0) * y ** j)
            gy.append(j * x ** i * y ** max(j - 1, 0))
    return np.column_stack(gx), np.column_stack(gy)


class _RefBasis:
    def __init__(self, p):
        self.p = p
        self.nodes = _ref_nodes(p)
        V = _monomials(p, self.nodes[:, 0], self.nodes[:, 1])
        self.coeff = np.linalg.inv(V)  # phi_j = sum_k coeff[k, j] * mono_k

    def eval(self, pts):
        """(npts, ndof_loc) basis values."""
        return _monomials(self.p, pts[:, 0], pts[:, 1]) @ self.coeff

    def grad(self, pts):
        """(npts, ndof_loc, 2) reference gradients."""
        gx, gy = _monomial_grads(self.p, pts[:, 0], pts[:, 1])
        return np.stack([gx @ self.coeff, gy @ self.coeff], axis=-1)


# Dunavant symmetric triangle rules; weights sum to 1 (multiply by area).
def _tri_rule(order):
    if order <= 5:
        groups = [
            (0.225, (1 / 3, 1 / 3, 1 / 3)),
            (0.132394152788506, (0.059715871789770, 0.470142064105115,
                                 0.470142064105115)),
            (0.125939180544827, (0.797426985353087, 0.101286507323456,
                                 0.101286507323456)),
        ]
    else:
        groups = [
            (0.144315607677787, (1 / 3, 1 / 3, 1 / 3)),
            (0.095091634413923, (0.081414823414554, 0.459292588292723,
                                 0.459292588292723)),
            (0.103217370534718, (0.658861384496480, 0.170569307751760,
                                 0.170569307751760)),
            (0.032458497623198, (0.898905543365938, 0.050547228317031,
                                 0.050547228317031)),
            (0.027230314174435, (0.008394777409958, 0.263112829634638,
                                 0.728492392955404)),
        ]
    pts, w = [], []
    for wt, bary in groups:
        seen = set()
        for perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1),
                     (0, 2, 1), (2, 1, 0), (1, 0, 2)):
            lam = tuple(bary[i] for i in perm)
            if lam in seen:
                continue
            seen.add(lam)
            pts.append((lam[1], lam[2]))  # reference coords (x,y) = (l2,l3)
            w.append(wt)
    return np.array(pts), np.array(w)


# -- dof management ------------------------------------------------------------------

class Space:
    """Scalar Lagrange space of degree p on a Mesh.

    Dof order: mesh nodes first, then (p-1) dofs per interior-unique edge
    stored from the lower to the higher global node id, then one interior
    dof per element for p = 3.
    """

    def __init__(self, mesh: Mesh, degree: int = 2):
        if degree not in (1, 2, 3):
            raise ValueError("degree must be 1, 2 or 3")
        self.mesh = mesh
        self.p = p = degree
        self.ref = _RefBasis(p)
        nloc = self.ref.nodes.shape[0]
        M = mesh.num_elements
        self.element_dofs = np.empty((M, nloc), dtype=np.int64)
        self.element_dofs[:, :3] = mesh.elements
        ndof = mesh.num_nodes
        self.edge_dofs = {}
        if p >= 2:
            for row in range(M):
                tri = mesh.elements[row]
                col = 3
                for a, b in ((0, 1), (1, 2), (2, 0)):
                    ga, gb = int(tri[a]), int(tri[b])
                    key = (ga, gb) if ga < gb else (gb, ga)
                    if key not in self.edge_dofs:
                        self.edge_dofs[key] = list(range(ndof, ndof + p - 1))
                        ndof += p - 1
                    ds = self.edge_dofs[key]
                    ordered = ds if ga < gb else ds[::-1]
                    self.element_dofs[row, col:col + p - 1] = ordered
                    col += p - 1
        if p == 3:
            self.element_dofs[:, 9] = np.arange(ndof, ndof + M)
            ndof += M
        self.ndof = ndof
        self._coords = None
        self._quad = None
        self._tree = None
        self._jac = None

    @property
    def dof_coords(self) -> np.ndarray:
        if self._coords is None:
            c = np.zeros((self.ndof, 2))
            c[: self.mesh.num_nodes] = self.mesh.nodes
            nodes = self.mesh.nodes
            for (a, b), ds in self.edge_dofs.items():
                for i, d in enumerate(ds, start=1):
                    t = i / self.p
                    c[d] = nodes[a] + t * (nodes[b] - nodes[a])
            if self.p == 3:
                cent = nodes[self.mesh.elements].mean(axis=1)
                c[self.element_dofs[:, 9]] = cent
            self._coords = c
        return self._coords

    # geometry of the affine map per element (cached; meshes are immutable)
    def _jacobians(self):
        if getattr(self, "_jac", None) is None:
            pts = self.mesh.nodes[self.mesh.elements]
            J = np.stack([pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0]], axis=-1)
            detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            Jinv = np.empty_like(J)
            Jinv[:, 0, 0] = J[:, 1, 1] / detJ
            Jinv[:, 0, 1] = -J[:, 0, 1] / detJ
            Jinv[:, 1, 0] = -J[:, 1, 0] / detJ
            Jinv[:, 1, 1] = J[:, 0, 0] / detJ
            self._jac = (J, Jinv, detJ)
        return self._jac

    def quad_global(self, order=None):
        """Physical quadrature points and weights, flattened over elements."""
        if order is None:
            order = 5 if self.p <= 2 else 8
        key = order
        if self._quad is None or self._quad[0] != key:
            qp, qw = _tri_rule(order)
            pts = self.mesh.nodes[self.mesh.elements]
            phys = (pts[:, None, 0, :]
                    + qp[None, :, 0, None] * (pts[:, 1] - pts[:, 0])[:, None, :]
                    + qp[None, :, 1, None] * (pts[:, 2] - pts[:, 0])[:, None, :])
            _, _, detJ = self._jacobians()
            w = 0.5 * np.abs(detJ)[:, None] * qw[None, :]
            self._quad = (key, qp, qw, phys.reshape(-1, 2), w.reshape(-1))
        return self._quad[3], self._quad[4]

    # -- point location -----------------------------------------------------------

    def locate(self, points, tol=1e-10):
        """Element index and reference coordinates for each query point."""
        from scipy.spatial import cKDTree

        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if self._tree is None:
            cent = self.mesh.nodes[self.mesh.elements].mean(axis=1)
            self._tree = cKDTree(cent)
        _, _, detJ = self._jacobians()
        p0 = self.mesh.nodes[self.mesh.elements[:, 0]]
        J, Jinv, _ = self._jacobians()
        elem = np.full(points.shape[0], -1, dtype=np.int64)
        ref = np.zeros_like(points)
        pending = np.arange(points.shape[0])
        for k in (8, 40, 160):
            if pending.size == 0:
                break
            k_eff = min(k, self.mesh.num_elements)
            _, cand = self._tree.query(points[pending], k=k_eff)
            cand = np.atleast_2d(cand)
            best_bad = np.full(pending.size, -1e30)
            for j in range(k_eff):
                c = cand[:, j]
                rel = points[pending] - p0[c]
                xi = np.einsum("nij,nj->ni", Jinv[c], rel)
                margin = np.minimum(np.minimum(xi[:, 0], xi[:, 1]),
                                    1.0 - xi[:, 0] - xi[:, 1])
                take = (margin > -tol) & (elem[pending] < 0)
                idx = pending[take]
                elem[idx] = c[take]
                ref[idx] = xi[take]
                improve = (margin > best_bad) & (elem[pending] < 0)
                best_bad = np.where(improve, margin, best_bad)
            pending = pending[elem[pending] < 0]
        if pending.size:
            raise OutsideRegion(
                f"{pending.size} evaluation points outside the mesh, e.g. "
                f"{points[pending[0]]}")
        return elem, ref


# -- assembly ----------------------------------------------------------------------

def _quad_order(space):
    return 5 if space.p <= 2 else 8


def _assemble_cells(space: Space, kind, coeff=None, chunk=40_000):
    qp, qw = _tri_rule(_quad_order(space))
    phi = space.ref.eval(qp)                     # (Q, nloc)
    gphi = space.ref.grad(qp)                    # (Q, nloc, 2)
    _, Jinv, detJ = space._jacobians()
    area_w = 0.5 * np.abs(detJ)                  # (M,)
    M = space.mesh.num_elements
    nloc = phi.shape[1]
    if kind != "stiffness":
        if callable(coeff):
            pts, _ = space.quad_global(_quad_order(space))
            cval = np.asarray(coeff(pts[:, 0], pts[:, 1])).reshape(M, -1)
        else:
            cval = None
            cconst = 1.0 if coeff is None else coeff
    A = sp.csr_matrix((space.ndof, space.ndof), dtype=complex)
    for s in range(0, M, chunk):
        e = min(s + chunk, M)
        if kind == "stiffness":
            g = np.einsum("eji,qnj->eqni", Jinv[s:e], gphi)
            loc = np.einsum("eqni,eqmi,q,e->enm", g, g, qw, area_w[s:e])
        elif cval is not None:
            loc = np.einsum("qn,qm,q,eq,e->enm", phi, phi, qw,
                            cval[s:e], area_w[s:e])
        else:
            loc = cconst * np.einsum("qn,qm,q,e->enm", phi, phi, qw, area_w[s:e])
        ed = space.element_dofs[s:e]
        rows = np.repeat(ed, nloc, axis=1).reshape(-1)
        cols = np.tile(ed, (1, nloc)).reshape(-1)
        A = A + sp.coo_matrix((loc.reshape(-1), (rows, cols)),
                              shape=(space.ndof, space.ndof),
                              dtype=complex).tocsr()
    return A


def stiffness(space: Space):
    return _assemble_cells(space, "stiffness")


def mass(space: Space, coeff=None):
    """Weighted mass matrix; coeff is a constant or a vectorized callable."""
    return _assemble_cells(space, "mass", coeff)


def volume_load(space: Space, f):
    qp, qw = _tri_rule(_quad_order(space))
    phi = space.ref.eval(qp)
    _, _, detJ = space._jacobians()
    area_w = 0.5 * np.abs(detJ)
    pts, _ = space.quad_global(_quad_order(space))
    Mel = space.mesh.num_elements
    fv = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=complex).reshape(Mel, -1)
    loc = np.einsum("qn,q,eq,e->en", phi, qw, fv, area_w)
    b = np.zeros(space.ndof, dtype=complex)
    np.add.at(b, space.element_dofs.reshape(-1), loc.reshape(-1))
    return b


def _edge_dof_rows(space: Space, edges):
    """Dof sequence (a, interior low->high along a->b, b) per boundary edge."""
    p = space.p
    rows = np.empty((len(edges), p + 1), dtype=np.int64)
    for i, (a, b) in enumerate(edges):
        a, b = int(a), int(b)
        rows[i, 0] = a
        rows[i, -1] = b
        if p >= 2:
            key = (a, b) if a < b else (b, a)
            ds = space.edge_dofs[key]
            rows[i, 1:-1] = ds if a < b else ds[::-1]
    return rows


def _edge_basis_1d(p, t):
    """1D Lagrange basis on [0,1] at lattice 0, 1/p, ..., 1 in edge-dof order."""
    nodes = np.concatenate([[0.0], np.arange(1, p) / p, [1.0]])
    V = np.vander(nodes, p + 1, increasing=True)
    C = np.linalg.inv(V)
    return np.vander(t, p + 1, increasing=True) @ C


def boundary_mass(space: Space, tag: str):
    edges = space.mesh.edges_with_tag(tag)
    t, w = np.polynomial.legendre.leggauss(space.p + 2)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    phi = _edge_basis_1d(space.p, t)             # (Q, p+1)
    rows = _edge_dof_rows(space, edges)
    pa = space.mesh.nodes[edges[:, 0]]
    pb = space.mesh.nodes[edges[:, 1]]
    lens = np.linalg.norm(pb - pa, axis=1)
    loc = np.einsum("qn,qm,q,e->enm", phi, phi, w, lens)
    nloc = phi.shape[1]
    r = np.repeat(rows, nloc, axis=1).reshape(-1)
    c = np.tile(rows, (1, nloc)).reshape(-1)
    A = sp.coo_matrix((loc.reshape(-1), (r, c)),
                      shape=(space.ndof, space.ndof), dtype=complex)
    return A.tocsr()


def boundary_load(space: Space, tag: str, g):
    """Load vector int_tag g(x) v ds; g constant or vectorized callable."""
    edges = space.mesh.edges_with_tag(tag)
    t, w = np.polynomial.legendre.leggauss(space.p + 3)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    phi = _edge_basis_1d(space.p, t)
    rows = _edge_dof_rows(space, edges)
    pa = space.mesh.nodes[edges[:, 0]]
    pb = space.mesh.nodes[edges[:, 1]]
    lens = np.linalg.norm(pb - pa, axis=1)
    if callable(g):
        pts = pa[:, None, :] + t[None, :, None] * (pb - pa)[:, None, :]
        gv = np.asarray(g(pts[..., 0].ravel(), pts[..., 1].ravel()),
                        dtype=complex).reshape(len(edges), t.size)
    else:
        gv = np.full((len(edges), t.size), g, dtype=complex)
    loc = np.einsum("qn,q,eq,e->en", phi, w, gv, lens)
    b = np.zeros(space.ndof, dtype=complex)
    np.add.at(b, rows.reshape(-1), loc.reshape(-1))
    return b


def edge_quadrature(space: Space, tag: str, nq: int = 6):
    """Gauss points, weights and outward unit normals on a tagged boundary.

    Returns (pts (E,Q,2), w (E,Q), normals (E,2)); normals point away from
    the unique adjacent element (i.e. out of the meshed domain).
    """
    mesh = space.mesh
    edges = mesh.edges_with_tag(tag)
    if len(edges) == 0:
        raise OutsideRegion(f"no boundary edges tagged {tag!r}")
    pair2elem = {}
    for row, tri in enumerate(mesh.elements):
        for a, b in ((0, 1), (1, 2), (2, 0)):
            u, v = int(tri[a]), int(tri[b])
            pair2elem[(u, v) if u < v else (v, u)] = row
    t, w = np.polynomial.legendre.leggauss(nq)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    pa = mesh.nodes[edges[:, 0]]
    pb = mesh.nodes[edges[:, 1]]
    pts = pa[:, None, :] + t[None, :, None] * (pb - pa)[:, None, :]
    lens = np.linalg.norm(pb - pa, axis=1)
    wts = lens[:, None] * w[None, :]
    tang = (pb - pa) / lens[:, None]
    normals = np.column_stack([tang[:, 1], -tang[:, 0]])
    for i, (a, b) in enumerate(edges):
        key = (int(a), int(b)) if a < b else (int(b), int(a))
        row = pair2elem.get(key)
        if row is None:
            raise OutsideRegion(f"tagged edge {tag!r} not part of any element")
        cent = mesh.nodes[mesh.elements[row]].mean(axis=0)
        mid = 0.5 * (pa[i] + pb[i])
        if np.dot(normals[i], cent - mid) > 0:
            normals[i] = -normals[i]
    return pts, wts, normals


def boundary_load_normal(space: Space, tag: str, g):
    """Load vector int_tag g(x, y, nx, ny) v ds with outward normals."""
    edges = space.mesh.edges_with_tag(tag)
    nq = space.p + 3
    pts, wts, normals = edge_quadrature(space, tag, nq)
    t = np.polynomial.legendre.leggauss(nq)[0]
    t = 0.5 * (t + 1.0)
    phi = _edge_basis_1d(space.p, t)
    rows = _edge_dof_rows(space, edges)
    E, Q = wts.shape
    nn = np.broadcast_to(normals[:, None, :], (E, Q, 2))
    gv = np.asarray(g(pts[..., 0].ravel(), pts[..., 1].ravel(),
                      nn[..., 0].ravel(), nn[..., 1].ravel()),
                    dtype=complex).reshape(E, Q)
    loc = np.einsum("qn,eq,eq->en", phi, wts, gv)
    b = np.zeros(space.ndof, dtype=complex)
    np.add.at(b, rows.reshape(-1), loc.reshape(-1))
    return b


# -- constraints -----------------------------------------------------------------------

class Constraints:
    """Affine relations u_slave = sum coef * u_master + const."""

    def __init__(self, space: Space):
        self.space = space
        self.rel = {}

    def dirichlet(self, dof, value):
        self.rel[int(dof)] = ([], complex(value))

    def tie(self, slave, master):
        self.rel[int(slave)] = ([(int(master), 1.0)], 0.0)

    def jump(self, slave, master, g):
        """u_slave = u_master + g."""
        self.rel[int(slave)] = ([(int(master), 1.0)], complex(g))

    def _resolved(self):
        out = {}
        for s, (terms, const) in self.rel.items():
            for _ in range(8):
                if not any(m in self.rel for m, _c in terms):
                    break
                nt, nc = [], const
                for m, c in terms:
                    if m in self.rel:
                        mt, mc = self.rel[m]
                        nt.extend((mm, c * cc) for mm, cc in mt)
                        nc += c * mc
                    else:
                        nt.append((m, c))
                terms, const = nt, nc
            else:
                raise SingularSystem("constraint chain does not resolve")
            out[s] = (terms, const)
        return out

    def build(self):
        """Prolongation u_full = C u_free + d."""
        rel = self._resolved()
        n = self.space.ndof
        free = np.array(sorted(set(range(n)) - set(rel)), dtype=np.int64)
        col_of = {int(d): i for i, d in enumerate(free)}
        rows, cols, vals = list(free), list(range(len(free))), [1.0] * len(free)
        d = np.zeros(n, dtype=complex)
        for s, (terms, const) in rel.items():
            d[s] = const
            for m, c in terms:
                rows.append(s)
                cols.append(col_of[m])
                vals.append(c)
        C = sp.coo_matrix((vals, (rows, cols)), shape=(n, len(free)),
                          dtype=complex).tocsr()
        return C, d, free


def tie_periodic(space: Space, cons: Constraints,
                 left_tag="Periodic_left", right_tag="Periodic_right",
                 tol=1e-9):
    """Tie right-side dofs to the congruent left-side dofs (matched by y)."""
    coords = space.dof_coords

    def side_dofs(tag):
        rows = _edge_dof_rows(space, space.mesh.edges_with_tag(tag))
        return np.unique(rows)

    ld, rd = side_dofs(left_tag), side_dofs(right_tag)
    if ld.size != rd.size:
        raise SingularSystem("periodic sides have different dof counts")
    lo = ld[np.argsort(coords[ld, 1])]
    ro = rd[np.argsort(coords[rd, 1])]
    if np.max(np.abs(coords[lo, 1] - coords[ro, 1])) > tol:
        raise SingularSystem("periodic sides are not congruent")
    for s, m in zip(ro, lo):
        cons.tie(s, m)


# -- solving and evaluation ----------------------------------------------------------

def solve(A, b, constraints: Constraints | None = None,
          mean_zero_space: Space | None = None, rtol=1e-10,
          return_residual=False):
    """Direct sparse solve of A u = b with optional constraint elimination.

    With mean_zero_space set, the one-dimensional kernel of the pure-Neumann
    operator is removed by pinning a single dof to zero (keeping the system
    fully sparse) and the solution is shifted to a zero weighted mean
    afterwards; the data must be compatible for this to be consistent.
    """
    if constraints is not None:
        C, d, _ = constraints.build()
        A_red = (C.T @ (A @ C)).tocsc()
        b_red = C.T @ (b - A @ d)
    else:
        C, d = None, None
        A_red = sp.csc_matrix(A, dtype=complex)
        b_red = np.asarray(b, dtype=complex)
    w = None
    if mean_zero_space is not None:
        w = mass(mean_zero_space) @ np.ones(mean_zero_space.ndof)
        if C is not None:
            w = C.T @ w
        keep = np.ones(A_red.shape[0], dtype=bool)
        keep[int(np.argmax(np.abs(w)))] = False
        A_red = A_red[keep][:, keep].tocsc()
        b_red = b_red[keep]
    try:
        lu = splu(A_red)
    except RuntimeError as exc:
        raise SingularSystem(f"factorization failed: {exc}") from exc
    x = lu.solve(b_red)
    res = np.linalg.norm(A_red @ x - b_red) / max(np.linalg.norm(b_red), 1e-300)
    if not np.isfinite(res) or res > rtol:
        raise SingularSystem(f"direct solve residual {res:.2e} exceeds {rtol}")
    if mean_zero_space is not None:
        full = np.zeros(keep.size, dtype=complex)
        full[keep] = x
        x = full - (w @ full) / w.sum() * np.ones(keep.size)
    if C is not None:
        x = C @ x + d
    if return_residual:
        return x, float(res)
    return x


class Field:
    """A coefficient vector over a Space, evaluable anywhere in the mesh."""

    def __init__(self, space: Space, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs, dtype=complex).reshape(space.ndof)

    def evaluate(self, points, loc=None):
        elem, ref = self.space.locate(points) if loc is None else loc
        phi = self.space.ref.eval(ref)          # (Q, nloc)
        dofs = self.space.element_dofs[elem]
        return np.einsum("qn,qn->q", phi, self.coeffs[dofs])

    def gradient(self, points, loc=None):
        elem, ref = self.space.locate(points) if loc is None else loc
        gphi = self.space.ref.grad(ref)         # (Q, nloc, 2)
        _, Jinv, _ = self.space._jacobians()
        g = np.einsum("qji,qnj->qni", Jinv[elem], gphi)
        dofs = self.space.element_dofs[elem]
        return np.einsum("qni,qn->qi", g, self.coeffs[dofs])

    def values_at_own_quad(self, order=None):
        order = order if order is not None else _quad_order(self.space)
        qp, _ = _tri_rule(order)
        phi = self.space.ref.eval(qp)
        vals = np.einsum("qn,en->eq", phi, self.coeffs[self.space.element_dofs])
        return vals.reshape(-1)

    def grads_at_own_quad(self, order=None):
        order = order if order is not None else _quad_order(self.space)
        qp, _ = _tri_rule(order)
        gphi = self.space.ref.grad(qp)
        _, Jinv, _ = self.space._jacobians()
        g = np.einsum("eji,qnj->eqni", Jinv, gphi)
        vals = np.einsum("eqni,en->eqi", g, self.coeffs[self.space.element_dofs])
        return vals.reshape(-1, 2)
