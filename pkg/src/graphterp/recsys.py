"""Item-graph collaborative filtering: ratings ingestion, cosine item-item
graph, per-user subgraph assembly, and rating prediction through any of the
interpolation methods.

For each user, the items they rated form the known set S and the items to
predict form U. The pipeline induces the S+U subgraph of the global item
graph, sparsifies it to the top-K neighbors per item, reweights links
between known items by how close the user rated them, and interpolates the
rating signal (zeros on U, known ratings on S).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .bandlimited import (
    SampleSet,
    StoppingRule,
    count_in_band,
    ilsr,
    lsr,
    min_unknown_eigenvalue,
)
from .errors import (
    ColdStartUserError,
    NoBasisVectorsError,
    OutOfScaleRatingError,
    ParseError,
    RankDeficientError,
    SingularSystemError,
)
from .graph import Graph, _graph_from_csr, induce_subgraph, knn_sparsify, normalized_laplacian
from .regularized import RegConfig, irbm, rbm_closed_form
from .spectral import eigendecompose, exp_highpass

RATING_SCALES = {"movielens": (1.0, 5.0), "jester": (0.0, 20.0), "bxbooks": (1.0, 10.0)}

METHODS = ("lsr", "ilsr", "rbm", "irbm")


@dataclass(frozen=True)
class RatingMatrix:
    """Sparse user x item ratings with the rating-scale bounds.

    ``users``/``items`` hold dense 0-based indices; ``user_ids``/``item_ids``
    map those back to the original identifiers from the source file.
    """

    num_users: int
    num_items: int
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    scale: tuple[float, float]
    user_ids: tuple = ()
    item_ids: tuple = ()

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.ratings, (self.users, self.items)),
            shape=(self.num_users, self.num_items),
        )

    @property
    def num_entries(self) -> int:
        return len(self.ratings)

    def subset(self, entry_indices) -> "RatingMatrix":
        """Rating matrix restricted to the given entry indices (same id space)."""
        idx = np.asarray(entry_indices, dtype=np.int64)
        return RatingMatrix(
            num_users=self.num_users,
            num_items=self.num_items,
            users=self.users[idx],
            items=self.items[idx],
            ratings=self.ratings[idx],
            scale=self.scale,
            user_ids=self.user_ids,
            item_ids=self.item_ids,
        )

    def item_means(self) -> np.ndarray:
        """Mean training rating per item; scale midpoint where an item has none."""
        sums = np.zeros(self.num_items)
        counts = np.zeros(self.num_items)
        np.add.at(sums, self.items, self.ratings)
        np.add.at(counts, self.items, 1.0)
        mid = 0.5 * (self.scale[0] + self.scale[1])
        with np.errstate(invalid="ignore"):
            means = np.where(counts > 0, sums / np.maximum(counts, 1.0), mid)
        return means


@dataclass(frozen=True)
class BilateralConfig:
    """Per-user reweighting of links between known items."""

    sigma_r: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if self.sigma_r <= 0:
            raise ValueError(f"sigma_r must be positive, got {self.sigma_r}")


@dataclass(frozen=True)
class PredictionConfig:
    """Hyperparameters of the per-user prediction pipeline."""

    knn_k: int = 30
    bilateral: BilateralConfig = field(default_factory=BilateralConfig)
    alpha: float = 0.05
    beta: Optional[float] = None
    degree: int = 25
    filter_mode: str = "poly"  # "poly" or "ideal" for the iterative methods
    stop: StoppingRule = field(default_factory=StoppingRule)


@dataclass(frozen=True)
class UserContext:
    """Assembled per-user problem: local subgraph plus sample bookkeeping."""

    user: int
    vertices: np.ndarray  # original item indices, sorted
    subgraph: Graph
    known_local: np.ndarray
    known_values: np.ndarray
    unknown_local: np.ndarray  # aligned with the caller's test item order


@dataclass(frozen=True)
class UserPrediction:
    values: np.ndarray
    fallback_items: tuple = ()  # test items predicted by fallback, not the solver
    iterations: int = 0
    converged: bool = True
    solver_fallback: bool = False  # solver degenerate; remaining items used user mean


def _parse_movielens(fh):
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) == 1:
            parts = line.split()
        if len(parts) < 3:
            raise ParseError(f"expected user<TAB>item<TAB>rating[<TAB>timestamp], got {line!r}", line=lineno)
        try:
            yield lineno, parts[0], parts[1], float(parts[2])
        except ValueError:
            raise ParseError(f"bad rating in {line!r}", line=lineno)


def _parse_jester(fh):
    # user,item,raw with raw in [-10, 9]; rescaled onto [0, 20] and rounded
    for lineno, row in enumerate(csv.reader(fh), start=1):
        if not row or (row[0].startswith("#")):
            continue
        if len(row) < 3:
            raise ParseError(f"expected user,item,rating, got {row!r}", line=lineno)
        try:
            raw = float(row[2])
        except ValueError:
            raise ParseError(f"bad rating in {row!r}", line=lineno)
        if raw < -10.0 or raw > 9.0:
            raise OutOfScaleRatingError(f"line {lineno}: raw rating {raw} outside [-10, 9]")
        yield lineno, row[0].strip(), row[1].strip(), float(round((raw + 10.0) * 20.0 / 19.0))


def _parse_bxbooks(fh):
    # semicolon-separated, optionally quoted: user;isbn;rating on a 1-10 scale;
    # zero ratings are implicit feedback and are dropped
    for lineno, row in enumerate(csv.reader(fh, delimiter=";"), start=1):
        if not row:
            continue
        if len(row) < 3:
            raise ParseError(f"expected user;item;rating, got {row!r}", line=lineno)
        user, item, rating = (tok.strip().strip('"') for tok in row[:3])
        if lineno == 1 and not _is_number(rating):
            continue  # header row
        try:
            value = float(rating)
        except ValueError:
            raise ParseError(f"bad rating in {row!r}", line=lineno)
        if value == 0.0:
            continue
        yield lineno, user, item, value


def _is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


_PARSERS = {"movielens": _parse_movielens, "jester": _parse_jester, "bxbooks": _parse_bxbooks}


def load_ratings(source, fmt: str = "movielens") -> RatingMatrix:
    """Load a ratings file into a RatingMatrix with the format's scale.

    Original ids are remapped to dense 0-based indices (sorted id order);
    the maps are retained on the result. Raises ParseError on malformed
    lines or duplicates and OutOfScaleRatingError on out-of-range ratings.
    """
    if fmt not in _PARSERS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {sorted(_PARSERS)}")
    scale = RATING_SCALES[fmt]
    raw_users, raw_items, values = [], [], []
    seen = {}
    with open(source, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, user, item, value in _PARSERS[fmt](fh):
            if not (scale[0] <= value <= scale[1]):
                raise OutOfScaleRatingError(
                    f"line {lineno}: rating {value} outside scale {scale}"
                )
            key = (user, item)
            if key in seen:
                raise ParseError(
                    f"duplicate rating for user {user!r}, item {item!r} "
                    f"(first at line {seen[key]})",
                    line=lineno,
                )
            seen[key] = lineno
            raw_users.append(user)
            raw_items.append(item)
            values.append(value)
    if not values:
        raise ParseError("no entries")
    user_ids = sorted(set(raw_users), key=_id_sort_key)
    item_ids = sorted(set(raw_items), key=_id_sort_key)
    uidx = {u: i for i, u in enumerate(user_ids)}
    iidx = {m: i for i, m in enumerate(item_ids)}
    return RatingMatrix(
        num_users=len(user_ids),
        num_items=len(item_ids),
        users=np.array([uidx[u] for u in raw_users], dtype=np.int64),
        items=np.array([iidx[m] for m in raw_items], dtype=np.int64),
        ratings=np.array(values, dtype=np.float64),
        scale=scale,
        user_ids=tuple(user_ids),
        item_ids=tuple(item_ids),
    )


def _id_sort_key(token: str):
    # numeric ids sort numerically so movielens indices line up with intuition
    return (0, int(token), "") if token.isdigit() else (1, 0, token)


def cosine_item_graph(train: RatingMatrix, co_rated_only: bool = False) -> Graph:
    """Item-item graph weighted by cosine similarity of rating columns.

    Ratings absent from the training set count as zero, the standard
    item-based scheme; ``co_rated_only`` instead normalizes by the rating
    mass restricted to users who rated both items. Items sharing no rater
    get no edge; items with no ratings at all end up isolated.
    """
    if train.num_items < 2:
        raise ValueError("need at least 2 items to build an item graph")
    r = train.matrix.tocsc()
    gram = (r.T @ r).tocoo()
    mask = gram.row != gram.col
    rows, cols, num = gram.row[mask], gram.col[mask], gram.data[mask]
    if co_rated_only:
        pattern = r.copy()
        pattern.data = np.ones_like(pattern.data)
        sq = r.copy()
        sq.data = sq.data**2
        restricted = (sq.T @ pattern).tocsr()  # (i,j): sum of r_ui^2 over raters of j
        d1 = np.asarray(restricted[rows, cols]).ravel()
        d2 = np.asarray(restricted[cols, rows]).ravel()
        den = np.sqrt(d1 * d2)
    else:
        norms = np.sqrt(np.asarray(r.multiply(r).sum(axis=0)).ravel())
        den = norms[rows] * norms[cols]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(den > 0, num / np.maximum(den, 1e-300), 0.0)
    keep = w > 0
    adj = sp.csr_matrix(
        (w[keep], (rows[keep], cols[keep])),
        shape=(train.num_items, train.num_items),
    )
    adj = adj.maximum(adj.T)  # exact symmetry regardless of summation order
    return _graph_from_csr(train.num_items, adj)


def bilateral_adjust(g: Graph, s_items, s_values, cfg: BilateralConfig) -> Graph:
    """Scale weights between known items by a Gaussian of their rating gap.

    Edges touching any unknown vertex are left unchanged; no weight ever
    increases, so the result stays a valid graph.
    """
    if not cfg.enabled:
        return g
    s_items = np.asarray(s_items, dtype=np.int64)
    s_values = np.asarray(s_values, dtype=np.float64)
    rating_of = np.full(g.n, np.nan)
    rating_of[s_items] = s_values
    coo = g.adjacency.tocoo()
    is_known = ~np.isnan(rating_of)
    both = is_known[coo.row] & is_known[coo.col]
    gap = np.where(both, rating_of[coo.row] - rating_of[coo.col], 0.0)
    factor = np.where(both, np.exp(-(gap**2) / (2.0 * cfg.sigma_r**2)), 1.0)
    adj = sp.csr_matrix(
        (coo.data * factor, (coo.row, coo.col)), shape=(g.n, g.n)
    )
    return _graph_from_csr(g.n, adj)


def assemble_user_context(
    g0: Graph,
    train: RatingMatrix,
    user: int,
    test_items,
    cfg: PredictionConfig,
) -> UserContext:
    """Induce, sparsify and reweight the S+U subgraph for one user."""
    test_items = np.asarray(test_items, dtype=np.int64)
    row = train.matrix.getrow(user)
    s_items, s_values = row.indices, row.data
    if len(s_items) == 0:
        raise ColdStartUserError(f"user {user} has no known ratings")
    overlap = np.intersect1d(s_items, test_items)
    if len(overlap):
        raise ValueError(f"test items {overlap.tolist()} already rated by user {user}")
    vertices = np.sort(np.concatenate([s_items, test_items]))
    sub, idx = induce_subgraph(g0, vertices)
    sub = knn_sparsify(sub, cfg.knn_k)
    known_local = np.array([idx.to_local[int(i)] for i in s_items], dtype=np.int64)
    sub = bilateral_adjust(sub, known_local, s_values, cfg.bilateral)
    unknown_local = np.array([idx.to_local[int(i)] for i in test_items], dtype=np.int64)
    return UserContext(
        user=user,
        vertices=vertices,
        subgraph=sub,
        known_local=known_local,
        known_values=s_values.astype(np.float64),
        unknown_local=unknown_local,
    )


def _reachable_unknowns(ctx: UserContext) -> np.ndarray:
    """Mask over ctx.unknown_local: True where the test item shares a
    connected component with at least one known item."""
    ncomp, labels = csgraph.connected_components(ctx.subgraph.adjacency, directed=False)
    known_comps = np.zeros(ncomp, dtype=bool)
    known_comps[labels[ctx.known_local]] = True
    return known_comps[labels[ctx.unknown_local]]


def _interpolate(ctx: UserContext, samples: SampleSet, method: str, cfg: PredictionConfig):
    """Run one interpolation method on an assembled context.

    Returns (full local signal, iterations, converged).
    """
    lap = normalized_laplacian(ctx.subgraph)
    needs_basis = method in ("lsr", "rbm") or cfg.filter_mode == "ideal"
    basis = eigendecompose(lap) if needs_basis else None

    if method in ("lsr", "ilsr"):
        sigma_sq = min_unknown_eigenvalue(lap, samples.unknown)
        omega = float(np.sqrt(sigma_sq))
        if omega <= 0:
            raise NoBasisVectorsError("zero cutoff: unknown set touches a null direction")
        if method == "lsr":
            return lsr(basis, samples, omega), 0, True
        res = ilsr(
            lap,
            samples,
            omega,
            mode=cfg.filter_mode,
            degree=cfg.degree,
            stop=cfg.stop,
            basis=basis,
        )
        return res.signal, res.iterations, res.converged

    if method in ("rbm", "irbm"):
        reg = RegConfig(
            alpha=cfg.alpha, beta=cfg.beta, kernel=exp_highpass(), stop=cfg.stop
        )
        if method == "rbm":
            return rbm_closed_form(basis, samples, reg), 0, True
        res = irbm(
            lap, samples, reg, mode=cfg.filter_mode, degree=cfg.degree, basis=basis
        )
        return res.signal, res.iterations, res.converged

    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def predict_user(
    g0: Graph,
    train: RatingMatrix,
    user: int,
    test_items,
    method: str,
    cfg: Optional[PredictionConfig] = None,
) -> UserPrediction:
    """Predict this user's ratings for ``test_items`` with one method.

    Predictions are clipped to the rating scale. Test items the graph
    cannot reach from the user's known items (isolated vertices, detached
    components) fall back to the user's mean rating, as does the whole user
    when the solver reports a degenerate system.
    """
    preds = predict_user_methods(g0, train, user, test_items, (method,), cfg)
    return preds[method]


def predict_user_methods(
    g0: Graph,
    train: RatingMatrix,
    user: int,
    test_items,
    methods,
    cfg: Optional[PredictionConfig] = None,
) -> dict:
    """predict_user for several methods over one shared subgraph assembly."""
    cfg = cfg or PredictionConfig()
    test_items = np.asarray(test_items, dtype=np.int64)
    ctx = assemble_user_context(g0, train, user, test_items, cfg)
    user_mean = float(np.mean(ctx.known_values))
    rmin, rmax = train.scale

    reachable = _reachable_unknowns(ctx)
    fallback_items = tuple(int(t) for t in test_items[~reachable])

    out = {}
    if not reachable.any():
        values = np.full(len(test_items), np.clip(user_mean, rmin, rmax))
        for method in methods:
            out[method] = UserPrediction(values=values.copy(), fallback_items=fallback_items)
        return out

    # strip unreachable test items: they would force the cutoff to zero and
    # make the regularized system singular
    keep_vertices = np.ones(ctx.subgraph.n, dtype=bool)
    keep_vertices[ctx.unknown_local[~reachable]] = False
    if not keep_vertices.all():
        local_ids = np.flatnonzero(keep_vertices)
        sub, idx = induce_subgraph(ctx.subgraph, local_ids)
        remap = idx.to_local
        ctx = UserContext(
            user=ctx.user,
            vertices=ctx.vertices[local_ids],
            subgraph=sub,
            known_local=np.array([remap[int(v)] for v in ctx.known_local], dtype=np.int64),
            known_values=ctx.known_values,
            unknown_local=np.array(
                [remap[int(v)] for v in ctx.unknown_local[reachable]], dtype=np.int64
            ),
        )

    samples = SampleSet(
        n=ctx.subgraph.n, known=ctx.known_local, known_values=ctx.known_values
    )
    for method in methods:
        solver_fallback = False
        try:
            signal, iterations, converged = _interpolate(ctx, samples, method, cfg)
            predicted = signal[ctx.unknown_local]
        except (RankDeficientError, NoBasisVectorsError, SingularSystemError):
            predicted = np.full(len(ctx.unknown_local), user_mean)
            iterations, converged = 0, True
            solver_fallback = True
        values = np.full(len(test_items), user_mean)
        values[reachable] = predicted
        out[method] = UserPrediction(
            values=np.clip(values, rmin, rmax),
            fallback_items=fallback_items,
            iterations=iterations,
            converged=converged,
            solver_fallback=solver_fallback,
        )
    return out
