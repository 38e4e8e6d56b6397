import numpy as np
import pytest

from conftest import cycles_of, field_for
from juliageom.errors import (
    DegenerateEndpoints,
    Disconnected,
    InsufficientData,
    PathTouchesBoundary,
    ValidationError,
)
from juliageom.grid import GridSpec, JuliaSample, classify_and_label, distance_field, julia_sample
from juliageom.pullback import Polyline
from juliageom.ratmap import RationalMap
from juliageom.regularity import (
    ComponentGraph,
    JohnContext,
    absorbing_balls,
    audit,
    crosscut_continuum,
    holder_check,
    john_estimate,
    john_path,
    qh_distance,
    qh_length,
    random_julia_pairs,
    reaudit,
    sample_cells,
    set_diameter,
)
from juliageom.sphere import INF, chordal_distance

# qh distance from 0 to 0.9 in the unit disk with chordal delta: the
# integral of 2 dx / (1 + x^2) / chordal(x, 1) over [0, 0.9], frozen
QH_DISK_0_TO_09 = 2.757


def disk_delta(radius):
    def delta(z):
        z = np.asarray(z, complex)
        r = np.abs(z)
        edge = np.where(r > 0, z / np.where(r > 0, r, 1), 1.0) * radius
        return chordal_distance(z, edge)

    return delta


def test_qh_length_disk_center_to_half_radius():
    delta = disk_delta(0.01)
    L = qh_length(Polyline([0j, 0.005 + 0j]), delta)
    assert L == pytest.approx(np.log(2), rel=0.03)


def test_qh_length_zero_and_additive():
    delta = disk_delta(1.0)
    assert qh_length(Polyline([0.3j, 0.3j]), delta) == 0.0
    a, b, c = 0.1 + 0.1j, 0.4 - 0.2j, -0.3 + 0.5j
    whole = qh_length(Polyline([a, b, c]), delta)
    parts = qh_length(Polyline([a, b]), delta) + qh_length(Polyline([b, c]), delta)
    assert whole == pytest.approx(parts, rel=1e-12)


def test_qh_length_touching_boundary_raises():
    with pytest.raises(PathTouchesBoundary):
        qh_length(Polyline([0j, 1 + 0j]), disk_delta(1.0))
    with pytest.raises(PathTouchesBoundary):
        qh_length(Polyline([0j, 0.5 + 0j]), disk_delta(1.0), min_delta=0.7)


def test_qh_distance_disk(disk512):
    _, field, _ = disk512
    z0, z = field.spec.cell_of(0j), field.spec.cell_of(0.9 + 0j)
    d = qh_distance(field, z, z0)
    assert d == pytest.approx(QH_DISK_0_TO_09, rel=0.15)
    assert qh_distance(field, z0, z0) == 0.0
    assert qh_distance(field, z0, z) == pytest.approx(d, rel=1e-12)


def test_qh_distance_across_components_raises(disk512):
    _, field, _ = disk512
    with pytest.raises(Disconnected):
        qh_distance(field, field.spec.cell_of(0j), field.spec.cell_of(1.2 + 0j))


def test_component_graph_rejects_foreign_cell(disk512):
    _, field, _ = disk512
    g = ComponentGraph(field, field.component_at(0j))
    with pytest.raises(ValidationError):
        g.node(field.spec.cell_of(1.2 + 0j))


def test_audit_definition():
    ratio, worst = audit(0j, [0j, 1 + 0j, 2 + 0j], [0.0, 0.5, 10.0])
    assert ratio == pytest.approx(0.5 / chordal_distance(1, 0))
    assert worst == 1
    assert audit(0j, [0j], [0.0]) == (1.0, 0j)


def test_john_path_disk(disk512):
    f, field, _ = disk512
    ctx = JohnContext(f, field, field.component_at(0j))
    assert ctx.has_attractor and ctx.base_point == 0
    pts, deltas, ratio, _, _ = john_path(ctx, field.spec.cell_of(0.9 + 0j))
    assert ratio >= 0.85
    assert chordal_distance(pts[-1], 0) < field.cell_diagonal().max()
    pts, _, ratio, _, _ = john_path(ctx, ctx.base)
    assert len(pts) == 1 and ratio == 1.0


def test_absorbing_ball_superattracting():
    f = RationalMap.quadratic(0)
    balls = absorbing_balls(f, [c for c in cycles_of(0) if c.kind in ("superattracting", "attracting")])
    assert balls and all(r > 0.5 for _, r in balls)


def test_john_estimate_disk_and_reaudit(disk512):
    f, field, _ = disk512
    comp = field.component_at(0j)
    rep = john_estimate(f, field, comp, samples=200, seed=3)
    assert rep.epsilon_hat > 0.9
    assert reaudit(rep) == rep.epsilon_hat
    again = john_estimate(f, field, comp, samples=200, seed=3)
    assert again.to_dict() == rep.to_dict()
    assert set(rep.builder_counts) <= {"delta_ascent", "dynamic_lift"}


def test_john_estimate_validation(disk512):
    f, field, _ = disk512
    comp = field.component_at(0j)
    with pytest.raises(ValidationError):
        john_estimate(f, field, comp, samples=20, builder="straight")
    with pytest.raises(InsufficientData):
        john_estimate(f, field, comp, samples=5)


def test_sample_cells_share_and_seed(disk512):
    _, field, _ = disk512
    comp = field.component_at(0j)
    a = sample_cells(field, comp, 100, seed=7)
    assert a == sample_cells(field, comp, 100, seed=7)
    d = np.array([field.delta_hat[c] for c in a])
    assert np.all(d > field.cell_diagonal()[tuple(np.array(a).T)])
    assert len(set(a)) == 100


def test_holder_disk(disk512):
    f, field, _ = disk512
    rep = holder_check(f, field, field.component_at(0j), samples=400, seed=0)
    assert rep.slope == pytest.approx(1.0, rel=0.25)
    assert rep.verdict == "holder_consistent"
    assert rep.points_used >= 100
    # entry time of z^2 into B(0, r_V) grows like log log (1/delta), slowly
    assert np.isfinite(rep.entry_slope)


def test_holder_chebyshev_basin_of_infinity():
    f, field, _ = field_for(-2, 256, "inverted", 1.0)
    rep = holder_check(f, field, field.component_at(INF), samples=300, seed=1)
    assert rep.verdict == "holder_consistent"


def test_holder_insufficient(disk512):
    f, field, _ = disk512
    with pytest.raises(InsufficientData):
        holder_check(f, field, field.component_at(0j), samples=5)


def test_set_diameter_exact_and_hull():
    pts = np.exp(2j * np.pi * np.arange(8) / 8) * 0.5
    assert set_diameter(pts) == pytest.approx(chordal_distance(0.5, -0.5))
    rng = np.random.default_rng(0)
    big = 0.3 * (rng.random(6000) + 1j * rng.random(6000))
    big = np.concatenate([big, [0j, 0.3 + 0.3j]])
    assert set_diameter(big) == pytest.approx(chordal_distance(0, 0.3 + 0.3j), rel=1e-9)


@pytest.fixture(scope="module")
def circle_field():
    """z^2 at N = 256 with a sample containing 1 and e^{0.2i}."""
    f = RationalMap.quadratic(0)
    fl = classify_and_label(f, GridSpec("standard", 0j, 1.25, 256), cycles_of(0))
    base = julia_sample(f, 20000, 1, method="mixed", field=fl)
    sample = JuliaSample(np.concatenate([base.points, [1 + 0j, np.exp(0.2j), np.exp(1j)]]), base.method)
    distance_field(fl, sample)
    return f, fl, sample


def test_crosscut_circle_arc(circle_field):
    f, field, sample = circle_field
    a, b = 1 + 0j, np.exp(0.2j)
    rep = crosscut_continuum(f, field, sample, a, b)
    assert rep.ratio <= 1.7
    # every point of C is a sample-near point, a replacement cell or an endpoint
    d = field.delta_at(rep.continuum_points)
    cells = field.cell_diagonal().max()
    assert np.all(d < 1.5 * cells + 1e-12)
    assert rep.continuum_diameter >= rep.theta - 1e-12
    assert rep.to_dict()["crossings"] == rep.crossings


def test_crosscut_long_chord_replaced_by_arc(circle_field):
    f, field, sample = circle_field
    rep = crosscut_continuum(f, field, sample, 1 + 0j, np.exp(1j))
    assert rep.crossings == 1
    (cross,) = rep.details
    assert cross.component_id == field.component_at(0j)
    # the cap side is replaced by the short arc, not by the long way round
    assert rep.ratio <= 1.1
    assert np.all(np.abs(np.angle(rep.continuum_points)) < 1.1)


def test_crosscut_degenerate_and_off_sample(circle_field):
    f, field, sample = circle_field
    with pytest.raises(DegenerateEndpoints):
        crosscut_continuum(f, field, sample, 1 + 0j, 1 + 0j)
    with pytest.raises(ValidationError):
        crosscut_continuum(f, field, sample, 0.5 + 0j, -0.5 + 0j)


def test_random_julia_pairs_bounds(circle_field):
    _, field, sample = circle_field
    pairs = random_julia_pairs(field, sample, 20, seed=4)
    assert len(pairs) == 20
    assert pairs == random_julia_pairs(field, sample, 20, seed=4)
    for a, b in pairs:
        th = chordal_distance(a, b)
        assert th < 0.05 and th > 4 * field.spec.cell_size()[field.spec.cell_of(a)]
