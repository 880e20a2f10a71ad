import math

from marshmallow import Schema, ValidationError, fields, post_load, validate, validates_schema

from wedgeflow.errors import RegimeError, StructuralFailure
from wedgeflow.models import (
    BoundaryRiemannInput,
    FunctionalConstants,
    GasModel,
    InflowProfile,
    RunConfig,
    SamplingGrid,
    State,
    TrackingParams,
)
from wedgeflow.services import gasdyn, riemann
from wedgeflow.services.tracking import build_boundary


class CsvRow(fields.Field):
    """Comma-separated floats, e.g. ``-1, 3.0, 0.5, 1, 1.4``."""

    def __init__(self, length=None, **kwargs):
        super().__init__(**kwargs)
        self.length = length

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, list | tuple):
            parts = list(value)
        else:
            parts = [p.strip() for p in str(value).split(",") if p.strip()]
        try:
            numbers = tuple(float(p) for p in parts)
        except ValueError as exc:
            raise ValidationError(f"expected comma-separated numbers, got {value!r}") from exc
        if not all(math.isfinite(x) for x in numbers):
            raise ValidationError("values must be finite")
        if self.length is not None and len(numbers) != self.length:
            raise ValidationError(f"expected {self.length} values, got {len(numbers)}")
        return numbers


def _positive(x):
    return x > 0


class GasSchema(Schema):
    """Schema for the gas section"""
    gamma = fields.Float(load_default=1.4, validate=validate.Range(min=1.0, min_inclusive=False))
    kappa = fields.Float(load_default=1.0, validate=_positive)
    c_v = fields.Float(load_default=1.0, validate=_positive)

    @post_load
    def make_gas(self, data, **kwargs):
        return GasModel(**data)


class InflowSchema(Schema):
    """Schema for the inflow section: repeated ``row = y, u, v, p, rho`` lines"""
    mode = fields.String(load_default="steps", validate=validate.OneOf(["steps", "linear"]))
    row = fields.List(CsvRow(length=5), required=True, validate=validate.Length(min=1))

    @validates_schema
    def check_rows(self, data, **kwargs):
        rows = data.get("row", [])
        ys = [r[0] for r in rows]
        if any(b <= a for a, b in zip(ys, ys[1:], strict=False)):
            raise ValidationError("row abscissas y must increase strictly", "row")
        if rows and rows[-1][0] >= 0.0 and len(rows) > 1:
            raise ValidationError("the last row must start below the wall vertex (y < 0)", "row")

    @post_load
    def make_profile(self, data, **kwargs):
        return InflowProfile(rows=tuple(data["row"]), mode=data["mode"])


class BoundarySchema(Schema):
    """Schema for the boundary section: repeated ``vertex = a, b`` lines"""
    vertex = fields.List(CsvRow(length=2), load_default=lambda: [(0.0, 0.0)])

    @post_load
    def make_vertices(self, data, **kwargs):
        return tuple(tuple(v) for v in data["vertex"])


class TrackingSchema(Schema):
    """Schema for the tracking section"""
    eps = fields.Float(load_default=1e-2, validate=validate.Range(min=0.0, max=1.0, min_inclusive=False))
    x_max = fields.Float(load_default=1.0, validate=_positive)
    mu_eps = fields.Float(load_default=None, allow_none=True, validate=_positive)
    delta_eps = fields.Float(load_default=None, allow_none=True, validate=_positive)
    lambda_hat = fields.Float(load_default=None, allow_none=True, validate=_positive)
    seed = fields.Integer(load_default=0, validate=validate.Range(min=0))
    max_events = fields.Integer(load_default=200000, validate=validate.Range(min=1))
    tv_bound = fields.Float(load_default=0.2, validate=_positive)
    strong_bracket = fields.Float(load_default=0.1, validate=_positive)
    y_bottom = fields.Float(load_default=None, allow_none=True)

    @post_load
    def make_params(self, data, **kwargs):
        return TrackingParams(**data)


class FunctionalsSchema(Schema):
    """Schema for the functionals section (weights of F, Q and Φ)"""
    k_minus = fields.Float(load_default=4.0, validate=validate.Range(min=1.0))
    c_star = fields.Float(load_default=2.0, validate=_positive)
    k_star = fields.Float(load_default=0.75, validate=validate.Range(min=0.0, max=1.0, max_inclusive=False))
    k_b0_tilde = fields.Float(load_default=4.0, validate=_positive)
    kappa = fields.Float(load_default=4.0, validate=_positive)
    c_monitor = fields.Float(load_default=1e-3, validate=validate.Range(min=0.0))
    kappa1 = fields.Float(load_default=1.0, validate=validate.Range(min=0.0))
    kappa2 = fields.Float(load_default=1.0, validate=validate.Range(min=0.0))
    k_contact = fields.Float(load_default=0.5, validate=_positive)
    k_nonphysical = fields.Float(load_default=0.25, validate=_positive)
    c_b = CsvRow(length=4, load_default=(2.0, 2.0, 2.0, 2.0))
    c_m = CsvRow(length=4, load_default=(1.0, 0.5, 0.5, 1.0))
    c_a = CsvRow(length=4, load_default=(0.5, 1.0, 1.0, 0.75))

    @post_load
    def make_constants(self, data, **kwargs):
        return FunctionalConstants(**data)


class SamplingSchema(Schema):
    """Schema for the sampling section"""
    x = CsvRow(load_default=())
    y_min = fields.Float(load_default=-1.0)
    y_max = fields.Float(load_default=0.0)
    ny = fields.Integer(load_default=0, validate=validate.Range(min=0))

    @validates_schema
    def check_range(self, data, **kwargs):
        if data.get("ny", 0) > 1 and not data["y_max"] > data["y_min"]:
            raise ValidationError("y_max must exceed y_min", "y_max")

    @post_load
    def make_grid(self, data, **kwargs):
        return SamplingGrid(**data)


def _total_turning(vertices) -> float:
    """TV(g′) of the polygonal wall through the given vertices."""
    return build_boundary(vertices).total_turning


def _inflow_variation(rows) -> float:
    total = 0.0
    for r0, r1 in zip(rows, rows[1:], strict=False):
        total += math.sqrt(sum((b - a) ** 2 for a, b in zip(r0[1:], r1[1:], strict=True)))
    return total


class RunConfigSchema(Schema):
    """Whole run configuration with the admissibility conditions on the data.

    - every inflow state is supersonic in the marching direction (u > c);
    - the inflow at the wall flows into the wedge at 0 ≤ θ̄ < ω_crit, checked by
      solving the vertex problem;
    - TV(g′) and TV(Ū) + TV(g′) stay within ``tracking.tv_bound``.
    """
    gas = fields.Nested(GasSchema, required=True)
    inflow = fields.Nested(InflowSchema, required=True)
    boundary = fields.Nested(BoundarySchema, required=True)
    tracking = fields.Nested(TrackingSchema, required=True)
    functionals = fields.Nested(FunctionalsSchema, required=True)
    sampling = fields.Nested(SamplingSchema, required=True)

    @validates_schema
    def check_admissibility(self, data, **kwargs):
        g, profile = data["gas"], data["inflow"]
        errors = {}
        rows = list(profile.rows)
        for k, row in enumerate(rows):
            try:
                state = State(*row[1:])
            except RegimeError as exc:
                errors.setdefault("inflow", []).append(f"row {k}: {exc}")
                continue
            c = gasdyn.sound_speed(state, g)
            if not gasdyn.is_supersonic(state, g):
                errors.setdefault("inflow", []).append(
                    f"row {k} violates the supersonic condition u^2 + v^2 > c^2 "
                    f"(|V|={state.speed:.6g}, c={c:.6g})")
            elif not gasdyn.is_x_supersonic(state, g):
                errors.setdefault("inflow", []).append(
                    f"row {k} violates the supersonic condition in the marching direction u > c "
                    f"(u={state.u:.6g}, c={c:.6g})")
        try:
            turning = _total_turning(data["boundary"])
        except ValueError as exc:
            errors.setdefault("boundary", []).append(str(exc))
            turning = None
        bound = data["tracking"].tv_bound
        if turning is not None:
            if turning > bound:
                errors.setdefault("boundary", []).append(
                    f"TV(g') = {turning:.6g} exceeds the smallness bound {bound:.6g}")
            elif turning + _inflow_variation(rows) > bound:
                errors.setdefault("inflow", []).append(
                    f"TV(U) + TV(g') = {turning + _inflow_variation(rows):.6g} exceeds the smallness "
                    f"bound {bound:.6g}")
        if errors:
            raise ValidationError(errors)

        top = State(*rows[-1][1:])
        angle = top.flow_angle
        if angle < 0.0:
            raise ValidationError({"inflow": [
                f"inflow angle at the wall arctan(v/u) = {math.degrees(angle):.6g} deg must be >= 0"]})
        problem = BoundaryRiemannInput(state=top, omega=-angle, normal_next=(0.0, 1.0))
        try:
            riemann.solve_boundary_vertex(problem, g, data["tracking"].delta)
        except (StructuralFailure, RegimeError) as exc:
            raise ValidationError({"inflow": [
                f"inflow angle {math.degrees(angle):.6g} deg is not below the critical vertex angle: {exc}"]}
            ) from exc

    @post_load
    def make_config(self, data, **kwargs):
        return RunConfig(gas=data["gas"], inflow=data["inflow"], vertices=data["boundary"],
                         tracking=data["tracking"], functionals=data["functionals"], sampling=data["sampling"])
