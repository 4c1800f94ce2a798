"""
Exact multilinearization helpers: polynomial lifting with copy variables,
trigonometric state lifting and rotations between dq frames.
"""
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

from src.blocks.builder import FragmentBuilder, Poly, const, sig
from src.core.errors import ModelFormatError
from src.core.types import Cpn1Model


@dataclass(frozen=True)
class TrigLift:
    """
    (cos, sin) replacement of an angle state.

    rate_expr names the signal equal to the angle's time derivative, when
    there is one.
    """

    angle_name: str
    cos_name: str
    sin_name: str
    rate_expr: Optional[str] = None

    @property
    def pair(self) -> Tuple[str, str]:
        return (self.cos_name, self.sin_name)


def lift_polynomial(
    state: str,
    powers: Mapping[str, int],
    coefficient: float = 1.0,
    name: str = "poly",
) -> Cpn1Model:
    """
    Fragment for d/dt state = coefficient * prod(var ** power).

    A variable raised to d >= 2 gets d - 1 copies alpha_<var>_<k> with
    0 = var - alpha_<var>_<k>, so the product only multiplies distinct signals.
    """
    builder = FragmentBuilder(name)
    builder.states(state)
    factors = []
    copies = []
    for var, power in powers.items():
        if int(power) != power or power < 0:
            raise ModelFormatError(f"power of '{var}' must be a nonnegative integer, got {power}")
        if power == 0:
            continue
        factors.append(var)
        for k in range(1, int(power)):
            alias = f"alpha_{var}_{k}"
            builder.algebraics(alias)
            factors.append(alias)
            copies.append((var, alias))
    monomial = const(coefficient)
    for factor in factors:
        monomial = monomial * sig(factor)
    builder.equation("rate", builder.d(state) - monomial)
    for var, alias in copies:
        builder.equation(f"copy_{alias}", sig(var) - sig(alias))
    return builder.build()


def add_trig_lift(
    builder: FragmentBuilder,
    lift: TrigLift,
    rate: Poly,
    copies: Optional[Tuple[str, str]] = None,
) -> None:
    """
    Add 0 = dz_cos + rate * z_sin and 0 = dz_sin - rate * z_cos to a builder.

    When the rate itself reads a lifted state, the multipliers are replaced by
    algebraic copies so both products stay multilinear; the copy constraints are
    placed after the fragment's other equations.
    """
    cos_name, sin_name = lift.pair
    for state in lift.pair:
        if not builder.defines(state):
            builder.states(state)
    mult_cos, mult_sin = sig(cos_name), sig(sin_name)
    if set(lift.pair) & set(rate.signals()):
        copy_cos, copy_sin = copies or (f"alpha_{cos_name}", f"alpha_{sin_name}")
        builder.algebraics(copy_cos, copy_sin)
        builder.equation(f"copy_{cos_name}", sig(cos_name) - sig(copy_cos), defer=True)
        builder.equation(f"copy_{sin_name}", sig(sin_name) - sig(copy_sin), defer=True)
        mult_cos, mult_sin = sig(copy_cos), sig(copy_sin)
    builder.equation(f"lift_{cos_name}", builder.d(cos_name) + rate * mult_sin)
    builder.equation(f"lift_{sin_name}", builder.d(sin_name) - rate * mult_cos)
    builder.lift(cos_name, sin_name)


def lift_trig(
    lift: TrigLift,
    rate: Optional[Poly] = None,
    with_angle: bool = False,
    name: Optional[str] = None,
) -> Cpn1Model:
    """
    Standalone lifted-angle fragment.

    Args:
        lift: the angle and its (cos, sin) state names
        rate: multilinear angle rate; defaults to the signal lift.rate_expr
        with_angle: also keep the angle state with 0 = d_angle - rate
    """
    if rate is None:
        if lift.rate_expr is None:
            raise ModelFormatError(f"lift of '{lift.angle_name}' has no rate")
        rate = sig(lift.rate_expr)
    builder = FragmentBuilder(name or f"lift_{lift.angle_name}")
    if with_angle:
        builder.states(lift.angle_name)
        builder.equation("angle", builder.d(lift.angle_name) - rate)
    add_trig_lift(builder, lift, rate)
    return builder.build()


def add_rotation(
    builder: FragmentBuilder,
    h: Tuple[str, str],
    source: Sequence[str],
    target: Sequence[str],
    inverse: bool = False,
    label: str = "rot",
) -> None:
    """
    target = R source with R = [[h1, h2], [-h2, h1]] (DQ -> dq), or its
    transpose when inverse is set (dq -> DQ). Target signals must already be
    declared on the builder.
    """
    h1, h2 = sig(h[0]), sig(h[1])
    a, b = sig(source[0]), sig(source[1])
    if inverse:
        first, second = h1 * a - h2 * b, h2 * a + h1 * b
    else:
        first, second = h1 * a + h2 * b, -h2 * a + h1 * b
    builder.equation(f"{label}_{target[0]}", sig(target[0]) - first)
    builder.equation(f"{label}_{target[1]}", sig(target[1]) - second)


def rotation_block(
    local: TrigLift,
    global_: TrigLift,
    h: Tuple[str, str] = ("h1", "h2"),
    source: Optional[Sequence[str]] = None,
    target: Optional[Sequence[str]] = None,
    name: str = "rotation",
) -> Cpn1Model:
    """
    Angle-difference terms h1 = cos(th_i - th_g), h2 = sin(th_i - th_g) from two
    lifts, optionally followed by the rotation of a (D, Q) pair into (d, q).
    """
    builder = FragmentBuilder(name)
    add_angle_difference(builder, local, global_, h)
    if source is not None:
        if target is None or len(source) != 2 or len(target) != 2:
            raise ModelFormatError("rotation needs a (D, Q) source and a (d, q) target")
        builder.algebraics(*target)
        add_rotation(builder, h, source, target)
    return builder.build()


def add_angle_difference(
    builder: FragmentBuilder,
    local: TrigLift,
    global_: TrigLift,
    h: Tuple[str, str],
) -> None:
    for lift in (local, global_):
        if not (lift.cos_name and lift.sin_name):
            raise ModelFormatError(f"missing lift for angle '{lift.angle_name}'")
    zc, zs = sig(local.cos_name), sig(local.sin_name)
    zcg, zsg = sig(global_.cos_name), sig(global_.sin_name)
    h1, h2 = builder.algebraics(*h)
    builder.equation(h[0], h1 - (zc * zcg + zs * zsg))
    builder.equation(h[1], h2 - (zs * zcg - zc * zsg))


def rotate_block(
    h: Tuple[str, str],
    source: Sequence[str],
    target: Sequence[str],
    inverse: bool = False,
    name: str = "rotate",
) -> Cpn1Model:
    builder = FragmentBuilder(name)
    builder.algebraics(*target)
    add_rotation(builder, h, source, target, inverse=inverse)
    return builder.build()
