"""Built-in objective sets and the reference priority settings and results.

``SCENARIO1_PRIORITIES[r]`` holds the initial priority rows of setting
``r + 1`` (agent 1 first). ``SCENARIO1_RESULTS`` carries the reference
reference columns ``(wbar1, wbar2, x_star, x_hat, F(x_star), F(x_hat))``.
"""
from __future__ import annotations

from .objectives import (
    AffineQuadratic1D,
    Composite,
    ExponentialSum,
    Linear,
    QuadraticForm,
    SumOfSquares,
)

SCENARIO1_ALPHA = 2e-5
SCENARIO1_K_MAX = 100_000
SCENARIO1_X0 = (485.0, 200.0)

SCENARIO1_PRIORITIES = (
    ((0.134, 0.866), (0.022, 0.978)),
    ((0.577, 0.423), (0.026, 0.974)),
    ((0.139, 0.861), (0.476, 0.524)),
    ((0.561, 0.439), (0.269, 0.731)),
    ((0.560, 0.440), (0.301, 0.699)),
    ((0.521, 0.479), (0.372, 0.628)),
    ((0.433, 0.567), (0.471, 0.529)),
    ((0.647, 0.353), (0.308, 0.692)),
    ((0.287, 0.713), (0.801, 0.199)),
    ((0.447, 0.553), (0.646, 0.354)),
    ((0.362, 0.638), (0.788, 0.212)),
    ((0.849, 0.151), (0.373, 0.627)),
    ((0.749, 0.251), (0.504, 0.496)),
    ((0.549, 0.451), (0.728, 0.272)),
    ((0.780, 0.220), (0.669, 0.331)),
    ((0.896, 0.104), (0.598, 0.402)),
    ((0.716, 0.284), (0.839, 0.161)),
    ((0.937, 0.063), (0.830, 0.170)),
    ((0.884, 0.116), (0.944, 0.056)),
    ((0.939, 0.061), (0.981, 0.019)),
)

SCENARIO1_RESULTS = (
    (0.078, 0.922, -265.57, -265.56, 21849, 21849),
    (0.301, 0.699, -232.34, -232.33, 50241, 50241),
    (0.307, 0.693, -231.32, -231.31, 50840, 50840),
    (0.415, 0.585, -210.92, -210.91, 60258, 60258),
    (0.430, 0.570, -207.71, -207.70, 61325, 61325),
    (0.447, 0.553, -204.20, -204.19, 62375, 62375),
    (0.452, 0.548, -203.07, -203.06, 62688, 62688),
    (0.477, 0.523, -197.42, -197.41, 64077, 64077),
    (0.544, 0.456, -181.39, -181.38, 66550, 66550),
    (0.546, 0.454, -180.70, -180.69, 66612, 66612),
    (0.575, 0.425, -173.09, -173.08, 67064, 67064),
    (0.611, 0.389, -163.16, -163.15, 67069, 67069),
    (0.626, 0.374, -158.57, -158.56, 66863, 66863),
    (0.639, 0.361, -154.86, -154.85, 66606, 66606),
    (0.724, 0.276, -126.37, -126.36, 62224, 62224),
    (0.747, 0.253, -118.03, -118.03, 60231, 60231),
    (0.777, 0.223, -106.02, -106.01, 56865, 56865),
    (0.883, 0.117, -56.99, -56.96, 38136, 38136),
    (0.914, 0.086, -40.30, -40.25, 30263, 30263),
    (0.960, 0.040, -12.26, -12.18, 15674, 15674),
)


def scenario1_objectives():
    return [
        AffineQuadratic1D(coord=1, a=2.0, center=15.0, offset=100.0),
        AffineQuadratic1D(coord=1, a=5.0, center=-275.0, offset=10_000.0),
    ]


_X1X2 = ((1.0, 0.5), (0.5, 1.0))  # x1^2 + x1 x2 + x2^2


def scenario2_objectives():
    """The twenty objectives over ``x`` in R^10.

    The nineteenth is implemented as ``2 (x1^2 + x1 x2 + x2^2)``; the printed
    ``2 (x1 + x1 x2 + x2^2)`` is not convex.
    """
    q12 = QuadraticForm(coords=(1, 2), matrix=_X1X2)
    return [
        q12,
        Composite(parts=((5.0, q12),)),
        Linear(coords=(1, 2, 3), coeffs=(10.0, 15.0, 20.0)),
        SumOfSquares(coords=tuple(range(1, 11))),
        ExponentialSum(terms=((1.0, 1.0, 1),)),
        AffineQuadratic1D(coord=1, a=3.0, center=-17.0, offset=150.0),
        AffineQuadratic1D(coord=1, a=30.0, center=-3.0, offset=30.0),
        AffineQuadratic1D(coord=1, a=7.0, center=10.0, offset=10.0),
        SumOfSquares(coords=(1, 2)),
        Linear(coords=(1, 2, 3), coeffs=(1.0, 1.0, 1.0)),
        AffineQuadratic1D(coord=1, a=2.0),
        AffineQuadratic1D(coord=1, a=1.0),
        Linear(coords=(1,), coeffs=(5.0,), const=150.0),
        Linear(coords=tuple(range(1, 7)), coeffs=(1.0,) * 6),
        AffineQuadratic1D(coord=1, a=10.0, center=-25.0),
        ExponentialSum(terms=((1.0, 2.0, 1), (1.0, 3.0, 2), (1.0, 3.0, 3), (1.0, 3.0, 4))),
        SumOfSquares(coords=tuple(range(1, 7))),
        AffineQuadratic1D(coord=1, a=15.0, center=15.0, offset=-100.0),
        Composite(parts=((2.0, q12),)),
        ExponentialSum(terms=((100.0, 1.0, 1),)),
    ]


BUILTIN_OBJECTIVES = {
    "scenario1": (scenario1_objectives, 1),
    "scenario2": (scenario2_objectives, 10),
}
