//! Gauss quadrature rules exact to polynomial degree 5, in barycentric form.
//!
//! Weights sum to one; multiply by the element volume. Degree 5 is enough to
//! make quadrature error negligible against every signal measured here (the
//! integrands involve piecewise-linear fields composed with smooth fluxes).

/// 3-point Gauss–Legendre rule on the unit segment: `(ξ, weight)`.
pub const SEG_QP5: [(f64, f64); 3] = [
    (0.11270166537925831, 0.2777777777777778),
    (0.5, 0.4444444444444444),
    (0.8872983346207417, 0.2777777777777778),
];

/// 7-point degree-5 rule on the triangle: `(barycentric coords, weight)`.
pub const TRI_QP5: [([f64; 3], f64); 7] = [
    (
        [0.3333333333333333, 0.3333333333333333, 0.3333333333333333],
        0.225,
    ),
    (
        [0.47014206410511505, 0.47014206410511505, 0.05971587178976989],
        0.13239415278850616,
    ),
    (
        [0.47014206410511505, 0.05971587178976989, 0.47014206410511505],
        0.13239415278850616,
    ),
    (
        [0.05971587178976989, 0.47014206410511505, 0.47014206410511505],
        0.13239415278850616,
    ),
    (
        [0.10128650732345633, 0.10128650732345633, 0.7974269853530873],
        0.12593918054482716,
    ),
    (
        [0.10128650732345633, 0.7974269853530873, 0.10128650732345633],
        0.12593918054482716,
    ),
    (
        [0.7974269853530873, 0.10128650732345633, 0.10128650732345633],
        0.12593918054482716,
    ),
];
