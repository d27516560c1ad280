//! Single-triangle kernel: angles, areas, derivatives and perturbation
//! estimates in Euclidean, hyperbolic and spherical geometry.
//!
//! All functions work on side lengths alone; no embedding is ever needed.
//! Angles are recovered with half-angle formulas through `atan2`, which stays
//! accurate near degenerate configurations where `acos` of the law of cosines
//! would lose half the mantissa.

use thiserror::Error;

/// Geometry of the background space a triangle lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Geometry {
    Euclidean,
    Hyperbolic,
    Spherical,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum TriangleError {
    #[error("degenerate triangle: sides ({0}, {1}, {2})")]
    DegenerateTriangle(f64, f64, f64),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// Relative slack used when testing strict triangle inequalities.
pub const TRIANGLE_INEQ_SLACK: f64 = 1e-12;

/// Side lengths `(a, b, c)`, each opposite the same-named angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleSides {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Inner angles `(alpha, beta, gamma)` opposite sides `a`, `b`, `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl TriangleSides {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, TriangleError> {
        let s = Self { a, b, c };
        s.validate()?;
        Ok(s)
    }

    /// Strict positivity and strict triangle inequalities, with a relative
    /// slack of `TRIANGLE_INEQ_SLACK * max(a, b, c)` so that exactly
    /// degenerate inputs are rejected before they can produce NaNs.
    pub fn validate(&self) -> Result<(), TriangleError> {
        let (a, b, c) = (self.a, self.b, self.c);
        let m = a.max(b).max(c);
        let ok = a > 0.0
            && b > 0.0
            && c > 0.0
            && a.is_finite()
            && b.is_finite()
            && c.is_finite()
            && a + b - c >= TRIANGLE_INEQ_SLACK * m
            && b + c - a >= TRIANGLE_INEQ_SLACK * m
            && c + a - b >= TRIANGLE_INEQ_SLACK * m;
        if ok {
            Ok(())
        } else {
            Err(TriangleError::DegenerateTriangle(a, b, c))
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn max_side(&self) -> f64 {
        self.a.max(self.b).max(self.c)
    }
}

impl TriangleAngles {
    pub fn min(&self) -> f64 {
        self.alpha.min(self.beta).min(self.gamma)
    }

    pub fn sum(&self) -> f64 {
        self.alpha + self.beta + self.gamma
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// Shifted angles `A~ = (pi + A - B - C) / 2` etc., the combinations
    /// that carry the hyperbolic conformal partials. Each equals the raw
    /// angle plus half the angle deficit, so shifted and raw angles agree
    /// exactly when the triangle is Euclidean.
    pub fn shifted(&self) -> TriangleAngles {
        let half_deficit = 0.5 * (std::f64::consts::PI - self.sum());
        TriangleAngles {
            alpha: self.alpha + half_deficit,
            beta: self.beta + half_deficit,
            gamma: self.gamma + half_deficit,
        }
    }
}

fn check_spherical_sides(s: &TriangleSides) -> Result<(), TriangleError> {
    if s.max_side() >= std::f64::consts::PI || s.a + s.b + s.c >= 2.0 * std::f64::consts::PI {
        return Err(TriangleError::PreconditionViolated(format!(
            "spherical sides must satisfy a,b,c < pi and a+b+c < 2*pi, got ({}, {}, {})",
            s.a, s.b, s.c
        )));
    }
    Ok(())
}

/// Inner angles from side lengths.
///
/// Half-angle forms: with `s` the semiperimeter,
/// Euclidean  tan(A/2)^2 = (s-b)(s-c) / (s(s-a)),
/// hyperbolic tan(A/2)^2 = sinh(s-b) sinh(s-c) / (sinh s sinh(s-a)),
/// spherical  tan(A/2)^2 = sin(s-b) sin(s-c) / (sin s sin(s-a)).
/// The differences `s - a` etc. are formed as `(b + c - a) / 2` before any
/// rounding of `s` can cancel.
pub fn angles(sides: TriangleSides, geometry: Geometry) -> Result<TriangleAngles, TriangleError> {
    sides.validate()?;
    let (a, b, c) = (sides.a, sides.b, sides.c);
    let s = 0.5 * (a + b + c);
    let sa = 0.5 * (b + c - a);
    let sb = 0.5 * (c + a - b);
    let sc = 0.5 * (a + b - c);
    let f: fn(f64) -> f64 = match geometry {
        Geometry::Euclidean => |x| x,
        Geometry::Hyperbolic => f64::sinh,
        Geometry::Spherical => {
            check_spherical_sides(&sides)?;
            f64::sin
        }
    };
    let (fs, fsa, fsb, fsc) = (f(s), f(sa), f(sb), f(sc));
    let half = |num: f64, den: f64| 2.0 * f64::atan2(num.sqrt(), den.sqrt());
    Ok(TriangleAngles {
        alpha: half(fsb * fsc, fs * fsa),
        beta: half(fsc * fsa, fs * fsb),
        gamma: half(fsa * fsb, fs * fsc),
    })
}

/// Triangle area from side lengths.
///
/// Euclidean: Heron in Kahan's numerically stable factoring. Hyperbolic and
/// spherical: the tan^2(area/4) product formulas (L'Huilier in the spherical
/// case), evaluated through `atan` so the result is exact in the small-area
/// limit.
pub fn area(sides: TriangleSides, geometry: Geometry) -> Result<f64, TriangleError> {
    sides.validate()?;
    let (a, b, c) = (sides.a, sides.b, sides.c);
    match geometry {
        Geometry::Euclidean => {
            // Kahan: sort so a >= b >= c, then the four factors below are
            // all formed without cancellation.
            let mut v = [a, b, c];
            v.sort_by(|x, y| y.partial_cmp(x).unwrap());
            let (a, b, c) = (v[0], v[1], v[2]);
            let t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
            Ok(0.25 * t.max(0.0).sqrt())
        }
        Geometry::Hyperbolic => {
            let s = 0.5 * (a + b + c);
            let sa = 0.5 * (b + c - a);
            let sb = 0.5 * (c + a - b);
            let sc = 0.5 * (a + b - c);
            let t = (0.5 * s).tanh() * (0.5 * sa).tanh() * (0.5 * sb).tanh() * (0.5 * sc).tanh();
            Ok(4.0 * t.max(0.0).sqrt().atan())
        }
        Geometry::Spherical => {
            check_spherical_sides(&sides)?;
            let s = 0.5 * (a + b + c);
            let sa = 0.5 * (b + c - a);
            let sb = 0.5 * (c + a - b);
            let sc = 0.5 * (a + b - c);
            let t = (0.5 * s).tan() * (0.5 * sa).tan() * (0.5 * sb).tan() * (0.5 * sc).tan();
            Ok(4.0 * t.max(0.0).sqrt().atan())
        }
    }
}

/// Curved-geometry area through the cotangent identities
/// cot(area_H/2) = (coth(a/2) coth(b/2) - cos C) / sin C and
/// cot(area_S/2) = (cot(a/2) cot(b/2) + cos C) / sin C,
/// an independent algebraic route from the tan^2 product formulas.
pub fn area_via_cotangent(sides: TriangleSides, geometry: Geometry) -> Result<f64, TriangleError> {
    sides.validate()?;
    let gamma = angles(sides, geometry)?.gamma;
    let (a, b) = (sides.a, sides.b);
    let cot = match geometry {
        Geometry::Hyperbolic => {
            (1.0 / (0.5 * a).tanh() / (0.5 * b).tanh() - gamma.cos()) / gamma.sin()
        }
        Geometry::Spherical => {
            (1.0 / (0.5 * a).tan() / (0.5 * b).tan() + gamma.cos()) / gamma.sin()
        }
        Geometry::Euclidean => {
            return Err(TriangleError::PreconditionViolated(
                "cotangent area formula applies to hyperbolic or spherical triangles".into(),
            ))
        }
    };
    Ok(2.0 * f64::atan2(1.0, cot))
}

/// Area of the midpoint triangle `C M_a M_b`, where `M_a`, `M_b` are the
/// geodesic midpoints of `BC` and `AC`. Its sides from `C` are `a/2`, `b/2`
/// with the included angle `C` unchanged, so in the curved geometries it is
/// the cotangent formula evaluated at half sides; the Euclidean value is
/// exactly a quarter of the full area.
pub fn midpoint_triangle_area(
    sides: TriangleSides,
    geometry: Geometry,
) -> Result<f64, TriangleError> {
    sides.validate()?;
    match geometry {
        Geometry::Euclidean => Ok(0.25 * area(sides, Geometry::Euclidean)?),
        Geometry::Hyperbolic | Geometry::Spherical => {
            let gamma = angles(sides, geometry)?.gamma;
            let (a, b) = (0.5 * sides.a, 0.5 * sides.b);
            let cot = match geometry {
                Geometry::Hyperbolic => {
                    (1.0 / (0.5 * a).tanh() / (0.5 * b).tanh() - gamma.cos()) / gamma.sin()
                }
                _ => (1.0 / (0.5 * a).tan() / (0.5 * b).tan() + gamma.cos()) / gamma.sin(),
            };
            Ok(2.0 * f64::atan2(1.0, cot))
        }
    }
}

/// Jacobian of the inner angles with respect to the side lengths, rows
/// `(A, B, C)` by columns `(a, b, c)`.
///
/// Euclidean: dA/da = 1/(b sin C), dA/db = -cot C / b, dA/dc = -cot B / c.
/// Hyperbolic: the same with `sinh` of the dividing side.
pub fn angle_derivatives(
    sides: TriangleSides,
    geometry: Geometry,
) -> Result<[[f64; 3]; 3], TriangleError> {
    let ang = angles(sides, geometry)?;
    let stretch: fn(f64) -> f64 = match geometry {
        Geometry::Euclidean => |x| x,
        Geometry::Hyperbolic => f64::sinh,
        Geometry::Spherical => {
            return Err(TriangleError::PreconditionViolated(
                "angle derivatives implemented for Euclidean and hyperbolic triangles".into(),
            ))
        }
    };
    let [a, b, c] = sides.as_array().map(stretch);
    let [alpha, beta, gamma] = ang.as_array();
    let cot = |x: f64| x.cos() / x.sin();
    Ok([
        [
            1.0 / (b * gamma.sin()),
            -cot(gamma) / b,
            -cot(beta) / c,
        ],
        [
            -cot(gamma) / a,
            1.0 / (c * alpha.sin()),
            -cot(alpha) / c,
        ],
        [
            -cot(beta) / a,
            -cot(alpha) / b,
            1.0 / (a * beta.sin()),
        ],
    ])
}

/// Jacobian of the inner angles with respect to the per-vertex conformal
/// factors `(u_A, u_B, u_C)`, evaluated at the current metric.
///
/// Euclidean (vertex scaling l' = e^{(u_i+u_j)/2} l):
///   dA/du_B = cot C / 2,  dA/du_A = -(cot B + cot C)/2;
/// hyperbolic (sinh(l'/2) = e^{(u_i+u_j)/2} sinh(l/2)), with the shifted
/// angles A~ = (pi + A - B - C)/2 etc.:
///   dA/du_B = cot C~ (1 - tanh^2(c/2)) / 2,
///   dA/du_A = -[cot B~ (1 + tanh^2(b/2)) + cot C~ (1 + tanh^2(c/2))] / 2.
pub fn conformal_angle_partials(
    sides: TriangleSides,
    geometry: Geometry,
) -> Result<[[f64; 3]; 3], TriangleError> {
    let ang = angles(sides, geometry)?;
    let [alpha, beta, gamma] = ang.as_array();
    let cot = |x: f64| x.cos() / x.sin();
    match geometry {
        Geometry::Euclidean => {
            let (ca, cb, cc) = (cot(alpha), cot(beta), cot(gamma));
            Ok([
                [-0.5 * (cb + cc), 0.5 * cc, 0.5 * cb],
                [0.5 * cc, -0.5 * (cc + ca), 0.5 * ca],
                [0.5 * cb, 0.5 * ca, -0.5 * (ca + cb)],
            ])
        }
        Geometry::Hyperbolic => {
            let shifted = ang.shifted();
            let (ta, tb, tc) = (
                cot(shifted.alpha),
                cot(shifted.beta),
                cot(shifted.gamma),
            );
            let sq = |x: f64| {
                let t = (0.5 * x).tanh();
                t * t
            };
            let (ha, hb, hc) = (sq(sides.a), sq(sides.b), sq(sides.c));
            Ok([
                [
                    -0.5 * (tb * (1.0 + hb) + tc * (1.0 + hc)),
                    0.5 * tc * (1.0 - hc),
                    0.5 * tb * (1.0 - hb),
                ],
                [
                    0.5 * tc * (1.0 - hc),
                    -0.5 * (tc * (1.0 + hc) + ta * (1.0 + ha)),
                    0.5 * ta * (1.0 - ha),
                ],
                [
                    0.5 * tb * (1.0 - hb),
                    0.5 * ta * (1.0 - ha),
                    -0.5 * (ta * (1.0 + ha) + tb * (1.0 + hb)),
                ],
            ])
        }
        Geometry::Spherical => Err(TriangleError::PreconditionViolated(
            "conformal partials implemented for Euclidean and hyperbolic triangles".into(),
        )),
    }
}

/// Outcome of checking a single-triangle perturbation against the a priori
/// angle and area deviation bounds.
#[derive(Clone, Copy, Debug)]
pub struct PerturbationReport {
    /// Max per-side relative deviation actually observed.
    pub delta: f64,
    /// Max angle deviation |A' - A| over the three angles.
    pub angle_dev: f64,
    /// Bound the angle deviation is checked against.
    pub angle_bound: f64,
    /// Relative area deviation | |T'| - |T| | / |T|.
    pub area_dev: f64,
    /// Bound the relative area deviation is checked against.
    pub area_bound: f64,
    pub bound_ok: bool,
}

/// Checks the a priori perturbation estimates: for a triangle with all
/// angles >= eps and per-side relative deviations at most delta,
///
/// Euclidean (delta < eps^2/48):   |A'-A| <= 24 delta / eps,
///                                 area deviation <= 576 delta / eps^2;
/// hyperbolic (delta < eps^3/60, sides <= 0.1):
///                                 |A'-A| <= 30 delta / eps^2,
///                                 area deviation <= 120 delta / eps^2.
///
/// These are theorems, so `bound_ok` is expected to come back `true`
/// whenever the preconditions hold; the report exists to make the claim
/// checkable on concrete data.
pub fn perturbation_bound_check(
    sides: TriangleSides,
    perturbed: TriangleSides,
    eps: f64,
    geometry: Geometry,
) -> Result<PerturbationReport, TriangleError> {
    if !(eps > 0.0) {
        return Err(TriangleError::PreconditionViolated(
            "eps must be positive".into(),
        ));
    }
    let base_angles = angles(sides, geometry)?;
    if base_angles.min() < eps {
        return Err(TriangleError::PreconditionViolated(format!(
            "base triangle has an angle {} below eps = {}",
            base_angles.min(),
            eps
        )));
    }
    let delta = sides
        .as_array()
        .iter()
        .zip(perturbed.as_array())
        .map(|(&s, p)| (p - s).abs() / s)
        .fold(0.0f64, f64::max);
    let (threshold, angle_bound_coeff) = match geometry {
        Geometry::Euclidean => (eps * eps / 48.0, 24.0 / eps),
        Geometry::Hyperbolic => {
            if sides.max_side() > 0.1 {
                return Err(TriangleError::PreconditionViolated(
                    "hyperbolic perturbation bound requires sides <= 0.1".into(),
                ));
            }
            (eps * eps * eps / 60.0, 30.0 / (eps * eps))
        }
        Geometry::Spherical => {
            return Err(TriangleError::PreconditionViolated(
                "perturbation bounds are stated for Euclidean and hyperbolic triangles".into(),
            ))
        }
    };
    if delta >= threshold {
        return Err(TriangleError::PreconditionViolated(format!(
            "side deviation {delta} is not below the admissible threshold {threshold}"
        )));
    }
    let pert_angles = angles(perturbed, geometry)?;
    let angle_dev = base_angles
        .as_array()
        .iter()
        .zip(pert_angles.as_array())
        .map(|(&x, y)| (y - x).abs())
        .fold(0.0f64, f64::max);
    let base_area = area(sides, geometry)?;
    let pert_area = area(perturbed, geometry)?;
    let area_dev = (pert_area - base_area).abs() / base_area;
    let angle_bound = angle_bound_coeff * delta;
    let area_bound = match geometry {
        Geometry::Euclidean => 576.0 / (eps * eps) * delta,
        _ => 120.0 / (eps * eps) * delta,
    };
    Ok(PerturbationReport {
        delta,
        angle_dev,
        angle_bound,
        area_dev,
        area_bound,
        bound_ok: angle_dev <= angle_bound && area_dev <= area_bound,
    })
}
