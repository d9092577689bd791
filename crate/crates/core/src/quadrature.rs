//! Globally adaptive Gauss-Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};

/// Tolerances and subdivision budget for an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_subdivisions == 0 {
            return Err(Error::InvalidParam {
                field: "quadrature",
                reason: "tolerances and subdivision budget must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx)? + f(center + dx)?;
        kron += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    Ok(Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    })
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let mut segs = vec![kronrod(&mut f, a, b)?];
    loop {
        let value: f64 = segs.iter().map(|s| s.value).sum();
        let error: f64 = segs.iter().map(|s| s.error).sum();
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("nonempty");
        let worst_at = 0.5 * (segs[worst].a + segs[worst].b);
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature {
                subdivisions: segs.len(),
                estimate: value,
                error,
                worst_at,
            });
        }
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                error,
                subdivisions: segs.len(),
            });
        }
        if segs.len() >= cfg.max_subdivisions {
            return Err(Error::Quadrature {
                subdivisions: segs.len(),
                estimate: value,
                error,
                worst_at,
            });
        }
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segs.push(kronrod(&mut f, s.a, mid)?);
        segs.push(kronrod(&mut f, mid, s.b)?);
    }
}

/// Integrates `f` over `[a, inf)` through `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F>(mut f: F, a: f64, cfg: &QuadratureConfig) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate(
        |t| {
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x)?;
            if v == 0.0 {
                Ok(0.0)
            } else {
                Ok(v / (one_minus * one_minus))
            }
        },
        0.0,
        1.0,
        cfg,
    )
    .map_err(|e| match e {
        Error::Quadrature {
            subdivisions,
            estimate,
            error,
            worst_at,
        } => Error::Quadrature {
            subdivisions,
            estimate,
            error,
            worst_at: a + worst_at / (1.0 - worst_at),
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> QuadratureConfig {
        QuadratureConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 500,
        }
    }

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| Ok(3.0 * x * x), 0.0, 2.0, &tight()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_singularity() {
        let r = integrate(|x| Ok(1.0 / x.sqrt()), 0.0, 1.0, &tight()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate_to_infinity(|x| Ok((-x).exp()), 1.0, &tight()).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-15,
            max_subdivisions: 3,
        };
        let err = integrate(|x| Ok((50.0 * x).sin()), 0.0, 10.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Quadrature { subdivisions: 3, .. }));
    }

    #[test]
    fn integrand_errors_propagate() {
        let err = integrate(
            |x| if x > 0.5 { Err(Error::Domain { function: "f", argument: x }) } else { Ok(1.0) },
            0.0,
            1.0,
            &tight(),
        );
        assert!(err.is_err());
    }
}
