//! Intercept probability as the single integral `int F_X(y) f_Y(y) dy`.
//!
//! `X = min(snr_f1, snr_rf2)` and `Y = max(snr_e1, snr_re2)`. The bottleneck CDF
//! combines the direct far-user link with the relayed link conditioned on the
//! relay decoding the far symbol; the relayed term is evaluated by a
//! one-dimensional integral over the source-to-relay gain. Mean gains enter
//! every CDF as the effective mean SNR `omega * P / N0`.

use crate::error::{Error, Result};
use crate::model::{PowerAllocation, PowerSplit, SystemParams};
use crate::quadrature::{integrate_to_infinity, QuadratureConfig};
use crate::specfun::{gamma_density, regularized_gamma_q};

use super::InterceptEstimate;

/// How the CDF of the eavesdropper's phase-two SNR is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UneCdfForm {
    /// Linear closed form `1 - y / c` with `c` the mean of `snr_re2`, clamped
    /// to `[0, 1]`. It decreases in `y`, so it is not a CDF and the resulting
    /// density can go negative; kept for comparison only.
    Printed,
    /// CDF of a product of two independent gamma gains, by quadrature.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticalOptions {
    /// Outer integral over the eavesdropper SNR.
    pub quad: QuadratureConfig,
    /// Inner integrals over the source-to-relay gain.
    pub inner: QuadratureConfig,
    pub une_form: UneCdfForm,
}

impl Default for AnalyticalOptions {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default(),
            inner: QuadratureConfig {
                abs_tol: 1e-11,
                rel_tol: 1e-9,
                max_subdivisions: 200,
            },
            une_form: UneCdfForm::Exact,
        }
    }
}

impl AnalyticalOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn printed() -> Self {
        Self {
            une_form: UneCdfForm::Printed,
            ..Self::default()
        }
    }
}

/// Intermediate factors of the integrand at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandTerms {
    /// Decoding threshold on the source-to-relay gain, unscaled by the mean SNR.
    pub theta: f64,
    /// Probability the relay decodes the far symbol.
    pub psi1: f64,
    /// Probability the relay decodes and the relayed SNR still exceeds the abscissa.
    pub psi2: f64,
    /// Inverse mean of the eavesdropper's phase-two SNR.
    pub phi1: f64,
    /// Inverse scale of the eavesdropper's phase-one SINR at the abscissa.
    pub phi2: f64,
}

/// Shared evaluation context.
pub(crate) struct Ctx<'a> {
    params: &'a SystemParams,
    alloc: &'a PowerAllocation,
    split: &'a PowerSplit,
    opts: &'a AnalyticalOptions,
}

impl<'a> Ctx<'a> {
    pub(crate) fn new(
        params: &'a SystemParams,
        alloc: &'a PowerAllocation,
        split: &'a PowerSplit,
        opts: &'a AnalyticalOptions,
    ) -> Self {
        Self {
            params,
            alloc,
            split,
            opts,
        }
    }

    fn m(&self) -> f64 {
        self.params.m_shape
    }

    fn ceiling(&self) -> f64 {
        self.alloc.sinr_ceiling()
    }

    /// Unit-gamma argument of an interference-limited SINR CDF, and its derivative.
    fn il_argument(&self, x: f64, omega: f64, rho: f64) -> (f64, f64) {
        let a = self.alloc;
        let scale = omega * self.params.snr() * (1.0 - rho);
        let gap = a.alpha_f() - a.alpha_n() * x;
        let m = self.m();
        (m * x / (scale * gap), m * a.alpha_f() / (scale * gap * gap))
    }

    /// CDF of `(1-rho) g alpha_f P / ((1-rho) g alpha_n P + N0)` with `g ~ Gamma(m, omega/m)`.
    pub(crate) fn il_cdf(&self, x: f64, omega: f64, rho: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x >= self.ceiling() {
            return Ok(1.0);
        }
        let (z, _) = self.il_argument(x, omega, rho);
        Ok(1.0 - regularized_gamma_q(self.m(), z)?)
    }

    pub(crate) fn il_pdf(&self, x: f64, omega: f64, rho: f64) -> f64 {
        if x <= 0.0 || x >= self.ceiling() {
            return 0.0;
        }
        let (z, dz) = self.il_argument(x, omega, rho);
        gamma_density(self.m(), z) * dz
    }

    /// Direct far-user SINR CDF.
    pub(crate) fn cdf_far(&self, x: f64) -> Result<f64> {
        self.il_cdf(x, self.params.omega_su_f, self.split.rho_f1)
    }

    /// Relay decoding threshold on the unit-gamma source-to-relay gain.
    fn decode_threshold(&self, x: f64) -> f64 {
        self.il_argument(x, self.params.omega_su_n, self.split.rho_n1).0
    }

    /// Mean of the relayed SNR at the far user.
    fn relay_mean(&self) -> f64 {
        let (p, s) = (self.params, self.split);
        (1.0 - s.rho_f2) * s.rho_n1 * p.eta * p.snr() * p.omega_su_n * p.omega_un_uf
    }

    /// Mean of the relayed SNR at the eavesdropper.
    pub(crate) fn eve_relay_mean(&self) -> f64 {
        let (p, s) = (self.params, self.split);
        (1.0 - s.rho_e2) * s.rho_n1 * p.eta * p.snr() * p.omega_su_n * p.omega_un_e
    }

    /// `Pr(relay decodes, snr_rf2 < x)` and the decoding probability.
    pub(crate) fn relay_cdf(&self, x: f64) -> Result<(f64, f64)> {
        if x <= 0.0 {
            return Ok((0.0, 1.0));
        }
        if x >= self.ceiling() {
            return Ok((0.0, 0.0));
        }
        let m = self.m();
        let u_theta = self.decode_threshold(x);
        let decode = regularized_gamma_q(m, u_theta)?;
        if decode == 0.0 {
            return Ok((0.0, 0.0));
        }
        // snr_rf2 = relay_mean * u v / m^2 with u, v ~ Gamma(m, 1)
        let a = x * m * m / self.relay_mean();
        let joint = self.relay_joint(u_theta, a)?;
        Ok((joint.clamp(0.0, decode), decode))
    }

    #[cfg(not(feature = "printed-psi2"))]
    fn relay_joint(&self, u_theta: f64, a: f64) -> Result<f64> {
        let m = self.m();
        integrate_to_infinity(
            |u| {
                let g = gamma_density(m, u);
                if g == 0.0 {
                    return Ok(0.0);
                }
                Ok((1.0 - regularized_gamma_q(m, a / u)?) * g)
            },
            u_theta,
            &self.opts.inner,
        )
        .map(|r| r.value)
    }

    /// Decoding probability minus the second-branch integral written as a
    /// finite gamma sum, with the extra `1 / ((1 - rho_n1) alpha_n)` factor in
    /// the relay-gain exponent. Comparison only; integer `m` only.
    #[cfg(feature = "printed-psi2")]
    fn relay_joint(&self, u_theta: f64, a: f64) -> Result<f64> {
        let m = self.m();
        if m.fract() != 0.0 {
            return Err(Error::Unsupported(format!(
                "printed relay term needs integer fading shape, got {m}"
            )));
        }
        let decode = regularized_gamma_q(m, u_theta)?;
        let warp = 1.0 / ((1.0 - self.split.rho_n1) * self.alloc.alpha_n());
        let ln_gm = crate::specfun::ln_gamma(m);
        let psi2 = integrate_to_infinity(
            |u| {
                if u == 0.0 {
                    return Ok(0.0);
                }
                let r = a / u;
                let mut term = 1.0;
                let mut sum = 1.0;
                for s in 1..m as usize {
                    term *= r / s as f64;
                    sum += term;
                }
                Ok(((m - 1.0) * u.ln() - u * warp - r - ln_gm).exp() * sum)
            },
            u_theta,
            &self.opts.inner,
        )?
        .value;
        Ok(decode - psi2)
    }

    pub(crate) fn cdf_x(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x >= self.ceiling() {
            return Ok(1.0);
        }
        let f1 = self.cdf_far(x)?;
        let (f2, _) = self.relay_cdf(x)?;
        Ok(1.0 - (1.0 - f1) * (1.0 - f2))
    }

    /// CDF of `snr_re2` and its density.
    pub(crate) fn une(&self, y: f64) -> Result<(f64, f64)> {
        if y <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let c = self.eve_relay_mean();
        match self.opts.une_form {
            UneCdfForm::Printed => {
                let f = 1.0 - y / c;
                if (0.0..=1.0).contains(&f) {
                    Ok((f, -1.0 / c))
                } else {
                    Ok((f.clamp(0.0, 1.0), 0.0))
                }
            }
            UneCdfForm::Exact => {
                let m = self.m();
                let k = m * m / c;
                let a = y * k;
                let cdf = integrate_to_infinity(
                    |u| {
                        let g = gamma_density(m, u);
                        if g == 0.0 {
                            return Ok(0.0);
                        }
                        Ok((1.0 - regularized_gamma_q(m, a / u)?) * g)
                    },
                    0.0,
                    &self.opts.inner,
                )?
                .value;
                let pdf = integrate_to_infinity(
                    |u| {
                        let g = gamma_density(m, u);
                        if g == 0.0 || u == 0.0 {
                            return Ok(0.0);
                        }
                        Ok(gamma_density(m, a / u) * k / u * g)
                    },
                    0.0,
                    &self.opts.inner,
                )?
                .value;
                Ok((cdf.clamp(0.0, 1.0), pdf))
            }
        }
    }

    /// CDF of `Y`.
    pub(crate) fn cdf_y(&self, y: f64) -> Result<f64> {
        let fse = self.il_cdf(y, self.params.omega_se, self.split.rho_e1)?;
        let (fune, _) = self.une(y)?;
        Ok(fse * fune)
    }

    /// Product-rule derivative of `F_SE * F_UNE`.
    pub(crate) fn pdf_y(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        let (omega, rho) = (self.params.omega_se, self.split.rho_e1);
        let fse = self.il_cdf(y, omega, rho)?;
        let dse = self.il_pdf(y, omega, rho);
        let (fune, dune) = self.une(y)?;
        Ok(dse * fune + fse * dune)
    }

    pub(crate) fn terms(&self, y: f64) -> Result<IntegrandTerms> {
        let a = self.alloc;
        let s = self.split;
        let gap = a.alpha_f() - a.alpha_n() * y;
        let theta = if gap > 0.0 {
            y / ((1.0 - s.rho_n1) * gap)
        } else {
            f64::INFINITY
        };
        let (joint, decode) = self.relay_cdf(y)?;
        Ok(IntegrandTerms {
            theta,
            psi1: decode,
            psi2: decode - joint,
            phi1: 1.0 / self.eve_relay_mean(),
            phi2: 1.0 / (self.params.omega_se * self.params.snr() * (1.0 - s.rho_e1) * gap),
        })
    }

    pub(crate) fn intercept(&self) -> Result<f64> {
        let b = self.ceiling();
        // y = b (1 - e^{-t}) tames the blow-up of the gamma arguments at y -> b
        let body = integrate_to_infinity(
            |t| {
                let y = b * -(-t).exp_m1();
                let jac = b - y;
                if jac <= 0.0 {
                    return Ok(0.0);
                }
                Ok(self.cdf_x(y)? * self.pdf_y(y)? * jac)
            },
            0.0,
            &self.opts.quad,
        );
        let body = match body {
            Ok(r) => r.value,
            Err(Error::Quadrature {
                worst_at,
                subdivisions,
                estimate,
                error,
            }) => {
                let y = b * -(-worst_at).exp_m1();
                let detail = match self.terms(y) {
                    Ok(t) => format!("{t:?}"),
                    Err(e) => format!("terms unavailable: {e}"),
                };
                return Err(Error::Analytical {
                    abscissa: y,
                    reason: format!(
                        "no convergence in {subdivisions} subdivisions \
                         (estimate {estimate:e}, error {error:e}); factors {detail}"
                    ),
                });
            }
            Err(e) => return Err(e),
        };
        // F_X is identically 1 above the SINR ceiling
        let tail = 1.0 - self.une(b)?.0;
        Ok(body + tail)
    }
}

/// CDF of the legitimate bottleneck `X`.
pub fn cdf_x(
    x: f64,
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
) -> Result<f64> {
    Ctx::new(params, alloc, split, &AnalyticalOptions::default()).cdf_x(x)
}

/// Density of the eavesdropper's best SNR `Y`.
pub fn pdf_y(
    y: f64,
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    opts: &AnalyticalOptions,
) -> Result<f64> {
    Ctx::new(params, alloc, split, opts).pdf_y(y)
}

/// CDF of `Y` under the same options as [`pdf_y`].
pub fn cdf_y(
    y: f64,
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    opts: &AnalyticalOptions,
) -> Result<f64> {
    Ctx::new(params, alloc, split, opts).cdf_y(y)
}

pub fn integrand_terms(
    y: f64,
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
) -> Result<IntegrandTerms> {
    Ctx::new(params, alloc, split, &AnalyticalOptions::default()).terms(y)
}

pub fn intercept_probability_analytical(
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    q: &QuadratureConfig,
) -> Result<InterceptEstimate> {
    let opts = AnalyticalOptions {
        quad: *q,
        ..AnalyticalOptions::default()
    };
    intercept_probability_analytical_with(params, alloc, split, &opts)
}

pub fn intercept_probability_analytical_with(
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    opts: &AnalyticalOptions,
) -> Result<InterceptEstimate> {
    opts.quad.validate()?;
    opts.inner.validate()?;
    let v = Ctx::new(params, alloc, split, opts).intercept()?;
    Ok(InterceptEstimate::analytical(v))
}
