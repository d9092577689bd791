//! Two-phase decode-and-forward NOMA link model at the SINR level.
//!
//! Phase one: the source superposes the near- and far-user symbols. The near
//! user, the far user and the eavesdropper each split the received power into an
//! energy-harvesting share `rho` and an information share `1 - rho`. Phase two:
//! the near user forwards the far user's symbol using only the energy it
//! harvested in phase one.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{invalid, Result};

/// Static physical-layer parameters. All quantities are linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub p_tx: f64,
    pub n0: f64,
    /// Energy-harvesting conversion efficiency.
    pub eta: f64,
    /// Nakagami shape of every link; 1 is Rayleigh.
    pub m_shape: f64,
    pub omega_su_n: f64,
    pub omega_su_f: f64,
    pub omega_se: f64,
    pub omega_un_e: f64,
    pub omega_un_uf: f64,
}

impl SystemParams {
    pub fn new(
        p_tx: f64,
        n0: f64,
        eta: f64,
        m_shape: f64,
        omegas: [f64; 5],
    ) -> Result<Self> {
        let [omega_su_n, omega_su_f, omega_se, omega_un_e, omega_un_uf] = omegas;
        let p = Self {
            p_tx,
            n0,
            eta,
            m_shape,
            omega_su_n,
            omega_su_f,
            omega_se,
            omega_un_e,
            omega_un_uf,
        };
        p.validate()?;
        Ok(p)
    }

    /// Every link shares the mean gain `omega`.
    pub fn uniform(p_tx: f64, n0: f64, eta: f64, m_shape: f64, omega: f64) -> Result<Self> {
        Self::new(p_tx, n0, eta, m_shape, [omega; 5])
    }

    pub fn validate(&self) -> Result<()> {
        positive("p_tx", self.p_tx)?;
        positive("n0", self.n0)?;
        positive("eta", self.eta)?;
        if self.eta > 1.0 {
            return Err(invalid("eta", format!("{} exceeds 1", self.eta)));
        }
        if !(self.m_shape >= 0.5) || !self.m_shape.is_finite() {
            return Err(invalid("m_shape", format!("{} is below 0.5", self.m_shape)));
        }
        positive("omega_su_n", self.omega_su_n)?;
        positive("omega_su_f", self.omega_su_f)?;
        positive("omega_se", self.omega_se)?;
        positive("omega_un_e", self.omega_un_e)?;
        positive("omega_un_uf", self.omega_un_uf)?;
        Ok(())
    }

    /// Transmit SNR `P / N0`.
    pub fn snr(&self) -> f64 {
        self.p_tx / self.n0
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    /// Rescales transmit power so that `P / N0` equals `snr` (linear).
    pub fn with_snr(mut self, snr: f64) -> Result<Self> {
        self.p_tx = snr * self.n0;
        self.validate()?;
        Ok(self)
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} is not a positive finite number")))
    }
}

fn open_unit(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} is not inside (0, 1)")))
    }
}

/// NOMA power fractions for the near and far user's symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAllocation {
    alpha_n: f64,
    alpha_f: f64,
}

impl PowerAllocation {
    /// Builds the allocation from the far-user share; `alpha_n = 1 - alpha_f`.
    pub fn from_far(alpha_f: f64) -> Result<Self> {
        if !(alpha_f > 0.5 && alpha_f < 1.0) {
            return Err(invalid("alpha_f", format!("{alpha_f} is not inside (0.5, 1)")));
        }
        Ok(Self {
            alpha_n: 1.0 - alpha_f,
            alpha_f,
        })
    }

    pub fn alpha_n(&self) -> f64 {
        self.alpha_n
    }

    pub fn alpha_f(&self) -> f64 {
        self.alpha_f
    }

    /// Supremum of any phase-one SINR for the far user's symbol.
    pub fn sinr_ceiling(&self) -> f64 {
        self.alpha_f / self.alpha_n
    }
}

/// Power-splitting factors, per node and phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub rho_n1: f64,
    pub rho_f1: f64,
    pub rho_e1: f64,
    pub rho_f2: f64,
    pub rho_e2: f64,
}

impl PowerSplit {
    pub fn new(rho_n1: f64, rho_f1: f64, rho_e1: f64, rho_f2: f64, rho_e2: f64) -> Result<Self> {
        let s = Self {
            rho_n1,
            rho_f1,
            rho_e1,
            rho_f2,
            rho_e2,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(rho: f64) -> Result<Self> {
        Self::new(rho, rho, rho, rho, rho)
    }

    pub fn validate(&self) -> Result<()> {
        open_unit("rho_n1", self.rho_n1)?;
        open_unit("rho_f1", self.rho_f1)?;
        open_unit("rho_e1", self.rho_e1)?;
        open_unit("rho_f2", self.rho_f2)?;
        open_unit("rho_e2", self.rho_e2)
    }
}

/// Instantaneous channel power gains `|h|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelRealization {
    pub g_su_n: f64,
    pub g_su_f: f64,
    pub g_se: f64,
    pub g_un_e: f64,
    pub g_un_uf: f64,
}

impl ChannelRealization {
    pub fn as_array(&self) -> [f64; 5] {
        [self.g_su_n, self.g_su_f, self.g_se, self.g_un_e, self.g_un_uf]
    }

    pub fn from_array(g: [f64; 5]) -> Self {
        Self {
            g_su_n: g[0],
            g_su_f: g[1],
            g_se: g[2],
            g_un_e: g[3],
            g_un_uf: g[4],
        }
    }
}

/// The six SINR/SNR values of one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSet {
    /// Far symbol at the near user, near symbol as interference.
    pub snr_nf1: f64,
    /// Near symbol at the near user after SIC.
    pub snr_n2: f64,
    /// Far symbol at the far user, phase one.
    pub snr_f1: f64,
    /// Far symbol at the eavesdropper, phase one.
    pub snr_e1: f64,
    /// Relayed far symbol at the far user, phase two.
    pub snr_rf2: f64,
    /// Relayed far symbol at the eavesdropper, phase two.
    pub snr_re2: f64,
}

impl SinrSet {
    /// Bottleneck SNR of the legitimate two-hop path.
    pub fn legitimate(&self) -> f64 {
        self.snr_f1.min(self.snr_rf2)
    }

    /// Best SNR available to the eavesdropper across both phases.
    pub fn eavesdropper(&self) -> f64 {
        self.snr_e1.max(self.snr_re2)
    }
}

/// SINR of the far user's symbol when the near user's symbol is interference.
pub(crate) fn interference_limited(received: f64, alloc: &PowerAllocation, n0: f64) -> f64 {
    received * alloc.alpha_f() / (received * alloc.alpha_n() + n0)
}

pub fn compute_sinrs(
    params: &SystemParams,
    alloc: &PowerAllocation,
    split: &PowerSplit,
    ch: &ChannelRealization,
) -> SinrSet {
    let p = params.p_tx;
    let n0 = params.n0;
    let rx_n = (1.0 - split.rho_n1) * ch.g_su_n * p;
    let rx_f = (1.0 - split.rho_f1) * ch.g_su_f * p;
    let rx_e = (1.0 - split.rho_e1) * ch.g_se * p;
    // power the relay harvested in phase one, times the path loss
    let relay = split.rho_n1 * params.eta * ch.g_su_n * p;
    SinrSet {
        snr_nf1: interference_limited(rx_n, alloc, n0),
        snr_n2: rx_n * alloc.alpha_n() / n0,
        snr_f1: interference_limited(rx_f, alloc, n0),
        snr_e1: interference_limited(rx_e, alloc, n0),
        snr_rf2: (1.0 - split.rho_f2) * relay * ch.g_un_uf / n0,
        snr_re2: (1.0 - split.rho_e2) * relay * ch.g_un_e / n0,
    }
}

/// A source of channel realizations. The Monte-Carlo estimator is generic over
/// this so tests can inject discrete surrogates.
pub trait ChannelSampler: Sync {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization;
}

/// Independent Nakagami-m power gains: `Gamma(shape = m, mean = omega)` per link.
#[derive(Debug, Clone)]
pub struct FadingSampler {
    unit: Gamma<f64>,
    omegas: [f64; 5],
}

impl FadingSampler {
    pub fn new(params: &SystemParams) -> Self {
        let m = params.m_shape;
        Self {
            // validated m >= 0.5 so this cannot fail
            unit: Gamma::new(m, 1.0 / m).expect("validated shape"),
            omegas: [
                params.omega_su_n,
                params.omega_su_f,
                params.omega_se,
                params.omega_un_e,
                params.omega_un_uf,
            ],
        }
    }
}

impl ChannelSampler for FadingSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let mut g = [0.0; 5];
        for (gi, omega) in g.iter_mut().zip(self.omegas) {
            *gi = omega * self.unit.sample(rng);
        }
        ChannelRealization::from_array(g)
    }
}

pub fn sample_channels<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> ChannelRealization {
    FadingSampler::new(params).sample(rng)
}
