//! Diffusion channel between a point transmitter and a perfectly absorbing
//! spherical receiver.
//!
//! A molecule released at distance `r0` from the center of an absorbing
//! sphere of radius `rr` in a medium with diffusion coefficient `D` first
//! touches the sphere at a random time with density
//!
//! ```text
//! f(t) = (rr/r0) * 1/sqrt(4 pi D t) * (r0 - rr)/t * exp(-(r0 - rr)^2 / (4 D t))
//! ```
//!
//! Time is slotted into windows of length `ts`; the probability that a
//! molecule emitted at the start of slot 1 arrives during slot `n` is the
//! integral of `f` over the n-th window, optionally shifted by a reception
//! offset `tau`. Those window probabilities are the channel coefficients
//! `h[0], h[1], ..` used by every other module. Arrival counts follow the
//! linear time-invariant Poisson model: the count in a slot is Poisson with
//! rate equal to the emission history convolved with the coefficients.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::numerics::{integrate_panels, KahanSum};
use crate::{Error, Result};

/// Absolute tolerance for every window-probability quadrature. Chosen three
/// orders below the tightest agreement the tests demand so that sums of many
/// windows stay inside their own tolerance.
pub const WINDOW_QUAD_TOL: f64 = 1e-9;

/// Physical parameters of the link. Distances in micrometers, diffusion
/// coefficient in square micrometers per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Transmitter distance from the receiver center, um.
    pub r0_um: f64,
    /// Receiver radius, um.
    pub rr_um: f64,
    /// Diffusion coefficient, um^2/s.
    pub d_um2_s: f64,
}

impl ChannelParams {
    pub fn new(r0_um: f64, rr_um: f64, d_um2_s: f64) -> Result<Self> {
        if !(r0_um.is_finite() && rr_um.is_finite() && d_um2_s.is_finite()) {
            return Err(Error::invalid("channel parameters must be finite"));
        }
        if !(rr_um > 0.0 && r0_um > rr_um) {
            return Err(Error::invalid(format!(
                "need r0 > rr > 0, got r0 = {r0_um}, rr = {rr_um}"
            )));
        }
        if d_um2_s <= 0.0 {
            return Err(Error::invalid("diffusion coefficient must be positive"));
        }
        Ok(Self { r0_um, rr_um, d_um2_s })
    }

    /// Time at which the first-hit density peaks: (r0 - rr)^2 / (6 D).
    pub fn peak_time_s(&self) -> f64 {
        let d = self.r0_um - self.rr_um;
        d * d / (6.0 * self.d_um2_s)
    }

    /// Probability that a molecule is ever absorbed: rr / r0.
    pub fn capture_probability(&self) -> f64 {
        self.rr_um / self.r0_um
    }
}

/// Slotted time base of the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotGrid {
    /// Slot length, s.
    pub ts: f64,
    /// Number of slots the channel is truncated to.
    pub l: usize,
    /// Horizon the truncation was derived from, s.
    pub t_total: f64,
    /// Reception offset: every counting window is delayed by this much, s.
    pub tau: f64,
}

impl SlotGrid {
    /// Build a grid from the slot length and total horizon; the slot count is
    /// `round(t_total / ts)`, at least 1.
    pub fn new(ts: f64, t_total: f64, tau: f64) -> Result<Self> {
        if !(ts.is_finite() && ts > 0.0) {
            return Err(Error::invalid("slot length must be positive"));
        }
        if !(t_total.is_finite() && t_total > 0.0) {
            return Err(Error::invalid("total horizon must be positive"));
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::invalid("reception offset must be nonnegative"));
        }
        let l = ((t_total / ts).round() as usize).max(1);
        Ok(Self { ts, l, t_total, tau })
    }
}

/// First-hit time density at `t` seconds. Errors on `t <= 0`; the density
/// tends to zero super-polynomially there, which integration code exploits
/// by treating the open endpoint as zero.
pub fn first_hit_density(t: f64, p: &ChannelParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("first-hit density needs t > 0, got {t}")));
    }
    Ok(density_unchecked(t, p))
}

fn density_unchecked(t: f64, p: &ChannelParams) -> f64 {
    let gap = p.r0_um - p.rr_um;
    let four_dt = 4.0 * p.d_um2_s * t;
    p.capture_probability() / (std::f64::consts::PI * four_dt).sqrt() * (gap / t)
        * (-gap * gap / four_dt).exp()
}

/// Probability that a molecule emitted at time zero arrives during `[a, b]`.
///
/// Computed by adaptive quadrature of the density to `WINDOW_QUAD_TOL`. The
/// interval is pre-split on a geometric ladder around the density peak so
/// that long windows (hours of tail) cannot hide the sharp early peak from
/// the adaptive rule.
pub fn window_hit_probability(a: f64, b: f64, p: &ChannelParams) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= a) {
        return Err(Error::invalid(format!("need 0 <= a <= b, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let pts = ladder(a, b, p.peak_time_s());
    integrate_panels(
        |t| if t <= 0.0 { 0.0 } else { density_unchecked(t, p) },
        &pts,
        WINDOW_QUAD_TOL,
    )
}

/// Panel boundaries for `[a, b]`: octave steps anchored a couple of octaves
/// below the density peak, clipped to the window.
fn ladder(a: f64, b: f64, peak: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let mut t = peak / 4.0;
    while t <= a {
        t *= 2.0;
    }
    while t < b {
        pts.push(t);
        t *= 2.0;
    }
    pts.push(b);
    pts
}

/// Channel coefficients for a slot grid: `h[n-1]` is the hit probability in
/// the n-th counting window `[(n-1) ts + tau, n ts + tau]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoefficients {
    h: Vec<f64>,
}

impl ChannelCoefficients {
    /// Wrap precomputed taps; mostly for tests and synthetic channels.
    pub fn from_taps(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::invalid("need at least one channel tap"));
        }
        if h.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("channel taps must be finite and nonnegative"));
        }
        Ok(Self { h })
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn taps(&self) -> &[f64] {
        &self.h
    }

    /// Sum of all taps: total capture probability inside the horizon.
    pub fn total(&self) -> f64 {
        let mut s = KahanSum::new();
        for &v in &self.h {
            s.add(v);
        }
        s.value()
    }
}

/// Integrate the first-hit density over every window of the grid.
pub fn channel_coefficients(p: &ChannelParams, grid: &SlotGrid) -> Result<ChannelCoefficients> {
    let mut h = Vec::with_capacity(grid.l);
    for n in 1..=grid.l {
        let a = (n - 1) as f64 * grid.ts + grid.tau;
        let b = n as f64 * grid.ts + grid.tau;
        h.push(window_hit_probability(a, b, p)?);
    }
    ChannelCoefficients::from_taps(h)
}

/// Observed arrival counts per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalTrace {
    pub counts: Vec<u64>,
}

impl ArrivalTrace {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Expected arrival rate per slot: emission counts convolved with the taps.
pub fn slot_rates(emissions: &[u64], h: &ChannelCoefficients) -> Vec<f64> {
    let taps = h.taps();
    let mut rates = vec![0.0; emissions.len()];
    for (m, rate) in rates.iter_mut().enumerate() {
        let mut acc = 0.0;
        // n is the 1-based tap index; source slot m - n + 1 in 1-based terms.
        let nmax = taps.len().min(m + 1);
        for n in 0..nmax {
            let src = m - n;
            if emissions[src] > 0 {
                acc += emissions[src] as f64 * taps[n];
            }
        }
        *rate = acc;
    }
    rates
}

/// Draw one arrival trace from the LTI Poisson model: the count in slot `m`
/// is Poisson with rate `sum_n N[m-n] h[n]`. Sampling is exact (inversion
/// for small rates, transformed rejection for large ones), never a normal
/// approximation.
pub fn simulate_arrivals<R: Rng + ?Sized>(
    emissions: &[u64],
    h: &ChannelCoefficients,
    rng: &mut R,
) -> ArrivalTrace {
    let rates = slot_rates(emissions, h);
    let counts = rates
        .iter()
        .map(|&lam| {
            if lam <= 0.0 {
                0
            } else {
                let pois = Poisson::new(lam).expect("positive rate");
                let draw: f64 = pois.sample(rng);
                draw as u64
            }
        })
        .collect();
    ArrivalTrace { counts }
}
