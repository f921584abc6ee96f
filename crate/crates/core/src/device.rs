//! Linear ionic-drift memristor.
//!
//! The device is a thin film of length `d` split into a doped region of
//! length `w` (resistance `r_on` per full length) and an undoped region
//! (resistance `r_off` per full length). Charge passing through the device
//! moves the boundary linearly, and the state is hard-clamped to `[0, d]`.

use crate::error::{Error, Result};

/// Physical constants of a single memristor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceParams {
    /// Fully doped resistance (Ω).
    pub r_on: f64,
    /// Fully undoped resistance (Ω).
    pub r_off: f64,
    /// Film thickness (m).
    pub d: f64,
    /// Average dopant mobility (m²·V⁻¹·s⁻¹).
    pub mu_v: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            r_on: 100.0,
            r_off: 100_000.0,
            d: 10e-9,
            mu_v: 1e-14,
        }
    }
}

impl DeviceParams {
    pub fn new(r_on: f64, r_off: f64, d: f64, mu_v: f64) -> Result<Self> {
        let p = Self { r_on, r_off, d, mu_v };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.r_on, self.r_off, self.d, self.mu_v]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParam("device constants must be finite".into()));
        }
        if !(self.r_on > 0.0 && self.r_on < self.r_off) {
            return Err(Error::InvalidParam(format!(
                "need 0 < r_on < r_off, got r_on={} r_off={}",
                self.r_on, self.r_off
            )));
        }
        if self.d <= 0.0 || self.mu_v <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "need d > 0 and mu_v > 0, got d={} mu_v={}",
                self.d, self.mu_v
            )));
        }
        Ok(())
    }

    /// State displacement per coulomb, `mu_v * r_on / d` (m/C).
    #[inline]
    pub fn drift_per_coulomb(&self) -> f64 {
        self.mu_v * self.r_on / self.d
    }

    /// Lumped factor `mu_v * r_on / d²` (1/C); spreading behavior depends
    /// on the device only through this product.
    #[inline]
    pub fn lumped_drift(&self) -> f64 {
        self.drift_per_coulomb() / self.d
    }

    /// Returns a copy whose mobility is chosen so that a device with its
    /// terminals pinned at `|v_drive|` for `duration` seconds, starting
    /// from `r_off`, ends exactly `peak_delta_r` ohms lower.
    ///
    /// With both terminals pinned, `dM/dt = -(r_off - r_on) k |v| / M`
    /// where `k` is the lumped drift, so `M² = r_off² - 2 (r_off - r_on) k |v| t`.
    pub fn calibrated(&self, v_drive: f64, duration: f64, peak_delta_r: f64) -> Result<Self> {
        let span = self.r_off - self.r_on;
        if !(peak_delta_r > 0.0 && peak_delta_r < span) {
            return Err(Error::InvalidParam(format!(
                "calibration peak {peak_delta_r} Ω must lie in (0, {span})"
            )));
        }
        if v_drive == 0.0 || !v_drive.is_finite() || !(duration > 0.0) {
            return Err(Error::InvalidParam(
                "calibration needs a nonzero drive and positive duration".into(),
            ));
        }
        let m_end = self.r_off - peak_delta_r;
        let k = (self.r_off * self.r_off - m_end * m_end) / (2.0 * span * v_drive.abs() * duration);
        let mu_v = k * self.d * self.d / self.r_on;
        Self::new(self.r_on, self.r_off, self.d, mu_v)
    }
}

/// Doped-region length `w` of one device, always within `[0, d]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DeviceState {
    w: f64,
}

impl DeviceState {
    /// Fully undoped device (memristance `r_off`).
    pub const PRISTINE: DeviceState = DeviceState { w: 0.0 };

    pub fn new(params: &DeviceParams, w: f64) -> Result<Self> {
        if !(0.0..=params.d).contains(&w) {
            return Err(Error::InvalidParam(format!(
                "state w={w} outside [0, {}]",
                params.d
            )));
        }
        Ok(Self { w })
    }

    /// State whose memristance is `r_off - delta_r`, clamped to the valid range.
    pub fn from_delta_r(params: &DeviceParams, delta_r: f64) -> Self {
        let frac = delta_r / (params.r_off - params.r_on);
        Self {
            w: (frac * params.d).clamp(0.0, params.d),
        }
    }

    #[inline]
    pub fn w(&self) -> f64 {
        self.w
    }

    #[cfg(test)]
    pub(crate) fn from_raw(w: f64) -> Self {
        Self { w }
    }
}

/// Memristance `r_on·(w/d) + r_off·(1 − w/d)`.
#[inline]
pub fn memristance(params: &DeviceParams, state: DeviceState) -> f64 {
    let x = state.w / params.d;
    params.r_on * x + params.r_off * (1.0 - x)
}

/// Moves the state by `delta_q` coulombs of charge.
///
/// Positive charge enters the row-side terminal and leaves the column-side
/// terminal; it grows the doped region and lowers the memristance.
#[inline]
pub fn apply_charge(params: &DeviceParams, state: DeviceState, delta_q: f64) -> DeviceState {
    let w = state.w + params.drift_per_coulomb() * delta_q;
    DeviceState {
        w: w.clamp(0.0, params.d),
    }
}

/// Stored ink, `r_off − memristance`.
#[inline]
pub fn delta_r(params: &DeviceParams, state: DeviceState) -> f64 {
    params.r_off - memristance(params, state)
}
