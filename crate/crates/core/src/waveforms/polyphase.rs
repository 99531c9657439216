//! Frank and P1..P4 polyphase pulse codes.
//!
//! With 1-based indices `i, j = 1..M` (matrix codes) or `i = 1..N`:
//!
//! ```text
//! Frank  phi(i,j) = 2*pi*(i-1)*(j-1)/M
//! P1     phi(i,j) = -(pi/M) * (M - (2j-1)) * ((j-1)*M + (i-1))
//! P2     phi(i,j) = -(pi/(2M)) * (2i-1-M) * (2j-1-M)          (M even)
//! P3     phi(i)   = pi*(i-1)^2/N
//! P4     phi(i)   = pi*(i-1)^2/N - pi*(i-1)
//! ```
//!
//! Matrix codes are emitted group by group: the outer loop runs over the
//! frequency-step group (`i` for Frank and P2, `j` for P1), the inner loop
//! over the chips of the group. For Frank and P2 the law is symmetric, so
//! this is plain row-major order.
//!
//! Phases are computed from exact integer numerators, `pi * num / den`, so
//! small codes reproduce their closed-form values bit for bit.

use std::f64::consts::PI;

use super::IqBuffer;
use crate::scene::SignalClass;
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeFamily {
    Frank,
    P1,
    P2,
    P3,
    P4,
}

impl TryFrom<SignalClass> for CodeFamily {
    type Error = Error;

    fn try_from(class: SignalClass) -> Result<Self> {
        Ok(match class {
            SignalClass::Frank => CodeFamily::Frank,
            SignalClass::P1 => CodeFamily::P1,
            SignalClass::P2 => CodeFamily::P2,
            SignalClass::P3 => CodeFamily::P3,
            SignalClass::P4 => CodeFamily::P4,
            other => return Err(Error::UnsupportedClass(format!("{other} is not a polyphase code"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCode {
    pub family: CodeFamily,
    /// M for Frank/P1/P2, N for P3/P4.
    pub order: usize,
    pub phases: Vec<f64>,
}

impl PhaseCode {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Unit-modulus chips `exp(j*phi)`.
    pub fn chips(&self) -> Vec<C64> {
        self.phases.iter().map(|&p| C64::cis(p)).collect()
    }
}

pub fn polyphase_code(family: CodeFamily, size: usize) -> Result<PhaseCode> {
    if size == 0 {
        return Err(Error::arg(format!("{family:?} code needs order >= 1")));
    }
    let m = size as i64;
    let phases: Vec<f64> = match family {
        CodeFamily::Frank => (1..=m)
            .flat_map(|i| (1..=m).map(move |j| PI * (2 * (i - 1) * (j - 1)) as f64 / m as f64))
            .collect(),
        CodeFamily::P1 => (1..=m)
            .flat_map(|j| (1..=m).map(move |i| -PI * ((m - (2 * j - 1)) * ((j - 1) * m + (i - 1))) as f64 / m as f64))
            .collect(),
        CodeFamily::P2 => {
            if m % 2 != 0 {
                return Err(Error::arg(format!("P2 code needs even order, got {m}")));
            }
            (1..=m)
                .flat_map(|i| (1..=m).map(move |j| -PI * ((2 * i - 1 - m) * (2 * j - 1 - m)) as f64 / (2 * m) as f64))
                .collect()
        }
        CodeFamily::P3 => (1..=m).map(|i| PI * ((i - 1) * (i - 1)) as f64 / m as f64).collect(),
        CodeFamily::P4 => (1..=m)
            .map(|i| PI * ((i - 1) * (i - 1) - m * (i - 1)) as f64 / m as f64)
            .collect(),
    };
    Ok(PhaseCode {
        family,
        order: size,
        phases,
    })
}

/// Rectangular-chip pulse: each chip held for `round(fs / chip_rate)` samples.
pub fn gen_radar_pulse(code: &PhaseCode, chip_rate: f64, fs: f64) -> Result<IqBuffer> {
    if code.is_empty() {
        return Err(Error::arg("zero-length phase code"));
    }
    if !(chip_rate > 0.0 && chip_rate <= fs) {
        return Err(Error::arg(format!(
            "chip rate {chip_rate} Hz must lie in (0, fs = {fs} Hz]"
        )));
    }
    let spc = ((fs / chip_rate).round() as usize).max(1);
    let samples = code
        .chips()
        .into_iter()
        .flat_map(|c| std::iter::repeat_n(c, spc))
        .collect();
    IqBuffer::new(samples, fs)
}
