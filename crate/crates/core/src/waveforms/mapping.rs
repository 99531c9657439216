//! Gray-coded PSK and QAM constellation mappers.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}

fn bits_to_label(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn bits_per_symbol(order: usize, allowed: &[usize], bits: &[bool]) -> Result<usize> {
    if !allowed.contains(&order) {
        return Err(Error::arg(format!(
            "unsupported constellation order {order} (expected one of {allowed:?})"
        )));
    }
    let k = order.trailing_zeros() as usize;
    if !bits.len().is_multiple_of(k) {
        return Err(Error::arg(format!(
            "{} bits is not a multiple of {k} bits per symbol",
            bits.len()
        )));
    }
    Ok(k)
}

/// Point of M-PSK for Gray label `label`: `exp(j(2*pi*k/M + pi/M))` where
/// `k` is the position whose Gray code equals `label`.
pub(crate) fn psk_point(label: usize, order: usize) -> C64 {
    let k = gray_decode(label);
    C64::cis(2.0 * PI * k as f64 / order as f64 + PI / order as f64)
}

/// Maps MSB-first bit groups onto unit-energy Gray-coded M-PSK.
pub fn map_psk(bits: &[bool], order: usize) -> Result<Vec<C64>> {
    let k = bits_per_symbol(order, &[4, 8, 16, 32], bits)?;
    Ok(bits.chunks(k).map(|c| psk_point(bits_to_label(c), order)).collect())
}

/// Gray-coded PAM level `2*i - (levels - 1)` for a `levels`-ary axis.
fn pam_level(label: usize, levels: usize) -> f64 {
    (2 * gray_decode(label)) as f64 - (levels - 1) as f64
}

/// Un-normalized 16QAM point: first two bits pick I, last two pick Q, each
/// Gray coded over {-3, -1, 1, 3}.
fn qam16_point(label: usize) -> C64 {
    C64::new(pam_level(label >> 2, 4), pam_level(label & 3, 4))
}

/// Un-normalized cross 32QAM point.
///
/// The label indexes an 8x4 Gray-coded rectangle (3 bits for I over
/// {-7..7}, 2 bits for Q over {-3..3}). The eight points with |I| = 7 fold
/// onto the missing rows |Q| = 5 of the 6x6 cross:
/// `(+-7, q) -> (+-(4 - |q|), 5*sign(q))`.
fn qam32_point(label: usize) -> C64 {
    let i = pam_level(label >> 2, 8);
    let q = pam_level(label & 3, 4);
    if i.abs() == 7.0 {
        C64::new(i.signum() * (4.0 - q.abs()), 5.0 * q.signum())
    } else {
        C64::new(i, q)
    }
}

/// Maps MSB-first bit groups onto unit-energy Gray-coded square 16QAM or
/// cross 32QAM.
pub fn map_qam(bits: &[bool], order: usize) -> Result<Vec<C64>> {
    let k = bits_per_symbol(order, &[16, 32], bits)?;
    let (point, scale): (fn(usize) -> C64, f64) = match order {
        16 => (qam16_point, 1.0 / 10f64.sqrt()),
        _ => (qam32_point, 1.0 / 20f64.sqrt()),
    };
    Ok(bits.chunks(k).map(|c| point(bits_to_label(c)) * scale).collect())
}
