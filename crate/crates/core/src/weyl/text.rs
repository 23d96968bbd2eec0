//! Textual form of [`PolyOp`]: `"(re,im) * q1^a p1^b q2^c p2^d + ..."`.
//!
//! Modes are one-based in text. A bare exponent-free factor (`q2`) means
//! power one, and `1` denotes the identity monomial. `0` or an empty string
//! parse to the zero polynomial.

use num_complex::Complex64 as C64;

use super::monomial::Monomial;
use super::poly::PolyOp;
use super::WeylError;

fn parse_err(text: &str, reason: impl Into<String>) -> WeylError {
    WeylError::Parse { input: text.to_string(), reason: reason.into() }
}

fn parse_coeff(text: &str, inner: &str) -> Result<C64, WeylError> {
    let (re, im) = inner
        .split_once(',')
        .ok_or_else(|| parse_err(text, format!("coefficient `({inner})` must be `(re,im)`")))?;
    let re: f64 = re.trim().parse().map_err(|_| parse_err(text, format!("bad real part `{re}`")))?;
    let im: f64 = im.trim().parse().map_err(|_| parse_err(text, format!("bad imaginary part `{im}`")))?;
    Ok(C64::new(re, im))
}

fn parse_factor(text: &str, token: &str, exps: &mut [(u32, u32)]) -> Result<(), WeylError> {
    if token == "1" {
        return Ok(());
    }
    let mut chars = token.chars();
    let kind = chars.next().ok_or_else(|| parse_err(text, "empty factor"))?;
    let rest = chars.as_str();
    let (mode, power) = match rest.split_once('^') {
        Some((m, e)) => (m, e.parse::<u32>().map_err(|_| parse_err(text, format!("bad exponent in `{token}`")))?),
        None => (rest, 1),
    };
    let mode: usize = mode.parse().map_err(|_| parse_err(text, format!("bad mode index in `{token}`")))?;
    if mode == 0 || mode > exps.len() {
        return Err(WeylError::ModeOutOfRange { mode: mode.wrapping_sub(1), mode_count: exps.len() });
    }
    let slot = &mut exps[mode - 1];
    match kind {
        // A q after a p on the same mode would not be canonical.
        'q' if slot.1 > 0 => Err(parse_err(text, format!("`{token}` follows a p factor of the same mode"))),
        'q' => {
            slot.0 += power;
            Ok(())
        }
        'p' => {
            slot.1 += power;
            Ok(())
        }
        _ => Err(parse_err(text, format!("unknown factor `{token}`"))),
    }
}

pub(super) fn parse(text: &str, mode_count: usize) -> Result<PolyOp, WeylError> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed == "0" {
        return Ok(PolyOp::zero(mode_count));
    }
    let mut terms = Vec::new();
    let mut rest = trimmed;
    loop {
        rest = rest.trim_start();
        let body = rest
            .strip_prefix('(')
            .ok_or_else(|| parse_err(text, "each term must start with a `(re,im)` coefficient"))?;
        let close = body.find(')').ok_or_else(|| parse_err(text, "unclosed coefficient"))?;
        let coeff = parse_coeff(text, &body[..close])?;
        rest = body[close + 1..].trim_start();
        rest = rest.strip_prefix('*').unwrap_or(rest);

        let end = rest.find('+').unwrap_or(rest.len());
        let mut exps = vec![(0u32, 0u32); mode_count];
        let mono_text = rest[..end].trim();
        if mono_text.is_empty() {
            return Err(parse_err(text, "missing monomial after coefficient"));
        }
        for token in mono_text.split_whitespace() {
            parse_factor(text, token, &mut exps)?;
        }
        terms.push((Monomial::from_exponents(exps), coeff));
        if end == rest.len() {
            break;
        }
        rest = &rest[end + 1..];
    }
    Ok(PolyOp::from_terms(mode_count, terms))
}
