//! Text serialization of floating-point values.
//!
//! Every float written by the pipeline uses 17 significant digits in
//! scientific notation, which round-trips `f64` exactly.

use std::str::FromStr;

use crate::{Error, Real, Result};

pub fn float<T: Real>(x: T) -> String {
    format!("{:.16e}", x)
}

pub fn parse_float<T: Real>(s: &str) -> Result<T> {
    T::from_str(s.trim()).map_err(|_| Error::Format(format!("not a number: {s:?}")))
}

pub fn parse_int<I: FromStr>(s: &str, what: &str) -> Result<I> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad {what}: {s:?}")))
}

pub fn join_floats<T: Real>(xs: &[T]) -> String {
    xs.iter().map(|&x| float(x)).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1f64, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = float(x);
            assert_eq!(parse_float::<f64>(&s).unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(float(1.0f64), "1.0000000000000000e0");
    }
}
