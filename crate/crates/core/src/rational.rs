//! Small helpers around exact rationals.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact rational used for every matrix entry and every lattice test.
pub type Rat = Ratio<i128>;

pub fn rat(n: i128, d: i128) -> Rat {
    Rat::new(n, d)
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(n as i128)
}

/// Largest integer not exceeding `r`.
pub fn floor(r: &Rat) -> i64 {
    r.numer().div_floor(r.denom()) as i64
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_positive(r: &Rat) -> bool {
    r.is_positive()
}

pub fn abs(r: &Rat) -> Rat {
    if r < &Rat::zero() {
        -*r
    } else {
        *r
    }
}

/// Parse "p/q", "p" or a terminating decimal such as "0.25".
pub fn parse(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: i128 = a.trim().parse().ok()?;
        let d: i128 = b.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    if let Some((a, b)) = s.split_once('.') {
        let neg = a.starts_with('-');
        let ip: i128 = if a.is_empty() || a == "-" { 0 } else { a.parse().ok()? };
        if b.is_empty() || !b.chars().all(|c| c.is_ascii_digit()) || b.len() > 30 {
            return None;
        }
        let den = 10i128.checked_pow(b.len() as u32)?;
        let frac: i128 = b.parse().ok()?;
        let mag = ip.abs() * den + frac;
        return Some(Rat::new(if neg { -mag } else { mag }, den));
    }
    s.parse::<i128>().ok().map(Rat::from_integer)
}

pub fn display(r: &Rat) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_of_negative_fraction_rounds_down() {
        assert_eq!(floor(&rat(-3, 2)), -2);
        assert_eq!(floor(&rat(7, 2)), 3);
        assert_eq!(floor(&int(4)), 4);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3/4"), Some(rat(3, 4)));
        assert_eq!(parse("2"), Some(int(2)));
        assert_eq!(parse("0.25"), Some(rat(1, 4)));
        assert_eq!(parse("-1.5"), Some(rat(-3, 2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
    }
}
