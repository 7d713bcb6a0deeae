//! Exact integer money. One currency unit is 1,000,000 micro-units; all
//! arithmetic on money is integer arithmetic, never floating point.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

pub const MICROS_PER_UNIT: i64 = 1_000_000;

/// A signed amount in micro-units.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money {
    pub micro_units: i64,
}

impl Money {
    pub const ZERO: Money = Money { micro_units: 0 };

    pub const fn from_micro(micro_units: i64) -> Self {
        Money { micro_units }
    }

    pub const fn from_units(units: i64) -> Self {
        Money { micro_units: units * MICROS_PER_UNIT }
    }

    pub fn is_negative(&self) -> bool {
        self.micro_units < 0
    }

    pub fn checked_add(self, rhs: Money) -> Option<Money> {
        self.micro_units.checked_add(rhs.micro_units).map(Money::from_micro)
    }

    pub fn checked_mul(self, n: i64) -> Option<Money> {
        self.micro_units.checked_mul(n).map(Money::from_micro)
    }

    /// `self * num / den` rounded toward negative infinity, exact in i128.
    pub fn mul_div_floor(self, num: i128, den: i128) -> Option<Money> {
        if den == 0 {
            return None;
        }
        let v = i128::from(self.micro_units).checked_mul(num)?;
        let q = v.div_euclid(den);
        i64::try_from(q).ok().map(Money::from_micro)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money::from_micro(self.micro_units + rhs.micro_units)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.micro_units += rhs.micro_units;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money::from_micro(self.micro_units - rhs.micro_units)
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.micro_units -= rhs.micro_units;
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money::from_micro(-self.micro_units)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.micro_units < 0 { "-" } else { "" };
        let abs = self.micro_units.unsigned_abs();
        let units = abs / MICROS_PER_UNIT as u64;
        let frac = abs % MICROS_PER_UNIT as u64;
        let mut frac_str = format!("{frac:06}");
        while frac_str.len() > 2 && frac_str.ends_with('0') {
            frac_str.pop();
        }
        write!(f, "{sign}${units}.{frac_str}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid money literal `{0}` (expected e.g. 2.50, $2.50 or -0.25)")]
pub struct MoneyParseError(pub String);

impl FromStr for Money {
    type Err = MoneyParseError;

    /// Accepts decimal currency units with up to six fractional digits,
    /// optionally prefixed by `$` and/or `-`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let original = s;
        let err = || MoneyParseError(original.to_string());
        let mut s = s.trim();
        let negative = s.starts_with('-');
        if negative {
            s = &s[1..];
        }
        s = s.strip_prefix('$').unwrap_or(s);
        if s.is_empty() {
            return Err(err());
        }
        let (unit_part, frac_part) = match s.split_once('.') {
            Some((u, f)) => (u, f),
            None => (s, ""),
        };
        if frac_part.len() > 6 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        if unit_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        let units: i64 = if unit_part.is_empty() {
            0
        } else {
            unit_part.parse().map_err(|_| err())?
        };
        let mut frac: i64 = 0;
        if !frac_part.is_empty() {
            let padded = format!("{frac_part:0<6}");
            frac = padded.parse().map_err(|_| err())?;
        }
        let micro = units
            .checked_mul(MICROS_PER_UNIT)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Money::from_micro(if negative { -micro } else { micro }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_trims_but_keeps_cents() {
        assert_eq!(Money::from_micro(2_500_000).to_string(), "$2.50");
        assert_eq!(Money::from_micro(400_000).to_string(), "$0.40");
        assert_eq!(Money::from_micro(1).to_string(), "$0.000001");
        assert_eq!(Money::from_micro(-1_000_000).to_string(), "-$1.00");
        assert_eq!(Money::ZERO.to_string(), "$0.00");
    }

    #[test]
    fn parse_round_trips() {
        for s in ["$2.50", "2.50", "-0.25", "3", "$0.000001"] {
            let m: Money = s.parse().unwrap();
            let again: Money = m.to_string().parse().unwrap();
            assert_eq!(m, again, "{s}");
        }
        assert_eq!("$1".parse::<Money>().unwrap(), Money::from_units(1));
        assert!("1.2345678".parse::<Money>().is_err());
        assert!("abc".parse::<Money>().is_err());
    }

    #[test]
    fn json_is_integer_micro_units() {
        let m = Money::from_micro(2_500_000);
        assert_eq!(serde_json::to_string(&m).unwrap(), "2500000");
        let back: Money = serde_json::from_str("2500000").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn mul_div_floor_is_exact() {
        let m = Money::from_units(1);
        assert_eq!(m.mul_div_floor(2500, 1000).unwrap(), Money::from_micro(2_500_000));
        assert_eq!(m.mul_div_floor(1, 3).unwrap(), Money::from_micro(333_333));
    }
}
