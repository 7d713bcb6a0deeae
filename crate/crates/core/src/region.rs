//! Geographic region codes used for data placement and shipping rules.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// One of the four geographies a table, node or asset can live in.
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    EU,
    NA,
    ME,
    AS,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::EU, Region::NA, Region::ME, Region::AS];

    pub fn code(&self) -> &'static str {
        match self {
            Region::EU => "EU",
            Region::NA => "NA",
            Region::ME => "ME",
            Region::AS => "AS",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown region code `{0}` (expected EU, NA, ME or AS)")]
pub struct UnknownRegion(pub String);

impl FromStr for Region {
    type Err = UnknownRegion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "EU" => Ok(Region::EU),
            "NA" => Ok(Region::NA),
            "ME" => Ok(Region::ME),
            "AS" => Ok(Region::AS),
            _ => Err(UnknownRegion(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_is_case_insensitive() {
        assert_eq!("eu".parse::<Region>().unwrap(), Region::EU);
        assert_eq!("As".parse::<Region>().unwrap(), Region::AS);
        assert!("APAC".parse::<Region>().is_err());
    }

    #[test]
    fn serde_uses_codes() {
        assert_eq!(serde_json::to_string(&Region::ME).unwrap(), "\"ME\"");
        let r: Region = serde_json::from_str("\"NA\"").unwrap();
        assert_eq!(r, Region::NA);
    }
}
