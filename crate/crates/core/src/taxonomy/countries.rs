//! ISO 3166-1 alpha-2 country codes and their continental region.
//!
//! Assignments follow the UN M49 geoscheme. The Americas are split the
//! usual way: Northern America, Central America and the Caribbean map to
//! [`Region::NorthAmerica`], the South America sub-region to
//! [`Region::SouthAmerica`]. Taiwan, which M49 does not list, is placed in
//! Asia.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Region, TaxonomyError};
use Region::*;

/// All 249 officially assigned alpha-2 codes, sorted by code.
pub static COUNTRY_TABLE: &[(&str, Region)] = &[
    ("AD", Europe),
    ("AE", Asia),
    ("AF", Asia),
    ("AG", NorthAmerica),
    ("AI", NorthAmerica),
    ("AL", Europe),
    ("AM", Asia),
    ("AO", Africa),
    ("AQ", Antarctica),
    ("AR", SouthAmerica),
    ("AS", Oceania),
    ("AT", Europe),
    ("AU", Oceania),
    ("AW", NorthAmerica),
    ("AX", Europe),
    ("AZ", Asia),
    ("BA", Europe),
    ("BB", NorthAmerica),
    ("BD", Asia),
    ("BE", Europe),
    ("BF", Africa),
    ("BG", Europe),
    ("BH", Asia),
    ("BI", Africa),
    ("BJ", Africa),
    ("BL", NorthAmerica),
    ("BM", NorthAmerica),
    ("BN", Asia),
    ("BO", SouthAmerica),
    ("BQ", NorthAmerica),
    ("BR", SouthAmerica),
    ("BS", NorthAmerica),
    ("BT", Asia),
    ("BV", SouthAmerica),
    ("BW", Africa),
    ("BY", Europe),
    ("BZ", NorthAmerica),
    ("CA", NorthAmerica),
    ("CC", Oceania),
    ("CD", Africa),
    ("CF", Africa),
    ("CG", Africa),
    ("CH", Europe),
    ("CI", Africa),
    ("CK", Oceania),
    ("CL", SouthAmerica),
    ("CM", Africa),
    ("CN", Asia),
    ("CO", SouthAmerica),
    ("CR", NorthAmerica),
    ("CU", NorthAmerica),
    ("CV", Africa),
    ("CW", NorthAmerica),
    ("CX", Oceania),
    ("CY", Asia),
    ("CZ", Europe),
    ("DE", Europe),
    ("DJ", Africa),
    ("DK", Europe),
    ("DM", NorthAmerica),
    ("DO", NorthAmerica),
    ("DZ", Africa),
    ("EC", SouthAmerica),
    ("EE", Europe),
    ("EG", Africa),
    ("EH", Africa),
    ("ER", Africa),
    ("ES", Europe),
    ("ET", Africa),
    ("FI", Europe),
    ("FJ", Oceania),
    ("FK", SouthAmerica),
    ("FM", Oceania),
    ("FO", Europe),
    ("FR", Europe),
    ("GA", Africa),
    ("GB", Europe),
    ("GD", NorthAmerica),
    ("GE", Asia),
    ("GF", SouthAmerica),
    ("GG", Europe),
    ("GH", Africa),
    ("GI", Europe),
    ("GL", NorthAmerica),
    ("GM", Africa),
    ("GN", Africa),
    ("GP", NorthAmerica),
    ("GQ", Africa),
    ("GR", Europe),
    ("GS", SouthAmerica),
    ("GT", NorthAmerica),
    ("GU", Oceania),
    ("GW", Africa),
    ("GY", SouthAmerica),
    ("HK", Asia),
    ("HM", Oceania),
    ("HN", NorthAmerica),
    ("HR", Europe),
    ("HT", NorthAmerica),
    ("HU", Europe),
    ("ID", Asia),
    ("IE", Europe),
    ("IL", Asia),
    ("IM", Europe),
    ("IN", Asia),
    ("IO", Africa),
    ("IQ", Asia),
    ("IR", Asia),
    ("IS", Europe),
    ("IT", Europe),
    ("JE", Europe),
    ("JM", NorthAmerica),
    ("JO", Asia),
    ("JP", Asia),
    ("KE", Africa),
    ("KG", Asia),
    ("KH", Asia),
    ("KI", Oceania),
    ("KM", Africa),
    ("KN", NorthAmerica),
    ("KP", Asia),
    ("KR", Asia),
    ("KW", Asia),
    ("KY", NorthAmerica),
    ("KZ", Asia),
    ("LA", Asia),
    ("LB", Asia),
    ("LC", NorthAmerica),
    ("LI", Europe),
    ("LK", Asia),
    ("LR", Africa),
    ("LS", Africa),
    ("LT", Europe),
    ("LU", Europe),
    ("LV", Europe),
    ("LY", Africa),
    ("MA", Africa),
    ("MC", Europe),
    ("MD", Europe),
    ("ME", Europe),
    ("MF", NorthAmerica),
    ("MG", Africa),
    ("MH", Oceania),
    ("MK", Europe),
    ("ML", Africa),
    ("MM", Asia),
    ("MN", Asia),
    ("MO", Asia),
    ("MP", Oceania),
    ("MQ", NorthAmerica),
    ("MR", Africa),
    ("MS", NorthAmerica),
    ("MT", Europe),
    ("MU", Africa),
    ("MV", Asia),
    ("MW", Africa),
    ("MX", NorthAmerica),
    ("MY", Asia),
    ("MZ", Africa),
    ("NA", Africa),
    ("NC", Oceania),
    ("NE", Africa),
    ("NF", Oceania),
    ("NG", Africa),
    ("NI", NorthAmerica),
    ("NL", Europe),
    ("NO", Europe),
    ("NP", Asia),
    ("NR", Oceania),
    ("NU", Oceania),
    ("NZ", Oceania),
    ("OM", Asia),
    ("PA", NorthAmerica),
    ("PE", SouthAmerica),
    ("PF", Oceania),
    ("PG", Oceania),
    ("PH", Asia),
    ("PK", Asia),
    ("PL", Europe),
    ("PM", NorthAmerica),
    ("PN", Oceania),
    ("PR", NorthAmerica),
    ("PS", Asia),
    ("PT", Europe),
    ("PW", Oceania),
    ("PY", SouthAmerica),
    ("QA", Asia),
    ("RE", Africa),
    ("RO", Europe),
    ("RS", Europe),
    ("RU", Europe),
    ("RW", Africa),
    ("SA", Asia),
    ("SB", Oceania),
    ("SC", Africa),
    ("SD", Africa),
    ("SE", Europe),
    ("SG", Asia),
    ("SH", Africa),
    ("SI", Europe),
    ("SJ", Europe),
    ("SK", Europe),
    ("SL", Africa),
    ("SM", Europe),
    ("SN", Africa),
    ("SO", Africa),
    ("SR", SouthAmerica),
    ("SS", Africa),
    ("ST", Africa),
    ("SV", NorthAmerica),
    ("SX", NorthAmerica),
    ("SY", Asia),
    ("SZ", Africa),
    ("TC", NorthAmerica),
    ("TD", Africa),
    ("TF", Africa),
    ("TG", Africa),
    ("TH", Asia),
    ("TJ", Asia),
    ("TK", Oceania),
    ("TL", Asia),
    ("TM", Asia),
    ("TN", Africa),
    ("TO", Oceania),
    ("TR", Asia),
    ("TT", NorthAmerica),
    ("TV", Oceania),
    ("TW", Asia),
    ("TZ", Africa),
    ("UA", Europe),
    ("UG", Africa),
    ("UM", Oceania),
    ("US", NorthAmerica),
    ("UY", SouthAmerica),
    ("UZ", Asia),
    ("VA", Europe),
    ("VC", NorthAmerica),
    ("VE", SouthAmerica),
    ("VG", NorthAmerica),
    ("VI", NorthAmerica),
    ("VN", Asia),
    ("VU", Oceania),
    ("WF", Oceania),
    ("WS", Oceania),
    ("YE", Asia),
    ("YT", Africa),
    ("ZA", Africa),
    ("ZM", Africa),
    ("ZW", Africa),
];

pub fn region_of_country(code: &str) -> Result<Region, TaxonomyError> {
    COUNTRY_TABLE
        .binary_search_by(|(c, _)| (*c).cmp(code))
        .map(|i| COUNTRY_TABLE[i].1)
        .map_err(|_| TaxonomyError::UnknownCountry(code.to_owned()))
}

/// A validated, officially assigned ISO 3166-1 alpha-2 code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    pub fn parse(code: &str) -> Result<Self, TaxonomyError> {
        let bytes = code.as_bytes();
        if bytes.len() != 2 || !bytes.iter().all(u8::is_ascii_uppercase) {
            return Err(TaxonomyError::UnknownCountry(code.to_owned()));
        }
        region_of_country(code)?;
        Ok(CountryCode([bytes[0], bytes[1]]))
    }

    pub fn as_str(&self) -> &str {
        // always two ASCII uppercase letters
        std::str::from_utf8(&self.0).expect("ascii country code")
    }

    pub fn region(&self) -> Region {
        region_of_country(self.as_str()).expect("validated at construction")
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CountryCode {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for CountryCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CountryCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        CountryCode::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn examples() {
        assert_eq!(region_of_country("US"), Ok(NorthAmerica));
        assert_eq!(region_of_country("DE"), Ok(Europe));
        assert_eq!(
            region_of_country("XX"),
            Err(TaxonomyError::UnknownCountry("XX".into()))
        );
    }

    #[test]
    fn transcontinental_follow_m49() {
        assert_eq!(region_of_country("RU"), Ok(Europe));
        assert_eq!(region_of_country("TR"), Ok(Asia));
        assert_eq!(region_of_country("EG"), Ok(Africa));
        assert_eq!(region_of_country("KZ"), Ok(Asia));
        assert_eq!(region_of_country("CY"), Ok(Asia));
        assert_eq!(region_of_country("MX"), Ok(NorthAmerica));
        assert_eq!(region_of_country("BR"), Ok(SouthAmerica));
        assert_eq!(region_of_country("AQ"), Ok(Antarctica));
        assert_eq!(region_of_country("NZ"), Ok(Oceania));
    }

    #[test]
    fn table_is_sorted_unique_and_complete() {
        assert_eq!(COUNTRY_TABLE.len(), 249);
        assert!(COUNTRY_TABLE.windows(2).all(|w| w[0].0 < w[1].0));
        let regions: HashSet<Region> = COUNTRY_TABLE.iter().map(|(_, r)| *r).collect();
        assert_eq!(regions.len(), Region::ALL.len());
        for (code, region) in COUNTRY_TABLE {
            assert_eq!(region_of_country(code), Ok(*region));
            assert_eq!(CountryCode::parse(code).unwrap().region(), *region);
        }
    }

    #[test]
    fn code_must_be_two_uppercase_letters() {
        assert!(CountryCode::parse("us").is_err());
        assert!(CountryCode::parse("USA").is_err());
        assert!(CountryCode::parse("").is_err());
        assert_eq!(CountryCode::parse("GB").unwrap().as_str(), "GB");
    }
}
