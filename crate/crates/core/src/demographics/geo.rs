// SPDX-License-Identifier: Apache-2.0

//! Country geolocation from tweet coordinates or place names, and the fixed
//! country → continent table.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::ingest::{BoundingBox, TweetRecord};

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}, row {row}: {message}")]
    Row { path: PathBuf, row: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continent {
    Africa,
    Antarctica,
    Asia,
    Europe,
    NorthAmerica,
    Oceania,
    SouthAmerica,
}

impl Continent {
    pub fn as_str(&self) -> &'static str {
        match self {
            Continent::Africa => "Africa",
            Continent::Antarctica => "Antarctica",
            Continent::Asia => "Asia",
            Continent::Europe => "Europe",
            Continent::NorthAmerica => "North America",
            Continent::Oceania => "Oceania",
            Continent::SouthAmerica => "South America",
        }
    }
}

impl fmt::Display for Continent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const CONTINENT_TABLE: [(Continent, &str); 7] = [
    (
        Continent::Africa,
        "DZ AO BJ BW BF BI CV CM CF TD KM CG CD CI DJ EG GQ ER SZ ET GA GM GH GN GW KE LS LR LY MG MW ML MR \
         MU YT MA MZ NA NE NG RE RW SH ST SN SC SL SO ZA SS SD TZ TG TN UG EH ZM ZW",
    ),
    (Continent::Antarctica, "AQ BV GS HM TF"),
    (
        Continent::Asia,
        "AF AM AZ BH BD BT BN KH CN CY GE HK IN ID IR IQ IL JP JO KZ KW KG LA LB MO MY MV MN MM NP KP OM PK \
         PS PH QA SA SG KR LK SY TW TJ TH TL TR TM AE UZ VN YE IO CC CX",
    ),
    (
        Continent::Europe,
        "AX AL AD AT BY BE BA BG HR CZ DK EE FO FI FR DE GI GR GG VA HU IS IE IM IT JE XK LV LI LT LU MT MD \
         MC ME NL MK NO PL PT RO RU SM RS SK SI ES SJ SE CH UA GB",
    ),
    (
        Continent::NorthAmerica,
        "AI AG AW BS BB BZ BM BQ VG CA KY CR CU CW DM DO SV GL GD GP GT HT HN JM MQ MX MS NI PA PR BL KN LC \
         MF PM VC SX TT TC US VI",
    ),
    (
        Continent::Oceania,
        "AS AU CK FJ PF GU KI MH FM NR NC NZ NU NF MP PW PG PN WS SB TK TO TV VU WF UM",
    ),
    (Continent::SouthAmerica, "AR BO BR CL CO EC FK GF GY PY PE SR UY VE"),
];

/// Continent of an ISO-3166 alpha-2 code (case-insensitive).
pub fn continent_of(country: &str) -> Option<Continent> {
    let code = country.trim().to_ascii_uppercase();
    CONTINENT_TABLE
        .iter()
        .find(|(_, codes)| codes.split_whitespace().any(|c| c == code))
        .map(|(cont, _)| *cont)
}

fn normalize_place(name: &str) -> String {
    name.nfc()
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    entries: HashMap<String, String>,
    boxes: Vec<(BoundingBox, String)>,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a place name; an earlier entry for the same name is kept.
    pub fn add_place(&mut self, name: &str, country: &str) {
        self.entries
            .entry(normalize_place(name))
            .or_insert_with(|| country.to_ascii_uppercase());
    }

    /// Appends a box; boxes are matched in insertion order.
    pub fn add_box(&mut self, bbox: BoundingBox, country: &str) {
        self.boxes.push((bbox, country.to_ascii_uppercase()));
    }

    pub fn place(&self, name: &str) -> Option<&str> {
        self.entries.get(&normalize_place(name)).map(String::as_str)
    }

    pub fn boxes(&self) -> &[(BoundingBox, String)] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.entries.len() + self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reads `kind,name_or_coords,country` rows where `kind` is `place` or
    /// `box`. Box coordinates are `min_lat min_lon max_lat max_lon`, separated
    /// by spaces or semicolons.
    pub fn from_csv(path: &Path) -> Result<Self, GazetteerError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| GazetteerError::Csv {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let mut g = Gazetteer::new();
        for (i, row) in r.records().enumerate() {
            let row_no = i + 2;
            let bad = |message: String| GazetteerError::Row {
                path: path.to_path_buf(),
                row: row_no,
                message,
            };
            let row = row.map_err(|e| bad(e.to_string()))?;
            if row.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", row.len())));
            }
            let country = &row[2];
            if country.len() != 2 || !country.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(bad(format!("`{country}` is not an ISO-3166 alpha-2 code")));
            }
            match row[0].to_ascii_lowercase().as_str() {
                "place" => g.add_place(&row[1], country),
                "box" => {
                    let v: Vec<f64> = row[1]
                        .split(|c: char| c == ';' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}"))))
                        .collect::<Result<_, _>>()?;
                    if v.len() != 4 {
                        return Err(bad(format!("a box needs 4 coordinates, found {}", v.len())));
                    }
                    let b = BoundingBox {
                        min_lat: v[0],
                        min_lon: v[1],
                        max_lat: v[2],
                        max_lon: v[3],
                    };
                    if !b.is_valid() {
                        return Err(bad(format!("invalid bounding box `{}`", &row[1])));
                    }
                    g.add_box(b, country);
                }
                other => return Err(bad(format!("unknown kind `{other}`"))),
            }
        }
        Ok(g)
    }
}

/// Country of a tweet: the first box containing its coordinates, else its
/// place name, else none.
pub fn geolocate_country(t: &TweetRecord, gaz: &Gazetteer) -> Option<String> {
    if let Some(c) = t.coordinates {
        if let Some((_, country)) = gaz.boxes.iter().find(|(b, _)| b.contains(c)) {
            return Some(country.clone());
        }
    }
    t.place_name.as_deref().and_then(|p| gaz.place(p)).map(str::to_string)
}

/// Most frequent country over each author's geolocated tweets; ties go to the
/// lexicographically smaller code.
pub fn user_countries<'a>(
    tweets: impl IntoIterator<Item = &'a TweetRecord>,
    gaz: &Gazetteer,
) -> BTreeMap<String, String> {
    let mut tally: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for t in tweets {
        if let Some(c) = geolocate_country(t, gaz) {
            *tally.entry(t.author_id.clone()).or_default().entry(c).or_insert(0) += 1;
        }
    }
    tally
        .into_iter()
        .filter_map(|(user, counts)| {
            let mut best: Option<(String, usize)> = None;
            for (c, n) in counts {
                if best.as_ref().is_none_or(|(_, b)| n > *b) {
                    best = Some((c, n));
                }
            }
            best.map(|(c, _)| (user, c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Coordinates;
    use std::io::Write;

    fn tweet(id: &str, author: &str, coords: Option<(f64, f64)>, place: Option<&str>) -> TweetRecord {
        TweetRecord {
            tweet_id: id.into(),
            author_id: author.into(),
            text: String::new(),
            created_at: 0,
            likes: 1,
            retweets: 0,
            replies: 0,
            mentions: vec![],
            reply_to: None,
            retweet_of: None,
            coordinates: coords.map(|(lat, lon)| Coordinates { lat, lon }),
            place_name: place.map(str::to_string),
        }
    }

    fn fixture() -> Gazetteer {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/gazetteer.csv");
        Gazetteer::from_csv(&path).unwrap()
    }

    #[test]
    fn kenya_box_and_place() {
        let g = fixture();
        assert_eq!(
            geolocate_country(&tweet("1", "a", Some((-1.29, 36.82)), None), &g).as_deref(),
            Some("KE")
        );
        assert_eq!(
            geolocate_country(&tweet("2", "a", None, Some("Nairobi")), &g).as_deref(),
            Some("KE")
        );
        assert_eq!(
            geolocate_country(&tweet("3", "a", None, Some("  NAIROBI ")), &g).as_deref(),
            Some("KE")
        );
        assert_eq!(geolocate_country(&tweet("4", "a", None, Some("Atlantis")), &g), None);
        assert_eq!(geolocate_country(&tweet("5", "a", None, None), &g), None);
    }

    #[test]
    fn boxes_checked_in_file_order() {
        let mut g = Gazetteer::new();
        g.add_box(BoundingBox::from_corners(0.0, 0.0, 10.0, 10.0), "aa");
        g.add_box(BoundingBox::from_corners(0.0, 0.0, 5.0, 5.0), "BB");
        assert_eq!(
            geolocate_country(&tweet("1", "a", Some((1.0, 1.0)), None), &g).as_deref(),
            Some("AA")
        );
    }

    #[test]
    fn coordinates_outside_boxes_fall_back_to_place() {
        let g = fixture();
        let t = tweet("1", "a", Some((48.85, 2.35)), Some("Nairobi"));
        assert_eq!(geolocate_country(&t, &g).as_deref(), Some("KE"));
    }

    #[test]
    fn rejects_bad_rows() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "kind,name_or_coords,country\nbox,1 2 3,KE").unwrap();
        assert!(Gazetteer::from_csv(f.path()).is_err());
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "kind,name_or_coords,country\nbox,5;0;1;10,KE").unwrap();
        assert!(Gazetteer::from_csv(f.path()).is_err());
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "kind,name_or_coords,country\nplace,Oslo,Norway").unwrap();
        assert!(Gazetteer::from_csv(f.path()).is_err());
    }

    #[test]
    fn majority_country_per_user() {
        let g = fixture();
        let tweets = vec![
            tweet("1", "u", None, Some("Nairobi")),
            tweet("2", "u", None, Some("Lagos")),
            tweet("3", "u", None, Some("Lagos")),
            tweet("4", "v", None, Some("Lagos")),
            tweet("5", "v", None, Some("Nairobi")),
            tweet("6", "w", None, Some("nowhere")),
        ];
        let m = user_countries(&tweets, &g);
        assert_eq!(m.get("u").map(String::as_str), Some("NG"));
        assert_eq!(m.get("v").map(String::as_str), Some("KE"));
        assert!(!m.contains_key("w"));
    }

    #[test]
    fn continents() {
        assert_eq!(continent_of("ke"), Some(Continent::Africa));
        assert_eq!(continent_of("US"), Some(Continent::NorthAmerica));
        assert_eq!(continent_of("BR"), Some(Continent::SouthAmerica));
        assert_eq!(continent_of("IN"), Some(Continent::Asia));
        assert_eq!(continent_of("GB"), Some(Continent::Europe));
        assert_eq!(continent_of("NZ"), Some(Continent::Oceania));
        assert_eq!(continent_of("ZZ"), None);
        // Each code appears on exactly one continent.
        let mut seen = std::collections::HashSet::new();
        for (_, codes) in CONTINENT_TABLE {
            for c in codes.split_whitespace() {
                assert!(seen.insert(c), "{c} listed twice");
            }
        }
    }
}
