// SPDX-License-Identifier: Apache-2.0

//! Per-user demographic annotation: country and continent, race category from
//! the display name, face-derived age and gender, and youth eligibility.

mod geo;
mod names;

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{AccountKind, Gender, UserRecord};

pub use geo::{continent_of, geolocate_country, user_countries, Continent, Gazetteer, GazetteerError};
pub use names::{
    classify_race, load_name_model, name_ngrams, normalize_name, read_name_csv, NameModel, NameModelError,
    NgramClassifier, RaceCategory, RaceSource, DEFAULT_THRESHOLD,
};

pub const YOUTH_MIN_AGE: f64 = 13.0;
pub const YOUTH_MAX_AGE: f64 = 25.0;

const STOP_WORDS: &str = "a about after all also an and any are as at be because been but by can come could day \
    do even first for from get give go good have he her here him his how i if in into is it its just know like \
    look love make me most my new no not now of on one only or other our out over people say see she so some \
    take than that the their them then there these they think this time to two up us use very want way we well \
    what when which who will with would year you your official news daily team club life world vibes things \
    happy sunshine stuff fan fans real just best free live support media channel page account online";

/// Decides whether a display-name token is a proper noun.
#[derive(Debug, Clone)]
pub struct ProperNounLexicon {
    names: HashSet<String>,
    stop_words: HashSet<String>,
}

impl Default for ProperNounLexicon {
    fn default() -> Self {
        Self {
            names: HashSet::new(),
            stop_words: STOP_WORDS.split_whitespace().map(str::to_string).collect(),
        }
    }
}

impl ProperNounLexicon {
    /// Adds given names or surnames (case-insensitive).
    pub fn with_names<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        self.names.extend(
            names
                .into_iter()
                .map(|n| n.trim().to_lowercase())
                .filter(|n| !n.is_empty()),
        );
        self
    }

    /// At least two letters, an uppercase initial, and either a known name or
    /// not a common word.
    pub fn is_proper_noun(&self, token: &str) -> bool {
        let tok = token.trim_matches(|c: char| !c.is_alphanumeric());
        let mut chars = tok.chars();
        let Some(first) = chars.next() else {
            return false;
        };
        if tok.chars().count() < 2 || !first.is_uppercase() {
            return false;
        }
        let lower = tok.to_lowercase();
        self.names.contains(&lower) || !self.stop_words.contains(&lower)
    }

    pub fn has_proper_noun(&self, display_name: &str) -> bool {
        display_name.split_whitespace().any(|t| self.is_proper_noun(t))
    }
}

/// Age and gender estimates are usable only for a profile photo with exactly one face.
pub fn age_gender_eligible(u: &UserRecord) -> bool {
    u.has_profile_photo && u.face_count == Some(1)
}

/// Usable age estimate, if any.
pub fn usable_age(u: &UserRecord) -> Option<f64> {
    if age_gender_eligible(u) {
        u.age_estimate
    } else {
        None
    }
}

/// Usable gender estimate; `Unknown` counts as absent.
pub fn usable_gender(u: &UserRecord) -> Option<Gender> {
    match u.gender_estimate {
        Some(g @ (Gender::Female | Gender::Male)) if age_gender_eligible(u) => Some(g),
        _ => None,
    }
}

/// Youth eligibility: not an organization account, a proper-noun token in the
/// display name, and a usable age (when present) within the youth bounds.
pub fn is_eligible_youth(u: &UserRecord, lexicon: &ProperNounLexicon) -> bool {
    if u.account_kind == AccountKind::Organization {
        return false;
    }
    let age_ok = usable_age(u).is_none_or(|a| (YOUTH_MIN_AGE..=YOUTH_MAX_AGE).contains(&a));
    age_ok && lexicon.has_proper_noun(&u.display_name)
}

/// Ids of eligible youth users, in input order.
pub fn eligibility_filter(users: &[UserRecord], lexicon: &ProperNounLexicon) -> Vec<String> {
    users
        .iter()
        .filter(|u| is_eligible_youth(u, lexicon))
        .map(|u| u.user_id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicAnnotation {
    pub user_id: String,
    pub country: Option<String>,
    pub continent: Option<Continent>,
    pub race: RaceCategory,
    pub age: Option<f64>,
    pub gender: Option<Gender>,
    pub eligible_youth: bool,
}

/// Annotates every user. `countries` maps user id to derived country.
pub fn annotate_users(
    users: &[UserRecord],
    countries: &BTreeMap<String, String>,
    model: &NameModel,
    lexicon: &ProperNounLexicon,
) -> Vec<DemographicAnnotation> {
    users
        .par_iter()
        .map(|u| {
            let country = countries.get(&u.user_id).cloned();
            DemographicAnnotation {
                user_id: u.user_id.clone(),
                continent: country.as_deref().and_then(continent_of),
                country,
                race: classify_race(&u.display_name, model),
                age: usable_age(u),
                gender: usable_gender(u),
                eligible_youth: is_eligible_youth(u, lexicon),
            }
        })
        .collect()
}

pub fn annotations_ndjson(annotations: &[DemographicAnnotation]) -> String {
    let mut out = String::new();
    for a in annotations {
        out.push_str(&serde_json::to_string(a).expect("annotation serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_annotations(text: &str) -> Result<Vec<DemographicAnnotation>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemographicAxis {
    Continent,
    Race,
    Gender,
}

impl DemographicAxis {
    pub const ALL: [DemographicAxis; 3] = [
        DemographicAxis::Continent,
        DemographicAxis::Race,
        DemographicAxis::Gender,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DemographicAxis::Continent => "continent",
            DemographicAxis::Race => "race",
            DemographicAxis::Gender => "gender",
        }
    }

    /// Bucket of an annotation on this axis; `None` means missing.
    pub fn bucket(&self, a: &DemographicAnnotation) -> Option<String> {
        match self {
            DemographicAxis::Continent => a.continent.map(|c| c.to_string()),
            DemographicAxis::Race => Some(a.race.to_string()),
            DemographicAxis::Gender => a.gender.map(|g| g.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketShare {
    pub count: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub axis: DemographicAxis,
    pub buckets: BTreeMap<String, BucketShare>,
    pub missing: usize,
}

pub fn demographic_distribution<'a>(
    annotations: impl IntoIterator<Item = &'a DemographicAnnotation>,
    axis: DemographicAxis,
) -> Distribution {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut missing = 0;
    for a in annotations {
        match axis.bucket(a) {
            Some(b) => *counts.entry(b).or_insert(0) += 1,
            None => missing += 1,
        }
    }
    let total: usize = counts.values().sum();
    Distribution {
        axis,
        buckets: counts
            .into_iter()
            .map(|(b, count)| {
                (
                    b,
                    BucketShare {
                        count,
                        share: count as f64 / total as f64,
                    },
                )
            })
            .collect(),
        missing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn user(id: &str, name: &str, age: Option<f64>, faces: Option<u32>, photo: bool) -> UserRecord {
        UserRecord {
            user_id: id.into(),
            handle: id.into(),
            display_name: name.into(),
            followers: 0,
            has_profile_photo: photo,
            face_count: faces,
            age_estimate: age,
            gender_estimate: Some(Gender::Female),
            account_kind: Default::default(),
        }
    }

    fn ann(race: RaceCategory) -> DemographicAnnotation {
        DemographicAnnotation {
            user_id: String::new(),
            country: None,
            continent: None,
            race,
            age: None,
            gender: None,
            eligible_youth: true,
        }
    }

    #[test]
    fn eligibility_examples() {
        let lex = ProperNounLexicon::default();
        assert!(!is_eligible_youth(
            &user("a", "Amina Diallo", Some(26.0), Some(1), true),
            &lex
        ));
        assert!(!is_eligible_youth(
            &user("b", "sunflower vibes", Some(20.0), Some(1), true),
            &lex
        ));
        assert!(!is_eligible_youth(&user("b", "Happy Vibes", None, None, false), &lex));
        assert!(is_eligible_youth(
            &user("c", "Amina Diallo", Some(25.0), Some(1), true),
            &lex
        ));
        assert!(!is_eligible_youth(
            &user("d", "Amina Diallo", Some(12.0), Some(1), true),
            &lex
        ));
        // No photo: age is unusable, the user stays eligible on the name alone.
        assert!(is_eligible_youth(&user("e", "Amina Diallo", None, None, false), &lex));
        let mut org = user("f", "Learn Forward", None, Some(0), true);
        org.account_kind = AccountKind::Organization;
        assert!(!is_eligible_youth(&org, &lex));
        assert_eq!(
            eligibility_filter(
                &[
                    user("x", "Amina Diallo", Some(25.0), Some(1), true),
                    user("y", "sunflower vibes", None, None, false)
                ],
                &lex
            ),
            ["x"]
        );
    }

    #[test]
    fn dictionary_names_override_stop_words() {
        let lex = ProperNounLexicon::default();
        assert!(!lex.has_proper_noun("Happy Vibes"));
        let lex = lex.with_names(["Happy"]);
        assert!(lex.has_proper_noun("Happy Vibes"));
        assert!(!lex.is_proper_noun("J"));
        assert!(!lex.is_proper_noun("jo"));
    }

    #[test]
    fn age_gender_need_single_face_photo() {
        let group = user("g", "Amina", Some(20.0), Some(3), true);
        assert_eq!(usable_gender(&group), None);
        assert_eq!(usable_age(&group), None);
        let solo = user("s", "Amina", Some(20.0), Some(1), true);
        assert_eq!(usable_gender(&solo), Some(Gender::Female));
        assert_eq!(usable_age(&solo), Some(20.0));
    }

    #[test]
    fn distribution_examples() {
        let d = demographic_distribution(
            &[
                ann(RaceCategory::White),
                ann(RaceCategory::White),
                ann(RaceCategory::Asian),
                ann(RaceCategory::African),
            ],
            DemographicAxis::Race,
        );
        assert_eq!(d.buckets["White"].share, 0.5);
        assert_eq!(d.buckets["Asian"].share, 0.25);
        assert_eq!(d.buckets["African"].share, 0.25);
        assert_eq!(d.missing, 0);

        let one = demographic_distribution(&[ann(RaceCategory::Inconclusive)], DemographicAxis::Race);
        assert_eq!(one.buckets["Inconclusive"].share, 1.0);

        let none = demographic_distribution(&vec![ann(RaceCategory::Asian); 3], DemographicAxis::Gender);
        assert!(none.buckets.is_empty());
        assert_eq!(none.missing, 3);
    }

    #[test]
    fn annotations_round_trip() {
        let model = NameModel::new(NgramClassifier::train([], &[2], 1.0).unwrap(), 0.6).unwrap();
        let users = vec![user("u1", "Amina Diallo", Some(19.0), Some(1), true)];
        let countries = BTreeMap::from([("u1".to_string(), "KE".to_string())]);
        let a = annotate_users(&users, &countries, &model, &ProperNounLexicon::default());
        assert_eq!(a[0].continent, Some(Continent::Africa));
        assert!(a[0].eligible_youth);
        let text = annotations_ndjson(&a);
        assert_eq!(
            text,
            "{\"user_id\":\"u1\",\"country\":\"KE\",\"continent\":\"africa\",\"race\":\"Inconclusive\",\
             \"age\":19.0,\"gender\":\"female\",\"eligible_youth\":true}\n"
        );
        assert_eq!(parse_annotations(&text).unwrap(), a);
    }

    proptest! {
        #[test]
        fn shares_sum_to_one(races in proptest::collection::vec(0usize..5, 1..200)) {
            let all = [
                RaceCategory::Asian, RaceCategory::Hispanic, RaceCategory::African,
                RaceCategory::White, RaceCategory::Inconclusive,
            ];
            let anns: Vec<_> = races.iter().map(|&r| ann(all[r])).collect();
            let d = demographic_distribution(&anns, DemographicAxis::Race);
            let s: f64 = d.buckets.values().map(|b| b.share).sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn eligibility_is_monotone(
            ages in proptest::collection::vec(proptest::option::of(10.0f64..40.0), 1..30),
            extra_age in proptest::option::of(10.0f64..40.0),
        ) {
            let lex = ProperNounLexicon::default();
            let users: Vec<_> = ages.iter().enumerate()
                .map(|(i, &a)| user(&format!("u{i}"), "Amina Diallo", a, Some(1), true)).collect();
            let before = eligibility_filter(&users, &lex);
            let mut more = users.clone();
            more.push(user("new", "Amina Diallo", extra_age, Some(1), true));
            let after = eligibility_filter(&more, &lex);
            prop_assert!(before.iter().all(|id| after.contains(id)));
        }

        #[test]
        fn posteriors_sum_to_one(name in "[a-zA-Z ]{0,20}") {
            let c = NgramClassifier::train(
                [("amina", "african"), ("kenji", "japanese"), ("maria", "hispanic"), ("emma", "white")],
                &NgramClassifier::DEFAULT_ORDERS,
                1.0,
            ).unwrap();
            let s: f64 = c.posterior(&name).values().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
