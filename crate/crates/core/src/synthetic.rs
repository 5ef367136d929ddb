// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic corpora and graphs.
//!
//! [`generate`] builds a small study corpus: four interaction groups, each
//! clustered around an organization account, five topic vocabularies, and
//! female authors who engage with the climate topic about four times as often
//! as male authors. [`random_graph`] builds large random interaction graphs
//! for timing.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{EdgeWeight, InteractionGraph, NodeId};
use crate::ingest::{AccountKind, Coordinates, Gender, NdjsonRecord, TweetRecord, UserRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticParams {
    pub users: usize,
    pub tweets: usize,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            users: 300,
            tweets: 2000,
            seed: 20,
        }
    }
}

pub struct Topic {
    pub keyword: &'static str,
    pub words: &'static [&'static str],
    pub hashtags: &'static [&'static str],
}

pub const TOPICS: [Topic; 5] = [
    Topic {
        keyword: "climate",
        words: &[
            "emissions",
            "warming",
            "carbon",
            "renewable",
            "strike",
            "planet",
            "fossil",
            "heatwave",
            "solar",
            "justice",
            "glaciers",
            "net-zero",
        ],
        hashtags: &["#ClimateAction", "#FridaysForFuture", "#ClimateStrike"],
    },
    Topic {
        keyword: "health",
        words: &[
            "vaccine",
            "clinic",
            "mental",
            "wellbeing",
            "doctors",
            "nurses",
            "care",
            "hospital",
            "malaria",
            "nutrition",
            "therapy",
            "access",
        ],
        hashtags: &["#GlobalHealth", "#MentalHealthMatters", "#UHC"],
    },
    Topic {
        keyword: "education",
        words: &[
            "school",
            "teachers",
            "classroom",
            "literacy",
            "scholarship",
            "students",
            "learning",
            "university",
            "girls",
            "exams",
            "curriculum",
            "tuition",
        ],
        hashtags: &["#EducationForAll", "#BackToSchool", "#LearningCrisis"],
    },
    Topic {
        keyword: "ocean",
        words: &[
            "plastic",
            "reef",
            "coral",
            "marine",
            "fisheries",
            "beach",
            "cleanup",
            "seas",
            "whales",
            "coastal",
            "pollution",
            "mangroves",
        ],
        hashtags: &["#TeamSeas", "#SaveOurOceans", "#OceanDecade"],
    },
    Topic {
        keyword: "food",
        words: &[
            "hunger",
            "farmers",
            "harvest",
            "crops",
            "famine",
            "meals",
            "agriculture",
            "waste",
            "rice",
            "markets",
            "drought",
            "seeds",
        ],
        hashtags: &["#ZeroHunger", "#FoodSecurity", "#FoodWaste"],
    },
];

/// Index of the topic female authors over-engage with.
pub const ENGINEERED_TOPIC: usize = 0;

const NOISE_WORDS: &[&str] = &[
    "lunch", "movie", "weekend", "game", "music", "coffee", "traffic", "birthday", "playlist", "sleepy",
];

const FILLER: &[&str] = &["today", "everyone", "really", "together", "now", "join"];

struct Anchor {
    user_id: &'static str,
    handle: &'static str,
    display_name: &'static str,
    topic: usize,
}

const ANCHORS: [Anchor; 4] = [
    Anchor {
        user_id: "org-climate",
        handle: "climatecoalition",
        display_name: "Youth Climate Coalition",
        topic: 0,
    },
    Anchor {
        user_id: "org-health",
        handle: "healthyouthnet",
        display_name: "Health Youth Network",
        topic: 1,
    },
    Anchor {
        user_id: "org-education",
        handle: "learnforward",
        display_name: "Learn Forward",
        topic: 2,
    },
    Anchor {
        user_id: "org-ocean",
        handle: "bluetide",
        display_name: "Blue Tide Collective",
        topic: 3,
    },
];

/// Given names and surnames per origin, with the label used for training.
struct NamePool {
    label: &'static str,
    given: &'static [&'static str],
    surnames: &'static [&'static str],
}

const NAME_POOLS: [NamePool; 5] = [
    NamePool {
        label: "East Asian",
        given: &["Kenji", "Yuki", "Wei", "Mei", "Jia", "Min", "Hiro", "Sora"],
        surnames: &["Tanaka", "Sato", "Wang", "Chen", "Nguyen", "Kim", "Suzuki", "Zhang"],
    },
    NamePool {
        label: "Indian",
        given: &["Priya", "Arjun", "Anika", "Rohan", "Kavya", "Vikram"],
        surnames: &["Patel", "Sharma", "Iyer", "Reddy", "Gupta", "Nair"],
    },
    NamePool {
        label: "Hispanic",
        given: &["Maria", "Jose", "Lucia", "Carlos", "Sofia", "Diego", "Camila", "Mateo"],
        surnames: &[
            "Garcia",
            "Rodriguez",
            "Martinez",
            "Hernandez",
            "Lopez",
            "Gonzalez",
            "Perez",
            "Ramirez",
        ],
    },
    NamePool {
        label: "Greater African",
        given: &["Amina", "Kwame", "Chidi", "Zainab", "Kofi", "Ngozi", "Tunde", "Wanjiru"],
        surnames: &[
            "Diallo", "Okafor", "Mensah", "Otieno", "Adeyemi", "Kamau", "Nwosu", "Boateng",
        ],
    },
    NamePool {
        label: "European",
        given: &["Emma", "Liam", "Olivia", "Noah", "Hannah", "Lukas", "Sophie", "Freya"],
        surnames: &[
            "Smith", "Johnson", "Muller", "Schmidt", "Jensen", "Brown", "Taylor", "Larsen",
        ],
    },
];

const HANDLE_ONLY_NAMES: &[&str] = &[
    "sunflower vibes",
    "climate kid",
    "just here",
    "ocean lover",
    "daily thoughts",
];

struct Place {
    country: &'static str,
    city: &'static str,
    /// Point inside the country's gazetteer box, if it has one.
    point: Option<(f64, f64)>,
}

const PLACES: [Place; 12] = [
    Place {
        country: "KE",
        city: "Nairobi",
        point: Some((-1.29, 36.82)),
    },
    Place {
        country: "NG",
        city: "Lagos",
        point: Some((6.52, 3.38)),
    },
    Place {
        country: "GH",
        city: "Accra",
        point: None,
    },
    Place {
        country: "US",
        city: "New York",
        point: None,
    },
    Place {
        country: "CA",
        city: "Toronto",
        point: None,
    },
    Place {
        country: "MX",
        city: "Mexico City",
        point: None,
    },
    Place {
        country: "BR",
        city: "Sao Paulo",
        point: None,
    },
    Place {
        country: "GB",
        city: "London",
        point: None,
    },
    Place {
        country: "DE",
        city: "Berlin",
        point: None,
    },
    Place {
        country: "IN",
        city: "Mumbai",
        point: None,
    },
    Place {
        country: "JP",
        city: "Tokyo",
        point: None,
    },
    Place {
        country: "AU",
        city: "Sydney",
        point: None,
    },
];

pub struct SyntheticCorpus {
    pub users: Vec<UserRecord>,
    pub tweets: Vec<TweetRecord>,
}

impl SyntheticCorpus {
    /// Stream keywords covering every topic.
    pub fn keywords() -> Vec<String> {
        TOPICS.iter().map(|t| t.keyword.to_string()).collect()
    }

    /// Handles of the organization accounts.
    pub fn anchor_handles() -> Vec<String> {
        ANCHORS.iter().map(|a| format!("@{}", a.handle)).collect()
    }
}

struct Author {
    user_id: String,
    group: usize,
    gender: Gender,
    home: usize,
}

fn topic_text(rng: &mut ChaCha8Rng, topic: usize) -> String {
    let t = &TOPICS[topic];
    let n = rng.gen_range(4..=7);
    let mut words: Vec<&str> = (0..n).map(|_| *t.words.choose(rng).expect("non-empty")).collect();
    let at = rng.gen_range(0..=words.len());
    words.insert(at, t.keyword);
    if rng.gen_bool(0.2) {
        words.push(FILLER.choose(rng).expect("non-empty"));
    }
    if rng.gen_bool(0.4) {
        words.push(t.hashtags.choose(rng).expect("non-empty"));
    }
    let mut s = words.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s
}

fn noise_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..=6);
    (0..n)
        .map(|_| *NOISE_WORDS.choose(rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Topic choice for an author's own tweets.
fn preferred_topic(rng: &mut ChaCha8Rng, gender: Gender) -> usize {
    let climate = match gender {
        Gender::Female => 0.4,
        Gender::Male => 0.1,
        Gender::Unknown => 0.2,
    };
    if rng.gen_bool(climate) {
        ENGINEERED_TOPIC
    } else {
        rng.gen_range(1..TOPICS.len())
    }
}

fn engagement(rng: &mut ChaCha8Rng) -> (u64, u64, u64) {
    if rng.gen_bool(0.1) {
        (0, 0, 0)
    } else {
        (rng.gen_range(1..=25), rng.gen_range(0..=6), rng.gen_range(0..=3))
    }
}

/// Generates the study corpus. Output depends only on `params`.
pub fn generate(params: SyntheticParams) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut users = Vec::with_capacity(params.users);
    for a in &ANCHORS {
        users.push(UserRecord {
            user_id: a.user_id.to_string(),
            handle: a.handle.to_string(),
            display_name: a.display_name.to_string(),
            followers: rng.gen_range(20_000..200_000),
            has_profile_photo: true,
            face_count: Some(0),
            age_estimate: None,
            gender_estimate: None,
            account_kind: AccountKind::Organization,
        });
    }

    let individuals = params.users.saturating_sub(ANCHORS.len());
    let mut authors: Vec<Author> = Vec::with_capacity(individuals);
    for i in 0..individuals {
        let user_id = format!("u{:04}", i + 1);
        let gender = if rng.gen_bool(0.5) {
            Gender::Female
        } else {
            Gender::Male
        };
        let pool = &NAME_POOLS[rng.gen_range(0..NAME_POOLS.len())];
        let display_name = if rng.gen_bool(0.05) {
            HANDLE_ONLY_NAMES.choose(&mut rng).expect("non-empty").to_string()
        } else {
            format!(
                "{} {}",
                pool.given.choose(&mut rng).expect("non-empty"),
                pool.surnames.choose(&mut rng).expect("non-empty")
            )
        };
        let handle = format!("{}{}", display_name.replace(' ', "_").to_lowercase(), i + 1);
        let has_photo = rng.gen_bool(0.9);
        let face_count = if !has_photo {
            None
        } else {
            Some(match rng.gen_range(0..10) {
                0 => 0,
                1 => 2,
                _ => 1,
            })
        };
        let (age, g) = if face_count == Some(1) {
            (Some(rng.gen_range(14..=29) as f64), Some(gender))
        } else {
            (None, None)
        };
        users.push(UserRecord {
            user_id: user_id.clone(),
            handle,
            display_name,
            followers: rng.gen_range(10..3_000),
            has_profile_photo: has_photo,
            face_count,
            age_estimate: age,
            gender_estimate: g,
            account_kind: AccountKind::Individual,
        });
        authors.push(Author {
            user_id,
            group: i % ANCHORS.len(),
            gender,
            home: rng.gen_range(0..PLACES.len()),
        });
    }

    let base_time: i64 = 1_600_000_000;
    let mut tweets: Vec<TweetRecord> = Vec::with_capacity(params.tweets);
    // Original tweets per group, as (tweet index, topic).
    let mut anchor_posts: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ANCHORS.len()];
    let mut member_posts: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ANCHORS.len()];
    let anchor_share = (params.tweets / 10).max(ANCHORS.len());

    let push = |tweets: &mut Vec<TweetRecord>, rng: &mut ChaCha8Rng, author: &str, text: String| -> usize {
        let i = tweets.len();
        let (likes, retweets, replies) = engagement(rng);
        tweets.push(TweetRecord {
            tweet_id: format!("t{:05}", i + 1),
            author_id: author.to_string(),
            text,
            created_at: base_time + i as i64 * 1_200 + rng.gen_range(0..600),
            likes,
            retweets,
            replies,
            mentions: Vec::new(),
            reply_to: None,
            retweet_of: None,
            coordinates: None,
            place_name: None,
        });
        i
    };

    for k in 0..anchor_share {
        let g = k % ANCHORS.len();
        let text = topic_text(&mut rng, ANCHORS[g].topic);
        let i = push(&mut tweets, &mut rng, ANCHORS[g].user_id, text);
        anchor_posts[g].push((i, ANCHORS[g].topic));
    }

    while tweets.len() < params.tweets && !authors.is_empty() {
        let a = &authors[rng.gen_range(0..authors.len())];
        let roll: f64 = rng.gen();
        let group = if rng.gen_bool(0.05) {
            rng.gen_range(0..ANCHORS.len())
        } else {
            a.group
        };
        let i = if roll < 0.45 {
            let text = if rng.gen_bool(0.06) {
                noise_text(&mut rng)
            } else {
                let topic = preferred_topic(&mut rng, a.gender);
                topic_text(&mut rng, topic)
            };
            let i = push(&mut tweets, &mut rng, &a.user_id, text);
            member_posts[a.group].push((i, 0));
            i
        } else if roll < 0.8 {
            let from_members = !member_posts[group].is_empty() && rng.gen_bool(0.25);
            let pool = if from_members {
                &member_posts[group]
            } else {
                &anchor_posts[group]
            };
            let (target, _) = *pool.choose(&mut rng).expect("anchors always post");
            let original = &tweets[target];
            let handle = users
                .iter()
                .find(|u| u.user_id == original.author_id)
                .map(|u| u.handle.clone())
                .expect("author exists");
            let text = format!("RT @{handle}: {}", original.text);
            let target_id = original.tweet_id.clone();
            let target_author = original.author_id.clone();
            let i = push(&mut tweets, &mut rng, &a.user_id, text);
            tweets[i].retweet_of = Some(target_id);
            tweets[i].mentions = vec![target_author];
            i
        } else {
            let (target, _) = *anchor_posts[group].choose(&mut rng).expect("anchors always post");
            let anchor = &ANCHORS[group];
            let topic = preferred_topic(&mut rng, a.gender);
            let text = format!("@{} {}", anchor.handle, topic_text(&mut rng, topic));
            let target_id = tweets[target].tweet_id.clone();
            let i = push(&mut tweets, &mut rng, &a.user_id, text);
            tweets[i].reply_to = Some(target_id);
            tweets[i].mentions = vec![anchor.user_id.to_string()];
            i
        };
        let place = &PLACES[a.home];
        match (place.point, rng.gen_range(0..10)) {
            (Some((lat, lon)), 0..=2) => {
                tweets[i].coordinates = Some(Coordinates {
                    lat: lat + rng.gen_range(-0.05..0.05),
                    lon: lon + rng.gen_range(-0.05..0.05),
                })
            }
            (_, 3..=6) => tweets[i].place_name = Some(place.city.to_string()),
            _ => {}
        }
    }

    SyntheticCorpus { users, tweets }
}

/// Gazetteer covering every fixture place.
pub fn gazetteer_csv() -> String {
    let mut s = String::from("kind,name_or_coords,country\n");
    s.push_str("box,-4.7 33.9 5.0 41.9,KE\n");
    s.push_str("box,4.2 2.7 13.9 14.7,NG\n");
    for p in &PLACES {
        s.push_str(&format!("place,{},{}\n", p.city, p.country));
    }
    s
}

/// Voter-style surname lists: `(file name, name,category CSV)`. Each list
/// holds half of its pool's surnames so the classifier handles the rest.
pub fn name_list_csvs() -> Vec<(&'static str, String)> {
    [
        ("latino_voters.csv", 2usize, "latino_voters"),
        ("black_voters.csv", 3, "black_voters"),
    ]
    .into_iter()
    .map(|(file, pool, category)| {
        let mut s = String::from("name,category\n");
        for n in NAME_POOLS[pool]
            .surnames
            .iter()
            .take(NAME_POOLS[pool].surnames.len() / 2)
        {
            s.push_str(&format!("{n},{category}\n"));
        }
        (file, s)
    })
    .collect()
}

/// Classifier training names: every pool token under its pool label.
pub fn name_training_csv() -> String {
    let mut s = String::from("name,category\n");
    for p in &NAME_POOLS {
        for n in p.given.iter().chain(p.surnames) {
            s.push_str(&format!("{n},{}\n", p.label));
        }
    }
    s
}

pub const TWEETS_FILE: &str = "tweets.ndjson";
pub const USERS_FILE: &str = "users.ndjson";
pub const GAZETTEER_FILE: &str = "gazetteer.csv";
pub const TRAINING_FILE: &str = "name_training.csv";

fn ndjson<T: NdjsonRecord>(records: &[T]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_json_line());
        s.push('\n');
    }
    s
}

/// Writes the corpus and its data files into `dir`; returns written paths.
pub fn write_fixture(corpus: &SyntheticCorpus, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(String, String)> = vec![
        (TWEETS_FILE.to_string(), ndjson(&corpus.tweets)),
        (USERS_FILE.to_string(), ndjson(&corpus.users)),
        (GAZETTEER_FILE.to_string(), gazetteer_csv()),
        (TRAINING_FILE.to_string(), name_training_csv()),
    ];
    files.extend(name_list_csvs().into_iter().map(|(f, s)| (f.to_string(), s)));
    let mut out = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)?;
        out.push(p);
    }
    Ok(out)
}

/// Random directed graph with `n` nodes and exactly `m` distinct edges drawn
/// uniformly (self-loops and repeated pairs are redrawn). Node names are
/// zero-padded so ids follow draw order.
pub fn random_graph(n: usize, m: usize, seed: u64) -> InteractionGraph {
    assert!(n >= 2, "need at least two nodes");
    assert!(m <= n * (n - 1), "more edges than ordered pairs");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n.to_string().len();
    let names: Vec<String> = (0..n).map(|i| format!("n{i:0width$}")).collect();
    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let s = rng.gen_range(0..n) as NodeId;
        let d = rng.gen_range(0..n) as NodeId;
        if s == d || !seen.insert((s, d)) {
            continue;
        }
        let w = if rng.gen_bool(0.8) {
            EdgeWeight {
                retweets: 1,
                replies: 0,
            }
        } else {
            EdgeWeight {
                retweets: 0,
                replies: 1,
            }
        };
        edges.push((s, d, w));
    }
    InteractionGraph::from_indexed_edges(names, edges)
}
