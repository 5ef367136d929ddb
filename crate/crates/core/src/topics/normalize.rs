// SPDX-License-Identifier: Apache-2.0

//! Structural text normalization for tweets.
//!
//! Text is NFC-normalized and lowercased, URLs and `@mentions` are stripped
//! (but recorded), hashtags are split on case and letter/digit boundaries, and
//! the remainder is whitespace-tokenized with edge punctuation trimmed.
//! Re-normalizing the joined tokens of a result yields the same tokens.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedText {
    pub tokens: Vec<String>,
    /// Each hashtag's split words joined by a single space, in order of appearance.
    pub hashtag_expansions: Vec<String>,
    pub urls: Vec<String>,
    /// Mentioned handles, lowercased, without the leading `@`.
    pub mentions: Vec<String>,
    pub original: String,
}

impl NormalizedText {
    /// Tokens joined by single spaces; the form keyword matching runs against.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

fn is_url(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.contains("://") || lower.starts_with("www.")
}

fn lower_nfc(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase().nfc().collect()
}

/// Splits a hashtag body ("TeamSeas", "COP26", "UNYouth") into lowercase words.
pub fn split_hashtag(body: &str) -> Vec<String> {
    let chars: Vec<char> = body.chars().collect();
    let mut words = Vec::new();
    let mut current = String::new();

    let flush = |current: &mut String, words: &mut Vec<String>| {
        if !current.is_empty() {
            let word = lower_nfc(current);
            let word = trim_edges(&word);
            if !word.is_empty() {
                words.push(word.to_string());
            }
            current.clear();
        }
    };

    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            flush(&mut current, &mut words);
            continue;
        }
        if let Some(&prev) = current.chars().last().as_ref() {
            let next = chars.get(i + 1).copied();
            let boundary = (prev.is_lowercase() && c.is_uppercase())
                || (prev.is_alphabetic() && c.is_numeric())
                || (prev.is_numeric() && c.is_alphabetic())
                // "UNYouth": the last capital of a run starts the next word.
                || (prev.is_uppercase()
                    && c.is_uppercase()
                    && next.is_some_and(|n| n.is_lowercase()));
            if boundary {
                flush(&mut current, &mut words);
            }
        }
        current.push(c);
    }
    flush(&mut current, &mut words);
    words
}

fn trim_leading(token: &str) -> &str {
    token.trim_start_matches(|c: char| !(c.is_alphanumeric() || c == '#' || c == '@'))
}

fn trim_edges(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

pub fn normalize_text(raw: &str) -> NormalizedText {
    let nfc: String = raw.nfc().collect();
    let mut out = NormalizedText {
        tokens: Vec::new(),
        hashtag_expansions: Vec::new(),
        urls: Vec::new(),
        mentions: Vec::new(),
        original: raw.to_string(),
    };

    for piece in nfc.split_whitespace() {
        let trimmed = trim_leading(piece);
        if is_url(trimmed) {
            out.urls.push(piece.to_string());
            continue;
        }
        let piece = trimmed;
        if let Some(handle) = piece.strip_prefix('@') {
            let handle = trim_edges(handle);
            if !handle.is_empty() {
                out.mentions.push(lower_nfc(handle));
            }
            continue;
        }
        if piece.starts_with('#') {
            let words = split_hashtag(piece.trim_start_matches('#'));
            if !words.is_empty() {
                out.hashtag_expansions.push(words.join(" "));
                out.tokens.extend(words);
            }
            continue;
        }
        let lowered = lower_nfc(piece);
        let token = trim_edges(&lowered);
        if !token.is_empty() {
            out.tokens.push(token.to_string());
        }
    }
    out
}
