//! Tweet normalization: URLs, mentions, hashtags, emoji, punctuation, case
//! and stopwords, in that order.

use std::sync::OnceLock;

use regex::{Captures, Regex};

use crate::data::stopwords::is_stopword;
use crate::error::{Error, Result};

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S*").expect("valid regex"))
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").expect("valid regex"))
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#(\w+)").expect("valid regex"))
}

/// Splits a hashtag body on camel-case and letter/digit boundaries:
/// `ClimateChange2016` becomes `Climate Change 2016`, `SemST` becomes `Sem ST`.
pub fn segment_hashtag(body: &str) -> String {
    let chars: Vec<char> = body.chars().collect();
    let mut out = String::with_capacity(body.len() + 4);
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' {
            out.push(' ');
            continue;
        }
        if i > 0 {
            let prev = chars[i - 1];
            let next = chars.get(i + 1).copied();
            let boundary = (prev.is_lowercase() && c.is_uppercase())
                || (prev.is_alphabetic() && c.is_numeric())
                || (prev.is_numeric() && c.is_alphabetic())
                || (prev.is_uppercase()
                    && c.is_uppercase()
                    && next.is_some_and(char::is_lowercase));
            if boundary {
                out.push(' ');
            }
        }
        out.push(c);
    }
    out
}

/// Pictographs, dingbats, flags, variation selectors and joiners.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x2300..=0x23FF
        | 0x2B00..=0x2BFF
        | 0x2190..=0x21FF
        | 0xFE00..=0xFE0F
        | 0x200D
        | 0x20E3
        | 0xE0020..=0xE007F
        | 0x3030 | 0x303D | 0x3297 | 0x3299
        | 0x00A9 | 0x00AE | 0x2122)
}

fn strip_non_word(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect()
}

/// Runs the full pipeline and returns the surviving tokens. An empty result is
/// an input error; callers drop such examples and count them.
pub fn preprocess_tweet(raw: &str) -> Result<Vec<String>> {
    let tokens = normalize(raw);
    if tokens.is_empty() {
        return Err(Error::Input(format!(
            "tweet is empty after preprocessing: {raw:?}"
        )));
    }
    Ok(tokens)
}

/// Same pipeline as [`preprocess_tweet`] but returns an empty list instead of
/// an error.
pub fn normalize(raw: &str) -> Vec<String> {
    let s = url_re().replace_all(raw, " ");
    let s = mention_re().replace_all(&s, " ");
    let s = hashtag_re().replace_all(&s, |c: &Captures| format!(" {} ", segment_hashtag(&c[1])));
    let s: String = s.chars().filter(|&c| !is_emoji(c)).collect();
    let s = strip_non_word(&s);
    // lowercasing can introduce combining marks (e.g. U+0130), so filter again
    let s = strip_non_word(&s.to_lowercase());
    s.split_whitespace()
        .filter(|t| !is_stopword(t))
        .map(str::to_owned)
        .collect()
}
