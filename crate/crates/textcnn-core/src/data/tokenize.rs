use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Whitespace split, surrounding ASCII punctuation stripped, case kept.
/// Tokens that are pure punctuation disappear.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation()))
        .filter(|w| !w.is_empty())
        .map(ToString::to_string)
        .collect()
}
