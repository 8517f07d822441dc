//! Stanford Sentiment Treebank trees, one PTB-style bracketed tree per line.
//!
//! Only the root score is used. Scores collapse to three classes:
//! 0–1 negative, 2 neutral, 3–4 positive.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Dataset, Sentence, Split};
use crate::{Error, Result};

pub const SST_CLASSES: [&str; 3] = ["negative", "neutral", "positive"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SstTree {
    Node { label: String, children: Vec<SstTree> },
    Leaf(String),
}

impl SstTree {
    pub fn label(&self) -> Option<&str> {
        match self {
            SstTree::Node { label, .. } => Some(label),
            SstTree::Leaf(_) => None,
        }
    }

    /// Leaves in order.
    pub fn leaves(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<String>) {
        match self {
            SstTree::Leaf(w) => out.push(w.clone()),
            SstTree::Node { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }
}

/// Maps a 0..=4 sentiment score to a class index into [`SST_CLASSES`].
pub fn relabel(score: u8) -> Option<usize> {
    match score {
        0 | 1 => Some(0),
        2 => Some(1),
        3 | 4 => Some(2),
        _ => None,
    }
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Word(&'a str),
}

fn lex(s: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(st) = start.take() {
                tokens.push(Token::Word(&s[st..i]));
            }
            match c {
                '(' => tokens.push(Token::Open),
                ')' => tokens.push(Token::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        tokens.push(Token::Word(&s[st..]));
    }
    tokens
}

pub fn parse_tree(s: &str) -> core::result::Result<SstTree, String> {
    let tokens = lex(s);
    let mut pos = 0;
    let tree = parse_node(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err("trailing input after tree".to_string());
    }
    Ok(tree)
}

fn parse_node(tokens: &[Token<'_>], pos: &mut usize) -> core::result::Result<SstTree, String> {
    match tokens.get(*pos) {
        Some(Token::Open) => *pos += 1,
        Some(Token::Word(w)) => {
            *pos += 1;
            return Ok(SstTree::Leaf(w.to_string()));
        }
        Some(Token::Close) => return Err("unbalanced parentheses: unexpected ')'".to_string()),
        None => return Err("unbalanced parentheses: unexpected end of input".to_string()),
    }
    let label = match tokens.get(*pos) {
        Some(Token::Word(w)) => {
            *pos += 1;
            w.to_string()
        }
        _ => return Err("node without a label".to_string()),
    };
    let mut children = Vec::new();
    loop {
        match tokens.get(*pos) {
            Some(Token::Close) => {
                *pos += 1;
                break;
            }
            Some(_) => children.push(parse_node(tokens, pos)?),
            None => return Err("unbalanced parentheses: missing ')'".to_string()),
        }
    }
    if children.is_empty() {
        return Err(alloc::format!("node {label:?} has no children"));
    }
    Ok(SstTree::Node { label, children })
}

pub fn parse_sst(text: &str, split: Split) -> Result<Dataset> {
    let mut sentences = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tree = parse_tree(line).map_err(|m| Error::parse(line_no, m))?;
        let SstTree::Node { label, .. } = &tree else {
            return Err(Error::parse(line_no, "expected a bracketed tree"));
        };
        let label = label
            .parse::<u8>()
            .ok()
            .and_then(relabel)
            .ok_or_else(|| Error::parse(line_no, alloc::format!("root score {label:?} outside 0..4")))?;
        sentences.push(Sentence {
            id: sentences.len(),
            tokens: tree.leaves(),
            label,
            split,
        });
    }
    if sentences.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    Dataset::new("SST", SST_CLASSES.iter().map(|c| c.to_string()).collect(), sentences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(line: &str) -> Sentence {
        parse_sst(line, Split::Train).unwrap().sentences.remove(0)
    }

    #[test]
    fn relabel_examples() {
        let s = one("(3 (2 good) (2 movie))");
        assert_eq!(s.tokens, ["good", "movie"]);
        assert_eq!(SST_CLASSES[s.label], "positive");
        assert_eq!(SST_CLASSES[one("(2 (2 it) (2 is))").label], "neutral");
        assert_eq!(SST_CLASSES[one("(0 (1 bad) (2 film))").label], "negative");
    }

    #[test]
    fn nested_leaves_in_order() {
        let s = one("(4 (2 (2 A) (3 (3 truly) (4 great))) (2 .))");
        assert_eq!(s.tokens, ["A", "truly", "great", "."]);
    }

    #[test]
    fn unbalanced_is_a_parse_error() {
        for bad in ["(3 (2 good) (2 movie)", "(3 (2 good)) (2 movie))", "(3 )"] {
            assert!(matches!(parse_sst(bad, Split::Train), Err(Error::Parse { line: 1, .. })), "{bad}");
        }
    }

    #[test]
    fn root_score_out_of_range() {
        assert!(matches!(parse_sst("(5 (2 x))", Split::Train), Err(Error::Parse { .. })));
        assert!(matches!(parse_sst("(x (2 x))", Split::Train), Err(Error::Parse { .. })));
    }

    #[test]
    fn relabel_is_total_and_surjective() {
        let mut hit = [false; 3];
        for s in 0..=4 {
            hit[relabel(s).unwrap()] = true;
        }
        assert!(hit.iter().all(|&h| h));
        assert_eq!(relabel(5), None);
    }
}
