//! `key = value` text used for optional config files.
//!
//! One pair per line, `#` starts a comment, blank lines are ignored.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KvError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key {key:?}")]
    Duplicate { line: usize, key: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}")]
    Value { key: String, value: String },
}

pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, KvError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(KvError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(KvError::Syntax { line });
        }
        if pairs.iter().any(|(k, _)| k == key) {
            return Err(KvError::Duplicate { line, key: key.to_string() });
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

pub(crate) fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, KvError> {
    value.parse().map_err(|_| KvError::Value { key: key.to_string(), value: value.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_comments_and_errors() {
        let pairs = parse_kv("# tsne\nperplexity = 30\n\niterations=500 # short\n").unwrap();
        assert_eq!(
            pairs,
            vec![("perplexity".to_string(), "30".to_string()), ("iterations".to_string(), "500".to_string())]
        );
        assert_eq!(parse_kv("a = 1\nnoequals"), Err(KvError::Syntax { line: 2 }));
        assert!(matches!(parse_kv("a=1\na=2"), Err(KvError::Duplicate { line: 2, .. })));
        assert_eq!(parse_kv(" = 3"), Err(KvError::Syntax { line: 1 }));
    }
}
