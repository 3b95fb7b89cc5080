//! JSONL corpora: one `{"id", "article", "summary"}` object per line.

use std::fs;
use std::path::Path;

use irlsum_core::ExamplePair;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::fsutil::atomic_write;

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    article: String,
    summary: String,
}

/// Parses corpus text. Blank lines are skipped; `\r\n` endings are accepted.
/// Errors carry the 1-based line number.
pub fn parse_jsonl(text: &str, path: &Path) -> Result<Vec<ExamplePair>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let corpus_err = |message: String| Error::Corpus {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: Record = serde_json::from_str(line).map_err(|e| corpus_err(e.to_string()))?;
        let pair = ExamplePair::from_text(rec.id, &rec.article, &rec.summary).map_err(|e| corpus_err(e.to_string()))?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn load_jsonl(path: &Path) -> Result<Vec<ExamplePair>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_jsonl(&text, path)
}

pub fn to_jsonl(pairs: &[ExamplePair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let rec = Record {
            id: p.id.clone(),
            article: p.raw_article.clone(),
            summary: p.raw_reference.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("string record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(path: &Path, pairs: &[ExamplePair]) -> Result<()> {
    atomic_write(path, to_jsonl(pairs).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<ExamplePair>> {
        parse_jsonl(text, Path::new("mem.jsonl"))
    }

    #[test]
    fn crlf_and_blank_lines() {
        let text = "{\"id\":\"a\",\"article\":\"One two.\",\"summary\":\"One.\"}\r\n\r\n{\"id\":\"b\",\"article\":\"x\",\"summary\":\"y\"}\n";
        let pairs = parse(text).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].article, ["one", "two", "."]);
        assert_eq!(pairs[1].id, "b");
    }

    #[test]
    fn errors_name_the_line() {
        let text = "{\"id\":\"a\",\"article\":\"x\",\"summary\":\"y\"}\n{\"id\":\"b\",\"article\":\"x\"}\n";
        let msg = parse(text).unwrap_err().to_string();
        assert!(msg.contains("line 2") && msg.contains("summary"), "{msg}");
        let msg = parse("not json\n").unwrap_err().to_string();
        assert!(msg.contains("line 1"), "{msg}");
        let msg = parse("{\"id\":\"a\",\"article\":\"  \",\"summary\":\"y\"}")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("line 1") && msg.contains("article"), "{msg}");
    }

    #[test]
    fn round_trip() {
        let pairs = vec![
            ExamplePair::from_text("p1", "Alice met \"Bob\" in Paris.", "Alice met Bob.").unwrap(),
            ExamplePair::from_text("p2", "Line\nbreaks stay.", "Breaks.").unwrap(),
        ];
        assert_eq!(parse(&to_jsonl(&pairs)).unwrap(), pairs);
    }
}
