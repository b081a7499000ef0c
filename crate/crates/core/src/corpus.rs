//! TREC-style collection, topic, qrels and run file handling.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::text::decode_utf8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub docno: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub number: u32,
    pub title: String,
}

/// Relevance judgments keyed by topic, then docno. Grade 0 means judged non-relevant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<u32, HashMap<String, i32>>,
}

impl Qrels {
    /// Adds one judgment. A second, different grade for the same pair is an error.
    pub fn insert(&mut self, topic: u32, docno: impl Into<String>, grade: i32) -> Result<()> {
        let docno = docno.into();
        let per_topic = self.judgments.entry(topic).or_default();
        match per_topic.get(&docno) {
            Some(&old) if old != grade => Err(Error::Precondition(format!(
                "conflicting grades {old} and {grade} for topic {topic}, document {docno}"
            ))),
            _ => {
                per_topic.insert(docno, grade);
                Ok(())
            }
        }
    }

    pub fn grade(&self, topic: u32, docno: &str) -> Option<i32> {
        self.judgments.get(&topic)?.get(docno).copied()
    }

    pub fn is_relevant(&self, topic: u32, docno: &str) -> bool {
        self.grade(topic, docno).is_some_and(|g| g > 0)
    }

    pub fn contains_topic(&self, topic: u32) -> bool {
        self.judgments.contains_key(&topic)
    }

    pub fn relevant_count(&self, topic: u32) -> usize {
        self.judgments
            .get(&topic)
            .map_or(0, |docs| docs.values().filter(|&&g| g > 0).count())
    }

    pub fn topics(&self) -> impl Iterator<Item = u32> + '_ {
        self.judgments.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One line of a run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub topic: u32,
    pub docno: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

// ---------------------------------------------------------------------------
// SGML-ish scanning

#[derive(Debug, PartialEq)]
enum Piece<'a> {
    Open(String),
    Close(String),
    Text(&'a str),
}

/// Splits `text` into tags and the text between them. Tag names are lowercased;
/// attributes are dropped. Returns the byte offset of an unterminated `<`.
fn scan_markup(text: &str) -> std::result::Result<Vec<(usize, Piece<'_>)>, usize> {
    let mut pieces = Vec::new();
    let mut rest = 0;
    while let Some(lt) = text[rest..].find('<') {
        let start = rest + lt;
        if start > rest {
            pieces.push((rest, Piece::Text(&text[rest..start])));
        }
        let gt = text[start..].find('>').ok_or(start)? + start;
        let inner = text[start + 1..gt].trim();
        let (closing, name) = match inner.strip_prefix('/') {
            Some(n) => (true, n),
            None => (false, inner),
        };
        let name = name.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
        pieces.push((start, if closing { Piece::Close(name) } else { Piece::Open(name) }));
        rest = gt + 1;
    }
    if rest < text.len() {
        pieces.push((rest, Piece::Text(&text[rest..])));
    }
    Ok(pieces)
}

fn line_at(text: &str, offset: usize, first_line: usize) -> usize {
    first_line + text[..offset].matches('\n').count()
}

fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let hay = haystack.as_bytes();
    let needle = needle.as_bytes();
    if needle.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - needle.len()).find(|&i| hay[i..i + needle.len()].eq_ignore_ascii_case(needle))
}

// ---------------------------------------------------------------------------
// Documents

/// Streaming reader over a TREC collection: holds at most one document's
/// markup in memory at a time.
pub struct TrecDocReader<R> {
    reader: R,
    line_no: usize,
    /// Unconsumed remainder of the current line.
    pending: String,
    seen: HashSet<String>,
    done: bool,
}

impl<R: BufRead> TrecDocReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            line_no: 0,
            pending: String::new(),
            seen: HashSet::new(),
            done: false,
        }
    }

    fn next_line(&mut self) -> Result<bool> {
        let mut buf = Vec::new();
        if self.reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(false);
        }
        self.line_no += 1;
        let line = std::str::from_utf8(&buf).map_err(|e| {
            Error::parse(
                self.line_no,
                format!("invalid UTF-8 at byte {} of the line", e.valid_up_to()),
            )
        })?;
        self.pending = line.to_owned();
        Ok(true)
    }

    fn read_document(&mut self) -> Result<Option<Document>> {
        // Find the next <DOC>.
        let start_line = loop {
            if let Some(at) = find_ascii_ci(&self.pending, "<doc>") {
                self.pending.drain(..at + "<doc>".len());
                break self.line_no;
            }
            if !self.next_line()? {
                return Ok(None);
            }
        };
        // Collect everything up to </DOC>.
        let mut markup = String::new();
        loop {
            if let Some(at) = find_ascii_ci(&self.pending, "</doc>") {
                let inner = &self.pending[..at];
                if find_ascii_ci(inner, "<doc>").is_some() {
                    return Err(Error::parse(start_line, "<DOC> opened before previous </DOC>"));
                }
                markup.push_str(inner);
                self.pending.drain(..at + "</doc>".len());
                break;
            }
            if find_ascii_ci(&self.pending, "<doc>").is_some() {
                return Err(Error::parse(start_line, "<DOC> opened before previous </DOC>"));
            }
            markup.push_str(&self.pending);
            if !self.next_line()? {
                return Err(Error::parse(start_line, "unclosed <DOC>"));
            }
        }
        let doc = parse_doc_markup(&markup, start_line)?;
        if !self.seen.insert(doc.docno.clone()) {
            return Err(Error::DuplicateDocno(doc.docno));
        }
        Ok(Some(doc))
    }
}

impl<R: BufRead> Iterator for TrecDocReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_document() {
            Ok(Some(doc)) => Some(Ok(doc)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn parse_doc_markup(markup: &str, start_line: usize) -> Result<Document> {
    let pieces =
        scan_markup(markup).map_err(|off| Error::parse(line_at(markup, off, start_line), "unterminated tag"))?;
    let mut docno: Option<String> = None;
    let mut in_docno = false;
    let mut body_parts: Vec<&str> = Vec::new();
    for (_, piece) in &pieces {
        match piece {
            Piece::Open(name) if name == "docno" => in_docno = true,
            Piece::Close(name) if name == "docno" => in_docno = false,
            Piece::Text(t) if in_docno => {
                let trimmed = t.trim();
                if !trimmed.is_empty() {
                    docno.get_or_insert_with(String::new).push_str(trimmed);
                }
            }
            Piece::Text(t) => {
                let trimmed = t.trim();
                if !trimmed.is_empty() {
                    body_parts.push(trimmed);
                }
            }
            _ => {}
        }
    }
    let docno = docno.ok_or_else(|| Error::parse(start_line, "document without <DOCNO>"))?;
    Ok(Document {
        docno,
        body: body_parts.join("\n"),
    })
}

/// Reads every document of a collection. Bodies are the text of all elements
/// other than DOCNO, in document order.
pub fn parse_trec_docs<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    TrecDocReader::new(reader).collect()
}

// ---------------------------------------------------------------------------
// Topics

/// Parses `<top>` blocks, keeping only the number and title.
pub fn parse_topics<R: BufRead>(mut reader: R) -> Result<Vec<Topic>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = decode_utf8(&bytes)?;
    let pieces = scan_markup(text).map_err(|off| Error::parse(line_at(text, off, 1), "unterminated tag"))?;

    #[derive(PartialEq)]
    enum Field {
        None,
        Num,
        Title,
    }

    let mut topics = Vec::new();
    let mut seen = HashSet::new();
    let mut open: Option<usize> = None;
    let mut field = Field::None;
    let mut num_text = String::new();
    let mut title = String::new();

    for (offset, piece) in pieces {
        match piece {
            Piece::Open(name) if name == "top" => {
                if let Some(start) = open {
                    return Err(Error::parse(line_at(text, start, 1), "unclosed <top>"));
                }
                open = Some(offset);
                num_text.clear();
                title.clear();
                field = Field::None;
            }
            Piece::Close(name) if name == "top" => {
                let start = open
                    .take()
                    .ok_or_else(|| Error::parse(line_at(text, offset, 1), "</top> without <top>"))?;
                let line = line_at(text, start, 1);
                let number = parse_topic_number(&num_text)
                    .ok_or_else(|| Error::parse(line, format!("non-numeric topic number {:?}", num_text.trim())))?;
                let title = title.split_whitespace().collect::<Vec<_>>().join(" ");
                if title.is_empty() {
                    return Err(Error::parse(line, format!("topic {number} has an empty title")));
                }
                if !seen.insert(number) {
                    return Err(Error::parse(line, format!("duplicate topic number {number}")));
                }
                topics.push(Topic { number, title });
                field = Field::None;
            }
            Piece::Open(name) if open.is_some() => {
                field = match name.as_str() {
                    "num" => Field::Num,
                    "title" => Field::Title,
                    _ => Field::None,
                };
            }
            Piece::Close(_) => field = Field::None,
            Piece::Text(t) => match field {
                Field::Num => num_text.push_str(t),
                Field::Title => {
                    title.push(' ');
                    title.push_str(t);
                }
                Field::None => {}
            },
            Piece::Open(_) => {}
        }
    }
    if let Some(start) = open {
        return Err(Error::parse(line_at(text, start, 1), "unclosed <top>"));
    }
    Ok(topics)
}

fn parse_topic_number(raw: &str) -> Option<u32> {
    let raw = raw.trim();
    let raw = raw
        .strip_prefix("Number:")
        .or_else(|| raw.strip_prefix("number:"))
        .unwrap_or(raw)
        .trim();
    raw.parse().ok()
}

/// Writes topics back in TREC markup.
pub fn write_topics<W: Write>(topics: &[Topic], mut sink: W) -> Result<()> {
    for t in topics {
        writeln!(
            sink,
            "<top>\n<num>{}</num>\n<title>{}</title>\n</top>",
            t.number, t.title
        )?;
    }
    sink.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Qrels and runs

/// Parses `topic iter docno rel` lines; the iteration column is ignored.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if cols.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let topic = cols[0]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad topic {:?}", cols[0])))?;
        let grade = cols[3]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad relevance grade {:?}", cols[3])))?;
        qrels
            .insert(topic, cols[2], grade)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
    }
    Ok(qrels)
}

/// Checks that ranks run 1..n within each topic block and scores never increase.
pub fn validate_run(entries: &[RunEntry]) -> Result<()> {
    let mut finished: HashSet<u32> = HashSet::new();
    let mut prev: Option<&RunEntry> = None;
    for e in entries {
        match prev {
            Some(p) if p.topic == e.topic => {
                if e.rank != p.rank + 1 {
                    return Err(Error::Precondition(format!(
                        "topic {}: rank {} follows rank {}",
                        e.topic, e.rank, p.rank
                    )));
                }
                if e.score > p.score {
                    return Err(Error::Precondition(format!(
                        "topic {}: score rises at rank {}",
                        e.topic, e.rank
                    )));
                }
            }
            _ => {
                if let Some(p) = prev {
                    finished.insert(p.topic);
                }
                if finished.contains(&e.topic) {
                    return Err(Error::Precondition(format!(
                        "topic {} appears in two separate blocks",
                        e.topic
                    )));
                }
                if e.rank != 1 {
                    return Err(Error::Precondition(format!(
                        "topic {} starts at rank {}",
                        e.topic, e.rank
                    )));
                }
            }
        }
        prev = Some(e);
    }
    Ok(())
}

/// Formats a score with at least four decimals and enough digits to read it back exactly.
pub fn format_score(score: f64) -> String {
    let mut s = format!("{score}");
    let decimals = match s.find('.') {
        Some(dot) => s.len() - dot - 1,
        None => {
            s.push('.');
            0
        }
    };
    for _ in decimals..4 {
        s.push('0');
    }
    s
}

/// Writes `topic Q0 docno rank score tag` lines.
pub fn write_run<W: Write>(entries: &[RunEntry], mut sink: W) -> Result<()> {
    validate_run(entries)?;
    for e in entries {
        writeln!(
            sink,
            "{} Q0 {} {} {} {}",
            e.topic,
            e.docno,
            e.rank,
            format_score(e.score),
            e.tag
        )?;
    }
    sink.flush()?;
    Ok(())
}

pub fn parse_run<R: BufRead>(reader: R) -> Result<Vec<RunEntry>> {
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if cols.len() != 6 {
            return Err(Error::parse(
                line_no,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        }
        let bad = |what: &str, v: &str| Error::parse(line_no, format!("bad {what} {v:?}"));
        entries.push(RunEntry {
            topic: cols[0].parse().map_err(|_| bad("topic", cols[0]))?,
            docno: cols[2].to_owned(),
            rank: cols[3].parse().map_err(|_| bad("rank", cols[3]))?,
            score: cols[4].parse().map_err(|_| bad("score", cols[4]))?,
            tag: cols[5].to_owned(),
        });
    }
    Ok(entries)
}
