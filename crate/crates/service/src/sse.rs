//! Incremental decoder for `text/event-stream` bodies.
//!
//! Only the subset the service emits is handled: `event:`, `data:` and
//! comment lines, frames separated by a blank line. Keep-alive comments are
//! surfaced as [`SseItem::Comment`] so clients can observe them.

/// One decoded item from the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SseItem {
    Event { event: String, data: String },
    Comment(String),
}

#[derive(Debug, Default)]
pub struct SseDecoder {
    buffer: Vec<u8>,
    event: Option<String>,
    data: Vec<String>,
}

impl SseDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds raw bytes; returns every item completed by them.
    ///
    /// Chunks may split anywhere, including inside a UTF-8 sequence, as long
    /// as the full stream is valid UTF-8.
    pub fn push(&mut self, chunk: &[u8]) -> Vec<SseItem> {
        self.buffer.extend_from_slice(chunk);
        let mut items = Vec::new();
        while let Some(pos) = self.buffer.iter().position(|&b| b == b'\n') {
            let mut raw: Vec<u8> = self.buffer.drain(..=pos).collect();
            raw.pop();
            if raw.last() == Some(&b'\r') {
                raw.pop();
            }
            self.line(&String::from_utf8_lossy(&raw), &mut items);
        }
        items
    }

    fn line(&mut self, line: &str, items: &mut Vec<SseItem>) {
        if line.is_empty() {
            if !self.data.is_empty() || self.event.is_some() {
                items.push(SseItem::Event {
                    event: self.event.take().unwrap_or_else(|| "message".to_owned()),
                    data: self.data.join("\n"),
                });
                self.data.clear();
            }
            return;
        }
        if let Some(comment) = line.strip_prefix(':') {
            items.push(SseItem::Comment(comment.trim_start().to_owned()));
            return;
        }
        let (field, value) = match line.split_once(':') {
            Some((f, v)) => (f, v.strip_prefix(' ').unwrap_or(v)),
            None => (line, ""),
        };
        match field {
            "event" => self.event = Some(value.to_owned()),
            "data" => self.data.push(value.to_owned()),
            _ => {}
        }
    }
}
