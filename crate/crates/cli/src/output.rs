//! Deterministic output formatting: a small JSON writer with floats pinned
//! to 17 significant digits, plus the header block for plot-data files.
//!
//! Identical configurations must produce byte-identical JSON on stdout, so
//! timestamps only go into non-JSON file headers.

use std::fmt::Write as _;

/// JSON value with deterministic rendering.
pub enum J {
    Num(f64),
    Int(i64),
    Str(String),
    Bool(bool),
    Arr(Vec<J>),
    Obj(Vec<(&'static str, J)>),
}

/// 17 significant digits; infinities become strings since JSON has no
/// numeric spelling for them.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "\"nan\"".into()
    } else if x > 0.0 {
        "\"inf\"".into()
    } else {
        "\"-inf\"".into()
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

impl J {
    pub fn render(&self) -> String {
        match self {
            J::Num(x) => fmt_f64(*x),
            J::Int(i) => i.to_string(),
            J::Str(s) => format!("\"{}\"", escape(s)),
            J::Bool(b) => b.to_string(),
            J::Arr(items) => {
                let inner: Vec<String> = items.iter().map(J::render).collect();
                format!("[{}]", inner.join(","))
            }
            J::Obj(fields) => {
                let inner: Vec<String> = fields
                    .iter()
                    .map(|(k, v)| format!("\"{}\":{}", escape(k), v.render()))
                    .collect();
                format!("{{{}}}", inner.join(","))
            }
        }
    }
}

pub fn obj(fields: Vec<(&'static str, J)>) -> J {
    J::Obj(fields)
}

/// FNV-1a over the rendered configuration; printed into file headers so a
/// data file can be traced back to the exact run settings.
pub fn config_hash(config_json: &str) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for b in config_json.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Comment header for csv / gnuplot data files.
pub fn file_header(comment: char, config_json: &str) -> String {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "{comment} keyrate v{}\n{comment} config: {config_json}\n{comment} config-hash: {:016x}\n{comment} timestamp: {timestamp}\n",
        env!("CARGO_PKG_VERSION"),
        config_hash(config_json),
    )
}

/// Full stdout payload: version, command, config echo, results.
pub fn emit(command: &str, config: J, results: J) -> String {
    let doc = J::Obj(vec![
        ("version", J::Str(env!("CARGO_PKG_VERSION").into())),
        ("command", J::Str(command.into())),
        ("config", config),
        ("results", results),
    ]);
    doc.render()
}
