//! Plain-text sample files.
//!
//! ```text
//! nsf <rank> <dim1> [<dim2> ...] <channels>
//! # optional comment lines
//! <v1> <v2> ... <v_channels>
//! ...
//! ```
//!
//! Samples follow in row-major order, one per line. Numbers are written as
//! the shortest decimal string that parses back to the same `f64`, and
//! integer literals are read exactly. Fragmented signals are rank 2
//! (`rows x fragments`) and carry a `# fragments=<s>` comment.
//! Filter banks are rank 3 (`c x m x n`) with one channel.

use crate::cnn::{Channels, FilterBank};
use crate::error::{Error, Result};
use crate::planar2d::Image;
use crate::signal::{Fragmented, Signal};

/// A parsed file: shape, channel count and flat values.
#[derive(Debug, Clone, PartialEq)]
pub struct NsfDoc {
    pub dims: Vec<usize>,
    pub channels: usize,
    /// Value of a `# fragments=<s>` comment, if present.
    pub fragments: Option<usize>,
    /// `dims.product() * channels` values, sample-major.
    pub values: Vec<f64>,
}

const EXACT_INT_LIMIT: u128 = 1 << 53;

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::BadConfig(format!("nsf line {line}: {msg}"))
}

/// Shortest decimal string that parses back to `v`. Plain notation is used
/// unless scientific notation is strictly shorter, or unless `v` is an
/// integer above `2^53` (such literals are rejected on input).
pub fn format_f64(v: f64) -> Result<String> {
    if !v.is_finite() {
        return Err(Error::NonFinite(v));
    }
    let plain = format!("{v}");
    let sci = format!("{v:e}");
    // Integer literals beyond 2^53 would not read back exactly.
    let inexact_integer = !plain.contains('.') && v.abs() > EXACT_INT_LIMIT as f64;
    Ok(if sci.len() < plain.len() || inexact_integer {
        sci
    } else {
        plain
    })
}

/// Parses one number. Integer literals must be exactly representable.
pub fn parse_number(tok: &str) -> std::result::Result<f64, String> {
    let digits = tok.strip_prefix(['-', '+']).unwrap_or(tok);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        let n: i128 = tok.parse().map_err(|_| format!("integer {tok:?} out of range"))?;
        if n.unsigned_abs() > EXACT_INT_LIMIT {
            return Err(format!("integer {tok} is not exactly representable"));
        }
        // Parsing as a float keeps the sign of "-0".
        return tok.parse::<f64>().map_err(|e| e.to_string());
    }
    let ok_chars = tok.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b));
    if !ok_chars {
        return Err(format!("not a number: {tok:?}"));
    }
    let v: f64 = tok.parse().map_err(|_| format!("not a number: {tok:?}"))?;
    if !v.is_finite() {
        return Err(format!("{tok} overflows"));
    }
    Ok(v)
}

/// Parses a document.
pub fn parse(text: &str) -> Result<NsfDoc> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::BadConfig("nsf: empty file".into()))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("nsf") {
        return Err(bad(hline, "missing `nsf` header"));
    }
    let nums = toks
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| bad(hline, format!("bad header field {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let rank = *nums.first().ok_or_else(|| bad(hline, "missing rank"))?;
    if rank == 0 || nums.len() != rank + 2 {
        return Err(bad(
            hline,
            format!("header needs rank, {rank} dimensions and a channel count"),
        ));
    }
    let dims = nums[1..=rank].to_vec();
    let channels = nums[rank + 1];
    if dims.contains(&0) || channels == 0 {
        return Err(bad(hline, "dimensions and channels must be positive"));
    }
    let count = dims.iter().product::<usize>();
    let mut fragments = None;
    let mut values = Vec::with_capacity(count * channels);
    let mut samples = 0;
    for (no, line) in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(comment) = t.strip_prefix('#') {
            if let Some(s) = comment.trim().strip_prefix("fragments=") {
                fragments = Some(s.trim().parse::<usize>().map_err(|_| bad(no, "bad fragments count"))?);
            }
            continue;
        }
        let before = values.len();
        for tok in t.split_whitespace() {
            values.push(parse_number(tok).map_err(|m| bad(no, m))?);
        }
        if values.len() - before != channels {
            return Err(bad(
                no,
                format!("expected {channels} values, found {}", values.len() - before),
            ));
        }
        samples += 1;
    }
    if samples != count {
        return Err(Error::BadConfig(format!(
            "nsf: expected {count} samples, found {samples}"
        )));
    }
    if let Some(s) = fragments {
        if rank != 2 || dims[1] != s {
            return Err(Error::BadConfig(format!(
                "nsf: fragments={s} needs a rank-2 file with {s} columns"
            )));
        }
    }
    Ok(NsfDoc {
        dims,
        channels,
        fragments,
        values,
    })
}

/// Serializes a document.
pub fn render(doc: &NsfDoc) -> Result<String> {
    let count = doc.dims.iter().product::<usize>();
    if doc.values.len() != count * doc.channels || doc.channels == 0 {
        return Err(Error::Shape {
            op: "nsf::render",
            detail: format!(
                "{} values for {count} samples of {} channels",
                doc.values.len(),
                doc.channels
            ),
        });
    }
    let mut out = format!("nsf {}", doc.dims.len());
    for d in &doc.dims {
        out.push_str(&format!(" {d}"));
    }
    out.push_str(&format!(" {}\n", doc.channels));
    if let Some(s) = doc.fragments {
        out.push_str(&format!("# fragments={s}\n"));
    }
    for sample in doc.values.chunks(doc.channels) {
        let line = sample.iter().map(|&v| format_f64(v)).collect::<Result<Vec<_>>>()?;
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

fn samples_of(doc: &NsfDoc) -> Result<Vec<Channels>> {
    doc.values
        .chunks(doc.channels)
        .map(|c| Channels::new(c.to_vec()))
        .collect()
}

fn flatten<'a>(samples: impl Iterator<Item = &'a Channels>) -> Result<(usize, Vec<f64>)> {
    let mut m = None;
    let mut values = Vec::new();
    for s in samples {
        match m {
            None => m = Some(s.channels()),
            Some(m) if m != s.channels() => {
                return Err(Error::ChannelMismatch {
                    expected: m,
                    got: s.channels(),
                })
            }
            _ => {}
        }
        values.extend_from_slice(s);
    }
    Ok((m.unwrap_or(1), values))
}

/// Rank-1 document of a signal.
pub fn signal_doc(xi: &Signal<Channels>) -> Result<NsfDoc> {
    let (channels, values) = flatten(xi.iter())?;
    Ok(NsfDoc {
        dims: vec![xi.len()],
        channels,
        fragments: None,
        values,
    })
}

/// Signal from a rank-1 document.
pub fn doc_signal(doc: &NsfDoc) -> Result<Signal<Channels>> {
    if doc.dims.len() != 1 {
        return Err(Error::BadConfig(format!(
            "nsf: expected a rank-1 signal, found rank {}",
            doc.dims.len()
        )));
    }
    Signal::new(samples_of(doc)?)
}

/// Rank-2 document of a fragmented signal with a fragments comment.
pub fn fragmented_doc(chi: &Fragmented<Channels>) -> Result<NsfDoc> {
    let (channels, values) = flatten(chi.as_row_major().iter())?;
    Ok(NsfDoc {
        dims: vec![chi.rows(), chi.cols()],
        channels,
        fragments: Some(chi.cols()),
        values,
    })
}

/// Fragmented signal from a rank-2 document.
pub fn doc_fragmented(doc: &NsfDoc) -> Result<Fragmented<Channels>> {
    if doc.dims.len() != 2 {
        return Err(Error::BadConfig("nsf: expected a rank-2 fragmented signal".into()));
    }
    Fragmented::from_row_major(doc.dims[0], doc.dims[1], samples_of(doc)?)
}

/// Rank-2 document of an image.
pub fn image_doc(xi: &Image<Channels>) -> Result<NsfDoc> {
    let (channels, values) = flatten(xi.as_row_major().iter())?;
    Ok(NsfDoc {
        dims: vec![xi.rows(), xi.cols()],
        channels,
        fragments: None,
        values,
    })
}

/// Image from a rank-2 document.
pub fn doc_image(doc: &NsfDoc) -> Result<Image<Channels>> {
    if doc.dims.len() != 2 {
        return Err(Error::BadConfig("nsf: expected a rank-2 image".into()));
    }
    Image::new(doc.dims[0], doc.dims[1], samples_of(doc)?)
}

/// Rank-3 single-channel document of a filter bank.
pub fn filter_bank_doc(w: &FilterBank) -> NsfDoc {
    NsfDoc {
        dims: vec![w.spatial(), w.in_channels(), w.out_channels()],
        channels: 1,
        fragments: None,
        values: w.weights().to_vec(),
    }
}

/// Filter bank from a rank-3 single-channel document.
pub fn doc_filter_bank(doc: &NsfDoc) -> Result<FilterBank> {
    if doc.dims.len() != 3 || doc.channels != 1 {
        return Err(Error::BadConfig("nsf: a filter bank is rank 3 with one channel".into()));
    }
    FilterBank::new(doc.dims[0], doc.dims[1], doc.dims[2], doc.values.clone())
}
