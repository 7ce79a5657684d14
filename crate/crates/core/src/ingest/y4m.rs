use std::io::{self, BufRead, Read};

use super::{read_full, IngestError};
use crate::frame::Frame;

const MAGIC: &str = "YUV4MPEG2";
const MAX_LINE: usize = 4096;

/// Stream-level parameters from a YUV4MPEG2 header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Y4mHeader {
    pub width: usize,
    pub height: usize,
    pub colorspace: String,
}

impl Y4mHeader {
    pub fn parse(line: &str) -> Result<Self, String> {
        let mut tokens = line.split_ascii_whitespace();
        if tokens.next() != Some(MAGIC) {
            return Err(format!("missing {MAGIC} signature"));
        }
        let (mut width, mut height) = (None, None);
        let mut colorspace = "420jpeg".to_string();
        for token in tokens {
            let mut chars = token.chars();
            let tag = chars.next();
            let value = chars.as_str();
            match tag {
                Some('W') => width = Some(parse_dim(value, "W")?),
                Some('H') => height = Some(parse_dim(value, "H")?),
                Some('C') => colorspace = value.to_string(),
                _ => {}
            }
        }
        let header = Self {
            width: width.ok_or("header lacks W")?,
            height: height.ok_or("header lacks H")?,
            colorspace,
        };
        header.chroma_bytes()?;
        Ok(header)
    }

    /// Bytes of chroma (and alpha) following each Y plane.
    pub fn chroma_bytes(&self) -> Result<usize, String> {
        let (w, h) = (self.width, self.height);
        let half_w = w.div_ceil(2);
        match self.colorspace.as_str() {
            "420" | "420jpeg" | "420paldv" | "420mpeg2" => Ok(2 * half_w * h.div_ceil(2)),
            "422" => Ok(2 * half_w * h),
            "444" => Ok(2 * w * h),
            "444alpha" => Ok(3 * w * h),
            "411" => Ok(2 * w.div_ceil(4) * h),
            "mono" => Ok(0),
            other => Err(format!("colorspace C{other} unsupported (8-bit only)")),
        }
    }
}

fn parse_dim(value: &str, tag: &str) -> Result<usize, String> {
    value
        .parse::<usize>()
        .ok()
        .filter(|&v| v > 0)
        .ok_or_else(|| format!("bad {tag} value {value:?}"))
}

pub(super) struct Y4mFrames<R> {
    reader: R,
    header: Y4mHeader,
    chroma: usize,
    offset: u64,
    done: bool,
}

impl<R: BufRead> Y4mFrames<R> {
    pub(super) fn new(mut reader: R) -> Result<Self, IngestError> {
        let line = read_line(&mut reader).map_err(|source| IngestError::Read { offset: 0, source })?;
        let Some(line) = line else {
            return Err(IngestError::Y4m {
                offset: 0,
                reason: "empty stream".into(),
            });
        };
        let text = std::str::from_utf8(&line).map_err(|_| IngestError::Y4m {
            offset: 0,
            reason: "header is not ASCII".into(),
        })?;
        let header = Y4mHeader::parse(text).map_err(|reason| IngestError::Y4m { offset: 0, reason })?;
        let chroma = header.chroma_bytes().expect("validated in parse");
        Ok(Self {
            reader,
            header,
            chroma,
            offset: line.len() as u64 + 1,
            done: false,
        })
    }

    fn read_frame(&mut self) -> Result<Option<Frame>, IngestError> {
        let frame_start = self.offset;
        let Some(line) = read_line(&mut self.reader).map_err(|source| IngestError::Read {
            offset: frame_start,
            source,
        })?
        else {
            return Ok(None);
        };
        if !line.starts_with(b"FRAME") {
            return Err(IngestError::Y4m {
                offset: frame_start,
                reason: "expected FRAME marker".into(),
            });
        }
        self.offset += line.len() as u64 + 1;

        let luma = self.header.width * self.header.height;
        let mut buf = vec![0u8; luma];
        let filled = read_full(&mut self.reader, &mut buf).map_err(|source| IngestError::Read {
            offset: self.offset,
            source,
        })?;
        if filled < luma {
            return Err(IngestError::Truncated {
                offset: self.offset,
                remaining: filled,
                frame_bytes: luma,
            });
        }
        self.offset += luma as u64;

        let skipped = io::copy(
            &mut Read::by_ref(&mut self.reader).take(self.chroma as u64),
            &mut io::sink(),
        )
        .map_err(|source| IngestError::Read {
            offset: self.offset,
            source,
        })?;
        if skipped < self.chroma as u64 {
            return Err(IngestError::Truncated {
                offset: self.offset,
                remaining: skipped as usize,
                frame_bytes: self.chroma,
            });
        }
        self.offset += skipped;

        Ok(Some(
            Frame::new(0, self.header.width, self.header.height, buf).expect("buffer sized to frame"),
        ))
    }
}

impl<R: BufRead> Iterator for Y4mFrames<R> {
    type Item = Result<Frame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.read_frame().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.done = true;
        }
        item
    }
}

/// Reads one `\n`-terminated line without the terminator. `None` at clean EOF.
fn read_line<R: BufRead>(reader: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut line = Vec::new();
    let n = Read::by_ref(reader).take(MAX_LINE as u64).read_until(b'\n', &mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() != Some(&b'\n') {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "unterminated header line",
        ));
    }
    line.pop();
    Ok(Some(line))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::y4m_stream;

    fn stream(header: &str, frames: &[(&[u8], usize)]) -> Vec<u8> {
        let mut out = format!("{header}\n").into_bytes();
        for (luma, chroma) in frames {
            out.extend_from_slice(b"FRAME\n");
            out.extend_from_slice(luma);
            out.extend(std::iter::repeat_n(128u8, *chroma));
        }
        out
    }

    #[test]
    fn header_fields() {
        let h = Y4mHeader::parse("YUV4MPEG2 W320 H240 F25:1 Ip A1:1 C420jpeg XYSCSS=420JPEG").unwrap();
        assert_eq!((h.width, h.height), (320, 240));
        assert_eq!(h.chroma_bytes().unwrap(), 2 * 160 * 120);
        let odd = Y4mHeader::parse("YUV4MPEG2 W9 H9").unwrap();
        assert_eq!(odd.chroma_bytes().unwrap(), 2 * 5 * 5);
        assert!(Y4mHeader::parse("YUV4MPEG2 W9 H9 C420p10").is_err());
        assert!(Y4mHeader::parse("YUV4MPEG W9 H9").is_err());
        assert!(Y4mHeader::parse("YUV4MPEG2 W9").is_err());
    }

    #[test]
    fn reads_luma_and_skips_chroma() {
        let a: Vec<u8> = (0..64).collect();
        let b: Vec<u8> = (64..128).collect();
        let bytes = stream("YUV4MPEG2 W8 H8 F30:1 C420jpeg", &[(&a, 32), (&b, 32)]);
        let frames: Vec<_> = y4m_stream(io::Cursor::new(bytes))
            .unwrap()
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].pixels(), &a[..]);
        assert_eq!(frames[1].pixels(), &b[..]);
        assert_eq!(frames[1].index(), 1);
    }

    #[test]
    fn frame_parameters_and_mono() {
        let a = [7u8; 64];
        let mut bytes = b"YUV4MPEG2 W8 H8 Cmono\nFRAME Ixyz\n".to_vec();
        bytes.extend_from_slice(&a);
        let frames: Vec<_> = y4m_stream(io::Cursor::new(bytes)).unwrap().collect();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].as_ref().unwrap().pixels(), &a[..]);
    }

    #[test]
    fn truncated_chroma_is_an_error() {
        let a = [0u8; 64];
        let bytes = stream("YUV4MPEG2 W8 H8 C444", &[(&a, 10)]);
        let results: Vec<_> = y4m_stream(io::Cursor::new(bytes)).unwrap().collect();
        // header (21) + FRAME\n (6) + luma (64)
        assert!(matches!(
            results[0],
            Err(IngestError::Truncated { offset: 91, remaining: 10, .. })
        ));
    }

    #[test]
    fn missing_frame_marker() {
        let bytes = b"YUV4MPEG2 W8 H8\nFRAM\n".to_vec();
        let results: Vec<_> = y4m_stream(io::Cursor::new(bytes)).unwrap().collect();
        assert!(matches!(results[0], Err(IngestError::Y4m { offset: 16, .. })));
    }
}
