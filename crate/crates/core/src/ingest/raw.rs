use std::io::Read;

use super::{read_full, IngestError};
use crate::frame::Frame;

/// Frame-major, row-major 8-bit luma with no framing.
pub(super) struct RawFrames<R> {
    reader: R,
    width: usize,
    height: usize,
    offset: u64,
    done: bool,
}

impl<R: Read> RawFrames<R> {
    pub(super) fn new(reader: R, width: usize, height: usize) -> Self {
        Self {
            reader,
            width,
            height,
            offset: 0,
            done: false,
        }
    }
}

impl<R: Read> Iterator for RawFrames<R> {
    type Item = Result<Frame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let frame_bytes = self.width * self.height;
        let mut buf = vec![0u8; frame_bytes];
        let filled = match read_full(&mut self.reader, &mut buf) {
            Ok(n) => n,
            Err(source) => {
                self.done = true;
                return Some(Err(IngestError::Read {
                    offset: self.offset,
                    source,
                }));
            }
        };
        if filled == 0 {
            self.done = true;
            return None;
        }
        if filled < frame_bytes {
            self.done = true;
            return Some(Err(IngestError::Truncated {
                offset: self.offset,
                remaining: filled,
                frame_bytes,
            }));
        }
        self.offset += frame_bytes as u64;
        Some(Ok(Frame::new(0, self.width, self.height, buf).expect("buffer sized to frame")))
    }
}

#[cfg(test)]
mod tests {
    use crate::ingest::{raw_stream, IngestError};

    #[test]
    fn splits_into_frames() {
        let bytes: Vec<u8> = (0..32).collect();
        let frames: Vec<_> = raw_stream(std::io::Cursor::new(bytes), 4, 4)
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].pixels().len(), 16);
        assert_eq!((frames[0].index(), frames[1].index()), (0, 1));
        assert_eq!(frames[1].pixels()[0], 16);
    }

    #[test]
    fn trailing_partial_frame_reports_offset() {
        let bytes = vec![0u8; 33];
        let results: Vec<_> = raw_stream(std::io::Cursor::new(bytes), 4, 4).collect();
        assert_eq!(results.len(), 3);
        assert!(results[0].is_ok() && results[1].is_ok());
        match &results[2] {
            Err(IngestError::Truncated { offset, remaining, .. }) => {
                assert_eq!((*offset, *remaining), (32, 1));
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_empty_stream() {
        assert_eq!(raw_stream(std::io::Cursor::new(Vec::new()), 8, 8).count(), 0);
    }
}
