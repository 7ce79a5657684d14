use std::fs;
use std::path::{Path, PathBuf};

use super::{pgm, IngestError};
use crate::frame::Frame;

/// Regular, non-hidden files of `dir` in byte-wise lexicographic name order.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    if !dir.is_dir() {
        return Err(IngestError::NotADirectory(dir.to_path_buf()));
    }
    let entries = fs::read_dir(dir).map_err(|source| IngestError::Open {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::Open {
            path: dir.to_path_buf(),
            source,
        })?;
        let name = entry.file_name();
        if name.as_encoded_bytes().starts_with(b".") {
            continue;
        }
        let path = entry.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| {
        let a = a.file_name().unwrap_or_default().as_encoded_bytes();
        let b = b.file_name().unwrap_or_default().as_encoded_bytes();
        a.cmp(b)
    });
    Ok(files)
}

pub(super) struct DirFrames {
    files: std::vec::IntoIter<PathBuf>,
}

impl DirFrames {
    pub(super) fn open(dir: &Path) -> Result<Self, IngestError> {
        Ok(Self {
            files: list_frame_files(dir)?.into_iter(),
        })
    }
}

impl Iterator for DirFrames {
    type Item = Result<Frame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        let path = self.files.next()?;
        Some(load_frame(&path))
    }
}

fn load_frame(path: &Path) -> Result<Frame, IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::ReadFile {
        path: path.to_path_buf(),
        source,
    })?;
    if pgm::is_pgm(&bytes) {
        let img = pgm::decode(&bytes).map_err(|reason| IngestError::UnsupportedFile {
            path: path.to_path_buf(),
            reason,
        })?;
        return Ok(Frame::new(0, img.width, img.height, img.pixels).expect("decoder sizes raster"));
    }
    decode_other(path, &bytes)
}

#[cfg(not(feature = "image"))]
fn decode_other(path: &Path, _bytes: &[u8]) -> Result<Frame, IngestError> {
    Err(IngestError::UnsupportedFile {
        path: path.to_path_buf(),
        reason: "not a binary PGM (P5); build with the `image` feature for other formats".into(),
    })
}

#[cfg(feature = "image")]
fn decode_other(path: &Path, bytes: &[u8]) -> Result<Frame, IngestError> {
    let img = image::load_from_memory(bytes).map_err(|e| IngestError::UnsupportedFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let pixels = rgb
        .pixels()
        .map(|p| crate::frame::to_grayscale(p[0], p[1], p[2]))
        .collect();
    Ok(Frame::new(0, w as usize, h as usize, pixels).expect("one luma byte per pixel"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{open_source, SourceSpec};

    fn write_pgm(dir: &Path, name: &str, value: u8) {
        fs::write(dir.join(name), pgm::encode(8, 8, &[value; 64])).unwrap();
    }

    #[test]
    fn lexicographic_order() {
        let tmp = tempfile::tempdir().unwrap();
        write_pgm(tmp.path(), "f001.pgm", 1);
        write_pgm(tmp.path(), "f000.pgm", 0);
        write_pgm(tmp.path(), ".hidden.pgm", 9);
        fs::create_dir(tmp.path().join("sub")).unwrap();

        let frames: Vec<_> = open_source(&SourceSpec::image_directory(tmp.path()))
            .unwrap()
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!((frames[0].index(), frames[0].pixels()[0]), (0, 0));
        assert_eq!((frames[1].index(), frames[1].pixels()[0]), (1, 1));
    }

    #[cfg(not(feature = "image"))]
    #[test]
    fn unsupported_file_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        write_pgm(tmp.path(), "a.pgm", 0);
        fs::write(tmp.path().join("b.png"), b"\x89PNG....").unwrap();
        let results: Vec<_> = open_source(&SourceSpec::image_directory(tmp.path()))
            .unwrap()
            .collect();
        assert!(results[0].is_ok());
        match &results[1] {
            Err(IngestError::UnsupportedFile { path, .. }) => assert!(path.ends_with("b.png")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_directory() {
        let err = open_source(&SourceSpec::image_directory("/nonexistent/frames")).unwrap_err();
        assert!(matches!(err, IngestError::NotADirectory(_)));
    }
}
