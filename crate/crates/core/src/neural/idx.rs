use std::fs;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

/// Images as rows of `features` pixels in `[0, 1]`, with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Vec<f32>,
    labels: Vec<u8>,
    features: usize,
}

impl Dataset {
    pub fn new(images: Vec<f32>, labels: Vec<u8>, features: usize) -> Result<Self> {
        if features == 0 || !images.len().is_multiple_of(features) {
            return Err(Error::InvalidParameter(format!(
                "{} pixel values do not split into rows of {features}",
                images.len()
            )));
        }
        if images.len() / features != labels.len() {
            return Err(Error::CountMismatch {
                images: images.len() / features,
                labels: labels.len(),
            });
        }
        Ok(Self {
            images,
            labels,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn image(&self, i: usize) -> &[f32] {
        &self.images[i * self.features..(i + 1) * self.features]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Copy of the rows in `range`.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start > range.end || range.end > self.len() {
            return Err(Error::InvalidParameter(format!(
                "row range {range:?} outside dataset of {} rows",
                self.len()
            )));
        }
        Ok(Self {
            images: self.images[range.start * self.features..range.end * self.features].to_vec(),
            labels: self.labels[range].to_vec(),
            features: self.features,
        })
    }

    /// First `n` rows and the rest.
    pub fn split_at(mut self, n: usize) -> Result<(Self, Self)> {
        if n > self.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot split {} rows at {n}",
                self.len()
            )));
        }
        let tail_images = self.images.split_off(n * self.features);
        let tail_labels = self.labels.split_off(n);
        let tail = Self {
            images: tail_images,
            labels: tail_labels,
            features: self.features,
        };
        Ok((self, tail))
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

fn header(path: &Path, bytes: &[u8], magic: u32, len: usize) -> Result<()> {
    if bytes.len() < len {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: len,
            found: bytes.len(),
        });
    }
    let found = be_u32(bytes, 0);
    if found != magic {
        return Err(Error::WrongMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    Ok(())
}

/// Parses an IDX image file (magic 2051) and label file (magic 2049).
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let ib = read(ip)?;
    header(ip, &ib, IMAGE_MAGIC, 16)?;
    let (n, rows, cols) = (
        be_u32(&ib, 4) as usize,
        be_u32(&ib, 8) as usize,
        be_u32(&ib, 12) as usize,
    );
    let features = rows * cols;
    let need = 16 + n * features;
    if ib.len() < need {
        return Err(Error::Truncated {
            path: ip.to_path_buf(),
            expected: need,
            found: ib.len(),
        });
    }

    let lb = read(lp)?;
    header(lp, &lb, LABEL_MAGIC, 8)?;
    let count = be_u32(&lb, 4) as usize;
    if count != n {
        return Err(Error::CountMismatch {
            images: n,
            labels: count,
        });
    }
    if lb.len() < 8 + count {
        return Err(Error::Truncated {
            path: lp.to_path_buf(),
            expected: 8 + count,
            found: lb.len(),
        });
    }

    let images = ib[16..need].iter().map(|&p| f32::from(p) / 255.0).collect();
    Dataset::new(images, lb[8..8 + count].to_vec(), features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn idx_images(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [IMAGE_MAGIC, n, rows, cols] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend_from_slice(pixels);
        b
    }

    fn idx_labels(n: u32, labels: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [LABEL_MAGIC, n] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend_from_slice(labels);
        b
    }

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(bytes).unwrap();
        p
    }

    #[test]
    fn parses_and_scales_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let im = write(dir.path(), "i", &idx_images(2, 1, 2, &[0, 255, 51, 102]));
        let lb = write(dir.path(), "l", &idx_labels(2, &[7, 3]));
        let d = load_idx(&im, &lb).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.features(), 2);
        assert_eq!(d.image(0), &[0.0, 1.0]);
        assert_eq!(d.image(1), &[0.2, 0.4]);
        assert_eq!(d.labels(), &[7, 3]);
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut bad = idx_images(1, 1, 1, &[0]);
        bad[0..4].copy_from_slice(&9999u32.to_be_bytes());
        let bad = write(dir.path(), "bad", &bad);
        let short = write(dir.path(), "short", &idx_images(3, 2, 2, &[0; 5]));
        let im = write(dir.path(), "im", &idx_images(2, 1, 1, &[1, 2]));
        let one = write(dir.path(), "one", &idx_labels(1, &[0]));
        let two = write(dir.path(), "two", &idx_labels(2, &[0, 1]));

        assert!(matches!(
            load_idx(&bad, &two),
            Err(Error::WrongMagic { found: 9999, .. })
        ));
        assert!(matches!(
            load_idx(&short, &two),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            load_idx(&im, &one),
            Err(Error::CountMismatch {
                images: 2,
                labels: 1
            })
        ));
        assert!(matches!(
            load_idx(&im, &im),
            Err(Error::WrongMagic { expected: 2049, .. })
        ));
        match load_idx(dir.path().join("missing"), &two) {
            Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("missing")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_and_slice() {
        let d = Dataset::new((0..10).map(|x| x as f32).collect(), vec![0, 1, 2, 3, 4], 2).unwrap();
        let s = d.slice(1..3).unwrap();
        assert_eq!(s.image(0), &[2.0, 3.0]);
        let (a, b) = d.split_at(3).unwrap();
        assert_eq!((a.len(), b.len()), (3, 2));
        assert_eq!(b.image(0), &[6.0, 7.0]);
        assert!(Dataset::new(vec![0.0; 4], vec![0], 2).is_err());
    }
}
