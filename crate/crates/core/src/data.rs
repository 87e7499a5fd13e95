//! MNIST ingestion from IDX files, normalization, hold-out split and
//! minibatch ordering.
//!
//! IDX layout (big-endian): images start with magic `0x00000803` followed by
//! `[count, rows, cols]` and `count·rows·cols` unsigned bytes; labels start
//! with magic `0x00000801`, then `[count]` and `count` bytes. Either file may
//! be wrapped in gzip, detected by the `1F 8B` prefix.

use std::borrow::Cow;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder};
use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::Image;
use crate::error::{invalid, Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const NUM_CLASSES: usize = 10;

/// Upper bound on the decompressed size of a single IDX file.
pub const MAX_DECODED_BYTES: u64 = 256 << 20;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Images as raw bytes, row-major, one `rows × cols` block per image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub bytes: Vec<u8>,
}

impl RawImages {
    pub fn image(&self, idx: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.bytes[idx * n..(idx + 1) * n]
    }
}

/// A parsed but not yet normalized image/label file pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDataset {
    pub images: RawImages,
    pub labels: Vec<u8>,
}

fn truncated(what: &str) -> Error {
    Error::Io(io::Error::new(
        io::ErrorKind::UnexpectedEof,
        format!("{what} is truncated"),
    ))
}

/// Strips a gzip wrapper if present.
pub fn decode_container(bytes: &[u8]) -> Result<Cow<'_, [u8]>> {
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .take(MAX_DECODED_BYTES + 1)
            .read_to_end(&mut out)?;
        if out.len() as u64 > MAX_DECODED_BYTES {
            return Err(Error::Format(format!(
                "decompressed data exceeds {MAX_DECODED_BYTES} bytes"
            )));
        }
        Ok(Cow::Owned(out))
    } else {
        Ok(Cow::Borrowed(bytes))
    }
}

fn read_header(bytes: &[u8], words: usize, what: &str) -> Result<Vec<u32>> {
    if bytes.len() < 4 * words {
        return Err(truncated(what));
    }
    Ok((0..words)
        .map(|w| BigEndian::read_u32(&bytes[4 * w..]))
        .collect())
}

/// Parses an (uncompressed or gzip) IDX image file.
pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImages> {
    let bytes = decode_container(bytes)?;
    let magic = read_header(&bytes, 1, "image header")?[0];
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "image magic is {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )));
    }
    let header = read_header(&bytes, 4, "image header")?;
    let (count, rows, cols) = (header[1] as usize, header[2] as usize, header[3] as usize);
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!(
            "image dimensions {rows}×{cols} are empty"
        )));
    }
    let payload = count
        .checked_mul(rows)
        .and_then(|n| n.checked_mul(cols))
        .ok_or_else(|| Error::Format("image payload size overflows".into()))?;
    let body = &bytes[16..];
    if body.len() < payload {
        return Err(truncated("image payload"));
    }
    if body.len() > payload {
        return Err(Error::Format(format!(
            "{} trailing bytes after image payload",
            body.len() - payload
        )));
    }
    Ok(RawImages {
        count,
        rows,
        cols,
        bytes: body.to_vec(),
    })
}

/// Parses an (uncompressed or gzip) IDX label file.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let bytes = decode_container(bytes)?;
    let magic = read_header(&bytes, 1, "label header")?[0];
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "label magic is {magic:#010x}, expected {LABEL_MAGIC:#010x}"
        )));
    }
    let count = read_header(&bytes, 2, "label header")?[1] as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(truncated("label payload"));
    }
    if body.len() > count {
        return Err(Error::Format(format!(
            "{} trailing bytes after label payload",
            body.len() - count
        )));
    }
    if let Some(pos) = body.iter().position(|&l| l as usize >= NUM_CLASSES) {
        return Err(Error::Format(format!(
            "label {} at index {pos} is not a digit class",
            body[pos]
        )));
    }
    Ok(body.to_vec())
}

/// Pairs parsed images with parsed labels.
pub fn parse_idx_pair(image_bytes: &[u8], label_bytes: &[u8]) -> Result<RawDataset> {
    let images = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if images.count != labels.len() {
        return Err(Error::Consistency(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    Ok(RawDataset { images, labels })
}

/// Serializes images in the IDX layout (uncompressed).
pub fn encode_idx_images(images: &RawImages) -> Vec<u8> {
    let mut out = vec![0u8; 16];
    BigEndian::write_u32(&mut out[0..], IMAGE_MAGIC);
    BigEndian::write_u32(&mut out[4..], images.count as u32);
    BigEndian::write_u32(&mut out[8..], images.rows as u32);
    BigEndian::write_u32(&mut out[12..], images.cols as u32);
    out.extend_from_slice(&images.bytes);
    out
}

/// Serializes labels in the IDX layout (uncompressed).
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; 8];
    BigEndian::write_u32(&mut out[0..], LABEL_MAGIC);
    BigEndian::write_u32(&mut out[4..], labels.len() as u32);
    out.extend_from_slice(labels);
    out
}

/// Reads an image file and a label file from disk.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<RawDataset> {
    let images = fs::read(images_path)?;
    let labels = fs::read(labels_path)?;
    parse_idx_pair(&images, &labels)
}

/// Labelled images with pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    images: Vec<Image>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(images: Vec<Image>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Consistency(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(pos) = labels.iter().position(|&l| l as usize >= NUM_CLASSES) {
            return Err(Error::Consistency(format!(
                "label at index {pos} is out of range"
            )));
        }
        if let Some(pos) = images.iter().position(|im| !im.is_normalized()) {
            return Err(Error::Consistency(format!(
                "image {pos} has pixels outside [0, 1]"
            )));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> usize {
        self.labels[idx] as usize
    }

    /// Copies out the listed samples, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Divides every byte by 255.
pub fn normalize(raw: &RawDataset) -> Dataset {
    let RawImages {
        count, rows, cols, ..
    } = raw.images;
    let images = (0..count)
        .map(|i| {
            let px = raw
                .images
                .image(i)
                .iter()
                .map(|&b| f64::from(b) / 255.0)
                .collect();
            Image::new(rows, cols, px).expect("IDX header dimensions are positive")
        })
        .collect();
    Dataset {
        images,
        labels: raw.labels.clone(),
    }
}

/// Seeded hold-out split parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    pub validation_fraction: f64,
}

/// Index partition produced by [`SplitSpec::partition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl SplitSpec {
    pub fn new(seed: u64, validation_fraction: f64) -> Result<Self> {
        if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
            return Err(invalid(format!(
                "validation fraction must lie in (0, 1), got {validation_fraction}"
            )));
        }
        Ok(Self {
            seed,
            validation_fraction,
        })
    }

    /// Shuffles `0..n` with the split seed; the first `n − round(f·n)`
    /// indices train, the rest validate.
    pub fn partition(&self, n: usize) -> Partition {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let n_val = (self.validation_fraction * n as f64).round() as usize;
        let validation = idx.split_off(n - n_val.min(n));
        Partition {
            train: idx,
            validation,
        }
    }
}

/// Splits `dataset` into `(train, validation)`.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> (Dataset, Dataset) {
    let part = spec.partition(dataset.len());
    (
        dataset.subset(&part.train),
        dataset.subset(&part.validation),
    )
}

/// One epoch of minibatch indices over `0..n`, shuffled by `epoch_seed`.
/// The last batch may be short.
pub fn batches(n: usize, batch_size: usize, epoch_seed: u64) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(epoch_seed));
    Ok(idx.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

/// The standard MNIST train/test pair.
#[derive(Debug, Clone)]
pub struct Mnist {
    pub train: Dataset,
    pub test: Dataset,
}

/// Locates `stem` or `stem.gz` inside `dir`.
pub fn find_idx_file(dir: &Path, stem: &str) -> Result<PathBuf> {
    for candidate in [dir.join(stem), dir.join(format!("{stem}.gz"))] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::Io(io::Error::new(
        io::ErrorKind::NotFound,
        format!("neither {stem} nor {stem}.gz found in {}", dir.display()),
    )))
}

/// Loads and normalizes the four MNIST files from `dir`.
pub fn load_mnist(dir: impl AsRef<Path>) -> Result<Mnist> {
    let dir = dir.as_ref();
    let train = load_idx(
        find_idx_file(dir, TRAIN_IMAGES)?,
        find_idx_file(dir, TRAIN_LABELS)?,
    )?;
    let test = load_idx(
        find_idx_file(dir, TEST_IMAGES)?,
        find_idx_file(dir, TEST_LABELS)?,
    )?;
    Ok(Mnist {
        train: normalize(&train),
        test: normalize(&test),
    })
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use flate2::write::GzEncoder;
    use flate2::Compression;

    use super::*;

    fn tiny() -> RawImages {
        RawImages {
            count: 1,
            rows: 2,
            cols: 2,
            bytes: vec![0, 255, 128, 64],
        }
    }

    #[test]
    fn parses_direct_byte_mapping() {
        let bytes = encode_idx_images(&tiny());
        let parsed = parse_idx_images(&bytes).unwrap();
        assert_eq!(parsed, tiny());
        assert_eq!(parsed.image(0), &[0, 255, 128, 64]);
    }

    #[test]
    fn gzip_is_detected() {
        let plain = encode_idx_images(&tiny());
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&plain).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(parse_idx_images(&gz).unwrap(), tiny());
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let mut bytes = encode_idx_images(&tiny());
        bytes[3] = 0x01;
        assert!(matches!(parse_idx_images(&bytes), Err(Error::Format(_))));
        let labels = encode_idx_images(&tiny());
        assert!(matches!(parse_idx_labels(&labels), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_is_an_io_error() {
        let bytes = encode_idx_images(&tiny());
        for cut in [0, 3, 10, bytes.len() - 1] {
            match parse_idx_images(&bytes[..cut]) {
                Err(Error::Io(e)) => assert_eq!(e.kind(), io::ErrorKind::UnexpectedEof),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
        let labels = encode_idx_labels(&[1, 2, 3]);
        assert!(matches!(parse_idx_labels(&labels[..9]), Err(Error::Io(_))));
    }

    #[test]
    fn count_mismatch_is_a_consistency_error() {
        let images = encode_idx_images(&tiny());
        let labels = encode_idx_labels(&[3, 4]);
        assert!(matches!(
            parse_idx_pair(&images, &labels),
            Err(Error::Consistency(_))
        ));
        let ok = parse_idx_pair(&images, &encode_idx_labels(&[7])).unwrap();
        assert_eq!(ok.labels, vec![7]);
    }

    #[test]
    fn label_out_of_range_and_trailing_bytes() {
        assert!(matches!(
            parse_idx_labels(&encode_idx_labels(&[10])),
            Err(Error::Format(_))
        ));
        let mut bytes = encode_idx_labels(&[1]);
        bytes.push(0);
        assert!(matches!(parse_idx_labels(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn oversized_header_does_not_allocate() {
        let mut bytes = vec![0u8; 16];
        BigEndian::write_u32(&mut bytes[0..], IMAGE_MAGIC);
        BigEndian::write_u32(&mut bytes[4..], u32::MAX);
        BigEndian::write_u32(&mut bytes[8..], u32::MAX);
        BigEndian::write_u32(&mut bytes[12..], u32::MAX);
        assert!(parse_idx_images(&bytes).is_err());
    }

    #[test]
    fn normalization_divides_by_255() {
        let raw = RawDataset {
            images: tiny(),
            labels: vec![5],
        };
        let ds = normalize(&raw);
        let px = ds.images()[0].pixels();
        assert_eq!(px[0], 0.0);
        assert_eq!(px[1], 1.0);
        assert!((px[2] - 0.501_960_784_313_725_5).abs() < 1e-15);
        assert_eq!(ds.label(0), 5);
    }

    #[test]
    fn split_sizes_and_partition() {
        let spec = SplitSpec::new(42, 1.0 / 6.0).unwrap();
        let part = spec.partition(60_000);
        assert_eq!(part.train.len(), 50_000);
        assert_eq!(part.validation.len(), 10_000);
        assert_eq!(spec.partition(60_000), part);
        let mut all: Vec<usize> = part.train.iter().chain(&part.validation).copied().collect();
        all.sort_unstable();
        assert!(all.iter().enumerate().all(|(i, &v)| i == v));

        assert!(SplitSpec::new(0, 0.0).is_err());
        assert!(SplitSpec::new(0, 1.0).is_err());
        assert!(SplitSpec::new(0, f64::NAN).is_err());
    }

    #[test]
    fn batches_cover_every_index() {
        let b = batches(5, 2, 9).unwrap();
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 2, 1]);
        assert_eq!(batches(5, 2, 9).unwrap(), b);
        let mut flat: Vec<usize> = b.concat();
        flat.sort_unstable();
        assert_eq!(flat, vec![0, 1, 2, 3, 4]);
        assert!(batches(5, 0, 0).is_err());
        assert!(batches(0, 3, 0).unwrap().is_empty());
    }

    #[test]
    fn dataset_invariants() {
        let img = Image::new(1, 2, vec![0.0, 1.5]).unwrap();
        assert!(Dataset::new(vec![img], vec![1]).is_err());
        let img = Image::new(1, 2, vec![0.0, 0.5]).unwrap();
        assert!(Dataset::new(vec![img.clone()], vec![11]).is_err());
        assert!(Dataset::new(vec![img], vec![]).is_err());
    }

    #[test]
    fn missing_directory_reports_not_found() {
        let dir = tempfile::tempdir().unwrap();
        match load_mnist(dir.path()) {
            Err(Error::Io(e)) => assert_eq!(e.kind(), io::ErrorKind::NotFound),
            other => panic!("{other:?}"),
        }
    }
}
