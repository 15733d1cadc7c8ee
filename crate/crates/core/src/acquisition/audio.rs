use std::io::Cursor;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{AcquisitionError, AssetId};

pub const SUPPORTED_RATES: [u32; 3] = [16000, 44100, 48000];

/// Mono signed 16-bit PCM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    sample_rate: u32,
    samples: Vec<i16>,
}

impl AudioClip {
    pub fn new(sample_rate: u32, samples: Vec<i16>) -> Result<Self, AcquisitionError> {
        if !SUPPORTED_RATES.contains(&sample_rate) {
            return Err(AcquisitionError::InvalidAudio(format!(
                "unsupported sample rate {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(AcquisitionError::InvalidAudio("clip has no samples".into()));
        }
        Ok(Self {
            sample_rate,
            samples,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> u16 {
        self.samples.iter().map(|s| s.unsigned_abs()).max().unwrap_or(0)
    }

    /// Canonical RIFF/WAV encoding (PCM 16-bit little-endian, mono).
    pub fn to_wav_bytes(&self) -> Vec<u8> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::with_capacity(44 + self.samples.len() * 2));
        {
            let mut writer = hound::WavWriter::new(&mut cursor, spec).expect("in-memory writer");
            let mut w16 = writer.get_i16_writer(self.samples.len() as u32);
            for &s in &self.samples {
                w16.write_sample(s);
            }
            w16.flush().expect("in-memory writer");
            writer.finalize().expect("in-memory writer");
        }
        cursor.into_inner()
    }

    pub fn from_wav_bytes(bytes: &[u8]) -> Result<Self, AcquisitionError> {
        let bad = |e: hound::Error| AcquisitionError::InvalidAudio(e.to_string());
        let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(bad)?;
        let spec = reader.spec();
        if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
            return Err(AcquisitionError::InvalidAudio(format!(
                "expected 16-bit PCM mono, got {} channel(s) at {} bits",
                spec.channels, spec.bits_per_sample
            )));
        }
        let samples = reader
            .into_samples::<i16>()
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad)?;
        Self::new(spec.sample_rate, samples)
    }

    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self, AcquisitionError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| AcquisitionError::Io(format!("{}: {e}", path.display())))?;
        Self::from_wav_bytes(&bytes)
    }

    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<(), AcquisitionError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_wav_bytes())
            .map_err(|e| AcquisitionError::Io(format!("{}: {e}", path.display())))
    }

    /// SHA-256 of the canonical WAV bytes.
    pub fn content_id(&self) -> AssetId {
        AssetId(hex::encode(Sha256::digest(self.to_wav_bytes())))
    }

    /// Copy with exactly `len` samples: truncated, or zero-padded at the end.
    pub fn fit_to_len(&self, len: usize) -> AudioClip {
        let mut samples = self.samples.clone();
        samples.resize(len, 0);
        AudioClip {
            sample_rate: self.sample_rate,
            samples,
        }
    }
}
