//! WAV read/write (PCM 16/24-bit and 32-bit float) via `hound`.

use std::fmt;
use std::io::{Read, Seek, Write};
use std::path::Path;
use std::str::FromStr;

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};

use crate::error::{BsmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    Pcm16,
    Pcm24,
    #[default]
    Float32,
}

impl SampleFormat {
    fn spec(self, channels: u16, sample_rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            SampleFormat::Pcm16 => (16, HoundFormat::Int),
            SampleFormat::Pcm24 => (24, HoundFormat::Int),
            SampleFormat::Float32 => (32, HoundFormat::Float),
        };
        WavSpec {
            channels,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }
}

impl fmt::Display for SampleFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleFormat::Pcm16 => "pcm16",
            SampleFormat::Pcm24 => "pcm24",
            SampleFormat::Float32 => "f32",
        })
    }
}

impl FromStr for SampleFormat {
    type Err = BsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pcm16" | "s16" => Ok(SampleFormat::Pcm16),
            "pcm24" | "s24" => Ok(SampleFormat::Pcm24),
            "f32" | "float32" => Ok(SampleFormat::Float32),
            other => Err(BsmError::InvalidArgument(format!(
                "unknown sample format '{other}' (pcm16, pcm24, f32)"
            ))),
        }
    }
}

/// De-interleaved audio with samples in [-1, 1] full scale.
#[derive(Debug, Clone, PartialEq)]
pub struct WavAudio {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f64>>,
}

impl WavAudio {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<WavAudio> {
    decode_wav(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Decodes any integer PCM depth up to 32 bits, or 32-bit float.
pub fn decode_wav<R: Read>(reader: R) -> Result<WavAudio> {
    let mut r = WavReader::new(reader)?;
    let spec = r.spec();
    let nch = spec.channels as usize;
    if nch == 0 {
        return Err(BsmError::Malformed("wav has zero channels".into()));
    }
    let interleaved: Vec<f64> = match spec.sample_format {
        HoundFormat::Float => r.samples::<f32>().map(|s| s.map(f64::from)).collect::<std::result::Result<_, _>>()?,
        HoundFormat::Int => {
            let scale = 1.0 / 2f64.powi(i32::from(spec.bits_per_sample) - 1);
            r.samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    let frames = interleaved.len() / nch;
    let mut channels = vec![Vec::with_capacity(frames); nch];
    for frame in interleaved.chunks_exact(nch) {
        for (c, &v) in channels.iter_mut().zip(frame) {
            c.push(v);
        }
    }
    Ok(WavAudio {
        sample_rate: spec.sample_rate,
        channels,
    })
}

pub fn write_wav(path: impl AsRef<Path>, audio: &WavAudio, format: SampleFormat) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    encode_wav(file, audio, format)
}

/// Integer formats clip to the representable range; float is written as is.
pub fn encode_wav<W: Write + Seek>(writer: W, audio: &WavAudio, format: SampleFormat) -> Result<()> {
    let nch = audio.channels.len();
    if nch == 0 || nch > usize::from(u16::MAX) {
        return Err(BsmError::InvalidArgument(format!("cannot write {nch} channels")));
    }
    let len = audio.len();
    if audio.channels.iter().any(|c| c.len() != len) {
        return Err(BsmError::InvalidArgument("channels differ in length".into()));
    }
    if audio.sample_rate == 0 {
        return Err(BsmError::InvalidArgument("sample rate 0".into()));
    }
    let spec = format.spec(nch as u16, audio.sample_rate);
    let mut w = WavWriter::new(writer, spec)?;
    for i in 0..len {
        for c in &audio.channels {
            let x = c[i];
            match format {
                SampleFormat::Float32 => w.write_sample(x as f32)?,
                SampleFormat::Pcm16 | SampleFormat::Pcm24 => {
                    let full = 2f64.powi(i32::from(spec.bits_per_sample) - 1);
                    let v = (x * full).round().clamp(-full, full - 1.0);
                    w.write_sample(v as i32)?
                }
            }
        }
    }
    w.finalize()?;
    Ok(())
}
