//! RIFF/WAVE PCM writer with pinned quantization.
//!
//! Little-endian integer PCM, interleaved channels. Quantization is
//! symmetric scaling (32767 for 16-bit, 8388607 for 24-bit) with
//! round-half-away-from-zero, so golden files are stable down to the bit.

use std::io::Write;
use std::path::Path;

use super::{MultiBuffer, RenderError};

/// Output sample width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Sixteen,
    TwentyFour,
}

impl BitDepth {
    fn bits(&self) -> u16 {
        match self {
            BitDepth::Sixteen => 16,
            BitDepth::TwentyFour => 24,
        }
    }

    fn bytes(&self) -> usize {
        self.bits() as usize / 8
    }
}

fn quantize(sample: f64, bit_depth: BitDepth) -> i32 {
    let scale = match bit_depth {
        BitDepth::Sixteen => 32767.0,
        BitDepth::TwentyFour => 8_388_607.0,
    };
    // f64::round rounds half away from zero.
    (sample.clamp(-1.0, 1.0) * scale).round() as i32
}

/// Encode a buffer as RIFF/WAVE PCM bytes.
pub fn wav_bytes(buffer: &MultiBuffer, bit_depth: BitDepth) -> Result<Vec<u8>, RenderError> {
    let channel_count = buffer.channel_count();
    if channel_count == 0 || channel_count > 8 {
        return Err(RenderError::BadChannelCount(channel_count));
    }
    let frames = buffer.frames();
    let bytes_per_sample = bit_depth.bytes();
    let block_align = channel_count * bytes_per_sample;
    let data_size = frames * block_align;
    let pad = data_size % 2;
    let riff_size = 36 + data_size + pad;

    let mut out = Vec::with_capacity(riff_size + 8);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(riff_size as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");

    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&(channel_count as u16).to_le_bytes());
    out.extend_from_slice(&buffer.sample_rate_hz().to_le_bytes());
    let byte_rate = buffer.sample_rate_hz() * block_align as u32;
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&bit_depth.bits().to_le_bytes());

    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_size as u32).to_le_bytes());
    for frame in 0..frames {
        for channel in buffer.channels() {
            let q = quantize(channel[frame], bit_depth);
            match bit_depth {
                BitDepth::Sixteen => out.extend_from_slice(&(q as i16).to_le_bytes()),
                BitDepth::TwentyFour => out.extend_from_slice(&q.to_le_bytes()[..3]),
            }
        }
    }
    if pad == 1 {
        out.push(0);
    }
    Ok(out)
}

/// Write a buffer to `path` as PCM WAV.
pub fn write_wav(
    buffer: &MultiBuffer,
    path: impl AsRef<Path>,
    bit_depth: BitDepth,
) -> Result<(), RenderError> {
    let path = path.as_ref();
    let bytes = wav_bytes(buffer, bit_depth)?;
    let io_err = |source| RenderError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(&bytes).map_err(io_err)?;
    Ok(())
}
