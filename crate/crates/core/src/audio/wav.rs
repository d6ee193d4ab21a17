use std::fs;
use std::io::{BufWriter, ErrorKind, Write};
use std::path::Path;

use super::{AudioClip, AudioError};

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SampleFormat {
    Int,
    Float,
}

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format: SampleFormat,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits_per_sample: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn corrupt(msg: impl Into<String>) -> AudioError {
    AudioError::CorruptHeader(msg.into())
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, AudioError> {
    if body.len() < 16 {
        return Err(corrupt(format!("fmt chunk too short ({} bytes)", body.len())));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let block_align = u16_at(body, 12);
    let bits_per_sample = u16_at(body, 14);

    if tag == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) subFormat GUID(16)
        if body.len() < 40 {
            return Err(corrupt("extensible fmt chunk too short"));
        }
        tag = u16_at(body, 24);
    }
    let format = match (tag, bits_per_sample) {
        (FORMAT_PCM, 8 | 16 | 24 | 32) => SampleFormat::Int,
        (FORMAT_IEEE_FLOAT, 32 | 64) => SampleFormat::Float,
        (FORMAT_PCM | FORMAT_IEEE_FLOAT, bits) => {
            return Err(AudioError::UnsupportedFormat(format!(
                "{bits}-bit samples with format tag {tag:#06x}"
            )))
        }
        (other, _) => {
            return Err(AudioError::UnsupportedFormat(format!(
                "non-PCM codec (format tag {other:#06x})"
            )))
        }
    };
    if !(1..=2).contains(&channels) {
        return Err(AudioError::UnsupportedFormat(format!(
            "{channels} channels (only mono and stereo are read)"
        )));
    }
    if sample_rate == 0 {
        return Err(corrupt("sample rate is zero"));
    }
    if block_align as u32 != channels as u32 * (bits_per_sample as u32 / 8) {
        return Err(corrupt(format!(
            "block align {block_align} inconsistent with {channels} x {bits_per_sample}-bit"
        )));
    }
    Ok(FmtChunk {
        format,
        channels,
        sample_rate,
        block_align,
        bits_per_sample,
    })
}

fn decode_sample(fmt: &FmtChunk, b: &[u8]) -> f64 {
    match (fmt.format, fmt.bits_per_sample) {
        (SampleFormat::Int, 8) => (b[0] as f64 - 128.0) / 128.0,
        (SampleFormat::Int, 16) => i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        (SampleFormat::Int, 24) => {
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        (SampleFormat::Int, 32) => {
            i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0
        }
        (SampleFormat::Float, 32) => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        (SampleFormat::Float, 64) => {
            f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]])
        }
        _ => unreachable!("format validated in parse_fmt"),
    }
}

fn decode(bytes: &[u8], source_id: String) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(corrupt("missing RIFF/WAVE signature"));
    }
    let riff_size = u32_at(bytes, 4) as u64;
    if riff_size + 8 != bytes.len() as u64 {
        return Err(corrupt(format!(
            "RIFF size {} does not match file length {}",
            riff_size + 8,
            bytes.len()
        )));
    }

    let mut fmt = None;
    let mut data = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| {
                corrupt(format!(
                    "chunk {:?} claims {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        match id {
            b"fmt " => fmt = Some(parse_fmt(&bytes[body_start..body_end])?),
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| corrupt("no fmt chunk"))?;
    let data = data.ok_or_else(|| corrupt("no data chunk"))?;
    let frame = fmt.block_align as usize;
    if data.len() % frame != 0 {
        return Err(corrupt(format!(
            "data length {} is not a multiple of the frame size {frame}",
            data.len()
        )));
    }

    let width = fmt.bits_per_sample as usize / 8;
    let channels = fmt.channels as usize;
    let samples: Vec<f64> = data
        .chunks_exact(frame)
        .map(|f| {
            let sum: f64 = (0..channels)
                .map(|c| decode_sample(&fmt, &f[c * width..(c + 1) * width]))
                .sum();
            sum / channels as f64
        })
        .collect();

    let clip = AudioClip::new(samples, fmt.sample_rate, source_id);
    clip.validate()?;
    Ok(clip)
}

/// Reads a PCM or float WAV file, downmixing stereo to mono.
///
/// The clip's `source_id` is the file stem.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => AudioError::FileNotFound(path.to_path_buf()),
        _ => AudioError::Io(e),
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode(&bytes, stem)
}

fn quantize(sample: f64) -> i16 {
    (sample.clamp(-1.0, 1.0) * 32768.0)
        .round()
        .clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Encodes a clip as a 16-bit PCM mono WAV byte buffer.
pub(crate) fn encode(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.samples.len() as u32 * 2;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &clip.samples {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    out
}

/// Writes a 16-bit PCM mono WAV at the clip's rate. Samples are clamped to `[-1, 1]`.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), AudioError> {
    clip.validate()?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&encode(clip))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds a WAV file by hand for formats `write_wav` never produces.
    fn build_wav(tag: u16, channels: u16, rate: u32, bits: u16, payload: &[u8]) -> Vec<u8> {
        let block = channels * bits / 8;
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + payload.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        out.extend_from_slice(&(rate * block as u32).to_le_bytes());
        out.extend_from_slice(&block.to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn one_second_16bit_at_44100() {
        let payload = vec![0u8; 44100 * 2];
        let clip = decode(&build_wav(1, 1, 44100, 16, &payload), "a".into()).unwrap();
        assert_eq!(clip.len(), 44100);
        assert_eq!(clip.sample_rate, 44100);
    }

    #[test]
    fn stereo_opposite_channels_average_to_zero() {
        let mut payload = Vec::new();
        for _ in 0..100 {
            payload.extend_from_slice(&0.5f32.to_le_bytes());
            payload.extend_from_slice(&(-0.5f32).to_le_bytes());
        }
        let clip = decode(&build_wav(3, 2, 16000, 32, &payload), "s".into()).unwrap();
        assert_eq!(clip.len(), 100);
        assert!(clip.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn eight_and_24_bit_scaling() {
        let clip = decode(&build_wav(1, 1, 8000, 8, &[0, 128, 255]), "e".into()).unwrap();
        assert_eq!(clip.samples, vec![-1.0, 0.0, 127.0 / 128.0]);

        let payload = [0x00, 0x00, 0x80, 0xff, 0xff, 0x7f];
        let clip = decode(&build_wav(1, 1, 8000, 24, &payload), "t".into()).unwrap();
        assert_eq!(clip.samples[0], -1.0);
        assert_eq!(clip.samples[1], 8_388_607.0 / 8_388_608.0);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let full = encode(&AudioClip::new(vec![0.25; 100], 16000, "x"));
        let cut = &full[..full.len() - 10];
        assert!(matches!(decode(cut, "x".into()), Err(AudioError::CorruptHeader(_))));
    }

    #[test]
    fn non_pcm_and_many_channels_unsupported() {
        let mp3ish = build_wav(0x0055, 1, 16000, 16, &[0, 0]);
        assert!(matches!(
            decode(&mp3ish, "m".into()),
            Err(AudioError::UnsupportedFormat(_))
        ));
        let quad = build_wav(1, 4, 16000, 16, &[0; 16]);
        assert!(matches!(
            decode(&quad, "q".into()),
            Err(AudioError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn quantize_clamps() {
        assert_eq!(quantize(1.5), i16::MAX);
        assert_eq!(quantize(1.0), i16::MAX);
        assert_eq!(quantize(-3.0), i16::MIN);
        assert_eq!(quantize(0.0), 0);
    }
}
