//! Deterministic signal generators backing the mock generation service.

use super::AudioClip;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub const GENERATED_RATE: u32 = 16000;
pub const GENERATED_SECONDS: f64 = 2.0;
const DECAY_SECS: f64 = 0.4;
const PEAK: f64 = 0.8;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Partial frequencies (Hz) for a seed: `100 + byte_i mod 1900` over the
/// first three little-endian bytes.
pub fn partial_frequencies(seed: u64) -> [f64; 3] {
    let b = seed.to_le_bytes();
    [0, 1, 2].map(|i| 100.0 + (b[i] as u64 % 1900) as f64)
}

fn to_pcm(signal: &[f64], peak: f64) -> Vec<i16> {
    let max = signal.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gain = if max > 0.0 { peak / max } else { 0.0 };
    signal
        .iter()
        .map(|x| (x * gain).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16)
        .collect()
}

/// Sum of three exponentially decaying sines seeded by `text`,
/// peak-normalized to 0.8 of full scale.
pub fn synth_partials(text: &str, seconds: f64, sample_rate: u32) -> AudioClip {
    let freqs = partial_frequencies(fnv1a64(text.as_bytes()));
    let n = (seconds * sample_rate as f64).round().max(1.0) as usize;
    let rate = sample_rate as f64;
    let signal: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            let env = (-t / DECAY_SECS).exp();
            freqs
                .iter()
                .map(|f| (2.0 * std::f64::consts::PI * f * t).sin())
                .sum::<f64>()
                * env
        })
        .collect();
    AudioClip::new(sample_rate, to_pcm(&signal, PEAK * i16::MAX as f64))
        .expect("rate is supported and n >= 1")
}

/// Mock text-to-audio: 2.0 s at 16 kHz.
pub fn mock_generate(prompt: &str) -> AudioClip {
    synth_partials(prompt, GENERATED_SECONDS, GENERATED_RATE)
}

/// Low-pass cutoff (Hz) for a transfer prompt.
pub fn transfer_cutoff(prompt: &str) -> f64 {
    500.0 + (fnv1a64(prompt.as_bytes()) % 5500) as f64
}

/// Mock style transfer: one-pole low-pass at [`transfer_cutoff`], rescaled
/// to the seed's peak. Length and sample rate are preserved.
pub fn mock_transfer(seed: &AudioClip, prompt: &str) -> AudioClip {
    let rate = seed.sample_rate() as f64;
    let alpha = 1.0 - (-2.0 * std::f64::consts::PI * transfer_cutoff(prompt) / rate).exp();
    let mut y = 0.0;
    let filtered: Vec<f64> = seed
        .samples()
        .iter()
        .map(|&x| {
            y += alpha * (x as f64 - y);
            y
        })
        .collect();
    AudioClip::new(seed.sample_rate(), to_pcm(&filtered, seed.peak() as f64))
        .expect("seed is a valid clip")
}
