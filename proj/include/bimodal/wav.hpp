#pragma once

#include <string>
#include <vector>

namespace bimodal::wav {

struct WavData {
  std::vector<double> samples;  // in [-1, 1], one channel
  int sample_rate = 0;
};

// Reads a RIFF/WAVE file holding 16-bit PCM mono audio. Samples are mapped to
// doubles as value / 32768. Throws std::runtime_error on missing files or
// unsupported encodings, naming the path.
WavData read_wav(const std::string& path);

// Writes 16-bit PCM mono. Samples are quantized as round(x * 32768) clamped
// to the int16 range, so a signal already on the k/32768 grid round-trips
// exactly.
void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate);

// Quantizes a sample onto the PCM16 grid used by write_wav/read_wav.
double quantize_pcm16(double x);

}  // namespace bimodal::wav
