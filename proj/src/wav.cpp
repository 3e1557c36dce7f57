#include "bimodal/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace bimodal::wav {

namespace {

void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

double quantize_pcm16(double x) {
  long v = std::lround(x * 32768.0);
  if (v > 32767) v = 32767;
  if (v < -32768) v = -32768;
  return static_cast<double>(v) / 32768.0;
}

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    throw std::runtime_error("read_wav: '" + path + "' is not a RIFF/WAVE file");

  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  size_t pos = 12;
  int sample_rate = 0;
  uint16_t channels = 0, bits = 0, format = 0;
  bool have_fmt = false;
  WavData out;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const uint32_t size = get_u32(data + pos + 4);
    pos += 8;
    if (pos + size > bytes.size())
      throw std::runtime_error("read_wav: truncated chunk in '" + path + "'");
    if (id == "fmt ") {
      if (size < 16) throw std::runtime_error("read_wav: bad fmt chunk in '" + path + "'");
      format = get_u16(data + pos);
      channels = get_u16(data + pos + 2);
      sample_rate = static_cast<int>(get_u32(data + pos + 4));
      bits = get_u16(data + pos + 14);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error("read_wav: data before fmt in '" + path + "'");
      if (format != 1 || channels != 1 || bits != 16)
        throw std::runtime_error("read_wav: '" + path + "' is not PCM16 mono");
      const size_t n = size / 2;
      out.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const auto raw = static_cast<int16_t>(get_u16(data + pos + 2 * i));
        out.samples[i] = static_cast<double>(raw) / 32768.0;
      }
    }
    pos += size + (size & 1);  // chunks are word-aligned
  }
  if (!have_fmt) throw std::runtime_error("read_wav: no fmt chunk in '" + path + "'");
  out.sample_rate = sample_rate;
  return out;
}

void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate) {
  if (sample_rate <= 0) throw std::invalid_argument("write_wav: sample_rate must be positive");
  std::string payload;
  payload.reserve(samples.size() * 2);
  for (double x : samples) {
    long v = std::lround(x * 32768.0);
    if (v > 32767) v = 32767;
    if (v < -32768) v = -32768;
    put_u16(payload, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }

  std::string out;
  out.reserve(44 + payload.size());
  out += "RIFF";
  put_u32(out, static_cast<uint32_t>(36 + payload.size()));
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(sample_rate));
  put_u32(out, static_cast<uint32_t>(sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, static_cast<uint32_t>(payload.size()));
  out += payload;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_wav: cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_wav: write failed for '" + path + "'");
}

}  // namespace bimodal::wav
