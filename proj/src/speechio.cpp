// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/speechio.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "isax/error.hpp"

namespace isax {

namespace {

struct Reader {
  std::vector<char> bytes;
  std::size_t pos = 0;

  explicit Reader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size())
      throw Error(std::string("truncated WAV file while reading ") + what);
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v;
    std::memcpy(&v, bytes.data() + pos, 2);
    pos += 2;
    return v;
  }

  std::string tag() {
    need(4, "chunk tag");
    std::string t(bytes.data() + pos, 4);
    pos += 4;
    return t;
  }
};

// Iterative radix-2 FFT; n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

AudioClip read_wav(const std::string& path) {
  Reader r(path);
  if (r.tag() != "RIFF") throw Error("not a RIFF file: " + path);
  r.u32("RIFF size");
  if (r.tag() != "WAVE") throw Error("not a WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  while (r.pos + 8 <= r.bytes.size()) {
    const std::string chunk = r.tag();
    const std::uint32_t size = r.u32("chunk size");
    if (chunk == "fmt ") {
      if (size < 16) throw Error("malformed fmt chunk");
      format = r.u16("format");
      channels = r.u16("channels");
      rate = r.u32("sample rate");
      r.u32("byte rate");
      r.u16("block align");
      bits = r.u16("bits per sample");
      r.pos += size - 16;
      have_fmt = true;
    } else if (chunk == "data") {
      if (!have_fmt) throw Error("data chunk before fmt chunk");
      if (format != 1)
        throw SpecError("unsupported WAV format " + std::to_string(format) +
                        " (only 16-bit PCM is supported)");
      if (bits != 16)
        throw SpecError("unsupported bit depth " + std::to_string(bits) +
                        " (only 16-bit PCM is supported)");
      if (channels != 1 && channels != 2)
        throw SpecError("unsupported channel count " + std::to_string(channels));
      r.need(size, "sample data");
      const std::size_t frames = size / (2u * channels);
      AudioClip clip;
      clip.sample_rate = static_cast<long>(rate);
      clip.samples.resize(frames);
      const char* base = r.bytes.data() + r.pos;
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t ch = 0; ch < channels; ++ch) {
          std::int16_t s;
          std::memcpy(&s, base + 2 * (i * channels + ch), 2);
          acc += static_cast<double>(s);
        }
        clip.samples[i] = acc / (32768.0 * channels);
      }
      if (clip.sample_rate <= 0) throw Error("bad sample rate in WAV header");
      return clip;
    } else {
      r.need(size, "chunk body");
      r.pos += size + (size % 2);  // chunks are word-aligned
    }
  }
  throw Error("no data chunk found (header-only or truncated file): " + path);
}

LmsSequence log_mel(const AudioClip& clip, double window_ms, double hop_ms, long n_mels,
                    double floor) {
  if (clip.sample_rate <= 0) throw SpecError("log_mel: clip has no sample rate");
  const long window = static_cast<long>(std::lround(window_ms * 1e-3 * clip.sample_rate));
  const long hop = static_cast<long>(std::lround(hop_ms * 1e-3 * clip.sample_rate));
  if (window < 2 || hop < 1) throw SpecError("log_mel: window/hop too small");
  const long len = static_cast<long>(clip.samples.size());
  if (len < window)
    throw SpecError("log_mel: clip shorter than one window (" + std::to_string(len) +
                    " < " + std::to_string(window) + " samples)");
  const long T = 1 + (len - window) / hop;
  const std::size_t nfft = next_pow2(static_cast<std::size_t>(window));
  const long bins = static_cast<long>(nfft / 2 + 1);

  // Periodic Hann window.
  std::vector<double> hann(static_cast<std::size_t>(window));
  for (long i = 0; i < window; ++i)
    hann[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(window));

  // Triangular mel filters between 0 Hz and Nyquist.
  const double nyquist = clip.sample_rate / 2.0;
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  const double mel_hi = hz_to_mel(nyquist);
  for (long i = 0; i < n_mels + 2; ++i)
    edges[static_cast<std::size_t>(i)] =
        mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  const double hz_per_bin = static_cast<double>(clip.sample_rate) / static_cast<double>(nfft);

  LmsSequence out;
  out.window_ms = window_ms;
  out.hop_ms = hop_ms;
  out.n_mels = n_mels;
  out.frames = ValueGrid::matrix(T, n_mels);

  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> power(static_cast<std::size_t>(bins));
  for (long t = 0; t < T; ++t) {
    const long off = t * hop;
    for (std::size_t i = 0; i < nfft; ++i) {
      const long src = off + static_cast<long>(i);
      buf[i] = (static_cast<long>(i) < window)
                   ? clip.samples[static_cast<std::size_t>(src)] * hann[i]
                   : 0.0;
    }
    fft_inplace(buf);
    for (long b = 0; b < bins; ++b) power[static_cast<std::size_t>(b)] = std::norm(buf[static_cast<std::size_t>(b)]);

    for (long m = 0; m < n_mels; ++m) {
      const double lo = edges[static_cast<std::size_t>(m)];
      const double mid = edges[static_cast<std::size_t>(m + 1)];
      const double hi = edges[static_cast<std::size_t>(m + 2)];
      double energy = 0.0;
      for (long b = 0; b < bins; ++b) {
        const double f = b * hz_per_bin;
        if (f <= lo || f >= hi) continue;
        const double w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
        energy += w * power[static_cast<std::size_t>(b)];
      }
      out.frames.at(t, m) = std::log(std::max(energy, floor));
    }
  }
  return out;
}

void write_lms_binary(const LmsSequence& lms, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  const std::int64_t T = lms.frames.rows();
  const std::int64_t bins = lms.frames.cols();
  out.write(reinterpret_cast<const char*>(&T), 8);
  out.write(reinterpret_cast<const char*>(&bins), 8);
  out.write(reinterpret_cast<const char*>(&lms.hop_ms), 8);
  out.write(reinterpret_cast<const char*>(&lms.window_ms), 8);
  out.write(reinterpret_cast<const char*>(lms.frames.data().data()),
            static_cast<std::streamsize>(sizeof(double) * lms.frames.data().size()));
  if (!out) throw Error("write failure: " + path);
}

}  // namespace isax
