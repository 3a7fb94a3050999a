// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <string>
#include <vector>

#include "isax/grid.hpp"

namespace isax {

struct AudioClip {
  long sample_rate = 0;
  std::vector<double> samples;  // mono, in [-1, 1]
};

struct LmsSequence {
  ValueGrid frames;  // T x n_mels log energies
  double window_ms = 25.0;
  double hop_ms = 10.0;
  long n_mels = 80;
};

// PCM 16-bit RIFF/WAVE; stereo is averaged to mono, samples scaled by
// 1/32768. Compressed or float formats raise SpecError; truncated files
// raise Error.
AudioClip read_wav(const std::string& path);

// Hann-windowed power spectrum -> mel filterbank (0 Hz to Nyquist) ->
// natural log with a floor. T = 1 + floor((len - window) / hop).
LmsSequence log_mel(const AudioClip& clip, double window_ms = 25.0, double hop_ms = 10.0,
                    long n_mels = 80, double floor = 1e-10);

// HTK mel scale helpers, exposed for tests.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Binary export: little-endian header {T, bins, hop_ms, window_ms} as
// int64/int64/float64/float64 followed by T*bins float64 values.
void write_lms_binary(const LmsSequence& lms, const std::string& path);

}  // namespace isax
