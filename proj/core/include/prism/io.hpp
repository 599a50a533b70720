#ifndef PRISM_IO_HPP
#define PRISM_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "prism/pol_rx.hpp"
#include "prism/types.hpp"

namespace prism::io {

/// Waveform bundle: JSON sidecar (sample_rate, wavelength, length,
/// polarization count) plus binary little-endian float64 interleaved
/// (re, im) per polarization, concatenated.
void write_waveforms(const std::filesystem::path& bin_path,
                     const std::filesystem::path& json_path,
                     const std::vector<ComplexWaveform>& pols);

std::vector<ComplexWaveform> read_waveforms(const std::filesystem::path& bin_path,
                                            const std::filesystem::path& json_path);

/// Intensity traces: raw little-endian float64 samples; the sidecar carries
/// sample_rate and length (shared by all traces it describes).
void write_intensity(const std::filesystem::path& bin_path, const IntensityTrace& t);
IntensityTrace read_intensity(const std::filesystem::path& bin_path,
                              const std::filesystem::path& json_path);

void write_trace_meta(const std::filesystem::path& json_path, double sample_rate,
                      std::size_t length, double center_wavelength = kDefaultWavelength);

/// Channel estimate: JSON header plus binary taps (float64 interleaved
/// re, im, row-major 2x2 per tap).
void write_channel_estimate(const std::filesystem::path& json_path,
                            const std::filesystem::path& bin_path,
                            const ChannelMatrixEstimate& est);
ChannelMatrixEstimate read_channel_estimate(const std::filesystem::path& json_path,
                                            const std::filesystem::path& bin_path);

}  // namespace prism::io

#endif
