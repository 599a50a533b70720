#include "prism/io.hpp"

#include <bit>
#include <fstream>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace prism::io {

namespace {

using nlohmann::json;

void write_doubles(std::ofstream& f, const double* data, std::size_t count) {
    f.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

std::vector<double> read_doubles(const std::filesystem::path& p, std::size_t expect) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + p.string());
    std::vector<double> v(expect);
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(expect * sizeof(double)));
    if (static_cast<std::size_t>(f.gcount()) != expect * sizeof(double))
        throw std::runtime_error("short read from " + p.string());
    return v;
}

json load_json(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot open " + p.string());
    json j;
    f >> j;
    return j;
}

void save_json(const std::filesystem::path& p, const json& j) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
    f << j.dump(2) << '\n';
}

}  // namespace

void write_waveforms(const std::filesystem::path& bin_path,
                     const std::filesystem::path& json_path,
                     const std::vector<ComplexWaveform>& pols) {
    if (pols.empty()) throw std::invalid_argument("write_waveforms: no polarizations");
    const std::size_t n = pols[0].size();
    for (const auto& w : pols)
        if (w.size() != n) throw std::invalid_argument("write_waveforms: length mismatch");

    std::ofstream f(bin_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + bin_path.string() + " for writing");
    std::vector<double> buf(2 * n);
    for (const auto& w : pols) {
        for (std::size_t i = 0; i < n; ++i) {
            buf[2 * i] = w.samples[i].real();
            buf[2 * i + 1] = w.samples[i].imag();
        }
        write_doubles(f, buf.data(), buf.size());
    }
    json j{{"format", "prism-waveform-v1"},
           {"sample_rate", pols[0].sample_rate},
           {"center_wavelength", pols[0].center_wavelength},
           {"length", n},
           {"polarizations", pols.size()},
           {"encoding", "float64-le interleaved re,im per polarization, concatenated"}};
    save_json(json_path, j);
}

std::vector<ComplexWaveform> read_waveforms(const std::filesystem::path& bin_path,
                                            const std::filesystem::path& json_path) {
    const json j = load_json(json_path);
    const auto n = j.at("length").get<std::size_t>();
    const auto npol = j.at("polarizations").get<std::size_t>();
    const auto raw = read_doubles(bin_path, 2 * n * npol);
    std::vector<ComplexWaveform> pols(npol);
    for (std::size_t p = 0; p < npol; ++p) {
        auto& w = pols[p];
        w.sample_rate = j.at("sample_rate").get<double>();
        w.center_wavelength = j.value("center_wavelength", kDefaultWavelength);
        w.samples.resize(n);
        const double* base = raw.data() + 2 * n * p;
        for (std::size_t i = 0; i < n; ++i) w.samples[i] = {base[2 * i], base[2 * i + 1]};
    }
    return pols;
}

void write_intensity(const std::filesystem::path& bin_path, const IntensityTrace& t) {
    std::ofstream f(bin_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + bin_path.string() + " for writing");
    write_doubles(f, t.samples.data(), t.samples.size());
}

IntensityTrace read_intensity(const std::filesystem::path& bin_path,
                              const std::filesystem::path& json_path) {
    const json j = load_json(json_path);
    IntensityTrace t;
    t.sample_rate = j.at("sample_rate").get<double>();
    t.samples = read_doubles(bin_path, j.at("length").get<std::size_t>());
    return t;
}

void write_trace_meta(const std::filesystem::path& json_path, double sample_rate,
                      std::size_t length, double center_wavelength) {
    save_json(json_path, json{{"format", "prism-intensity-v1"},
                              {"sample_rate", sample_rate},
                              {"length", length},
                              {"center_wavelength", center_wavelength},
                              {"encoding", "float64-le"}});
}

void write_channel_estimate(const std::filesystem::path& json_path,
                            const std::filesystem::path& bin_path,
                            const ChannelMatrixEstimate& est) {
    std::ofstream f(bin_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + bin_path.string() + " for writing");
    std::vector<double> buf;
    buf.reserve(est.h_pm.size() * 8);
    for (const auto& j : est.h_pm)
        for (const auto& v : j.m) {
            buf.push_back(v.real());
            buf.push_back(v.imag());
        }
    write_doubles(f, buf.data(), buf.size());
    save_json(json_path,
              json{{"format", "prism-channel-estimate-v1"},
                   {"taps", est.h_pm.size()},
                   {"tap_offset", est.tap_offset},
                   {"baud_rate", est.baud_rate},
                   {"link_cd_ps_per_nm", est.link_cd.total_ps_per_nm},
                   {"center_wavelength", est.link_cd.center_wavelength},
                   {"pdl_db", est.pdl_db},
                   {"iteration", est.iteration},
                   {"encoding", "float64-le re,im row-major 2x2 per tap"}});
}

ChannelMatrixEstimate read_channel_estimate(const std::filesystem::path& json_path,
                                            const std::filesystem::path& bin_path) {
    const json j = load_json(json_path);
    ChannelMatrixEstimate est;
    const auto taps = j.at("taps").get<std::size_t>();
    est.tap_offset = j.at("tap_offset").get<std::size_t>();
    est.baud_rate = j.at("baud_rate").get<double>();
    est.link_cd = DispersionOperator{j.at("link_cd_ps_per_nm").get<double>(),
                                     j.value("center_wavelength", kDefaultWavelength)};
    est.pdl_db = j.value("pdl_db", 0.0);
    est.iteration = j.value("iteration", 0);
    const auto raw = read_doubles(bin_path, taps * 8);
    est.h_pm.resize(taps);
    for (std::size_t t = 0; t < taps; ++t)
        for (int i = 0; i < 4; ++i)
            est.h_pm[t].m[i] = {raw[t * 8 + 2 * i], raw[t * 8 + 2 * i + 1]};
    return est;
}

}  // namespace prism::io
