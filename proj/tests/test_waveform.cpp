#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "prism/constellation.hpp"
#include "prism/fft.hpp"
#include "prism/framing.hpp"
#include "prism/rng.hpp"

using namespace prism;

namespace {

std::vector<std::uint8_t> random_bits(Rng& rng, std::size_t n) {
    std::vector<std::uint8_t> b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng.bit());
    return b;
}

}  // namespace

TEST_CASE("qpsk gray anchor: 00 maps to (1+j)/sqrt(2)") {
    const auto c = Constellation::make(Modulation::QPSK);
    const auto s = c.map_bits({0, 0});
    CHECK(s[0].real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(s[0].imag() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("constellations have unit average power and gray adjacency") {
    for (auto m : {Modulation::QPSK, Modulation::QAM16, Modulation::QAM64}) {
        const auto c = Constellation::make(m);
        double p = 0.0;
        for (const auto& pt : c.points()) p += std::norm(pt);
        p /= static_cast<double>(c.points().size());
        CHECK(p == doctest::Approx(1.0).epsilon(1e-12));

        // nearest neighbors differ in exactly one bit
        const auto& pts = c.points();
        double dmin = 1e9;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                dmin = std::min(dmin, std::abs(pts[i] - pts[j]));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                if (std::abs(pts[i] - pts[j]) < dmin * 1.001) {
                    const auto x = static_cast<std::uint32_t>(i ^ j);
                    CHECK(std::popcount(x) == 1);
                }
            }
        }
    }
}

TEST_CASE("qam16 exhaustive: 16 distinct points, mean power one") {
    const auto c = Constellation::make(Modulation::QAM16);
    std::vector<cplx> seen;
    for (std::uint32_t b = 0; b < 16; ++b) {
        const cplx pt = c.point(b);
        for (const auto& o : seen) CHECK(std::abs(pt - o) > 1e-9);
        seen.push_back(pt);
    }
}

TEST_CASE("map/demap round trip on random bits") {
    Rng rng(7);
    for (auto m : {Modulation::QPSK, Modulation::QAM16, Modulation::QAM64}) {
        const auto c = Constellation::make(m);
        const auto bits = random_bits(rng, 6000 - 6000 % c.bits_per_symbol());
        const auto syms = c.map_bits(bits);
        const auto back = c.demap(syms);
        REQUIRE(back.size() == bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) REQUIRE(back[i] == bits[i]);
    }
}

TEST_CASE("map_bits rejects non-divisible length") {
    const auto c = Constellation::make(Modulation::QAM16);
    CHECK_THROWS_AS((void)c.map_bits({1, 0, 1}), std::invalid_argument);
}

TEST_CASE("raised cosine pulse is ISI free at symbol instants") {
    FrameSpec spec;
    spec.n_payload_symbols = 64;
    spec.pilot_overhead = 0.0;
    std::vector<cplx> symbols(64, cplx{0.0, 0.0});
    symbols[32] = 1.0;
    const auto w = shape_pulse(symbols, spec);
    for (std::size_t k = 0; k < 64; ++k) {
        const double v = std::abs(w.samples[2 * k]);
        if (k == 32)
            CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
        else
            CHECK(v < 1e-10);
    }
}

TEST_CASE("pulse shaping is band limited with deep stopband") {
    FrameSpec spec;
    spec.n_payload_symbols = 2048;
    spec.pilot_overhead = 0.0;
    Rng rng(3);
    const auto c = Constellation::make(Modulation::QPSK);
    const auto f = build_frame(11, spec, c);
    auto w = shape_pulse(f.symbols, spec);

    auto spec_v = w.samples;
    fft::forward(spec_v);
    const double edge = (1.0 + spec.rolloff) * spec.baud_rate / 2.0;
    double in_band = 0.0, out_band = 0.0;
    for (std::size_t k = 0; k < spec_v.size(); ++k) {
        const double fr = std::abs(fft::bin_frequency(k, spec_v.size(), w.sample_rate));
        if (fr <= edge)
            in_band += std::norm(spec_v[k]);
        else
            out_band += std::norm(spec_v[k]);
    }
    CHECK(out_band < in_band * 1e-4);  // < -40 dB
    CHECK(in_band > 0.0);
}

TEST_CASE("pulse shaping is linear") {
    FrameSpec spec;
    spec.n_payload_symbols = 128;
    spec.pilot_overhead = 0.0;
    Rng rng(5);
    std::vector<cplx> x(128), y(128);
    for (auto& v : x) v = rng.cnormal();
    for (auto& v : y) v = rng.cnormal();
    const cplx a{1.7, -0.3}, b{-0.4, 2.2};
    std::vector<cplx> lin(128);
    for (std::size_t i = 0; i < 128; ++i) lin[i] = a * x[i] + b * y[i];
    const auto wx = shape_pulse(x, spec);
    const auto wy = shape_pulse(y, spec);
    const auto wl = shape_pulse(lin, spec);
    for (std::size_t i = 0; i < wl.size(); ++i)
        CHECK(std::abs(wl.samples[i] - (a * wx.samples[i] + b * wy.samples[i])) < 1e-10);
}

TEST_CASE("frame pilots: spacing and determinism") {
    const auto c = Constellation::make(Modulation::QPSK);
    FrameSpec spec;
    spec.n_payload_symbols = 100;

    SUBCASE("overhead 0.2 puts a pilot on every 5th payload symbol") {
        spec.pilot_overhead = 0.2;
        const auto pos = spec.pilot_positions();
        REQUIRE(pos.size() == 20);
        for (std::size_t i = 0; i < pos.size(); ++i) CHECK(pos[i] == 5 * i);
    }
    SUBCASE("overhead 0.1 puts a pilot on every 10th payload symbol") {
        spec.pilot_overhead = 0.1;
        const auto pos = spec.pilot_positions();
        REQUIRE(pos.size() == 10);
        for (std::size_t i = 0; i < pos.size(); ++i) CHECK(pos[i] == 10 * i);
    }
    SUBCASE("64 symbols with every 8th a pilot gives 8 pilots") {
        spec.n_payload_symbols = 64;
        spec.pilot_overhead = 1.0 / 8.0;
        CHECK(spec.pilot_positions().size() == 8);
    }
    SUBCASE("same seed gives bit-identical frames") {
        spec.pilot_overhead = 0.2;
        const auto f1 = build_frame(42, spec, c);
        const auto f2 = build_frame(42, spec, c);
        REQUIRE(f1.symbols.size() == f2.symbols.size());
        for (std::size_t i = 0; i < f1.symbols.size(); ++i)
            CHECK(f1.symbols[i] == f2.symbols[i]);
        CHECK(f1.bit_truth == f2.bit_truth);
        const auto f3 = build_frame(43, spec, c);
        bool same = true;
        for (std::size_t i = 0; i < f1.symbols.size(); ++i)
            same = same && f1.symbols[i] == f3.symbols[i];
        CHECK_FALSE(same);
    }
}

TEST_CASE("pilots land inside the payload, not the training block") {
    const auto c = Constellation::make(Modulation::QPSK);
    FrameSpec spec;
    spec.n_training_symbols = 50;
    spec.n_payload_symbols = 100;
    spec.pilot_overhead = 0.2;
    const auto f = build_frame(1, spec, c);
    for (std::size_t i = 0; i < 50; ++i) CHECK_FALSE(f.pilot_mask[i]);
    CHECK(f.pilot_mask[50]);
    CHECK(f.pilot_frame_indices().size() == 20);
}
