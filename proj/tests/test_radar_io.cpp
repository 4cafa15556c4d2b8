#include <gtest/gtest.h>

#include <filesystem>
#include <cstring>
#include <random>
#include <string>

#include "radhar/radar_io.hpp"
#include "radhar/synth.hpp"

using namespace radhar;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

EchoMatrix ramp_echo(std::size_t chirps, const RadarParams& p) {
  EchoMatrix e{p, Matrix<cdouble>(chirps, p.samples_per_chirp)};
  for (std::size_t i = 0; i < e.data.size(); ++i)
    e.data.values()[i] = {0.25 * static_cast<double>(i) - 3.0, -1.0 / (1.0 + static_cast<double>(i))};
  return e;
}

std::string ascii_with_entries(std::size_t n) {
  std::string s = "5.8e9\n1e-3\n128\n4e8\n";
  for (std::size_t i = 0; i < n; ++i) s += std::to_string(i) + "+" + std::to_string(i % 7) + "i\n";
  return s;
}

}  // namespace

TEST(RadarParams, DerivedConstantsForNominalSetup) {
  const RadarParams p = nominal_params();
  EXPECT_DOUBLE_EQ(p.chirp_slope(), 4.0e11);
  EXPECT_NEAR(p.wavelength_m(), 0.05169, 5e-6);
  EXPECT_DOUBLE_EQ(p.sample_rate_hz(), 128000.0);
}

TEST(ParseDat, ExactDivision) {
  const auto r = parse_dat(bytes_of(ascii_with_entries(256)));
  EXPECT_EQ(r.echo.chirps(), 2u);
  EXPECT_EQ(r.echo.samples(), 128u);
  EXPECT_EQ(r.discarded_entries, 0u);
  EXPECT_EQ(r.echo.params, nominal_params());
}

TEST(ParseDat, TrailingPartialChirpDropped) {
  const auto r = parse_dat(bytes_of(ascii_with_entries(300)));
  EXPECT_EQ(r.echo.chirps(), 2u);
  EXPECT_EQ(r.discarded_entries, 44u);
}

TEST(ParseDat, ReshapeIsRowMajor) {
  const auto r = parse_dat(bytes_of(ascii_with_entries(256)));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t m = 0; m < 128; ++m) {
      const std::size_t k = n * 128 + m;
      EXPECT_EQ(r.echo.data(n, m), cdouble(static_cast<double>(k), static_cast<double>(k % 7)));
    }
}

TEST(ParseDat, ComplexSpellings) {
  const std::string s = "1\n1\n4\n1\n1.5-2.5i\n-3e-2+4E+1j\n7\n-2i\n";
  const auto r = parse_dat(bytes_of(s));
  EXPECT_EQ(r.echo.data(0, 0), cdouble(1.5, -2.5));
  EXPECT_EQ(r.echo.data(0, 1), cdouble(-3e-2, 40.0));
  EXPECT_EQ(r.echo.data(0, 2), cdouble(7.0, 0.0));
  EXPECT_EQ(r.echo.data(0, 3), cdouble(0.0, -2.0));
}

TEST(ParseDat, Errors) {
  auto code_of = [](const std::string& s) {
    try {
      parse_dat(bytes_of(s));
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  EXPECT_EQ(code_of("5.8e9\n1e-3\n128\n"), Errc::TruncatedHeader);
  EXPECT_EQ(code_of("5.8e9\n-1e-3\n128\n4e8\n1\n"), Errc::NonPositiveParam);
  EXPECT_EQ(code_of("5.8e9\n1e-3\n0\n4e8\n1\n"), Errc::NonPositiveParam);
  EXPECT_EQ(code_of("5.8e9\n1e-3\n128\n4e8\n1+1i\n"), Errc::EmptyPayload);
  EXPECT_EQ(code_of("5.8e9\n1e-3\n128\n4e8\nabc\n"), Errc::MalformedEntry);
  EXPECT_EQ(code_of("5.8e9\n1e-3\n12.5\n4e8\n1\n"), Errc::MalformedEntry);
}

TEST(DatRoundTrip, AsciiTwoByOneTwentyEight) {
  const auto p = nominal_params();
  const auto e = ramp_echo(2, p);
  const auto bytes = write_dat(p, e);
  const auto back = parse_dat(bytes);
  EXPECT_EQ(back.echo, e);
  EXPECT_EQ(write_dat(back.echo.params, back.echo), bytes);
}

TEST(DatRoundTrip, OneByOne) {
  const RadarParams p{77e9, 5e-5, 1, 1e9};
  EchoMatrix e{p, Matrix<cdouble>(1, 1, cdouble(-0.0, -0.0))};
  for (auto codec : {DatCodec::Ascii, DatCodec::Binary}) {
    const auto bytes = codec == DatCodec::Binary ? write_datb(p, e) : write_dat(p, e);
    const auto back = parse(bytes, codec);
    EXPECT_EQ(back.echo, e);
    EXPECT_TRUE(std::signbit(back.echo.data(0, 0).imag()));
    EXPECT_EQ(codec == DatCodec::Binary ? write_datb(p, back.echo) : write_dat(p, back.echo), bytes);
  }
}

TEST(DatRoundTrip, SynthFallScenarioBothCodecs) {
  const auto scene = synth::activity_template(synth::Activity::Fall, 7);
  const auto e = synth::generate(scene, nominal_params());
  const auto ascii = parse_dat(write_dat(e.params, e));
  const auto binary = parse_datb(write_datb(e.params, e));
  EXPECT_EQ(ascii.echo, e);
  EXPECT_EQ(binary.echo, e);
}

// Property: random finite matrices survive both codecs bit-exactly.
TEST(DatRoundTrip, RandomMatricesProperty) {
  std::mt19937_64 gen(42);
  std::uniform_int_distribution<int> dims(1, 9);
  std::uniform_int_distribution<std::uint64_t> raw;
  for (int trial = 0; trial < 50; ++trial) {
    RadarParams p{1e9 + trial, 1e-3, static_cast<std::size_t>(dims(gen)), 2e8};
    EchoMatrix e{p, Matrix<cdouble>(static_cast<std::size_t>(dims(gen)), p.samples_per_chirp)};
    for (auto& v : e.data.values()) {
      double re, im;
      do {
        std::uint64_t a = raw(gen), b = raw(gen);
        std::memcpy(&re, &a, 8);
        std::memcpy(&im, &b, 8);
      } while (!std::isfinite(re) || !std::isfinite(im));
      v = {re, im};
    }
    EXPECT_EQ(parse_dat(write_dat(p, e)).echo, e);
    EXPECT_EQ(parse_datb(write_datb(p, e)).echo, e);
  }
}

TEST(WriteDat, ShapeMismatch) {
  auto p = nominal_params();
  EchoMatrix e{p, Matrix<cdouble>(2, 64)};
  EXPECT_THROW(
      {
        try {
          write_dat(p, e);
        } catch (const Error& err) {
          EXPECT_EQ(err.code(), Errc::ShapeMismatch);
          throw;
        }
      },
      Error);
}

TEST(ParseDatb, HeaderErrors) {
  const auto p = nominal_params();
  auto bytes = write_datb(p, ramp_echo(1, p));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(parse_datb(bad), Error);
  auto ver = bytes;
  ver[4] = 2;
  try {
    parse_datb(ver);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnsupportedVersion);
  }
  std::vector<std::uint8_t> shortb(bytes.begin(), bytes.begin() + 20);
  try {
    parse_datb(shortb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TruncatedHeader);
  }
}

// The parsers only ever throw radhar::Error on arbitrary input.
TEST(Parsers, ArbitraryBytesYieldTypedErrors) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> len(0, 400);
  std::uniform_int_distribution<int> byte(0, 255);
  const std::string alphabet = "0123456789+-.eEij \n\tnaf";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(len(gen)));
    const bool texty = trial % 2 == 0;
    for (auto& b : buf) b = texty ? static_cast<std::uint8_t>(alphabet[pick(gen)]) : static_cast<std::uint8_t>(byte(gen));
    if (trial % 3 == 0 && buf.size() >= 4) std::copy(detail::kMagic.begin(), detail::kMagic.end(), buf.begin());
    for (auto codec : {DatCodec::Ascii, DatCodec::Binary}) {
      try {
        const auto r = parse(buf, codec);
        EXPECT_GE(r.echo.chirps(), 1u);
      } catch (const Error&) {
      }
    }
  }
}

TEST(RecordingFiles, ExtensionSelectsCodec) {
  const auto dir = std::filesystem::temp_directory_path() / "radhar_io_test";
  std::filesystem::create_directories(dir);
  const auto p = nominal_params();
  const auto e = ramp_echo(3, p);
  write_recording(dir / "a.dat", e);
  write_recording(dir / "a.datb", e);
  EXPECT_EQ(read_recording(dir / "a.dat").echo, e);
  EXPECT_EQ(read_recording(dir / "a.datb").echo, e);
  const auto head = read_bytes(dir / "a.datb");
  EXPECT_EQ(std::string(head.begin(), head.begin() + 4), "FMCW");
  std::filesystem::remove_all(dir);
}
