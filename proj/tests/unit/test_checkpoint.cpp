#include "doctest.h"

#include "sgdlab/checkpoint.hpp"
#include "sgdlab/errors.hpp"

#include <cstring>
#include <filesystem>
#include <limits>
#include <string>

using namespace sgdlab;

namespace {

Checkpoint sample() {
  const MlpSpec spec{1, {}, 2};
  Weights w = init_weights(spec, 4);
  w.layers[0].weight(0, 0) = -0.0;
  w.layers[0].bias[1] = std::numeric_limits<double>::denorm_min();
  Checkpoint c = make_checkpoint(spec, w, 0xdeadbeefcafef00dull);
  c.created = "2026-01-01T00:00:00Z";
  return c;
}

CheckpointErrorKind kind_of(std::span<const std::uint8_t> bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.kind;
  }
  FAIL("decode succeeded");
  return CheckpointErrorKind::BadHeader;
}

std::vector<std::uint8_t> edit_header(std::vector<std::uint8_t> bytes, const std::string& from, const std::string& to) {
  std::string s(bytes.begin(), bytes.end());
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  s.replace(pos, from.size(), to);
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("bitwise round trip") {
  const Checkpoint c = sample();
  const auto bytes = encode_checkpoint(c);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back == c);
  CHECK(std::signbit(back.params[0]));
  CHECK(back.weights().flatten() == c.params);
  CHECK(back.weights().provenance == Provenance::RandomInit);
  CHECK(encode_checkpoint(back) == bytes);

  const auto file = std::filesystem::temp_directory_path() / "sgdlab-unit.ckpt";
  save_checkpoint(c, file);
  CHECK(load_checkpoint(file) == c);
  std::filesystem::remove(file);
  CHECK_THROWS_AS(load_checkpoint(file), IoError);
}

TEST_CASE("payload is little-endian float64 after two lines") {
  Checkpoint c = sample();
  c.params = {1.0, 2.0, -3.5, 0.25};
  const auto bytes = encode_checkpoint(c);
  const std::string s(bytes.begin(), bytes.end());
  CHECK(s.rfind("sgdlab-checkpoint\n", 0) == 0);
  const auto nl = s.find('\n', 18);
  REQUIRE(nl != std::string::npos);
  CHECK(bytes.size() == nl + 1 + 4 * 8);
  // 1.0 = 0x3FF0000000000000
  const std::uint8_t one[8] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  CHECK(std::memcmp(bytes.data() + nl + 1, one, 8) == 0);
  CHECK(s.find("\"config_fingerprint\":\"deadbeefcafef00d\"") != std::string::npos);
}

TEST_CASE("corruption kinds") {
  const auto bytes = encode_checkpoint(sample());
  SUBCASE("truncated payload") {
    CHECK(kind_of(std::span(bytes).first(bytes.size() - 8)) == CheckpointErrorKind::Truncated);
  }
  SUBCASE("extra payload") {
    auto longer = bytes;
    longer.insert(longer.end(), 8, 0);
    CHECK(kind_of(longer) == CheckpointErrorKind::CountMismatch);
  }
  SUBCASE("declared count disagrees with spec") {
    CHECK(kind_of(edit_header(bytes, "\"param_count\":4", "\"param_count\":5")) == CheckpointErrorKind::CountMismatch);
  }
  SUBCASE("version") {
    CHECK(kind_of(edit_header(bytes, "\"format_version\":1", "\"format_version\":2")) ==
          CheckpointErrorKind::VersionMismatch);
  }
  SUBCASE("magic") {
    CHECK(kind_of(edit_header(bytes, "sgdlab-checkpoint", "sgdlab-checkpoinT")) == CheckpointErrorKind::BadHeader);
  }
  SUBCASE("header json") {
    CHECK(kind_of(edit_header(bytes, "{", "[")) == CheckpointErrorKind::BadHeader);
  }
  SUBCASE("no header line") {
    const std::string magic = "sgdlab-checkpoint\n{\"format_version\":1";
    CHECK(kind_of(std::vector<std::uint8_t>(magic.begin(), magic.end())) == CheckpointErrorKind::Truncated);
  }
}

TEST_CASE("timestamp honours SOURCE_DATE_EPOCH") {
  ::setenv("SOURCE_DATE_EPOCH", "0", 1);
  CHECK(utc_timestamp() == "1970-01-01T00:00:00Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
  CHECK(utc_timestamp().size() == 20);
}
