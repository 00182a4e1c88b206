#include "sgdlab/checkpoint.hpp"

#include "sgdlab/errors.hpp"

#include <bit>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

namespace sgdlab {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "sgdlab-checkpoint";

void put_le(std::vector<std::uint8_t>& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

double get_le(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

// Position just past the next '\n' at or after `from`, or npos.
std::size_t line_end(std::span<const std::uint8_t> bytes, std::size_t from) {
  for (std::size_t i = from; i < bytes.size(); ++i) {
    if (bytes[i] == '\n') return i + 1;
  }
  return std::string::npos;
}

}  // namespace

Weights Checkpoint::weights() const {
  Weights w = Weights::unflatten(spec, params);
  w.provenance = provenance;
  w.seed = seed;
  return w;
}

std::string utc_timestamp() {
  std::time_t t = 0;
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
    t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Checkpoint make_checkpoint(const MlpSpec& spec, const Weights& w, std::uint64_t config_fingerprint) {
  check_shapes(spec, w.layers);
  Checkpoint c;
  c.spec = spec;
  c.params = w.flatten();
  c.provenance = w.provenance;
  c.seed = w.seed;
  c.config_fingerprint = config_fingerprint;
  c.created = utc_timestamp();
  return c;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  const json header = {{"format_version", c.format_version},
                       {"spec",
                        {{"input_dim", c.spec.input_dim},
                         {"hidden_widths", c.spec.hidden_widths},
                         {"n_classes", c.spec.n_classes}}},
                       {"provenance", std::string(to_string(c.provenance))},
                       {"seed", c.seed},
                       {"config_fingerprint", fmt::format("{:016x}", c.config_fingerprint)},
                       {"created", c.created},
                       {"param_count", c.params.size()}};
  const std::string text = fmt::format("{}\n{}\n", kMagic, header.dump());
  std::vector<std::uint8_t> out(text.begin(), text.end());
  out.reserve(out.size() + 8 * c.params.size());
  for (double v : c.params) put_le(out, v);
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  using K = CheckpointErrorKind;
  const std::size_t magic_end = line_end(bytes, 0);
  if (magic_end == std::string::npos ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), magic_end - 1) != kMagic) {
    throw CheckpointError(K::BadHeader, "checkpoint: missing magic line");
  }
  const std::size_t header_end = line_end(bytes, magic_end);
  if (header_end == std::string::npos) {
    throw CheckpointError(K::Truncated, "checkpoint: header line is incomplete");
  }

  json h;
  try {
    h = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(magic_end),
                    bytes.begin() + static_cast<std::ptrdiff_t>(header_end - 1));
  } catch (const json::exception& e) {
    throw CheckpointError(K::BadHeader, fmt::format("checkpoint: unreadable header: {}", e.what()));
  }

  Checkpoint c;
  std::size_t declared = 0;
  try {
    c.format_version = h.at("format_version").get<int>();
    if (c.format_version != kCheckpointVersion) {
      throw CheckpointError(K::VersionMismatch,
                            fmt::format("checkpoint: format version {} is not {}",
                                        c.format_version, kCheckpointVersion));
    }
    const auto& s = h.at("spec");
    c.spec.input_dim = s.at("input_dim").get<int>();
    c.spec.hidden_widths = s.at("hidden_widths").get<std::vector<int>>();
    c.spec.n_classes = s.at("n_classes").get<int>();
    c.provenance = provenance_from_string(h.at("provenance").get<std::string>());
    c.seed = h.at("seed").get<std::uint64_t>();
    c.config_fingerprint = std::stoull(h.at("config_fingerprint").get<std::string>(), nullptr, 16);
    c.created = h.at("created").get<std::string>();
    declared = h.at("param_count").get<std::size_t>();
    c.spec.validate();
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(K::BadHeader, fmt::format("checkpoint: bad header field: {}", e.what()));
  }

  if (declared != c.spec.param_count()) {
    throw CheckpointError(K::CountMismatch,
                          fmt::format("checkpoint: header declares {} parameters, spec needs {}",
                                      declared, c.spec.param_count()));
  }
  const std::size_t payload = bytes.size() - header_end;
  if (payload < 8 * declared) {
    throw CheckpointError(K::Truncated, fmt::format("checkpoint: {} payload bytes, expected {}",
                                                    payload, 8 * declared));
  }
  if (payload > 8 * declared) {
    throw CheckpointError(K::CountMismatch,
                          fmt::format("checkpoint: {} payload bytes hold more than {} parameters",
                                      payload, declared));
  }
  c.params.resize(declared);
  for (std::size_t i = 0; i < declared; ++i) c.params[i] = get_le(bytes.data() + header_end + 8 * i);
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& file) {
  const auto bytes = encode_checkpoint(c);
  if (file.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write checkpoint '{}'", file.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(fmt::format("short write to '{}'", file.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open checkpoint '{}'", file.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace sgdlab
