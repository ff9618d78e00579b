#include "styleval/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "styleval/errors.hpp"
#include "styleval/hash.hpp"

namespace styleval {

namespace {
constexpr char kMagic[8] = {'S', 'V', 'C', 'K', 'P', 'T', '0', '1'};
}

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const nlohmann::json& header,
                     std::span<const double> payload) {
  nlohmann::json h = header;
  h["kind"] = kind;
  h["payload_count"] = payload.size();
  const std::string header_bytes = h.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::io_error, "cannot write checkpoint: " + path.string());
  }
  out.write(kMagic, sizeof(kMagic));
  std::uint32_t hlen = static_cast<std::uint32_t>(header_bytes.size());
  char lenbuf[4];
  for (int i = 0; i < 4; ++i) lenbuf[i] = char((hlen >> (8 * i)) & 0xff);
  out.write(lenbuf, 4);
  out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));

  static_assert(sizeof(double) == 8);
  std::vector<std::uint8_t> bytes(payload.size() * 8);
  if (!payload.empty()) {
    std::memcpy(bytes.data(), payload.data(), bytes.size());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  std::uint64_t checksum = fnv1a64(std::span<const std::uint8_t>(bytes));
  char ckbuf[8];
  for (int i = 0; i < 8; ++i) ckbuf[i] = char((checksum >> (8 * i)) & 0xff);
  out.write(ckbuf, 8);
  if (!out) {
    throw Error(Errc::io_error, "checkpoint write failed: " + path.string());
  }
}

std::pair<nlohmann::json, std::vector<double>> load_checkpoint(
    const std::filesystem::path& path, const std::string& kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "cannot open checkpoint: " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  auto corrupt = [&](const std::string& why) -> Error {
    return Error(Errc::checkpoint_corrupt,
                 "corrupt checkpoint " + path.string() + ": " + why);
  };
  if (bytes.size() < sizeof(kMagic) + 4 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw corrupt("bad magic");
  }
  std::uint32_t hlen = 0;
  for (int i = 0; i < 4; ++i) {
    hlen |= std::uint32_t(std::uint8_t(bytes[sizeof(kMagic) + i])) << (8 * i);
  }
  std::size_t pos = sizeof(kMagic) + 4;
  if (bytes.size() < pos + hlen + 8) throw corrupt("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("header: ") + e.what());
  }
  if (header.value("kind", "") != kind) {
    throw corrupt("expected kind '" + kind + "', found '" +
                  header.value("kind", "") + "'");
  }
  pos += hlen;
  const std::size_t count = header.value("payload_count", std::size_t{0});
  if (bytes.size() != pos + count * 8 + 8) throw corrupt("bad payload size");

  std::span<const std::uint8_t> payload_bytes(
      reinterpret_cast<const std::uint8_t*>(bytes.data() + pos), count * 8);
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) {
    stored |= std::uint64_t(std::uint8_t(bytes[pos + count * 8 + i])) << (8 * i);
  }
  if (stored != fnv1a64(payload_bytes)) throw corrupt("checksum mismatch");

  std::vector<double> payload(count);
  if (count > 0) {
    std::memcpy(payload.data(), payload_bytes.data(), count * 8);
  }
  return {std::move(header), std::move(payload)};
}

}  // namespace styleval
