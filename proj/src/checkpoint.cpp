// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <fstream>
#include <map>

#include "attrikit/network.hpp"

namespace attrikit {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'R', 'K'};

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("truncated checkpoint file");
  return v;
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  write_pod<uint32_t>(out, kCheckpointVersion);

  const std::string config_text = net.config().to_kv().serialize();
  write_pod<uint32_t>(out, static_cast<uint32_t>(config_text.size()));
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));

  const auto tensors = net.state_tensors();
  write_pod<uint64_t>(out, static_cast<uint64_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint32_t>(out, static_cast<uint32_t>(t->dims.size()));
    for (int d : t->dims) write_pod<int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t->data.data()),
              static_cast<std::streamsize>(t->data.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Network load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);

  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not a checkpoint file (bad magic): " + path);
  const uint32_t version = read_pod<uint32_t>(in);
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));

  const uint32_t config_len = read_pod<uint32_t>(in);
  std::string config_text(config_len, '\0');
  in.read(config_text.data(), config_len);
  if (!in) throw FormatError("truncated checkpoint file");
  const NetworkConfig config = NetworkConfig::from_kv(KeyValueConfig::parse(config_text));

  // Build the skeleton, then overwrite every tensor by name.
  Network net = Network::build(config, 0);
  std::map<std::string, TensorPtr> expected;
  for (auto& [name, t] : net.state_tensors()) expected[name] = t;

  const uint64_t count = read_pod<uint64_t>(in);
  if (count != expected.size())
    throw FormatError("checkpoint tensor table has " + std::to_string(count) +
                      " entries, config implies " + std::to_string(expected.size()));
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_pod<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("truncated checkpoint file");
    const uint32_t rank = read_pod<uint32_t>(in);
    std::vector<int> dims(rank);
    for (uint32_t r = 0; r < rank; ++r)
      dims[r] = static_cast<int>(read_pod<int64_t>(in));
    auto it = expected.find(name);
    if (it == expected.end())
      throw FormatError("checkpoint tensor '" + name + "' is not part of the configured model");
    if (dims != it->second->dims)
      throw FormatError("checkpoint tensor '" + name + "' has dims " + dims_to_string(dims) +
                        ", model expects " + dims_to_string(it->second->dims));
    in.read(reinterpret_cast<char*>(it->second->data.data()),
            static_cast<std::streamsize>(it->second->data.size() * sizeof(float)));
    if (!in) throw FormatError("truncated checkpoint file");
  }
  return net;
}

}  // namespace attrikit
