#pragma once

// Checkpoint format: a text header (format version, algorithm, config hash,
// named parameter shapes, payload hash, embedded config) followed by the raw
// parameter data as little-endian 32-bit floats in header order.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lan/config.hpp"
#include "lan/errors.hpp"
#include "lan/nn.hpp"

namespace lan {

struct CheckpointData {
  std::string algorithm;
  std::string config_hash;
  std::string config_text;
  std::vector<std::pair<std::string, Tensor<float>>> params;
};

namespace detail {

inline void write_le_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

inline float read_le_f32(const char* p) {
  std::uint32_t bits = static_cast<std::uint8_t>(p[0]) | (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[1])) << 8) |
                       (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[2])) << 16) |
                       (static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[3])) << 24);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline std::uint64_t fnv1a64_bytes(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

template <typename S>
void checkpoint_save(const ParamSet<S>& params, const TrainConfig& config, const std::string& path) {
  std::string payload;
  for (std::size_t i = 0; i < params.count(); ++i) {
    const Tensor<S>& t = params.value(i);
    for (std::size_t k = 0; k < t.size(); ++k) detail::write_le_f32(payload, static_cast<float>(t[k]));
  }
  char payload_hash[17];
  std::snprintf(payload_hash, sizeof payload_hash, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a64_bytes(payload)));

  std::ostringstream header;
  header << "lanckpt v1\n";
  header << "algorithm " << config.algorithm << "\n";
  header << "config_hash " << config_hash(config) << "\n";
  header << "payload_fnv " << payload_hash << "\n";
  header << "params " << params.count() << "\n";
  for (std::size_t i = 0; i < params.count(); ++i) {
    header << "param " << params.entry(i).name;
    for (std::size_t d : params.value(i).shape()) header << " " << d;
    header << "\n";
  }
  header << "config_begin\n" << config.canonical_text() << "config_end\n";
  header << "data\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::open_failed, "cannot write checkpoint: " + path);
  out << header.str();
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError(IoError::Kind::open_failed, "short write: " + path);
}

inline CheckpointData checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::open_failed, "cannot open checkpoint: " + path);
  std::stringstream whole;
  whole << in.rdbuf();
  std::string content = whole.str();

  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) throw IoError(IoError::Kind::truncated, "checkpoint truncated in header");
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  if (next_line() != "lanckpt v1")
    throw IoError(IoError::Kind::version_mismatch, "unsupported checkpoint version in " + path);

  CheckpointData data;
  std::string stored_payload_hash;
  std::vector<std::pair<std::string, Shape>> shapes;
  for (std::string line = next_line(); line != "data"; line = next_line()) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "algorithm") {
      ls >> data.algorithm;
    } else if (key == "config_hash") {
      ls >> data.config_hash;
    } else if (key == "payload_fnv") {
      ls >> stored_payload_hash;
    } else if (key == "params") {
      // count is implied by the param lines
    } else if (key == "param") {
      std::string name;
      ls >> name;
      Shape shape;
      std::size_t d;
      while (ls >> d) shape.push_back(d);
      shapes.emplace_back(name, shape);
    } else if (key == "config_begin") {
      std::string cfg_line;
      while ((cfg_line = next_line()) != "config_end") data.config_text += cfg_line + "\n";
    } else {
      throw IoError(IoError::Kind::malformed, "unexpected header line: " + line);
    }
  }

  std::string payload = content.substr(pos);
  std::size_t expected = 0;
  for (auto& [name, shape] : shapes) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    expected += n * 4;
  }
  if (payload.size() != expected)
    throw IoError(IoError::Kind::truncated, "checkpoint payload has " + std::to_string(payload.size()) +
                                                " bytes, expected " + std::to_string(expected));
  char payload_hash[17];
  std::snprintf(payload_hash, sizeof payload_hash, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a64_bytes(payload)));
  if (stored_payload_hash != payload_hash)
    throw IoError(IoError::Kind::hash_mismatch, "checkpoint payload hash mismatch (corrupted file?)");

  std::size_t off = 0;
  for (auto& [name, shape] : shapes) {
    Tensor<float> t(shape);
    for (std::size_t k = 0; k < t.size(); ++k, off += 4) t[k] = detail::read_le_f32(payload.data() + off);
    data.params.emplace_back(name, std::move(t));
  }
  return data;
}

// Copies checkpoint parameters into a parameter set; names and shapes must
// match, and the checkpoint must come from the same algorithm.
template <typename S>
void checkpoint_restore(const CheckpointData& data, const std::string& expected_algorithm, ParamSet<S>& params) {
  if (data.algorithm != expected_algorithm)
    throw IoError(IoError::Kind::algorithm_mismatch,
                  "checkpoint is for '" + data.algorithm + "', expected '" + expected_algorithm + "'");
  if (data.params.size() != params.count())
    throw IoError(IoError::Kind::malformed, "checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.count(); ++i) {
    if (data.params[i].first != params.entry(i).name || !(data.params[i].second.shape() == params.value(i).shape()))
      throw IoError(IoError::Kind::malformed, "checkpoint parameter mismatch at " + params.entry(i).name);
    for (std::size_t k = 0; k < params.value(i).size(); ++k)
      params.value(i)[k] = static_cast<S>(data.params[i].second[k]);
  }
}

}  // namespace lan
