#include "style_erd/nn/checkpoint.hpp"

#include "style_erd/errors.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace style_erd::nn {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'R', 'D', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& in, std::size_t limit) {
  const auto len = take<std::uint32_t>(in);
  if (len > limit) throw std::runtime_error("checkpoint: implausible string length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : entries) {
    if (n == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(std::ostream& out, const nlohmann::json& header,
                      const std::vector<const ParamStore*>& stores,
                      const std::vector<std::string>& prefixes) {
  if (stores.size() != prefixes.size()) throw ContractError("write_checkpoint: prefix count");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string head = header.dump();
  put<std::uint64_t>(out, head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  std::uint32_t count = 0;
  for (const ParamStore* s : stores) count += static_cast<std::uint32_t>(s->size());
  put<std::uint32_t>(out, count);
  for (std::size_t k = 0; k < stores.size(); ++k) {
    const ParamStore& store = *stores[k];
    for (std::size_t i = 0; i < store.size(); ++i) {
      put_string(out, prefixes[k] + store.names()[i]);
      const Tensor& t = store.vars()[i].value();
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
      for (int d : t.shape()) put<std::int32_t>(out, d);
      auto data = t.data();
      out.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size_bytes()));
    }
  }
}

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& header,
                     const ParamStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  write_checkpoint(out, header, {&store}, {""});
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  Checkpoint ckpt;
  ckpt.version = take<std::uint32_t>(in);
  if (ckpt.version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(ckpt.version));
  }
  const auto head_len = take<std::uint64_t>(in);
  if (head_len > (1u << 26)) throw std::runtime_error("checkpoint: implausible header length");
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  ckpt.header = nlohmann::json::parse(head);
  const auto count = take<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = take_string(in, 4096);
    const auto rank = take<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw std::runtime_error("checkpoint: bad rank for " + name);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(take<std::int32_t>(in));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data().data()),
            static_cast<std::streamsize>(t.data().size_bytes()));
    if (!in) throw std::runtime_error("checkpoint: truncated values for " + name);
    ckpt.entries.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void restore_params(const Checkpoint& ckpt, ParamStore& store, const std::string& prefix) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::string name = prefix + store.names()[i];
    const Tensor* t = ckpt.find(name);
    if (!t) throw std::runtime_error("checkpoint: missing parameter " + name);
    Var v = store.vars()[i];
    require_same_shape(v.value(), *t, name.c_str());
    v.mutable_value() = *t;
  }
}

}  // namespace style_erd::nn
