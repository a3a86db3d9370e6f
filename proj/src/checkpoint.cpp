#include "madapter/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "madapter/errors.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }
  return v;
}

std::string read_bytes(std::istream& in, std::size_t n, const char* what) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }
  return s;
}

constexpr std::uint32_t kMaxNameLength = 4096;
constexpr std::uint32_t kMaxConfigLength = 1u << 20;

}  // namespace

void save_checkpoint(std::ostream& out, const Seq2SeqModel& model) {
  const auto& params = model.params();
  out.write(kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    write_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u32(out, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) write_u32(out, static_cast<std::uint32_t>(d));
    const std::vector<float> data(p.value.data().begin(), p.value.data().end());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  const std::string config = to_json(model.config()).dump();
  write_u32(out, static_cast<std::uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const Seq2SeqModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_checkpoint(out, model);
}

std::unique_ptr<Seq2SeqModel> load_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("not a checkpoint: bad magic number");
  }
  const auto version = read_u32(in, "version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = read_u32(in, "tensor count");
  struct Entry {
    std::string name;
    SeqTensor value;
  };
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_u32(in, "name length");
    if (name_len > kMaxNameLength) throw FormatError("tensor name too long");
    std::string name = read_bytes(in, name_len, "tensor name");
    const auto rank = read_u32(in, "rank");
    if (rank == 0 || rank > 3) throw FormatError("tensor '" + name + "' has invalid rank");
    Shape shape(rank);
    for (auto& d : shape) {
      d = read_u32(in, "dimension");
      if (d == 0) throw FormatError("tensor '" + name + "' has a zero dimension");
    }
    std::vector<float> data(shape_product(shape));
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(float)))) {
      throw FormatError("checkpoint truncated in tensor '" + name + "'");
    }
    entries.push_back(
        {std::move(name), SeqTensor(std::move(shape), std::vector<Real>(data.begin(), data.end()))});
  }
  const auto config_len = read_u32(in, "config length");
  if (config_len > kMaxConfigLength) throw FormatError("config blob too large");
  const std::string config_text = read_bytes(in, config_len, "config");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after checkpoint config");
  }
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(nlohmann::json::parse(config_text));
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid checkpoint config: ") + e.what());
  }
  auto model = build_model(cfg);
  auto& params = model->params();
  if (params.size() != entries.size()) {
    throw FormatError("checkpoint has " + std::to_string(entries.size()) +
                      " tensors, config expects " + std::to_string(params.size()));
  }
  for (auto& e : entries) {
    auto* p = params.find(e.name);
    if (!p) throw FormatError("unexpected tensor '" + e.name + "'");
    if (p->value.shape() != e.value.shape()) {
      throw FormatError("tensor '" + e.name + "' has shape " + shape_string(e.value.shape()) +
                        ", expected " + shape_string(p->value.shape()));
    }
    p->value = std::move(e.value);
  }
  return model;
}

std::unique_ptr<Seq2SeqModel> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace MADAPTER_NS
}  // namespace madapter
