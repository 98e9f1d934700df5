#include "mdapt/encoder/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "mdapt/common/error.h"

namespace mdapt::encoder {
namespace {

constexpr char kMagic[8] = {'M', 'D', 'A', 'P', 'T', 'C', 'K', 'P'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(uint32_t v) { le(v, 4); }
  void u64(uint64_t v) { le(v, 8); }
  void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }

 private:
  void le(uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf, n);
  }
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  uint32_t u32() { return static_cast<uint32_t>(le(4)); }
  uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string bytes(size_t n) {
    if (n > (1u << 30)) fail("implausible field length");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) fail("truncated");
    return s;
  }
  [[noreturn]] void fail(const std::string& why) {
    throw DataError("checkpoint " + path_ + ": " + why);
  }

 private:
  uint64_t le(int n) {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), n);
    if (!in_) fail("truncated");
    uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
  }
  std::istream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const Encoder<float>& model, const std::filesystem::path& path,
                     const std::set<ParamGroup>& groups, const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  Writer w(out);
  const nlohmann::json header = {{"config", to_json(model.config())}, {"meta", meta}};
  const std::string header_text = header.dump();
  w.bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<uint32_t>(header_text.size()));
  w.bytes(header_text);

  std::vector<const Parameter<float>*> selected;
  for (const auto& p : model.params().all()) {
    if (groups.count(p.group)) selected.push_back(&p);
  }
  w.u32(static_cast<uint32_t>(selected.size()));
  for (const auto* p : selected) {
    const auto& m = p->var.value();
    w.u32(static_cast<uint32_t>(p->name.size()));
    w.bytes(p->name);
    w.u32(static_cast<uint32_t>(p->group));
    w.u32(2);
    w.u64(static_cast<uint64_t>(m.rows()));
    w.u64(static_cast<uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) w.f32(m.data()[i]);
  }
  if (!out) throw DataError("write failed for checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  if (r.bytes(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    r.fail("bad magic");
  }
  if (const uint32_t version = r.u32(); version != kCheckpointVersion) {
    r.fail("unsupported format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(r.bytes(r.u32()));
    ckpt.config = encoder_config_from_json(header.at("config"));
    ckpt.meta = header.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad header: ") + e.what());
  }
  const uint32_t count = r.u32();
  for (uint32_t t = 0; t < count; ++t) {
    TensorRecord rec;
    rec.name = r.bytes(r.u32());
    const uint32_t group = r.u32();
    if (group > static_cast<uint32_t>(ParamGroup::kHead)) r.fail("bad group for " + rec.name);
    rec.group = static_cast<ParamGroup>(group);
    if (r.u32() != 2) r.fail("only rank-2 tensors are supported");
    const uint64_t rows = r.u64();
    const uint64_t cols = r.u64();
    if (rows * cols > (1ull << 32)) r.fail("implausible shape for " + rec.name);
    rec.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < rec.value.size(); ++i) rec.value.data()[i] = r.f32();
    ckpt.tensors.push_back(std::move(rec));
  }
  return ckpt;
}

void apply_checkpoint(Encoder<float>& model, const Checkpoint& ckpt) {
  for (const auto& t : ckpt.tensors) {
    if (model.params().find(t.name) != nullptr) continue;
    if (t.group == ParamGroup::kAdapter && !model.has_adapters()) {
      const auto down = std::find_if(ckpt.tensors.begin(), ckpt.tensors.end(), [](const auto& x) {
        return x.group == ParamGroup::kAdapter && x.name.ends_with(".down");
      });
      if (down == ckpt.tensors.end()) throw DataError("checkpoint adapters lack a down projection");
      model.add_adapters(static_cast<int>(down->value.cols()), 0);
    } else if (t.group == ParamGroup::kHead && t.name.starts_with("head.") &&
               t.name.ends_with(".weight")) {
      const std::string head = t.name.substr(5, t.name.size() - 5 - 7);
      model.add_head(head, static_cast<int>(t.value.cols()), 0);
    }
  }
  for (const auto& t : ckpt.tensors) {
    Parameter<float>* p = model.params().find(t.name);
    if (p == nullptr) throw DataError("checkpoint tensor " + t.name + " has no slot in the model");
    auto& dst = p->var.mutable_value();
    if (dst.rows() != t.value.rows() || dst.cols() != t.value.cols()) {
      throw DataError("checkpoint tensor " + t.name + " has shape " +
                      std::to_string(t.value.rows()) + "x" + std::to_string(t.value.cols()) +
                      ", model expects " + std::to_string(dst.rows()) + "x" +
                      std::to_string(dst.cols()));
    }
    dst = t.value;
  }
}

Encoder<float> model_from_checkpoint(const Checkpoint& ckpt) {
  EncoderConfig base = ckpt.config;
  base.adapter_dim.reset();
  Encoder<float> model(base, 0);
  std::set<std::string> present;
  for (const auto& t : ckpt.tensors) present.insert(t.name);
  for (const auto& p : model.params().all()) {
    if (!present.count(p.name)) {
      throw DataError("checkpoint is missing base tensor " + p.name);
    }
  }
  apply_checkpoint(model, ckpt);
  return model;
}

Encoder<float> load_model(const std::filesystem::path& path) {
  return model_from_checkpoint(read_checkpoint(path));
}

}  // namespace mdapt::encoder
