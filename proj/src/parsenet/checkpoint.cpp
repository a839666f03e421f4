#include "sketchparse/parsenet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace sketchparse::parsenet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <typename U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw CheckpointError("checkpoint offset " + std::to_string(pos_) + ": " + msg);
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      fail(std::string("truncated while reading ") + what + " (need " + std::to_string(n) + " bytes, have " +
           std::to_string(bytes_.size() - pos_) + ")");
    }
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Magic& magic, const CheckpointData& data) {
  std::string out(magic.data(), magic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  out.append(reinterpret_cast<const char*>(data.digest.data()), data.digest.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.tensors.size()));
  for (const auto& t : data.tensors) {
    if (t.name.size() > 0xffff) throw ContractViolation("tensor name too long: " + t.name.substr(0, 40));
    if (t.value.rank() > 0xff) throw ContractViolation("tensor rank too large: " + t.name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out += t.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.value.rank()));
    for (auto d : t.value.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.append(reinterpret_cast<const char*>(t.value.raw()), t.value.size() * sizeof(float));
  }
  return out;
}

CheckpointData decode_checkpoint(std::string_view bytes, const Magic& magic) {
  Reader r(bytes);
  const auto m = r.take(4, "magic");
  if (m != std::string_view(magic.data(), magic.size())) {
    throw CheckpointError("checkpoint offset 0: bad magic '" + std::string(m) + "', expected '" +
                          std::string(magic.data(), magic.size()) + "'");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint offset 4: unsupported version " + std::to_string(version));
  }
  CheckpointData d;
  const auto dig = r.take(d.digest.size(), "taxonomy digest");
  std::memcpy(d.digest.data(), dig.data(), dig.size());
  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto len = r.get<std::uint16_t>("name length");
    t.name = std::string(r.take(len, "tensor name"));
    const auto rank = r.get<std::uint8_t>("rank");
    numcore::Shape shape;
    std::size_t volume = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      shape.push_back(r.get<std::uint32_t>("dimension"));
      volume *= shape.back();
    }
    if (rank == 0) volume = 0;
    if (volume > bytes.size()) r.fail("tensor '" + t.name + "' claims " + std::to_string(volume) + " values");
    const auto payload = r.take(volume * sizeof(float), "tensor data");
    std::vector<float> values(volume);
    std::memcpy(values.data(), payload.data(), payload.size());
    t.value = TensorF(std::move(shape), std::move(values));
    d.tensors.push_back(std::move(t));
  }
  if (!r.done()) r.fail("trailing bytes after last tensor");
  return d;
}

void write_checkpoint(const std::filesystem::path& path, const Magic& magic, const CheckpointData& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  const std::string bytes = encode_checkpoint(magic, data);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
}

CheckpointData read_checkpoint(const std::filesystem::path& path, const Magic& magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str(), magic);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

void check_digest(const taxonomy::Digest& got, const taxonomy::Digest& expected, const std::string& what) {
  if (got != expected) {
    throw CheckpointError(what + " was trained against taxonomy " + taxonomy::digest_hex(got) +
                          " but the given taxonomy hashes to " + taxonomy::digest_hex(expected));
  }
}

namespace {

constexpr const char* kConfigName = "meta.config";

void push_conv(std::vector<float>& v, const ConvSpec& s) {
  for (std::size_t x : {s.kernel, s.stride, s.dilation, s.out_channels}) v.push_back(static_cast<float>(x));
  v.push_back(s.padding ? static_cast<float>(*s.padding) : -1.0f);
}

class ConfigReader {
 public:
  explicit ConfigReader(const TensorF& t) : t_(t) {}
  std::size_t next() {
    if (pos_ >= t_.size()) throw CheckpointError("checkpoint meta.config is too short");
    const float v = t_[pos_++];
    if (v < 0 || v != static_cast<float>(static_cast<std::size_t>(v))) {
      throw CheckpointError("checkpoint meta.config holds a non-integer value");
    }
    return static_cast<std::size_t>(v);
  }
  ConvSpec conv() {
    ConvSpec s;
    s.kernel = next();
    s.stride = next();
    s.dilation = next();
    s.out_channels = next();
    if (pos_ >= t_.size()) throw CheckpointError("checkpoint meta.config is too short");
    const float p = t_[pos_++];
    if (p >= 0) s.padding = static_cast<std::size_t>(p);
    return s;
  }
  bool done() const { return pos_ == t_.size(); }

 private:
  const TensorF& t_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Model<float>& cm, const std::filesystem::path& path) {
  auto& m = const_cast<Model<float>&>(cm);  // parameters() hands out pointers; nothing is written
  std::vector<float> cfg;
  cfg.push_back(static_cast<float>(m.cfg.in_channels));
  cfg.push_back(static_cast<float>(m.cfg.split_index));
  cfg.push_back(static_cast<float>(m.cfg.trunk.size()));
  for (const auto& l : m.cfg.trunk) {
    cfg.push_back(l.kind == TrunkLayer::Kind::kConv ? 0.0f : 1.0f);
    push_conv(cfg, l.conv);
    cfg.push_back(static_cast<float>(l.window));
    cfg.push_back(static_cast<float>(l.stride));
  }
  push_conv(cfg, m.cfg.pose.first);
  push_conv(cfg, m.cfg.pose.second);
  push_conv(cfg, m.cfg.pose.templ);
  cfg.push_back(static_cast<float>(m.branches.size()));
  for (const auto& b : m.branches) cfg.push_back(static_cast<float>(b.classes));

  CheckpointData d;
  d.digest = m.digest;
  const std::size_t n = cfg.size();
  d.tensors.push_back({kConfigName, TensorF({n}, std::move(cfg))});
  for (auto* p : m.parameters()) d.tensors.push_back({p->name, p->value});
  write_checkpoint(path, kParserMagic, d);
}

Model<float> load_checkpoint(const std::filesystem::path& path, const taxonomy::Taxonomy& expected) {
  const CheckpointData d = read_checkpoint(path, kParserMagic);
  check_digest(d.digest, expected.digest(), "parser checkpoint " + path.string());
  if (d.tensors.empty() || d.tensors[0].name != kConfigName) {
    throw CheckpointError(path.string() + ": first tensor must be " + kConfigName);
  }
  ConfigReader r(d.tensors[0].value);
  ModelConfig cfg;
  cfg.in_channels = r.next();
  cfg.split_index = r.next();
  const std::size_t layers = r.next();
  for (std::size_t i = 0; i < layers; ++i) {
    TrunkLayer l;
    l.kind = r.next() == 0 ? TrunkLayer::Kind::kConv : TrunkLayer::Kind::kPool;
    l.conv = r.conv();
    l.window = r.next();
    l.stride = r.next();
    cfg.trunk.push_back(l);
  }
  cfg.pose.first = r.conv();
  cfg.pose.second = r.conv();
  cfg.pose.templ = r.conv();
  const std::size_t K = r.next();
  std::vector<std::size_t> classes;
  for (std::size_t b = 0; b < K; ++b) classes.push_back(r.next());
  if (!r.done()) throw CheckpointError(path.string() + ": meta.config has trailing values");
  if (K != expected.branch_count()) {
    throw CheckpointError(path.string() + ": stores " + std::to_string(K) + " branches, taxonomy has " +
                          std::to_string(expected.branch_count()));
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }

  Model<float> m = build_model(cfg, expected, 0);
  for (std::size_t b = 0; b < K; ++b) {
    if (m.branches[b].classes != classes[b]) {
      throw CheckpointError(path.string() + ": branch " + std::to_string(b) + " class count mismatch");
    }
  }
  std::map<std::string, const TensorF*> byname;
  for (std::size_t i = 1; i < d.tensors.size(); ++i) {
    if (!byname.emplace(d.tensors[i].name, &d.tensors[i].value).second) {
      throw CheckpointError(path.string() + ": duplicate tensor '" + d.tensors[i].name + "'");
    }
  }
  const auto params = m.parameters();
  if (params.size() != byname.size()) {
    throw CheckpointError(path.string() + ": holds " + std::to_string(byname.size()) + " parameters, model needs " +
                          std::to_string(params.size()));
  }
  for (auto* p : params) {
    const auto it = byname.find(p->name);
    if (it == byname.end()) throw CheckpointError(path.string() + ": missing tensor '" + p->name + "'");
    if (it->second->shape() != p->value.shape()) {
      throw CheckpointError(path.string() + ": tensor '" + p->name + "' has shape " +
                            numcore::shape_string(it->second->shape()) + ", expected " +
                            numcore::shape_string(p->value.shape()));
    }
    p->value = *it->second;
  }
  return m;
}

}  // namespace sketchparse::parsenet
