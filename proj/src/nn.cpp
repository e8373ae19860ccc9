#include "tcprof/nn.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "tcprof/blobio.hpp"
#include "tcprof/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tcprof {

namespace {
// He-uniform: limit sqrt(6 / fan_in), the usual choice under relu stacks.
Tensor he_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
  double limit = std::sqrt(6.0 / fan_in);
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}
}  // namespace

Conv2dLayer Conv2dLayer::make(int cin, int cout, int kh, int kw, int sh, int sw, Pad ph, Pad pw,
                              Rng& rng) {
  Conv2dLayer l;
  l.w = he_uniform({cout, cin, kh, kw}, cin * kh * kw, rng);
  l.b = Tensor::zeros({cout}, true);
  l.stride_h = sh;
  l.stride_w = sw;
  l.pad_h = ph;
  l.pad_w = pw;
  return l;
}

BatchNormLayer BatchNormLayer::make(int channels) {
  BatchNormLayer l;
  l.gamma = Tensor::full({channels}, 1.0, true);
  l.beta = Tensor::zeros({channels}, true);
  l.running_mean.assign(channels, 0.0);
  l.running_var.assign(channels, 1.0);
  return l;
}

LinearLayer LinearLayer::make(int fin, int fout, Rng& rng) {
  LinearLayer l;
  l.w = he_uniform({fout, fin}, fin, rng);
  l.b = Tensor::zeros({fout}, true);
  return l;
}

NetConfig NetConfig::polar(int kernel_angle, int kernel_radius) {
  NetConfig c;
  c.kernel_angle = kernel_angle;
  c.kernel_radius = kernel_radius;
  c.cartesian = false;
  c.in_h = 180;
  c.in_w = 103;
  return c;
}

NetConfig NetConfig::cartesian_grid(int kernel_h, int kernel_w, int size) {
  NetConfig c;
  c.kernel_angle = kernel_h;
  c.kernel_radius = kernel_w;
  c.cartesian = true;
  c.in_h = size;
  c.in_w = size;
  return c;
}

std::vector<std::pair<int, int>> conv_output_chain(int h, int w, int layers) {
  std::vector<std::pair<int, int>> chain;
  for (int i = 0; i < layers; ++i) {
    h = (h + 1) / 2;
    w = (w + 1) / 2;
    chain.emplace_back(h, w);
  }
  return chain;
}

ProfilerNet::ProfilerNet(const NetConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  Rng rng(derive_seed(init_seed, 0x6e65));

  input_bn_ = BatchNormLayer::make(cfg.in_channels);

  Pad pad_h = cfg.cartesian ? Pad::zero : Pad::circular;
  int cin = cfg.in_channels;
  for (int cout : cfg.conv_dims) {
    convs_.push_back(Conv2dLayer::make(cin, cout, cfg.kernel_angle, cfg.kernel_radius, 2, 2,
                                       pad_h, Pad::zero, rng));
    conv_bns_.push_back(BatchNormLayer::make(cout));
    cin = cout;
  }

  auto chain = conv_output_chain(cfg.in_h, cfg.in_w, static_cast<int>(cfg.conv_dims.size()));
  flat_dim_ = cfg.conv_dims.back() * chain.back().first * chain.back().second;

  fc1_ = LinearLayer::make(flat_dim_ + cfg.aux_dim, cfg.fc1, rng);
  fc1_bn_ = BatchNormLayer::make(cfg.fc1);
  fc2_ = LinearLayer::make(cfg.fc1, cfg.fc2, rng);
  fc2_bn_ = BatchNormLayer::make(cfg.fc2);
  fc3_ = LinearLayer::make(cfg.fc2, cfg.out, rng);
}

Tensor ProfilerNet::forward(const Tensor& images, const Tensor& aux) {
  if (images.ndim() != 4 || images.dim(1) != cfg_.in_channels || images.dim(2) != cfg_.in_h ||
      images.dim(3) != cfg_.in_w) {
    throw std::invalid_argument("ProfilerNet: unexpected image shape");
  }
  if (aux.ndim() != 2 || aux.dim(0) != images.dim(0) || aux.dim(1) != cfg_.aux_dim) {
    throw std::invalid_argument("ProfilerNet: unexpected aux shape");
  }

  Tensor h = input_bn_.forward(images, training_);
  for (size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i].forward(h);
    h = conv_bns_[i].forward(h, training_);
    h = relu(h);
  }
  h = flatten(h);
  h = concat(h, aux);
  h = relu(fc1_bn_.forward(fc1_.forward(h), training_));
  h = relu(fc2_bn_.forward(fc2_.forward(h), training_));
  return fc3_.forward(h);
}

std::vector<std::pair<std::string, Tensor>> ProfilerNet::named_parameters() {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("input_bn.gamma", input_bn_.gamma);
  out.emplace_back("input_bn.beta", input_bn_.beta);
  for (size_t i = 0; i < convs_.size(); ++i) {
    std::string p = "conv" + std::to_string(i + 1);
    out.emplace_back(p + ".w", convs_[i].w);
    out.emplace_back(p + ".b", convs_[i].b);
    out.emplace_back(p + "_bn.gamma", conv_bns_[i].gamma);
    out.emplace_back(p + "_bn.beta", conv_bns_[i].beta);
  }
  out.emplace_back("fc1.w", fc1_.w);
  out.emplace_back("fc1.b", fc1_.b);
  out.emplace_back("fc1_bn.gamma", fc1_bn_.gamma);
  out.emplace_back("fc1_bn.beta", fc1_bn_.beta);
  out.emplace_back("fc2.w", fc2_.w);
  out.emplace_back("fc2.b", fc2_.b);
  out.emplace_back("fc2_bn.gamma", fc2_bn_.gamma);
  out.emplace_back("fc2_bn.beta", fc2_bn_.beta);
  out.emplace_back("fc3.w", fc3_.w);
  out.emplace_back("fc3.b", fc3_.b);
  return out;
}

std::vector<Tensor> ProfilerNet::parameters() {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, std::vector<double>*>> ProfilerNet::named_buffers() {
  std::vector<std::pair<std::string, std::vector<double>*>> out;
  out.emplace_back("input_bn.run_mean", &input_bn_.running_mean);
  out.emplace_back("input_bn.run_var", &input_bn_.running_var);
  for (size_t i = 0; i < conv_bns_.size(); ++i) {
    std::string p = "conv" + std::to_string(i + 1) + "_bn";
    out.emplace_back(p + ".run_mean", &conv_bns_[i].running_mean);
    out.emplace_back(p + ".run_var", &conv_bns_[i].running_var);
  }
  out.emplace_back("fc1_bn.run_mean", &fc1_bn_.running_mean);
  out.emplace_back("fc1_bn.run_var", &fc1_bn_.running_var);
  out.emplace_back("fc2_bn.run_mean", &fc2_bn_.running_mean);
  out.emplace_back("fc2_bn.run_var", &fc2_bn_.running_var);
  return out;
}

size_t ProfilerNet::param_count() const {
  size_t n = 0;
  for (auto& [name, t] : const_cast<ProfilerNet*>(this)->named_parameters()) n += t.numel();
  return n;
}

std::vector<std::vector<double>> ProfilerNet::state() const {
  auto* self = const_cast<ProfilerNet*>(this);
  std::vector<std::vector<double>> st;
  for (auto& [name, t] : self->named_parameters()) st.push_back(t.values());
  for (auto& [name, buf] : self->named_buffers()) st.push_back(*buf);
  return st;
}

void ProfilerNet::set_state(const std::vector<std::vector<double>>& state) {
  auto params = named_parameters();
  auto buffers = named_buffers();
  if (state.size() != params.size() + buffers.size()) {
    throw std::invalid_argument("ProfilerNet::set_state: state entry count mismatch");
  }
  size_t k = 0;
  for (auto& [name, t] : params) {
    if (state[k].size() != t.numel()) throw std::invalid_argument("set_state: size mismatch at " + name);
    t.values() = state[k++];
  }
  for (auto& [name, buf] : buffers) {
    if (state[k].size() != buf->size()) throw std::invalid_argument("set_state: size mismatch at " + name);
    *buf = state[k++];
  }
}

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Tensor& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t k = 0; k < params_.size(); ++k) {
    auto& val = params_[k].values();
    const auto& g = params_[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (size_t i = 0; i < val.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      val[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

namespace {
constexpr const char* kCheckpointMagic = "tcprof-checkpoint";
constexpr int kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(ProfilerNet& net, const std::string& dir) {
  fs::create_directories(dir);

  std::vector<double> flat;
  json entries = json::array();
  auto append = [&](const std::string& name, const std::vector<double>& v,
                    const std::vector<int>& shape) {
    json e;
    e["name"] = name;
    e["offset"] = flat.size();
    e["count"] = v.size();
    e["shape"] = shape;
    entries.push_back(std::move(e));
    flat.insert(flat.end(), v.begin(), v.end());
  };
  for (auto& [name, t] : net.named_parameters()) append(name, t.values(), t.shape());
  for (auto& [name, buf] : net.named_buffers()) {
    append(name, *buf, {static_cast<int>(buf->size())});
  }

  uint32_t crc = write_blob_f64((fs::path(dir) / "params.f64").string(), flat);

  const NetConfig& c = net.config();
  json manifest;
  manifest["format"] = kCheckpointMagic;
  manifest["version"] = kCheckpointVersion;
  manifest["net"] = {{"kernel_angle", c.kernel_angle}, {"kernel_radius", c.kernel_radius},
                     {"cartesian", c.cartesian},       {"in_channels", c.in_channels},
                     {"in_h", c.in_h},                 {"in_w", c.in_w},
                     {"conv_dims", c.conv_dims},       {"aux_dim", c.aux_dim},
                     {"fc1", c.fc1},                   {"fc2", c.fc2},
                     {"out", c.out}};
  manifest["params"] = entries;
  manifest["blob"] = {{"file", "params.f64"}, {"dtype", "f64"}, {"floats", flat.size()},
                      {"crc32", crc}};
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

ProfilerNet load_checkpoint(const std::string& dir) {
  fs::path mpath = fs::path(dir) / "manifest.json";
  if (!fs::exists(mpath)) throw ArchiveError("no manifest.json under " + dir);

  json manifest;
  try {
    manifest = json::parse(read_text_file(mpath.string()));
  } catch (const json::parse_error& e) {
    throw ChecksumError("unparseable manifest " + mpath.string() + ": " + e.what());
  }
  if (!manifest.contains("format") || manifest["format"] != kCheckpointMagic) {
    throw ChecksumError("bad checkpoint magic in " + mpath.string());
  }
  if (!manifest.contains("version") || manifest["version"].get<int>() != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version in " + mpath.string());
  }

  const json& jc = manifest.at("net");
  NetConfig cfg;
  cfg.kernel_angle = jc.at("kernel_angle").get<int>();
  cfg.kernel_radius = jc.at("kernel_radius").get<int>();
  cfg.cartesian = jc.at("cartesian").get<bool>();
  cfg.in_channels = jc.at("in_channels").get<int>();
  cfg.in_h = jc.at("in_h").get<int>();
  cfg.in_w = jc.at("in_w").get<int>();
  cfg.conv_dims = jc.at("conv_dims").get<std::vector<int>>();
  cfg.aux_dim = jc.at("aux_dim").get<int>();
  cfg.fc1 = jc.at("fc1").get<int>();
  cfg.fc2 = jc.at("fc2").get<int>();
  cfg.out = jc.at("out").get<int>();

  const json& jb = manifest.at("blob");
  auto flat = read_blob_f64((fs::path(dir) / jb.at("file").get<std::string>()).string(),
                            jb.at("floats").get<size_t>(), jb.at("crc32").get<uint32_t>());

  ProfilerNet net(cfg, 0);
  auto params = net.named_parameters();
  auto buffers = net.named_buffers();

  const json& entries = manifest.at("params");
  if (entries.size() != params.size() + buffers.size()) {
    throw ArchiveError("checkpoint parameter list does not match the network layout");
  }
  size_t k = 0;
  auto take = [&](const std::string& name, std::vector<double>& dst) {
    const json& e = entries.at(k++);
    if (e.at("name").get<std::string>() != name) {
      throw ArchiveError("checkpoint parameter order mismatch at " + name);
    }
    size_t off = e.at("offset").get<size_t>();
    size_t count = e.at("count").get<size_t>();
    if (count != dst.size() || off + count > flat.size()) {
      throw TruncatedError("checkpoint entry '" + name + "' has unexpected extent");
    }
    std::copy_n(flat.begin() + off, count, dst.begin());
  };
  for (auto& [name, t] : params) take(name, t.values());
  for (auto& [name, buf] : buffers) take(name, *buf);

  net.set_training(false);
  return net;
}

}  // namespace tcprof
