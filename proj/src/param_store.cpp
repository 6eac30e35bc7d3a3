#include "prooflens/param_store.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "prooflens/error.hpp"

namespace prooflens {

void ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  entries_[name] = Entry{std::move(value), trainable};
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(ErrorCode::KeyMismatch, "no parameter named " + name);
  return it->second.value;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(ErrorCode::KeyMismatch, "no parameter named " + name);
  return it->second.value;
}

bool ParamStore::trainable(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(ErrorCode::KeyMismatch, "no parameter named " + name);
  return it->second.trainable;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : entries_)
    if (entry.trainable) out.push_back(name);
  return out;
}

Gradients ParamStore::zero_gradients() const {
  Gradients grads;
  for (const auto& [name, entry] : entries_)
    if (entry.trainable) grads.emplace(name, Tensor::zeros_like(entry.value));
  return grads;
}

Tensor glorot_init(int fan_in, int fan_out, Rng& rng) {
  double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor w({fan_in, fan_out});
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
  return w;
}

bool is_buffer_name(const std::string& name) {
  auto ends_with = [&](const char* suffix) {
    std::string s(suffix);
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  return ends_with(".running_mean") || ends_with(".running_var");
}

namespace {

double parse_double(const std::string& token, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw Error(ErrorCode::CorruptValue, "bad value '" + token + "' in " + context);
  return v;
}

}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileMissing, "cannot open " + path + " for writing");
  out << "PLCKPT 1\n";
  for (const auto& [name, entry] : store.entries()) {
    out << name;
    for (int d : entry.value.shape()) out << ' ' << d;
    out << '\n';
  }
  out << '\n';
  for (const auto& [name, entry] : store.entries()) {
    const Tensor& t = entry.value;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out << ' ';
      out << format_double(t.data()[i]);
    }
    out << '\n';
  }
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileMissing, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line) || line != "PLCKPT 1")
    throw Error(ErrorCode::CorruptValue, path + ": missing PLCKPT 1 header");

  std::vector<std::pair<std::string, std::vector<int>>> manifest;
  while (std::getline(in, line)) {
    if (line.empty()) break;
    std::istringstream fields(line);
    std::string name;
    fields >> name;
    std::vector<int> shape;
    long long dim = 0;
    while (fields >> dim) shape.push_back(static_cast<int>(dim));
    if (name.empty()) throw Error(ErrorCode::CorruptValue, path + ": blank manifest entry");
    manifest.emplace_back(name, shape);
  }

  ParamStore store;
  for (const auto& [name, shape] : manifest) {
    if (!std::getline(in, line))
      throw Error(ErrorCode::CorruptValue, path + ": missing values for " + name);
    std::istringstream fields(line);
    std::vector<double> values;
    std::string token;
    while (fields >> token) values.push_back(parse_double(token, name));
    std::size_t expected = 1;
    for (int d : shape) expected *= static_cast<std::size_t>(d);
    if (values.size() != expected)
      throw Error(ErrorCode::ManifestShapeMismatch,
                  path + ": " + name + " declares " + std::to_string(expected) + " values, found " +
                      std::to_string(values.size()));
    store.add(name, Tensor(shape, std::move(values)), !is_buffer_name(name));
  }
  return store;
}

}  // namespace prooflens
