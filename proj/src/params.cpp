// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/params.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "isax/error.hpp"

namespace isax {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;
}

ValueGrid& ParamStore::create(const std::string& name, ValueGrid init) {
  if (entries_.count(name)) throw Error("parameter already exists: " + name);
  Entry e;
  e.grad = ValueGrid(init.shape());
  e.m1 = ValueGrid(init.shape());
  e.m2 = ValueGrid(init.shape());
  e.value = std::move(init);
  auto [it, ok] = entries_.emplace(name, std::move(e));
  (void)ok;
  return it->second.value;
}

bool ParamStore::has(const std::string& name) const { return entries_.count(name) > 0; }

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

ValueGrid& ParamStore::value(const std::string& name) { return entry(name).value; }

const ValueGrid& ParamStore::value(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter: " + name);
  return it->second.value;
}

ValueGrid& ParamStore::grad(const std::string& name) { return entry(name).grad; }
ValueGrid& ParamStore::moment1(const std::string& name) { return entry(name).m1; }
ValueGrid& ParamStore::moment2(const std::string& name) { return entry(name).m2; }

void ParamStore::zero_grads() {
  for (auto& [name, e] : entries_) e.grad.fill(0.0);
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

long ParamStore::total_coords() const {
  long n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

std::string ParamStore::to_json() const {
  json doc;
  doc["version"] = kFormatVersion;
  doc["step"] = step_;
  json params = json::object();
  for (const auto& [name, e] : entries_) {
    json p;
    p["shape"] = e.value.shape();
    p["values"] = e.value.data();
    params[name] = std::move(p);
  }
  doc["params"] = std::move(params);
  return doc.dump();
}

ParamStore ParamStore::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("parameter document parse failure: ") + e.what());
  }
  if (!doc.contains("version") || doc["version"].get<int>() != kFormatVersion)
    throw Error("unsupported parameter document version");
  ParamStore store;
  store.step_ = doc.value("step", 0L);
  for (auto& [name, p] : doc.at("params").items()) {
    std::vector<long> shape = p.at("shape").get<std::vector<long>>();
    std::vector<double> values = p.at("values").get<std::vector<double>>();
    store.create(name, ValueGrid(std::move(shape), std::move(values)));
  }
  return store;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << to_json();
  if (!out) throw Error("write failure: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

Var ParamBinding::operator[](const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = tape_.input(store_.value(name));
  bound_.emplace(name, v);
  return v;
}

void ParamBinding::accumulate_grads() {
  for (const auto& [name, var] : bound_) {
    const ValueGrid& g = tape_.grad(var);
    ValueGrid& dst = store_.grad(name);
    for (long i = 0; i < dst.size(); ++i) dst.at(i) += g.at(i);
  }
}

}  // namespace isax
