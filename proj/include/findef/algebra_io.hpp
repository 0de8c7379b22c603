#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "findef/builtins.hpp"
#include "findef/definability.hpp"

namespace findef {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) throw Error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Algebra files

inline Json algebra_to_json(const FiniteStructure& a) {
  Json j;
  j["name"] = a.name();
  j["size"] = a.size();
  if (a.has_element_names()) j["elements"] = a.element_names();
  Json ops = Json::object();
  for (std::size_t i = 0; i < a.signature().operations().size(); ++i) {
    const auto& s = a.signature().operations()[i];
    ops[s.name] = {{"arity", s.arity}, {"table", a.table(i)}};
  }
  j["operations"] = ops;
  Json rels = Json::object();
  for (std::size_t i = 0; i < a.signature().relations().size(); ++i) {
    const auto& s = a.signature().relations()[i];
    rels[s.name] = {{"arity", s.arity}, {"tuples", a.relation(i).tuples()}};
  }
  j["relations"] = rels;
  return j;
}

namespace detail {

inline std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

inline const Json& field(const Json& j, const std::string& where, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline std::size_t natural(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ParseError(where, "expected a non-negative integer");
  return j.get<std::size_t>();
}

inline Element element(const Json& j, const std::string& where, std::size_t size) {
  std::size_t e = natural(j, where);
  if (e >= size) throw ParseError(where, "element " + std::to_string(e) + " out of range");
  return static_cast<Element>(e);
}

}  // namespace detail

inline FiniteStructure algebra_from_json(const Json& j, const std::string& src = "<input>") {
  if (!j.is_object()) throw ParseError(src, "expected an object at the top level");
  const auto& name = detail::field(j, src, "name");
  if (!name.is_string()) throw ParseError(src + "#/name", "expected a string");
  std::size_t n = detail::natural(detail::field(j, src, "size"), src + "#/size");
  if (n == 0) throw ParseError(src + "#/size", "empty universe");
  std::vector<std::string> names;
  if (j.contains("elements")) {
    const auto& e = j.at("elements");
    if (!e.is_array() || e.size() != n) throw ParseError(src + "#/elements", "expected " + std::to_string(n) + " names");
    for (const auto& x : e) {
      if (!x.is_string()) throw ParseError(src + "#/elements", "expected strings");
      names.push_back(x.get<std::string>());
    }
  }
  std::vector<Symbol> ops, rels;
  std::vector<std::vector<Element>> tables;
  std::vector<std::vector<Tuple>> tuples;
  if (j.contains("operations")) {
    const auto& o = j.at("operations");
    if (!o.is_object()) throw ParseError(src + "#/operations", "expected an object");
    for (const auto& [sym, spec] : o.items()) {
      std::string at = src + "#/operations/" + sym;
      std::size_t ar = detail::natural(detail::field(spec, at, "arity"), at + "/arity");
      const auto& t = detail::field(spec, at, "table");
      if (!t.is_array()) throw ParseError(at + "/table", "expected an array");
      std::size_t want = checked_pow(n, ar, std::size_t{1} << 28);
      if (t.size() != want)
        throw ParseError(at + "/table", "has " + std::to_string(t.size()) + " entries, expected " + std::to_string(want));
      std::vector<Element> tab;
      for (std::size_t i = 0; i < t.size(); ++i) tab.push_back(detail::element(t[i], at + "/table/" + std::to_string(i), n));
      ops.push_back({sym, ar});
      tables.push_back(std::move(tab));
    }
  }
  if (j.contains("relations")) {
    const auto& r = j.at("relations");
    if (!r.is_object()) throw ParseError(src + "#/relations", "expected an object");
    for (const auto& [sym, spec] : r.items()) {
      std::string at = src + "#/relations/" + sym;
      std::size_t ar = detail::natural(detail::field(spec, at, "arity"), at + "/arity");
      const auto& ts = detail::field(spec, at, "tuples");
      if (!ts.is_array()) throw ParseError(at + "/tuples", "expected an array");
      std::vector<Tuple> rows;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        std::string ti = at + "/tuples/" + std::to_string(i);
        if (!ts[i].is_array() || ts[i].size() != ar) throw ParseError(ti, "expected a tuple of length " + std::to_string(ar));
        Tuple row;
        for (std::size_t c = 0; c < ar; ++c) row.push_back(detail::element(ts[i][c], ti, n));
        rows.push_back(std::move(row));
      }
      rels.push_back({sym, ar});
      tuples.push_back(std::move(rows));
    }
  }
  for (const auto& [key, v] : j.items())
    if (key != "name" && key != "size" && key != "elements" && key != "operations" && key != "relations")
      throw ParseError(src + "#/" + key, "unknown field");
  try {
    return FiniteStructure(name.get<std::string>(), Signature(std::move(ops), std::move(rels)), n, std::move(tables),
                           std::move(tuples), std::move(names));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(src, e.what());
  }
}

inline FiniteStructure parse_algebra(std::string_view text, const std::string& src = "<input>") {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::string msg = e.what();
    if (auto p = msg.find(": "); p != std::string::npos) msg = msg.substr(p + 2);
    throw ParseError(src + ":" + detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1), msg);
  }
  return algebra_from_json(j, src);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LoadedAlgebra {
  FiniteStructure algebra;
  std::string source;  // path, or the built-in name
  std::string sha256;  // of the file bytes, or of the canonical JSON of a built-in
  bool builtin = false;
};

// A built-in name (stone3, bool2, demorganM, heyting3) or a path; "name.alg"
// falls back to the built-in when no such file exists.
inline LoadedAlgebra load_algebra(const std::string& spec) {
  auto builtin = [&](const FiniteStructure& a) {
    return LoadedAlgebra{a, spec, sha256_hex(algebra_to_json(a).dump()), true};
  };
  if (auto b = builtins::by_name(spec)) return builtin(*b);
  std::ifstream probe(spec);
  if (!probe) {
    std::string stem = spec;
    if (auto s = stem.find_last_of('/'); s != std::string::npos) stem = stem.substr(s + 1);
    if (stem.size() > 4 && stem.compare(stem.size() - 4, 4, ".alg") == 0) stem.resize(stem.size() - 4);
    if (auto b = builtins::by_name(stem)) return builtin(*b);
  }
  std::string text = read_file(spec);
  return LoadedAlgebra{parse_algebra(text, spec), spec, sha256_hex(text), false};
}

// ---------------------------------------------------------------------------
// Verdicts

inline Json counterexample_to_json(const Counterexample& ce) {
  return Json{{"kind", map_kind_name(ce.kind)},   {"source_factors", ce.source_factors},
              {"source", ce.source},              {"target_factors", ce.target_factors},
              {"target", ce.target},              {"sigma", ce.sigma},
              {"point", ce.point},                {"source_full", ce.source_full},
              {"target_full", ce.target_full}};
}

inline Counterexample counterexample_from_json(const Json& j) {
  Counterexample ce;
  ce.kind = parse_map_kind(j.at("kind").get<std::string>());
  j.at("source_factors").get_to(ce.source_factors);
  j.at("source").get_to(ce.source);
  j.at("target_factors").get_to(ce.target_factors);
  j.at("target").get_to(ce.target);
  j.at("sigma").get_to(ce.sigma);
  j.at("point").get_to(ce.point);
  j.at("source_full").get_to(ce.source_full);
  j.at("target_full").get_to(ce.target_full);
  return ce;
}

inline Json verdict_to_json(const Verdict& v) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["verdict"] = verdict_kind_name(v.kind);
  j["class"] = class_name(v.cls);
  j["witness"] = v.witness ? Json(v.witness->to_string()) : Json(nullptr);
  j["verified"] = v.verified;
  j["counterexample"] = v.counterexample ? counterexample_to_json(*v.counterexample) : Json(nullptr);
  j["reason"] = v.reason;
  j["bounded"] = v.bounded;
  return j;
}

inline VerdictKind parse_verdict_kind(std::string_view s) {
  for (auto k : {VerdictKind::Definable, VerdictKind::NotDefinable, VerdictKind::ResourceExceeded})
    if (verdict_kind_name(k) == s) return k;
  throw Error("unknown verdict '" + std::string(s) + "'");
}

// The signature is needed to re-parse the witness.
inline Verdict verdict_from_json(const Json& j, const Signature& sig) {
  if (j.at("schema_version").get<int>() != kSchemaVersion) throw Error("unsupported schema version");
  Verdict v;
  v.kind = parse_verdict_kind(j.at("verdict").get<std::string>());
  v.cls = parse_class(j.at("class").get<std::string>());
  if (!j.at("witness").is_null()) v.witness = parse_formula(j.at("witness").get<std::string>(), sig);
  v.verified = j.at("verified").get<bool>();
  if (!j.at("counterexample").is_null()) v.counterexample = counterexample_from_json(j.at("counterexample"));
  v.reason = j.at("reason").get<std::string>();
  v.bounded = j.at("bounded").get<bool>();
  return v;
}

inline int exit_code(VerdictKind k) {
  switch (k) {
    case VerdictKind::Definable: return 0;
    case VerdictKind::NotDefinable: return 1;
    case VerdictKind::ResourceExceeded: return 3;
  }
  return 2;
}

// ---------------------------------------------------------------------------
// Run manifests

struct RunManifest {
  std::string command;
  std::vector<LoadedAlgebra> inputs;
  Json parameters = Json::object();
  Json result = Json::object();
  bool resource_bounded = false;
  double wall_time_ms = 0;
};

// Everything except timing.
inline Json manifest_body(const RunManifest& m) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = "findef";
  j["version"] = kToolVersion;
  j["command"] = m.command;
  Json in = Json::array();
  for (const auto& a : m.inputs)
    in.push_back({{"source", a.source}, {"builtin", a.builtin}, {"sha256", a.sha256}});
  j["inputs"] = in;
  j["parameters"] = m.parameters;
  j["result"] = m.result;
  j["resource_bounded"] = m.resource_bounded;
  return j;
}

inline Json manifest_to_json(const RunManifest& m) {
  Json j = manifest_body(m);
  j["wall_time_ms"] = m.wall_time_ms;
  return j;
}

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace findef
