#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "findef/algebra_io.hpp"
#include "findef/congruences.hpp"
#include "findef/terminterp.hpp"

using namespace findef;

namespace {

struct Common {
  std::vector<std::string> algebras;
  std::string format = "text";
  std::string manifest;
  std::size_t threads = 1;
};

struct Run {
  RunManifest manifest;
  std::vector<FiniteStructure> k;
  Stopwatch clock;
};

Run start(const std::string& command, const Common& c) {
  Run r;
  r.manifest.command = command;
  for (const auto& s : c.algebras) {
    r.manifest.inputs.push_back(load_algebra(s));
    r.k.push_back(r.manifest.inputs.back().algebra);
  }
  if (r.k.empty()) throw Error("no algebra given");
  for (const auto& a : r.k) require_same_signature(r.k[0].signature(), a.signature());
  return r;
}

// Writes the text or JSON report and the manifest, and returns the exit code.
int finish(Run& r, const Common& c, const std::string& text, int code) {
  r.manifest.result["exit_code"] = code;
  r.manifest.wall_time_ms = r.clock.ms();
  if (c.format == "json")
    std::cout << manifest_body(r.manifest).dump(2) << "\n";
  else
    std::cout << text;
  if (!c.manifest.empty()) {
    std::ofstream out(c.manifest);
    if (!out) throw Error("cannot write manifest '" + c.manifest + "'");
    out << manifest_to_json(r.manifest).dump(2) << "\n";
  }
  return code;
}

std::string render_tuple(const std::vector<FiniteStructure>& k, const std::vector<std::size_t>& factors,
                         const Tuple& t) {
  if (factors.size() == 1) return k[factors[0]].element_name(t[0]);
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + k[factors[i]].element_name(t[i]);
  return s + ")";
}

std::string render_factors(const std::vector<FiniteStructure>& k, const std::vector<std::size_t>& factors) {
  std::vector<std::string> names;
  for (auto f : factors) names.push_back(k[f].name());
  return join_strings(names, " x ");
}

std::string render_counterexample(const std::vector<FiniteStructure>& k, const Counterexample& ce) {
  std::string s;
  s += "counterexample: " + map_kind_name(ce.kind) + "\n";
  auto list = [&](const std::vector<std::size_t>& f, const std::vector<Tuple>& ts, bool full) {
    std::vector<std::string> e;
    for (const auto& t : ts) e.push_back(render_tuple(k, f, t));
    return render_factors(k, f) + (full ? " (whole)" : "") + " {" + join_strings(e, ", ") + "}";
  };
  s += "  source: " + list(ce.source_factors, ce.source, ce.source_full) + "\n";
  s += "  target: " + list(ce.target_factors, ce.target, ce.target_full) + "\n";
  std::vector<std::string> sig;
  for (std::size_t i = 0; i < ce.sigma.size(); ++i)
    sig.push_back(render_tuple(k, ce.source_factors, ce.source[i]) + "->" +
                  render_tuple(k, ce.target_factors, ce.target[ce.sigma[i]]));
  s += "  sigma: " + join_strings(sig, " ") + "\n";
  std::vector<std::string> pt;
  for (auto p : ce.point) pt.push_back(render_tuple(k, ce.source_factors, ce.source[p]));
  s += "  tuple: (" + join_strings(pt, ", ") + ")\n";
  return s;
}

std::string render_subuniverse(const FiniteStructure& a, const std::vector<Element>& els) {
  std::vector<std::string> n;
  for (auto e : els) n.push_back(a.element_name(e));
  return "{" + join_strings(n, ",") + "}";
}

Element parse_element(const FiniteStructure& a, const std::string& s) {
  try {
    std::size_t pos = 0;
    unsigned long v = std::stoul(s, &pos);
    if (pos == s.size() && v < a.size()) return static_cast<Element>(v);
  } catch (const std::exception&) {
  }
  if (auto e = a.element_by_name(s)) return *e;
  throw Error("no element '" + s + "' in " + a.name());
}

Signature sublanguage(const FiniteStructure& a, const std::string& spec, const std::vector<std::string>& targets) {
  if (!spec.empty()) return a.signature().restrict_to(split_list(spec));
  return a.signature().without(targets);
}

Json term_json(const TermSearch& s) {
  Json j{{"status", search_status_name(s.status)}, {"term", s.term ? Json(s.term->to_string()) : Json(nullptr)}};
  if (s.certificate) {
    const auto& c = *s.certificate;
    j["certificate"] = {{"generators", c.generators},
                        {"target_row", c.target_row},
                        {"subuniverse_size", c.subuniverse_size}};
  }
  return j;
}

int search_code(SearchStatus s) { return s == SearchStatus::Found ? 0 : s == SearchStatus::NotFound ? 1 : 3; }

std::string search_text(const std::string& what, const TermSearch& s) {
  std::string t = what + ": " + search_status_name(s.status) + "\n";
  if (s.term) t += "term: " + s.term->to_string() + "\n";
  if (s.certificate)
    t += "certificate: the generated subuniverse (" + std::to_string(s.certificate->subuniverse_size) +
         " rows) misses the target row\n";
  return t;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
  std::string cls = "open";
  std::string target, sub;
  std::size_t coords = Bounds{}.max_product_coords, poly = Bounds{}.max_poly_arity;
  bool emit = false;
};

int cmd_check(const Common& c, const CheckArgs& a) {
  auto r = start("check", c);
  const auto& sig = r.k[0].signature();
  auto syms = split_list(a.target);
  if (syms.empty()) throw Error("empty --target");
  DefinabilityQuery q;
  q.k = r.k;
  q.cls = parse_class(a.cls);
  q.target = syms.size() == 1 && sig.find_relation(syms[0]) ? Target::relation(syms[0]) : Target::functions(syms);
  q.l = sublanguage(r.k[0], a.sub, syms);
  q.bounds.max_product_coords = a.coords;
  q.bounds.max_poly_arity = a.poly;
  q.bounds.threads = c.threads;
  std::vector<std::string> l;
  for (const auto& s : q.l.operations()) l.push_back(s.name);
  for (const auto& s : q.l.relations()) l.push_back(s.name);
  r.manifest.parameters = {{"class", class_name(q.cls)},
                           {"target", syms},
                           {"sublanguage", l},
                           {"max_product_coords", a.coords},
                           {"max_poly_arity", a.poly}};
  auto v = check(q);
  r.manifest.result = verdict_to_json(v);
  r.manifest.resource_bounded = v.bounded || v.kind == VerdictKind::ResourceExceeded;
  std::string t = "verdict: " + verdict_kind_name(v.kind) + "\nclass: " + class_name(v.cls) + "\n";
  if (v.witness && a.emit) t += "witness: " + v.witness->to_string() + "\n";
  if (v.counterexample) t += render_counterexample(q.k, *v.counterexample);
  if (!v.reason.empty()) t += "reason: " + v.reason + "\n";
  return finish(r, c, t, exit_code(v.kind));
}

struct TermArgs {
  bool majority = false, discriminator = false, baker_pixley = false, pixley = false;
  std::string represent, sub;
};

int cmd_term(const Common& c, const TermArgs& a) {
  auto r = start("term", c);
  int modes = a.majority + a.discriminator + a.pixley + !a.represent.empty();
  if (modes != 1) throw CLI::ValidationError("term", "choose exactly one of --majority, --discriminator, --pixley, --represent");
  std::string t;
  int code = 0;
  if (a.majority || a.discriminator) {
    auto s = a.majority ? find_majority_term(r.k) : find_discriminator_term(r.k);
    std::string what = a.majority ? "majority" : "discriminator";
    r.manifest.parameters = {{"mode", what}};
    r.manifest.result = term_json(s);
    r.manifest.resource_bounded = s.status == SearchStatus::Bounded;
    return finish(r, c, search_text(what, s), search_code(s.status));
  }
  if (a.pixley) {
    auto p = pixley_check(r.k);
    r.manifest.parameters = {{"mode", "pixley"}};
    r.manifest.result = {{"quasiprimal", p.quasiprimal},
                         {"discriminator", term_json(p.discriminator)},
                         {"d_conditions", verdict_kind_name(p.witness.kind)},
                         {"reason", p.witness.reason}};
    t = std::string("quasiprimal: ") + (p.quasiprimal ? "yes" : "no") + "\n" + search_text("discriminator", p.discriminator);
    t += "d as target: " + verdict_kind_name(p.witness.kind) + "\n";
    if (p.witness.failure && p.witness.failure->map) {
      std::vector<FiniteStructure> kd;
      for (const auto& x : r.k) kd.push_back(with_discriminator(x));
      t += render_counterexample(kd, *p.witness.failure->map);
    }
    return finish(r, c, t, p.quasiprimal ? 0 : 1);
  }
  auto l = sublanguage(r.k[0], a.sub, {a.represent});
  r.manifest.parameters = {{"mode", a.baker_pixley ? "baker-pixley" : "represent"}, {"target", a.represent}};
  if (!a.baker_pixley) {
    auto s = find_representing_term(r.k, a.represent, l);
    r.manifest.result = term_json(s);
    r.manifest.resource_bounded = s.status == SearchStatus::Bounded;
    return finish(r, c, search_text("represent " + a.represent, s), search_code(s.status));
  }
  InterpolationProblem p;
  p.k = r.k;
  p.f = a.represent;
  p.l = l;
  auto b = baker_pixley_term(p);
  Json j{{"majority", b.majority->to_string()},
         {"term", b.term ? Json(b.term->to_string()) : Json(nullptr)},
         {"induction_term", b.interpolant ? Json(b.interpolant->to_string()) : Json(nullptr)}};
  t = "majority: " + b.majority->to_string() + "\n";
  if (b.failure) {
    const auto& f = *b.failure;
    std::vector<std::string> s;
    for (auto [x, y] : f.subuniverse) s.push_back("(" + r.k[f.left].element_name(x) + "," + r.k[f.right].element_name(y) + ")");
    j["failure"] = {{"left", f.left}, {"right", f.right}, {"a", f.a}, {"b", f.b},
                    {"subuniverse", f.subuniverse}, {"value", f.value}};
    t += "hypothesis fails: S = Sg over " + r.k[f.left].name() + " x " + r.k[f.right].name() + " = {" +
         join_strings(s, ",") + "} does not contain (" + r.k[f.left].element_name(f.value.first) + "," +
         r.k[f.right].element_name(f.value.second) + ")\n";
    code = 1;
  } else if (b.term) {
    t += "term: " + b.term->to_string() + "\n";
  } else {
    code = search_code(b.status);
    t += "term: " + search_status_name(b.status) + "\n";
  }
  r.manifest.result = j;
  return finish(r, c, t, code);
}

struct CasesArgs {
  std::string target, sub, cls = "open";
};

int cmd_cases(const Common& c, const CasesArgs& a) {
  auto r = start("cases", c);
  InterpolationProblem p;
  p.k = r.k;
  p.f = a.target;
  p.l = sublanguage(r.k[0], a.sub, {a.target});
  p.mode = parse_case_mode(a.cls);
  p.bounds.threads = c.threads;
  r.manifest.parameters = {{"target", a.target}, {"class", case_mode_name(p.mode)}};
  auto res = find_term_by_cases(p);
  Json j{{"verdict", verdict_kind_name(res.kind)}, {"reason", res.reason}};
  std::string t = "verdict: " + verdict_kind_name(res.kind) + "\n";
  if (res.cases) {
    Json cs = Json::array();
    for (const auto& k : res.cases->cases) {
      cs.push_back({{"term", k.term.to_string()}, {"condition", k.condition.to_string()}});
      t += "  " + k.term.to_string() + " if " + k.condition.to_string() + "\n";
    }
    j["cases"] = cs;
  }
  if (res.failure) {
    const auto& f = *res.failure;
    if (f.condition == CaseFailure::Condition::Subuniverse) {
      const auto& m = r.k[f.member];
      std::vector<std::string> g;
      for (auto e : f.generators) g.push_back(m.element_name(e));
      t += "subuniverse Sg{" + join_strings(g, ",") + "} = " + render_subuniverse(m, f.subuniverse) + " in " +
           m.name() + " is not closed: " + a.target + " gives " + m.element_name(f.value) + "\n";
      j["failure"] = {{"condition", "subuniverse"}, {"member", f.member}, {"generators", f.generators},
                      {"subuniverse", f.subuniverse}, {"value", f.value}};
    } else {
      t += render_counterexample(r.k, *f.map);
      j["failure"] = {{"condition", "maps"}, {"counterexample", counterexample_to_json(*f.map)}};
    }
  }
  if (!res.reason.empty()) t += "reason: " + res.reason + "\n";
  r.manifest.result = j;
  r.manifest.resource_bounded = res.kind == VerdictKind::ResourceExceeded;
  return finish(r, c, t, exit_code(res.kind));
}

struct CongArgs {
  std::vector<std::string> principal;
  bool lattice = false, cep = false, fhp = false, dpc = false;
  std::string cls = "pos-open";
};

int cmd_cong(const Common& c, const CongArgs& a) {
  auto r = start("cong", c);
  int modes = !a.principal.empty() + a.lattice + a.cep + a.fhp + a.dpc;
  if (modes != 1)
    throw CLI::ValidationError("cong", "choose exactly one of --principal, --lattice, --cep, --fraser-horn, --dpc-formula");
  const auto& a0 = r.k[0];
  std::string t;
  int code = 0;
  if (!a.principal.empty()) {
    Element x = parse_element(a0, a.principal[0]), y = parse_element(a0, a.principal[1]);
    auto th = principal_congruence(a0, x, y);
    r.manifest.parameters = {{"mode", "principal"}, {"pair", {x, y}}};
    r.manifest.result = {{"labels", th.labels()}, {"partition", th.to_string()}};
    t = th.to_string() + "\n";
  } else if (a.lattice) {
    auto cs = congruence_lattice(a0);
    r.manifest.parameters = {{"mode", "lattice"}};
    Json arr = Json::array();
    for (const auto& th : cs) {
      arr.push_back(th.to_string());
      t += th.to_string() + "\n";
    }
    r.manifest.result = {{"congruences", arr}};
  } else if (a.cep) {
    RelCongruenceContext ctx(r.k);
    auto f = check_cep(ctx);
    r.manifest.parameters = {{"mode", "cep"}};
    if (!f) {
      r.manifest.result = {{"holds", true}};
      t = "CEP: holds\n";
    } else {
      const auto& m = r.k[f->member];
      r.manifest.result = {{"holds", false}, {"member", f->member}, {"subuniverse", f->subuniverse},
                           {"pair", {f->a, f->b}}, {"in_sub", f->in_sub}, {"restricted", f->restricted}};
      t = "CEP: fails in " + m.name() + " on the subuniverse " + render_subuniverse(m, f->subuniverse) + " at (" +
          m.element_name(f->a) + "," + m.element_name(f->b) + ")\n";
      code = 1;
    }
  } else if (a.fhp) {
    auto f = check_fraser_horn(r.k);
    r.manifest.parameters = {{"mode", "fraser-horn"}};
    if (!f) {
      r.manifest.result = {{"holds", true}};
      t = "Fraser-Horn: holds on binary products\n";
    } else {
      r.manifest.result = {{"holds", false}, {"left", f->left}, {"right", f->right}, {"pair", {f->p, f->q}}};
      t = "Fraser-Horn: skew congruence on " + r.k[f->left].name() + " x " + r.k[f->right].name() +
          " generated by elements " + std::to_string(f->p) + "," + std::to_string(f->q) + "\n";
      code = 1;
    }
  } else {
    RelCongruenceContext ctx(r.k);
    auto cls = parse_class(a.cls);
    r.manifest.parameters = {{"mode", "dpc-formula"}, {"class", class_name(cls)}};
    Bounds b;
    b.threads = c.threads;
    try {
      auto phi = synthesize_dpc_formula(ctx, cls, b);
      r.manifest.result = {{"formula", phi.to_string()}};
      t = phi.to_string() + "\n";
    } catch (const ResourceExceeded&) {
      throw;
    } catch (const Error& e) {
      r.manifest.result = {{"formula", nullptr}, {"reason", e.what()}};
      t = std::string("no formula: ") + e.what() + "\n";
      code = 1;
    }
  }
  return finish(r, c, t, code);
}

struct SubalgArgs {
  bool all = false;
  std::string generate;
};

int cmd_subalg(const Common& c, const SubalgArgs& a) {
  auto r = start("subalg", c);
  const auto& a0 = r.k[0];
  if (a.all == !a.generate.empty()) throw CLI::ValidationError("subalg", "choose exactly one of --all, --generate");
  std::vector<Subuniverse> subs;
  if (a.all) {
    subs = all_subuniverses(a0);
    r.manifest.parameters = {{"mode", "all"}};
  } else {
    Tuple g;
    for (const auto& s : split_list(a.generate)) g.push_back(parse_element(a0, s));
    subs = {generated_subuniverse(a0, g)};
    r.manifest.parameters = {{"mode", "generate"}, {"generators", g}};
  }
  Json arr = Json::array();
  std::string t;
  for (const auto& s : subs) {
    arr.push_back(s.elements());
    t += render_subuniverse(a0, s.elements()) + "\n";
  }
  r.manifest.result = {{"subuniverses", arr}};
  return finish(r, c, t, 0);
}

int cmd_hom(const Common& c, const std::string& kind) {
  if (c.algebras.empty() || c.algebras.size() > 2) throw CLI::ValidationError("hom", "expects A [B]");
  auto r = start("hom", c);
  const auto& a = r.k[0];
  const auto& b = r.k.size() > 1 ? r.k[1] : r.k[0];
  auto mk = parse_map_kind(kind);
  auto maps = find_maps(Subuniverse::full(a), Subuniverse::full(b), mk);
  r.manifest.parameters = {{"kind", map_kind_name(mk)}};
  Json arr = Json::array();
  std::string t;
  for (const auto& m : maps) {
    arr.push_back(m.image);
    std::vector<std::string> s;
    for (Element e = 0; e < a.size(); ++e) s.push_back(a.element_name(e) + "->" + b.element_name(m.image[e]));
    t += join_strings(s, " ") + "\n";
  }
  r.manifest.result = {{"maps", arr}};
  if (maps.empty()) t = "no " + map_kind_name(mk) + " from " + a.name() + " to " + b.name() + "\n";
  return finish(r, c, t, maps.empty() ? 1 : 0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Definability, term interpolation and congruences over finite algebras"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* s) {
    s->add_option("algebras", common.algebras, "Algebra files or built-in names")->required();
    s->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    s->add_option("--manifest", common.manifest, "Write a run manifest to this path");
    s->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  CheckArgs ca;
  auto* check_cmd = app.add_subcommand("check", "Decide definability of a target in a formula class");
  add_common(check_cmd);
  check_cmd->add_option("--class", ca.cls, "Formula class")
      ->check(CLI::IsMember({"atomic-conj", "pos-open", "open-horn", "open-strict-horn", "open", "pp", "exist-pos",
                             "exist-horn", "exist"}));
  check_cmd->add_option("--target", ca.target, "Target symbol or comma-separated function symbols")->required();
  check_cmd->add_option("--sublanguage", ca.sub, "Comma-separated symbols of L");
  check_cmd->add_option("--max-product-coords", ca.coords, "Bound on product coordinates");
  check_cmd->add_option("--max-poly-arity", ca.poly, "Bound on product arity in existential checks");
  check_cmd->add_flag("--emit-witness", ca.emit, "Print the witness formula");

  TermArgs ta;
  auto* term_cmd = app.add_subcommand("term", "Search for terms");
  add_common(term_cmd);
  term_cmd->add_flag("--majority", ta.majority, "Majority term");
  term_cmd->add_flag("--discriminator", ta.discriminator, "Ternary discriminator term");
  term_cmd->add_flag("--pixley", ta.pixley, "Quasiprimality report");
  term_cmd->add_option("--represent", ta.represent, "Term representing this function symbol");
  term_cmd->add_flag("--baker-pixley", ta.baker_pixley, "Use the Baker-Pixley procedure for --represent");
  term_cmd->add_option("--sublanguage", ta.sub, "Comma-separated symbols of L");

  CasesArgs cs;
  auto* cases_cmd = app.add_subcommand("cases", "Term-valued definition by cases");
  add_common(cases_cmd);
  cases_cmd->add_option("--target", cs.target, "Function symbol")->required();
  cases_cmd->add_option("--class", cs.cls, "Case class")->check(CLI::IsMember({"open", "pos"}));
  cases_cmd->add_option("--sublanguage", cs.sub, "Comma-separated symbols of L");

  CongArgs cg;
  auto* cong_cmd = app.add_subcommand("cong", "Congruences");
  add_common(cong_cmd);
  cong_cmd->add_option("--principal", cg.principal, "Principal congruence of a pair")->expected(2);
  cong_cmd->add_flag("--lattice", cg.lattice, "List all congruences");
  cong_cmd->add_flag("--cep", cg.cep, "Relative congruence extension property");
  cong_cmd->add_flag("--fraser-horn", cg.fhp, "Fraser-Horn property on binary products");
  cong_cmd->add_flag("--dpc-formula", cg.dpc, "Formula defining relative principal congruences");
  cong_cmd->add_option("--class", cg.cls, "Formula class for --dpc-formula")
      ->check(CLI::IsMember({"pos-open", "atomic-conj", "pp"}));

  SubalgArgs sa;
  auto* sub_cmd = app.add_subcommand("subalg", "Subuniverses");
  add_common(sub_cmd);
  sub_cmd->add_flag("--all", sa.all, "All subuniverses");
  sub_cmd->add_option("--generate", sa.generate, "Subuniverse generated by comma-separated elements");

  std::string kind = "hom";
  auto* hom_cmd = app.add_subcommand("hom", "Homomorphisms from A to B (default B = A)");
  add_common(hom_cmd);
  hom_cmd->add_option("--kind", kind, "Map kind")->check(CLI::IsMember({"hom", "emb", "iso"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    if (*check_cmd) return cmd_check(common, ca);
    if (*term_cmd) return cmd_term(common, ta);
    if (*cases_cmd) return cmd_cases(common, cs);
    if (*cong_cmd) return cmd_cong(common, cg);
    if (*sub_cmd) return cmd_subalg(common, sa);
    if (*hom_cmd) return cmd_hom(common, kind);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ResourceExceeded& e) {
    std::cerr << "resource bound: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
