// psi: batch front end for parsing, transition enumeration, instance
// checking and bisimulation over the bundled calculus instances.
//
// Exit codes: 0 success / bisimilar / agree, 1 not bisimilar / disagree,
// 2 usage or input errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "psi/psi.hpp"

namespace {

struct DomFlags {
  std::vector<std::string> names;
  std::vector<long long> literals;
  int term_depth = 1;
  int assert_depth = 0;
  int rep_bound = 1;
  int probe_depth = 1;
};

void add_dom_flags(CLI::App* cmd, DomFlags& f) {
  cmd->add_option("--names", f.names, "extra pool names (beyond the file's declarations)");
  cmd->add_option("--literals", f.literals, "extra literal pool values");
  cmd->add_option("--term-depth", f.term_depth, "term constructor depth bound");
  cmd->add_option("--assert-depth", f.assert_depth, "assertion domain size bound");
  cmd->add_option("--rep-bound", f.rep_bound, "replication unfolding bound");
  cmd->add_option("--probe-depth", f.probe_depth, "probe condition depth bound");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw psi::error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void collect_literals(const psi::Term& t, std::set<long long>& out) {
  if (t.kind == psi::Term::Kind::literal) out.insert(t.lit);
  for (const psi::Term& a : t.args) collect_literals(a, out);
}

void collect_literals(const psi::AgentRef& p, std::set<long long>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, psi::OutputNode>) {
          collect_literals(n.subject, out);
          collect_literals(n.object, out);
          collect_literals(n.cont, out);
        } else if constexpr (std::is_same_v<T, psi::InputNode>) {
          collect_literals(n.subject, out);
          collect_literals(n.cont, out);
        } else if constexpr (std::is_same_v<T, psi::CaseNode>) {
          for (const auto& br : n.branches) {
            collect_literals(br.cond.lhs, out);
            collect_literals(br.cond.rhs, out);
            collect_literals(br.body, out);
          }
        } else if constexpr (std::is_same_v<T, psi::RestrictionNode>) {
          collect_literals(n.body, out);
        } else if constexpr (std::is_same_v<T, psi::ParallelNode>) {
          collect_literals(n.left, out);
          collect_literals(n.right, out);
        } else if constexpr (std::is_same_v<T, psi::ReplicationNode>) {
          collect_literals(n.body, out);
        } else {
          for (const auto& b : n.psi.binds) collect_literals(b.value, out);
        }
      },
      p->node);
}

psi::DomainConfig make_dom(const psi::ParsedUnit& unit, const DomFlags& f,
                           std::initializer_list<psi::AgentRef> agents) {
  psi::DomainConfig dom;
  dom.names = unit.declared;
  for (const std::string& n : f.names) dom.names.insert(psi::intern(n));
  dom.constants = unit.declared;
  std::set<long long> lits;
  for (const psi::AgentRef& a : agents) collect_literals(a, lits);
  for (long long v : f.literals) lits.insert(v);
  dom.literals.assign(lits.begin(), lits.end());
  dom.term_depth = f.term_depth;
  dom.assert_depth = f.assert_depth;
  dom.rep_bound = f.rep_bound;
  dom.probe_depth = f.probe_depth;
  return dom;
}

nlohmann::json agent_ast(const psi::AgentRef& p) {
  using namespace psi;
  return std::visit(
      [&](const auto& n) -> nlohmann::json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, OutputNode>)
          return {{"node", "output"},
                  {"subject", print_term(n.subject)},
                  {"object", print_term(n.object)},
                  {"cont", agent_ast(n.cont)}};
        else if constexpr (std::is_same_v<T, InputNode>)
          return {{"node", "input"},
                  {"subject", print_term(n.subject)},
                  {"binder", display(n.binder)},
                  {"cont", agent_ast(n.cont)}};
        else if constexpr (std::is_same_v<T, CaseNode>) {
          nlohmann::json branches = nlohmann::json::array();
          for (const auto& br : n.branches)
            branches.push_back(
                {{"cond", print_condition(br.cond)}, {"body", agent_ast(br.body)}});
          return {{"node", "case"}, {"branches", branches}};
        } else if constexpr (std::is_same_v<T, RestrictionNode>)
          return {{"node", "new"}, {"name", display(n.name)}, {"body", agent_ast(n.body)}};
        else if constexpr (std::is_same_v<T, ParallelNode>)
          return {{"node", "par"}, {"left", agent_ast(n.left)}, {"right", agent_ast(n.right)}};
        else if constexpr (std::is_same_v<T, ReplicationNode>)
          return {{"node", "rep"}, {"body", agent_ast(n.body)}};
        else
          return {{"node", "assertion"}, {"psi", print_assertion(n.psi)}};
      },
      p->node);
}

std::uint64_t default_seed() {
  if (const char* s = std::getenv("PSI_SEED")) return std::strtoull(s, nullptr, 10);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psi-calculus workbench"};
  app.require_subcommand(1);
  bool json_out = false;
  app.add_flag("--json", json_out, "machine-readable JSON output");

  // parse
  auto* cmd_parse = app.add_subcommand("parse", "parse an agent file and dump the AST");
  std::string parse_file;
  cmd_parse->add_option("file", parse_file, "agent file")->required();

  // lts
  auto* cmd_lts = app.add_subcommand("lts", "reachable transition graph of a definition");
  std::string lts_file, lts_def, lts_mode = "symbolic";
  bool lts_dot = false;
  DomFlags lts_dom;
  cmd_lts->add_option("file", lts_file)->required();
  cmd_lts->add_option("def", lts_def)->required();
  cmd_lts->add_option("--mode", lts_mode, "late|early|symbolic");
  cmd_lts->add_flag("--dot", lts_dot, "emit graphviz instead of JSON");
  add_dom_flags(cmd_lts, lts_dom);

  // bisim
  auto* cmd_bisim = app.add_subcommand("bisim", "check two definitions for bisimilarity");
  std::string bs_file, bs_p, bs_q, bs_mode = "symbolic";
  DomFlags bs_dom;
  cmd_bisim->add_option("file", bs_file)->required();
  cmd_bisim->add_option("defP", bs_p)->required();
  cmd_bisim->add_option("defQ", bs_q)->required();
  cmd_bisim->add_option("--mode", bs_mode, "concrete|symbolic|crosscheck");
  add_dom_flags(cmd_bisim, bs_dom);

  // check-instance
  auto* cmd_check = app.add_subcommand("check-instance", "run the parameter requisite suite");
  std::string ci_key;
  int ci_samples = 500;
  std::uint64_t ci_seed = default_seed();
  DomFlags ci_dom;
  ci_dom.assert_depth = 1;
  ci_dom.literals = {0, 1, 2, 3};
  cmd_check->add_option("key", ci_key, "instance key")->required();
  cmd_check->add_option("--samples", ci_samples);
  cmd_check->add_option("--seed", ci_seed);
  add_dom_flags(cmd_check, ci_dom);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_name() == "CallForHelp" ? 0 : 2;
  }

  try {
    if (*cmd_parse) {
      psi::ParsedUnit unit = psi::parse(slurp(parse_file));
      if (json_out) {
        nlohmann::json defs = nlohmann::json::array();
        for (const auto& [name, agent] : unit.defs)
          defs.push_back({{"name", name}, {"agent", psi::print_agent(agent)},
                          {"ast", agent_ast(agent)}});
        nlohmann::json names = nlohmann::json::array();
        for (psi::Name n : unit.declared) names.push_back(psi::display(n));
        std::cout << nlohmann::json{{"instance", unit.inst->key()},
                                    {"names", names},
                                    {"defs", defs}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << "instance " << unit.inst->key() << "\n";
        for (const auto& [name, agent] : unit.defs)
          std::cout << "def " << name << " = " << psi::print_agent(agent) << "\n";
      }
      return 0;
    }

    if (*cmd_lts) {
      psi::ParsedUnit unit = psi::parse(slurp(lts_file));
      const psi::AgentRef& root = unit.lookup(lts_def);
      psi::DomainConfig dom = make_dom(unit, lts_dom, {root});
      psi::Lts lts = psi::build_lts(*unit.inst, psi::lts_mode_from(lts_mode),
                                    psi::Assertion::unit(), root, dom);
      if (lts_dot)
        std::cout << psi::to_dot(lts);
      else
        std::cout << psi::to_json(lts).dump(2) << "\n";
      return 0;
    }

    if (*cmd_bisim) {
      psi::ParsedUnit unit = psi::parse(slurp(bs_file));
      const psi::AgentRef& p = unit.lookup(bs_p);
      const psi::AgentRef& q = unit.lookup(bs_q);
      psi::DomainConfig dom = make_dom(unit, bs_dom, {p, q});
      if (bs_mode == "concrete") {
        psi::Verdict v = psi::concrete_bisim(*unit.inst, psi::Assertion::unit(), p, q, dom);
        std::cout << (json_out ? v.to_json().dump(2)
                               : std::string(v.bisimilar ? "bisimilar" : "not bisimilar"))
                  << "\n";
        return v.bisimilar ? 0 : 1;
      }
      if (bs_mode == "symbolic") {
        psi::Verdict v = psi::symbolic_bisim(*unit.inst, p, q, dom);
        std::cout << (json_out ? v.to_json().dump(2)
                               : std::string(v.bisimilar ? "bisimilar" : "not bisimilar"))
                  << "\n";
        return v.bisimilar ? 0 : 1;
      }
      if (bs_mode == "crosscheck") {
        psi::CrossReport rep = psi::crosscheck_full_abstraction(*unit.inst, p, q, dom);
        if (json_out)
          std::cout << nlohmann::json{{"agree", rep.agree},
                                      {"concrete", rep.concrete_bisimilar},
                                      {"symbolic", rep.symbolic_bisimilar},
                                      {"details", rep.details}}
                           .dump(2)
                    << "\n";
        else
          std::cout << (rep.agree ? "agree" : "DISAGREE") << " (concrete="
                    << (rep.concrete_bisimilar ? "bisimilar" : "not bisimilar")
                    << ", symbolic=" << (rep.symbolic_bisimilar ? "bisimilar" : "not bisimilar")
                    << ")\n";
        return rep.agree ? 0 : 1;
      }
      std::cerr << "unknown bisim mode: " << bs_mode << "\n";
      return 2;
    }

    if (*cmd_check) {
      const psi::Instance& inst = psi::registry_lookup(ci_key);
      psi::NameSet pool;
      for (const char* n : {"a", "b", "c"}) pool.insert(psi::intern(n));
      for (const std::string& n : ci_dom.names) pool.insert(psi::intern(n));
      psi::DomainConfig dom;
      dom.names = pool;
      dom.literals = ci_dom.literals;
      dom.term_depth = ci_dom.term_depth;
      dom.assert_depth = ci_dom.assert_depth;
      dom.probe_depth = ci_dom.probe_depth;
      psi::RequisiteReport rep = psi::check_requisites(inst, pool, dom, ci_samples, ci_seed);
      if (json_out) {
        nlohmann::json laws = nlohmann::json::array();
        for (const auto& l : rep.laws)
          laws.push_back({{"law", l.law},
                          {"passed", l.passed},
                          {"checked", l.checked},
                          {"counterexample", l.counterexample}});
        std::cout << nlohmann::json{{"instance", ci_key},
                                    {"samples", ci_samples},
                                    {"seed", ci_seed},
                                    {"laws", laws},
                                    {"all_passed", rep.all_passed()}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << "instance " << ci_key << " (" << ci_samples << " samples, seed "
                  << ci_seed << ")\n"
                  << psi::format_report(rep);
      }
      return rep.all_passed() ? 0 : 1;
    }
  } catch (const psi::syntax_error& e) {
    std::cerr << "syntax error: " << e.what() << "\n";
    return 2;
  } catch (const psi::unknown_instance& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const psi::unknown_definition& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const psi::undeclared_name& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const psi::guardedness_violation& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const psi::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
