#ifndef PSI_SYNTAX_HPP
#define PSI_SYNTAX_HPP

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "psi/agent.hpp"
#include "psi/instance.hpp"
#include "psi/instances.hpp"

namespace psi {

struct syntax_error : error {
  int line, col;
  syntax_error(const std::string& msg, int l, int c)
      : error(msg + " at " + std::to_string(l) + ":" + std::to_string(c)), line(l), col(c) {}
};

struct undeclared_name : error {
  using error::error;
};

struct guardedness_violation : error {
  using error::error;
};

struct unknown_definition : error {
  using error::error;
};

struct ParsedUnit {
  const Instance* inst = nullptr;
  NameSet declared;
  std::vector<std::pair<std::string, AgentRef>> defs;

  const AgentRef& lookup(const std::string& name) const {
    for (const auto& [k, v] : defs)
      if (k == name) return v;
    throw unknown_definition("unknown definition: " + name);
  }
};

// ---- lexer ----

namespace lex {

enum class Tok {
  ident, integer, bang, lpar, rpar, lassert, rassert, pipe, dot, comma,
  colon, assign_op, eq, neq, chaneq, alt, kw_instance, kw_names, kw_def,
  kw_case, kw_new, eof
};

struct Token {
  Tok tok;
  std::string text;
  long long value = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return cur_; }
  Token next() {
    Token t = cur_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_ws();
    cur_.line = line_;
    cur_.col = col_;
    if (pos_ >= src_.size()) {
      cur_.tok = Tok::eof;
      cur_.text.clear();
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        // '-' continues an identifier (instance keys like pi-nonchan);
        // '<->' never starts with a letter so this cannot collide
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '\'' ||
            d == '-') {
          id += d;
          bump();
        } else
          break;
      }
      cur_.text = id;
      if (id == "instance") cur_.tok = Tok::kw_instance;
      else if (id == "names") cur_.tok = Tok::kw_names;
      else if (id == "def") cur_.tok = Tok::kw_def;
      else if (id == "case") cur_.tok = Tok::kw_case;
      else if (id == "new") cur_.tok = Tok::kw_new;
      else cur_.tok = Tok::ident;
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      long long v = 0;
      std::string text;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        v = v * 10 + (src_[pos_] - '0');
        text += src_[pos_];
        bump();
      }
      cur_.tok = Tok::integer;
      cur_.value = v;
      cur_.text = text;
      return;
    }
    auto two = [&](char a, char b) {
      return c == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
    };
    if (two('(', '|')) { bump(); bump(); cur_.tok = Tok::lassert; return; }
    if (two('|', ')')) { bump(); bump(); cur_.tok = Tok::rassert; return; }
    if (two('[', ']')) { bump(); bump(); cur_.tok = Tok::alt; return; }
    if (two(':', '=')) { bump(); bump(); cur_.tok = Tok::assign_op; return; }
    if (two('<', '>')) { bump(); bump(); cur_.tok = Tok::neq; return; }
    if (c == '<' && pos_ + 2 < src_.size() && src_[pos_ + 1] == '-' && src_[pos_ + 2] == '>') {
      bump(); bump(); bump();
      cur_.tok = Tok::chaneq;
      return;
    }
    bump();
    switch (c) {
      case '!': cur_.tok = Tok::bang; return;
      case '(': cur_.tok = Tok::lpar; return;
      case ')': cur_.tok = Tok::rpar; return;
      case '|': cur_.tok = Tok::pipe; return;
      case '.': cur_.tok = Tok::dot; return;
      case ',': cur_.tok = Tok::comma; return;
      case ':': cur_.tok = Tok::colon; return;
      case '=': cur_.tok = Tok::eq; return;
      default:
        throw syntax_error(std::string("unexpected character '") + c + "'", line_, col_ - 1);
    }
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump();
      } else
        break;
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else
      ++col_;
    ++pos_;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token cur_;
};

}  // namespace lex

// ---- parser ----

class Parser {
 public:
  Parser(const std::string& src, const Instance* forced = nullptr)
      : lx_(src), inst_(forced) {}

  ParsedUnit parse_unit() {
    ParsedUnit u;
    expect(lex::Tok::kw_instance, "expected 'instance <key>' header");
    lex::Token key = expect(lex::Tok::ident, "expected instance key");
    if (!inst_) {
      try {
        inst_ = &registry_lookup(key.text);
      } catch (const unknown_instance&) {
        throw syntax_error("unknown instance key '" + key.text + "'", key.line, key.col);
      }
    }
    u.inst = inst_;
    if (lx_.peek().tok == lex::Tok::kw_names) {
      lx_.next();
      while (lx_.peek().tok == lex::Tok::ident)
        u.declared.insert(intern(lx_.next().text));
    }
    while (lx_.peek().tok != lex::Tok::eof) {
      expect(lex::Tok::kw_def, "expected 'def <Name> = <agent>'");
      lex::Token name = expect(lex::Tok::ident, "expected definition name");
      expect(lex::Tok::eq, "expected '='");
      AgentRef a = parse_agent();
      check_free_names(u, name.text, a);
      check_guardedness(name.text, a);
      u.defs.emplace_back(name.text, a);
    }
    return u;
  }

  // Entry point for parsing a bare agent (tests, tooling).
  AgentRef parse_agent_only() {
    AgentRef a = parse_agent();
    if (lx_.peek().tok != lex::Tok::eof)
      throw syntax_error("trailing input after agent", lx_.peek().line, lx_.peek().col);
    return a;
  }

  Term parse_term_only() {
    Term t = parse_term();
    if (lx_.peek().tok != lex::Tok::eof)
      throw syntax_error("trailing input after term", lx_.peek().line, lx_.peek().col);
    return t;
  }

  Condition parse_condition_only() {
    Condition c = parse_condition();
    if (lx_.peek().tok != lex::Tok::eof)
      throw syntax_error("trailing input after condition", lx_.peek().line, lx_.peek().col);
    return c;
  }

  Assertion parse_assertion_only() {
    Assertion a = parse_assertion();
    if (lx_.peek().tok != lex::Tok::eof)
      throw syntax_error("trailing input after assertion", lx_.peek().line, lx_.peek().col);
    return a;
  }

 private:
  lex::Token expect(lex::Tok t, const std::string& what) {
    if (lx_.peek().tok != t)
      throw syntax_error(what + ", got '" + lx_.peek().text + "'", lx_.peek().line,
                         lx_.peek().col);
    return lx_.next();
  }

  // precedence: prefix/atom > replication > parallel
  AgentRef parse_agent() {
    AgentRef left = parse_seq();
    while (lx_.peek().tok == lex::Tok::pipe) {
      lx_.next();
      AgentRef right = parse_seq();
      left = mk_parallel(left, right);
    }
    return left;
  }

  AgentRef parse_seq() {
    if (lx_.peek().tok == lex::Tok::bang) {
      lx_.next();
      return mk_replication(parse_seq());
    }
    return parse_prefix();
  }

  AgentRef parse_prefix() {
    const lex::Token& t = lx_.peek();
    switch (t.tok) {
      case lex::Tok::integer: {
        if (t.value == 0) {
          lx_.next();
          return nil();
        }
        break;  // falls through to term-led parse (assign literals)
      }
      case lex::Tok::lassert: {
        lx_.next();
        Assertion psi = parse_assertion();
        expect(lex::Tok::rassert, "expected '|)'");
        return mk_assertion_agent(psi);
      }
      case lex::Tok::kw_case: {
        lx_.next();
        std::vector<CaseBranch> branches;
        for (;;) {
          Condition c = parse_condition();
          expect(lex::Tok::colon, "expected ':' after case condition");
          AgentRef body = parse_seq();
          branches.push_back(CaseBranch{c, body});
          if (lx_.peek().tok == lex::Tok::alt)
            lx_.next();
          else
            break;
        }
        return mk_case(std::move(branches));
      }
      case lex::Tok::lpar: {
        lx_.next();
        if (lx_.peek().tok == lex::Tok::kw_new) {
          lx_.next();
          NameSeq names;
          names.push_back(intern(expect(lex::Tok::ident, "expected name").text));
          while (lx_.peek().tok == lex::Tok::comma) {
            lx_.next();
            names.push_back(intern(expect(lex::Tok::ident, "expected name").text));
          }
          expect(lex::Tok::rpar, "expected ')'");
          AgentRef body = parse_seq();
          for (auto it = names.rbegin(); it != names.rend(); ++it)
            body = mk_restriction(*it, body);
          return body;
        }
        AgentRef inner = parse_agent();
        expect(lex::Tok::rpar, "expected ')'");
        return inner;
      }
      default:
        break;
    }
    // term-led: output or input prefix
    lex::Token lead = lx_.peek();
    Term subj = parse_term();
    if (lx_.peek().tok == lex::Tok::bang) {
      lx_.next();
      Term obj = parse_term();
      AgentRef cont = parse_continuation();
      return mk_output(subj, obj, cont);
    }
    if (lx_.peek().tok == lex::Tok::lpar) {
      lx_.next();
      lex::Token binder = expect(lex::Tok::ident, "expected input binder");
      expect(lex::Tok::rpar, "expected ')'");
      AgentRef cont = parse_continuation();
      return mk_input(subj, intern(binder.text), cont);
    }
    throw syntax_error("expected '!' or '(x)' after prefix subject", lead.line, lead.col);
  }

  AgentRef parse_continuation() {
    if (lx_.peek().tok == lex::Tok::dot) {
      lx_.next();
      return parse_seq();
    }
    return nil();  // trailing .0 may be dropped
  }

  Term parse_term() {
    const lex::Token& t = lx_.peek();
    if (t.tok == lex::Tok::integer) {
      lex::Token v = lx_.next();
      Term lit = Term::mk_lit(v.value);
      if (inst_ && !inst_->term_allowed(lit))
        throw syntax_error("literal not a term of instance " + inst_->key(), v.line, v.col);
      return lit;
    }
    if (t.tok != lex::Tok::ident)
      throw syntax_error("expected term", t.line, t.col);
    lex::Token id = lx_.next();
    const auto& fs = inst_ ? inst_->functors() : std::map<std::string, int>{};
    auto fit = fs.find(id.text);
    if (fit != fs.end() && fit->second == 0) return Term::mk_app(id.text, {});
    if (lx_.peek().tok == lex::Tok::lpar && fit != fs.end()) {
      lx_.next();
      std::vector<Term> args;
      args.push_back(parse_term());
      while (lx_.peek().tok == lex::Tok::comma) {
        lx_.next();
        args.push_back(parse_term());
      }
      expect(lex::Tok::rpar, "expected ')'");
      if (int(args.size()) != fit->second)
        throw syntax_error(id.text + " expects " + std::to_string(fit->second) + " arguments",
                           id.line, id.col);
      return Term::mk_app(id.text, std::move(args));
    }
    return Term::mk_name(intern(id.text));
  }

  Condition parse_condition() {
    lex::Token at = lx_.peek();
    Term lhs = parse_term();
    Condition c;
    switch (lx_.peek().tok) {
      case lex::Tok::eq: lx_.next(); c = mk_eq(lhs, parse_term()); break;
      case lex::Tok::neq: lx_.next(); c = mk_neq(lhs, parse_term()); break;
      case lex::Tok::chaneq: lx_.next(); c = chan_eq(lhs, parse_term()); break;
      default:
        throw syntax_error("expected '=', '<>' or '<->'", lx_.peek().line, lx_.peek().col);
    }
    if (inst_ && !inst_->condition_allowed(c))
      throw syntax_error("condition not admitted by instance " + inst_->key(), at.line, at.col);
    return c;
  }

  Assertion parse_assertion() {
    if (lx_.peek().tok == lex::Tok::integer && lx_.peek().value == 1) {
      lx_.next();
      return Assertion::unit();
    }
    lex::Token at = lx_.peek();
    if (inst_ && !inst_->assertions_allowed())
      throw syntax_error("instance " + inst_->key() + " admits only the unit assertion",
                         at.line, at.col);
    std::vector<Binding> bs;
    for (;;) {
      lex::Token var = expect(lex::Tok::ident, "expected assignment variable");
      expect(lex::Tok::assign_op, "expected ':='");
      Term val = parse_term();
      bs.push_back(Binding{intern(var.text), val});
      if (lx_.peek().tok == lex::Tok::comma)
        lx_.next();
      else
        break;
    }
    return mk_assertion(std::move(bs));
  }

  void check_free_names(const ParsedUnit& u, const std::string& def, const AgentRef& a) {
    for (Name n : support(a))
      if (!u.declared.count(n))
        throw undeclared_name("free name '" + display(n) + "' in def " + def +
                              " is not declared (add it to the names line)");
  }

  void check_guardedness(const std::string& def, const AgentRef& a) {
    auto v = check_guarded(a);
    if (!v.empty())
      throw guardedness_violation("def " + def +
                                  ": unguarded assertion under replication");
  }

  lex::Lexer lx_;
  const Instance* inst_;
};

inline ParsedUnit parse(const std::string& src) { return Parser(src).parse_unit(); }

inline AgentRef parse_agent_text(const Instance& inst, const std::string& src) {
  return Parser(src, &inst).parse_agent_only();
}

inline Term parse_term_text(const Instance& inst, const std::string& src) {
  return Parser(src, &inst).parse_term_only();
}

inline Condition parse_condition_text(const Instance& inst, const std::string& src) {
  return Parser(src, &inst).parse_condition_only();
}

inline Assertion parse_assertion_text(const Instance& inst, const std::string& src) {
  return Parser(src, &inst).parse_assertion_only();
}

// ---- printer ----

namespace detail {

// 0 = parallel level, 1 = replication/seq level, 2 = atom
inline std::string print_agent_prec(const AgentRef& p, int level);

inline std::string wrap(const std::string& s, bool need) {
  return need ? "(" + s + ")" : s;
}

inline std::string print_agent_prec(const AgentRef& p, int level) {
  return std::visit(
      [&](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, OutputNode>) {
          std::string s = print_term(n.subject) + "!" + print_term(n.object);
          if (!is_nil(n.cont)) s += "." + print_agent_prec(n.cont, 1);
          return s;
        } else if constexpr (std::is_same_v<T, InputNode>) {
          std::string s = print_term(n.subject) + "(" + display(n.binder) + ")";
          if (!is_nil(n.cont)) s += "." + print_agent_prec(n.cont, 1);
          return s;
        } else if constexpr (std::is_same_v<T, CaseNode>) {
          std::string s = "case ";
          for (std::size_t i = 0; i < n.branches.size(); ++i) {
            if (i) s += " [] ";
            s += print_condition(n.branches[i].cond) + " : " +
                 print_agent_prec(n.branches[i].body, 1);
          }
          return wrap(s, level > 1);
        } else if constexpr (std::is_same_v<T, RestrictionNode>) {
          NameSeq names{n.name};
          AgentRef body = n.body;
          while (const auto* r = std::get_if<RestrictionNode>(&body->node)) {
            names.push_back(r->name);
            body = r->body;
          }
          std::string s = "(new ";
          for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) s += ",";
            s += display(names[i]);
          }
          s += ")" + print_agent_prec(body, 1);
          return s;
        } else if constexpr (std::is_same_v<T, ParallelNode>) {
          std::string s =
              print_agent_prec(n.left, 1) + " | " + print_agent_prec(n.right, 1);
          return wrap(s, level > 0);
        } else if constexpr (std::is_same_v<T, ReplicationNode>) {
          return "!" + print_agent_prec(n.body, 1);
        } else {
          if (n.psi.is_unit()) return "0";
          return "(|" + print_assertion(n.psi) + "|)";
        }
      },
      p->node);
}

}  // namespace detail

inline std::string print_agent(const AgentRef& p) { return detail::print_agent_prec(p, 0); }

// Canonical form used for dedup keys and alpha-respecting comparisons.
inline std::string canonical_print(const AgentRef& p) { return print_agent(canonical(p)); }

}  // namespace psi

#endif  // PSI_SYNTAX_HPP
