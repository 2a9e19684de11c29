#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <initializer_list>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "pspta/errors.hpp"
#include "pspta/psp/spec.hpp"

namespace pspta::psp {

namespace detail {

struct Token {
  enum Kind { Word, Number, Ref, Comma, Period, End } kind = End;
  std::string text;  // lower-cased for words, verbatim for refs
  long long number = 0;
  std::size_t pos = 0;
};

inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (c == '{') {
      auto close = s.find('}', i);
      if (close == std::string_view::npos) throw GrammarError("unterminated state reference", i);
      std::string body;
      for (char ch : s.substr(i + 1, close - i - 1))
        if (!std::isspace(static_cast<unsigned char>(ch))) body += ch;
      if (!well_formed_ref(body)) throw GrammarError("state reference must be Template.Location", i);
      out.push_back({Token::Ref, body, 0, start});
      i = close + 1;
    } else if (c == ',') {
      out.push_back({Token::Comma, ",", 0, start});
      ++i;
    } else if (c == '.') {
      out.push_back({Token::Period, ".", 0, start});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      Token t{Token::Number, std::string(s.substr(start, i - start)), 0, start};
      try {
        t.number = std::stoll(t.text);
      } catch (const std::out_of_range&) {
        throw GrammarError("number out of range", start);
      }
      out.push_back(t);
    } else if (ident_char(c)) {
      while (i < s.size() && ident_char(s[i])) ++i;
      // a dotted identifier pair is an unbraced state reference
      if (i + 1 < s.size() && s[i] == '.' && ident_char(s[i + 1]) &&
          !std::isdigit(static_cast<unsigned char>(s[start]))) {
        ++i;
        while (i < s.size() && ident_char(s[i])) ++i;
        out.push_back({Token::Ref, std::string(s.substr(start, i - start)), 0, start});
      } else {
        std::string w(s.substr(start, i - start));
        for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        out.push_back({Token::Word, w, 0, start});
      }
    } else {
      throw GrammarError(std::string("unexpected character '") + c + "'", i);
    }
  }
  out.push_back({Token::End, "", 0, s.size()});
  return out;
}

class SentenceParser {
public:
  explicit SentenceParser(std::string_view text) : toks_(tokenize(text)) {}

  PropertySpec parse() {
    PropertySpec spec;
    parse_scope(spec);
    expect_comma_or_nothing();
    parse_pattern(spec);
    if (word("without")) {
      spec.refs[Role::Z] = ref();
      word("holding");
      expect("in");
      expect("between");
      constrain(spec);
    }
    parse_interval(spec);
    if (peek().kind == Token::Period) ++i_;
    if (peek().kind != Token::End) fail("unexpected trailing text");
    validate(spec);
    return spec;
  }

private:
  std::vector<Token> toks_;
  std::size_t i_ = 0;
  bool has_duration_phrase_ = false;

  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(i_ + ahead, toks_.size() - 1)]; }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string near = t.kind == Token::End ? "end of input" : "'" + t.text + "'";
    throw GrammarError(msg + " near " + near, t.pos);
  }

  bool is_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::Word && peek(ahead).text == w;
  }

  bool word(std::string_view w) {
    if (!is_word(w)) return false;
    ++i_;
    return true;
  }

  bool words(std::initializer_list<std::string_view> ws) {
    std::size_t k = 0;
    for (auto w : ws)
      if (!is_word(w, k++)) return false;
    i_ += ws.size();
    return true;
  }

  void expect(std::string_view w) {
    if (!word(w)) fail("expected '" + std::string(w) + "'");
  }

  void expect_words(std::initializer_list<std::string_view> ws) {
    for (auto w : ws) expect(w);
  }

  StateRef ref() {
    if (peek().kind != Token::Ref) fail("expected a state reference");
    return toks_[i_++].text;
  }

  std::vector<StateRef> ref_list() {
    std::vector<StateRef> out{ref()};
    while (peek().kind == Token::Comma && peek(1).kind == Token::Ref) {
      ++i_;
      out.push_back(ref());
    }
    return out;
  }

  long long number() {
    static constexpr std::string_view kWords[] = {"zero", "one", "two",   "three", "four", "five",
                                                  "six",  "seven", "eight", "nine", "ten"};
    if (peek().kind == Token::Number) return toks_[i_++].number;
    if (peek().kind == Token::Word)
      for (std::size_t n = 0; n < std::size(kWords); ++n)
        if (peek().text == kWords[n]) {
          ++i_;
          return static_cast<long long>(n);
        }
    fail("expected a number");
  }

  long long millis() {
    if (peek().kind != Token::Number) fail("expected a number of milliseconds");
    long long v = toks_[i_++].number;
    if (!word("ms")) fail("expected time unit 'ms'");
    return v;
  }

  void expect_comma_or_nothing() {
    if (peek().kind == Token::Comma) ++i_;
  }

  void parse_scope(PropertySpec& s) {
    if (word("globally")) {
      s.scope = ScopeKind::Globally;
    } else if (word("before")) {
      s.scope = ScopeKind::Before;
      s.refs[Role::R] = ref();
    } else if (word("between")) {
      s.scope = ScopeKind::Between;
      s.refs[Role::Q] = ref();
      expect("and");
      s.refs[Role::R] = ref();
    } else if (word("after")) {
      s.refs[Role::Q] = ref();
      if (word("until")) {
        s.scope = ScopeKind::AfterUntil;
        s.refs[Role::R] = ref();
      } else {
        s.scope = ScopeKind::After;
      }
    } else {
      fail("expected a scope (Globally, Before, After, Between)");
    }
  }

  void occurred() {
    if (!words({"has", "occurred"})) words({"have", "occurred"});
  }

  void holds() {
    if (!word("holds")) word("hold");
  }

  void parse_pattern(PropertySpec& s) {
    if (words({"it", "is", "never", "the", "case", "that"})) {
      s.pattern = PatternKind::Absence;
      s.refs[Role::P] = ref();
      holds();
    } else if (words({"it", "is", "always", "the", "case", "that"})) {
      s.pattern = PatternKind::Universality;
      s.refs[Role::P] = ref();
      holds();
    } else if (word("if")) {
      parse_conditional(s);
    } else if (peek().kind == Token::Ref) {
      parse_simple(s);
    } else {
      fail("expected a pattern phrase");
    }
  }

  void parse_simple(PropertySpec& s) {
    s.refs[Role::P] = ref();
    if (word("eventually")) {
      holds();
      s.pattern = PatternKind::Existence;
      return;
    }
    if (!word("holds")) fail("expected 'holds' or 'eventually'");
    if (word("eventually")) {
      s.pattern = PatternKind::Existence;
    } else if (word("repeatedly")) {
      s.pattern = PatternKind::Recurrence;
    } else if (words({"without", "interruption", "until"})) {
      s.pattern = PatternKind::Until;
      s.refs[Role::S] = ref();
      holds();
    } else if (words({"for", "at", "least"})) {
      s.pattern = PatternKind::MinimumDuration;
      s.interval = Interval{millis(), std::nullopt};
      s.timed = true;
      has_duration_phrase_ = true;
    } else if (words({"for", "at", "most"})) {
      s.pattern = PatternKind::MaximumDuration;
      s.interval = Interval{0, millis()};
      s.timed = true;
      has_duration_phrase_ = true;
    } else if (is_word("at") && (is_word("least", 1) || is_word("exactly", 1))) {
      fail("only 'at most' bounded existence is supported");
    } else if (is_word("exactly")) {
      fail("only 'at most' bounded existence is supported");
    } else if (words({"at", "most"})) {
      s.pattern = PatternKind::BoundedExistence;
      s.count = number();
      if (!word("times")) expect("time");
    } else {
      fail("unrecognised pattern phrase");
    }
  }

  void parse_conditional(PropertySpec& s) {
    auto lhs = ref_list();
    if (!word("holds") && !word("hold")) occurred();
    expect_comma_or_nothing();
    expect("then");
    if (words({"it", "must", "have", "been", "the", "case", "that"})) {
      auto causes = ref_list();
      occurred();
      expect("before");
      auto effects = ref_list();
      holds();
      if (effects != lhs) throw RoleError("precedence sentence names different states before 'before'");
      if (lhs.size() > 1 && causes.size() > 1) fail("a precedence chain may not have lists on both sides");
      if (lhs.size() == 1 && causes.size() == 1) {
        s.pattern = PatternKind::Precedence;
        s.refs[Role::P] = lhs[0];
        s.refs[Role::S] = causes[0];
      } else if (causes.size() > 1) {
        s.pattern = PatternKind::PrecedenceChainN1;
        s.refs[Role::P] = lhs[0];
        s.chain = causes;
      } else {
        s.pattern = PatternKind::PrecedenceChain1N;
        s.refs[Role::S] = causes[0];
        s.chain = lhs;
      }
      return;
    }
    expect_words({"in", "response"});
    auto rhs = ref_list();
    bool eventually = word("eventually");
    holds();
    if (!eventually) eventually = word("eventually");
    bool invariance = word("continually");
    if (invariance && eventually) fail("'eventually' and 'continually' cannot be combined");
    if (lhs.size() > 1 && rhs.size() > 1) fail("a response chain may not have lists on both sides");
    if (invariance) {
      if (lhs.size() > 1 || rhs.size() > 1) fail("response invariance takes single states");
      s.pattern = PatternKind::ResponseInvariance;
      s.refs[Role::P] = lhs[0];
      s.refs[Role::S] = rhs[0];
    } else if (lhs.size() == 1 && rhs.size() == 1) {
      s.pattern = PatternKind::Response;
      s.refs[Role::P] = lhs[0];
      s.refs[Role::S] = rhs[0];
    } else if (lhs.size() > 1) {
      s.pattern = PatternKind::ResponseChainN1;
      s.chain = lhs;
      s.refs[Role::S] = rhs[0];
    } else {
      s.pattern = PatternKind::ResponseChain1N;
      s.refs[Role::P] = lhs[0];
      s.chain = rhs;
    }
  }

  void constrain(PropertySpec& s) {
    using P = PatternKind;
    switch (s.pattern) {
      case P::Response: s.pattern = P::ConstrainedResponse; return;
      case P::ResponseChainN1: s.pattern = P::ConstrainedResponseChainN1; return;
      case P::ResponseChain1N: s.pattern = P::ConstrainedResponseChain1N; return;
      case P::PrecedenceChainN1: s.pattern = P::ConstrainedPrecedenceChainN1; return;
      case P::PrecedenceChain1N: s.pattern = P::ConstrainedPrecedenceChain1N; return;
      default:
        throw RoleError(std::string(to_string(s.pattern)) + " has no constrained variant");
    }
  }

  void parse_interval(PropertySpec& s) {
    std::size_t at = peek().pos;
    Interval iv;
    if (word("within")) {
      iv.upper = millis();
    } else if (word("after")) {
      iv.lower = millis();
    } else if (word("between")) {
      if (peek().kind != Token::Number) fail("expected a number of milliseconds");
      iv.lower = toks_[i_++].number;
      expect("and");
      iv.upper = millis();
    } else {
      return;
    }
    if (has_duration_phrase_)
      throw RoleError(std::string(to_string(s.pattern)) + " already carries its time bound");
    if (s.pattern == PatternKind::BoundedExistence)
      throw RoleError("bounded existence has no time-constrained variant (offset " + std::to_string(at) + ")");
    s.timed = true;
    s.interval = iv;
  }
};

inline std::string braced(const StateRef& r) { return "{" + r + "}"; }

inline std::string braced_list(const std::vector<StateRef>& rs) {
  std::string out;
  for (std::size_t i = 0; i < rs.size(); ++i) out += (i ? ", " : "") + braced(rs[i]);
  return out;
}

} // namespace detail

/// Parses one Structured English sentence.
inline PropertySpec parse_property(std::string_view text) {
  return detail::SentenceParser(text).parse();
}

inline std::string render_structured_english(const PropertySpec& s) {
  using detail::braced;
  using detail::braced_list;
  using P = PatternKind;
  validate(s);

  std::string out;
  switch (s.scope) {
    case ScopeKind::Globally: out = "Globally"; break;
    case ScopeKind::Before: out = "Before " + braced(s.ref(Role::R)); break;
    case ScopeKind::After: out = "After " + braced(s.ref(Role::Q)); break;
    case ScopeKind::Between: out = "Between " + braced(s.ref(Role::Q)) + " and " + braced(s.ref(Role::R)); break;
    case ScopeKind::AfterUntil: out = "After " + braced(s.ref(Role::Q)) + " until " + braced(s.ref(Role::R)); break;
  }
  out += ", ";

  auto response = [&](const std::string& lhs, bool many_lhs, const std::string& rhs, bool many_rhs) {
    out += "if " + lhs + (many_lhs ? " have occurred" : " has occurred") + ", then in response " + rhs +
           (many_rhs ? " eventually hold" : " eventually holds");
  };
  auto precedence = [&](const std::string& lhs, bool many_lhs, const std::string& rhs, bool many_rhs) {
    const char* h = many_lhs ? " hold" : " holds";
    out += "if " + lhs + h + ", then it must have been the case that " + rhs +
           (many_rhs ? " have occurred" : " has occurred") + " before " + lhs + h;
  };

  const std::string timed_unit = " ms";
  bool interval_in_phrase = false;
  switch (s.pattern) {
    case P::Absence: out += "it is never the case that " + braced(s.ref(Role::P)) + " holds"; break;
    case P::Universality: out += "it is always the case that " + braced(s.ref(Role::P)) + " holds"; break;
    case P::Existence: out += braced(s.ref(Role::P)) + " holds eventually"; break;
    case P::BoundedExistence:
      out += braced(s.ref(Role::P)) + " holds at most " + std::to_string(*s.count) + " times";
      break;
    case P::MinimumDuration:
      out += braced(s.ref(Role::P)) + " holds for at least " + std::to_string(s.interval->lower) + timed_unit;
      interval_in_phrase = true;
      break;
    case P::MaximumDuration:
      out += braced(s.ref(Role::P)) + " holds for at most " + std::to_string(*s.interval->upper) + timed_unit;
      interval_in_phrase = true;
      break;
    case P::Recurrence: out += braced(s.ref(Role::P)) + " holds repeatedly"; break;
    case P::Precedence: precedence(braced(s.ref(Role::P)), false, braced(s.ref(Role::S)), false); break;
    case P::PrecedenceChainN1:
    case P::ConstrainedPrecedenceChainN1:
      precedence(braced(s.ref(Role::P)), false, braced_list(s.chain), true);
      break;
    case P::PrecedenceChain1N:
    case P::ConstrainedPrecedenceChain1N:
      precedence(braced_list(s.chain), true, braced(s.ref(Role::S)), false);
      break;
    case P::Response:
    case P::ConstrainedResponse:
      response(braced(s.ref(Role::P)), false, braced(s.ref(Role::S)), false);
      break;
    case P::ResponseChainN1:
    case P::ConstrainedResponseChainN1:
      response(braced_list(s.chain), true, braced(s.ref(Role::S)), false);
      break;
    case P::ResponseChain1N:
    case P::ConstrainedResponseChain1N:
      response(braced(s.ref(Role::P)), false, braced_list(s.chain), true);
      break;
    case P::ResponseInvariance:
      out += "if " + braced(s.ref(Role::P)) + " has occurred, then in response " + braced(s.ref(Role::S)) +
             " holds continually";
      break;
    case P::Until:
      out += braced(s.ref(Role::P)) + " holds without interruption until " + braced(s.ref(Role::S)) + " holds";
      break;
  }
  if (s.has(Role::Z)) out += " without " + braced(s.ref(Role::Z)) + " holding in between";
  if (s.interval && !interval_in_phrase) {
    const Interval& iv = *s.interval;
    if (!iv.upper)
      out += " after " + std::to_string(iv.lower) + timed_unit;
    else if (iv.lower == 0)
      out += " within " + std::to_string(*iv.upper) + timed_unit;
    else
      out += " between " + std::to_string(iv.lower) + " and " + std::to_string(*iv.upper) + timed_unit;
  }
  return out + ".";
}

} // namespace pspta::psp
