#pragma once

// D0L systems: grammar text parsing, parallel rewriting, and the turtle that
// turns a derivation string into a branching skeleton.
//
// Turtle semantics (the grammar carries no geometry of its own):
//   d        emit a branch on the current parent
//   [ ... ]  a matched pair opens a group whose branches hang off the most
//            recent branch of the enclosing group (one level deeper)
//   [        an unmatched '[' (never closed) is a no-op separator, so a
//            derivation like "d[d[d" is a flat fan of three branches
//   ( )      decorative, ignored
//   + -      rotate the azimuth cursor by +/- yaw_angle when an explicit yaw
//            is configured; otherwise siblings are spaced 360/k apart by
//            their order and '+'/'-' have no effect
//   other    ignored (replaceable symbols left unexpanded, other constants)

#include "arbor/error.hpp"
#include "arbor/geometry.hpp"
#include "arbor/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace arbor {

inline constexpr std::string_view kControlSymbols = "()+-[]";
inline constexpr char kBranchSymbol = 'd';

inline bool is_control_symbol(char c) {
  return kControlSymbols.find(c) != std::string_view::npos;
}

enum class SymbolKind { replaceable, constant, control };

struct Production {
  char predecessor;
  std::string successor;
};

class LSystem {
 public:
  // Validates every invariant; throws ValidationError.
  LSystem(std::set<char> variables, std::set<char> constants, std::string axiom,
          const std::vector<Production>& productions)
      : variables_(std::move(variables)),
        constants_(std::move(constants)),
        axiom_(std::move(axiom)) {
    for (char c : variables_) {
      check_declarable(c);
      if (constants_.count(c)) {
        throw ValidationError(std::string("symbol '") + c +
                              "' declared both variable and constant");
      }
    }
    for (char c : constants_) check_declarable(c);
    if (axiom_.empty()) throw ValidationError("axiom is empty");
    check_symbols(axiom_, "axiom");
    for (const auto& p : productions) {
      if (constants_.count(p.predecessor)) {
        throw ValidationError(std::string("constant '") + p.predecessor +
                              "' cannot have a production");
      }
      if (!variables_.count(p.predecessor)) {
        throw ValidationError(std::string("production for undeclared symbol '") +
                              p.predecessor + "'");
      }
      if (p.successor.empty()) {
        throw ValidationError(std::string("empty successor for '") + p.predecessor + "'");
      }
      check_symbols(p.successor, std::string("successor of '") + p.predecessor + "'");
      check_brackets(p.successor);
      if (!productions_.emplace(p.predecessor, p.successor).second) {
        throw ValidationError(std::string("duplicate production for '") +
                              p.predecessor + "'");
      }
    }
  }

  const std::set<char>& variables() const { return variables_; }
  const std::set<char>& constants() const { return constants_; }
  const std::string& axiom() const { return axiom_; }
  const std::map<char, std::string>& productions() const { return productions_; }

  std::set<char> alphabet() const {
    std::set<char> all = variables_;
    all.insert(constants_.begin(), constants_.end());
    return all;
  }

  SymbolKind kind(char c) const {
    if (is_control_symbol(c)) return SymbolKind::control;
    return productions_.count(c) ? SymbolKind::replaceable : SymbolKind::constant;
  }

  const std::string* successor(char c) const {
    auto it = productions_.find(c);
    return it == productions_.end() ? nullptr : &it->second;
  }

  // Square brackets may be left open (closed implicitly at end of string),
  // but a ']' without a pending '[' is rejected.
  static void check_brackets(std::string_view s) {
    long open = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '[') ++open;
      if (s[i] == ']' && --open < 0) {
        throw ValidationError("unbalanced ']' at position " + std::to_string(i) +
                              " in \"" + std::string(s) + "\"");
      }
    }
  }

 private:
  static void check_declarable(char c) {
    if (is_control_symbol(c) || !std::isgraph(static_cast<unsigned char>(c)) ||
        c == '#' || c == ';' || c == ':' || c == ',') {
      throw ValidationError(std::string("symbol '") + c + "' cannot be declared");
    }
  }

  void check_symbols(std::string_view s, const std::string& where) const {
    for (char c : s) {
      if (!is_control_symbol(c) && !variables_.count(c) && !constants_.count(c)) {
        throw ValidationError(where + " references undeclared symbol '" +
                              std::string(1, c) + "'");
      }
    }
  }

  std::set<char> variables_;
  std::set<char> constants_;
  std::string axiom_;
  std::map<char, std::string> productions_;
};

// Grammar text: declarations `vars:`, `consts:`, `axiom:`, `rule: X -> w`,
// separated by newlines or ';'. '#' starts a comment. Symbol lists accept
// commas or whitespace between single-character symbols.
inline LSystem parse_lsystem(std::string_view text) {
  std::set<char> vars;
  std::set<char> consts;
  std::optional<std::pair<std::string, std::size_t>> axiom;
  std::vector<std::pair<Production, std::size_t>> rules;

  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  auto strip_spaces = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    }
    return out;
  };
  auto parse_symbol_list = [&](std::string_view body, std::size_t line, std::set<char>& into) {
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      if (token.size() != 1) {
        throw ParseError(line, "symbols must be single characters, got \"" + token + "\"");
      }
      into.insert(token[0]);
      token.clear();
    };
    for (char c : body) {
      if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
        flush();
      } else {
        token.push_back(c);
      }
    }
    flush();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t semi = std::min(line.find(';', start), line.size());
      const std::string_view decl = trim(line.substr(start, semi - start));
      start = semi + 1;
      if (decl.empty()) continue;

      const auto colon = decl.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected 'key: value', got \"" + std::string(decl) + "\"");
      }
      const std::string_view key = trim(decl.substr(0, colon));
      const std::string_view body = trim(decl.substr(colon + 1));

      if (key == "vars" || key == "variables") {
        parse_symbol_list(body, line_no, vars);
      } else if (key == "consts" || key == "constants") {
        parse_symbol_list(body, line_no, consts);
      } else if (key == "axiom") {
        if (axiom) throw ParseError(line_no, "axiom declared twice");
        axiom.emplace(strip_spaces(body), line_no);
      } else if (key == "rule") {
        const auto arrow = body.find("->");
        if (arrow == std::string_view::npos) {
          throw ParseError(line_no, "rule must have the form 'X -> successor'");
        }
        const std::string pred = strip_spaces(body.substr(0, arrow));
        if (pred.size() != 1) {
          throw ParseError(line_no, "rule predecessor must be a single symbol, got \"" + pred + "\"");
        }
        rules.push_back({Production{pred[0], strip_spaces(body.substr(arrow + 2))}, line_no});
      } else {
        throw ParseError(line_no, "unknown declaration \"" + std::string(key) + "\"");
      }
    }
  }

  if (!axiom || axiom->first.empty()) {
    throw ParseError(axiom ? axiom->second : line_no, "axiom is empty or missing");
  }

  // Re-run the checks one rule at a time so errors carry the offending line.
  std::vector<Production> accepted;
  try {
    LSystem(vars, consts, axiom->first, {});
  } catch (const ValidationError& e) {
    throw ParseError(axiom->second, e.what());
  }
  for (const auto& [rule, line] : rules) {
    accepted.push_back(rule);
    try {
      LSystem(vars, consts, axiom->first, accepted);
    } catch (const ValidationError& e) {
      throw ParseError(line, e.what());
    }
  }
  return LSystem(std::move(vars), std::move(consts), axiom->first, accepted);
}

struct DerivationString {
  std::string symbols;
  unsigned level = 0;

  bool operator==(const DerivationString&) const = default;
};

// Parallel rewriting of an arbitrary string; symbols without a production
// pass through unchanged.
inline DerivationString rewrite(const LSystem& ls, DerivationString s, unsigned iterations) {
  for (unsigned n = 0; n < iterations; ++n) {
    std::string next;
    next.reserve(s.symbols.size() * 2);
    for (char c : s.symbols) {
      if (const std::string* w = ls.successor(c)) {
        next += *w;
      } else {
        next.push_back(c);
      }
    }
    s.symbols = std::move(next);
    ++s.level;
  }
  return s;
}

inline DerivationString rewrite(const LSystem& ls, unsigned iterations) {
  return rewrite(ls, DerivationString{ls.axiom(), 0}, iterations);
}

inline std::size_t count_branch_symbols(std::string_view s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), kBranchSymbol));
}

inline std::size_t count_branch_symbols(const DerivationString& s) {
  return count_branch_symbols(s.symbols);
}

// ---------------------------------------------------------------------------
// Turtle interpretation

enum class AzimuthPolicy { uniform_spacing, jittered_uniform };

struct TurtleConfig {
  double step_length = 1.0;           // length of depth-1 branches
  std::optional<double> yaw_angle;    // degrees; unset = 360/k spacing
  double branch_pitch = 40.0;         // degrees off the parent axis
  AzimuthPolicy azimuth_policy = AzimuthPolicy::uniform_spacing;
  double jitter_range = 10.0;         // degrees, jittered policy only
  double length_decay = 0.5;          // child length / parent length below depth 1

  void validate() const {
    if (!(step_length > 0.0) || !std::isfinite(step_length)) {
      throw ValidationError("step_length must be positive");
    }
    if (!(branch_pitch >= 0.0 && branch_pitch <= 180.0)) {
      throw ValidationError("branch_pitch must lie in [0, 180]");
    }
    if (!(jitter_range >= 0.0) || !std::isfinite(jitter_range)) {
      throw ValidationError("jitter_range must be non-negative");
    }
    if (yaw_angle && !std::isfinite(*yaw_angle)) throw ValidationError("yaw_angle must be finite");
    if (!(length_decay > 0.0 && length_decay <= 1.0)) {
      throw ValidationError("length_decay must lie in (0, 1]");
    }
  }
};

struct TrunkSpec {
  double height = 1.0;
  Vec3 base = Vec3::Zero();
};

inline constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

struct SkeletonNode {
  Vec3 attachment_point = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  unsigned depth = 0;
  double length = 0.0;
  std::size_t parent = kNoParent;
  double azimuth_deg = 0.0;  // around the parent axis
  double pitch_deg = 0.0;    // off the parent axis
  double station = 0.0;      // fraction of the parent axis at the attachment

  bool operator==(const SkeletonNode&) const = default;
};

struct Skeleton {
  std::vector<SkeletonNode> nodes;  // nodes[0] is the trunk; parents precede children

  std::size_t count_at_depth(unsigned depth) const {
    return static_cast<std::size_t>(std::count_if(
        nodes.begin(), nodes.end(), [&](const SkeletonNode& n) { return n.depth == depth; }));
  }

  std::vector<std::size_t> children(std::size_t parent) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].parent == parent) out.push_back(i);
    }
    return out;
  }

  Vec3 tip(std::size_t i) const {
    return nodes[i].attachment_point + nodes[i].length * nodes[i].direction;
  }

  bool operator==(const Skeleton&) const = default;
};

// Attachment stations of sibling i of k: evenly spaced over [0.30, 0.95].
inline double sibling_station(std::size_t i, std::size_t k) {
  constexpr double lo = 0.30;
  constexpr double hi = 0.95;
  if (k <= 1) return 0.5 * (lo + hi);
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1);
}

// Re-derives a node's attachment point and direction from its parent's frame
// and its own (station, azimuth, pitch).
inline void place_on_parent(Skeleton& sk, std::size_t i) {
  SkeletonNode& n = sk.nodes[i];
  const SkeletonNode& p = sk.nodes[n.parent];
  n.attachment_point = p.attachment_point + n.station * p.length * p.direction;
  n.direction = tilt_direction(p.direction, n.azimuth_deg, n.pitch_deg);
}

inline Skeleton interpret_turtle(const DerivationString& s, const TurtleConfig& cfg,
                                 const TrunkSpec& trunk, Rng& rng) {
  cfg.validate();
  if (!(trunk.height > 0.0) || !std::isfinite(trunk.height)) {
    throw ValidationError("trunk height must be positive");
  }
  if (!all_finite(trunk.base)) throw ValidationError("trunk base must be finite");

  const std::string& str = s.symbols;

  // Match brackets; unmatched '[' are left flagged false.
  std::vector<bool> matched(str.size(), false);
  {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < str.size(); ++i) {
      if (str[i] == '[') {
        open.push_back(i);
      } else if (str[i] == ']') {
        if (open.empty()) {
          throw ValidationError("square-bracket underflow at position " + std::to_string(i));
        }
        matched[open.back()] = true;
        open.pop_back();
      }
    }
  }

  struct Pending {
    std::size_t parent;
    double cursor;
  };
  struct State {
    std::size_t parent;
    std::size_t last;
    double cursor;
  };

  std::vector<Pending> pending;
  std::vector<State> stack;
  State st{0, kNoParent, 0.0};
  const double yaw = cfg.yaw_angle.value_or(0.0);

  for (std::size_t i = 0; i < str.size(); ++i) {
    switch (str[i]) {
      case kBranchSymbol:
        pending.push_back({st.parent, st.cursor});
        st.last = pending.size();  // node index; trunk is 0
        break;
      case '+':
        st.cursor += yaw;
        break;
      case '-':
        st.cursor -= yaw;
        break;
      case '[':
        if (matched[i]) {
          stack.push_back(st);
          if (st.last != kNoParent) st.parent = st.last;
          st.last = kNoParent;
          st.cursor = 0.0;
        }
        break;
      case ']':
        st = stack.back();
        stack.pop_back();
        break;
      default:
        break;
    }
  }

  Skeleton sk;
  sk.nodes.reserve(pending.size() + 1);
  sk.nodes.push_back(SkeletonNode{trunk.base, Vec3::UnitZ(), 0, trunk.height, kNoParent,
                                  0.0, 0.0, 0.0});

  std::vector<std::size_t> sibling_total(pending.size() + 1, 0);
  for (const auto& p : pending) ++sibling_total[p.parent];
  std::vector<std::size_t> sibling_seen(pending.size() + 1, 0);

  const bool jittered = cfg.azimuth_policy == AzimuthPolicy::jittered_uniform;
  for (const auto& p : pending) {
    const std::size_t k = sibling_total[p.parent];
    const std::size_t idx = sibling_seen[p.parent]++;
    const SkeletonNode& parent = sk.nodes[p.parent];

    SkeletonNode n;
    n.parent = p.parent;
    n.depth = parent.depth + 1;
    n.length = n.depth == 1 ? cfg.step_length : parent.length * cfg.length_decay;
    n.pitch_deg = cfg.branch_pitch;
    n.station = sibling_station(idx, k);
    n.azimuth_deg = cfg.yaw_angle ? p.cursor
                                  : static_cast<double>(idx) * 360.0 / static_cast<double>(k);
    if (jittered) {
      const double step = 0.65 / static_cast<double>(k);
      n.station = std::clamp(n.station + uniform(rng, -0.5, 0.5) * step, 0.30, 0.95);
      n.azimuth_deg += uniform(rng, -cfg.jitter_range, cfg.jitter_range);
    }
    n.azimuth_deg = std::fmod(n.azimuth_deg, 360.0);
    if (n.azimuth_deg < 0.0) n.azimuth_deg += 360.0;

    sk.nodes.push_back(n);
    place_on_parent(sk, sk.nodes.size() - 1);
  }
  return sk;
}

}  // namespace arbor
