#pragma once

// Text preparation: tokenization of intents and code, stopword filtering,
// and var# standardization of intents with its inverse on predictions.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evalkit/error.hpp"

namespace evalkit {

enum class TokenizerMode { whitespace, code_punct, character };

inline std::string_view to_string(TokenizerMode m) {
  switch (m) {
    case TokenizerMode::whitespace: return "whitespace";
    case TokenizerMode::code_punct: return "code-punct";
    case TokenizerMode::character: return "char";
  }
  return "whitespace";
}

inline TokenizerMode parse_tokenizer_mode(std::string_view s) {
  if (s == "whitespace") return TokenizerMode::whitespace;
  if (s == "code-punct") return TokenizerMode::code_punct;
  if (s == "char") return TokenizerMode::character;
  throw ConfigError("unknown tokenizer mode '" + std::string(s) + "'");
}

struct TokenizerConfig {
  TokenizerMode mode = TokenizerMode::whitespace;
  bool newline_is_token = true;  // ignored in character mode
  bool lowercase = false;

  friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;

  /// Code default: whitespace split, newline kept as a token, case-sensitive.
  static TokenizerConfig code() { return {TokenizerMode::whitespace, true, false}; }
  /// Intent default: whitespace split, lowercased.
  static TokenizerConfig intent() { return {TokenizerMode::whitespace, false, true}; }
};

/// Token sequence tagged with the configuration that produced it.
/// Random-access range over the tokens.
struct TokenSeq {
  std::vector<std::string> tokens;
  TokenizerConfig config;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  auto begin() const noexcept { return tokens.begin(); }
  auto end() const noexcept { return tokens.end(); }
  const std::string& operator[](std::size_t i) const { return tokens[i]; }
};

inline constexpr std::string_view kNewlineToken = "\n";

namespace detail {

inline bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

inline std::string ascii_lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Length of the UTF-8 sequence starting with lead byte c (1 for invalid bytes).
inline std::size_t utf8_len(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c >> 5) == 0x6) return 2;
  if ((c >> 4) == 0xE) return 3;
  if ((c >> 3) == 0x1E) return 4;
  return 1;
}

// Multi-character operators kept whole in code-punct mode, longest first.
inline constexpr std::array<std::string_view, 22> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "==", "!=", "<=", ">=", "->", "**", "//",
    "<<", ">>", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^="};

inline bool is_punct_char(char c) {
  switch (c) {
    case ',': case ';': case ':': case '(': case ')': case '[': case ']': case '{': case '}':
    case '+': case '-': case '*': case '/': case '%': case '=': case '<': case '>': case '!':
    case '&': case '|': case '^': case '~': case '.': case '"': case '\'': case '@':
      return true;
    default:
      return false;
  }
}

// Splits one whitespace-free chunk into words and punctuation/operator tokens.
inline void split_code_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < chunk.size();) {
    const char c = chunk[i];
    if (!is_punct_char(c)) {
      word.push_back(c);
      ++i;
      continue;
    }
    // a '.' between digits belongs to a numeric literal
    if (c == '.' && !word.empty() && std::isdigit(static_cast<unsigned char>(word.back())) &&
        i + 1 < chunk.size() && std::isdigit(static_cast<unsigned char>(chunk[i + 1]))) {
      word.push_back(c);
      ++i;
      continue;
    }
    flush();
    std::size_t len = 1;
    for (auto op : kOperators) {
      if (chunk.substr(i, op.size()) == op) {
        len = op.size();
        break;
      }
    }
    out.emplace_back(chunk.substr(i, len));
    i += len;
  }
  flush();
}

}  // namespace detail

/// Splits `text` according to `cfg`. Never emits empty tokens.
inline TokenSeq tokenize(std::string_view text, const TokenizerConfig& cfg) {
  TokenSeq seq{{}, cfg};
  auto& out = seq.tokens;
  const std::string owned = cfg.lowercase ? detail::ascii_lower(std::string(text)) : std::string(text);
  std::string_view s = owned;

  if (cfg.mode == TokenizerMode::character) {
    for (std::size_t i = 0; i < s.size();) {
      const std::size_t len = std::min(detail::utf8_len(static_cast<unsigned char>(s[i])), s.size() - i);
      out.emplace_back(s.substr(i, len));
      i += len;
    }
    return seq;
  }

  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\n') {
      if (cfg.newline_is_token) out.emplace_back(kNewlineToken);
      ++i;
      continue;
    }
    if (detail::is_blank(c)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] != '\n' && !detail::is_blank(s[j])) ++j;
    const auto chunk = s.substr(i, j - i);
    if (cfg.mode == TokenizerMode::code_punct) {
      detail::split_code_chunk(chunk, out);
    } else {
      out.emplace_back(chunk);
    }
    i = j;
  }
  return seq;
}

/// Single-line rendering of a multi-line snippet: lines joined by a literal
/// backslash-n surrounded by spaces, the way the shellcode corpora store them.
inline std::string flatten_snippet(std::string_view snippet) {
  std::string out;
  out.reserve(snippet.size() + 8);
  std::size_t start = 0;
  bool first = true;
  while (start <= snippet.size()) {
    auto end = snippet.find('\n', start);
    if (end == std::string_view::npos) end = snippet.size();
    auto line = snippet.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!first) out += " \\n ";
    out += line;
    first = false;
    start = end + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stopwords

struct StopwordList {
  std::set<std::string> words;

  bool contains(std::string_view token) const { return words.contains(detail::ascii_lower(std::string(token))); }
};

/// Small built-in list of English function words that carry no code content.
inline StopwordList default_stopwords() {
  return {{"a", "an", "the", "each", "onto", "to", "of", "into", "in", "on", "at", "for", "from", "with",
           "by", "and", "then", "that", "this", "it", "its", "is", "be", "as", "all", "any", "which"}};
}

/// Parses a stopword file: one word per line, `#` starts a comment.
inline StopwordList parse_stopwords(std::istream& in) {
  StopwordList list;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    list.words.insert(detail::ascii_lower(line.substr(first, last - first + 1)));
  }
  return list;
}

inline StopwordList load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stopword file '" + path + "'");
  auto list = parse_stopwords(in);
  if (list.words.empty()) throw ConfigError("stopword file '" + path + "' is empty");
  return list;
}

/// Drops tokens whose lowercase form is a stopword. Order-preserving and idempotent.
inline TokenSeq filter_stopwords(const TokenSeq& seq, const StopwordList& stop) {
  TokenSeq out{{}, seq.config};
  for (const auto& t : seq.tokens) {
    if (!stop.contains(t)) out.tokens.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

struct StandardizationRule {
  std::string name;
  std::string pattern;
  std::regex regex;

  StandardizationRule(std::string n, std::string p, std::regex::flag_type flags = std::regex::ECMAScript)
      : name(std::move(n)), pattern(std::move(p)) {
    try {
      regex = std::regex(pattern, flags);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid regex for rule '" + name + "': " + e.what());
    }
  }
};

/// Ordered placeholder -> literal dictionary for one intent. Placeholders are var0..var(n-1).
class StandardizationMap {
 public:
  static std::string placeholder(std::size_t index) { return "var" + std::to_string(index); }

  /// Appends a literal and returns its placeholder.
  std::string add(std::string literal) {
    literals_.push_back(std::move(literal));
    return placeholder(literals_.size() - 1);
  }

  const std::string* find(std::size_t index) const {
    return index < literals_.size() ? &literals_[index] : nullptr;
  }

  std::size_t size() const noexcept { return literals_.size(); }
  bool empty() const noexcept { return literals_.empty(); }
  const std::vector<std::string>& literals() const noexcept { return literals_; }

  friend bool operator==(const StandardizationMap&, const StandardizationMap&) = default;

 private:
  std::vector<std::string> literals_;
};

/// Built-in rules in priority order: quoted string, hex literal, register name, decimal literal.
inline std::vector<StandardizationRule> builtin_rules() {
  std::vector<StandardizationRule> rules;
  rules.emplace_back("quoted-string", R"("[^"\n]*"|'[^'\n]*')");
  rules.emplace_back("hex-literal", R"(\b0[xX][0-9a-fA-F]+\b)");
  rules.emplace_back("register",
                     R"(\b(?:[re]?[abcd]x|[abcd][lh]|[re]?[sd]i|[re]?[sb]p|[sd]il|[sb]pl|r(?:[89]|1[0-5])[dwb]?)\b)",
                     std::regex::ECMAScript | std::regex::icase);
  rules.emplace_back("decimal-literal", R"(\b[0-9]+\b)");
  return rules;
}

/// Looks up a built-in rule by name.
inline StandardizationRule builtin_rule(std::string_view name) {
  for (auto& r : builtin_rules()) {
    if (r.name == name) return r;
  }
  throw ConfigError("unknown built-in rule '" + std::string(name) + "'");
}

/// Parses a rules file: `name = regex` per line, `#` comment lines. A value of
/// `@builtin` pulls in the built-in rule of that name.
inline std::vector<StandardizationRule> parse_rules(std::istream& in) {
  std::vector<StandardizationRule> rules;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("rules line " + std::to_string(lineno) + ": expected name = regex");
    std::string name = line.substr(first, eq - first);
    name.erase(name.find_last_not_of(" \t") + 1);
    std::string pattern = line.substr(eq + 1);
    pattern.erase(0, pattern.find_first_not_of(" \t"));
    if (name.empty() || pattern.empty())
      throw ConfigError("rules line " + std::to_string(lineno) + ": empty name or pattern");
    if (pattern == "@builtin") {
      rules.push_back(builtin_rule(name));
    } else {
      rules.emplace_back(std::move(name), std::move(pattern));
    }
  }
  return rules;
}

inline std::vector<StandardizationRule> load_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rules file '" + path + "'");
  return parse_rules(in);
}

struct Standardized {
  std::string text;
  StandardizationMap map;
};

/// Replaces every rule match in `intent`, left to right, with var0, var1, ...
/// At each position the leftmost match across all rules wins; equal starts go
/// to the earlier rule. Empty matches are ignored.
inline Standardized standardize(std::string_view intent, const std::vector<StandardizationRule>& rules) {
  Standardized out;
  const std::string text(intent);
  auto pos = text.cbegin();
  while (pos != text.cend()) {
    std::smatch best;
    bool found = false;
    for (const auto& rule : rules) {
      auto flags = std::regex_constants::match_default;
      if (pos != text.cbegin()) flags |= std::regex_constants::match_prev_avail;
      auto search_from = pos;
      std::smatch m;
      bool hit = false;
      // skip zero-length matches
      while (std::regex_search(search_from, text.cend(), m, rule.regex, flags)) {
        if (m.length(0) > 0) {
          hit = true;
          break;
        }
        if (m[0].second == text.cend()) break;
        search_from = m[0].second + 1;
        flags |= std::regex_constants::match_prev_avail;
      }
      if (!hit) continue;
      if (!found || m[0].first < best[0].first) {
        best = m;
        found = true;
      }
    }
    if (!found) break;
    out.text.append(pos, best[0].first);
    out.text += out.map.add(best.str(0));
    pos = best[0].second;
  }
  out.text.append(pos, text.cend());
  return out;
}

struct Destandardized {
  std::string text;
  std::vector<std::string> unknown_placeholders;  // placeholders with no map entry, left intact
};

/// Replaces every `varK` placeholder with its literal. A placeholder is "var"
/// followed by the maximal digit run, not preceded by an identifier character.
inline Destandardized destandardize(std::string_view snippet, const StandardizationMap& map) {
  Destandardized out;
  auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  std::size_t i = 0;
  while (i < snippet.size()) {
    const bool at_boundary = i == 0 || !is_ident(snippet[i - 1]);
    if (at_boundary && snippet.substr(i, 3) == "var" && i + 3 < snippet.size() &&
        std::isdigit(static_cast<unsigned char>(snippet[i + 3]))) {
      std::size_t j = i + 3;
      while (j < snippet.size() && std::isdigit(static_cast<unsigned char>(snippet[j]))) ++j;
      const auto digits = snippet.substr(i + 3, j - i - 3);
      const std::string* literal = nullptr;
      // leading zeros are not placeholders we emit
      if (digits.size() == 1 || digits[0] != '0') {
        if (digits.size() < 10) literal = map.find(std::stoul(std::string(digits)));
      }
      if (literal) {
        out.text += *literal;
      } else {
        out.text.append(snippet.substr(i, j - i));
        out.unknown_placeholders.emplace_back(snippet.substr(i, j - i));
      }
      i = j;
      continue;
    }
    out.text.push_back(snippet[i]);
    ++i;
  }
  return out;
}

}  // namespace evalkit
