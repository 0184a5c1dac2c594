#include "issuelab/sentiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "issuelab/errors.hpp"

namespace issuelab {

extern const char* const kBundledLexicon;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

double parse_number(std::string_view text, std::size_t line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, fmt::format("lexicon: bad number '{}'", text));
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

SentimentLexicon SentimentLexicon::parse(std::istream& in) {
  SentimentLexicon lex;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    try {
      if (text.front() == '!') {
        lex.add_negator(std::string(trim(text.substr(1))));
        continue;
      }
      const auto tab = text.find('\t');
      if (tab == std::string_view::npos) {
        throw ParseError(line, "lexicon: expected token<TAB>value");
      }
      const double value = parse_number(trim(text.substr(tab + 1)), line);
      if (text.front() == '*') {
        lex.add_intensifier(std::string(trim(text.substr(1, tab - 1))), value);
      } else {
        lex.add_entry(std::string(trim(text.substr(0, tab))), value);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line, fmt::format("lexicon: {}", e.what()));
    }
  }
  return lex;
}

SentimentLexicon SentimentLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open lexicon '{}'", path.string()));
  return parse(in);
}

const SentimentLexicon& SentimentLexicon::bundled() {
  static const SentimentLexicon lex = [] {
    std::istringstream in(kBundledLexicon);
    return parse(in);
  }();
  return lex;
}

void SentimentLexicon::add_entry(std::string token, double polarity) {
  if (token.empty()) throw Error("empty lexicon token");
  if (!(polarity >= -1.0 && polarity <= 1.0)) {
    throw Error(fmt::format("polarity {} for '{}' outside [-1, 1]", polarity, token));
  }
  entries_[lower(token)] = polarity;
}

void SentimentLexicon::add_negator(std::string token) {
  if (token.empty()) throw Error("empty negator token");
  negators_.insert(lower(token));
}

void SentimentLexicon::add_intensifier(std::string token, double multiplier) {
  if (token.empty()) throw Error("empty intensifier token");
  if (!(multiplier > 0.0 && multiplier <= 4.0)) {
    throw Error(fmt::format("multiplier {} for '{}' outside (0, 4]", multiplier, token));
  }
  intensifiers_[lower(token)] = multiplier;
}

std::optional<double> SentimentLexicon::polarity(std::string_view token) const {
  auto it = entries_.find(token);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool SentimentLexicon::is_negator(std::string_view token) const {
  return negators_.find(token) != negators_.end();
}

double SentimentLexicon::multiplier(std::string_view token) const {
  auto it = intensifiers_.find(token);
  return it == intensifiers_.end() ? 1.0 : it->second;
}

SentimentLexicon SentimentLexicon::mirrored() const {
  SentimentLexicon out = *this;
  for (auto& [token, p] : out.entries_) p = -p;
  return out;
}

double SentimentLexicon::score(std::string_view text) const {
  const std::vector<std::string> tokens = tokenize(text);
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto p = polarity(tokens[i]);
    if (!p) continue;
    double contribution = *p;
    if (i >= 1) contribution *= multiplier(tokens[i - 1]);
    bool negated = false;
    for (std::size_t back = 1; back <= 3 && back <= i; ++back) {
      negated = negated || is_negator(tokens[i - back]);
    }
    if (negated) contribution = -contribution;
    sum += contribution;
    ++hits;
  }
  if (hits == 0) return 0.0;
  return std::clamp(sum / static_cast<double>(hits), -1.0, 1.0);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c >= 0x80;
    if (word) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

double score_comment(std::string_view text, const SentimentLexicon& lexicon) {
  return lexicon.score(text);
}

RepoSentiment repo_sentiment(const Repository& repo, const SentimentLexicon& lexicon) {
  RepoSentiment out;
  double sum = 0;
  for (const auto& issue : repo.issues) {
    for (const auto& c : issue.comments) {
      sum += lexicon.score(c.body);
      ++out.comments;
    }
  }
  if (out.comments > 0) {
    out.empty = false;
    out.mean = sum / static_cast<double>(out.comments);
  }
  return out;
}

}  // namespace issuelab
