#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "issuelab/model.hpp"

namespace issuelab {

/// Token polarities plus negators and intensifiers.
///
/// File format, one entry per line:
///   token<TAB>polarity         polarity in [-1, 1]
///   !token                     negator
///   *token<TAB>multiplier      intensifier, multiplier in (0, 4]
/// Blank lines and lines starting with '#' are ignored. Tokens are stored
/// lowercase.
class SentimentLexicon {
 public:
  static SentimentLexicon parse(std::istream& in);
  static SentimentLexicon load(const std::filesystem::path& path);
  /// The lexicon shipped in data/lexicon.tsv, compiled into the library.
  static const SentimentLexicon& bundled();

  void add_entry(std::string token, double polarity);
  void add_negator(std::string token);
  void add_intensifier(std::string token, double multiplier);

  std::optional<double> polarity(std::string_view token) const;
  bool is_negator(std::string_view token) const;
  /// 1.0 for tokens that are not intensifiers.
  double multiplier(std::string_view token) const;
  std::size_t size() const { return entries_.size(); }

  /// The same lexicon with every polarity negated.
  SentimentLexicon mirrored() const;

  /// Mean contribution of the lexicon hits in `text`, clamped to [-1, 1];
  /// 0 when nothing hits. A hit contributes its polarity times the
  /// multiplier of the token right before it, with the sign flipped when a
  /// negator sits among the three preceding tokens.
  double score(std::string_view text) const;

 private:
  std::map<std::string, double, std::less<>> entries_;
  std::set<std::string, std::less<>> negators_;
  std::map<std::string, double, std::less<>> intensifiers_;
};

/// Lowercased runs of ASCII letters and digits; bytes >= 0x80 stay inside
/// tokens so UTF-8 words are not split.
std::vector<std::string> tokenize(std::string_view text);

double score_comment(std::string_view text,
                     const SentimentLexicon& lexicon = SentimentLexicon::bundled());

struct RepoSentiment {
  double mean = 0;
  std::size_t comments = 0;
  bool empty = true;  // no comments at all; mean is 0 by convention
};

/// Unweighted mean over every comment of every issue.
RepoSentiment repo_sentiment(const Repository& repo,
                             const SentimentLexicon& lexicon = SentimentLexicon::bundled());

}  // namespace issuelab
