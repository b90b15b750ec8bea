#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lexifactor {

// Canonical order E, A, C, N, O. Every label vector and report uses it.
enum class BigFiveTrait : int {
  kExtraversion = 0,
  kAgreeableness = 1,
  kConscientiousness = 2,
  kNeuroticism = 3,
  kOpenness = 4,
};

inline constexpr int kNumTraits = 5;
inline constexpr std::array<BigFiveTrait, kNumTraits> kAllTraits = {
    BigFiveTrait::kExtraversion, BigFiveTrait::kAgreeableness,
    BigFiveTrait::kConscientiousness, BigFiveTrait::kNeuroticism,
    BigFiveTrait::kOpenness};

inline constexpr int index_of(BigFiveTrait t) { return static_cast<int>(t); }
BigFiveTrait trait_at(int index);

// "extraversion", ...
std::string_view trait_name(BigFiveTrait t);
// "EXT", "AGR", "CON", "NEU", "OPN"
std::string_view trait_code(BigFiveTrait t);
// "Extraversion", ... (report headers)
std::string_view trait_title(BigFiveTrait t);
// Accepts codes and full names, case-insensitive.
std::optional<BigFiveTrait> parse_trait(std::string_view text);

enum class Pole : int { kNegative = -1, kPositive = +1 };

struct TraitAdjective {
  std::string word;
  BigFiveTrait trait;
  Pole pole;

  bool operator==(const TraitAdjective&) const = default;
};

class Lexicon {
 public:
  Lexicon() = default;
  // Validates: nonempty, unique nonempty words.
  explicit Lexicon(std::vector<TraitAdjective> entries);

  const std::vector<TraitAdjective>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const TraitAdjective& operator[](std::size_t i) const { return entries_[i]; }
  std::optional<std::size_t> find(std::string_view word) const;
  std::vector<std::string> words() const;

  bool operator==(const Lexicon&) const = default;

 private:
  std::vector<TraitAdjective> entries_;
};

enum class LexiconFormat { kAuto, kTabular, kRecords };

// Tab-separated `word<TAB>trait<TAB>pole` lines, or one JSON object per line
// with the same fields. Blank lines and lines starting with '#' are skipped.
Lexicon load_lexicon(std::istream& in, LexiconFormat format = LexiconFormat::kAuto);
Lexicon load_lexicon_file(const std::string& path,
                          LexiconFormat format = LexiconFormat::kAuto);
std::string serialize_lexicon(const Lexicon& lexicon);

// Goldberg's 100 unipolar trait-descriptive adjectives, grouped by trait
// and pole.
const Lexicon& default_lexicon();
std::string_view default_lexicon_tsv();

using LabelSet = std::array<int, kNumTraits>;

struct Story {
  std::string id;
  std::string text;
  std::optional<LabelSet> labels;  // 1 = high pole (1 = neurotic)
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Story> stories);

  const std::vector<Story>& stories() const { return stories_; }
  std::size_t size() const { return stories_.size(); }
  const Story& operator[](std::size_t i) const { return stories_[i]; }
  std::optional<std::size_t> find(std::string_view id) const;
  std::vector<std::string> ids() const;
  bool fully_labeled() const;
  Corpus subset(const std::vector<std::string>& ids) const;

 private:
  std::vector<Story> stories_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// How a source file names its label keys and which of them are phrased at
// the opposite pole (e.g. "stability" instead of "neuroticism").
struct LabelSchema {
  std::string labels_key = "labels";
  std::array<std::string, kNumTraits> keys = {
      "extraversion", "agreeableness", "conscientiousness", "neuroticism",
      "openness"};
  std::array<bool, kNumTraits> inverted = {false, false, false, false, false};
};

Corpus load_corpus(std::istream& in, const LabelSchema& schema = {});
Corpus load_corpus_file(const std::string& path, const LabelSchema& schema = {});
std::string serialize_corpus(const Corpus& corpus);

// N x 5 matrix of 0/1 in canonical trait order.
Eigen::MatrixXi label_matrix(const Corpus& corpus);

// SHA-256 over the ordered (id, text) pairs; ties matrices to corpora.
std::string corpus_hash(const Corpus& corpus);

}  // namespace lexifactor
