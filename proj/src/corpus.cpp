#include "lexifactor/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lexifactor/error.hpp"
#include "lexifactor/hash.hpp"

namespace lexifactor {

namespace {

constexpr std::array<std::string_view, kNumTraits> kNames = {
    "extraversion", "agreeableness", "conscientiousness", "neuroticism",
    "openness"};
constexpr std::array<std::string_view, kNumTraits> kCodes = {"EXT", "AGR", "CON",
                                                             "NEU", "OPN"};
constexpr std::array<std::string_view, kNumTraits> kTitles = {
    "Extraversion", "Agreeableness", "Conscientiousness", "Neuroticism",
    "Openness"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

Pole parse_pole(std::string_view token, std::size_t line_no) {
  const auto t = trim(token);
  if (t == "+" || t == "+1" || t == "1") return Pole::kPositive;
  if (t == "-" || t == "-1") return Pole::kNegative;
  throw ValidationError("line " + std::to_string(line_no) + ": invalid pole token '" +
                        std::string(t) + "'");
}

BigFiveTrait require_trait(std::string_view token, std::size_t line_no) {
  if (auto t = parse_trait(trim(token))) return *t;
  throw ValidationError("line " + std::to_string(line_no) + ": unknown trait name '" +
                        std::string(trim(token)) + "'");
}

TraitAdjective parse_record_line(std::string_view line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("word") || !j.contains("trait") ||
      !j.contains("pole")) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": record needs word, trait and pole");
  }
  TraitAdjective adj;
  adj.word = lower(trim(j.at("word").get<std::string>()));
  adj.trait = require_trait(j.at("trait").get<std::string>(), line_no);
  const auto& pole = j.at("pole");
  if (pole.is_number_integer()) {
    const int p = pole.get<int>();
    if (p != 1 && p != -1) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": invalid pole token '" + std::to_string(p) + "'");
    }
    adj.pole = static_cast<Pole>(p);
  } else {
    adj.pole = parse_pole(pole.get<std::string>(), line_no);
  }
  return adj;
}

TraitAdjective parse_tabular_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (fields.size() != 3) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": expected word<TAB>trait<TAB>pole");
  }
  return {lower(trim(fields[0])), require_trait(fields[1], line_no),
          parse_pole(fields[2], line_no)};
}

}  // namespace

BigFiveTrait trait_at(int index) {
  if (index < 0 || index >= kNumTraits) {
    throw ValidationError("trait index out of range: " + std::to_string(index));
  }
  return static_cast<BigFiveTrait>(index);
}

std::string_view trait_name(BigFiveTrait t) { return kNames[index_of(t)]; }
std::string_view trait_code(BigFiveTrait t) { return kCodes[index_of(t)]; }
std::string_view trait_title(BigFiveTrait t) { return kTitles[index_of(t)]; }

std::optional<BigFiveTrait> parse_trait(std::string_view text) {
  const auto l = lower(text);
  for (int i = 0; i < kNumTraits; ++i) {
    if (l == kNames[i] || l == lower(kCodes[i])) return trait_at(i);
  }
  return std::nullopt;
}

Lexicon::Lexicon(std::vector<TraitAdjective> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw ValidationError("empty lexicon");
  std::set<std::string_view> seen;
  for (const auto& e : entries_) {
    if (e.word.empty()) throw ValidationError("lexicon entry with empty word");
    if (e.pole != Pole::kPositive && e.pole != Pole::kNegative) {
      throw ValidationError("invalid pole for '" + e.word + "'");
    }
    if (!seen.insert(e.word).second) {
      throw ValidationError("duplicate word in lexicon: '" + e.word + "'");
    }
  }
}

std::optional<std::size_t> Lexicon::find(std::string_view word) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].word == word) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Lexicon::words() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.word);
  return out;
}

Lexicon load_lexicon(std::istream& in, LexiconFormat format) {
  std::vector<TraitAdjective> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto f = format;
    if (f == LexiconFormat::kAuto) {
      f = t.front() == '{' ? LexiconFormat::kRecords : LexiconFormat::kTabular;
    }
    entries.push_back(f == LexiconFormat::kRecords ? parse_record_line(t, line_no)
                                                   : parse_tabular_line(t, line_no));
  }
  return Lexicon(std::move(entries));
}

Lexicon load_lexicon_file(const std::string& path, LexiconFormat format) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open lexicon file: " + path);
  return load_lexicon(in, format);
}

std::string serialize_lexicon(const Lexicon& lexicon) {
  std::string out;
  for (const auto& e : lexicon.entries()) {
    out += e.word;
    out += '\t';
    out += trait_code(e.trait);
    out += '\t';
    out += e.pole == Pole::kPositive ? '+' : '-';
    out += '\n';
  }
  return out;
}

const Lexicon& default_lexicon() {
  static const Lexicon lexicon = [] {
    std::istringstream in{std::string(default_lexicon_tsv())};
    return load_lexicon(in, LexiconFormat::kTabular);
  }();
  return lexicon;
}

Corpus::Corpus(std::vector<Story> stories) : stories_(std::move(stories)) {
  for (std::size_t i = 0; i < stories_.size(); ++i) {
    const auto& s = stories_[i];
    if (s.id.empty()) throw ValidationError("story with empty id");
    if (s.text.empty()) throw ValidationError("story '" + s.id + "' has empty text");
    if (s.labels) {
      for (int v : *s.labels) {
        if (v != 0 && v != 1) {
          throw ValidationError("story '" + s.id + "' has a non-binary label");
        }
      }
    }
    if (!index_.emplace(s.id, i).second) {
      throw ValidationError("duplicate story id: '" + s.id + "'");
    }
  }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(stories_.size());
  for (const auto& s : stories_) out.push_back(s.id);
  return out;
}

bool Corpus::fully_labeled() const {
  return std::all_of(stories_.begin(), stories_.end(),
                     [](const Story& s) { return s.labels.has_value(); });
}

Corpus Corpus::subset(const std::vector<std::string>& ids) const {
  std::vector<Story> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto i = find(id);
    if (!i) throw ValidationError("unknown story id: '" + id + "'");
    out.push_back(stories_[*i]);
  }
  return Corpus(std::move(out));
}

Corpus load_corpus(std::istream& in, const LabelSchema& schema) {
  std::vector<Story> stories;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + e.what());
    }
    if (!j.is_object()) throw ValidationError(where + "expected a JSON object");
    if (!j.contains("id") || !j.contains("text")) {
      throw ValidationError(where + "record needs \"id\" and \"text\"");
    }
    Story s;
    s.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    s.text = j.at("text").get<std::string>();
    if (s.text.empty()) throw ValidationError(where + "empty text for '" + s.id + "'");
    if (j.contains(schema.labels_key) && !j.at(schema.labels_key).is_null()) {
      const auto& lj = j.at(schema.labels_key);
      LabelSet labels{};
      int present = 0;
      for (int t = 0; t < kNumTraits; ++t) {
        if (!lj.contains(schema.keys[t])) continue;
        const auto& v = lj.at(schema.keys[t]);
        int value = v.is_boolean() ? static_cast<int>(v.get<bool>()) : v.get<int>();
        if (value != 0 && value != 1) {
          throw ValidationError(where + "label '" + schema.keys[t] + "' must be 0 or 1");
        }
        if (schema.inverted[t]) value = 1 - value;
        labels[t] = value;
        ++present;
      }
      if (present != kNumTraits) {
        throw ValidationError(where + "partial label map for '" + s.id + "' (" +
                              std::to_string(present) + " of 5 traits)");
      }
      s.labels = labels;
    }
    stories.push_back(std::move(s));
  }
  return Corpus(std::move(stories));
}

Corpus load_corpus_file(const std::string& path, const LabelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file: " + path);
  return load_corpus(in, schema);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.stories()) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["text"] = s.text;
    if (s.labels) {
      nlohmann::ordered_json lj;
      for (int t = 0; t < kNumTraits; ++t) {
        lj[std::string(kNames[t])] = (*s.labels)[t];
      }
      j["labels"] = lj;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

Eigen::MatrixXi label_matrix(const Corpus& corpus) {
  Eigen::MatrixXi out(static_cast<Eigen::Index>(corpus.size()), kNumTraits);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i];
    if (!s.labels) throw ValidationError("story '" + s.id + "' has no \"labels\"");
    for (int t = 0; t < kNumTraits; ++t) out(static_cast<Eigen::Index>(i), t) = (*s.labels)[t];
  }
  return out;
}

std::string corpus_hash(const Corpus& corpus) {
  std::vector<std::string> fields;
  fields.reserve(corpus.size() * 2);
  for (const auto& s : corpus.stories()) {
    fields.push_back(s.id);
    fields.push_back(s.text);
  }
  return sha256_fields(fields);
}

}  // namespace lexifactor
