#include "lexifactor/matrix.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lexifactor/error.hpp"
#include "lexifactor/hash.hpp"

namespace lexifactor {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

double parse_cell(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ValidationError("matrix line " + std::to_string(line_no) + ": bad cell '" + text + "'");
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ObservationMatrix::ObservationMatrix(Eigen::MatrixXd values, std::vector<std::string> row_ids,
                                     std::vector<std::string> column_words,
                                     Provenance provenance,
                                     std::optional<Eigen::VectorXd> column_means)
    : values_(std::move(values)),
      row_ids_(std::move(row_ids)),
      column_words_(std::move(column_words)),
      provenance_(std::move(provenance)),
      column_means_(std::move(column_means)) {
  if (static_cast<std::size_t>(values_.rows()) != row_ids_.size() ||
      static_cast<std::size_t>(values_.cols()) != column_words_.size()) {
    throw ValidationError("observation matrix: dimensions do not match id lists");
  }
  if (!values_.allFinite()) throw ValidationError("observation matrix: non-finite cell");
  if (column_means_ && column_means_->size() != values_.cols()) {
    throw ValidationError("observation matrix: column means length mismatch");
  }
}

ObservationMatrix ObservationMatrix::select_rows(const std::vector<std::string>& ids) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), values_.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    std::size_t src = row_ids_.size();
    for (std::size_t i = 0; i < row_ids_.size(); ++i) {
      if (row_ids_[i] == ids[r]) {
        src = i;
        break;
      }
    }
    if (src == row_ids_.size()) throw ValidationError("matrix has no row '" + ids[r] + "'");
    out.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(src));
  }
  return ObservationMatrix(std::move(out), ids, column_words_, provenance_, column_means_);
}

std::string format_matrix_table(const ObservationMatrix& m) {
  std::string out = "id";
  for (const auto& w : m.column_words()) {
    out += '\t';
    out += w;
  }
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += m.row_ids()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out += '\t';
      out += format_double(m.values()(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string matrix_hash(const ObservationMatrix& m) { return sha256_hex(format_matrix_table(m)); }

nlohmann::json matrix_sidecar(const ObservationMatrix& m) {
  const auto& p = m.provenance();
  nlohmann::ordered_json j;
  j["model"] = p.model;
  j["temperature"] = p.temperature;
  j["prompt_hash"] = p.prompt_hash;
  j["leading_space"] = p.leading_space;
  j["corpus_hash"] = p.corpus_hash;
  j["lexicon_hash"] = p.lexicon_hash;
  j["centering_axis"] = p.centering_axis;
  j["centered"] = m.centered();
  if (m.centered()) {
    const auto& mu = *m.column_means();
    j["column_means"] = std::vector<double>(mu.data(), mu.data() + mu.size());
  } else {
    j["column_means"] = nullptr;
  }
  j["table_sha256"] = matrix_hash(m);
  return nlohmann::json(j);
}

std::string sidecar_path(const std::string& matrix_path) { return matrix_path + ".meta.json"; }

void write_matrix(const ObservationMatrix& m, const std::string& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path);
    out << format_matrix_table(m);
  }
  std::ofstream meta(sidecar_path(path), std::ios::binary);
  if (!meta) throw RuntimeError("cannot write " + sidecar_path(path));
  meta << matrix_sidecar(m).dump(2) << '\n';
}

ObservationMatrix parse_matrix(const std::string& table_text,
                               const std::optional<nlohmann::json>& sidecar) {
  std::istringstream in(table_text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("matrix: empty file");
  auto header = split_tabs(line);
  if (header.size() < 2 || header[0] != "id") {
    throw ValidationError("matrix: header must start with 'id' and name at least one column");
  }
  std::vector<std::string> words(header.begin() + 1, header.end());
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != header.size()) {
      throw ValidationError("matrix line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    ids.push_back(fields[0]);
    std::vector<double> row;
    row.reserve(words.size());
    for (std::size_t k = 1; k < fields.size(); ++k) row.push_back(parse_cell(fields[k], line_no));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(words.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < words.size(); ++j) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  Provenance prov;
  std::optional<Eigen::VectorXd> means;
  if (sidecar) {
    const auto& j = *sidecar;
    try {
      prov.model = j.value("model", "");
      prov.temperature = j.value("temperature", 1.0);
      prov.prompt_hash = j.value("prompt_hash", "");
      prov.leading_space = j.value("leading_space", false);
      prov.corpus_hash = j.value("corpus_hash", "");
      prov.lexicon_hash = j.value("lexicon_hash", "");
      prov.centering_axis = j.value("centering_axis", "column");
      if (j.value("centered", false)) {
        const auto mu = j.at("column_means").get<std::vector<double>>();
        means = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("matrix sidecar: ") + e.what());
    }
    if (j.contains("table_sha256") && j["table_sha256"] != sha256_hex(table_text)) {
      throw ValidationError("matrix sidecar does not belong to this table (hash mismatch)");
    }
  }
  return ObservationMatrix(std::move(values), std::move(ids), std::move(words), std::move(prov),
                           std::move(means));
}

ObservationMatrix read_matrix(const std::string& path) {
  const auto text = read_file(path);
  std::optional<nlohmann::json> sidecar;
  if (std::filesystem::exists(sidecar_path(path))) {
    try {
      sidecar = nlohmann::json::parse(read_file(sidecar_path(path)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("malformed matrix sidecar: " + std::string(e.what()));
    }
  }
  return parse_matrix(text, sidecar);
}

}  // namespace lexifactor
