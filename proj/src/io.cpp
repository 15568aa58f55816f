#include "mltm/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mltm {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_header(std::ostream& out, const ArtifactHeader& header) {
  out << "# " << kToolVersion << '\n';
  if (!header.command.empty()) out << "# cmd " << header.command << '\n';
  out << "# seed " << header.seed << '\n';
  auto sorted = header.config;
  std::sort(sorted.begin(), sorted.end());
  out << "# config";
  for (const auto& [k, v] : sorted) out << ' ' << k << '=' << v;
  out << '\n';
}

namespace {

constexpr const char* kMagic = "MLTM 1";

void write_matrix(std::ostream& out, const std::string& section, const Eigen::MatrixXd& m) {
  out << section << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << (c == 0 ? '\t' : ' ') << c << ':' << format_double(m(r, c));
    }
    out << '\n';
  }
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // next non-comment line; false at EOF
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line[0] == '#') continue;
      return true;
    }
    return false;
  }

  std::string require(const std::string& what) {
    std::string line;
    if (!next(line)) throw DataError("model file truncated: expected " + what);
    return line;
  }

  std::int64_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::int64_t line_no_ = 0;
};

std::pair<std::string, std::string> key_value(const std::string& line) {
  auto pos = line.find_first_of(" \t");
  if (pos == std::string::npos) return {line, ""};
  return {line.substr(0, pos), line.substr(pos + 1)};
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  try {
    return std::stoll(s);
  } catch (const std::exception&) {
    throw DataError(what + ": expected an integer, got '" + s + "'");
  }
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw DataError(what + ": expected a number, got '" + s + "'");
  }
}

Eigen::MatrixXd read_matrix(LineReader& reader, Eigen::Index rows, Eigen::Index cols,
                            const std::string& section) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    std::istringstream line(reader.require(section + " row"));
    Eigen::Index row_id = -1;
    line >> row_id;
    if (row_id != r) throw DataError(section + ": expected row " + std::to_string(r));
    std::string cell;
    Eigen::Index seen = 0;
    while (line >> cell) {
      auto colon = cell.find(':');
      if (colon == std::string::npos) throw DataError(section + ": malformed cell " + cell);
      const auto c =
          static_cast<Eigen::Index>(parse_int(cell.substr(0, colon), section + " column"));
      if (c < 0 || c >= cols) throw DataError(section + ": column out of range");
      m(r, c) = parse_real(cell.substr(colon + 1), section + " value");
      ++seen;
    }
    if (seen == 0) throw DataError(section + ": empty row " + std::to_string(r));
  }
  return m;
}

Dictionary read_dict_section(LineReader& reader, std::int32_t count, const std::string& what) {
  Dictionary dict;
  for (std::int32_t i = 0; i < count; ++i) {
    auto line = reader.require(what + " entry");
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(what + ": expected id<TAB>string");
    if (parse_int(line.substr(0, tab), what + " id") != i)
      throw DataError(what + ": ids must be dense");
    dict.add(line.substr(tab + 1));
  }
  return dict;
}

}  // namespace

void save_model(const TrainedModel& model, std::ostream& out, const ArtifactHeader& header) {
  out << kMagic << '\n';
  write_header(out, header);
  out << "variant " << variant_name(model.variant) << '\n';
  out << "C " << model.C() << '\n';
  out << "W " << model.W() << '\n';
  out << "T " << model.T() << '\n';
  out << "K " << model.K() << '\n';
  const auto& h = model.hyper;
  out << "eta " << format_double(h.eta) << '\n';
  out << "alpha_sum " << format_double(h.alpha_sum) << '\n';
  out << "beta_w " << format_double(h.beta_w) << '\n';
  out << "beta_c " << format_double(h.beta_c) << '\n';
  out << "gamma_sum " << format_double(h.gamma_sum) << '\n';
  out << "labels " << model.label_dict.size() << '\n';
  write_dictionary(model.label_dict, out);
  out << "vocab " << model.vocab.size() << '\n';
  write_dictionary(model.vocab, out);
  write_matrix(out, "phi", model.phi);
  for (std::int32_t k = 0; k < model.K(); ++k) {
    write_matrix(out, "phi_prime " + std::to_string(k), model.phi_prime_sets[k]);
  }
}

TrainedModel load_model(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic)) throw DataError("model file is empty");
  if (!magic.empty() && magic.back() == '\r') magic.pop_back();
  if (magic != kMagic) throw DataError("model version mismatch: expected '" +
                                       std::string(kMagic) + "', got '" + magic + "'");
  LineReader reader(in);

  TrainedModel model;
  std::int32_t C = -1, W = -1, T = -1, K = -1;
  auto expect = [&](const char* key) {
    auto [k, v] = key_value(reader.require(key));
    if (k != key) throw DataError(std::string("model file: expected '") + key + "', got '" + k + "'");
    return v;
  };
  model.variant = variant_from_string(expect("variant"));
  C = static_cast<std::int32_t>(parse_int(expect("C"), "C"));
  W = static_cast<std::int32_t>(parse_int(expect("W"), "W"));
  T = static_cast<std::int32_t>(parse_int(expect("T"), "T"));
  K = static_cast<std::int32_t>(parse_int(expect("K"), "K"));
  model.hyper.eta = parse_real(expect("eta"), "eta");
  model.hyper.alpha_sum = parse_real(expect("alpha_sum"), "alpha_sum");
  model.hyper.beta_w = parse_real(expect("beta_w"), "beta_w");
  model.hyper.beta_c = parse_real(expect("beta_c"), "beta_c");
  model.hyper.gamma_sum = parse_real(expect("gamma_sum"), "gamma_sum");
  model.hyper.T = std::max(1, T);
  if (C < 1 || W < 1 || K < 0) throw DataError("model file: bad dimensions");

  const auto n_labels = static_cast<std::int32_t>(parse_int(expect("labels"), "labels"));
  if (n_labels != C) throw DataError("model file: label dictionary size mismatch");
  model.label_dict = read_dict_section(reader, n_labels, "labels");
  const auto n_vocab = static_cast<std::int32_t>(parse_int(expect("vocab"), "vocab"));
  if (n_vocab != W) throw DataError("model file: vocabulary size mismatch");
  model.vocab = read_dict_section(reader, n_vocab, "vocab");

  if (reader.require("phi section") != "phi") throw DataError("model file: expected phi section");
  model.phi = read_matrix(reader, C, W, "phi");
  for (std::int32_t k = 0; k < K; ++k) {
    auto line = reader.require("phi_prime section");
    if (line != "phi_prime " + std::to_string(k))
      throw DataError("model file: expected phi_prime " + std::to_string(k));
    model.phi_prime_sets.push_back(read_matrix(reader, T, C, "phi_prime"));
  }
  model.validate();
  return model;
}

void save_model_file(const TrainedModel& model, const std::string& path,
                     const ArtifactHeader& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  save_model(model, out, header);
  if (!out.good()) throw DataError("write failed: " + path);
}

TrainedModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  return load_model(in);
}

void write_scores(std::ostream& out, const ArtifactHeader& header,
                  const std::vector<std::string>& doc_ids,
                  const std::vector<DocumentPosterior>& posteriors,
                  const Dictionary& label_dict, int top_k) {
  write_header(out, header);
  for (std::size_t d = 0; d < doc_ids.size(); ++d) {
    const auto& scores = posteriors[d].scores;
    if (scores.size() == 0) continue;  // skipped document
    std::vector<std::int32_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    const std::size_t keep =
        top_k > 0 ? std::min<std::size_t>(top_k, order.size()) : order.size();
    out << doc_ids[d] << '\t';
    for (std::size_t j = 0; j < keep; ++j) {
      if (j) out << ' ';
      out << label_dict.name(order[j]) << ':' << format_double(scores[order[j]]);
    }
    out << '\n';
  }
}

ScoresFile read_scores(std::istream& in, const Dictionary& label_dict) {
  ScoresFile file;
  std::vector<Eigen::VectorXd> rows;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("scores line " + std::to_string(line_no) + ": expected doc_id<TAB>...");
    file.doc_ids.push_back(line.substr(0, tab));
    Eigen::VectorXd row = Eigen::VectorXd::Constant(
        label_dict.size(), -std::numeric_limits<double>::infinity());
    std::istringstream cells(line.substr(tab + 1));
    std::string cell;
    while (cells >> cell) {
      auto colon = cell.rfind(':');
      if (colon == std::string::npos || colon == 0)
        throw DataError("scores line " + std::to_string(line_no) + ": malformed cell " + cell);
      auto id = label_dict.find(cell.substr(0, colon));
      if (!id)
        throw DataError("scores line " + std::to_string(line_no) + ": unknown label '" +
                        cell.substr(0, colon) + "'");
      row[*id] = parse_real(cell.substr(colon + 1), "scores line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  file.scores.resize(static_cast<Eigen::Index>(rows.size()), label_dict.size());
  for (std::size_t d = 0; d < rows.size(); ++d) file.scores.row(d) = rows[d].transpose();
  return file;
}

}  // namespace mltm
