#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mltm/model.hpp"

namespace mltm {

// Comment block stamped at the top of every emitted artifact (after the magic
// line in model files): tool version, command, seed and the effective
// configuration. Deterministic by construction.
struct ArtifactHeader {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;  // echoed sorted by key
};

void write_header(std::ostream& out, const ArtifactHeader& header);

// Versioned text model format. Probabilities are printed with 17 significant
// digits so save -> load is bit-exact.
void save_model(const TrainedModel& model, std::ostream& out, const ArtifactHeader& header);

// Validates the magic line, dimensions and row-stochasticity; throws
// DataError / NumericError.
TrainedModel load_model(std::istream& in);

void save_model_file(const TrainedModel& model, const std::string& path,
                     const ArtifactHeader& header);
TrainedModel load_model_file(const std::string& path);

// Scores: one line per document, `doc_id<TAB>label:score ...` sorted by
// descending score (ties by label id), top_k <= 0 keeps all labels.
void write_scores(std::ostream& out, const ArtifactHeader& header,
                  const std::vector<std::string>& doc_ids,
                  const std::vector<DocumentPosterior>& posteriors,
                  const Dictionary& label_dict, int top_k);

struct ScoresFile {
  std::vector<std::string> doc_ids;
  Eigen::MatrixXd scores;  // docs x C; labels absent from a line score -inf
};

ScoresFile read_scores(std::istream& in, const Dictionary& label_dict);

std::string format_double(double v);  // shortest 17-significant-digit form

}  // namespace mltm
