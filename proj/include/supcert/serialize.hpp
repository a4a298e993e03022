#pragma once

#include <string>

#include "supcert/stability.hpp"

namespace supcert {

// Analysis files carry the full problem instance next to the analysis so the
// prediction/verification commands are self-contained.
struct AnalysisRecord {
  ProblemInstance inst;
  StabilityAnalysis analysis;
};

std::string analysis_to_json(const ProblemInstance& inst, const StabilityAnalysis& analysis);
AnalysisRecord analysis_from_json(const std::string& text);

void write_analysis_file(const std::string& path, const ProblemInstance& inst,
                         const StabilityAnalysis& analysis);
AnalysisRecord read_analysis_file(const std::string& path);

// Human/machine text record of a certificate, one field per line.
std::string certificate_to_text(const Certificate& cert);

}  // namespace supcert
