#pragma once

#include "stampacchia/bounds.hpp"
#include "stampacchia/constants.hpp"
#include "stampacchia/psweep.hpp"
#include "stampacchia/solver.hpp"
#include "stampacchia/truncation.hpp"

#include <json.hpp>

#include <string>

namespace stampacchia {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "stampacchia-lab";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kReportFormatVersion = 1;
inline constexpr const char* kMeshFormat = "mesh2d v1";

Json to_json(const ConstantsReport& report, bool with_maximizer = true);
Json to_json(const EmbeddingCertificate& cert);
Json to_json(const SolveReport& report);
Json to_json(const TruncationScan& scan);  ///< summary only; rows go to CSV
Json to_json(const BoundReport& report);   ///< summary only; decay rows go to CSV
Json to_json(const SweepResult& result);   ///< summary only; rows go to CSV

/// Canonical serialization: two-space indent plus trailing newline.
std::string serialize(const Json& j);

/// Writes via a temporary file in the same directory and renames it.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace stampacchia
