#pragma once

#include "loopgraft/dynamics.hpp"
#include "loopgraft/jobs.hpp"
#include "loopgraft/loop_geometry.hpp"
#include "loopgraft/session.hpp"

#include <json.hpp>

namespace loopgraft::io {

using nlohmann::json;

json key_json(const ResidueKey& k);
json geometry_json(const LoopGeometry& g);
json delta_json(const GeometryDelta& d);
/// Loop with residue ranges resolved to sequence numbers.
json loop_json(const Loop& loop, const SSAssignment& assignment);
json segments_json(const SSAssignment& assignment);
json residues_json(const Chain& chain, const SSAssignment& assignment);
json protein_json(const ProteinState& p, bool with_residues);
json suggestion_json(const PairSuggestion& s);
json profile_json(const FlexibilityProfile& p);
json elements_json(const std::vector<ElementFlexibility>& e);
json method_correlation_json(const MethodCorrelation& m);
json matrix_json(const Eigen::MatrixXd& m);
json motion_json(const MotionCorrelationSet& set, const std::vector<std::size_t>& order,
                 bool with_residue_matrix);
json spec_json(const GraftSpec& spec);
/// Throws BadRequest on a malformed spec.
GraftSpec spec_from_json(const json& j);
json job_json(const JobStatus& j);
json session_json(const Session& s);

}  // namespace loopgraft::io
