#pragma once

#include <string>

#include "krrstream/kbr.hpp"
#include "krrstream/krr_empirical.hpp"
#include "krrstream/krr_intrinsic.hpp"

namespace krr {

/// Versioned structured-text (JSON) snapshots of fitted models. Doubles are
/// emitted in shortest round-trip form, so load(serialize(m)) reproduces
/// every stored field bit for bit.
std::string serialize(const IntrinsicModel& model);
std::string serialize(const EmpiricalModel& model);
std::string serialize(const BayesPosterior& posterior);

enum class ModelKind { Intrinsic, Empirical, Bayes };

/// Reads only the header of a snapshot; ParseError on malformed input or an
/// unsupported version.
ModelKind peek_model_kind(const std::string& text);

IntrinsicModel load_intrinsic(const std::string& text);
EmpiricalModel load_empirical(const std::string& text);
BayesPosterior load_bayes(const std::string& text);

}  // namespace krr
