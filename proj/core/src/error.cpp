#include "penidm/error.hpp"

namespace penidm {

namespace {
std::string with_subject(const std::string& what, std::optional<long> subject) {
  if (!subject) return what;
  return what + " (subject " + std::to_string(*subject) + ")";
}
}  // namespace

NumericalError::NumericalError(const std::string& what, std::optional<long> subject)
    : Error(with_subject(what, subject)), subject_(subject) {}

}  // namespace penidm
