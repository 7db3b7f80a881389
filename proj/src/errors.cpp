#include "gbag/errors.hpp"

namespace gbag {

void throw_config(const std::string& what) { throw ConfigError(what); }

void throw_numerical(const std::string& what) { throw NumericalError(what); }

}  // namespace gbag
