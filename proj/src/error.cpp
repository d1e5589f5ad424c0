#include "rsoinv/error.hpp"

namespace rsoinv {

void throw_input(const std::string& what) { throw InputError(what); }

void throw_numerical(const std::string& what) { throw NumericalError(what); }

}  // namespace rsoinv
