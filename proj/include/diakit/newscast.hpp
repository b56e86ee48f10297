#pragma once

#include <map>
#include <string>

#include "diakit/runtime.hpp"

namespace diakit {

// Reference implementation of the Newscast application's six contexts and two
// controllers, keyed by component name. Each call returns fresh state.
std::map<std::string, ComponentLogic> newscast_logic();

}  // namespace diakit
