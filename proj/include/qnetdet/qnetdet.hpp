#pragma once

#include "qnetdet/errors.hpp"
#include "qnetdet/matrix.hpp"
#include "qnetdet/network.hpp"
#include "qnetdet/network_io.hpp"
#include "qnetdet/random.hpp"
#include "qnetdet/rules.hpp"
#include "qnetdet/schmidt.hpp"
#include "qnetdet/verifier.hpp"

namespace qnetdet {

inline constexpr const char* kVersion = "0.1.0";

} // namespace qnetdet
