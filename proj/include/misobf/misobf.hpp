#pragma once

// Umbrella header.

#include "misobf/linalg.hpp"
#include "misobf/channel_model.hpp"
#include "misobf/network_io.hpp"
#include "misobf/completion.hpp"
#include "misobf/reduction.hpp"
#include "misobf/oracle.hpp"
#include "misobf/solver.hpp"
#include "misobf/region.hpp"
#include "misobf/verify.hpp"
