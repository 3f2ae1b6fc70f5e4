#pragma once

// Everything except the JSON report layer (report.hpp, commands.hpp), which
// needs nlohmann/json.

#include "lexifair/audit.hpp"
#include "lexifair/classification.hpp"
#include "lexifair/core.hpp"
#include "lexifair/game.hpp"
#include "lexifair/io.hpp"
#include "lexifair/online.hpp"
#include "lexifair/oracle.hpp"
#include "lexifair/parallel.hpp"
#include "lexifair/regression.hpp"
#include "lexifair/simplex.hpp"
#include "lexifair/synth.hpp"
