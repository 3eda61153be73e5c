#pragma once

#include "impdde/config.hpp"
#include "impdde/errors.hpp"
#include "impdde/evolution.hpp"
#include "impdde/expr.hpp"
#include "impdde/grid.hpp"
#include "impdde/history.hpp"
#include "impdde/hypotheses.hpp"
#include "impdde/io.hpp"
#include "impdde/linalg.hpp"
#include "impdde/log.hpp"
#include "impdde/operators.hpp"
#include "impdde/prolongation.hpp"
#include "impdde/sampling.hpp"
#include "impdde/scenarios.hpp"
#include "impdde/solver.hpp"
#include "impdde/system.hpp"
#include "impdde/trajectory.hpp"
