#pragma once

// Data-driven predictive control in LQ coordinates: Hankel data stacks, the
// triangular predictor parametrization, uncertainty-aware regularization with
// per-step tuning, a model-based oracle controller, and the Monte-Carlo
// benchmark harness around them.

#include "gddpc/types.hpp"
#include "gddpc/rng.hpp"
#include "gddpc/lti.hpp"
#include "gddpc/hankel.hpp"
#include "gddpc/lq.hpp"
#include "gddpc/qp.hpp"
#include "gddpc/predictor.hpp"
#include "gddpc/oracle_mpc.hpp"
#include "gddpc/controllers.hpp"
#include "gddpc/tuning.hpp"
#include "gddpc/closed_loop.hpp"
#include "gddpc/diagnostics.hpp"
#include "gddpc/parallel.hpp"
#include "gddpc/io.hpp"
#include "gddpc/config.hpp"
#include "gddpc/svg.hpp"
#include "gddpc/bench.hpp"
