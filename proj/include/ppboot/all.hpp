#pragma once

#include "baselines.hpp"
#include "config.hpp"
#include "crossfit.hpp"
#include "csv.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "estimand.hpp"
#include "estimators.hpp"
#include "exact_sum.hpp"
#include "experiments.hpp"
#include "normal.hpp"
#include "parallel.hpp"
#include "ppboot.hpp"
#include "report.hpp"
#include "resampling.hpp"
#include "rng.hpp"
